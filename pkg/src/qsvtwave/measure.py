"""Read-out pipelines on statevectors: spectra, amplitude estimation, Gaussians, power.

Conventions shared by the pipelines:

* The QFT maps |j> to sum_m e^{+2 pi i jm/n} |m> / sqrt(n), so QFT index m
  belongs to the wave number k = -m dk.  Results are reported on the grid
  k_g = -k_max + g dk with k_max = pi/dx and dk = 2 k_max / n.
* Amplitude estimation runs phase estimation on AA = U_prep REF_0 U_prep^H
  REF_G.  Its eigenphases are pi +- 2 theta with sin^2 theta = p, hence the
  estimate p~ = 1 - sin^2(pi i_y / N_AA).
* Gaussians come from an even QSVT over the sine encoding; the real part of
  the polynomial is selected with a Hadamard-sandwiched ancilla ``h``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import compare_const, qft, subtract_const, subtract_register
from .blockencode import sine_encoding, sine_grid, sine_points
from .circuit import (Circuit, Gate, QuantumState, RegisterLayout, project_and_renormalize)
from .errors import WindowOutOfRange, ZeroProbability
from .qsp import PhaseVector, gaussian_phases
from .qsvt import apply_real_qsvt, make_oracle, prepare_b, real_qsvt_circuit, solver_layout


# ---------------------------------------------------------------- spectrum


def k_grid(n_points, dx):
    k_max = math.pi / dx
    dk = 2.0 * k_max / n_points
    return -k_max + dk * np.arange(n_points)


@dataclass
class SpectrumResult:
    k: np.ndarray
    probabilities: np.ndarray
    half: str = "full"
    dx: float = 1.0
    p_select: float = 1.0

    def top(self, n=2, nonnegative=False):
        """The ``n`` most probable (k, p) pairs, optionally among k >= 0."""
        idx = np.arange(len(self.k))
        if nonnegative:
            idx = idx[self.k >= 0]
        order = idx[np.argsort(-self.probabilities[idx], kind="stable")]
        return [(float(self.k[i]), float(self.probabilities[i])) for i in order[:n]]

    def nearest_bin(self, k_value):
        return float(self.k[int(np.argmin(np.abs(self.k - k_value)))])

    def write_csv(self, path, header=()):
        lines = [f"# {h}" for h in header] + ["k,probability"]
        lines += [f"{k!r},{p!r}" for k, p in zip(self.k.tolist(), self.probabilities.tolist())]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def field_state(psi, n_x, extra=()):
    """Load a stacked (E, B) vector into registers r_j, r_d (normalized)."""
    lay = RegisterLayout([("r_j", n_x), ("r_d", 1)] + list(extra))
    return QuantumState.from_register_amplitudes(lay, ["r_j", "r_d"], psi)


def _branch_amplitudes(state, qubits, conditions):
    base = 0
    for q, v in conditions:
        base |= v << q
    k = np.arange(2 ** len(qubits))
    idx = np.full(len(k), base, dtype=np.int64)
    for bit, q in enumerate(qubits):
        idx |= ((k >> bit) & 1) << q
    return state.amps[idx]


def spectrum(state, half="full", dx=None):
    """QFT wave-number spectrum of the E field carried by ``state``.

    The state is projected onto |0>_{r_d}, onto the chosen spatial half
    (through the top qubit of r_j) and onto zero in every other register;
    the QFT then acts on the remaining r_j qubits.
    """
    if half not in ("full", "left", "right"):
        raise ValueError("half must be 'full', 'left' or 'right'")
    lay = state.layout
    rj = lay.qubits("r_j")
    n_x = len(rj)
    if dx is None:
        dx = 1.0 / 2**n_x
    fixed = [(q, 0) for q in range(lay.n_qubits) if q not in rj]
    work = list(rj)
    if half != "full":
        fixed.append((rj[-1], 1 if half == "right" else 0))
        work = rj[:-1]
    proj, p = project_and_renormalize(state, fixed)
    circ = Circuit(lay.n_qubits)
    qft(circ, work)
    proj.run(circ)
    amps = _branch_amplitudes(proj, work, fixed)
    n = 2 ** len(work)
    probs = np.zeros(n)
    m = np.arange(n)
    probs[(n // 2 - m) % n] = np.abs(amps) ** 2
    return SpectrumResult(k_grid(n, dx), probs, half, dx, p)


def classical_fft_reference(field_values, dx, half="full"):
    """|DFT|^2 of a field on the same k-grid as :func:`spectrum`."""
    f = np.asarray(field_values, dtype=complex)
    n = len(f)
    if half == "left":
        f = f[: n // 2]
    elif half == "right":
        f = f[n // 2:]
    X = np.fft.fft(f)
    tot = float(np.sum(np.abs(X) ** 2))
    if tot == 0.0:
        raise ZeroProbability("field vanishes on the selected half")
    m = len(f)
    probs = np.zeros(m)
    probs[(m // 2 + np.arange(m)) % m] = np.abs(X) ** 2 / tot
    return SpectrumResult(k_grid(m, dx), probs, half, dx)


# ---------------------------------------------------- amplitude estimation


def ae_delta(p, n_y):
    """Error bound 2 pi sqrt(p(1-p))/N + pi^2/N^2 with N = 2^n_y."""
    N = 2.0**n_y
    p = min(max(float(p), 0.0), 1.0)
    return 2.0 * math.pi * math.sqrt(p * (1.0 - p)) / N + math.pi**2 / N**2


def p_tilde(i_y, n_y):
    return 1.0 - math.sin(math.pi * i_y / 2**n_y) ** 2


@dataclass
class AEResult:
    n_y: int
    i_y: int
    p_tilde: float
    delta: float
    distribution: np.ndarray
    p_true: float = float("nan")
    confidence: float = float("nan")
    counts: np.ndarray = None

    @property
    def n_aa(self):
        return 2**self.n_y

    def as_dict(self):
        return {"n_y": self.n_y, "i_y": self.i_y, "p_tilde": self.p_tilde, "delta": self.delta,
                "p_true": self.p_true, "confidence": self.confidence}

    def write_csv(self, path, header=()):
        lines = [f"# {h}" for h in header] + ["i_y,p_tilde,probability"]
        for i, pr in enumerate(self.distribution.tolist()):
            lines.append(f"{i},{p_tilde(i, self.n_y)!r},{pr!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def grover_circuit(layout, prep, flag):
    """AA = U_prep REF_0 U_prep^H REF_G on the qubits of ``layout``."""
    m = layout.qubit(flag)
    others = tuple((q, 0) for q in range(layout.n_qubits) if q != m)
    c = Circuit(layout.n_qubits)
    c.add("Z", m)                        # REF_G
    c.extend(prep.adjoint())
    c.add("X", m)                        # REF_0 = X Z X on m, controlled on zeros
    c.add("Z", m, others)
    c.add("X", m)
    c.extend(prep)
    return c


def amplitude_estimation(prep, layout, flag, n_y, p_true=None, shots=0, seed=None):
    """Phase estimation over AA with ``n_y`` counting qubits.

    ``prep`` is a circuit on ``layout`` marking the good state by |1> on
    register ``flag``.  The outcome distribution is exact; with ``shots``
    a seeded multinomial sample picks the reported outcome instead of the
    argmax.
    """
    big = RegisterLayout(layout.describe() + [("y", n_y)])
    aa = grover_circuit(layout, prep, flag)
    aa_big = Circuit(big.n_qubits, aa.gates)
    st = QuantumState(big)
    st.run(Circuit(big.n_qubits, prep.gates))
    p_exact = st.probability([(layout.qubit(flag), 1)])
    ys = big.qubits("y")
    for q in ys:
        st.apply(Gate("H", (q,)))
    for b, q in enumerate(ys):
        ctl = aa_big.controlled(((q, 1),))
        for _ in range(2**b):
            st.run(ctl)
    inv = Circuit(big.n_qubits)
    qft(inv, ys, inverse=True)
    st.run(inv)
    dist = st.register_probabilities("y")
    counts = None
    if shots:
        rng = np.random.default_rng(seed)
        counts = rng.multinomial(int(shots), dist / dist.sum())
        i_y = int(np.argmax(counts))
    else:
        i_y = int(np.argmax(dist))
    pt = p_tilde(i_y, n_y)
    ref = p_exact if p_true is None else float(p_true)
    bound = ae_delta(ref, n_y)
    ok = [abs(ref - p_tilde(i, n_y)) <= bound for i in range(2**n_y)]
    conf = float(np.sum(dist[ok]))
    return AEResult(n_y, i_y, pt, ae_delta(pt, n_y), dist, ref, conf, counts)


def simplified_prep(p):
    """One-qubit preparation cos(theta)|0> + sin(theta)|1> with sin^2 theta = p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    lay = RegisterLayout([("m", 1)])
    c = Circuit(1)
    c.add("RY", 0, (), (2.0 * math.asin(math.sqrt(p)),))
    return c, lay


def ae_simplified(p, n_y, **kw):
    prep, lay = simplified_prep(p)
    return amplitude_estimation(prep, lay, "m", n_y, **kw)


def branch_prep(sines_squared):
    """Multi-qubit preparation: uniform register r, then per-branch Ry on m.

    Branch j flags |1>_m with probability ``sines_squared[j]``; the total
    good-state probability is their mean.
    """
    w = np.asarray(sines_squared, dtype=float)
    k = int(round(math.log2(len(w))))
    if 2**k != len(w):
        raise ValueError("number of branches must be a power of two")
    lay = RegisterLayout([("r", k), ("m", 1)])
    c = Circuit(lay.n_qubits)
    r = lay.qubits("r")
    m = lay.qubit("m")
    for q in r:
        c.add("H", q)
    for j, s2 in enumerate(w):
        ctl = tuple((q, (j >> i) & 1) for i, q in enumerate(r))
        c.add("RY", m, ctl, (2.0 * math.asin(math.sqrt(s2)),))
    return c, lay


def state_prep_gate(vector, qubits):
    """Dense gate mapping |0> to ``vector`` (Householder reflection times a phase)."""
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    ph = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    w = v / ph
    u = -w.copy()
    u[0] += 1.0
    nu = np.linalg.norm(u)
    if nu < 1e-14:
        U = np.eye(len(v), dtype=complex)
    else:
        U = np.eye(len(v), dtype=complex) - 2.0 * np.outer(u, u.conj()) / nu**2
    return Gate("U", tuple(qubits), (), (), ph * U)


def energy_estimate(ae, beta_sc, kappa, n_area):
    """(E~, delta_E) = (beta_sc kappa)^2 / N_area * (p~, delta)."""
    if n_area < 1:
        raise ValueError("N_x,area must be at least one")
    scale = (beta_sc * kappa) ** 2 / n_area
    return scale * ae.p_tilde, scale * ae.delta


@dataclass
class EnergyResult:
    ae: AEResult
    energy: float
    delta: float
    classical: float
    p_good: float
    n_area: int

    def as_dict(self):
        out = {"energy": self.energy, "delta": self.delta, "classical": self.classical,
               "p_good": self.p_good, "n_area": self.n_area}
        out.update({f"ae_{k}": v for k, v in self.ae.as_dict().items()})
        return out


def field_energy(record, half="right", n_y=6, simplified=True, shots=0, seed=None):
    """Estimate the mean E-field energy density on one half of the domain.

    ``record`` is a :class:`~qsvtwave.qsvt.SolutionRecord`.  The good state
    is the zero-ancilla E component on the chosen half; the full path loads
    the QSVT output amplitude together with a garbage qubit carrying the
    complement and flags the good state with a multi-controlled X.
    """
    n = len(record.psi_x) // 2
    n_x = int(round(math.log2(n)))
    y = record.psi_x * math.sqrt(record.p0)
    sel = np.zeros(2 * n, dtype=bool)
    if half == "right":
        sel[n // 2: n] = True
    elif half == "left":
        sel[: n // 2] = True
    else:
        sel[:n] = True
    p_good = float(np.sum(np.abs(y[sel]) ** 2))
    n_area = int(sel.sum())
    if simplified:
        ae = ae_simplified(p_good, n_y, shots=shots, seed=seed)
    else:
        lay = RegisterLayout([("r_j", n_x), ("r_d", 1), ("g", 1), ("m", 1)])
        vec = np.zeros(2 ** (n_x + 2), dtype=complex)
        vec[: 2 * n] = y
        rest = max(0.0, 1.0 - float(np.sum(np.abs(y) ** 2)))
        vec[2 * n] = math.sqrt(rest)
        prep = Circuit(lay.n_qubits)
        prep.append(state_prep_gate(vec, lay.qubits("r_j", "r_d", "g")))
        m = lay.qubit("m")
        base = ((lay.qubit("g"), 0), (lay.qubit("r_d"), 0))
        rj = lay.qubits("r_j")
        if half == "full":
            prep.append(Gate("X", (m,), base))
        else:
            prep.append(Gate("X", (m,), base + ((rj[-1], 1 if half == "right" else 0),)))
        ae = amplitude_estimation(prep, lay, "m", n_y, shots=shots, seed=seed)
    energy, delta = energy_estimate(ae, record.beta_sc, record.kappa_qsvt, n_area)
    x_cl = record.classical.psi * record.nu
    classical = float(np.sum(np.abs(x_cl[sel]) ** 2)) / n_area
    return EnergyResult(ae, energy, delta, classical, p_good, n_area)


# --------------------------------------------------------------- Gaussians


def gaussian_values(x, mu, beta_sc=1.0, x_c=0.0):
    x = np.asarray(x, dtype=float)
    return beta_sc * np.exp(-((x - x_c) ** 2) / (2.0 * mu**2))


@dataclass
class GaussianRun:
    state: QuantumState
    phases: PhaseVector
    x: np.ndarray
    values: np.ndarray
    target: np.ndarray

    @property
    def max_deviation(self):
        return float(np.max(np.abs(self.values - self.target)))


def gaussian_qsvt(n_x, mu, beta_sc=1.0, x_c=0.0, eps=1e-4, phases=None):
    """Gaussian profile on 2^n_x points from an even QSVT over sin(x_j).

    The register r_x starts in the uniform superposition, so the
    zero-ancilla amplitudes are 2^{-n_x/2} G(x_j); ``values`` undoes that
    factor.  ``x`` is the physical grid from -1 to 1.
    """
    if phases is None:
        phases, _ = gaussian_phases(mu, beta_sc, eps, x_c=x_c)
    a0, al = sine_grid(n_x, x_c)
    enc = sine_encoding(n_x, a0, al, system="r_x", ancilla="a")
    lay = RegisterLayout([("r_x", n_x), ("a", 1), ("q", 1), ("h", 1)])
    st = QuantumState(lay)
    for q in lay.qubits("r_x"):
        st.apply(Gate("H", (q,)))
    apply_real_qsvt(enc, phases, st)
    cond = [(q, 0) for q in lay.qubits("a", "q", "h")]
    amps = st.register_amplitudes(["r_x"], cond)
    x = sine_points(n_x, a0, al) + x_c
    return GaussianRun(st, phases, x, (amps * 2 ** (n_x / 2)).real,
                       gaussian_values(x, mu, beta_sc, x_c))


def lobe_width(x, amps):
    """Standard deviation of a Gaussian fitted to log|amps| near the peak."""
    a = np.abs(np.asarray(amps))
    keep = a > 0.05 * a.max()
    coef = np.polyfit(np.asarray(x)[keep], np.log(a[keep]), 2)
    if coef[0] >= 0:
        return float("inf")
    return float(math.sqrt(-1.0 / (2.0 * coef[0])))


@dataclass
class TwoGaussiansResult:
    ae: AEResult
    s_g: float
    s_g_delta: float
    s_g_classical: float
    p_exact: float
    x: np.ndarray
    profile: np.ndarray
    widths: tuple
    prep: Circuit = field(repr=False, default=None)

    def as_dict(self):
        out = {"s_g": self.s_g, "s_g_delta": self.s_g_delta, "s_g_classical": self.s_g_classical,
               "p_exact": self.p_exact, "width_left": self.widths[0],
               "width_right": self.widths[1]}
        out.update({f"ae_{k}": v for k, v in self.ae.as_dict().items()})
        return out


def two_gaussians_prep(n_x, phases):
    """U_prep of the two-Gaussians demonstration and its layout."""
    lay = RegisterLayout([("r_x", n_x), ("a", 1), ("q", 1), ("h", 1), ("m", 1)])
    n_low = n_x - 1
    a0, al = sine_grid(n_low)
    enc = sine_encoding(n_low, a0, al, system="r_x", ancilla="a")
    rx = lay.qubits("r_x")
    prep = Circuit(lay.n_qubits)
    for q in rx:
        prep.add("H", q)
    prep.extend(real_qsvt_circuit(lay, enc, phases, qubits=rx[:n_low] + [lay.qubit("a")]))
    zero = tuple((q, 0) for q in lay.qubits("a", "q", "h"))
    m = lay.qubit("m")
    # second and third quarters: top two bits 01 or 10
    prep.add("X", m, ((rx[-1], 0), (rx[-2], 1)) + zero)
    prep.add("X", m, ((rx[-1], 1), (rx[-2], 0)) + zero)
    return prep, lay


def two_gaussians_demo(n_x, mu, eps, n_y, beta_sc=1.0, shots=0, seed=None, phases=None):
    """Two Gaussians from one QSVT, integrated over the middle half by AE."""
    if n_x < 3:
        raise ValueError("n_x must be at least 3")
    if phases is None:
        phases, _ = gaussian_phases(mu, beta_sc, eps)
    prep, lay = two_gaussians_prep(n_x, phases)
    st = QuantumState(lay).run(prep)
    p_exact = st.probability([(lay.qubit("m"), 1)])
    cond = [(q, 0) for q in lay.qubits("a", "q", "h")]
    # profile before flagging: m is 0 outside the window and 1 inside
    N = 2**n_x
    half = N // 2
    amps0 = st.register_amplitudes(["r_x"], cond + [(lay.qubit("m"), 0)])
    amps1 = st.register_amplitudes(["r_x"], cond + [(lay.qubit("m"), 1)])
    profile = (amps0 + amps1).real
    x_loc = sine_points(n_x - 1, *sine_grid(n_x - 1))
    x = np.concatenate([x_loc / 2 - 0.5, x_loc / 2 + 0.5])
    widths = (lobe_width(x[:half], profile[:half]), lobe_width(x[half:], profile[half:]))
    ae = amplitude_estimation(prep, lay, "m", n_y, shots=shots, seed=seed)
    beta_init2 = 2.0**-n_x
    g = gaussian_values(np.concatenate([x_loc, x_loc]), mu, beta_sc)
    mid = np.zeros(N, dtype=bool)
    mid[N // 4: 3 * N // 4] = True
    s_cl = beta_init2 * float(np.sum(g[mid] ** 2)) / N
    return TwoGaussiansResult(ae, ae.p_tilde / N, ae.delta / N, s_cl, p_exact, x, profile,
                              widths, prep)


@dataclass
class FilterResult:
    product: np.ndarray
    same_path: np.ndarray
    classical: np.ndarray
    gauss: np.ndarray
    x: np.ndarray
    p_success: float

    @property
    def deviation_same_path(self):
        return float(np.max(np.abs(self.product - self.same_path)))

    @property
    def deviation_classical(self):
        return float(np.max(np.abs(self.product - self.classical)))


def gaussian_filter(problem, phases_inverse, phases_gauss, oracle="structured", shared=False,
                    x_c=0.0, mu=None):
    """G(x_j) F_j for both fields from a solver QSVT followed by a Gaussian QSVT.

    The Gaussian stage has its own rotation ancilla ``q_G`` and Hadamard
    ancilla ``h_G``.  By default its sine encoding gets a fresh ancilla
    ``a_G``.  ``shared=True`` reuses the first ancilla of the solver
    encoding instead; that variant lets the solver's discarded branch (that
    ancilla in |1>) leak into the kept branch and is kept only for study.
    Returned vectors are in units of the normalized solution ``nu x``.
    """
    from .wave import classical_solve

    enc = make_oracle(problem, oracle)
    anc_name = enc.ancilla[0][0]
    extra = [("h", 1), ("q_G", 1), ("h_G", 1)] + ([] if shared else [("a_G", 1)])
    lay = solver_layout(enc, extra)
    n_x = problem.n_x
    a0, al = sine_grid(n_x, x_c)
    genc = sine_encoding(n_x, a0, al, system="r_j", ancilla=anc_name if shared else "a_G")
    st = prepare_b(lay)
    apply_real_qsvt(enc, phases_inverse, st, dagger=True)
    mi = st.copy()
    apply_real_qsvt(genc, phases_gauss, st, q="q_G", h="h_G")
    names = [n for n, _ in enc.ancilla] + ["q", "h", "q_G", "h_G"] + ([] if shared else ["a_G"])
    cond = [(q, 0) for q in lay.qubits(*names)]
    scale = phases_inverse.beta_sc * phases_inverse.kappa_qsvt
    prod = st.register_amplitudes(["r_j", "r_d"], cond) * scale
    y = mi.register_amplitudes(["r_j", "r_d"], cond) * scale
    x = sine_points(n_x, a0, al) + x_c
    g_poly = _re_poly(phases_gauss, np.sin(x - x_c))
    g = g_poly if mu is None else gaussian_values(x, mu, phases_gauss.beta_sc, x_c)
    x_cl = classical_solve(problem).psi * enc.normalization
    return FilterResult(prod, np.concatenate([g_poly, g_poly]) * y,
                        np.concatenate([g, g]) * x_cl, g, x, st.probability(cond))


def _re_poly(phases, s):
    from .qsp import qsp_eval

    return qsp_eval(phases, np.asarray(s)).real


# ------------------------------------------------------------ power


@dataclass
class PowerResult:
    k_B: int
    k_E: int
    N_EB: int
    N_w: int
    N_hw: int
    n_EB: int
    n_w: int
    p0: float
    p1: float
    D_abs: float
    P: float
    D_bruteforce: complex
    tolerance: float
    n_qubits: int
    gauss: np.ndarray = None

    def as_dict(self):
        return {"k_B": self.k_B, "k_E": self.k_E, "N_EB": self.N_EB, "N_w": self.N_w,
                "N_hw": self.N_hw, "n_EB": self.n_EB, "n_w": self.n_w, "p0": self.p0,
                "p1": self.p1, "D_abs": self.D_abs, "P": self.P,
                "D_bruteforce_abs": abs(self.D_bruteforce), "tolerance": self.tolerance,
                "n_qubits": self.n_qubits}


def power_double_sum(E, G, k_B, N_EB, N_hw):
    """Brute-force D = sum_k E*_{k_B+k} sum_j G_j E_{k_B+k+j-N_hw}."""
    E = np.asarray(E, dtype=complex)
    D = 0.0 + 0.0j
    for k in range(N_EB):
        inner = sum(G[j] * E[k_B + k + j - N_hw] for j in range(2 * N_hw + 1))
        D += np.conj(E[k_B + k]) * inner
    return complex(D)


def power_bound(E, k_B, N_EB, N_hw):
    """sum_k |E_{k_B+k}| sum_j |E_{k_B+k+j-N_hw}|: sensitivity of |D| to errors in G."""
    a = np.abs(np.asarray(E))
    return float(sum(a[k_B + k] * sum(a[k_B + k + j - N_hw] for j in range(2 * N_hw + 1))
                     for k in range(N_EB)))


def window_gaussian(n_w, N_hw, mu, beta_sc=1.0):
    """Sine-grid points centred on index N_hw and the Gaussian there."""
    Nw2 = 2**n_w
    x_c = -1.0 + 2.0 * N_hw / (Nw2 - 1)
    a0, al = sine_grid(n_w, x_c)
    x = sine_points(n_w, a0, al)
    return x_c, x, gaussian_values(x, mu, beta_sc)


def power_pipeline(E, k_B, N_EB, N_hw, filter="qsvt", mu=0.5, eps=1e-4, beta_sc=1.0,
                   G=None, phases=None):
    """Circuit and layout of the SWAP-test pipeline plus the validity conditions.

    Registers: field copy II with its sign and comparator flags, r_EB,
    field copy I with sign and comparator flags, r_w, a shared comparator
    scratch qubit, the filter ancillae and the SWAP-test qubit.
    """
    E = np.asarray(E, dtype=complex)
    N = len(E)
    n_x = int(round(math.log2(N)))
    if 2**n_x != N:
        raise WindowOutOfRange("field length must be a power of two")
    N_w = 2 * N_hw + 1
    k_E = k_B + N_EB - 1
    if N_EB < 1 or N_hw < 0 or k_B - N_hw < 0 or k_E + N_hw > N - 1:
        raise WindowOutOfRange(f"window k_B={k_B}, N_EB={N_EB}, N_hw={N_hw} does not fit {N} points")
    n_EB = max(1, math.ceil(math.log2(N_EB)))
    n_w = max(1, math.ceil(math.log2(N_w)))
    if 2**n_EB - 1 + (k_B - N_hw) > N:
        raise WindowOutOfRange("index shift exceeds the two's-complement range")
    regs = [("II", n_x), ("s_II", 1), ("c_II", 1), ("r_EB", n_EB),
            ("I", n_x), ("s_I", 1), ("c_I", 1), ("r_w", n_w), ("scr", 1), ("a_G", 1)]
    if filter == "qsvt":
        regs += [("q_G", 1), ("h_G", 1)]
    regs += [("swap", 1)]
    lay = RegisterLayout(regs)
    II, I = lay.qubits("II"), lay.qubits("I")
    sII, cII, sI, cI, scr = (lay.qubit(n) for n in ("s_II", "c_II", "s_I", "c_I", "scr"))
    rEB, rw = lay.qubits("r_EB"), lay.qubits("r_w")
    c = Circuit(lay.n_qubits)
    for q in rEB + rw:
        c.add("H", q)
    # register I: j = p - l - (k_B - N_hw) in two's complement on I + s_I
    subtract_register(c, I, sI, rEB, absolute=False)
    subtract_const(c, I, sI, k_B - N_hw, absolute=False)
    compare_const(c, I, scr, cI, N_w)
    # register II: k - k_B, then flag k - k_B < N_EB
    subtract_const(c, II, sII, k_B, absolute=False)
    compare_const(c, II, scr, cII, N_EB)
    # conductivity profile on the low n_w qubits of I
    aG = lay.qubit("a_G")
    if filter == "qsvt":
        if phases is None:
            phases, _ = gaussian_phases(mu, beta_sc, eps)
        x_c, _, gvals = window_gaussian(n_w, N_hw, mu, beta_sc)
        a0, al = sine_grid(n_w, x_c)
        enc = sine_encoding(n_w, a0, al, system="win", ancilla="a_G")
        c.extend(real_qsvt_circuit(lay, enc, phases, q="q_G", h="h_G", qubits=I[:n_w] + [aG]))
        gvals = _re_poly(phases, np.sin(sine_points(n_w, a0, al)))
        gexact = window_gaussian(n_w, N_hw, mu, beta_sc)[2]
    else:
        if G is None:
            G = window_gaussian(n_w, N_hw, mu, beta_sc)[2][:N_w]
        G = np.asarray(G, dtype=float)
        if len(G) != N_w or np.any(np.abs(G) > 1.0):
            raise ValueError("G needs N_w entries with |G_j| <= 1")
        gvals = np.zeros(2**n_w)
        gvals[:N_w] = G
        gexact = gvals.copy()
        for j in range(2**n_w):
            ctl = tuple((q, (j >> i) & 1) for i, q in enumerate(I[:n_w]))
            c.add("RY", aG, ctl, (2.0 * math.acos(gvals[j]),))
    # SWAP test between (II, r_EB) and (I, r_w)
    sw = lay.qubit("swap")
    c.add("H", sw)
    for a, b in zip(II[:n_EB], rEB):
        c.add("SWAP", (a, b), ((sw, 1),))
    for a, b in zip(I[:n_w], rw):
        c.add("SWAP", (a, b), ((sw, 1),))
    c.add("H", sw)
    valid = [(sII, 0), (cII, 1), (sI, 0), (cI, 1), (scr, 0), (aG, 0)]
    if filter == "qsvt":
        valid += [(lay.qubit("q_G"), 0), (lay.qubit("h_G"), 0)]
    info = {"n_x": n_x, "N_w": N_w, "k_E": k_E, "n_EB": n_EB, "n_w": n_w,
            "g_circuit": gvals[:N_w], "g_exact": gexact[:N_w]}
    return c, lay, valid, info


def absorbed_power(E, k_B, N_EB, N_hw, filter="qsvt", mu=0.5, eps=1e-4, beta_sc=1.0, G=None,
                   phases=None, field_eps=0.0):
    """|D| and P from two SWAP-test probabilities on the normalized field.

    ``field_eps`` is an error bound on the field entries (e.g. from a QSVT
    solve) folded into the reported tolerance next to the filter error.
    """
    E = np.asarray(E, dtype=complex)
    norm = float(np.linalg.norm(E))
    if norm == 0.0:
        raise ZeroProbability("cannot load a vanishing field")
    circ, lay, valid, info = power_pipeline(E, k_B, N_EB, N_hw, filter, mu, eps, beta_sc, G,
                                            phases)
    e = E / norm
    st = QuantumState.from_register_amplitudes(lay, ["II", "I"], np.kron(e, e))
    st.run(circ)
    sw = lay.qubit("swap")
    p0 = st.probability(valid + [(sw, 0)])
    p1 = st.probability(valid + [(sw, 1)])
    n_EB, n_w, N_w = info["n_EB"], info["n_w"], info["N_w"]
    eta2 = 2.0 ** -(n_EB + n_w)
    D_abs = math.sqrt(max(p0 - p1, 0.0) / eta2) * norm**2
    g_ref = info["g_exact"]
    D_bf = power_double_sum(E, g_ref, k_B, N_EB, N_hw)
    g_err = float(np.max(np.abs(info["g_circuit"] - g_ref))) if filter == "qsvt" else 0.0
    g_err = max(g_err, eps if filter == "qsvt" else 0.0)
    bound = power_bound(E, k_B, N_EB, N_hw)
    gmax = float(np.max(np.abs(g_ref))) if len(g_ref) else 0.0
    tol = g_err * bound + 2.0 * field_eps * gmax * bound / max(float(np.max(np.abs(E))), 1e-300)
    return PowerResult(k_B, info["k_E"], N_EB, N_w, N_hw, n_EB, n_w, p0, p1, D_abs,
                       D_abs / (2.0 * N_w * N_EB), D_bf, tol, lay.n_qubits, g_ref)


def swap_test(psi, lam):
    """Probability of |1> on the flag of a SWAP test between two registers."""
    psi = np.asarray(psi, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    n = int(round(math.log2(len(psi))))
    lay = RegisterLayout([("A", n), ("B", n), ("f", 1)])
    st = QuantumState.from_register_amplitudes(lay, ["A", "B"], np.kron(lam, psi))
    f = lay.qubit("f")
    st.apply(Gate("H", (f,)))
    for a, b in zip(lay.qubits("A"), lay.qubits("B")):
        st.apply(Gate("SWAP", (a, b), ((f, 1),)))
    st.apply(Gate("H", (f,)))
    return st.probability([(f, 1)])


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
