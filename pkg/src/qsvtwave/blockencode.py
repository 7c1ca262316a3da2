"""Block encodings of the normalized wave matrix and of diagonal sine values.

Three constructions are provided:

* :func:`exact_dilation` builds the unitary
  ``[[A, U_L sqrt(I-S^2) U_L^H], [U_R sqrt(I-S^2) U_R^H, -A^H]]`` from an SVD,
  with one ancilla as the most significant qubit.
* :func:`structured_oracle` assembles a gate-level circuit from a row-access
  state preparation (``O_bulk`` and the edge splitters), value rotations on
  ``a_v`` (``O_H``) and index arithmetic (``O_M``).
* :func:`sine_encoding` encodes ``diag(sin(x_j))`` with binary-weighted
  controlled ``Ry`` rotations.

Every encoding carries the dense unitary over its own qubits, compiled from
the circuit when one exists, and applies it to larger states by register
name.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import decrement, increment
from .circuit import Circuit, Gate, RegisterLayout, apply_matrix_array
from .errors import AngleDomain, BlockMismatch, NormTooLarge, ZeroMatrix
from .linalg import max_norm, svd

D_H = 2.0


def normalize_matrix(A, d_h=D_H):
    """Return (A / nu, nu) with nu = d_h^2 * ||A||_max."""
    A = np.asarray(A, dtype=complex)
    m = max_norm(A)
    if m == 0.0:
        raise ZeroMatrix("cannot normalize the zero matrix")
    nu = d_h**2 * m
    return A / nu, nu


@dataclass
class BlockEncoding:
    """Unitary ``U`` with ``<0|_anc U |0>_anc = A / normalization``.

    ``system`` and ``ancilla`` list (name, size) pairs; the dense
    ``unitary`` acts on system qubits (low) followed by ancilla qubits
    (high), in the listed order.
    """

    system: tuple
    ancilla: tuple
    unitary: np.ndarray
    normalization: float = 1.0
    circuit: Circuit = None
    name: str = "encoding"
    info: dict = field(default_factory=dict)

    @property
    def n_system(self):
        return sum(s for _, s in self.system)

    @property
    def n_ancilla(self):
        return sum(s for _, s in self.ancilla)

    def own_layout(self, extra=()):
        return RegisterLayout(list(self.system) + list(self.ancilla) + list(extra))

    def qubits_in(self, layout):
        names = [n for n, _ in self.system] + [n for n, _ in self.ancilla]
        for n, s in list(self.system) + list(self.ancilla):
            if layout[n].size != s:
                raise BlockMismatch(f"register {n!r} has the wrong size in the target layout")
        return layout.qubits(*names)

    def ancilla_qubits_in(self, layout):
        return layout.qubits(*[n for n, _ in self.ancilla])

    def apply(self, state, adjoint=False, controls=(), qubits=None):
        """Apply U (or U^H) densely; ``qubits`` overrides the lookup by register name."""
        U = self.unitary.conj().T if adjoint else self.unitary
        if qubits is None:
            qubits = self.qubits_in(state.layout)
        apply_matrix_array(state.amps, state.n_qubits, U, list(qubits), controls)
        return state

    def gates_in(self, layout=None, adjoint=False, qubits=None, controls=()):
        """Gates of U (or U^H) acting on ``qubits`` or on the named registers of ``layout``.

        The stored circuit is remapped gate by gate when there is one;
        otherwise a single dense gate is emitted.
        """
        if qubits is None:
            qubits = self.qubits_in(layout)
        qubits = list(qubits)
        if len(qubits) != self.n_system + self.n_ancilla:
            raise BlockMismatch("qubit list does not match the encoding size")
        if self.circuit is None:
            U = self.unitary.conj().T if adjoint else self.unitary
            return [Gate("U", tuple(qubits), tuple(controls), (), U)]
        src = self.circuit.adjoint() if adjoint else self.circuit
        out = []
        for g in src:
            out.append(Gate(g.kind, tuple(qubits[t] for t in g.targets),
                            tuple((qubits[q], p) for q, p in g.controls) + tuple(controls),
                            g.params, g.matrix))
        return out

    def block(self):
        d = 2**self.n_system
        return self.unitary[:d, :d].copy()

    def unitarity_residual(self):
        U = self.unitary
        return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))

    def report(self, target):
        """Max deviation of the block from ``target`` plus the unitarity residual."""
        dev = float(np.max(np.abs(self.block() - np.asarray(target))))
        return {"name": self.name, "max_block_deviation": dev,
                "unitarity_residual": self.unitarity_residual(),
                "normalization": self.normalization}


def exact_dilation(A_norm, system=None, ancilla=(("a", 1),), normalization=1.0):
    """SVD dilation of a matrix with spectral norm at most one."""
    A = np.asarray(A_norm, dtype=complex)
    n = A.shape[0]
    n_sys = int(round(math.log2(n)))
    if 2**n_sys != n or A.shape != (n, n):
        raise ValueError("matrix size must be a power of two")
    r = svd(A)
    if r.singulars[0] > 1.0 + 1e-12:
        raise NormTooLarge(f"largest singular value {r.singulars[0]:.6g} exceeds one")
    comp = np.sqrt(np.clip(1.0 - r.singulars**2, 0.0, None))
    top_right = (r.u_left * comp) @ r.u_left.conj().T
    bottom_left = (r.u_right * comp) @ r.u_right.conj().T
    U = np.block([[A, top_right], [bottom_left, -A.conj().T]])
    if system is None:
        system = (("s", n_sys),)
    return BlockEncoding(tuple(system), tuple(ancilla), U, normalization, None, "dilation")


def encode_value_rotation(v_des, c_d, target):
    """Gate putting ``v_des / c_d`` on the |1> amplitude of ``target``.

    Real values use Ry, imaginary values Rx and general complex values the
    combined rotation Ry(theta2) Rz(theta1).
    """
    v = complex(v_des) / c_d
    mag = abs(v)
    if mag > 1.0 + 1e-12:
        raise AngleDomain(f"|v / c_d| = {mag:.6g} exceeds one")
    mag = min(mag, 1.0)
    if mag == 0.0:
        return Gate("RY", (target,), (), (0.0,))
    if abs(v.imag) <= 1e-15 * mag:
        return Gate("RY", (target,), (), (2.0 * math.asin(v.real),))
    if abs(v.real) <= 1e-15 * mag:
        return Gate("RX", (target,), (), (2.0 * math.asin(-v.imag),))
    return Gate("RC", (target,), (), (-2.0 * math.atan2(v.imag, v.real), 2.0 * math.asin(mag)))


@dataclass(frozen=True)
class OracleAngles:
    """Rotation angles of the value oracle, from normalized matrix entries."""

    omega_eps: tuple
    omega: float
    omega_eps0_e: float
    omega_e: float
    eta_plus_1: float
    eta_minus_1: float
    eta_plus_2: float
    eta_minus_2: float
    sigma_plus: float
    sigma_minus: float
    sigma_plus_e: float
    sigma_minus_e: float
    pi_plus: float
    pi_minus: float

    def as_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _asin_checked(x, label):
    if abs(x) > 1.0 + 1e-12:
        raise AngleDomain(f"arcsin argument {x:.6g} out of range for {label}")
    return math.asin(max(-1.0, min(1.0, x)))


def oracle_angles(problem, nu, d_h=D_H):
    """Angle table for the value oracle at normalization ``nu``."""
    w = problem.omega / nu
    sig = problem.sigma / nu
    ep = problem.eta_plus / nu
    em = problem.eta_minus / nu
    s_plus = 2 * _asin_checked(sig * d_h**2, "sigma")
    s_minus = 2 * _asin_checked(-sig * d_h**2, "sigma")
    return OracleAngles(
        omega_eps=tuple(2 * _asin_checked(-w * e * d_h, "omega eps") for e in (problem.eps0, problem.eps1)),
        omega=2 * _asin_checked(-w * d_h, "omega"),
        omega_eps0_e=2 * _asin_checked(-w * problem.eps0 * d_h**1.5, "omega eps0 edge"),
        omega_e=2 * _asin_checked(-w * d_h**1.5, "omega edge"),
        eta_plus_1=-2 * float(np.angle(ep)),
        eta_minus_1=-2 * float(np.angle(em)),
        eta_plus_2=2 * _asin_checked(abs(ep) * d_h**1.5, "eta+"),
        eta_minus_2=2 * _asin_checked(abs(em) * d_h**2, "eta-"),
        sigma_plus=s_plus,
        sigma_minus=s_minus,
        sigma_plus_e=2 * _asin_checked(sig * d_h**1.5, "sigma edge") - s_plus,
        sigma_minus_e=2 * _asin_checked(-sig * d_h**1.5, "sigma edge") - s_minus,
        pi_plus=-s_plus,
        pi_minus=-s_minus,
    )


STRUCTURED_REGISTERS = (("r_j", None), ("r_d", 1), ("a_d", 1), ("a_j", 1), ("a_v", 1))


def structured_layout(n_x, extra=()):
    regs = [(n, n_x if s is None else s) for n, s in STRUCTURED_REGISTERS]
    return RegisterLayout(regs + list(extra))


def _row_controls(lay, r_d, r_j):
    """Controls selecting one matrix row (r_d, r_j)."""
    ctl = [(lay.qubit("r_d"), r_d)]
    ctl += [(q, (r_j >> i) & 1) for i, q in enumerate(lay.qubits("r_j"))]
    return tuple(ctl)


def bulk_splitter(lay):
    """O_bulk: spread a row over its diagonal slot and two neighbour slots.

    a_d = r_d marks the diagonal slot with amplitude 1/sqrt 2; a_d != r_d is
    split by a_j into the two neighbours with amplitude 1/2 each.
    """
    rd, ad, aj = (lay.qubit(n) for n in ("r_d", "a_d", "a_j"))
    blk = Circuit(lay.n_qubits)
    blk.add("H", ad)
    blk.add("H", aj, ((ad, 1), (rd, 0)))
    blk.add("H", aj, ((ad, 0), (rd, 1)))
    return blk


def _row_access_circuit(problem, nu, d_h=D_H):
    """Circuit V with <0, c| V |0, r> = A[r, c] / nu (block equals A^T / nu)."""
    n_x = problem.n_x
    N = problem.N_x
    lay = structured_layout(n_x)
    c = Circuit(lay.n_qubits)
    rd, ad, aj, av = (lay.qubit(n) for n in ("r_d", "a_d", "a_j", "a_v"))
    msb = lay.qubit("r_j", n_x - 1)

    def edge_split(rows):
        blk = Circuit(lay.n_qubits)
        for r_d, r_j in rows:
            blk.add("H", aj, _row_controls(lay, r_d, r_j) + ((ad, r_d),))
        return blk

    bulk = bulk_splitter(lay)
    c.extend(bulk)
    # forward splitting at the two boundary rows
    c.extend(edge_split([(0, 0), (1, N - 1)]))

    # value oracle: bulk classes first, then per-row corrections
    diag_c = 1.0 / d_h            # (1/sqrt 2)^2
    edge_c = d_h**-1.5            # (1/sqrt 2)(1/2)
    off_c = 1.0 / d_h**2          # (1/2)^2
    split_c = 1.0 / d_h**2        # (1/2)(1/2)
    A = problem
    vals = {
        "eps": [1j * A.omega * e / nu for e in (A.eps0, A.eps1)],
        "omega": 1j * A.omega / nu,
        "sigma": A.sigma / nu,
        "eta_p": A.eta_plus / nu,
        "eta_m": A.eta_minus / nu,
    }

    def rot(value, cd, controls):
        g = encode_value_rotation(value, cd, av)
        return g.with_controls(controls)

    def undo(g):
        return g.adjoint()

    gates = []
    bulk_gates = {}
    for L in (0, 1):
        g = rot(vals["eps"][L], diag_c, ((rd, 0), (ad, 0), (aj, 0), (msb, L)))
        bulk_gates[("E", "diag", L)] = g
        gates.append(g)
    g = rot(vals["omega"], diag_c, ((rd, 1), (ad, 1), (aj, 0)))
    bulk_gates[("B", "diag")] = g
    gates.append(g)
    for r_d in (0, 1):
        for a_j in (0, 1):
            sign = (-1) ** (a_j ^ r_d)
            g = rot(sign * vals["sigma"], off_c, ((rd, r_d), (ad, 1 - r_d), (aj, a_j)))
            bulk_gates[("off", r_d, a_j)] = g
            gates.append(g)

    def at_row(g, r_d, r_j):
        return g.with_controls(tuple(q for q in _row_controls(lay, r_d, r_j)
                                     if q[0] not in {c_[0] for c_ in g.controls}))

    # row 0: outgoing condition on E, no Ampere terms
    gates.append(at_row(undo(bulk_gates[("E", "diag", 0)]), 0, 0))
    gates.append(at_row(rot(vals["eta_p"], edge_c, ((ad, 0), (aj, 0))), 0, 0))
    gates.append(at_row(rot(vals["eta_m"], split_c, ((ad, 0), (aj, 1))), 0, 0))
    for a_j in (0, 1):
        gates.append(at_row(undo(bulk_gates[("off", 0, a_j)]), 0, 0))

    def retune(bulk_gate, value, controls, r_d, r_j):
        # same rotation axis, so the difference of angles corrects the entry
        delta = encode_value_rotation(value, edge_c, av).params[0] - bulk_gate.params[0]
        return at_row(Gate("RX", (av,), controls, (delta,)), r_d, r_j)

    # row 1 and row 2N-2: their diagonal columns are split on the column side
    gates.append(retune(bulk_gates[("E", "diag", 0)], vals["eps"][0], ((ad, 0), (aj, 0)), 0, 1))
    gates.append(retune(bulk_gates[("B", "diag")], vals["omega"], ((ad, 1), (aj, 0)), 1, N - 2))
    # row 2N-1: driven outgoing condition on B, no Faraday terms
    gates.append(at_row(undo(bulk_gates[("B", "diag")]), 1, N - 1))
    gates.append(at_row(rot(vals["eta_p"], edge_c, ((ad, 1), (aj, 0))), 1, N - 1))
    gates.append(at_row(rot(vals["eta_m"], split_c, ((ad, 1), (aj, 1))), 1, N - 1))
    for a_j in (0, 1):
        gates.append(at_row(undo(bulk_gates[("off", 1, a_j)]), 1, N - 1))
    for g in gates:
        c.append(g)
    c.add("X", av)

    # index arithmetic: neighbour slots shift r_j, then E <-> B swap
    rj = lay.qubits("r_j")
    increment(c, rj, ((aj, 1), (ad, 0)))
    decrement(c, rj, ((aj, 1), (ad, 1)))
    c.add("SWAP", (ad, rd))

    # backward splitting at the columns reached by the boundary couplings
    c.extend(edge_split([(0, 1), (1, N - 2)]))
    c.extend(bulk.adjoint())
    return c, lay


def structured_oracle(problem, nu=None, verify=True, tol=1e-8):
    """Gate-level block encoding of the normalized wave matrix.

    The row-access circuit V has block ``A^T / nu``; the returned encoding
    uses its gate-by-gate transpose, whose block is ``A / nu``.  If a
    rotation angle would leave the arcsin range, ``nu`` is doubled until it
    fits (the factor is recorded in ``info['rescale']``).
    """
    from .wave import build_matrix

    A, _ = build_matrix(problem)
    if nu is None:
        _, nu = normalize_matrix(A)
    rescale = 1
    while True:
        try:
            oracle_angles(problem, nu * rescale)
            V, lay = _row_access_circuit(problem, nu * rescale)
            break
        except AngleDomain:
            rescale *= 2
            if rescale > 2**20:
                raise
    nu_eff = nu * rescale
    circ = V.transpose()
    U = circ.to_matrix()
    system = (("r_j", problem.n_x), ("r_d", 1))
    ancilla = (("a_d", 1), ("a_j", 1), ("a_v", 1))
    enc = BlockEncoding(system, ancilla, U, nu_eff, circ, "structured",
                        {"rescale": rescale, "angles": oracle_angles(problem, nu_eff).as_dict()})
    if verify:
        dev = float(np.max(np.abs(enc.block() - A / nu_eff)))
        enc.info["max_block_deviation"] = dev
        if dev > tol:
            raise BlockMismatch(f"structured oracle block deviates by {dev:.3e}")
    return enc


def dilation_oracle(problem):
    """Exact dilation of the normalized wave matrix on the wave registers."""
    from .wave import build_matrix

    A, _ = build_matrix(problem)
    A_norm, nu = normalize_matrix(A)
    return exact_dilation(A_norm, system=(("r_j", problem.n_x), ("r_d", 1)),
                          ancilla=(("a", 1),), normalization=nu)


def sine_grid(n_x, x_c=0.0):
    """(alpha0, alpha) placing 2^n_x points on [-1 - x_c, 1 - x_c]."""
    N = 2**n_x
    return -1.0 - x_c, N / (N - 1)


def sine_encoding(n_x, alpha0, alpha, system="r_x", ancilla="a"):
    """Diagonal block encoding of sin(x_j), x_j = alpha0 + j * dx, dx = 2 alpha / 2^n_x.

    Ry(pi - 2 x_j) on the ancilla has cos((pi - 2 x_j)/2) = sin(x_j) as its
    |0><0| entry; the j-dependent part is split over the bits of j.
    """
    N = 2**n_x
    dx = 2.0 * alpha / N
    lay = RegisterLayout([(system, n_x), (ancilla, 1)])
    a = lay.qubit(ancilla)
    c = Circuit(lay.n_qubits)
    c.add("RY", a, (), (math.pi - 2.0 * alpha0,))
    for b, q in enumerate(lay.qubits(system)):
        c.add("RY", a, ((q, 1),), (-2.0 * dx * 2**b,))
    U = c.to_matrix()
    enc = BlockEncoding(((system, n_x),), ((ancilla, 1),), U, 1.0, c, "sine",
                        {"alpha0": alpha0, "alpha": alpha, "dx": dx})
    return enc


def sine_points(n_x, alpha0, alpha):
    N = 2**n_x
    return alpha0 + np.arange(N) * (2.0 * alpha / N)


def write_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
