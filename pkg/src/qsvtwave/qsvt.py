"""QSVT sequences over a block encoding and the linear-system solve built on them.

The operator realized by :func:`apply_qsvt` is

    e^{i phi'_0 Z_P} U e^{i phi'_1 Z_P} U^H e^{i phi'_2 Z_P} U ... e^{i phi'_d Z_P}

with ``Z_P = 2P - I`` and ``P`` the projector onto "all encoding ancillae in
|0>".  The angles ``phi'`` come from :meth:`PhaseVector.qsvt_angles`, so the
projected block is the QSP polynomial of the W-convention phases applied to
the singular values: ``U_L p(S) U_R^H`` for odd degree and
``U_L p(S) U_L^H`` for even degree (the first oracle call is U^H when the
degree is even).  Each rotation is built from an ancilla ``q``: a
multi-controlled X marks the zero-ancilla subspace on ``q``, ``Rz(2 phi')``
acts on ``q`` and the marking is undone.

With ``dagger=True`` the roles of U and U^H are swapped, which realizes the
polynomial of ``A^H``; for the scaled inverse this gives ``A^{-1}`` up to the
factor ``1 / (beta_sc kappa_qsvt)``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .blockencode import dilation_oracle, structured_oracle
from .circuit import Circuit, Gate, QuantumState, RegisterLayout, project_and_renormalize
from .errors import LayoutMismatch
from .linalg import condition_number, singular_values
from .qsp import PhaseVector
from .wave import FieldSolution, build_matrix, classical_solve, compare_solutions


@dataclass
class QueryCounter:
    """Counts applications of U_A and U_A^H."""

    calls: int = 0


def solver_layout(encoding, extra=()):
    """Encoding registers followed by the rotation ancilla ``q`` and ``extra``."""
    return RegisterLayout(list(encoding.system) + list(encoding.ancilla) + [("q", 1)] + list(extra))


def _angles(phases):
    if isinstance(phases, PhaseVector):
        return phases.qsvt_angles()
    return PhaseVector(np.asarray(phases, dtype=float), "").qsvt_angles()


def projector_rotation(layout, ancilla_names, angle, controls=(), q="q", ancilla_qubits=None):
    """Gates realizing e^{i angle Z_P} through the rotation ancilla ``q``."""
    qb = layout.qubit(q)
    if ancilla_qubits is None:
        ancilla_qubits = layout.qubits(*ancilla_names)
    zero = tuple((a, 0) for a in ancilla_qubits)
    mark = Gate("X", (qb,), zero + tuple(controls))
    return [mark, Gate("RZ", (qb,), tuple(controls), (2.0 * angle,)), mark]


def _check_rotation_register(layout, q):
    if q not in layout:
        raise LayoutMismatch(f"state needs a rotation ancilla register named {q!r}")
    if layout[q].size != 1:
        raise LayoutMismatch(f"register {q!r} must be a single qubit")


def apply_qsvt(encoding, phases, state, dagger=False, counter=None, controls=(), angles=None,
               q="q", qubits=None):
    """Run the alternating QSVT sequence in place on ``state`` and return it.

    ``controls`` conditions every rotation (not the oracle calls), which is
    how the Hadamard-sandwich variant selects between two angle sets.
    ``qubits`` places the encoding on explicit qubits instead of its
    registers.
    """
    lay = state.layout
    _check_rotation_register(lay, q)
    anc_q = _ancilla_qubits(encoding, lay, qubits)
    phi = _angles(phases) if angles is None else np.asarray(angles, dtype=float)
    d = len(phi) - 1

    def rotate(a):
        for g in projector_rotation(lay, None, a, controls, q, anc_q):
            state.apply(g)

    rotate(phi[d])
    for k in range(d, 0, -1):
        use_adjoint = (k % 2 == 0) != dagger
        encoding.apply(state, adjoint=use_adjoint, qubits=qubits)
        if counter is not None:
            counter.calls += 1
        rotate(phi[k - 1])
    return state


def _ancilla_qubits(encoding, layout, qubits):
    if qubits is None:
        return encoding.ancilla_qubits_in(layout)
    return list(qubits)[encoding.n_system:]


def apply_real_qsvt(encoding, phases, state, dagger=False, counter=None, q="q", h="h",
                    qubits=None):
    """Hadamard-sandwich QSVT in place: the |0>_h branch carries Re p.

    The rotation angles are chosen by the value of ``h`` (phases for
    |0>, negated phases for |1>); oracle calls are shared by both branches.
    """
    if not isinstance(phases, PhaseVector):
        phases = PhaseVector(np.asarray(phases, dtype=float), "")
    lay = state.layout
    _check_rotation_register(lay, q)
    _check_rotation_register(lay, h)
    plus = phases.qsvt_angles()
    minus = phases.negated().qsvt_angles()
    hq = lay.qubit(h)
    anc_q = _ancilla_qubits(encoding, lay, qubits)
    d = len(plus) - 1

    def rotate(k):
        for pol, a in ((0, plus[k]), (1, minus[k])):
            for g in projector_rotation(lay, None, a, ((hq, pol),), q, anc_q):
                state.apply(g)

    state.apply(Gate("H", (hq,)))
    rotate(d)
    for k in range(d, 0, -1):
        encoding.apply(state, adjoint=(k % 2 == 0) != dagger, qubits=qubits)
        if counter is not None:
            counter.calls += 1
        rotate(k - 1)
    state.apply(Gate("H", (hq,)))
    return state


def real_qsvt_circuit(layout, encoding, phases, dagger=False, q="q", h="h", qubits=None):
    """Gate list of :func:`apply_real_qsvt` as a :class:`Circuit` on ``layout``."""
    if not isinstance(phases, PhaseVector):
        phases = PhaseVector(np.asarray(phases, dtype=float), "")
    _check_rotation_register(layout, q)
    _check_rotation_register(layout, h)
    plus = phases.qsvt_angles()
    minus = phases.negated().qsvt_angles()
    hq = layout.qubit(h)
    anc_q = _ancilla_qubits(encoding, layout, qubits)
    fwd = encoding.gates_in(layout, qubits=qubits)
    bwd = encoding.gates_in(layout, adjoint=True, qubits=qubits)
    c = Circuit(layout.n_qubits)
    d = len(plus) - 1

    def rotate(k):
        for pol, a in ((0, plus[k]), (1, minus[k])):
            for g in projector_rotation(layout, None, a, ((hq, pol),), q, anc_q):
                c.append(g)

    c.add("H", hq)
    rotate(d)
    for k in range(d, 0, -1):
        for g in (bwd if (k % 2 == 0) != dagger else fwd):
            c.append(g)
        rotate(k - 1)
    c.add("H", hq)
    return c


def zero_ancilla_conditions(state, encoding, extra=("q",)):
    names = [n for n, _ in encoding.ancilla] + list(extra)
    return [(q, 0) for q in state.layout.qubits(*names)]


def real_polynomial_action(encoding, phases, state, method="average", dagger=False, counter=None):
    """Act with Re p on the encoded block; return (post-selected state, p_0).

    ``average`` runs the sequence for +phi and -phi and averages the two
    states; ``hadamard`` adds an ancilla ``h`` to the state, wraps the
    sequence in Hadamards on it and selects the angle set by its value.
    Both give the zero-ancilla component ``Re p(A) |in>``.
    """
    if not isinstance(phases, PhaseVector):
        phases = PhaseVector(np.asarray(phases, dtype=float), "")
    if method == "average":
        s1 = apply_qsvt(encoding, phases, state.copy(), dagger, counter,
                        angles=phases.qsvt_angles())
        s2 = apply_qsvt(encoding, phases, state.copy(), dagger, counter,
                        angles=phases.negated().qsvt_angles())
        combined = QuantumState(state.layout, 0.5 * (s1.amps + s2.amps), normalized=False)
        return project_and_renormalize(combined, zero_ancilla_conditions(combined, encoding))
    if method == "hadamard":
        lay = state.layout
        big = RegisterLayout(lay.describe() + [("h", 1)])
        amps = np.zeros(2**big.n_qubits, dtype=complex)
        amps[: len(state.amps)] = state.amps
        st = apply_real_qsvt(encoding, phases, QuantumState(big, amps), dagger, counter)
        out, p0 = project_and_renormalize(st, zero_ancilla_conditions(st, encoding, ("q", "h")))
        # drop the h qubit (it is |0> on the kept branch)
        return QuantumState(lay, out.amps[: len(state.amps)].copy()), p0
    raise ValueError(f"unknown method {method!r}")


def prepare_b(layout):
    """|1>_{r_d} |N_x - 1>_{r_j}: one X gate per qubit of the two registers."""
    st = QuantumState(layout)
    for q in layout.qubits("r_j", "r_d"):
        st.apply(Gate("X", (q,)))
    return st


def prepare_b_circuit(layout):
    c = Circuit(layout.n_qubits)
    for q in layout.qubits("r_j", "r_d"):
        c.add("X", q)
    return c


@dataclass
class SolutionRecord:
    """Outcome of a QSVT linear solve next to the classical reference.

    ``psi_x`` is the normalized solution state on (r_j, r_d).  Physical
    fields follow from ``psi_x * sqrt(p0) * beta_sc * kappa_qsvt / nu``.
    Errors are measured on the normalized system ``A/nu``, i.e. on
    ``nu * x``.
    """

    psi_x: np.ndarray
    quantum: FieldSolution
    classical: FieldSolution
    p0: float
    beta_sc: float
    kappa_qsvt: float
    eps_qsvt: float
    nu: float
    n_pol: int
    queries: int
    kappa: float
    errors: object
    oracle: str
    meta: dict = field(default_factory=dict)

    @property
    def prefactor(self):
        return self.beta_sc * self.kappa_qsvt / self.nu

    def metadata(self):
        out = {"kappa": self.kappa, "kappa_qsvt": self.kappa_qsvt, "eps_qsvt": self.eps_qsvt,
               "n_pol": self.n_pol, "p0": self.p0, "queries": self.queries,
               "beta_sc": self.beta_sc, "nu": self.nu, "prefactor": self.prefactor,
               "oracle": self.oracle}
        out.update({f"error_{k}": v for k, v in self.errors.as_dict().items()})
        out.update(self.meta)
        return out

    def write_csv(self, path, header=()):
        from .wave import write_fields

        write_fields(path, {"quantum": self.quantum, "classical": self.classical}, list(header))

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def make_oracle(problem, oracle="dilation"):
    if oracle == "dilation":
        return dilation_oracle(problem)
    if oracle == "structured":
        return structured_oracle(problem)
    raise ValueError(f"unknown oracle {oracle!r}")


def encoded_kappa(problem, normalization):
    """1 / s_min of the block ``A / normalization``.

    The inverse polynomial is accurate on ``[1/kappa_qsvt, 1]``; it covers
    every singular value of the encoded block when kappa_qsvt is at least
    this value.  It exceeds kappa(A) by the factor ``1 / s_max(A/nu)``.
    """
    A, _ = build_matrix(problem)
    return float(1.0 / np.min(singular_values(A / normalization)))


def invert_apply(problem, phases, oracle="dilation", method="average", encoding=None):
    """Solve A x = b with the inverse phases and compare to Gauss-Jordan."""
    enc = encoding if encoding is not None else make_oracle(problem, oracle)
    lay = solver_layout(enc)
    counter = QueryCounter()
    out, p0 = real_polynomial_action(enc, phases, prepare_b(lay), method, dagger=True,
                                     counter=counter)
    cond = [(q, 0) for q in lay.qubits(*[n for n, _ in enc.ancilla], "q")]
    psi = out.register_amplitudes(["r_j", "r_d"], cond)
    scale = np.sqrt(p0) * phases.beta_sc * phases.kappa_qsvt
    x_norm = psi * scale
    classical = classical_solve(problem)
    errors = compare_solutions(classical.psi * enc.normalization, x_norm)
    A, _ = build_matrix(problem)
    kappa = condition_number(A / enc.normalization)
    runs = 2 if method == "average" else 1
    return SolutionRecord(psi, FieldSolution.from_psi(x_norm / enc.normalization), classical,
                          p0, phases.beta_sc, phases.kappa_qsvt, phases.eps_qsvt,
                          enc.normalization, phases.n_pol, counter.calls // runs, kappa,
                          errors, enc.name,
                          {"kappa_enc": encoded_kappa(problem, enc.normalization)})
