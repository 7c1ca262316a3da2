"""Statevector simulator with named registers and multi-controlled gates.

Qubit 0 is the least significant bit of the flat amplitude index.  A
register occupies a contiguous block of qubits, its own bit 0 being the
lowest qubit of the block, so a register value is read as
``sum_i bit_i 2^i``.  Registers are declared from the least significant
upward.

Gates carry explicit control polarities: a control ``(q, 0)`` fires when
qubit ``q`` is in ``|0>``.  Multi-controlled gates act directly on the
statevector by slicing, without decomposition.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import CapExceeded, LayoutMismatch, ZeroProbability

DEFAULT_QUBIT_CAP = 24


@dataclass(frozen=True)
class Register:
    name: str
    offset: int
    size: int

    @property
    def qubits(self):
        return tuple(range(self.offset, self.offset + self.size))


class RegisterLayout:
    """Named registers stacked from the least significant qubit upward."""

    def __init__(self, registers, cap=DEFAULT_QUBIT_CAP):
        regs, offset, names = [], 0, set()
        for name, size in registers:
            if name in names:
                raise LayoutMismatch(f"duplicate register name {name!r}")
            if size < 1:
                raise LayoutMismatch(f"register {name!r} needs at least one qubit")
            names.add(name)
            regs.append(Register(name, offset, int(size)))
            offset += int(size)
        if offset > cap:
            raise CapExceeded(f"layout needs {offset} qubits, cap is {cap}")
        self.registers = tuple(regs)
        self.n_qubits = offset
        self._by_name = {r.name: r for r in regs}

    def __contains__(self, name):
        return name in self._by_name

    def __getitem__(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise LayoutMismatch(f"no register named {name!r}") from None

    def qubits(self, *names):
        out = []
        for name in names:
            out.extend(self[name].qubits)
        return out

    def qubit(self, name, bit=0):
        reg = self[name]
        if not 0 <= bit < reg.size:
            raise IndexError(f"bit {bit} outside register {name!r}")
        return reg.offset + bit

    def index_of(self, **values):
        """Flat basis index with the given register values (others zero)."""
        idx = 0
        for name, v in values.items():
            reg = self[name]
            if not 0 <= v < 2**reg.size:
                raise ValueError(f"value {v} does not fit register {name!r}")
            idx |= int(v) << reg.offset
        return idx

    def values_of(self, index):
        return {r.name: (index >> r.offset) & ((1 << r.size) - 1) for r in self.registers}

    def describe(self):
        return [(r.name, r.size) for r in self.registers]


_SINGLE = {
    "X": lambda: np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": lambda: np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": lambda: np.array([[1, 0], [0, -1]], dtype=complex),
    "H": lambda: np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0),
}


def rx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def phase(theta):
    return np.diag([1.0, np.exp(1j * theta)])


def rc(theta1, theta2):
    """Combined rotation Ry(theta2) Rz(theta1)."""
    return ry(theta2) @ rz(theta1)


@dataclass(frozen=True)
class Gate:
    """One operation: ``kind`` on ``targets`` with ``controls`` ((qubit, polarity), ...)."""

    kind: str
    targets: tuple
    controls: tuple = ()
    params: tuple = ()
    matrix: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        tq = set(self.targets)
        cq = {q for q, _ in self.controls}
        if len(tq) != len(self.targets) or tq & cq or len(cq) != len(self.controls):
            raise ValueError("targets and controls must be distinct qubits")
        for _, pol in self.controls:
            if pol not in (0, 1):
                raise ValueError("control polarity must be 0 or 1")

    def unitary(self):
        """Matrix acting on the targets (first target = least significant)."""
        k = self.kind
        if k in _SINGLE:
            return _SINGLE[k]()
        if k == "RX":
            return rx(self.params[0])
        if k == "RY":
            return ry(self.params[0])
        if k == "RZ":
            return rz(self.params[0])
        if k == "P":
            return phase(self.params[0])
        if k == "RC":
            return rc(self.params[0], self.params[1])
        if k == "SWAP":
            m = np.eye(4, dtype=complex)
            m[[1, 2]] = m[[2, 1]]
            return m
        if k == "U":
            return np.asarray(self.matrix, dtype=complex)
        raise ValueError(f"unknown gate kind {k!r}")

    def adjoint(self):
        k = self.kind
        if k in ("X", "Y", "Z", "H", "SWAP"):
            return self
        if k in ("RX", "RY", "RZ", "P"):
            return Gate(k, self.targets, self.controls, (-self.params[0],))
        if k == "RC":
            return Gate("U", self.targets, self.controls, (), self.unitary().conj().T)
        return Gate("U", self.targets, self.controls, (), self.unitary().conj().T)

    def transpose(self):
        """Gate whose matrix is the transpose of this one (controls unchanged)."""
        k = self.kind
        if k in ("X", "Z", "H", "SWAP", "RX", "RZ", "P"):
            return self
        if k == "Y":
            return Gate("U", self.targets, self.controls, (), self.unitary().T)
        if k == "RY":
            return Gate("RY", self.targets, self.controls, (-self.params[0],))
        return Gate("U", self.targets, self.controls, (), self.unitary().T)

    def with_controls(self, extra):
        return Gate(self.kind, self.targets, tuple(self.controls) + tuple(extra), self.params,
                    self.matrix)

    def text(self):
        ctl = " ".join(f"{q}{'+' if p else '-'}" for q, p in self.controls)
        par = " ".join(repr(float(p)) for p in self.params)
        if self.kind == "U":
            par = " ".join(f"{z.real!r}{z.imag:+}j" for z in np.asarray(self.matrix, dtype=complex).ravel().tolist())
        tg = " ".join(str(t) for t in self.targets)
        return f"{self.kind} {tg} | {ctl} | {par}"


class Circuit:
    """Ordered list of gates on ``n_qubits`` qubits with small builder helpers."""

    def __init__(self, n_qubits, gates=None):
        self.n_qubits = n_qubits
        self.gates = list(gates or [])

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def append(self, gate):
        for q in list(gate.targets) + [q for q, _ in gate.controls]:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} outside circuit of {self.n_qubits} qubits")
        self.gates.append(gate)
        return self

    def extend(self, other):
        for g in other:
            self.append(g)
        return self

    def add(self, kind, targets, controls=(), params=(), matrix=None):
        if isinstance(targets, int):
            targets = (targets,)
        return self.append(Gate(kind, tuple(targets), tuple(controls), tuple(params), matrix))

    def adjoint(self):
        return Circuit(self.n_qubits, [g.adjoint() for g in reversed(self.gates)])

    def transpose(self):
        return Circuit(self.n_qubits, [g.transpose() for g in reversed(self.gates)])

    def controlled(self, controls):
        return Circuit(self.n_qubits, [g.with_controls(controls) for g in self.gates])

    def counts(self):
        out = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return dict(sorted(out.items()))

    def dump(self):
        return "\n".join(g.text() for g in self.gates) + ("\n" if self.gates else "")

    def to_matrix(self):
        """Dense unitary obtained by running the circuit on every basis state."""
        n = self.n_qubits
        # all basis columns at once: the column index lives on n extra
        # high qubits that no gate touches
        batch = np.eye(2**n, dtype=complex).ravel()
        for g in self.gates:
            apply_gate_array(batch, 2 * n, g)
        return batch.reshape(2**n, 2**n).T


def _axis(n, q):
    return n - 1 - q


@njit(cache=True)
def _kernel_1q(amps, t, mask, value, u00, u01, u10, u11):
    bit = 1 << t
    for i in range(amps.shape[0]):
        if i & bit or (i & mask) != value:
            continue
        j = i | bit
        a0 = amps[i]
        a1 = amps[j]
        amps[i] = u00 * a0 + u01 * a1
        amps[j] = u10 * a0 + u11 * a1


def apply_gate_array(amps, n, gate):
    """Apply ``gate`` in place to a flat amplitude array of ``n`` qubits."""
    if n >= 12 and len(gate.targets) == 1 and gate.kind != "SWAP" and amps.flags.c_contiguous:
        mask = value = 0
        for q, pol in gate.controls:
            mask |= 1 << q
            value |= pol << q
        U = gate.unitary().astype(complex)
        _kernel_1q(amps.reshape(-1), gate.targets[0], mask, value, U[0, 0], U[0, 1], U[1, 0], U[1, 1])
        return amps
    a = amps.reshape((2,) * n)
    base = [slice(None)] * n
    for q, pol in gate.controls:
        base[_axis(n, q)] = pol
    if gate.kind == "SWAP":
        t0, t1 = gate.targets
        i01 = list(base)
        i10 = list(base)
        i01[_axis(n, t0)], i01[_axis(n, t1)] = 1, 0
        i10[_axis(n, t0)], i10[_axis(n, t1)] = 0, 1
        tmp = a[tuple(i01)].copy()
        a[tuple(i01)] = a[tuple(i10)]
        a[tuple(i10)] = tmp
        return amps
    if len(gate.targets) == 1:
        U = gate.unitary()
        t = _axis(n, gate.targets[0])
        i0 = list(base)
        i1 = list(base)
        i0[t], i1[t] = 0, 1
        i0, i1 = tuple(i0), tuple(i1)
        if gate.kind == "X":
            tmp = a[i0].copy()
            a[i0] = a[i1]
            a[i1] = tmp
            return amps
        if U[0, 1] == 0 and U[1, 0] == 0:
            if U[0, 0] != 1:
                a[i0] = U[0, 0] * a[i0]
            if U[1, 1] != 1:
                a[i1] = U[1, 1] * a[i1]
            return amps
        a0, a1 = a[i0], a[i1]
        n0 = U[0, 0] * a0 + U[0, 1] * a1
        n1 = U[1, 0] * a0 + U[1, 1] * a1
        a[i0] = n0
        a[i1] = n1
        return amps
    apply_matrix_array(amps, n, gate.unitary(), gate.targets, gate.controls)
    return amps


def apply_matrix_array(amps, n, U, targets, controls=()):
    """Apply a dense unitary on ``targets`` (first = least significant) in place."""
    k = len(targets)
    a = amps.reshape((2,) * n)
    base = [slice(None)] * n
    for q, pol in controls:
        base[_axis(n, q)] = pol
    sub = a[tuple(base)]
    # axes of sub: the remaining (uncontrolled) qubits in descending order
    remaining = [q for q in range(n - 1, -1, -1) if q not in {c for c, _ in controls}]
    # matrix index bit i corresponds to targets[i]; big-endian axis order is
    # targets[k-1], ..., targets[0]
    tgt_axes = [remaining.index(q) for q in reversed(targets)]
    moved = np.moveaxis(sub, tgt_axes, list(range(k)))
    shape = moved.shape
    flat = moved.reshape(2**k, -1)
    new = (np.asarray(U, dtype=complex) @ flat).reshape(shape)
    sub[...] = np.moveaxis(new, list(range(k)), tgt_axes)
    return amps


class QuantumState:
    """Statevector over a :class:`RegisterLayout`."""

    def __init__(self, layout, amps=None, normalized=True):
        self.layout = layout
        dim = 2**layout.n_qubits
        if amps is None:
            amps = np.zeros(dim, dtype=complex)
            amps[0] = 1.0
        amps = np.array(amps, dtype=complex)
        if amps.shape != (dim,):
            raise LayoutMismatch("amplitude vector does not match the layout")
        self.amps = amps
        self.normalized = normalized

    @classmethod
    def basis(cls, layout, **values):
        st = cls(layout, np.zeros(2**layout.n_qubits, dtype=complex))
        st.amps[layout.index_of(**values)] = 1.0
        return st

    @classmethod
    def from_register_amplitudes(cls, layout, names, vector, normalize=True):
        """State with ``vector`` loaded into the joint register ``names`` (rest zero).

        The first name is the least significant part of the joint index.
        """
        vector = np.asarray(vector, dtype=complex)
        qubits = layout.qubits(*names)
        if vector.shape != (2 ** len(qubits),):
            raise LayoutMismatch("vector length does not match the registers")
        if normalize:
            norm = np.linalg.norm(vector)
            if norm == 0:
                raise ZeroProbability("cannot load a zero vector")
            vector = vector / norm
        st = cls(layout, np.zeros(2**layout.n_qubits, dtype=complex), normalized=normalize)
        idx = np.zeros(len(vector), dtype=np.int64)
        for bit, q in enumerate(qubits):
            idx |= ((np.arange(len(vector)) >> bit) & 1) << q
        st.amps[idx] = vector
        return st

    @property
    def n_qubits(self):
        return self.layout.n_qubits

    def copy(self):
        return QuantumState(self.layout, self.amps.copy(), self.normalized)

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def apply(self, gate):
        for q in list(gate.targets) + [q for q, _ in gate.controls]:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} outside state of {self.n_qubits} qubits")
        apply_gate_array(self.amps, self.n_qubits, gate)
        return self

    def run(self, circuit):
        if circuit.n_qubits != self.n_qubits:
            raise LayoutMismatch("circuit and state have different qubit counts")
        for g in circuit:
            apply_gate_array(self.amps, self.n_qubits, g)
        return self

    def apply_matrix(self, U, qubits, controls=()):
        apply_matrix_array(self.amps, self.n_qubits, U, list(qubits), controls)
        return self

    def _mask(self, conditions):
        idx = np.arange(len(self.amps))
        keep = np.ones(len(self.amps), dtype=bool)
        for q, v in conditions:
            keep &= ((idx >> q) & 1) == v
        return keep

    def probability(self, conditions):
        keep = self._mask(conditions)
        return float(np.sum(np.abs(self.amps[keep]) ** 2))

    def register_conditions(self, **values):
        cond = []
        for name, v in values.items():
            reg = self.layout[name]
            cond += [(reg.offset + i, (v >> i) & 1) for i in range(reg.size)]
        return cond

    def register_amplitudes(self, names, conditions=()):
        """Amplitudes of the joint register ``names`` on the branch fixed by
        ``conditions``; every other qubit must be fixed by ``conditions``."""
        qubits = self.layout.qubits(*names)
        fixed = dict(conditions)
        if set(fixed) | set(qubits) != set(range(self.n_qubits)):
            raise LayoutMismatch("conditions must fix every qubit outside the registers")
        base = 0
        for q, v in fixed.items():
            base |= v << q
        k = np.arange(2 ** len(qubits))
        idx = np.full(len(k), base, dtype=np.int64)
        for bit, q in enumerate(qubits):
            idx |= ((k >> bit) & 1) << q
        return self.amps[idx].copy()

    def register_probabilities(self, name):
        reg = self.layout[name]
        vals = (np.arange(len(self.amps)) >> reg.offset) & ((1 << reg.size) - 1)
        return np.bincount(vals, weights=np.abs(self.amps) ** 2, minlength=2**reg.size)


def project_and_renormalize(state, conditions):
    """Post-select on ``conditions`` [(qubit, value), ...].

    Returns the normalized conditional state and the probability of the
    branch.  Raises :class:`ZeroProbability` for branches below 1e-30.
    """
    keep = state._mask(conditions)
    p = float(np.sum(np.abs(state.amps[keep]) ** 2))
    if p < 1e-30:
        raise ZeroProbability("projection onto a branch of vanishing probability")
    amps = np.where(keep, state.amps, 0.0) / math.sqrt(p)
    return QuantumState(state.layout, amps), p


def write_statevector(path, state):
    lines = ["index,re,im"] + [f"{i},{z.real!r},{z.imag!r}" for i, z in enumerate(state.amps.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
