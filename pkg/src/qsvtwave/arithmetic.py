"""Reversible integer arithmetic on qubit lists.

Every builder appends gates to a :class:`~qsvtwave.circuit.Circuit` and
takes registers as lists of qubit indices, least significant first.  Extra
``controls`` ((qubit, polarity), ...) are attached to every emitted gate,
which makes the whole block controlled.

Constant and register subtraction follow the Draper construction: a QFT on
the target extended by its sign qubit, phase rotations encoding the
subtrahend, and an inverse QFT.  The result is the two's-complement
difference; with ``absolute=True`` it is then folded to ``|k - l|`` with
the sign kept in the extra qubit.
"""

import math

from .circuit import Gate


def _c(controls):
    return tuple(controls)


def increment(circ, qubits, controls=()):
    """|k> -> |k + 1 mod 2^n> using a cascade of multi-controlled X gates."""
    qubits = list(qubits)
    for i in range(len(qubits) - 1, -1, -1):
        ctl = tuple((q, 1) for q in qubits[:i]) + _c(controls)
        circ.append(Gate("X", (qubits[i],), ctl))
    return circ


def decrement(circ, qubits, controls=()):
    """|k> -> |k - 1 mod 2^n>; the increment cascade in reverse order."""
    qubits = list(qubits)
    for i in range(len(qubits)):
        ctl = tuple((q, 1) for q in qubits[:i]) + _c(controls)
        circ.append(Gate("X", (qubits[i],), ctl))
    return circ


def qft(circ, qubits, inverse=False, controls=()):
    """Quantum Fourier transform |j> -> sum_k e^{2 pi i jk/N} |k> / sqrt(N)."""
    qubits = list(qubits)
    n = len(qubits)
    ctl = _c(controls)
    ops = []
    for i in range(n - 1, -1, -1):
        ops.append(Gate("H", (qubits[i],), ctl))
        for j in range(i - 1, -1, -1):
            angle = math.pi / 2 ** (i - j)
            ops.append(Gate("P", (qubits[i],), ((qubits[j], 1),) + ctl, (angle,)))
    for i in range(n // 2):
        ops.append(Gate("SWAP", (qubits[i], qubits[n - 1 - i]), ctl))
    if inverse:
        ops = [g.adjoint() for g in reversed(ops)]
    for g in ops:
        circ.append(g)
    return circ


def _phase_add(circ, qubits, k, controls=()):
    """Phase rotations adding the integer k in the Fourier basis of ``qubits``."""
    n = len(qubits)
    N = 2**n
    for j, q in enumerate(qubits):
        angle = 2 * math.pi * ((k * 2**j) % N) / N
        if angle % (2 * math.pi) != 0:
            circ.append(Gate("P", (q,), _c(controls), (angle,)))
    return circ


def add_const(circ, qubits, k, controls=()):
    """|j> -> |j + k mod 2^n>."""
    qubits = list(qubits)
    qft(circ, qubits, controls=controls)
    _phase_add(circ, qubits, k, controls)
    qft(circ, qubits, inverse=True, controls=controls)
    return circ


def _fold_absolute(circ, target, sign, controls=()):
    """Two's-complement negative values -> magnitude, sign qubit kept."""
    ctl = ((sign, 1),) + _c(controls)
    for q in target:
        circ.append(Gate("X", (q,), ctl))
    increment(circ, target, ctl)
    return circ


def subtract_const(circ, target, sign, k_sub, controls=(), absolute=True):
    """|k>|0>_sign -> ||k - k_sub|>|k < k_sub>.

    With ``absolute=False`` the extended register (target + sign) holds the
    two's-complement value of ``k - k_sub`` instead.
    """
    ext = list(target) + [sign]
    qft(circ, ext, controls=controls)
    _phase_add(circ, ext, -k_sub, controls)
    qft(circ, ext, inverse=True, controls=controls)
    if absolute:
        _fold_absolute(circ, list(target), sign, controls)
    return circ


def compare_const(circ, target, sign, com, k_com, controls=()):
    """Flip ``com`` iff k_com > k; target and the scratch sign qubit restored."""
    sub = type(circ)(circ.n_qubits)
    subtract_const(sub, target, sign, k_com, controls)
    circ.extend(sub)
    circ.append(Gate("X", (com,), ((sign, 1),) + _c(controls)))
    circ.extend(sub.adjoint())
    return circ


def subtract_register(circ, target, sign, subtrahend, controls=(), absolute=True):
    """|k>_t|0>_sign|l>_s -> ||k - l|>_t|k < l>_sign|l>_s.

    The subtrahend enters through phase gates controlled by its qubits.
    With ``absolute=False`` the two's-complement difference is kept.
    """
    ext = list(target) + [sign]
    N = 2 ** len(ext)
    qft(circ, ext, controls=controls)
    for b, sq in enumerate(subtrahend):
        for j, q in enumerate(ext):
            angle = -2 * math.pi * ((2**b * 2**j) % N) / N
            if angle % (2 * math.pi) != 0:
                circ.append(Gate("P", (q,), ((sq, 1),) + _c(controls), (angle,)))
    qft(circ, ext, inverse=True, controls=controls)
    if absolute:
        _fold_absolute(circ, list(target), sign, controls)
    return circ
