"""One-dimensional electromagnetic boundary-value problem on staggered grids.

The unknown vector stacks the electric field E_j (indices 0..N_x-1) and the
magnetic field B_j (indices N_x..2N_x-1).  The E grid is x_j = j*dx with
dx = 1/N_x on the unit domain; B_j lives half a cell to the right of E_j, so
the half cell is h = dx/2 and the difference coefficient is sigma = 1/(2h).
The permittivity is eps0 on the left half and eps1 on the right half, and a
unit source drives the right boundary.
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import condition_number, gauss_jordan_solve


@dataclass(frozen=True)
class WaveProblem:
    n_x: int
    omega: float
    eps0: float = 1.0
    eps1: float = 1.0
    q0: float = 1.0

    def __post_init__(self):
        if self.n_x < 2:
            raise ValueError("n_x must be at least 2")
        if self.omega <= 0 or self.eps0 <= 0 or self.eps1 <= 0:
            raise ValueError("omega and permittivities must be positive")

    @property
    def N_x(self):
        return 2**self.n_x

    @property
    def M_x(self):
        return self.N_x // 2

    @property
    def dx(self):
        return 1.0 / self.N_x

    @property
    def h(self):
        return 0.5 * self.dx

    @property
    def sigma(self):
        return 1.0 / (2.0 * self.h)

    @property
    def eta_plus(self):
        return 1j * self.omega + 1.0 / self.h

    @property
    def eta_minus(self):
        return 1j * self.omega - 1.0 / self.h

    def eps_at(self, j):
        return self.eps0 if j < self.M_x else self.eps1

    def x_e(self):
        return np.arange(self.N_x) * self.dx

    def x_b(self):
        return self.x_e() + self.h

    @classmethod
    def from_case(cls, n_x, lx_kx0, eps0=1.0, eps1=1.0):
        return cls(n_x, frequency_from_case(lx_kx0, eps0), eps0, eps1)


def frequency_from_case(lx_kx0, eps0=1.0):
    """omega = (L_x k_x0) / sqrt(eps0) on the unit-length domain."""
    if lx_kx0 <= 0 or eps0 <= 0:
        raise ValueError("inputs must be positive")
    return lx_kx0 / math.sqrt(eps0)


def build_matrix(problem):
    """Return (A, b) for the discretized problem.

    Row 0 is the outgoing condition at the left edge, rows 1..N_x-1 the
    Ampere equation, rows N_x..2N_x-2 the Faraday equation and row 2N_x-1
    the driven outgoing condition at the right edge.
    """
    p = problem
    N = p.N_x
    A = np.zeros((2 * N, 2 * N), dtype=complex)
    s = p.sigma
    A[0, 0] = p.eta_plus
    A[0, 1] = p.eta_minus
    for k in range(1, N):
        A[k, k] = 1j * p.omega * p.eps_at(k)
        A[k, N + k] = s
        A[k, N + k - 1] = -s
    for j in range(N - 1):
        A[N + j, j] = -s
        A[N + j, j + 1] = s
        A[N + j, N + j] = 1j * p.omega
    A[2 * N - 1, 2 * N - 2] = p.eta_minus
    A[2 * N - 1, 2 * N - 1] = p.eta_plus
    b = np.zeros(2 * N, dtype=complex)
    b[2 * N - 1] = p.q0
    return A, b


@dataclass(frozen=True)
class FieldSolution:
    E: np.ndarray
    B: np.ndarray

    @property
    def psi(self):
        return np.concatenate([self.E, self.B])

    @classmethod
    def from_psi(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        n = len(psi) // 2
        return cls(psi[:n].copy(), psi[n:].copy())


def classical_solve(problem):
    A, b = build_matrix(problem)
    return FieldSolution.from_psi(gauss_jordan_solve(A, b))


def residuals(problem, sol):
    """Max residuals of the discrete equations for a field solution."""
    p = problem
    E, B = sol.E, sol.B
    N = p.N_x
    eps = np.array([p.eps_at(j) for j in range(N)])
    ampere = 1j * p.omega * eps[1:] * E[1:] + p.sigma * (B[1:] - B[:-1])
    faraday = 1j * p.omega * B[:-1] + p.sigma * (E[1:] - E[:-1])
    left = p.eta_plus * E[0] + p.eta_minus * E[1]
    right = p.eta_minus * B[N - 2] + p.eta_plus * B[N - 1] - p.q0
    return {"ampere": float(np.max(np.abs(ampere))), "faraday": float(np.max(np.abs(faraday))),
            "left": float(abs(left)), "right": float(abs(right))}


def condition(problem):
    A, _ = build_matrix(problem)
    return condition_number(A)


def align_phase(reference, vector):
    """Multiply ``vector`` by the unit phase matching ``reference`` at the
    reference's largest-modulus entry."""
    reference = np.asarray(reference)
    vector = np.asarray(vector)
    i = int(np.argmax(np.abs(reference)))
    if vector[i] == 0:
        return vector.copy()
    ph = (reference[i] / abs(reference[i])) / (vector[i] / abs(vector[i]))
    return vector * ph


@dataclass(frozen=True)
class ErrorReport:
    max_abs: float
    l2: float
    fidelity: float

    def as_dict(self):
        return {"max_abs": self.max_abs, "l2": self.l2, "fidelity": self.fidelity}


def compare_solutions(classical, quantum):
    """Errors of ``quantum`` against ``classical`` after phase alignment.

    Accepts :class:`FieldSolution` objects or plain vectors.
    """
    c = classical.psi if isinstance(classical, FieldSolution) else np.asarray(classical)
    q = quantum.psi if isinstance(quantum, FieldSolution) else np.asarray(quantum)
    if c.shape != q.shape:
        raise ValueError("solutions live on different grids")
    qa = align_phase(c, q)
    diff = qa - c
    nc, nq = np.linalg.norm(c), np.linalg.norm(q)
    fid = float(abs(np.vdot(c, q)) ** 2 / (nc**2 * nq**2)) if nc > 0 and nq > 0 else 0.0
    return ErrorReport(float(np.max(np.abs(diff))), float(np.linalg.norm(diff)), fid)


def write_fields(path, rows, header=None):
    """CSV with j, Re/Im E and B for each named solution in ``rows``.

    ``rows`` maps a label (e.g. 'quantum') to a :class:`FieldSolution`.
    """
    labels = list(rows)
    cols = ["j"]
    for lab in labels:
        cols += [f"re_E_{lab}", f"im_E_{lab}", f"re_B_{lab}", f"im_B_{lab}"]
    lines = [f"# {line}" for line in (header or [])] + [",".join(cols)]
    n = len(rows[labels[0]].E)
    for j in range(n):
        vals = [str(j)]
        for lab in labels:
            s = rows[lab]
            vals += [repr(float(s.E[j].real)), repr(float(s.E[j].imag)),
                     repr(float(s.B[j].real)), repr(float(s.B[j].imag))]
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
