"""Dense complex linear algebra used as the classical reference.

Everything works on plain ``numpy`` arrays of dtype ``complex128``.  The
two workhorses are a Gauss-Jordan solver with partial pivoting and a
one-sided (Hestenes) Jacobi SVD, which implicitly diagonalizes ``A^H A``
and keeps small singular values accurate.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularMatrix

PIVOT_THRESHOLD = 1e-14


def as_matrix(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("expected a non-empty 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def max_norm(A):
    """Largest row sum of entry moduli."""
    A = np.asarray(A)
    return float(np.max(np.sum(np.abs(A), axis=1)))


def gauss_jordan_solve(A, b):
    """Solve ``A x = b`` by Gauss-Jordan elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.  A pivot whose
    modulus is below ``1e-14`` times the largest entry of ``A`` raises
    :class:`SingularMatrix`.
    """
    A = as_matrix(A)
    n, m = A.shape
    if n != m:
        raise ValueError("matrix must be square")
    b = np.asarray(b, dtype=complex)
    vector = b.ndim == 1
    B = b.reshape(n, -1).copy() if vector else b.copy()
    if B.shape[0] != n:
        raise ValueError("right-hand side length does not match the matrix")
    M = np.concatenate([A.copy(), B], axis=1)
    scale = np.max(np.abs(A))
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(M[col:, col])))
        if abs(M[pivot, col]) < PIVOT_THRESHOLD * scale:
            raise SingularMatrix(f"pivot column {col} is numerically zero")
        if pivot != col:
            M[[col, pivot]] = M[[pivot, col]]
        M[col] /= M[col, col]
        factors = M[:, col].copy()
        factors[col] = 0.0
        M -= np.outer(factors, M[col])
    x = M[:, n:]
    return x[:, 0] if vector else x


def inverse(A):
    A = as_matrix(A)
    return gauss_jordan_solve(A, np.eye(A.shape[0], dtype=complex))


@dataclass(frozen=True)
class SvdResult:
    """``A = u_left @ diag(singulars) @ u_right^H`` with descending singulars."""

    u_left: np.ndarray
    singulars: np.ndarray
    u_right: np.ndarray

    def reconstruct(self):
        return (self.u_left * self.singulars) @ self.u_right.conj().T


def _round_robin(n):
    """Pairings for a parallel Jacobi sweep (n even): n-1 rounds of n/2 pairs."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        rounds.append((np.array(players[:half]), np.array(players[::-1][:half])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _complete_basis(U, k):
    """Replace columns k.. of U by an orthonormal completion of the first k."""
    m, n = U.shape
    if k == n:
        return U
    Q, _ = np.linalg.qr(np.concatenate([U[:, :k], np.eye(m, dtype=complex)], axis=1))
    out = U.copy()
    out[:, k:] = Q[:, k:n]
    return out


def svd(A, max_sweeps=100, tol=1e-15):
    """Singular value decomposition by one-sided Jacobi rotations.

    Columns of a working copy ``G = A V`` are orthogonalized pairwise in a
    round-robin order until every pair satisfies
    ``|g_p^H g_q| <= tol * |g_p| |g_q|``.  Raises :class:`NoConvergence`
    after ``max_sweeps`` sweeps.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        r = svd(A.conj().T, max_sweeps=max_sweeps, tol=tol)
        return SvdResult(r.u_right, r.singulars, r.u_left)
    n_pad = n + (n % 2)
    G = np.zeros((m, n_pad), dtype=complex)
    G[:, :n] = A
    V = np.eye(n_pad, dtype=complex)
    rounds = _round_robin(n_pad) if n_pad > 1 else []
    for sweep in range(max_sweeps):
        worst = 0.0
        for P, Q in rounds:
            gp, gq = G[:, P], G[:, Q]
            alpha = np.sum(np.abs(gp) ** 2, axis=0)
            beta = np.sum(np.abs(gq) ** 2, axis=0)
            gamma = np.sum(gp.conj() * gq, axis=0)
            mod = np.abs(gamma)
            denom = np.sqrt(alpha * beta)
            active = mod > tol * denom
            if not np.any(active):
                continue
            ratio = np.where(denom > 0, mod / np.where(denom > 0, denom, 1.0), 0.0)
            worst = max(worst, float(np.max(ratio)))
            safe = np.where(active, mod, 1.0)
            zeta = (beta - alpha) / (2.0 * safe)
            sign = np.where(zeta >= 0, 1.0, -1.0)
            t = sign / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            phase = np.where(active, gamma / safe, 1.0)
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            vp, vq = V[:, P], V[:, Q]
            gq_rot = gq * phase.conj()
            vq_rot = vq * phase.conj()
            G[:, P] = c * gp - s * gq_rot
            G[:, Q] = s * gp + c * gq_rot
            V[:, P] = c * vp - s * vq_rot
            V[:, Q] = s * vp + c * vq_rot
        if worst <= tol:
            break
    else:
        raise NoConvergence(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
    G, V = G[:, :n], V[:n, :n]
    sing = np.sqrt(np.sum(np.abs(G) ** 2, axis=0))
    order = np.argsort(-sing, kind="stable")
    sing, G, V = sing[order], G[:, order], V[:, order]
    # Columns that collapsed to (numerically) zero carry no direction; their
    # left singular vectors are completed to an orthonormal basis instead.
    k = int(np.sum(sing > 1e-13 * sing[0])) if sing[0] > 0 else 0
    U = np.zeros((m, n), dtype=complex)
    U[:, :k] = G[:, :k] / sing[:k]
    U = _complete_basis(U, k)
    return SvdResult(U, sing, V)


def singular_values(A):
    return svd(A).singulars


def condition_number(A, threshold=1e-14):
    s = singular_values(A)
    if s[-1] <= threshold * s[0]:
        raise SingularMatrix("smallest singular value below threshold")
    return float(s[0] / s[-1])


def pseudoinverse_via_svt(A, threshold=1e-12):
    """Apply p(s) = 1/s to the singular values of A^H: returns U_R S^-1 U_L^H."""
    r = svd(A)
    if r.singulars[-1] <= threshold:
        raise SingularMatrix("smallest singular value below threshold")
    return (r.u_right / r.singulars) @ r.u_left.conj().T


def write_matrix(path, A):
    """Plain text: 'rows cols' header, then one 're im' pair per line row-major."""
    A = np.asarray(A, dtype=complex)
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines += [f"{z.real!r} {z.imag!r}" for z in A.ravel().tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path):
    with open(path) as fh:
        rows, cols = (int(v) for v in fh.readline().split())
        vals = np.loadtxt(fh, ndmin=2)
    if vals.shape != (rows * cols, 2):
        raise ValueError("matrix file has the wrong number of entries")
    return (vals[:, 0] + 1j * vals[:, 1]).reshape(rows, cols)
