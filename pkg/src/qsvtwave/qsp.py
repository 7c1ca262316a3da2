"""Phase factors for quantum signal processing.

Conventions
-----------
The scalar building block is ``W(x) = [[x, i sqrt(1-x^2)], [i sqrt(1-x^2), x]]``
and a phase vector ``phi_0..phi_d`` realizes

    U(x) = e^{i phi_0 Z} W(x) e^{i phi_1 Z} ... W(x) e^{i phi_d Z},

with ``p(x) = U(x)[0, 0]``.  All-zero phases give ``p = T_d``.  The solver
fits ``Re p`` to a target Chebyshev series of definite parity using
symmetric phases ``phi_k = phi_{d-k}`` so that only ``ceil((d+1)/2)``
parameters are free.

The QSVT engine works with reflection-type oracles
``R(x) = [[x, sqrt(1-x^2)], [sqrt(1-x^2), -x]]`` and needs shifted phases;
:meth:`PhaseVector.qsvt_angles` converts between the two conventions.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .cheb import ChebSeries, TargetFunction, _num, eval_cheb, inverse_target, truncate_to_eps
from .errors import DomainError, NoConvergence


@dataclass(frozen=True)
class PhaseVector:
    """QSP phases in the W convention plus the metadata of their target."""

    phases: np.ndarray
    parity: str
    kappa_qsvt: float = float("nan")
    eps_qsvt: float = float("nan")
    beta_sc: float = 1.0
    residual: float = float("nan")
    iterations: int = 0

    @property
    def n_pol(self):
        return len(self.phases) - 1

    def qsvt_angles(self):
        """Projector-rotation angles for reflection-type block encodings.

        Substituting ``W = i e^{-i pi/4 Z} R e^{-i pi/4 Z}`` gives
        ``phi'_0 = phi_0 - pi/4 + d pi/2``, ``phi'_k = phi_k - pi/2`` for
        interior k and ``phi'_d = phi_d - pi/4``; the first shift absorbs the
        global factor ``i^d``.
        """
        phi = np.array(self.phases, dtype=float)
        d = len(phi) - 1
        if d == 0:
            return phi
        out = phi - np.pi / 2
        out[0] = phi[0] - np.pi / 4 + d * np.pi / 2
        out[-1] = phi[-1] - np.pi / 4
        return out

    def negated(self):
        return PhaseVector(-np.asarray(self.phases), self.parity, self.kappa_qsvt,
                           self.eps_qsvt, self.beta_sc, self.residual, self.iterations)


def _phases_array(phases):
    return np.asarray(phases.phases if isinstance(phases, PhaseVector) else phases, dtype=float)


def qsp_eval(phases, x):
    """Top-left entry of the W-convention QSP product (vectorized over x)."""
    phi = _phases_array(phases)
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) > 1.0):
        raise DomainError("QSP signal must lie in [-1, 1]")
    flat = np.atleast_1d(xs).ravel()
    sq = np.sqrt(1.0 - flat * flat)
    # track the first row (r0, r1) of the running product
    r0 = np.exp(1j * phi[0]) * np.ones_like(flat, dtype=complex)
    r1 = np.zeros_like(flat, dtype=complex)
    for p in phi[1:]:
        r0, r1 = flat * r0 + 1j * sq * r1, 1j * sq * r0 + flat * r1
        r0, r1 = r0 * np.exp(1j * p), r1 * np.exp(-1j * p)
    out = r0.reshape(np.shape(xs))
    return complex(out) if np.ndim(xs) == 0 else out


def qsp_matrix(phases, x):
    """Full 2x2 QSP unitary at a scalar x (used in property tests)."""
    phi = _phases_array(phases)
    s = math.sqrt(1.0 - x * x)
    W = np.array([[x, 1j * s], [1j * s, x]])
    U = np.diag([np.exp(1j * phi[0]), np.exp(-1j * phi[0])])
    for p in phi[1:]:
        U = U @ W @ np.diag([np.exp(1j * p), np.exp(-1j * p)])
    return U


def full_from_reduced(theta, degree):
    theta = np.asarray(theta, dtype=float)
    if degree % 2 == 1:
        return np.concatenate([theta, theta[::-1]])
    return np.concatenate([theta, theta[-2::-1]])


def reduced_count(degree):
    return (degree + 2) // 2


def chebyshev_nodes(degree):
    """Positive Chebyshev nodes cos((2j-1) pi / (4 d~)), j = 1..d~."""
    dt = reduced_count(degree)
    j = np.arange(1, dt + 1)
    return np.cos((2 * j - 1) * np.pi / (4 * dt))


@njit(cache=True)
def _sym_kernel(theta, xs, odd, want_jac, vals, jac):
    m = theta.shape[0] - 1
    pre0 = np.empty(m + 1, dtype=np.complex128)
    pre1 = np.empty(m + 1, dtype=np.complex128)
    e = np.empty(m + 1, dtype=np.complex128)
    for k in range(m + 1):
        e[k] = complex(math.cos(theta[k]), math.sin(theta[k]))
    for j in range(xs.shape[0]):
        x = xs[j]
        s = math.sqrt(max(0.0, 1.0 - x * x))
        is_ = 1j * s
        r0 = 1.0 + 0.0j
        r1 = 0.0 + 0.0j
        if odd:
            for k in range(m + 1):
                pre0[k] = r0
                pre1[k] = r1
                r0 = r0 * e[k]
                r1 = r1 * e[k].conjugate()
                if k < m:
                    r0, r1 = x * r0 + is_ * r1, is_ * r0 + x * r1
            v0 = x * r0 + is_ * r1
            v1 = is_ * r0 + x * r1
            vals[j] = (r0 * v0 + r1 * v1).real
            if want_jac:
                w0 = v0
                w1 = v1
                for k in range(m, -1, -1):
                    d = 1j * (pre0[k] * e[k] * w0 - pre1[k] * e[k].conjugate() * w1)
                    jac[j, k] = 2.0 * d.real
                    w0 = e[k] * w0
                    w1 = e[k].conjugate() * w1
                    if k > 0:
                        w0, w1 = x * w0 + is_ * w1, is_ * w0 + x * w1
        else:
            for k in range(m):
                pre0[k] = r0
                pre1[k] = r1
                r0 = r0 * e[k]
                r1 = r1 * e[k].conjugate()
                r0, r1 = x * r0 + is_ * r1, is_ * r0 + x * r1
            em = e[m]
            vals[j] = (r0 * r0 * em + r1 * r1 * em.conjugate()).real
            if want_jac:
                jac[j, m] = (1j * (r0 * r0 * em - r1 * r1 * em.conjugate())).real
                w0 = r0 * em
                w1 = r1 * em.conjugate()
                for k in range(m - 1, -1, -1):
                    w0, w1 = x * w0 + is_ * w1, is_ * w0 + x * w1
                    d = 1j * (pre0[k] * e[k] * w0 - pre1[k] * e[k].conjugate() * w1)
                    jac[j, k] = 2.0 * d.real
                    w0 = e[k] * w0
                    w1 = e[k].conjugate() * w1


class _SymmetricProblem:
    """Residuals Re p(x_j) - f(x_j) over the reduced symmetric phases."""

    def __init__(self, degree, target_values, xs):
        self.degree = degree
        self.odd = degree % 2 == 1
        self.xs = np.ascontiguousarray(xs, dtype=float)
        self.f = np.asarray(target_values, dtype=float)
        self.n = reduced_count(degree)
        self._jac = None

    def values(self, theta):
        vals = np.empty(self.xs.shape[0])
        _sym_kernel(np.ascontiguousarray(theta, dtype=float), self.xs, self.odd, False,
                    vals, np.empty((1, 1)))
        return vals

    def values_and_jacobian(self, theta):
        vals = np.empty(self.xs.shape[0])
        if self._jac is None:
            self._jac = np.empty((self.xs.shape[0], self.n))
        _sym_kernel(np.ascontiguousarray(theta, dtype=float), self.xs, self.odd, True,
                    vals, self._jac)
        return vals, self._jac

    def residual(self, theta):
        return self.values(theta) - self.f

    def objective(self, theta):
        """Mean-square residual over the nodes and its gradient."""
        vals, jac = self.values_and_jacobian(theta)
        r = vals - self.f
        return float(r @ r) / self.n, (2.0 / self.n) * (jac.T @ r)


def initial_reduced(degree):
    theta = np.zeros(reduced_count(degree))
    theta[0] = np.pi / 4
    return theta


def objective_and_gradient(series, theta):
    """Objective and analytic gradient at reduced phases (for gradient checks)."""
    deg = series.degree
    xs = chebyshev_nodes(deg)
    prob = _SymmetricProblem(deg, eval_cheb(series, xs), xs)
    return prob.objective(theta)


def finite_difference_gradient(series, theta, step=1e-6):
    deg = series.degree
    xs = chebyshev_nodes(deg)
    prob = _SymmetricProblem(deg, eval_cheb(series, xs), xs)
    g = np.empty(len(theta))
    for k in range(len(theta)):
        tp, tm = np.array(theta, dtype=float), np.array(theta, dtype=float)
        tp[k] += step
        tm[k] -= step
        rp, rm = prob.residual(tp), prob.residual(tm)
        g[k] = (rp @ rp - rm @ rm) / (2 * step * prob.n)
    return g


def _series_parity(series):
    c = series.coeffs
    deg = series.degree
    if series.parity in ("odd", "even"):
        return series.parity
    if np.all(np.abs(c[(deg + 1) % 2::2]) <= 1e-12):
        return "odd" if deg % 2 else "even"
    raise ValueError("target series must have definite parity")


def solve_phases(target, tol=1e-10, max_iter=None, method="auto"):
    """Fit symmetric QSP phases so that Re p matches ``target`` on the nodes.

    ``method`` selects the optimizer:

    * ``"newton"``: Newton iteration on the square system
      ``Re p(x_j) = f(x_j)`` (as many nodes as free phases), with the
      analytic Jacobian and step halving.
    * ``"lbfgs"``: quasi-Newton minimization of the mean-square node
      residual with the analytic gradient, followed by Newton polishing
      if the L-BFGS result is not yet within ``tol``.
    * ``"auto"``: Newton first; on failure restart with ``"lbfgs"``.

    Raises :class:`NoConvergence` (with ``best`` set) when the node residual
    stays above ``tol``.
    """
    if not isinstance(target, ChebSeries):
        target = ChebSeries(np.asarray(target, dtype=float))
    parity = _series_parity(target)
    deg = target.degree
    xs = chebyshev_nodes(deg)
    fvals = eval_cheb(target, xs)
    if np.max(np.abs(fvals)) > 1.0:
        raise ValueError("target exceeds 1 in modulus on the nodes")
    if max_iter is None:
        max_iter = 50 * max(deg, 1)
    if deg == 0:
        phi = np.array([math.acos(float(target.coeffs[0]))])
        res = abs(math.cos(phi[0]) - float(target.coeffs[0]))
        return PhaseVector(phi, parity, eps_qsvt=target.eps, residual=res)
    prob = _SymmetricProblem(deg, fvals, xs)
    theta0 = initial_reduced(deg)
    best, best_res, iterations = theta0, float(np.max(np.abs(prob.residual(theta0)))), 0
    if method in ("newton", "auto"):
        theta, res, its = _newton(prob, theta0, tol, max_iter=min(max_iter, 100))
        iterations += its
        if res < best_res:
            best, best_res = theta, res
    if best_res > tol and method in ("lbfgs", "auto"):
        out = minimize(prob.objective, theta0, jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iter, "ftol": 0.0, "gtol": 1e-15,
                                "maxcor": 30})
        iterations += int(out.nit)
        theta, res, its = _newton(prob, out.x, tol, max_iter=min(max_iter, 100))
        iterations += its
        if res < best_res:
            best, best_res = theta, res
    result = PhaseVector(full_from_reduced(best, deg), parity, eps_qsvt=target.eps,
                         residual=best_res, iterations=iterations)
    if best_res > tol:
        raise NoConvergence(f"phase residual {best_res:.3e} above tolerance {tol:.1e}", best=result)
    return result


def _newton(prob, theta, tol, max_iter):
    """Damped Newton iteration on the square system Re p(x_j) = f(x_j)."""
    theta = np.array(theta, dtype=float)
    vals, jac = prob.values_and_jacobian(theta)
    r = vals - prob.f
    res = float(np.max(np.abs(r)))
    its = 0
    while res > tol and its < max_iter:
        its += 1
        step = np.linalg.solve(jac, r)
        lam = 1.0
        while True:
            trial = theta - lam * step
            r_trial = prob.residual(trial)
            res_trial = float(np.max(np.abs(r_trial)))
            if res_trial < res or lam < 1e-3:
                break
            lam *= 0.5
        if res_trial >= res:
            break
        theta = trial
        if res_trial <= tol:
            res = res_trial
            break
        vals, jac = prob.values_and_jacobian(theta)
        r = vals - prob.f
        res = float(np.max(np.abs(r)))
    return theta, res, its


def inverse_phases(kappa, eps, tol=1e-10, cap=20000, method="auto"):
    """Phases for the scaled regularized inverse with metadata filled in."""
    series, beta_sc = inverse_target(kappa, eps, cap=cap)
    pv = solve_phases(series, tol=tol, method=method)
    return PhaseVector(pv.phases, "odd", float(kappa), float(eps), beta_sc, pv.residual,
                       pv.iterations)


def gaussian_phases(mu, beta_sc, eps, tol=1e-10, x_c=0.0, method="auto"):
    series = truncate_to_eps(TargetFunction.gaussian(mu, beta_sc, x_c), eps)
    pv = solve_phases(series, tol=tol, method=method)
    return PhaseVector(pv.phases, "even", float("nan"), float(eps), beta_sc, pv.residual,
                       pv.iterations), series


def phase_count_scan(kappas, epses, solve=False, tol=1e-10):
    """N_pol over a (kappa, eps) grid plus log-log and log-linear fits.

    With ``solve=True`` the phases are computed too and their residuals
    reported; otherwise only the series truncation is performed.
    """
    rows = []
    for kappa in kappas:
        for eps in epses:
            series, beta = inverse_target(kappa, eps)
            row = {"kappa": float(kappa), "eps": float(eps), "n_pol": series.degree,
                   "beta_sc": beta}
            if solve:
                row["residual"] = solve_phases(series, tol=tol).residual
            rows.append(row)
    return rows, scan_fits(rows)


def scan_fits(rows):
    """Power-law exponent of N_pol in kappa and R^2 of N_pol against ln(1/eps)."""
    fits = {}
    epses = sorted({r["eps"] for r in rows})
    kappas = sorted({r["kappa"] for r in rows})
    if len(kappas) >= 2:
        eps0 = epses[len(epses) // 2] if len(epses) > 1 else epses[0]
        sel = [r for r in rows if r["eps"] == eps0]
        lk = np.log([r["kappa"] for r in sel])
        ln = np.log([r["n_pol"] for r in sel])
        fits["kappa_exponent"] = float(np.polyfit(lk, ln, 1)[0])
        fits["kappa_exponent_eps"] = eps0
    if len(epses) >= 3:
        k0 = kappas[0]
        sel = [r for r in rows if r["kappa"] == k0]
        x = np.log([1.0 / r["eps"] for r in sel])
        y = np.array([r["n_pol"] for r in sel], dtype=float)
        slope, icpt = np.polyfit(x, y, 1)
        pred = slope * x + icpt
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        fits["log_eps_slope"] = float(slope)
        fits["log_eps_r2"] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        fits["log_eps_kappa"] = k0
    return fits


def write_phases(path, pv, extra=None):
    head = {"parity": pv.parity, "kappa_qsvt": pv.kappa_qsvt, "eps_qsvt": pv.eps_qsvt,
            "beta_sc": pv.beta_sc, "residual": pv.residual, "n_pol": pv.n_pol}
    head.update(extra or {})
    lines = [f"# {k}={v}" if isinstance(v, str) else f"# {k}={_num(v)!r}" for k, v in head.items()]
    lines.append("k,phi_k")
    lines += [f"{k},{p!r}" for k, p in enumerate(np.asarray(pv.phases, dtype=float).tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_phases(path):
    meta, vals = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line and not line.startswith("k,"):
                vals.append(float(line.split(",")[1]))

    def num(key, default=math.nan):
        return float(meta[key]) if key in meta else default

    return PhaseVector(np.array(vals), meta.get("parity", "odd"), num("kappa_qsvt"),
                       num("eps_qsvt"), num("beta_sc", 1.0), num("residual"))
