"""Chebyshev-series approximation of the QSVT target functions.

Coefficients come from the trigonometric sum over points ``-cos(j pi/N_q)``,
evaluated with an FFT.  Series are evaluated with the Clenshaw recurrence.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, DomainError, NonRealCoefficient

N_CERTIFY = 2001
DEFAULT_CAP = 20000


def _num(v):
    """Plain Python scalar so that repr() round-trips without numpy wrappers."""
    return v.item() if isinstance(v, np.generic) else v


@dataclass(frozen=True)
class TargetFunction:
    """A real function on [-1, 1] with known parity.

    Use the constructors :meth:`reg_inverse`, :meth:`gaussian` or
    :meth:`from_callable` rather than building instances directly.
    """

    kind: str
    params: dict
    parity: str
    fn: object = field(repr=False, compare=False, default=None)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "reg_inverse":
            kappa = self.params["kappa"]
            out = np.empty_like(s)
            small = np.abs(s * kappa) < 1e-4
            ss = s[~small]
            out[~small] = -np.expm1(-((5.0 * ss * kappa) ** 2)) / ss
            # series of (1 - exp(-a^2 s^2))/s near zero
            a2 = (5.0 * kappa) ** 2
            out[small] = a2 * s[small] * (1.0 - 0.5 * a2 * s[small] ** 2)
            return out
        if self.kind == "gaussian":
            mu, beta = self.params["mu"], self.params["beta_sc"]
            x = np.arcsin(np.clip(s, -1.0, 1.0))
            return beta * np.exp(-(x**2) / (2.0 * mu**2))
        return np.asarray(self.fn(s), dtype=float)

    @classmethod
    def reg_inverse(cls, kappa):
        """(1 - exp(-(5 s kappa)^2)) / s, an odd surrogate for 1/s."""
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        return cls("reg_inverse", {"kappa": float(kappa)}, "odd")

    @classmethod
    def gaussian(cls, mu, beta_sc=1.0, x_c=0.0):
        """beta_sc * exp(-arcsin(s)^2 / (2 mu^2)), even in s.

        ``x_c`` is carried as metadata: the centre shift enters through the
        sine encoding of the grid, not through the polynomial itself.
        """
        if mu <= 0:
            raise ValueError("mu must be positive")
        return cls("gaussian", {"mu": float(mu), "beta_sc": float(beta_sc), "x_c": float(x_c)}, "even")

    @classmethod
    def from_callable(cls, fn, parity="none", name="custom"):
        if parity not in ("odd", "even", "none"):
            raise ValueError("parity must be odd, even or none")
        return cls(name, {}, parity, fn)

    def domain_samples(self, n=N_CERTIFY):
        """Uniform certification points on the valid domain."""
        if self.kind == "reg_inverse":
            lo = 1.0 / self.params["kappa"]
            if lo >= 1.0:
                return np.array([-1.0, 1.0])
            half = n // 2
            pos = np.linspace(lo, 1.0, n - half)
            return np.concatenate([-pos[::-1][: half], pos])
        return np.linspace(-1.0, 1.0, n)


@dataclass(frozen=True)
class ChebSeries:
    """sum_k coeffs[k] T_k(s) with a parity tag and the error it was built for."""

    coeffs: np.ndarray
    parity: str = "none"
    eps: float = 0.0
    kind: str = "custom"
    max_error: float = float("nan")

    @property
    def degree(self):
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if nz.size else 0

    def __call__(self, s):
        return eval_cheb(self, s)

    def scaled(self, factor):
        return ChebSeries(self.coeffs * factor, self.parity, self.eps * abs(factor), self.kind,
                          self.max_error * abs(factor))


def fourier_cheb_coeffs(f, n_c, n_q=None):
    """Coefficients c_0..c_{n_c} of f from 2*n_q samples at -cos(j pi / n_q).

    c_k = ((2 - delta_k0) / (2 n_q)) (-1)^k sum_j f(-cos(j pi/n_q)) exp(i k j pi/n_q).
    """
    if n_q is None:
        n_q = n_c
    if n_c < 0 or n_q < max(n_c, 1):
        raise ValueError("need n_q >= n_c >= 0")
    j = np.arange(2 * n_q)
    samples = f(-np.cos(j * np.pi / n_q))
    # sum_j v_j exp(+2 pi i k j / (2 n_q)) equals 2 n_q * ifft(v)[k]
    raw = np.fft.ifft(samples)[: n_c + 1]
    k = np.arange(n_c + 1)
    c = np.where(k == 0, 1.0, 2.0) * np.where(k % 2 == 0, 1.0, -1.0) * raw
    if np.max(np.abs(c.imag), initial=0.0) > 1e-8:
        raise NonRealCoefficient("sample set is not symmetric; imaginary coefficients found")
    c = c.real.copy()
    parity = getattr(f, "parity", "none")
    if parity == "odd":
        c[0::2] = 0.0
    elif parity == "even":
        c[1::2] = 0.0
    return ChebSeries(c, parity, 0.0, getattr(f, "kind", "custom"))


def eval_cheb(series, s):
    """Clenshaw evaluation; |s| may exceed 1 only by 1e-12."""
    c = series.coeffs if isinstance(series, ChebSeries) else np.asarray(series, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if np.any(np.abs(s_arr) > 1.0 + 1e-12):
        raise DomainError("Chebyshev series evaluated outside [-1, 1]")
    b1 = np.zeros_like(s_arr)
    b2 = np.zeros_like(s_arr)
    two_s = 2.0 * s_arr
    for ck in c[:0:-1]:
        b1, b2 = ck + two_s * b1 - b2, b1
    out = c[0] + s_arr * b1 - b2 if len(c) else np.zeros_like(s_arr)
    return float(out) if np.ndim(out) == 0 else out


def _max_error(f, coeffs, xs, fx):
    return float(np.max(np.abs(eval_cheb(coeffs, xs) - fx)))


def truncate_to_eps(f, eps, cap=DEFAULT_CAP, oversample=2):
    """Smallest expansion order whose sampled error on the domain is <= eps.

    The order is bracketed by doubling and then located by bisection on
    truncations of one accurate coefficient vector.  Coefficients are taken
    with ``n_q = oversample * N`` points to suppress aliasing.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    xs = f.domain_samples()
    fx = f(xs)

    def coeffs(n):
        return fourier_cheb_coeffs(f, n, max(oversample * n, 16)).coeffs

    hi = 1
    while True:
        c_hi = coeffs(hi)
        if _max_error(f, c_hi, xs, fx) <= eps:
            break
        if hi >= cap:
            raise BudgetExceeded(f"expansion order would exceed cap {cap}")
        hi = min(2 * hi, cap)
    lo = hi // 2
    if lo >= 1 and _max_error(f, coeffs(lo), xs, fx) <= eps:
        hi, c_hi = lo, coeffs(lo)
        lo = 0
    # invariant: truncation at hi passes, at lo fails (or lo == 0 unchecked)
    if lo == 0 and hi > 0 and _max_error(f, c_hi[:1], xs, fx) <= eps:
        hi = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _max_error(f, c_hi[: mid + 1], xs, fx) <= eps:
            hi = mid
        else:
            lo = mid
    c = c_hi[: hi + 1].copy()
    err = _max_error(f, c, xs, fx)
    series = ChebSeries(c, f.parity, float(eps), f.kind, err)
    return ChebSeries(c[: series.degree + 1], f.parity, float(eps), f.kind, err)


def inverse_target(kappa, eps, cap=DEFAULT_CAP, peak=0.99, n_peak=20001):
    """Scaled inverse series handed to the phase solver.

    Returns ``(series, beta_sc)`` where ``series = P_f / (beta_sc * kappa)`` and
    ``beta_sc`` is chosen so that max |series| on [-1, 1] equals ``peak``.
    """
    f = TargetFunction.reg_inverse(kappa)
    raw = truncate_to_eps(f, eps, cap=cap)
    # the series is odd, so |P| on [0, 1] suffices; include Chebyshev extrema
    grid = np.unique(np.concatenate([np.linspace(0.0, 1.0, n_peak),
                                     np.cos(np.pi * np.arange(raw.degree + 1) / max(raw.degree, 1))]))
    grid = grid[grid >= 0.0]
    peak_raw = float(np.max(np.abs(eval_cheb(raw, grid))))
    beta_sc = peak_raw / (peak * kappa)
    return raw.scaled(1.0 / (beta_sc * kappa)), beta_sc


def write_series(path, series, extra=None):
    head = {"parity": series.parity, "eps": series.eps, "kind": series.kind,
            "max_error": series.max_error}
    head.update(extra or {})
    lines = [f"# {k}={_num(v)!r}" if not isinstance(v, str) else f"# {k}={v}" for k, v in head.items()]
    lines.append("k,c_k")
    lines += [f"{k},{c!r}" for k, c in enumerate(series.coeffs.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_series(path):
    meta, rows = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line and not line.startswith("k,"):
                rows.append(float(line.split(",")[1]))
    def num(key, default):
        return float(meta[key]) if key in meta else default
    return ChebSeries(np.array(rows), meta.get("parity", "none"), num("eps", 0.0),
                      meta.get("kind", "custom"), num("max_error", math.nan))
