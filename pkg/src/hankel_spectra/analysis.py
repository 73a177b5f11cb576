"""Functionals of computed spectra, constants, and tail fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .hankel_op import build_section
from .kernel import CKernel, KernelSeq
from .spectra import SingularSpectrum, dense_svd

__all__ = [
    "InsufficientDataError",
    "Functionals",
    "PowerFit",
    "WidomFit",
    "HSCheck",
    "InterpCheck",
    "lgamma",
    "log_beta",
    "v_alpha",
    "m_alpha",
    "spectrum_functionals",
    "hs_crosscheck",
    "hs_continuous",
    "fit_power",
    "fit_widom",
    "widom_target",
    "interp_bound_check",
]


class InsufficientDataError(ValueError):
    """Too few trusted singular values for the requested fit."""


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def lgamma(x: float) -> float:
    """``log Gamma(x)`` for ``x > 0`` by the Lanczos approximation."""
    if x <= 0:
        raise ValueError("lgamma is implemented for positive arguments only")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - lgamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def log_beta(a: float, b: float) -> float:
    return lgamma(a) + lgamma(b) - lgamma(a + b)


def v_alpha(alpha: float) -> float:
    """Leading constant of ``s_n ~ v(alpha) n^-alpha`` for the log model.

    ``v(alpha) = 2^-alpha pi^(1-2 alpha) B(1/(2 alpha), 1/2)^alpha``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    log_v = (-alpha * math.log(2.0) + (1.0 - 2.0 * alpha) * math.log(math.pi)
             + alpha * log_beta(1.0 / (2.0 * alpha), 0.5))
    return math.exp(log_v)


def m_alpha(alpha: float) -> int:
    """Number of difference conditions needed for exponent ``alpha``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return 0 if alpha < 0.5 else int(math.floor(alpha)) + 1


# ---------------------------------------------------------------------------
# spectrum functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Functionals:
    p: float
    schatten_sum: float
    weak_norm: float
    argmax: int
    at_edge: bool
    count: int


def _trusted(sp: SingularSpectrum, converged_only: bool):
    s = np.asarray(sp.s, dtype=float)
    if converged_only:
        mask = np.asarray(sp.converged, dtype=bool)
        # only the leading run of trusted values counts as a prefix
        stop = int(np.argmin(mask)) if not mask.all() else mask.size
        return s[:stop]
    return s


def spectrum_functionals(sp: SingularSpectrum, p: float,
                         converged_only: bool = True) -> Functionals:
    """``sum s_n^p`` and ``sup_n n^(1/p) s_n`` over the trusted prefix.

    ``at_edge`` is set when the supremum sits at the last index, in which case
    it is not an interior maximum and says little about the infinite operator.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    s = _trusted(sp, converged_only)
    if s.size == 0:
        raise InsufficientDataError("no trusted singular values")
    n = np.arange(1, s.size + 1, dtype=float)
    weak = n ** (1.0 / p) * s
    idx = int(np.argmax(weak))
    return Functionals(float(p), float(np.sum(s ** p)), float(weak[idx]), idx + 1,
                       idx == s.size - 1, int(s.size))


# ---------------------------------------------------------------------------
# Hilbert-Schmidt checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HSCheck:
    frobenius_sq: float
    weighted_sum: float
    limit_proxy: float

    @property
    def rel_gap(self) -> float:
        return abs(self.frobenius_sq - self.weighted_sum) / max(self.weighted_sum, 1e-300)


def hs_crosscheck(k: KernelSeq, N: int) -> HSCheck:
    """Frobenius norm of the section against the antidiagonal count.

    Antidiagonal ``d`` of an ``N x N`` array holds ``min(d+1, 2N-1-d)`` entries,
    so the first two numbers agree up to rounding.
    """
    section = build_section(k, N)
    dense = section.to_dense()
    frob = float(np.sum(np.abs(dense) ** 2))
    d = np.arange(2 * N - 1)
    mag2 = np.abs(section.c) ** 2
    weighted = float(np.sum(mag2 * np.minimum(d + 1, 2 * N - 1 - d)))
    proxy = float(np.sum(mag2 * (d + 1)))
    return HSCheck(frob, weighted, proxy)


def hs_continuous(k: CKernel) -> float:
    """``int_0^inf t |h(t)|^2 dt`` by adaptive quadrature."""
    def integrand(t):
        return t * abs(complex(k(np.array([t]))[0])) ** 2

    head, _ = scipy.integrate.quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-14, epsrel=1e-12)
    tail, _ = scipy.integrate.quad(integrand, 1.0, np.inf, limit=200, epsabs=1e-14, epsrel=1e-12)
    return head + tail


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerFit:
    alpha_hat: float
    v_hat: float
    window: tuple
    rms: float
    count: int
    median_scaled: float | None = None
    target_alpha: float | None = None


def _window_values(sp: SingularSpectrum, window, converged_only=True):
    n_min, n_max = window
    n = np.arange(1, sp.k + 1)
    mask = (n >= n_min) & (n <= n_max) & (np.asarray(sp.s) > 0)
    if converged_only:
        mask &= np.asarray(sp.converged, dtype=bool)
    return n[mask].astype(float), np.asarray(sp.s, dtype=float)[mask]


def fit_power(sp: SingularSpectrum, window=(30, 120), alpha: float | None = None,
              converged_only: bool = True) -> PowerFit:
    """Least squares for ``log s_n = log v - alpha log n`` over ``window``.

    With a target ``alpha`` the median of ``n^alpha s_n`` over the window is
    reported as well; that statistic is what the asymptotic checks compare.
    """
    n, s = _window_values(sp, window, converged_only)
    if n.size < 8:
        raise InsufficientDataError(
            f"{n.size} trusted values in window {tuple(window)}; at least 8 required")
    X = np.column_stack([np.ones_like(n), np.log(n)])
    y = np.log(s)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    median = float(np.median(n ** alpha * s)) if alpha is not None else None
    return PowerFit(float(-coef[1]), float(math.exp(coef[0])), tuple(window),
                    float(np.sqrt(np.mean(resid ** 2))), int(n.size), median,
                    None if alpha is None else float(alpha))


def widom_target(gamma: float) -> float:
    """Slope of ``log s_n`` against ``sqrt(n)`` predicted for ``h(j) = (j+1)^-gamma``."""
    return -math.pi * math.sqrt(2.0 * gamma)


@dataclass(frozen=True)
class WidomFit:
    status: str
    gamma: float
    target: float
    slope: float | None = None
    intercept: float | None = None
    rel_deviation: float | None = None
    count: int = 0


WIDOM_MIN_VALUE = 1e-7


def fit_widom(sp: SingularSpectrum, gamma: float, min_value: float = WIDOM_MIN_VALUE,
              converged_only: bool = True) -> WidomFit:
    """Fit ``log s_n`` linearly in ``sqrt(n)``; inconclusive below four usable points."""
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    s = np.asarray(sp.s, dtype=float)
    n = np.arange(1, s.size + 1, dtype=float)
    mask = s >= min_value
    if converged_only:
        mask &= np.asarray(sp.converged, dtype=bool)
    target = widom_target(gamma)
    if mask.sum() < 4:
        return WidomFit("inconclusive", float(gamma), target, count=int(mask.sum()))
    slope, intercept = np.polyfit(np.sqrt(n[mask]), np.log(s[mask]), 1)
    return WidomFit("ok", float(gamma), target, float(slope), float(intercept),
                    float(abs(slope - target) / abs(target)), int(mask.sum()))


# ---------------------------------------------------------------------------
# S_p inequality with constant pi^(p-2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InterpCheck:
    p: float
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9 * self.rhs


def interp_bound_check(k: KernelSeq, N: int, p: float) -> InterpCheck:
    """Compare ``sum s_n^p`` of the section with ``pi^(p-2) sum (d+1)^(p-1) |h(d)|^p``.

    The right side uses the antidiagonals ``d <= 2N-2`` only; the section is a
    compression of the Hankel operator of that truncated sequence, so the
    inequality must hold at every ``N``.
    """
    if p < 2:
        raise ValueError("the inequality is stated for p >= 2")
    if N > 4096:
        raise ValueError("interp_bound_check uses a dense spectrum (N <= 4096)")
    section = build_section(k, N)
    s = dense_svd(section).s
    d = np.arange(2 * N - 1, dtype=float)
    with np.errstate(over="raise"):
        try:
            rhs = math.pi ** (p - 2) * float(np.sum((d + 1) ** (p - 1) * np.abs(section.c) ** p))
        except FloatingPointError as exc:
            raise OverflowError("right-hand side overflows") from exc
    if not math.isfinite(rhs):
        raise OverflowError("right-hand side overflows")
    return InterpCheck(float(p), float(np.sum(s ** p)), rhs)
