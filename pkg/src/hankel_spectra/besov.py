"""Dyadic windows, windowed symbols, and Besov-type functionals.

Discrete kernels are localised to dyadic blocks ``2^(n-1) < j < 2^(n+1)`` and
turned into trigonometric polynomials sampled on the circle; continuous
kernels are localised to ``[2^(n-1), 2^(n+1)]`` and Fourier transformed on a
line grid.  The functionals are Riemann sums over those samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.integrate

from .hankel_op import fft_workers
from .kernel import CKernel, KernelSeq, smooth_step

__all__ = [
    "DyadicWindow",
    "WindowedSymbol",
    "SymbolValues",
    "BesovResult",
    "WeakBesovResult",
    "build_window",
    "symbol_eval",
    "windowed_symbol_disc",
    "windowed_transform_cont",
    "besov_sum",
    "weak_besov",
    "window_l1_bound_disc",
    "window_l1_bound_cont",
    "OVERSAMPLING",
]

#: samples per unit of polynomial degree on the circle
OVERSAMPLING = 8
#: half-width of the continuous grid in the scaled variable 2^n x
X_SCALED_MAX = 1024.0


class DyadicWindow:
    """Smooth partition of unity over dyadic scales.

    ``psi`` is a bump on ``[-1, 1]`` with ``psi(0) = 1`` and integer
    translates summing to one; ``w(t) = psi(log2 t)`` is supported on
    ``[1/2, 2]``.
    """

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return smooth_step(1.0 - np.abs(x))

    def w(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        pos = (t > 0.5) & (t < 2.0)
        out[pos] = self.psi(np.log2(t[pos]))
        return out

    def w_cont(self, t, n: int):
        return self.w(np.asarray(t, dtype=float) / 2.0 ** n)

    def w_disc(self, j, n: int):
        """Discrete window: ``w_0 = 1`` on ``{0, 1}``, ``w_n(j) = w(j / 2^n)`` for ``n >= 1``."""
        j = np.asarray(j)
        if n == 0:
            return ((j >= 0) & (j <= 1)).astype(float)
        return self.w(j / 2.0 ** n)

    @staticmethod
    def support_disc(n: int) -> np.ndarray:
        if n == 0:
            return np.arange(2)
        return np.arange(2 ** (n - 1) + 1, 2 ** (n + 1))


def build_window() -> DyadicWindow:
    return DyadicWindow()


_WINDOW = DyadicWindow()


@dataclass(frozen=True)
class WindowedSymbol:
    """Samples of a windowed symbol on its grid.

    For discrete kernels ``grid`` holds angles on ``[0, 2 pi)`` and
    ``weights`` the arc length per sample; for continuous kernels ``grid`` is
    a uniform ``x`` grid with trapezoid weights.  The continuous variant also
    carries a power-tail model ``tail_C |x|^-tail_order`` beyond the grid.
    """

    n: int
    kind: str
    grid: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    tail_C: float = 0.0
    tail_order: float = math.inf
    fitted_order: float = math.inf
    tail_ok: bool = True

    def lp_integral(self, p: float) -> float:
        """``int |samples|^p`` including the analytic tail when it converges."""
        total = float(np.sum(self.weights * np.abs(self.samples) ** p))
        return total + self.tail_integral(p)

    def tail_integral(self, p: float) -> float:
        if self.kind != "continuous" or self.tail_C == 0.0 or not self.tail_ok:
            return 0.0
        q = self.tail_order * p
        if q <= 1:
            return 0.0
        x_max = float(np.max(np.abs(self.grid)))
        return 2.0 * self.tail_C ** p * x_max ** (1.0 - q) / (q - 1.0)

    def tail_measure(self, s):
        """Measure of ``{|x| > x_max : tail(x) > s}``."""
        s = np.asarray(s, dtype=float)
        if self.kind != "continuous" or self.tail_C == 0.0 or not self.tail_ok:
            return np.zeros(s.shape)
        x_max = float(np.max(np.abs(self.grid)))
        with np.errstate(divide="ignore"):
            reach = (self.tail_C / s) ** (1.0 / self.tail_order)
        return 2.0 * np.maximum(reach - x_max, 0.0)


@dataclass(frozen=True)
class SymbolValues:
    angles: np.ndarray
    values: np.ndarray
    last_term: float


def symbol_eval(k: KernelSeq, angles, J: int) -> SymbolValues:
    """Partial sums ``sum_{j <= J} h(j) e^(i j theta)``."""
    if J < 1:
        raise ValueError("J must be at least 1")
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    j = np.arange(J + 1)
    h = k(j)
    out = np.empty(angles.shape, dtype=complex)
    for i, theta in enumerate(angles):
        out[i] = np.sum(h * np.exp(1j * theta * j))
    return SymbolValues(angles, out, float(abs(h[-1])))


def windowed_symbol_disc(k: KernelSeq, n: int, M: int | None = None) -> WindowedSymbol:
    """Samples of ``sum_j w_n(j) h(j) mu^j`` at ``M`` uniform angles."""
    if n < 0:
        raise ValueError("block index must be non-negative")
    need = OVERSAMPLING * 2 ** (n + 1)
    if M is None:
        M = need
    if M < need:
        raise ValueError(f"M={M} below the oversampling rule M >= {need}")
    js = DyadicWindow.support_disc(n)
    coef = np.zeros(M, dtype=complex)
    coef[js] = _WINDOW.w_disc(js, n) * k(js)
    # sum_j a_j exp(+2 pi i j m / M) is M times the inverse transform
    samples = scipy.fft.ifft(coef, workers=fft_workers()) * M
    angles = 2.0 * np.pi * np.arange(M) / M
    weights = np.full(M, 2.0 * np.pi / M)
    return WindowedSymbol(n, "discrete", angles, samples, weights)


def _panel_nodes(lo, hi, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * x).ravel(), (half * w).ravel()


def _window_quadrature(y_max: float, order: int):
    # composite Gauss-Legendre in u = t / 2^n with a panel break at u = 1,
    # about four oscillations of exp(i y u) per 32-point panel
    per_panel = 32
    total = max(order, int(math.ceil(y_max * 1.5 / (2 * math.pi) / 4)) * per_panel)
    left = max(2, int(math.ceil(total / per_panel / 3)))
    right = max(4, 2 * left)
    u1, w1 = _panel_nodes(0.5, 1.0, left, per_panel)
    u2, w2 = _panel_nodes(1.0, 2.0, right, per_panel)
    return np.concatenate([u1, u2]), np.concatenate([w1, w2])


def windowed_transform_cont(k: CKernel, n: int, x_max: float | None = None,
                            x_count: int = 2049, order: int = 128,
                            m_tail: float | None = None) -> WindowedSymbol:
    """``int h(t) w_n(t) e^(i x t) dt`` on a symmetric grid in ``x``.

    The default grid reaches ``|x| = 1024 / 2^n``.  A power tail
    ``C |x|^-m_tail`` is matched to the outermost grid values; the fitted
    decay order of the edge is reported separately.  ``tail_ok`` is False
    when the edge does not decay.
    """
    if x_count < 256:
        raise ValueError("x_count must be at least 256")
    if order < 128:
        raise ValueError("quadrature order must be at least 128")
    scale = 2.0 ** n
    if x_max is None:
        x_max = X_SCALED_MAX / scale
    if x_count % 2 == 0:
        x_count += 1
    x = np.linspace(-x_max, x_max, x_count)
    u, wq = _window_quadrature(x_max * scale, order)
    weights_u = wq * _WINDOW.w(u) * scale * k(scale * u)
    samples = np.empty(x_count, dtype=complex)
    for start in range(0, x_count, 256):
        xs = x[start:start + 256]
        samples[start:start + 256] = np.exp(1j * scale * np.outer(xs, u)) @ weights_u
    dx = x[1] - x[0]
    trap = np.full(x_count, dx)
    trap[0] = trap[-1] = dx / 2

    mag = np.abs(samples)
    peak = float(mag.max()) if mag.size else 0.0
    half = x_count // 2
    pos_x, pos_m = x[half + 1:], mag[half + 1:]
    neg_m = mag[:half][::-1]
    env = np.maximum(pos_m, neg_m)
    fitted, tail_ok, tail_C, order_used = _fit_tail(pos_x, env, peak, m_tail)
    return WindowedSymbol(n, "continuous", x, samples, trap, tail_C, order_used,
                          fitted, tail_ok)


def _fit_tail(x, env, peak, m_tail):
    # fit on block maxima of the outer half of the grid
    outer = x >= x[-1] / 2
    xs, es = x[outer], env[outer]
    blocks = 16
    idx = np.array_split(np.arange(xs.size), blocks)
    bx = np.array([xs[i].mean() for i in idx if i.size])
    be = np.array([es[i].max() for i in idx if i.size])
    noise = 1e-13 * max(peak, 1e-300)
    edge = float(es[-max(1, xs.size // 20):].max())
    if np.all(be <= noise):
        fitted = math.inf
    else:
        good = be > noise
        if good.sum() >= 2:
            slope = np.polyfit(np.log(bx[good]), np.log(be[good]), 1)[0]
            fitted = float(-slope)
        else:
            fitted = math.inf
    tail_ok = fitted > 0
    order_used = m_tail if m_tail is not None else (fitted if math.isfinite(fitted) else 2.0)
    order_used = float(max(order_used, 1e-3))
    tail_C = edge * x[-1] ** order_used if tail_ok and edge > noise else 0.0
    if not tail_ok:
        warnings.warn("windowed transform does not decay at the grid edge; "
                      "norms use the grid only", RuntimeWarning, stacklevel=3)
    return fitted, tail_ok, tail_C, order_used


def window_l1_bound_disc(k: KernelSeq, n: int) -> float:
    """``sum_{j=2^(n-1)}^{2^(n+1)} |h(j)|`` (for ``n = 0`` the terms ``j <= 2``)."""
    lo = 0 if n == 0 else 2 ** (n - 1)
    j = np.arange(lo, 2 ** (n + 1) + 1)
    return float(np.sum(np.abs(k(j))))


def window_l1_bound_cont(k: CKernel, n: int) -> float:
    """``int_{2^(n-1)}^{2^(n+1)} |h(t)| dt`` by adaptive quadrature."""
    scale = 2.0 ** n

    def f(u):
        return scale * abs(complex(k(np.array([scale * u]))[0]))

    val, _ = scipy.integrate.quad(f, 0.5, 2.0, limit=200, epsabs=0.0, epsrel=1e-13)
    return val


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BesovResult:
    """Terms ``T_n = 2^n || h_n ||_p^p`` and their partial sums."""

    p: float
    ns: np.ndarray
    terms: np.ndarray
    partial: np.ndarray
    growth_exponent: float
    last_increment: float
    verdict: str
    tail_ok: bool = True


def _blocks(k, n_max, n_min=None):
    if isinstance(k, KernelSeq):
        return list(range(0, n_max + 1))
    lo = -n_max if n_min is None else n_min
    return list(range(lo, n_max + 1))


def _symbols(k, ns, oversample, grid):
    grid = dict(grid or {})
    out = []
    for n in ns:
        if isinstance(k, KernelSeq):
            out.append(windowed_symbol_disc(k, n, oversample * OVERSAMPLING * 2 ** (n + 1)))
        elif isinstance(k, CKernel):
            out.append(windowed_transform_cont(k, n, **grid))
        else:
            raise TypeError(f"unsupported kernel type {type(k).__name__}")
    return out


def besov_sum(k, p: float, n_max: int, oversample: int = 1, n_min: int | None = None,
              grid: dict | None = None) -> BesovResult:
    """``sum_n 2^n int |h_n|^p`` term by term.

    Discrete kernels use ``n = 0 .. n_max``; continuous kernels
    ``n = -n_max .. n_max`` unless ``n_min`` is given.  ``growth_exponent`` is
    the log-log slope of the partial sums against ``n`` over the second half of
    the range: near 1 for linearly divergent sums, near 0 for convergent ones.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    ns = _blocks(k, n_max, n_min)
    syms = _symbols(k, ns, oversample, grid)
    terms = np.array([2.0 ** n * s.lp_integral(p) for n, s in zip(ns, syms)])
    partial = np.cumsum(terms)
    idx = np.arange(len(ns))
    second = idx >= len(ns) // 2
    pos = partial[second] > 0
    if pos.sum() >= 2:
        growth = float(np.polyfit(np.log(idx[second][pos] + 1.0),
                                  np.log(partial[second][pos]), 1)[0])
    else:
        growth = 0.0
    inc = float(terms[-1] / partial[-1]) if partial[-1] > 0 else 0.0
    if inc < 1e-3:
        verdict = "convergent"
    elif growth > 0.5:
        verdict = "divergent"
    else:
        verdict = "undecided"
    return BesovResult(float(p), np.array(ns), terms, partial, growth, inc, verdict,
                       all(s.tail_ok for s in syms))


@dataclass(frozen=True)
class WeakBesovResult:
    p: float
    value: float
    s_star: float
    n_max: int
    value_prev: float

    @property
    def rel_change(self) -> float:
        return abs(self.value - self.value_prev) / self.value if self.value else 0.0


def _weak_sup(mags, weights, p, tails=()):
    order = np.argsort(-mags, kind="stable")
    m = mags[order]
    cum = np.cumsum(weights[order])
    keep = m > 0
    m, cum = m[keep], cum[keep]
    if m.size == 0:
        return 0.0, 0.0
    # last occurrence of each distinct magnitude: the left limit of the level
    # function at that value includes every sample at or above it
    last = np.ones(m.size, dtype=bool)
    last[:-1] = m[:-1] != m[1:]
    cand_s, cand_w = m[last], cum[last]
    for scale, sym in tails:
        cand_w = cand_w + scale * sym.tail_measure(cand_s)
    vals = cand_s ** p * cand_w
    i = int(np.argmax(vals))
    return float(vals[i]), float(cand_s[i])


def weak_besov(k, p: float, n_max: int, oversample: int = 1, n_min: int | None = None,
               grid: dict | None = None) -> WeakBesovResult:
    """``sup_s s^p sum_n 2^n |{ |h_n| > s }|`` over the sampled blocks.

    Between consecutive sampled magnitudes the level measure is constant and
    ``s^p`` increases, so the supremum is the largest left limit
    ``a^p * measure{|h_n| >= a}`` over sampled magnitudes ``a``.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    ns = _blocks(k, n_max, n_min)
    syms = _symbols(k, ns, oversample, grid)

    def sup_over(count):
        mags = np.concatenate([np.abs(s.samples) for s in syms[:count]])
        weights = np.concatenate([2.0 ** n * s.weights for n, s in zip(ns[:count], syms[:count])])
        tails = [(2.0 ** n, s) for n, s in zip(ns[:count], syms[:count]) if s.kind == "continuous"]
        return _weak_sup(mags, weights, p, tails)

    value, s_star = sup_over(len(ns))
    prev, _ = sup_over(len(ns) - 1) if len(ns) > 1 else (value, s_star)
    return WeakBesovResult(float(p), value, s_star, int(n_max), prev)
