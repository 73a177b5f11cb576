"""Catalog of discrete and continuous Hankel kernels.

A discrete kernel is a sequence ``h(j)``, ``j >= 0``; a continuous kernel is a
function ``h(t)``, ``t > 0``, together with its derivatives.  Both are
immutable and evaluate vectorised over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "KernelSeq",
    "CKernel",
    "EnvelopeReport",
    "EnvelopeOverflowError",
    "smooth_step",
    "chi_zero",
    "chi_infinity",
    "eval_seq",
    "eval_ckernel",
    "iterated_diff",
    "decay_envelope",
    "continuous_envelope",
    "modulate",
    "smooth_truncate",
    "hilbert",
    "delta",
    "log_model",
    "geometric",
    "widom",
    "lacunary",
    "random_decaying",
    "from_values",
    "from_callable",
    "carleman",
    "exponential",
    "log_model_continuous",
    "DISCRETE_CATALOG",
    "CONTINUOUS_CATALOG",
    "make_kernel",
]

#: numeric differencing beyond this order is refused (cancellation makes it noise)
MAX_NUMERIC_DIFF = 24


class EnvelopeOverflowError(ArithmeticError):
    """The envelope weight ``(j+1)^(1+m) log(j+2)^alpha`` is not representable."""


# ---------------------------------------------------------------------------
# smooth steps
# ---------------------------------------------------------------------------

def _flat(x):
    # exp(-1/x) for x > 0, exactly 0 otherwise
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: exactly 0 for ``x <= 0`` and exactly 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a = _flat(x)
    b = _flat(1.0 - x)
    return a / (a + b)


def chi_zero(t):
    """Cutoff equal to 1 on ``t <= 1/4`` and 0 on ``t >= 1/2``."""
    return 1.0 - smooth_step(4.0 * np.asarray(t, dtype=float) - 1.0)


def chi_infinity(t):
    """Cutoff equal to 0 on ``t <= 2`` and 1 on ``t >= 4``."""
    return smooth_step(0.5 * np.asarray(t, dtype=float) - 1.0)


# ---------------------------------------------------------------------------
# discrete kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSeq:
    """A sequence ``h(j)``, ``j = 0, 1, 2, ...``.

    ``rule`` maps an int64 array of indices to values. ``diff_rule(m, j)``
    returns closed-form iterated differences for ``1 <= m <= diff_order_available``.
    """

    name: str
    params: tuple = ()
    rule: Callable[[np.ndarray], np.ndarray] = field(default=None, repr=False, compare=False)
    diff_rule: Callable[[int, np.ndarray], np.ndarray] | None = field(
        default=None, repr=False, compare=False)
    diff_order_available: int = 0
    complex_valued: bool = False

    def __call__(self, j):
        j = np.asarray(j, dtype=np.int64)
        if j.size and j.min() < 0:
            raise ValueError("kernel indices must be non-negative")
        out = np.asarray(self.rule(j))
        return out.astype(complex if self.complex_valued else float, copy=False)

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def values(self, n):
        """First ``n`` values ``h(0), ..., h(n-1)``."""
        return self(np.arange(n, dtype=np.int64))


def eval_seq(k: KernelSeq, j: int) -> complex:
    return complex(k(np.array([j]))[0])


def iterated_diff(k: KernelSeq, m: int) -> KernelSeq:
    """Forward difference of order ``m``: ``h^(m)(j) = h^(m-1)(j+1) - h^(m-1)(j)``.

    Uses the kernel's closed form when available and numeric differencing of
    the highest closed-form order otherwise.
    """
    if m < 0:
        raise ValueError("difference order must be non-negative")
    if m == 0:
        return k
    name = f"diff{m}({k.name})"
    closed = min(m, k.diff_order_available) if k.diff_rule is not None else 0
    if closed == m:
        base = k

        def rule(j):
            return base.diff_rule(m, j)

        def diff_rule(r, j):
            return base.diff_rule(m + r, j)

        return replace(k, name=name, rule=rule, diff_rule=diff_rule,
                       diff_order_available=k.diff_order_available - m)

    rest = m - closed
    if rest > MAX_NUMERIC_DIFF:
        raise ValueError(f"numeric differencing of order {rest} is not supported")
    base = iterated_diff(k, closed)

    def numeric_rule(j):
        j = np.asarray(j, dtype=np.int64)
        window = base(j.reshape(-1, 1) + np.arange(rest + 1))
        return np.diff(window, n=rest, axis=-1).reshape(j.shape)

    return replace(k, name=name, rule=numeric_rule, diff_rule=None,
                   diff_order_available=0)


@dataclass(frozen=True)
class EnvelopeReport:
    m: int
    alpha: float
    scan: tuple
    sup_value: float
    argmax: float


def decay_envelope(k: KernelSeq, m: int, alpha: float, j_max: int) -> EnvelopeReport:
    """``sup_{0<=j<=j_max} (j+1)^(1+m) log(j+2)^alpha |h^(m)(j)|`` (natural log)."""
    if j_max < 2:
        raise ValueError("j_max must be at least 2")
    if m < 0:
        raise ValueError("m must be non-negative")
    j = np.arange(j_max + 1, dtype=np.int64)
    mag = np.abs(iterated_diff(k, m)(j))
    jf = j.astype(float)
    try:
        with np.errstate(over="raise", invalid="raise"):
            weight = (jf + 1.0) ** (1 + m) * np.log(jf + 2.0) ** alpha
            stat = weight * mag
    except FloatingPointError as exc:
        raise EnvelopeOverflowError(
            f"envelope weight overflows for m={m}, alpha={alpha}, j_max={j_max}") from exc
    if not np.all(np.isfinite(stat)):
        raise EnvelopeOverflowError("non-finite envelope statistic")
    idx = int(np.argmax(stat))
    return EnvelopeReport(m, float(alpha), (0, int(j_max)), float(stat[idx]), float(idx))


def _unimodular_power(zeta: complex, j: np.ndarray):
    if zeta == 1:
        return np.ones(j.shape)
    if zeta == -1:
        return np.where(j % 2 == 0, 1.0, -1.0)
    if zeta == 1j or zeta == -1j:
        table = np.array([1, zeta, zeta ** 2, zeta ** 3], dtype=complex)
        return table[j % 4]
    return np.exp(1j * np.angle(zeta) * j.astype(float))


def modulate(terms: Sequence[tuple[complex, KernelSeq]]) -> KernelSeq:
    """Sequence ``j -> sum_l zeta_l^j h_l(j)`` for unimodular ``zeta_l``."""
    if not terms:
        raise ValueError("at least one modulation term is required")
    zetas = [complex(z) for z, _ in terms]
    for z in zetas:
        if abs(abs(z) - 1.0) > 1e-12:
            raise ValueError(f"modulation factor {z} is not unimodular")
    kernels = [kk for _, kk in terms]
    real = all(z in (1, -1) for z in zetas) and not any(kk.complex_valued for kk in kernels)

    def rule(j):
        total = 0
        for z, kk in zip(zetas, kernels):
            total = total + _unimodular_power(z, j) * kk(j)
        return np.asarray(total)

    name = "mod(" + ",".join(f"{z:.6g}:{kk.name}" for z, kk in zip(zetas, kernels)) + ")"
    return KernelSeq(name, (), rule, None, 0, complex_valued=not real)


def smooth_truncate(k, N: int):
    """Smoothly truncate a kernel at scale ``N``.

    Discrete: ``h(j) chi0(j/N)``. Continuous: ``h(t) chi0(t/N) chiinf(N t)``.
    """
    if N < 8:
        raise ValueError("truncation scale must be at least 8")
    if isinstance(k, KernelSeq):
        def rule(j):
            return k(j) * chi_zero(j / N)

        return KernelSeq(f"trunc{N}({k.name})", k.params, rule, None, 0, k.complex_valued)
    if isinstance(k, CKernel):
        def crule(t, m):
            return k(t, 0) * chi_zero(t / N) * chi_infinity(N * t)

        return CKernel(f"trunc{N}({k.name})", k.params, crule, 0, k.complex_valued)
    raise TypeError(f"cannot truncate {type(k).__name__}")


# catalog ------------------------------------------------------------------

def hilbert() -> KernelSeq:
    """``h(j) = 1/(j+1)``; every difference order in closed form."""
    def rule(j):
        return 1.0 / (j + 1.0)

    def diff_rule(m, j):
        jf = np.asarray(j, dtype=float)
        out = np.full(jf.shape, (-1.0) ** m)
        for i in range(m + 1):
            out = out * ((i if i else 1) / (jf + 1.0 + i))
        return out

    return KernelSeq("hilbert", (), rule, diff_rule, 32)


def delta(k: int = 0) -> KernelSeq:
    def rule(j):
        return (j == k).astype(float)

    return KernelSeq("delta", (("k", k),), rule)


def log_model(alpha: float) -> KernelSeq:
    """``h(j) = 1 / (j (ln j)^alpha)`` for ``j >= 2``; ``h(0) = h(1) = h(2)``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    def rule(j):
        jf = np.maximum(np.asarray(j, dtype=float), 2.0)
        return 1.0 / (jf * np.log(jf) ** alpha)

    def diff_rule(m, j):
        if m != 1:
            raise ValueError("only the first difference has a closed form")
        jf = np.maximum(np.asarray(j, dtype=float), 2.0)
        l0 = np.log(jf)
        l1 = np.log(jf + 1.0)
        # j*(L0^a - L1^a) - L1^a without cancellation
        grow = np.expm1(alpha * np.log1p(np.log1p(1.0 / jf) / l0))
        num = -(l1 ** alpha) - jf * l0 ** alpha * grow
        out = num / (jf * (jf + 1.0) * l0 ** alpha * l1 ** alpha)
        return np.where(np.asarray(j) < 2, 0.0, out)

    return KernelSeq("log-model", (("alpha", float(alpha)),), rule, diff_rule, 1)


def geometric(ratio: float = 0.5) -> KernelSeq:
    """``h(j) = ratio^j``; a rank-one Hankel operator."""
    if not 0 < abs(ratio) < 1:
        raise ValueError("ratio must lie strictly inside the unit disc")

    def rule(j):
        return float(ratio) ** np.asarray(j, dtype=float)

    def diff_rule(m, j):
        return (ratio - 1.0) ** m * rule(j)

    return KernelSeq("geometric", (("ratio", float(ratio)),), rule, diff_rule, 32)


def widom(gamma: float) -> KernelSeq:
    """``h(j) = (j+1)^-gamma``."""
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")

    def rule(j):
        return (np.asarray(j, dtype=float) + 1.0) ** (-gamma)

    return KernelSeq("widom", (("gamma", float(gamma)),), rule)


def lacunary(gamma: float) -> KernelSeq:
    """``h(2^n) = 2^(-gamma n)`` for ``n >= 1``, zero elsewhere."""
    def rule(j):
        j = np.asarray(j, dtype=np.int64)
        hit = (j >= 2) & ((j & (j - 1)) == 0)
        n = np.log2(np.where(hit, j, 1)).round()
        return np.where(hit, 2.0 ** (-gamma * n), 0.0)

    return KernelSeq("lacunary", (("gamma", float(gamma)),), rule)


_RANDOM_BLOCK = 4096


def random_decaying(seed: int, decay: float = 2.0) -> KernelSeq:
    """``h(j) = xi_j (j+1)^-decay`` with seeded standard normal ``xi_j``.

    Values are generated in fixed blocks keyed by ``(seed, block)`` so any
    index evaluates identically regardless of the request pattern.
    """
    def rule(j):
        j = np.asarray(j, dtype=np.int64)
        flat = j.ravel()
        xi = np.empty(flat.shape)
        blocks = flat // _RANDOM_BLOCK
        for b in np.unique(blocks):
            draws = np.random.default_rng([int(seed), int(b)]).standard_normal(_RANDOM_BLOCK)
            sel = blocks == b
            xi[sel] = draws[flat[sel] - b * _RANDOM_BLOCK]
        return (xi * (flat + 1.0) ** (-decay)).reshape(j.shape)

    return KernelSeq("random", (("seed", int(seed)), ("decay", float(decay))), rule)


def from_values(values, name: str = "values") -> KernelSeq:
    """Finitely supported kernel: ``values`` followed by zeros."""
    vals = np.asarray(values)
    is_complex = np.iscomplexobj(vals)

    def rule(j):
        j = np.asarray(j, dtype=np.int64)
        inside = j < vals.size
        out = np.zeros(j.shape, dtype=vals.dtype if vals.size else float)
        out[inside] = vals[j[inside]]
        return out

    return KernelSeq(name, (), rule, None, 0, is_complex)


def from_callable(func, name: str = "custom", complex_valued: bool = False) -> KernelSeq:
    return KernelSeq(name, (), func, None, 0, complex_valued)


# ---------------------------------------------------------------------------
# continuous kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CKernel:
    """A kernel ``h(t)``, ``t > 0``, with derivatives up to ``max_order``."""

    name: str
    params: tuple = ()
    rule: Callable[[np.ndarray, int], np.ndarray] = field(default=None, repr=False, compare=False)
    max_order: int = 0
    complex_valued: bool = False

    def __call__(self, t, m: int = 0):
        if m < 0 or m > self.max_order:
            raise ValueError(f"derivative order {m} unavailable for {self.name} "
                             f"(max {self.max_order})")
        t = np.asarray(t, dtype=float)
        if t.size and t.min() <= 0:
            raise ValueError("continuous kernels are defined for t > 0 only")
        out = np.asarray(self.rule(t, m))
        return out.astype(complex if self.complex_valued else float, copy=False)

    def param(self, key, default=None):
        return dict(self.params).get(key, default)


def eval_ckernel(k: CKernel, t: float, m: int = 0) -> complex:
    return complex(k(np.array([t]), m)[0])


def continuous_envelope(k: CKernel, m: int, alpha: float, t_min: float = 2.0 ** -30,
                        t_max: float = 2.0 ** 30, per_octave: int = 64) -> EnvelopeReport:
    """``sup t^(1+m) <ln t>^alpha |h^(m)(t)|`` over a geometric grid."""
    if per_octave < 64:
        raise ValueError("at least 64 grid points per octave are required")
    if m > k.max_order:
        raise ValueError(f"derivative order {m} unavailable for {k.name}")
    octaves = np.log2(t_max / t_min)
    count = int(np.ceil(octaves * per_octave)) + 1
    t = t_min * 2.0 ** np.linspace(0.0, octaves, count)
    logt = np.log(t)
    stat = t ** (1 + m) * np.sqrt(logt * logt + 1.0) ** alpha * np.abs(k(t, m))
    if not np.all(np.isfinite(stat)):
        raise EnvelopeOverflowError("non-finite continuous envelope statistic")
    idx = int(np.argmax(stat))
    return EnvelopeReport(m, float(alpha), (float(t_min), float(t_max)),
                          float(stat[idx]), float(t[idx]))


def carleman() -> CKernel:
    """``h(t) = 1/t``."""
    def rule(t, m):
        fact = float(np.prod(np.arange(1, m + 1))) if m else 1.0
        return (-1.0) ** m * fact * t ** (-1.0 - m)

    return CKernel("carleman", (), rule, 16)


def exponential() -> CKernel:
    """``h(t) = exp(-t)``; a rank-one integral Hankel operator."""
    def rule(t, m):
        return (-1.0) ** m * np.exp(-t)

    return CKernel("exp", (), rule, 16)


def log_model_continuous(alpha: float, max_order: int = 6) -> CKernel:
    """``h(t) = t^-1 <ln t>^-alpha`` with ``<x> = (x^2 + 1)^(1/2)``.

    With ``u = ln t`` every derivative has the form ``t^(-1-m) F_m(u)``, where
    ``F_{m+1} = F_m' - (m+1) F_m`` and ``F_0 = (1+u^2)^(-alpha/2)``.
    """
    beta = alpha / 2.0
    # derivatives of phi = q^-beta, q = 1+u^2:  phi^(k) = P_k(u) q^(-beta-k)
    q = Polynomial([1.0, 0.0, 1.0])
    u = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for kk in range(max_order):
        p = polys[-1]
        polys.append(p.deriv() * q - 2.0 * (beta + kk) * u * p)
    coeffs = [np.array([1.0])]
    for mm in range(max_order):
        c = coeffs[-1]
        nxt = np.zeros(mm + 2)
        nxt[1:] += c
        nxt[:-1] -= (mm + 1) * c
        coeffs.append(nxt)

    def rule(t, m):
        logt = np.log(t)
        qq = 1.0 + logt * logt
        total = np.zeros_like(t)
        for kk, c in enumerate(coeffs[m]):
            if c:
                total = total + c * polys[kk](logt) * qq ** (-beta - kk)
        return total * t ** (-1.0 - m)

    return CKernel("log-model-continuous", (("alpha", float(alpha)),), rule, max_order)


DISCRETE_CATALOG = {
    "hilbert": hilbert,
    "delta": delta,
    "log-model": log_model,
    "geometric": geometric,
    "widom": widom,
    "lacunary": lacunary,
    "random": random_decaying,
}

CONTINUOUS_CATALOG = {
    "carleman": carleman,
    "exp": exponential,
    "log-model-continuous": log_model_continuous,
}


def make_kernel(name: str, **params):
    """Look up a catalog kernel by name; ``params`` are forwarded to the factory."""
    factory = DISCRETE_CATALOG.get(name) or CONTINUOUS_CATALOG.get(name)
    if factory is None:
        raise KeyError(f"unknown kernel {name!r}")
    return factory(**params)
