"""Singular values of Hankel sections.

Two routes: a dense SVD (the oracle, small ``N``) and a matrix-free
Golub-Kahan bidiagonalisation with full reorthogonalisation and thick
restarts.  :func:`convergence_study` compares spectra of nested sections and
only trusts values that are stable under ``N``-doubling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .hankel_op import MATERIALIZE_MAX, build_section
from .kernel import KernelSeq

__all__ = [
    "SingularSpectrum",
    "ConvergenceStudy",
    "dense_svd",
    "lanczos_topk",
    "convergence_study",
    "floor_mask",
    "GATE_CHANGE",
    "GATE_RESIDUAL",
]

EPS = np.finfo(float).eps
#: relative change under N-doubling below which a value is trusted
GATE_CHANGE = 0.01
#: residual bound (relative to s_1) below which a value is trusted
GATE_RESIDUAL = 1e-9
FLOOR_FACTOR = 1e3


@dataclass(frozen=True)
class SingularSpectrum:
    """Non-increasing singular values ``s[0] >= s[1] >= ...`` of an ``N x N`` section."""

    s: np.ndarray
    N: int
    residuals: np.ndarray
    converged: np.ndarray
    method: str = "dense"
    iterations: int = 0

    @property
    def k(self) -> int:
        return int(self.s.size)

    def top(self, k: int) -> "SingularSpectrum":
        return replace(self, s=self.s[:k], residuals=self.residuals[:k],
                       converged=self.converged[:k])


def floor_mask(s) -> np.ndarray:
    """True where a value sits above the double-precision floor ``1e3 eps s_1``."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return np.zeros(0, dtype=bool)
    return s >= FLOOR_FACTOR * EPS * s[0]


def dense_svd(section) -> SingularSpectrum:
    """Full spectrum from the materialised matrix (general SVD, not eigenvalues)."""
    n = section.shape[0]
    if n > MATERIALIZE_MAX:
        raise ValueError(f"dense SVD limited to N <= {MATERIALIZE_MAX}")
    s = scipy.linalg.svdvals(section.to_dense())
    bound = np.full(s.shape, n * EPS * (s[0] if s.size else 0.0))
    return SingularSpectrum(s, n, bound, floor_mask(s), "dense")


def _orthogonalize(basis, x, passes=2):
    coef = np.zeros(basis.shape[1], dtype=np.result_type(basis, x))
    if basis.shape[1] == 0:
        return x, coef
    for _ in range(passes):
        c = basis.conj().T @ x
        x = x - basis @ c
        coef += c
    return x, coef


def _random_orthogonal(rng, basis, n, dtype):
    for _ in range(3):
        x = rng.standard_normal(n)
        if np.issubdtype(dtype, np.complexfloating):
            x = x + 1j * rng.standard_normal(n)
        x, _ = _orthogonalize(basis, x.astype(dtype))
        nrm = np.linalg.norm(x)
        if nrm > 1e-8:
            return x / nrm
    return None


def lanczos_topk(op, k: int, tol: float = 1e-10, max_iter: int = 2000,
                 seed: int = 0, work: int | None = None) -> SingularSpectrum:
    """Top-``k`` singular values by restarted Golub-Kahan bidiagonalisation.

    Only ``op.matvec`` and ``op.rmatvec`` are used.  After each sweep the
    leading Ritz triplets are kept (thick restart) and the basis is rebuilt
    from the last residual direction.  A Ritz value converges when its
    residual ``|beta_m P[m-1, i]|`` drops below ``tol * s_1``.  ``max_iter``
    caps the total number of bidiagonalisation steps.
    """
    n = op.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must satisfy 1 <= k <= N={n}")
    if tol < 1e-12:
        raise ValueError("tol must be at least 1e-12")
    m = min(n, work or k + max(k // 2, 32))
    if m < k:
        raise ValueError("working subspace smaller than k")
    dtype = float if getattr(op, "is_real", True) else complex
    rng = np.random.default_rng(seed)

    V = np.zeros((n, m + 1), dtype=dtype)
    U = np.zeros((n, m), dtype=dtype)
    B = np.zeros((m, m), dtype=dtype)
    V[:, 0] = _random_orthogonal(rng, V[:, :0], n, dtype)
    start = 0
    steps = 0
    scale = 0.0
    beta = 0.0
    while True:
        for j in range(start, m):
            u, coef = _orthogonalize(U[:, :j], op.matvec(V[:, j]))
            B[:j, j] = coef
            alpha = np.linalg.norm(u)
            scale = max(scale, alpha)
            if alpha <= 1e-14 * scale:
                alpha = 0.0
                u = _random_orthogonal(rng, U[:, :j], n, dtype)
            else:
                u = u / alpha
            U[:, j] = u
            B[j, j] = alpha
            r, _ = _orthogonalize(V[:, : j + 1], op.rmatvec(u))
            beta = np.linalg.norm(r)
            scale = max(scale, beta)
            if j + 1 >= n:
                beta = 0.0
                r = np.zeros(n, dtype=dtype)
            elif beta <= 1e-14 * scale:
                beta = 0.0
                r = _random_orthogonal(rng, V[:, : j + 1], n, dtype)
            else:
                r = r / beta
            V[:, j + 1] = r
            if j + 1 < m:
                B[j, j + 1] = beta
            steps += 1
        P, sig, Qh = np.linalg.svd(B)
        res = np.abs(beta) * np.abs(P[m - 1, :])
        done = np.all(res[:k] <= tol * sig[0]) if sig[0] > 0 else True
        if done or steps >= max_iter or m == n:
            break
        keep = min(m - 1, k + (m - k) // 2)
        V[:, :keep] = V[:, :m] @ Qh[:keep].conj().T
        U[:, :keep] = U @ P[:, :keep]
        V[:, keep] = V[:, m]
        B[:] = 0
        B[np.arange(keep), np.arange(keep)] = sig[:keep]
        start = keep

    s = sig[:k].copy()
    res = res[:k].copy()
    ok = (res <= tol * s[0]) & floor_mask(s) if s[0] > 0 else np.zeros(k, dtype=bool)
    return SingularSpectrum(s, n, res, ok, "lanczos", steps)


@dataclass(frozen=True)
class ConvergenceStudy:
    """Section spectra across sizes.

    ``values[i, n]`` is ``s_{n+1}`` at ``sizes[i]`` (NaN where unavailable);
    ``changes[i, n]`` the relative change from ``sizes[i-1]``.
    """

    kernel: str
    sizes: tuple
    values: np.ndarray = field(repr=False)
    changes: np.ndarray = field(repr=False)
    converged: np.ndarray
    extrapolated: np.ndarray = field(repr=False)
    spectrum: SingularSpectrum = field(repr=False)


def _solve(section, top, dense_max, tol, seed):
    if section.N <= dense_max:
        return dense_svd(section).top(top)
    return lanczos_topk(section, min(top, section.N), tol=tol, seed=seed)


def convergence_study(k: KernelSeq, sizes, top: int, tol: float = 1e-10,
                      dense_max: int = 4096, seed: int = 0) -> ConvergenceStudy:
    """Spectra of sections at each size in ``sizes`` with the N-doubling gate.

    The value ``s_n`` at the largest size is flagged converged when it moved by
    less than 1% from the previous size, its residual bound is below
    ``1e-9 s_1``, the solver reported it converged, and it lies above the
    double-precision floor.
    """
    sizes = tuple(int(N) for N in sizes)
    if len(sizes) < 2:
        raise ValueError("need at least two section sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if any(N & (N - 1) for N in sizes):
        raise ValueError("sizes must be powers of two")

    values = np.full((len(sizes), top), np.nan)
    spectra = []
    for i, N in enumerate(sizes):
        sp = _solve(build_section(k, N), top, dense_max, tol, seed)
        spectra.append(sp)
        values[i, : sp.k] = sp.s
    changes = np.full_like(values, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        changes[1:] = np.abs(values[1:] - values[:-1]) / values[1:]

    last = spectra[-1]
    gate = np.zeros(top, dtype=bool)
    kk = last.k
    gate[:kk] = (
        (changes[-1, :kk] < GATE_CHANGE)
        & (last.residuals < GATE_RESIDUAL * last.s[0])
        & last.converged
        & floor_mask(last.s)
    )

    extrapolated = values[-1].copy()
    if len(sizes) >= 3:
        a, b, c = values[-3], values[-2], values[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = (c - b) - (b - a)
            aitken = c - (c - b) ** 2 / denom
        # Aitken only when the differences contract monotonically
        ok = np.isfinite(aitken) & (np.abs(c - b) < np.abs(b - a)) & ((c - b) * (b - a) > 0)
        extrapolated = np.where(ok, aitken, c)

    spectrum = replace(last, converged=gate[:kk])
    return ConvergenceStudy(k.name, sizes, values, changes, gate, extrapolated, spectrum)
