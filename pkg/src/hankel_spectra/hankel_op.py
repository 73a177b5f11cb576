"""Finite sections of Hankel operators.

Discrete sections are stored by their ``2N - 1`` antidiagonal values and
applied in ``O(N log N)`` through a circulant embedding.  Continuous integral
operators are discretised on a logarithmic grid.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.linalg

from .kernel import CKernel, KernelSeq

__all__ = [
    "HankelSection",
    "ContinuousSection",
    "build_section",
    "discretize_continuous",
    "matvec",
    "fft_workers",
    "MATERIALIZE_MAX",
    "DENSE_MATVEC_MAX",
]

MATERIALIZE_MAX = 8192
DENSE_MATVEC_MAX = 4096


def fft_workers() -> int:
    """Worker cap for transforms, from ``HANKEL_SPECTRA_THREADS`` (default 1)."""
    raw = os.environ.get("HANKEL_SPECTRA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _embedding_size(N: int) -> int:
    return 1 << max(1, (2 * N - 1).bit_length())


@dataclass(frozen=True, eq=False)
class HankelSection:
    """The ``N x N`` matrix with entries ``c[j + k]``.

    ``c_hat`` is the transform of ``c`` zero-padded to the circulant size
    ``L`` (next power of two ``>= 2N``).
    """

    N: int
    c: np.ndarray = field(repr=False)
    c_hat: np.ndarray = field(repr=False)
    L: int

    @property
    def shape(self):
        return (self.N, self.N)

    @property
    def dtype(self):
        return self.c.dtype

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.c)

    def matvec(self, u):
        """``v[j] = sum_k c[j + k] u[k]`` via cyclic convolution."""
        u = np.asarray(u)
        if u.shape[0] != self.N:
            raise ValueError(f"vector of length {u.shape[0]} does not match section size {self.N}")
        N, L = self.N, self.L
        # reversing u turns the correlation into a convolution read at offset N-1
        rev = u[::-1]
        workers = fft_workers()
        if self.is_real and not np.iscomplexobj(u):
            uhat = scipy.fft.rfft(rev, n=L, axis=0, workers=workers)
            chat = self.c_hat[: L // 2 + 1]
            if uhat.ndim > 1:
                chat = chat[:, None]
            conv = scipy.fft.irfft(uhat * chat, n=L, axis=0, workers=workers)
        else:
            uhat = scipy.fft.fft(rev, n=L, axis=0, workers=workers)
            chat = self.c_hat if uhat.ndim == 1 else self.c_hat[:, None]
            conv = scipy.fft.ifft(uhat * chat, n=L, axis=0, workers=workers)
        return conv[N - 1: 2 * N - 1]

    def rmatvec(self, u):
        """Adjoint product; sections are complex symmetric so this is ``conj(A conj(u))``."""
        return np.conj(self.matvec(np.conj(u)))

    def matvec_dense(self, u):
        """Direct ``O(N^2)`` product, the oracle for :meth:`matvec`."""
        if self.N > DENSE_MATVEC_MAX:
            raise ValueError(f"dense matvec limited to N <= {DENSE_MATVEC_MAX}")
        return self.to_dense() @ np.asarray(u)

    def to_dense(self):
        if self.N > MATERIALIZE_MAX:
            raise ValueError(f"dense materialisation limited to N <= {MATERIALIZE_MAX}")
        return scipy.linalg.hankel(self.c[: self.N], self.c[self.N - 1:])

    def entry(self, j: int, k: int):
        return self.c[j + k]


def _section_from_values(c) -> HankelSection:
    c = np.asarray(c)
    if c.ndim != 1 or c.size % 2 == 0:
        raise ValueError("antidiagonal vector must have odd length 2N - 1")
    N = (c.size + 1) // 2
    L = _embedding_size(N)
    c_hat = scipy.fft.fft(c, n=L)
    return HankelSection(N, c, c_hat, L)


def build_section(k, N: int) -> HankelSection:
    """Section of ``Gamma(h)`` of size ``N``; ``k`` is a kernel or an antidiagonal array."""
    if isinstance(k, KernelSeq):
        if N < 1:
            raise ValueError("section size must be positive")
        return _section_from_values(k.values(2 * N - 1))
    c = np.asarray(k)
    if N is not None and c.size != 2 * N - 1:
        raise ValueError(f"expected {2 * N - 1} antidiagonal values, got {c.size}")
    return _section_from_values(c)


def matvec(s: HankelSection, u):
    return s.matvec(u)


@dataclass(frozen=True, eq=False)
class ContinuousSection:
    """Nystrom matrix of the integral Hankel operator with kernel ``h(t + s)``.

    Under ``t = e^x`` with half-density weights the operator becomes the kernel
    ``e^((x+y)/2) h(e^x + e^y)`` on the line; that is sampled on a uniform grid
    over ``[-L, L]`` with trapezoid weights.  An extra end cell represents
    ``t in (0, e^-L]`` by a constant function, which removes the leading
    truncation error at the small-``t`` end.
    """

    x: np.ndarray = field(repr=False)
    spacing: float
    L: float
    matrix: np.ndarray = field(repr=False)
    end_cell: bool = True

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.matrix, self.matrix.T))

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, u):
        return self.matrix @ u

    def rmatvec(self, u):
        return self.matrix.conj().T @ u

    def to_dense(self):
        return self.matrix


def discretize_continuous(k: CKernel, L: float, spacing: float,
                          end_cell: bool = True) -> ContinuousSection:
    if spacing > 0.25:
        raise ValueError("grid spacing must not exceed 0.25")
    if L < 4:
        raise ValueError("half-width L must be at least 4")
    count = int(round(2 * L / spacing))
    x = np.linspace(-L, L, count + 1)
    w = np.full(x.size, spacing)
    w[0] = w[-1] = spacing / 2
    et = np.exp(x)
    root = np.sqrt(w) * np.exp(x / 2)
    # both factors are exactly symmetric, so K == K.T bitwise
    K = (root[:, None] * root[None, :]) * k(et[:, None] + et[None, :])
    if end_cell:
        eps = np.exp(-L)
        # constant function on (0, eps], midpoint rule in the cell variable
        col = np.sqrt(eps) * k(eps / 2 + et) * root
        corner = eps * k(np.array([eps]))[0]
        K = np.block([[np.array([[corner]]), col[None, :]], [col[:, None], K]])
    return ContinuousSection(x, float(spacing), float(L), K, end_cell)
