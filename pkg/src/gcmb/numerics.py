"""Complex linear algebra, square-QAM constellations, and seeded randomness.

Foundation shared by the codecs, the channel model, and the Monte Carlo
harness. Conventions fixed here so everything downstream agrees:

* QR returns an R with a real, non-negative diagonal.
* SVD returns singular values in decreasing order.
* Random streams are explicit values, never global state; parallel work
  derives independent child streams keyed by integer indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SingularMatrixError

QAM_ORDERS = (4, 16, 64, 256)

_RANK_TOL = 1e-12


class SeededRng:
    """Deterministic random stream (PCG64) with derivable child streams.

    Identical seeds produce identical sample sequences across runs and
    platforms. ``child(*key)`` derives an independent stream from
    ``(seed, *key)``; trials of a Monte Carlo run each get their own child
    so that results do not depend on execution order or thread count.
    """

    def __init__(self, seed):
        self.seed = int(seed)
        if self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def child(self, *key: int) -> "SeededRng":
        rng = object.__new__(SeededRng)
        rng.seed = self.seed
        rng.generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, *key)))
        )
        return rng

    def complex_gaussian(self, variance, size=None):
        """Circular complex Gaussian samples with the given total variance."""
        return sample_complex_gaussian(self, variance, size)

    def integers(self, low, high, size=None):
        return self.generator.integers(low, high, size=size)


def sample_complex_gaussian(rng: SeededRng, variance: float, size=None):
    """Zero-mean circular complex Gaussian; real and imaginary parts are
    independent with variance ``variance / 2`` each."""
    if not variance > 0:
        raise ConfigurationError(f"variance must be positive, got {variance}")
    scale = math.sqrt(variance / 2.0)
    g = rng.generator
    if size is None:
        re, im = g.standard_normal(2)
        return complex(re * scale, im * scale)
    if isinstance(size, int):
        size = (size,)
    v = g.standard_normal((*size, 2)) * scale
    return v[..., 0] + 1j * v[..., 1]


@dataclass(frozen=True)
class SvdFactors:
    """H = U diag(singular_values) V^H with unitary U, V and the singular
    values sorted in decreasing order."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.conj().T


def svd(H: np.ndarray) -> SvdFactors:
    """Singular value decomposition of a square complex matrix.

    Raises ValueError on non-square or non-finite input. Ties between
    singular values keep LAPACK's original ordering.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix entries must be finite")
    U, s, Vh = np.linalg.svd(H)
    return SvdFactors(U=U, singular_values=s, V=Vh.conj().T)


def _qr_positive(A: np.ndarray):
    """QR with the diagonal of R made real and non-negative; no input checks."""
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R).copy()
    phase = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    Q = Q * phase[np.newaxis, :]
    R = phase.conj()[:, np.newaxis] * R
    np.fill_diagonal(R, np.abs(d))
    return Q, R


def _qr_positive_2x2(A: np.ndarray):
    """Gram-Schmidt QR of a 2x2 complex matrix (positive-diagonal
    convention), avoiding LAPACK call overhead on the decode hot path."""
    a, c = complex(A[0, 0]), complex(A[1, 0])
    b, d = complex(A[0, 1]), complex(A[1, 1])
    r11 = math.sqrt(a.real * a.real + a.imag * a.imag + c.real * c.real + c.imag * c.imag)
    q1a = a / r11
    q1c = c / r11
    r12 = q1a.conjugate() * b + q1c.conjugate() * d
    d2a = b - r12 * q1a
    d2c = d - r12 * q1c
    r22 = math.sqrt(d2a.real * d2a.real + d2a.imag * d2a.imag
                    + d2c.real * d2c.real + d2c.imag * d2c.imag)
    Q = np.array([[q1a, d2a / r22], [q1c, d2c / r22]])
    R = np.array([[r11, r12], [0.0, r22]])
    return Q, R


def qr(A: np.ndarray):
    """QR decomposition with a real, non-negative diagonal of R.

    Returns (Q, R) with Q unitary and R upper triangular. Raises
    SingularMatrixError for rank-deficient input, naming the offending
    column.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    sigmas = np.linalg.svd(A, compute_uv=False)
    if sigmas[-1] <= _RANK_TOL * sigmas[0]:
        Q0, R0 = np.linalg.qr(A)
        col = int(np.argmin(np.abs(np.diagonal(R0))))
        raise SingularMatrixError(f"matrix is rank deficient at column {col}")
    return _qr_positive(A)


@dataclass(frozen=True)
class Constellation:
    """Unit-energy square M-QAM with per-axis Gray labeling.

    ``points[k]`` places ``pam_levels[k // L]`` on the real axis and
    ``pam_levels[k % L]`` on the imaginary axis, where L = sqrt(M). The
    integer label of a point concatenates the Gray code of its real-axis
    index (high bits) with that of its imaginary-axis index (low bits).
    """

    order: int
    points: np.ndarray
    labels: np.ndarray
    pam_levels: np.ndarray
    _hamming: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def levels_per_axis(self) -> int:
        return len(self.pam_levels)

    def index_of(self, re_idx: int, im_idx: int) -> int:
        return re_idx * self.levels_per_axis + im_idx

    def bit_errors(self, i: int, j: int) -> int:
        """Number of label bits that differ between points i and j."""
        return int(self._hamming[i, j])


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def qam_constellation(M: int) -> Constellation:
    """Build the unit-average-energy square M-QAM constellation.

    Supported orders: 4, 16, 64, 256. PAM levels are the odd integers
    scaled so the full grid has unit mean energy; each axis carries a
    binary-reflected Gray code, so grid neighbors differ in one bit.
    """
    if M not in QAM_ORDERS:
        raise ConfigurationError(f"unsupported constellation order {M}; choose from {QAM_ORDERS}")
    L = int(round(np.sqrt(M)))
    raw = np.arange(-(L - 1), L, 2, dtype=float)
    scale = np.sqrt(2.0 * np.mean(raw**2))
    pam = raw / scale
    points = (pam[:, np.newaxis] + 1j * pam[np.newaxis, :]).ravel()
    axis_bits = int(np.log2(L))
    gray = np.array([_gray(i) for i in range(L)], dtype=np.int64)
    labels = ((gray[:, np.newaxis] << axis_bits) | gray[np.newaxis, :]).ravel()
    ham = np.bitwise_count(np.bitwise_xor(labels[:, np.newaxis], labels[np.newaxis, :]))
    ham = ham.astype(np.int64)
    return Constellation(order=M, points=points, labels=labels, pam_levels=pam, _hamming=ham)
