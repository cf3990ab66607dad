"""Quasi-static Rayleigh channel model and the two observation paths.

One channel realization is held fixed over a codeword block. The
beamformed path normally uses the compact model Y = diag(lam) X + N;
the explicit path U^H (H V X + N) exists for cross-validation and is
distributionally identical because U is unitary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .numerics import SeededRng, SvdFactors, sample_complex_gaussian, svd


def _gains_2x2(H) -> np.ndarray:
    """Closed-form singular values of a 2x2 complex matrix via the Gram
    trace and determinant; the small value is computed cancellation-free."""
    a, b = complex(H[0, 0]), complex(H[0, 1])
    c, d = complex(H[1, 0]), complex(H[1, 1])
    t = abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2
    det2 = abs(a * d - b * c) ** 2
    disc = math.sqrt(max(t * t - 4.0 * det2, 0.0))
    s1sq = (t + disc) / 2.0
    # rounding could nudge the small value past the large one when the two
    # nearly coincide; clamp to keep the decreasing-order contract
    s2sq = min(det2 / s1sq, s1sq) if s1sq > 0 else 0.0
    return np.array([math.sqrt(s1sq), math.sqrt(s2sq)])


@dataclass
class ChannelRealization:
    """Fading matrix with its singular value decomposition.

    The gains (sorted singular values) are always present; the full factors
    are computed on first use, which keeps the Monte Carlo hot path off the
    general SVD when only the diagonal channel is needed.
    """

    H: np.ndarray
    gains: np.ndarray
    _factors: SvdFactors | None = None

    @property
    def factors(self) -> SvdFactors:
        if self._factors is None:
            self._factors = svd(self.H)
        return self._factors


@dataclass(frozen=True)
class SnrPoint:
    """Per-receive-antenna SNR operating point; noise variance follows
    N0 = S / SNR with S transmit streams and unit-energy symbols."""

    snr_db: float
    n0: float

    @classmethod
    def from_db(cls, snr_db: float, dim: int) -> "SnrPoint":
        linear = 10.0 ** (snr_db / 10.0)
        return cls(snr_db=float(snr_db), n0=dim / linear)

    def __post_init__(self):
        if not self.n0 > 0:
            raise ConfigurationError(f"noise variance must be positive, got {self.n0}")


def sample_channel(nr: int, nt: int, rng: SeededRng) -> ChannelRealization:
    """Draw an Nr x Nt matrix of i.i.d. unit-variance complex Gaussian
    entries together with its singular values."""
    if nr != nt:
        raise ConfigurationError(f"square channels only: got {nr}x{nt}")
    H = sample_complex_gaussian(rng, 1.0, size=(nr, nt))
    if nr == 2:
        gains = _gains_2x2(H)
    else:
        gains = np.linalg.svd(H, compute_uv=False)
    return ChannelRealization(H=H, gains=gains)


def gcmb_channel_apply(X, chan: ChannelRealization, snr: SnrPoint, rng: SeededRng,
                       explicit: bool = False, add_noise: bool = True):
    """Beamformed observation of a codeword.

    Modeled path (default): Y = diag(lam) X + N. Explicit path: the
    transmitter precodes with V, the air adds noise, the receiver rotates
    by U^H. Noise entries are complex Gaussian with variance snr.n0.
    """
    X = np.asarray(X)
    lam = chan.gains
    if explicit:
        U, V = chan.factors.U, chan.factors.V
        airborne = chan.H @ (V @ X)
        if add_noise:
            airborne = airborne + sample_complex_gaussian(rng, snr.n0, size=X.shape)
        return U.conj().T @ airborne
    Y = lam[:, np.newaxis] * X
    if add_noise:
        Y = Y + sample_complex_gaussian(rng, snr.n0, size=X.shape)
    return Y


def gc_baseline_apply(X, H, snr: SnrPoint, rng: SeededRng, add_noise: bool = True):
    """Plain-MIMO observation Y = H X + N for the un-beamformed baseline."""
    Y = np.asarray(H) @ np.asarray(X)
    if add_noise:
        Y = Y + sample_complex_gaussian(rng, snr.n0, size=Y.shape)
    return Y
