"""Golden Code encoding and the beamformed receive-side decoupling chain.

The codec exists in two published-equivalent forms: the entrywise codeword
formula and the lattice form diag(G x1) + diag(G x2) E. Both are built from
one shared set of constants so their agreement can be tested to 1e-14.

On the receive side, a beamformed observation Y = diag(lam) X + N splits
into two independent 2-vector groups, each of which reduces by QR to a
*real-valued* upper-triangular system; real and imaginary parts then
decouple, leaving four 2-dimensional real lattice searches per codeword.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DegenerateChannelError, UnsupportedDimensionError
from .lattice import LatticeProblem, SearchStats, _solve
from .numerics import Constellation, _qr_positive, _qr_positive_2x2, qam_constellation

_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class GoldenConstants:
    """Golden ratio pair and the unitary generator/shift matrices built from it."""

    alpha: float
    beta: float
    generator: np.ndarray  # includes the 1/sqrt(5) factor
    shift: np.ndarray      # superdiagonal 1, bottom-left i


def _make_constants() -> GoldenConstants:
    alpha = (1.0 + _SQRT5) / 2.0
    beta = (1.0 - _SQRT5) / 2.0
    generator = np.array(
        [
            [1.0 + 1j * beta, alpha - 1j],
            [1.0 + 1j * alpha, beta - 1j],
        ]
    ) / _SQRT5
    shift = np.array([[0.0, 1.0], [1j, 0.0]])
    return GoldenConstants(alpha=alpha, beta=beta, generator=generator, shift=shift)


GOLDEN = _make_constants()

# Group-2 phase matrix diag(1, i); its conjugate undoes the phase at the receiver.
PHI = np.diag([1.0 + 0j, 1j])
_PHI_DIAG_CONJ = np.array([1.0 + 0j, -1j])


class DecoupledReceive(NamedTuple):
    y1: np.ndarray
    y2: np.ndarray


class EffectiveChannel(NamedTuple):
    Q: np.ndarray
    R: np.ndarray        # real-valued
    max_imag: float      # realness report: max |Im(R)| before discarding


@dataclass(frozen=True)
class DecodeResult:
    """Decoded symbol indices, the total decision metric, and the search
    statistics of every real subsystem that was solved."""

    indices: tuple
    metric: float
    subsystem_stats: tuple

    @property
    def node_counts(self) -> tuple:
        return tuple(s.nodes_visited for s in self.subsystem_stats)

    @property
    def max_nodes(self) -> int:
        return max(self.node_counts)


def golden_encode(x1, x2) -> np.ndarray:
    """Entrywise Golden Code codeword for symbol pairs x1=(s1,s2), x2=(s3,s4)."""
    s1, s2 = x1
    s3, s4 = x2
    a = GOLDEN.alpha
    b = GOLDEN.beta
    return np.array(
        [
            [(1 + 1j * b) * s1 + (a - 1j) * s2, (1 + 1j * b) * s3 + (a - 1j) * s4],
            [(1j - a) * s3 + (1 + 1j * b) * s4, (1 + 1j * a) * s1 + (b - 1j) * s2],
        ]
    ) / _SQRT5


def golden_encode_lattice(x1, x2) -> np.ndarray:
    """Lattice-form codeword diag(G x1) + diag(G x2) E; agrees with
    golden_encode entrywise."""
    G = GOLDEN.generator
    return np.diag(G @ np.asarray(x1)) + np.diag(G @ np.asarray(x2)) @ GOLDEN.shift


def receive_decompose(Y) -> DecoupledReceive:
    """Partition a 2x2 observation into its two decoupled groups:
    y1 = (Y11, Y22) carries x1 and y2 = (Y12, Y21) carries x2."""
    Y = np.asarray(Y)
    return DecoupledReceive(
        y1=np.array([Y[0, 0], Y[1, 1]]),
        y2=np.array([Y[0, 1], Y[1, 0]]),
    )


def effective_real_channel(lam, generator, imag_tol) -> EffectiveChannel:
    """QR of diag(lam) @ generator with the realness of R checked.

    Returns Q, the real part of R, and the realness report max|Im(R)|.
    Raises DegenerateChannelError when the smallest gain is numerically
    zero and UnsupportedDimensionError when R fails the realness gate.
    """
    lam = np.asarray(lam, dtype=float)
    gains = lam.tolist()
    prev = math.inf
    for v in gains:
        if not (math.isfinite(v) and v <= prev):
            raise ValueError(f"gains must be finite and non-increasing, got {gains}")
        prev = v
    if gains[-1] <= 1e-12:
        raise DegenerateChannelError(
            f"smallest channel gain {gains[-1]:.3e} is numerically zero"
        )
    # the degenerate gate above already guarantees full rank (the generator
    # is unitary), so the rank-checking front door of qr() is skipped
    scaled = lam[:, np.newaxis] * generator
    if scaled.shape == (2, 2):
        Q, R = _qr_positive_2x2(scaled)
    else:
        Q, R = _qr_positive(scaled)
    max_imag = float(np.max(np.abs(R.imag)))
    if max_imag > imag_tol:
        raise UnsupportedDimensionError(
            f"effective channel is not real-valued: max |Im(R)| = {max_imag:.3e} "
            f"exceeds {imag_tol:.1e}"
        )
    return EffectiveChannel(Q=Q, R=R.real.copy(), max_imag=max_imag)


def effective_channel(lam) -> EffectiveChannel:
    """Effective real channel for the Golden generator. Realness of R is a
    theorem here, so the gate is at numerical noise level."""
    return effective_real_channel(lam, GOLDEN.generator, imag_tol=1e-10)


def split_real(ytilde, R, levels):
    """Split a rotated complex system with real R into its real-part and
    imaginary-part lattice problems (they share R and the level grid)."""
    ytilde = np.asarray(ytilde)
    grids = (tuple(levels),) * len(ytilde)
    return (
        LatticeProblem(R=R, y=ytilde.real, levels=grids),
        LatticeProblem(R=R, y=ytilde.imag, levels=grids),
    )


def decode_decoupled(y1, y2, Q, R, constellation: Constellation) -> DecodeResult:
    """Solve the four real subsystems of one decoupled observation.

    Exact joint-ML because the decomposition chain is norm-preserving;
    the returned metric is the sum of subsystem residuals, which equals
    ||Y - diag(lam) X||^2 for the decoded codeword.
    """
    Qh = Q.conj().T
    yt1 = Qh @ y1
    yt2 = Qh @ (_PHI_DIAG_CONJ * y2)
    grid = constellation.pam_levels.tolist()
    grids = [grid, grid]
    rows = R.tolist()
    metric = 0.0
    solved = []
    stats = []
    for yt in (yt1, yt2):
        for part in (yt.real.tolist(), yt.imag.tolist()):
            s = SearchStats()
            idx, m = _solve(rows, part, grids, True, s)
            solved.append(idx)
            stats.append(s)
            metric += m
    L = constellation.levels_per_axis
    re1, im1, re2, im2 = solved
    indices = (
        re1[0] * L + im1[0],
        re1[1] * L + im1[1],
        re2[0] * L + im2[0],
        re2[1] * L + im2[1],
    )
    return DecodeResult(indices=indices, metric=metric, subsystem_stats=tuple(stats))


def gcmb_decode(Y, lam, constellation: Constellation) -> DecodeResult:
    """Exact ML decoding of Y = diag(lam) X + N via the decoupled chain."""
    y1, y2 = receive_decompose(Y)
    chan = effective_channel(lam)
    return decode_decoupled(y1, y2, chan.Q, chan.R, constellation)


@lru_cache(maxsize=4)
def all_codewords(order: int) -> np.ndarray:
    """Every Golden codeword for the given QAM order, enumerated with the
    symbol-index quadruple (i1, i2, i3, i4) in lexicographic order."""
    if order > 16:
        raise ConfigurationError(
            f"refusing to enumerate {order}**4 codewords; exhaustive search is capped at 16-QAM"
        )
    const = qam_constellation(order)
    pts = const.points
    M = order
    out = np.empty((M**4, 2, 2), dtype=complex)
    n = 0
    for i1 in range(M):
        for i2 in range(M):
            x1 = (pts[i1], pts[i2])
            for i3 in range(M):
                for i4 in range(M):
                    out[n] = golden_encode(x1, (pts[i3], pts[i4]))
                    n += 1
    return out


def ml_codeword_decode(Y, A, constellation: Constellation):
    """Exhaustive ML over all M^4 codewords for an observation Y = A X + N.

    A is the effective channel (the fading matrix for plain MIMO, or
    diag(lam) for a beamformed observation). Ties keep the smallest
    quadruple, matching the decoupled decoder's tie rule. Returns
    (indices, metric).
    """
    M = constellation.order
    C = all_codewords(M)
    diff = Y[np.newaxis] - np.matmul(A, C)
    metrics = np.einsum("nij,nij->n", diff, diff.conj()).real
    flat = int(np.argmin(metrics))
    i1, rem = divmod(flat, M**3)
    i2, rem = divmod(rem, M**2)
    i3, i4 = divmod(rem, M)
    return (i1, i2, i3, i4), float(metrics[flat])
