"""Perfect space-time block codes in dimensions 2, 3, 4, 6 and their
beamformed decoding.

Codewords stack S shifted diagonal layers: X = sum_j diag(G x_j) E^(j-1),
with a unitary generator G and a shift matrix E whose wrap-around corner
carries a unit-magnitude phase g. The Golden Code is the S=2 member.
Generators for S > 2 are supplied externally via a plain-text file; the
loader validates unitarity. Decoding decouples the observation into S
groups exactly as in the S=2 case. It is supported where the effective
triangular channel is real-valued (S=2 always, S=4 checked at runtime);
the 3- and 6-stream codes use HEX constellations and a complex effective
channel, so their decode path is rejected.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UnsupportedDimensionError
from .golden import GOLDEN, DecodeResult, effective_real_channel
from .lattice import SearchStats, _solve
from .numerics import Constellation

SUPPORTED_DIMS = (2, 3, 4, 6)

# Corner phase of the shift matrix for each supported dimension.
CORNER_PHASES = {
    2: 1j,
    3: cmath.exp(2j * cmath.pi / 3),
    4: 1j,
    6: -cmath.exp(2j * cmath.pi / 3),
}

_UNITARITY_TOL = 1e-10


def build_shift_matrix(dim: int, g: complex) -> np.ndarray:
    """S x S shift matrix: ones on the superdiagonal, g in the bottom-left
    corner. Unitary, and its S-th power is g times the identity."""
    if dim not in SUPPORTED_DIMS:
        raise ConfigurationError(f"dimension must be one of {SUPPORTED_DIMS}, got {dim}")
    E = np.zeros((dim, dim), dtype=complex)
    for k in range(dim - 1):
        E[k, k + 1] = 1.0
    E[dim - 1, 0] = g
    return E


def group_phases(dim: int, g: complex, j: int) -> np.ndarray:
    """Diagonal of the group-j phase matrix: the last j-1 entries carry the
    wrap-around phase g, the rest are 1."""
    if not 1 <= j <= dim:
        raise ConfigurationError(f"group index must be in 1..{dim}, got {j}")
    phi = np.ones(dim, dtype=complex)
    phi[dim + 1 - j:] = g
    return phi


@dataclass(frozen=True)
class PerfectCodeSpec:
    """Validated perfect-code parameters: dimension, generator, corner phase."""

    dim: int
    g: complex
    generator: np.ndarray
    shift: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ConfigurationError(f"dimension must be one of {SUPPORTED_DIMS}, got {self.dim}")
        G = np.asarray(self.generator, dtype=complex)
        if G.shape != (self.dim, self.dim) or not np.all(np.isfinite(G)):
            raise ConfigurationError(f"generator must be a finite {self.dim}x{self.dim} matrix")
        gram = G @ G.conj().T
        err = float(np.max(np.abs(gram - np.eye(self.dim))))
        if err > _UNITARITY_TOL:
            raise ConfigurationError(f"generator is not unitary: max |G G^H - I| = {err:.3e}")
        if abs(abs(self.g) - 1.0) > 1e-12:
            raise ConfigurationError(f"corner phase must have unit magnitude, got |g|={abs(self.g)}")
        object.__setattr__(self, "generator", G)
        object.__setattr__(self, "shift", build_shift_matrix(self.dim, self.g))


def golden_spec() -> PerfectCodeSpec:
    """The S=2 perfect code, i.e. the Golden Code."""
    return PerfectCodeSpec(dim=2, g=1j, generator=GOLDEN.generator)


def load_generator_file(path) -> PerfectCodeSpec:
    """Parse a generator file.

    Line 1 holds "S g_re g_im"; the next S lines hold 2S whitespace-separated
    reals, one (re, im) pair per generator entry. Locale-independent float
    syntax only.
    """
    path = Path(path)
    try:
        tokens = [line.split() for line in path.read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise ConfigurationError(f"cannot read generator file {path}: {exc}") from exc
    try:
        dim = int(tokens[0][0])
        g = complex(float(tokens[0][1]), float(tokens[0][2]))
        rows = []
        for line in tokens[1:dim + 1]:
            vals = [float(t) for t in line]
            if len(vals) != 2 * dim:
                raise ValueError(f"expected {2 * dim} numbers per row, got {len(vals)}")
            rows.append([complex(vals[2 * k], vals[2 * k + 1]) for k in range(dim)])
        if len(rows) != dim:
            raise ValueError(f"expected {dim} generator rows, got {len(rows)}")
    except (IndexError, ValueError) as exc:
        raise ConfigurationError(f"malformed generator file {path}: {exc}") from exc
    return PerfectCodeSpec(dim=dim, g=g, generator=np.array(rows))


def bundled_generator_path(dim: int) -> Path:
    """Path of a generator file shipped with the package (dims 3 and 4)."""
    if dim not in (3, 4):
        raise ConfigurationError(f"no bundled generator for dimension {dim}")
    return Path(resources.files("gcmb").joinpath(f"data/generator_s{dim}.txt"))


def pstbc_encode(spec: PerfectCodeSpec, xs) -> np.ndarray:
    """Codeword from S symbol vectors (rows of xs): layer j contributes
    diag(G x_j) shifted j-1 positions."""
    xs = np.asarray(xs, dtype=complex)
    S = spec.dim
    if xs.shape != (S, S):
        raise ConfigurationError(f"expected {S} vectors of {S} symbols, got shape {xs.shape}")
    X = np.zeros((S, S), dtype=complex)
    P = np.eye(S, dtype=complex)
    for j in range(S):
        X += np.diag(spec.generator @ xs[j]) @ P
        P = P @ spec.shift
    return X


def pcmb_group(Y, spec: PerfectCodeSpec):
    """Partition an S x S observation into its S decoupled groups; group j
    takes entry (k, (k + j - 2 mod S) + 1) from each row k."""
    Y = np.asarray(Y)
    S = spec.dim
    cols = np.arange(S)
    return [Y[cols, (cols + j) % S] for j in range(S)]


def pcmb_decode(Y, lam, spec: PerfectCodeSpec, constellation: Constellation) -> DecodeResult:
    """Per-group exact ML decoding of Y = diag(lam) X + N.

    Each group reduces by phase removal and QR to a real triangular system
    whose real and imaginary parts are searched separately with the last
    layer rounded. Rejected for dimensions 3 and 6 (complex-valued
    effective channel, HEX signaling).
    """
    S = spec.dim
    if S in (3, 6):
        raise UnsupportedDimensionError(
            f"decoding is not supported for dimension {S}: the effective channel "
            "is complex-valued and the code uses HEX constellations"
        )
    imag_tol = 1e-10 if S == 2 else 1e-8
    chan = effective_real_channel(lam, spec.generator, imag_tol)
    Qh = chan.Q.conj().T
    grid = constellation.pam_levels.tolist()
    grids = [grid] * S
    rows = chan.R.tolist()
    L = constellation.levels_per_axis
    indices = []
    stats = []
    metric = 0.0
    for j0, yj in enumerate(pcmb_group(Y, spec)):
        phase_conj = group_phases(S, spec.g, j0 + 1).conj()
        ytj = Qh @ (phase_conj * yj)
        group_idx = []
        for part in (ytj.real.tolist(), ytj.imag.tolist()):
            s = SearchStats()
            idx, m = _solve(rows, part, grids, True, s)
            group_idx.append(idx)
            stats.append(s)
            metric += m
        indices.extend(group_idx[0][k] * L + group_idx[1][k] for k in range(S))
    return DecodeResult(indices=tuple(indices), metric=float(metric), subsystem_stats=tuple(stats))
