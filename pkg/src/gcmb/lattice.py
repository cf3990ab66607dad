"""Instrumented sphere decoding over real upper-triangular lattice systems.

``real_sd`` finds the exact minimizer of ||y - R x||^2 with each x
component restricted to a finite level grid, enumerating layers bottom-up
in Schnorr-Euchner zig-zag order. With ``round_last`` the final layer is
quantized instead of enumerated, which is exact because that layer's cost
is separable once the upper layers are fixed.

Node accounting: a "node" is a candidate examined at the deepest
enumerated layer (the layer whose assignment completes the enumerated
prefix); a "leaf" is a candidate completed to full length and scored.
With this accounting the worst case is exactly the product of the
enumerated layers' level counts, which is the bound the complexity
experiments assert.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from math import inf

import numpy as np

from .errors import ConfigurationError


@dataclass
class SearchStats:
    nodes_visited: int = 0
    leaves_evaluated: int = 0
    radius_updates: int = 0


@dataclass(frozen=True)
class LatticeProblem:
    """R: L x L real upper triangular with positive diagonal; y: L real
    observations; levels: per-layer ascending amplitude grids."""

    R: np.ndarray
    y: np.ndarray
    levels: tuple

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "y", y)
        L = y.shape[0] if y.ndim == 1 else -1
        if L < 1 or R.shape != (L, L):
            raise ConfigurationError(f"inconsistent system: R {R.shape}, y {y.shape}")
        if len(self.levels) != L:
            raise ConfigurationError("need one level grid per layer")
        for grid in self.levels:
            if len(grid) < 2:
                raise ConfigurationError("every layer needs at least two levels")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigurationError("level grids must be strictly ascending")
        for k in range(L):
            if not R[k, k] > 0:
                raise ConfigurationError(f"R diagonal must be positive, got {R[k, k]} at {k}")
            for j in range(k):
                if R[k, j] != 0.0:
                    raise ConfigurationError("R must be upper triangular")

    @property
    def size(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class SdResult:
    point: np.ndarray
    indices: tuple
    metric: float
    stats: SearchStats


def round_level_index(v: float, levels) -> int:
    """Index of the level nearest to v; exact midpoints go to the smaller level."""
    i = bisect_left(levels, v)
    if i == 0:
        return 0
    if i == len(levels):
        return len(levels) - 1
    return i - 1 if (v - levels[i - 1]) <= (levels[i] - v) else i


def round_to_levels(v: float, levels) -> float:
    """Nearest level to v from an ascending grid (midpoint ties downward)."""
    if len(levels) == 0:
        raise ConfigurationError("levels must be non-empty")
    return levels[round_level_index(v, levels)]


def exhaustive_ml(candidates, metric):
    """Scan a finite candidate sequence and return (index, cost) of the
    minimum; exact cost ties keep the earliest index."""
    best_i = -1
    best_m = inf
    for i, cand in enumerate(candidates):
        m = metric(cand)
        if m < best_m:
            best_i, best_m = i, m
    if best_i < 0:
        raise ConfigurationError("candidate set is empty")
    return best_i, best_m


def _solve_two_rounded(R, y, grids, stats):
    """Specialized search for the 2-layer system with the first layer
    rounded; this is the per-subsystem hot path of the 2x2 decoder."""
    r00 = R[0][0]
    r01 = R[0][1]
    r11 = R[1][1]
    y0 = y[0]
    y1 = y[1]
    g0 = grids[0]
    g1 = grids[1]
    est = y1 / r11
    order = sorted(range(len(g1)), key=lambda i: abs(g1[i] - est))
    best_m = inf
    best_idx = None
    nodes = leaves = updates = 0
    for i in order:
        d = y1 - r11 * g1[i]
        cand = d * d
        nodes += 1
        if cand > best_m:
            break  # siblings only get costlier
        rhs0 = y0 - r01 * g1[i]
        i0 = round_level_index(rhs0 / r00, g0)
        d0 = rhs0 - r00 * g0[i0]
        total = cand + d0 * d0
        leaves += 1
        if total < best_m:
            best_m = total
            best_idx = (i0, i)
            updates += 1
        elif total == best_m and (i0, i) < best_idx:
            best_idx = (i0, i)
    stats.nodes_visited = nodes
    stats.leaves_evaluated = leaves
    stats.radius_updates = updates
    return best_idx, best_m


def _solve(R, y, grids, round_last, stats):
    """Core enumeration over plain Python lists; returns (indices, metric).

    R is a list of rows, y a list, grids one ascending level list per
    layer. Layers are solved from the bottom row up; enumerated layers
    visit their levels in increasing distance from the unconstrained
    estimate so that sibling costs never decrease.
    """
    L = len(y)
    if round_last and L == 2:
        return _solve_two_rounded(R, y, grids, stats)
    if round_last and L == 1:
        i0 = round_level_index(y[0] / R[0][0], grids[0])
        d = y[0] - R[0][0] * grids[0][i0]
        stats.nodes_visited = 1
        stats.leaves_evaluated = 1
        stats.radius_updates = 1
        return (i0,), d * d

    best_m = inf
    best_idx = None
    floor = 1 if (round_last and L > 1) else 0  # lowest enumerated layer (0-based)
    x = [0.0] * L
    idx = [0] * L

    def descend(k: int, partial: float):
        nonlocal best_m, best_idx
        row = R[k]
        rhs = y[k]
        for j in range(k + 1, L):
            rhs -= row[j] * x[j]
        est = rhs / row[k]
        grid = grids[k]
        order = sorted(range(len(grid)), key=lambda i: abs(grid[i] - est))
        for i in order:
            lev = grid[i]
            d = rhs - row[k] * lev
            cand = partial + d * d
            if k > floor:
                if cand > best_m:
                    return  # siblings only get costlier
                x[k] = lev
                idx[k] = i
                descend(k - 1, cand)
                continue
            # deepest enumerated layer
            stats.nodes_visited += 1
            if cand > best_m:
                return
            x[k] = lev
            idx[k] = i
            if round_last:
                rhs0 = y[0]
                row0 = R[0]
                for j in range(1, L):
                    rhs0 -= row0[j] * x[j]
                i0 = round_level_index(rhs0 / row0[0], grids[0])
                lev0 = grids[0][i0]
                d0 = rhs0 - row0[0] * lev0
                total = cand + d0 * d0
                x[0] = lev0
                idx[0] = i0
            else:
                total = cand
            stats.leaves_evaluated += 1
            if total < best_m:
                best_m = total
                best_idx = tuple(idx)
                stats.radius_updates += 1
            elif total == best_m and tuple(idx) < best_idx:
                best_idx = tuple(idx)

    descend(L - 1, 0.0)
    return best_idx, best_m


def real_sd(problem: LatticeProblem, round_last: bool = False) -> SdResult:
    """Exact closest-point search over the level grid.

    Layers are solved from L down to 1. Each enumerated layer visits its
    levels in increasing distance from the unconstrained estimate, so the
    per-layer cost is non-decreasing and a branch can be abandoned as soon
    as its partial cost exceeds the best metric found so far. The first
    leaf reached is therefore the successive-rounding (Babai) point, and
    the search radius only ever shrinks. Exact metric ties are resolved
    toward the lexicographically smallest level-index vector, matching
    ``exhaustive_ml`` over candidates enumerated in index order.
    """
    stats = SearchStats()
    grids = [list(g) for g in problem.levels]
    best_idx, best_m = _solve(problem.R.tolist(), problem.y.tolist(), grids, round_last, stats)
    point = np.array([grids[k][best_idx[k]] for k in range(len(grids))])
    return SdResult(point, best_idx, best_m, stats)
