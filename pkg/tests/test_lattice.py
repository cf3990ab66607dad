"""Tests for the instrumented sphere decoder and its oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcmb.errors import ConfigurationError
from gcmb.lattice import (
    LatticeProblem,
    exhaustive_ml,
    real_sd,
    round_level_index,
    round_to_levels,
)
from gcmb.numerics import SeededRng, qam_constellation

PAM4 = tuple(qam_constellation(16).pam_levels)
PAM8 = tuple(qam_constellation(64).pam_levels)


def random_upper(rng, L, diag_min=0.3):
    """Random upper-triangular matrix with a positive diagonal."""
    R = np.triu(rng.generator.normal(0.0, 1.0, size=(L, L)))
    for k in range(L):
        R[k, k] = diag_min + abs(R[k, k])
    return R


_GRID_CACHE = {}


def full_grid(grids):
    """All level combinations, rows in lexicographic index order."""
    key = tuple(grids)
    if key not in _GRID_CACHE:
        mesh = np.meshgrid(*grids, indexing="ij")
        _GRID_CACHE[key] = np.stack(mesh, axis=-1).reshape(-1, len(grids))
    return _GRID_CACHE[key]


def brute_force(problem):
    """Full enumeration oracle; index vectors scanned in lexicographic order."""
    grids = problem.levels
    cands = full_grid(grids)
    metrics = np.sum((problem.y - cands @ problem.R.T) ** 2, axis=1)
    best = int(np.argmin(metrics))
    sizes = [len(g) for g in grids]
    idx = []
    for k in range(len(sizes) - 1, -1, -1):
        idx.append(best % sizes[k])
        best //= sizes[k]
    return tuple(reversed(idx)), float(np.min(metrics))


class TestRoundToLevels:
    def test_midpoint_goes_to_smaller(self):
        assert round_to_levels(0.0, (-1.0, 1.0)) == -1.0

    def test_nearest_for_16qam_levels(self):
        assert round_to_levels(0.9, PAM4) == pytest.approx(3 / np.sqrt(10))

    def test_clamps_outside_grid(self):
        assert round_to_levels(-100.0, (-1.0, 1.0)) == -1.0
        assert round_to_levels(100.0, (-1.0, 1.0)) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            round_to_levels(0.0, ())

    @given(st.floats(-10, 10, allow_nan=False))
    def test_returns_a_true_nearest_level(self, v):
        best = min(PAM8, key=lambda lev: abs(lev - v))
        got = round_to_levels(v, PAM8)
        assert abs(got - v) == pytest.approx(abs(best - v))


class TestExhaustiveMl:
    def test_single_candidate(self):
        assert exhaustive_ml(["only"], lambda c: 5.0) == (0, 5.0)

    def test_tie_keeps_lower_index(self):
        idx, cost = exhaustive_ml([3.0, 1.0, 1.0], lambda c: c)
        assert idx == 1 and cost == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            exhaustive_ml([], lambda c: 0.0)


class TestRealSd:
    def test_single_layer_nearest_level(self):
        p = LatticeProblem(R=[[1.0]], y=[0.3], levels=((-1.0, 1.0),))
        res = real_sd(p)
        assert res.point[0] == 1.0 and res.indices == (1,)

    def test_identity_r_decouples_to_rounding(self):
        lev = (-1 / np.sqrt(2), 1 / np.sqrt(2))
        p = LatticeProblem(R=np.eye(2), y=[0.6, -0.6], levels=(lev, lev))
        res = real_sd(p, round_last=True)
        np.testing.assert_allclose(res.point, [lev[1], lev[0]])

    @pytest.mark.parametrize("round_last", [False, True])
    def test_matches_brute_force_in_bulk(self, round_last):
        rng = SeededRng(2024)
        for trial in range(10_000):
            L = 1 + trial % 4
            grid = PAM4 if trial % 3 else PAM8
            p = LatticeProblem(
                R=random_upper(rng, L),
                y=rng.generator.normal(0.0, 2.0, size=L),
                levels=(grid,) * L,
            )
            res = real_sd(p, round_last=round_last)
            exp_idx, exp_metric = brute_force(p)
            assert res.indices == exp_idx
            assert res.metric == pytest.approx(exp_metric, rel=1e-9, abs=1e-12)

    def test_node_budget_is_hard(self):
        rng = SeededRng(77)
        for M, grid in ((16, PAM4), (64, PAM8)):
            sq = int(np.sqrt(M))
            worst = 0
            for _ in range(2000):
                p = LatticeProblem(
                    R=random_upper(rng, 2),
                    y=rng.generator.normal(0.0, 3.0, size=2),
                    levels=(grid, grid),
                )
                stats = real_sd(p, round_last=True).stats
                worst = max(worst, stats.nodes_visited)
                assert stats.nodes_visited <= sq
                assert stats.leaves_evaluated <= stats.nodes_visited
                assert 1 <= stats.radius_updates <= stats.leaves_evaluated
            assert worst >= 2  # the bound is exercised, not vacuous

    def test_four_layer_budget(self):
        rng = SeededRng(78)
        for _ in range(500):
            p = LatticeProblem(
                R=random_upper(rng, 4),
                y=rng.generator.normal(0.0, 3.0, size=4),
                levels=(PAM4,) * 4,
            )
            stats = real_sd(p, round_last=True).stats
            assert stats.nodes_visited <= 4**3

    def test_noiseless_first_leaf_is_already_optimal(self):
        # for y = R x with x on the grid, the Babai descent lands on x with
        # metric zero, so the radius is set exactly once
        rng = SeededRng(99)
        for _ in range(200):
            L = int(rng.integers(1, 5))
            R = random_upper(rng, L)
            idx = [int(i) for i in rng.integers(0, len(PAM4), size=L)]
            x = np.array([PAM4[i] for i in idx])
            p = LatticeProblem(R=R, y=R @ x, levels=(PAM4,) * L)
            res = real_sd(p, round_last=True)
            assert res.indices == tuple(idx)
            assert res.metric == pytest.approx(0.0, abs=1e-18)
            assert res.stats.radius_updates == 1

    def test_babai_point_can_be_improved_upon(self):
        # skewed system where successive rounding is suboptimal: the search
        # must update its radius at least twice
        p = LatticeProblem(
            R=np.array([[1.0, 1.9], [0.0, 1.0]]),
            y=np.array([-0.9, 0.05]),
            levels=((-1.0, 1.0), (-1.0, 1.0)),
        )
        res = real_sd(p, round_last=True)
        assert res.indices == (1, 0)
        assert res.indices == brute_force(p)[0]
        assert res.stats.radius_updates == 2

    def test_exact_tie_resolves_lexicographically(self):
        # y sits at the center of the grid: all four candidates tie
        p = LatticeProblem(R=np.eye(2), y=[0.0, 0.0], levels=((-1.0, 1.0), (-1.0, 1.0)))
        for round_last in (False, True):
            res = real_sd(p, round_last=round_last)
            assert res.indices == (0, 0)
        cands = list(itertools.product((-1.0, 1.0), repeat=2))
        idx, _ = exhaustive_ml(cands, lambda c: float(np.sum((p.y - p.R @ c) ** 2)))
        assert idx == 0

    @settings(max_examples=200, deadline=None)
    @given(
        data=st.data(),
        L=st.integers(1, 3),
        round_last=st.booleans(),
    )
    def test_matches_brute_force_hypothesis(self, data, L, round_last):
        y = [data.draw(st.floats(-4, 4, allow_nan=False)) for _ in range(L)]
        R = np.zeros((L, L))
        for k in range(L):
            R[k, k] = data.draw(st.floats(0.1, 3.0))
            for j in range(k + 1, L):
                R[k, j] = data.draw(st.floats(-2, 2))
        p = LatticeProblem(R=R, y=y, levels=(PAM4,) * L)
        res = real_sd(p, round_last=round_last)
        exp_idx, exp_metric = brute_force(p)
        assert res.metric == pytest.approx(exp_metric, rel=1e-9, abs=1e-12)


class TestLatticeProblemValidation:
    def test_rejects_single_level_layer(self):
        with pytest.raises(ConfigurationError):
            LatticeProblem(R=[[1.0]], y=[0.0], levels=((1.0,),))

    def test_rejects_nonpositive_diagonal(self):
        with pytest.raises(ConfigurationError):
            LatticeProblem(R=[[0.0]], y=[0.0], levels=((-1.0, 1.0),))

    def test_rejects_lower_triangular_garbage(self):
        with pytest.raises(ConfigurationError):
            LatticeProblem(
                R=[[1.0, 0.0], [0.5, 1.0]], y=[0.0, 0.0],
                levels=((-1.0, 1.0), (-1.0, 1.0)),
            )

    def test_rejects_unsorted_levels(self):
        with pytest.raises(ConfigurationError):
            LatticeProblem(R=[[1.0]], y=[0.0], levels=((1.0, -1.0),))
