"""Acceptance suite: one test per release criterion, at stated tolerances.

Each test prints a PASS/FAIL line with the measured quantity (run pytest
with -s to see them). Criterion 6 asserts a diversity-slope threshold of
3.2 over the BER window (1e-2, 1e-4); the measured exact-ML curve has
slope about 2.7 there and only steepens past 3.2 below BER 1e-4, so that
single check is expected to come out red; its test prints the measured
window slope and the deeper-window slope for context.
"""

import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from gcmb.channel import SnrPoint, sample_channel
from gcmb.golden import (
    all_codewords,
    effective_channel,
    gcmb_decode,
    golden_encode,
    golden_encode_lattice,
)
from gcmb.harness import (
    SimConfig,
    complexity_report,
    estimate_diversity_slope,
    gap_at_ber,
    run_ber_sweep,
    run_gc_comparison,
)
from gcmb.numerics import SeededRng, qam_constellation
from gcmb.pstbc import (
    bundled_generator_path,
    group_phases,
    load_generator_file,
    pcmb_decode,
    pcmb_group,
    pstbc_encode,
)

TIE_TOL = 1e-9


def report(num, passed, detail):
    print(f"{'PASS' if passed else 'FAIL'} criterion {num}: {detail}", flush=True)
    return passed


def test_criterion_01_encoder_equivalence():
    const = qam_constellation(4)
    t0 = time.perf_counter()
    worst = 0.0
    for idx in itertools.product(range(4), repeat=4):
        pts = const.points[list(idx)]
        d = np.max(np.abs(golden_encode(pts[:2], pts[2:]) - golden_encode_lattice(pts[:2], pts[2:])))
        worst = max(worst, float(d))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-14 and elapsed < 1.0
    assert report(1, ok, f"max |entry diff| over 256 quadruples = {worst:.2e} in {elapsed:.2f}s")


def test_criterion_02_effective_channel_realness():
    rng = SeededRng(202)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100_000):
        lam = sample_channel(2, 2, rng).gains
        worst = max(worst, effective_channel(lam).max_imag)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 10.0
    assert report(2, ok, f"max |Im(R)| over 1e5 channels = {worst:.2e} in {elapsed:.1f}s")


def test_criterion_03_ml_oracle_equivalence():
    const = qam_constellation(4)
    table = all_codewords(4)
    snr = SnrPoint.from_db(8.0, 2)
    rng = SeededRng(203)
    t0 = time.perf_counter()
    disagreements = 0
    for _ in range(10_000):
        pts = const.points[rng.integers(0, 4, size=4)]
        lam = sample_channel(2, 2, rng).gains
        Y = lam[:, np.newaxis] * golden_encode(pts[:2], pts[2:])
        Y = Y + rng.complex_gaussian(snr.n0, size=(2, 2))
        res = gcmb_decode(Y, lam, const)
        diff = Y[np.newaxis] - lam[np.newaxis, :, np.newaxis] * table
        metrics = np.einsum("nij,nij->n", diff, diff.conj()).real
        tied = np.nonzero(metrics <= metrics.min() + TIE_TOL)[0]
        expected = int(tied.min())  # shared lexicographic rule on the tie set
        got = ((res.indices[0] * 4 + res.indices[1]) * 4 + res.indices[2]) * 4 + res.indices[3]
        if got != expected:
            disagreements += 1
    elapsed = time.perf_counter() - t0
    ok = disagreements == 0 and elapsed < 60.0
    assert report(3, ok, f"{disagreements} disagreements in 1e4 trials in {elapsed:.1f}s")


@pytest.mark.parametrize("order", [4, 16, 64])
def test_criterion_04_worst_case_complexity(order):
    # 10^6 subsystem decodes: 83,334 trials x 3 SNR points x 4 subsystems
    cfg = SimConfig(
        scheme="gcmb", order=order, snr_db=(0.0, 10.0, 20.0),
        trials=83_334, seed=204, target_errors=0,
    )
    rep = complexity_report(cfg)
    budget = int(round(np.sqrt(order)))
    ok = (
        rep.subsystem_decodes >= 1_000_000
        and rep.max_nodes <= budget
        and rep.violations == 0
    )
    assert report(
        4, ok,
        f"M={order}: {rep.subsystem_decodes} subsystem decodes, "
        f"max nodes {rep.max_nodes} <= {budget}, violations {rep.violations}",
    )


def _per_group_candidates(order, dim):
    const = qam_constellation(order)
    idx = np.array(list(itertools.product(range(order), repeat=dim)))
    return idx, const.points[idx]


def test_criterion_05_pcmb_dim4():
    spec = load_generator_file(bundled_generator_path(4))
    cand_idx, cand_pts = _per_group_candidates(4, 4)
    worst = {4: 0, 16: 0}
    mismatches = 0
    for order in (4, 16):
        const = qam_constellation(order)
        rng = SeededRng(205 + order)
        snr = SnrPoint.from_db(6.0, 4)
        budget = const.levels_per_axis ** 3
        for _ in range(1000):
            tx = rng.integers(0, order, size=(4, 4))
            chan = sample_channel(4, 4, rng)
            X = pstbc_encode(spec, const.points[tx])
            Y = chan.gains[:, np.newaxis] * X + rng.complex_gaussian(snr.n0, size=(4, 4))
            res = pcmb_decode(Y, chan.gains, spec, const)
            worst[order] = max(worst[order], res.max_nodes)
            if order == 4:
                for j, yj in enumerate(pcmb_group(Y, spec), start=1):
                    B = group_phases(4, spec.g, j)[:, np.newaxis] * (
                        chan.gains[:, np.newaxis] * spec.generator
                    )
                    metrics = np.sum(np.abs(yj - cand_pts @ B.T) ** 2, axis=1)
                    tied = np.nonzero(metrics <= metrics.min() + TIE_TOL)[0]
                    expected = tuple(cand_idx[int(tied.min())])
                    if tuple(res.indices[(j - 1) * 4: j * 4]) != expected:
                        mismatches += 1
    ok = worst[4] <= 8 and worst[16] <= 64 and mismatches == 0
    assert report(
        5, ok,
        f"max nodes M=4: {worst[4]} <= 8, M=16: {worst[16]} <= 64; "
        f"{mismatches} per-group ML mismatches in 1e3 trials",
    )


def test_criterion_06_diversity_slope():
    cfg = SimConfig(
        scheme="gcmb", order=4, snr_db=tuple(range(8, 23, 2)),
        trials=2_000_000, target_errors=200, seed=206,
    )
    t0 = time.perf_counter()
    records = run_ber_sweep(cfg)
    elapsed = time.perf_counter() - t0
    total_trials = sum(r.trials for r in records)
    min_errors = min(r.bit_errors for r in records)
    slope = estimate_diversity_slope(records, (1e-2, 1e-4))
    # context: local slope over the three deepest points, where the
    # full-diversity behavior is visible
    tail = [r for r in records if r.ber > 0][-3:]
    tail_slope = -float(np.polyfit(
        [r.snr_db / 10.0 for r in tail], [np.log10(r.ber) for r in tail], 1
    )[0])
    ok = (
        slope >= 3.2
        and min_errors >= 200
        and total_trials <= 10_000_000
        and elapsed < 600.0
    )
    assert report(
        6, ok,
        f"slope over (1e-2,1e-4) = {slope:.2f} (need >= 3.2); "
        f"tail slope over the deepest points = {tail_slope:.2f}; "
        f"min errors/point {min_errors}, {total_trials} trials in {elapsed:.0f}s",
    )


def test_criterion_07_performance_gap():
    cfg = SimConfig(
        scheme="gcmb", order=4, snr_db=tuple(range(8, 19, 2)),
        trials=600_000, target_errors=200, seed=207,
    )
    mb, gc = run_gc_comparison(cfg)
    gap = gap_at_ber(mb, gc, 1e-3)
    ok = abs(gap) <= 1.5
    assert report(7, ok, f"|SNR gap| at BER 1e-3 = {abs(gap):.2f} dB (gcmb - gc-ml = {gap:+.2f})")


def test_criterion_08_dim4_substitute_checks():
    # the 4x4 exhaustive-ML baseline comparison is computationally out of
    # reach; substituted by criterion 5's property suite plus noiseless
    # exact-recovery checks here
    spec = load_generator_file(bundled_generator_path(4))
    failures = 0
    for order in (4, 16):
        const = qam_constellation(order)
        rng = SeededRng(208 + order)
        for _ in range(200):
            tx = rng.integers(0, order, size=(4, 4))
            chan = sample_channel(4, 4, rng)
            Y = chan.gains[:, np.newaxis] * pstbc_encode(spec, const.points[tx])
            res = pcmb_decode(Y, chan.gains, spec, const)
            if res.indices != tuple(tx.reshape(-1)) or res.metric > 1e-12:
                failures += 1
    ok = failures == 0
    assert report(8, ok, f"noiseless 4x4 exact recovery: {failures} failures in 400 trials")


def test_criterion_09_reproducibility(tmp_path):
    outs = [tmp_path / f"run{i}.csv" for i in range(3)]
    workers = ["1", "1", "4"]
    for out, w in zip(outs, workers):
        cmd = [
            sys.executable, "-m", "gcmb", "simulate",
            "--scheme", "gcmb", "--mod", "4",
            "--snr-start", "6", "--snr-stop", "12", "--snr-step", "3",
            "--trials", "3000", "--seed", "99", "--workers", w,
            "--out", str(out),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    blobs = [out.read_bytes() for out in outs]
    ok = blobs[0] == blobs[1] == blobs[2]
    assert report(9, ok, "bit-identical CSV across reruns and worker counts 1/4")


def test_criterion_10_statistical_soundness():
    rng = SeededRng(210)
    n = 1_000_000
    noise = rng.complex_gaussian(2.0, size=n)
    mean_ok = abs(np.mean(noise)) <= 5 * np.sqrt(2.0 / n)
    nvar = float(np.var(noise))
    chan_rng = SeededRng(211)
    entries = np.array([sample_channel(2, 2, chan_rng).H for _ in range(100_000)])
    hvar = float(np.var(entries.reshape(-1)))
    ok = mean_ok and abs(nvar - 2.0) <= 0.01 * 2.0 and abs(hvar - 1.0) <= 0.02
    assert report(
        10, ok,
        f"noise var {nvar:.4f} (want 2 +/- 1%), channel entry var {hvar:.4f} (want 1 +/- 2%)",
    )
