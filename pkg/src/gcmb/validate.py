"""Self-check suite behind the `validate` CLI command.

Runs the library's core invariants at desk scale: encoder equivalence,
decoupling exactness, realness of the effective channel, decoder-oracle
agreement with node budgets, generator statistics, and reproducibility.
Each check returns (name, passed, detail); the CLI turns any failure into
exit code 2.
"""

from __future__ import annotations

import itertools

import numpy as np

from .channel import SnrPoint, sample_channel
from .golden import (
    GOLDEN,
    effective_channel,
    gcmb_decode,
    golden_encode,
    golden_encode_lattice,
    ml_codeword_decode,
    receive_decompose,
)
from .harness import SimConfig, run_ber_sweep
from .numerics import SeededRng, qam_constellation
from .pstbc import golden_spec, pstbc_encode


def _check_constants():
    G = GOLDEN.generator
    err = float(np.max(np.abs(G @ G.conj().T - np.eye(2))))
    ok = err <= 1e-12 and abs(GOLDEN.alpha * GOLDEN.beta + 1) <= 1e-12
    return ok, f"max |G G^H - I| = {err:.2e}"


def _check_encoder_equivalence():
    const = qam_constellation(4)
    worst = 0.0
    for idx in itertools.product(range(4), repeat=4):
        pts = const.points[list(idx)]
        d = np.max(np.abs(golden_encode(pts[:2], pts[2:]) - golden_encode_lattice(pts[:2], pts[2:])))
        worst = max(worst, float(d))
    return worst <= 1e-14, f"max entry difference over 256 quadruples = {worst:.2e}"


def _check_pstbc_consistency():
    const = qam_constellation(4)
    spec = golden_spec()
    worst = 0.0
    for idx in itertools.product(range(4), repeat=4):
        pts = const.points[list(idx)]
        X = pstbc_encode(spec, np.array([pts[:2], pts[2:]]))
        worst = max(worst, float(np.max(np.abs(X - golden_encode(pts[:2], pts[2:])))))
    return worst <= 1e-14, f"max deviation from the 2x2 special case = {worst:.2e}"


def _check_decoupling(seed):
    rng = SeededRng(seed)
    const = qam_constellation(4)
    G = GOLDEN.generator
    phi = np.array([1.0, 1j])
    worst = 0.0
    for _ in range(200):
        Y = rng.complex_gaussian(1.0, size=(2, 2))
        lam = sample_channel(2, 2, rng).gains
        pts = const.points[rng.integers(0, 4, size=4)]
        x1, x2 = pts[:2], pts[2:]
        joint = np.sum(np.abs(Y - lam[:, np.newaxis] * golden_encode(x1, x2)) ** 2)
        y1, y2 = receive_decompose(Y)
        parts = np.sum(np.abs(y1 - lam * (G @ x1)) ** 2) + np.sum(
            np.abs(y2 - phi * lam * (G @ x2)) ** 2
        )
        worst = max(worst, float(abs(joint - parts)))
    return worst <= 1e-12, f"max |joint - decoupled| metric gap = {worst:.2e}"


def _check_realness(channels, seed):
    rng = SeededRng(seed)
    worst = 0.0
    for _ in range(channels):
        lam = sample_channel(2, 2, rng).gains
        worst = max(worst, effective_channel(lam).max_imag)
    return worst <= 1e-10, f"max |Im(R)| over {channels} channels = {worst:.2e}"


def _check_oracle_agreement(trials, seed):
    rng = SeededRng(seed)
    const = qam_constellation(4)
    snr = SnrPoint.from_db(8.0, 2)
    budget = const.levels_per_axis
    mismatches = 0
    worst_nodes = 0
    for _ in range(trials):
        pts = const.points[rng.integers(0, 4, size=4)]
        lam = sample_channel(2, 2, rng).gains
        Y = lam[:, np.newaxis] * golden_encode(pts[:2], pts[2:])
        Y = Y + rng.complex_gaussian(snr.n0, size=(2, 2))
        res = gcmb_decode(Y, lam, const)
        oracle_idx, oracle_metric = ml_codeword_decode(Y, np.diag(lam), const)
        worst_nodes = max(worst_nodes, res.max_nodes)
        if res.indices != oracle_idx and abs(res.metric - oracle_metric) > 1e-9:
            mismatches += 1
    ok = mismatches == 0 and worst_nodes <= budget
    return ok, (
        f"{mismatches} disagreements in {trials} trials; "
        f"max nodes {worst_nodes} (budget {budget})"
    )


def _check_node_budgets(seed):
    rng = SeededRng(seed)
    details = []
    ok = True
    for order in (16, 64):
        const = qam_constellation(order)
        budget = const.levels_per_axis
        snr = SnrPoint.from_db(2.0, 2)
        worst = 0
        for _ in range(500):
            pts = const.points[rng.integers(0, order, size=4)]
            lam = sample_channel(2, 2, rng).gains
            Y = lam[:, np.newaxis] * golden_encode(pts[:2], pts[2:])
            Y = Y + rng.complex_gaussian(snr.n0, size=(2, 2))
            worst = max(worst, gcmb_decode(Y, lam, const).max_nodes)
        ok = ok and worst <= budget
        details.append(f"M={order}: max {worst} <= {budget}")
    return ok, "; ".join(details)


def _check_generator_statistics(seed):
    rng = SeededRng(seed)
    noise = rng.complex_gaussian(2.0, size=100_000)
    var = float(np.var(noise))
    entries = np.array([sample_channel(2, 2, rng).H for _ in range(25_000)]).reshape(-1)
    hvar = float(np.var(entries))
    ok = abs(var - 2.0) <= 0.02 * 2.0 and abs(hvar - 1.0) <= 0.02
    return ok, f"noise var = {var:.4f} (want 2.0); channel entry var = {hvar:.4f} (want 1.0)"


def _check_reproducibility(seed):
    cfg = SimConfig(
        scheme="gcmb", order=4, snr_db=(6.0, 10.0), trials=2000,
        target_errors=0, seed=seed,
    )
    strip = lambda recs: [
        (r.scheme, r.order, r.snr_db, r.trials, r.bit_errors, r.ber, r.max_nodes, r.mean_nodes)
        for r in recs
    ]
    base = strip(run_ber_sweep(cfg))
    again = strip(run_ber_sweep(cfg))
    cfg_threaded = SimConfig(
        scheme="gcmb", order=4, snr_db=(6.0, 10.0), trials=2000,
        target_errors=0, seed=seed, workers=4,
    )
    threaded = strip(run_ber_sweep(cfg_threaded))
    ok = base == again == threaded
    return ok, "identical records across reruns and worker counts" if ok else "records diverged"


def run_validation(trials=2000, channels=20_000, seed=1):
    """Run every check; returns a list of (name, passed, detail)."""
    checks = (
        ("golden-constants", lambda: _check_constants()),
        ("encoder-equivalence", lambda: _check_encoder_equivalence()),
        ("pstbc-special-case", lambda: _check_pstbc_consistency()),
        ("decoupling-exactness", lambda: _check_decoupling(seed)),
        ("effective-channel-realness", lambda: _check_realness(channels, seed + 1)),
        ("decoder-oracle-agreement", lambda: _check_oracle_agreement(trials, seed + 2)),
        ("node-budgets", lambda: _check_node_budgets(seed + 3)),
        ("generator-statistics", lambda: _check_generator_statistics(seed + 4)),
        ("reproducibility", lambda: _check_reproducibility(seed + 5)),
    )
    results = []
    for name, fn in checks:
        passed, detail = fn()
        results.append((name, passed, detail))
    return results
