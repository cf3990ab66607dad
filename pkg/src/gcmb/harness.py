"""Monte Carlo experiment engine: BER sweeps, curve analysis, and node-count
complexity reports.

Every trial draws its randomness from a child stream keyed by
(seed, snr index, trial index), so results are bit-identical no matter how
trials are scheduled across threads. Trials are processed in chunks of a
fixed size; an early-stop target truncates at the exact trial where the
cumulative error count crosses it, which keeps the stopping rule
order-independent too.
"""

from __future__ import annotations

import csv
import json
import time
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import log10

import numpy as np

from .channel import SnrPoint, gc_baseline_apply, gcmb_channel_apply, sample_channel
from .errors import ConfigurationError
from .golden import gcmb_decode, golden_encode, ml_codeword_decode
from .numerics import QAM_ORDERS, Constellation, SeededRng, qam_constellation
from .pstbc import PerfectCodeSpec, golden_spec, load_generator_file, pcmb_decode, pstbc_encode

SCHEMES = ("gcmb", "gc-ml", "pcmb")
CSV_FIELDS = (
    "scheme", "M", "snr_db", "trials", "bit_errors", "ber",
    "max_nodes", "mean_nodes", "elapsed_seconds", "seed",
)
DEFAULT_TARGET_ERRORS = 200
_CHUNK = 256  # trials per work unit; constant so chunking never shifts results


@dataclass(frozen=True)
class SimConfig:
    """Full description of one experiment; everything needed to reproduce it."""

    scheme: str
    order: int
    snr_db: tuple
    trials: int
    seed: int
    target_errors: int = DEFAULT_TARGET_ERRORS  # 0 disables early stop
    dim: int = 2
    generator_path: str | None = None
    noiseless: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.order not in QAM_ORDERS:
            raise ConfigurationError(f"unsupported order {self.order}; choose from {QAM_ORDERS}")
        snrs = tuple(float(s) for s in self.snr_db)
        if not snrs:
            raise ConfigurationError("need at least one SNR point")
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ConfigurationError("SNR points must be strictly increasing")
        object.__setattr__(self, "snr_db", snrs)
        if self.trials < 1:
            raise ConfigurationError("need at least one trial")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if self.target_errors < 0:
            raise ConfigurationError("target error count cannot be negative")
        if self.workers < 1:
            raise ConfigurationError("need at least one worker")
        if self.scheme == "gc-ml" and self.order > 16:
            raise ConfigurationError(
                "gc-ml enumerates M^4 codewords and is capped at 16-QAM"
            )
        if self.scheme == "pcmb":
            if self.dim not in (2, 4):
                raise ConfigurationError("pcmb decoding supports dimensions 2 and 4 only")
            if self.dim == 4 and not self.generator_path:
                raise ConfigurationError("pcmb with dimension 4 needs a generator file")
        elif self.dim != 2:
            raise ConfigurationError(f"scheme {self.scheme} is a 2x2 system")

    def code_spec(self) -> PerfectCodeSpec | None:
        if self.scheme != "pcmb":
            return None
        if self.generator_path:
            spec = load_generator_file(self.generator_path)
            if spec.dim != self.dim:
                raise ConfigurationError(
                    f"generator file has dimension {spec.dim}, config says {self.dim}"
                )
            return spec
        return golden_spec()


@dataclass(frozen=True)
class BerRecord:
    """One (scheme, M, SNR) result row."""

    scheme: str
    order: int
    snr_db: float
    trials: int
    bit_errors: int
    ber: float
    max_nodes: int
    mean_nodes: float
    elapsed_seconds: float
    seed: int


@dataclass(frozen=True)
class ComplexityReport:
    """Distribution of per-subsystem node counts over a whole run."""

    scheme: str
    order: int
    dim: int
    snr_db: tuple
    subsystem_decodes: int
    max_nodes: int
    mean_nodes: float
    histogram: dict
    budget: int
    violations: int


@dataclass(frozen=True)
class _TrialContext:
    const: Constellation
    snr: SnrPoint
    noiseless: bool
    spec: PerfectCodeSpec | None = None


def _count_bit_errors(const, sent, decoded):
    ham = const._hamming
    return int(sum(ham[int(a), int(b)] for a, b in zip(sent, decoded)))


def _trial_gcmb(rng, ctx):
    const = ctx.const
    tx = rng.integers(0, const.order, size=4)
    chan = sample_channel(2, 2, rng)
    X = golden_encode(const.points[tx[:2]], const.points[tx[2:]])
    Y = gcmb_channel_apply(X, chan, ctx.snr, rng, add_noise=not ctx.noiseless)
    res = gcmb_decode(Y, chan.gains, const)
    return ((_count_bit_errors(const, tx, res.indices), res.node_counts),)


def _trial_gc_ml(rng, ctx):
    const = ctx.const
    tx = rng.integers(0, const.order, size=4)
    chan = sample_channel(2, 2, rng)
    X = golden_encode(const.points[tx[:2]], const.points[tx[2:]])
    Y = gc_baseline_apply(X, chan.H, ctx.snr, rng, add_noise=not ctx.noiseless)
    idx, _ = ml_codeword_decode(Y, chan.H, const)
    return ((_count_bit_errors(const, tx, idx), (const.order**4,)),)


def _trial_pcmb(rng, ctx):
    const = ctx.const
    S = ctx.spec.dim
    tx = rng.integers(0, const.order, size=(S, S))
    chan = sample_channel(S, S, rng)
    X = pstbc_encode(ctx.spec, const.points[tx])
    Y = gcmb_channel_apply(X, chan, ctx.snr, rng, add_noise=not ctx.noiseless)
    res = pcmb_decode(Y, chan.gains, ctx.spec, const)
    return ((_count_bit_errors(const, tx.reshape(-1), res.indices), res.node_counts),)


def _trial_shared(rng, ctx):
    """One codeword/channel/noise stream feeding both decoders: the plain
    system sees H X + N, the beamformed one the rotated equivalent."""
    const = ctx.const
    tx = rng.integers(0, const.order, size=4)
    chan = sample_channel(2, 2, rng)
    X = golden_encode(const.points[tx[:2]], const.points[tx[2:]])
    if ctx.noiseless:
        N = np.zeros((2, 2))
    else:
        N = rng.complex_gaussian(ctx.snr.n0, size=(2, 2))
    Y_mb = chan.gains[:, np.newaxis] * X + chan.factors.U.conj().T @ N
    Y_gc = chan.H @ X + N
    res = gcmb_decode(Y_mb, chan.gains, const)
    idx_gc, _ = ml_codeword_decode(Y_gc, chan.H, const)
    return (
        (_count_bit_errors(const, tx, res.indices), res.node_counts),
        (_count_bit_errors(const, tx, idx_gc), (const.order**4,)),
    )


_TRIALS = {"gcmb": _trial_gcmb, "gc-ml": _trial_gc_ml, "pcmb": _trial_pcmb}


@dataclass
class _PointAggregate:
    trials: int = 0
    bit_errors: int = 0
    max_nodes: int = 0
    node_sum: int = 0
    node_count: int = 0
    histogram: Counter = field(default_factory=Counter)

    def add(self, errs, nodes):
        self.trials += 1
        self.bit_errors += int(errs)
        self.node_sum += int(sum(nodes))
        self.node_count += len(nodes)
        m = max(nodes)
        if m > self.max_nodes:
            self.max_nodes = int(m)
        self.histogram.update(nodes)

    @property
    def mean_nodes(self) -> float:
        return self.node_sum / self.node_count if self.node_count else 0.0


def _run_point(trial_fn, ctx, root, snr_idx, trials, target, workers, n_tracks):
    """Run one SNR point; returns one aggregate per track.

    Chunks are consumed strictly in trial order; with a target, the run is
    truncated at the first trial where every track has reached it.
    """

    def run_chunk(start):
        hi = min(start + _CHUNK, trials)
        return [
            trial_fn(root.child(snr_idx, t), ctx)
            for t in range(start, hi)
        ]

    aggs = [_PointAggregate() for _ in range(n_tracks)]

    def consume(chunk_results):
        for per_track in chunk_results:
            for agg, (errs, nodes) in zip(aggs, per_track):
                agg.add(errs, nodes)
            if target and all(a.bit_errors >= target for a in aggs):
                return True
        return False

    starts = list(range(0, trials, _CHUNK))
    if workers <= 1:
        for s in starts:
            if consume(run_chunk(s)):
                break
        return aggs

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = deque()
        i = 0
        stopped = False
        while (pending or i < len(starts)) and not stopped:
            while i < len(starts) and len(pending) < 2 * workers:
                pending.append(pool.submit(run_chunk, starts[i]))
                i += 1
            stopped = consume(pending.popleft().result())
    return aggs


def _bits_per_trial(cfg: SimConfig, const: Constellation) -> int:
    symbols = cfg.dim**2 if cfg.scheme == "pcmb" else 4
    return symbols * const.bits_per_symbol


def run_ber_sweep(cfg: SimConfig, on_record=None):
    """Run the configured sweep; one BerRecord per SNR point.

    Deterministic given the config (including seed and trial chunking);
    elapsed_seconds is measured wall time and is the only field that varies
    between runs.
    """
    const = qam_constellation(cfg.order)
    spec = cfg.code_spec()
    trial_fn = _TRIALS[cfg.scheme]
    root = SeededRng(cfg.seed)
    bits = _bits_per_trial(cfg, const)
    records = []
    for si, db in enumerate(cfg.snr_db):
        ctx = _TrialContext(
            const=const, snr=SnrPoint.from_db(db, cfg.dim), noiseless=cfg.noiseless, spec=spec
        )
        t0 = time.perf_counter()
        (agg,) = _run_point(
            trial_fn, ctx, root, si, cfg.trials, cfg.target_errors, cfg.workers, 1
        )
        rec = BerRecord(
            scheme=cfg.scheme,
            order=cfg.order,
            snr_db=db,
            trials=agg.trials,
            bit_errors=agg.bit_errors,
            ber=agg.bit_errors / (agg.trials * bits),
            max_nodes=agg.max_nodes,
            mean_nodes=agg.mean_nodes,
            elapsed_seconds=time.perf_counter() - t0,
            seed=cfg.seed,
        )
        records.append(rec)
        if on_record is not None:
            on_record(rec)
    return records


def run_gc_comparison(cfg: SimConfig, on_record=None):
    """Shared-stream comparison of gcmb against gc-ml.

    Both decoders see the same codeword/channel/noise sequence, so the gap
    between the two curves reflects the systems, not sampling noise.
    Returns (gcmb_records, gc_ml_records); both stop at the trial where each
    has collected the target error count.
    """
    if cfg.order > 16:
        raise ConfigurationError("comparison runs gc-ml and is capped at 16-QAM")
    const = qam_constellation(cfg.order)
    root = SeededRng(cfg.seed)
    bits = _bits_per_trial(cfg, const)
    out = ([], [])
    for si, db in enumerate(cfg.snr_db):
        ctx = _TrialContext(
            const=const, snr=SnrPoint.from_db(db, 2), noiseless=cfg.noiseless, spec=None
        )
        t0 = time.perf_counter()
        aggs = _run_point(
            _trial_shared, ctx, root, si, cfg.trials, cfg.target_errors, cfg.workers, 2
        )
        elapsed = time.perf_counter() - t0
        for records, scheme, agg in zip(out, ("gcmb", "gc-ml"), aggs):
            rec = BerRecord(
                scheme=scheme,
                order=cfg.order,
                snr_db=db,
                trials=agg.trials,
                bit_errors=agg.bit_errors,
                ber=agg.bit_errors / (agg.trials * bits),
                max_nodes=agg.max_nodes,
                mean_nodes=agg.mean_nodes,
                elapsed_seconds=elapsed,
                seed=cfg.seed,
            )
            records.append(rec)
            if on_record is not None:
                on_record(rec)
    return out


def _node_budget(cfg: SimConfig) -> int:
    sqrt_m = int(round(np.sqrt(cfg.order)))
    if cfg.scheme == "gc-ml":
        return cfg.order**4
    if cfg.scheme == "pcmb":
        return sqrt_m ** (cfg.dim - 1)
    return sqrt_m


def complexity_report(cfg: SimConfig) -> ComplexityReport:
    """Node-count distribution over all trials and SNR points of a run.

    Early stopping is disabled so every configured trial contributes.
    """
    const = qam_constellation(cfg.order)
    spec = cfg.code_spec()
    trial_fn = _TRIALS[cfg.scheme]
    root = SeededRng(cfg.seed)
    total = _PointAggregate()
    for si, db in enumerate(cfg.snr_db):
        ctx = _TrialContext(
            const=const, snr=SnrPoint.from_db(db, cfg.dim), noiseless=cfg.noiseless, spec=spec
        )
        (agg,) = _run_point(trial_fn, ctx, root, si, cfg.trials, 0, cfg.workers, 1)
        total.trials += agg.trials
        total.bit_errors += agg.bit_errors
        total.max_nodes = max(total.max_nodes, agg.max_nodes)
        total.node_sum += agg.node_sum
        total.node_count += agg.node_count
        total.histogram.update(agg.histogram)
    budget = _node_budget(cfg)
    violations = sum(occ for nodes, occ in total.histogram.items() if nodes > budget)
    return ComplexityReport(
        scheme=cfg.scheme,
        order=cfg.order,
        dim=cfg.dim,
        snr_db=cfg.snr_db,
        subsystem_decodes=total.node_count,
        max_nodes=total.max_nodes,
        mean_nodes=total.mean_nodes,
        histogram=dict(sorted(total.histogram.items())),
        budget=budget,
        violations=violations,
    )


def estimate_diversity_slope(records, ber_window):
    """Least-squares magnitude of the log10(BER) slope per SNR decade.

    Fits over the points whose BER lies inside (lo, hi); the curve must
    cross both window edges.
    """
    hi, lo = max(ber_window), min(ber_window)
    pts = sorted(records, key=lambda r: r.snr_db)
    bers = [r.ber for r in pts]
    if max(bers) < hi or min(bers) > lo:
        raise ConfigurationError(
            f"curve does not cross the BER window ({hi:g}, {lo:g}); "
            f"observed range [{min(bers):.3g}, {max(bers):.3g}]"
        )
    sel = [r for r in pts if lo <= r.ber <= hi]
    if len(sel) < 2:
        raise ConfigurationError("fewer than two points inside the BER window")
    x = np.array([r.snr_db / 10.0 for r in sel])
    y = np.array([log10(r.ber) for r in sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(abs(slope))


def _crossing_snr(records, target_ber):
    pts = [r for r in sorted(records, key=lambda r: r.snr_db) if r.ber > 0]
    for a, b in zip(pts, pts[1:]):
        lo, hi = min(a.ber, b.ber), max(a.ber, b.ber)
        if lo <= target_ber <= hi and a.ber != b.ber:
            t = (log10(target_ber) - log10(a.ber)) / (log10(b.ber) - log10(a.ber))
            return a.snr_db + t * (b.snr_db - a.snr_db)
    raise ConfigurationError(f"curve does not cross BER {target_ber:g}")


def gap_at_ber(curve_a, curve_b, target_ber):
    """SNR offset (dB, A minus B) where two curves reach the target BER,
    log-linearly interpolated."""
    return _crossing_snr(curve_a, target_ber) - _crossing_snr(curve_b, target_ber)


def _record_row(rec: BerRecord, include_timing: bool):
    elapsed = rec.elapsed_seconds if include_timing else 0.0
    return {
        "scheme": rec.scheme,
        "M": rec.order,
        "snr_db": rec.snr_db,
        "trials": rec.trials,
        "bit_errors": rec.bit_errors,
        "ber": rec.ber,
        "max_nodes": rec.max_nodes,
        "mean_nodes": rec.mean_nodes,
        "elapsed_seconds": elapsed,
        "seed": rec.seed,
    }


def write_records(records, path, fmt="csv", include_timing=False):
    """Write records as CSV (default) or JSON lines.

    Timing is zeroed unless requested so that identical configurations
    produce bit-identical files.
    """
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            writer.writeheader()
            for rec in records:
                writer.writerow({k: repr(v) if isinstance(v, float) else v
                                 for k, v in _record_row(rec, include_timing).items()})
    elif fmt == "json":
        with open(path, "w") as fh:
            for rec in records:
                fh.write(json.dumps(_record_row(rec, include_timing)) + "\n")
    else:
        raise ConfigurationError(f"unknown output format {fmt!r}")


def load_records_csv(path):
    """Read a CSV written by write_records back into BerRecord objects."""
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                BerRecord(
                    scheme=row["scheme"],
                    order=int(row["M"]),
                    snr_db=float(row["snr_db"]),
                    trials=int(row["trials"]),
                    bit_errors=int(row["bit_errors"]),
                    ber=float(row["ber"]),
                    max_nodes=int(row["max_nodes"]),
                    mean_nodes=float(row["mean_nodes"]),
                    elapsed_seconds=float(row["elapsed_seconds"]),
                    seed=int(row["seed"]),
                )
            )
    return records
