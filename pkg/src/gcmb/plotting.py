"""Figure rendering for sweep results and complexity reports.

Figures are written straight to files (Agg backend); nothing opens a
window. BER curves group CSV rows by (scheme, order) so one file can carry
several curves.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_MARKERS = ("o", "s", "d", "^", "v", "x", "*")


def group_curves(records):
    """Split a flat record list into curves keyed by (scheme, order)."""
    curves = {}
    for rec in records:
        curves.setdefault((rec.scheme, rec.order), []).append(rec)
    for recs in curves.values():
        recs.sort(key=lambda r: r.snr_db)
    return curves


def save_ber_figure(records, path, title=None):
    """Render BER-vs-SNR curves (log BER axis) to an image file."""
    curves = group_curves(records)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i, ((scheme, order), recs) in enumerate(sorted(curves.items())):
        pts = [(r.snr_db, r.ber) for r in recs if r.ber > 0]
        if not pts:
            continue
        snrs, bers = zip(*pts)
        ax.semilogy(snrs, bers, marker=_MARKERS[i % len(_MARKERS)],
                    label=f"{scheme} {order}-QAM")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_complexity_figure(report, path):
    """Render the node-count histogram of a complexity report, with the
    worst-case budget marked."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    nodes = list(report.histogram.keys())
    counts = list(report.histogram.values())
    ax.bar(nodes, counts, width=0.8, color="tab:blue", alpha=0.8)
    ax.axvline(report.budget + 0.5, color="tab:red", linestyle="--",
               label=f"worst-case budget = {report.budget}")
    ax.set_yscale("log")
    ax.set_xlabel("nodes visited per subsystem")
    ax.set_ylabel("occurrences")
    ax.set_title(f"{report.scheme} {report.order}-QAM: "
                 f"{report.subsystem_decodes} subsystem decodes")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
