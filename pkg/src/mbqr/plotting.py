"""Figure rendering for the report paths.

Each function returns the encoded PNG as bytes so the caller can write
it atomically next to the delimited output.  The Agg backend is forced
before pyplot is imported; rendering must not depend on a display.
"""

from __future__ import annotations

import io
from typing import TYPE_CHECKING, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

if TYPE_CHECKING:
    from .repeater import RepeaterReport, SweepRow

__all__ = [
    "repeater_figure_png",
    "sweep_figure_png",
    "threshold_figure_png",
]

# Fixed metadata keeps the PNG byte-identical across reruns; the
# default writer would otherwise embed no timestamp but matplotlib
# version strings may still appear, so pin what we can.
_METADATA = {"Software": "mbqr"}
_DPI = 110


def _render(fig: "plt.Figure") -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=_DPI, metadata=_METADATA)
    plt.close(fig)
    return buf.getvalue()


def sweep_figure_png(rows: Sequence["SweepRow"]) -> bytes:
    """Fidelity and overhead against total distance, one curve per depth."""
    levels = sorted({r.levels for r in rows})
    fig, (ax_f, ax_r) = plt.subplots(
        2, 1, figsize=(6.0, 7.0), sharex=True, constrained_layout=True
    )
    for n in levels:
        sub = [r for r in rows if r.levels == n]
        sub.sort(key=lambda r: r.distance_km)
        xs = [r.distance_km for r in sub]
        ax_f.plot(xs, [r.fidelity for r in sub], marker=".", label=f"{n} levels")
        finite = [(r.distance_km, r.overhead) for r in sub if r.overhead != float("inf")]
        if finite:
            ax_r.plot(*zip(*finite), marker=".", label=f"{n} levels")
    ax_f.axhline(0.5, color="grey", lw=0.8, ls="--")
    ax_f.set_ylabel("end-to-end fidelity")
    ax_f.legend(fontsize=8)
    ax_r.set_yscale("log")
    ax_r.set_xlabel("total distance (km)")
    ax_r.set_ylabel("pair overhead")
    return _render(fig)


def threshold_figure_png(
    curves: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    criticals: Mapping[str, float],
) -> bytes:
    """Single-round output fidelity against local noise per protocol.

    ``curves`` maps a protocol label to ``(noise_values, fidelities)``;
    ``criticals`` marks the located critical noise with a vertical line.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.2), constrained_layout=True)
    for label in sorted(curves):
        noise, fout = curves[label]
        (line,) = ax.plot(noise, fout, marker=".", label=label)
        crit = criticals.get(label)
        if crit is not None:
            ax.axvline(crit, color=line.get_color(), lw=0.8, ls="--")
    ax.set_xlabel("local noise 1 - p")
    ax.set_ylabel("output fidelity")
    ax.legend(fontsize=8)
    return _render(fig)


def repeater_figure_png(report: "RepeaterReport") -> bytes:
    """Fidelity trajectory across the nesting levels of a single run."""
    ys = [report.input_fidelity, *report.level_fidelities]
    xs = list(range(len(ys)))
    fig, ax = plt.subplots(figsize=(6.0, 4.2), constrained_layout=True)
    ax.plot(xs, ys, marker="o")
    ax.axhline(0.5, color="grey", lw=0.8, ls="--")
    ax.set_xticks(xs)
    ax.set_xlabel("nesting level (0 = elementary link)")
    ax.set_ylabel("pair fidelity")
    ax.set_ylim(0.0, 1.02)
    return _render(fig)
