"""Render recorded traces into figures plus a delimited summary.

This is the offline companion to the run commands: they emit trace CSVs,
and this module turns one or more of those traces into the standard
convergence pictures (fitting error against iteration, factor gap against
iteration, objective against wall time) written as PNG files, next to a
small summary CSV with the final numbers per trace.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_report"]


def _log_safe(values):
    v = np.asarray(values, dtype=np.float64)
    return np.where(v > 0.0, v, np.nan)


def _line_plot(out_path, series, xlabel, ylabel, title):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, xs, ys in series:
        ax.plot(xs, _log_safe(ys), label=label)
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_report(traces, out_dir, stem="report"):
    """Render figures and a summary table for named traces.

    Parameters
    ----------
    traces : dict[str, list[IterationRecord]]
        Label -> trace; every trace must be nonempty.
    out_dir : path-like
        Created if missing.
    stem : str
        Prefix of the emitted file names.

    Returns
    -------
    list[pathlib.Path]
        Paths written: three PNG figures and one summary CSV.
    """
    if not traces:
        raise ValueError("no traces to report on")
    for label, trace in traces.items():
        if not trace:
            raise ValueError(f"trace {label!r} is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def series(attr, x_attr="k"):
        return [
            (
                label,
                [getattr(r, x_attr) for r in trace],
                [getattr(r, attr) for r in trace],
            )
            for label, trace in traces.items()
        ]

    written = [
        _line_plot(
            out_dir / f"{stem}_fitting_error.png",
            series("fitting_error"),
            "iteration",
            "normalized fitting error",
            "Fitting error vs iteration",
        ),
        _line_plot(
            out_dir / f"{stem}_symmetry_gap.png",
            series("symmetry_gap"),
            "iteration",
            "squared factor gap",
            "Factor gap vs iteration",
        ),
        _line_plot(
            out_dir / f"{stem}_objective_time.png",
            series("f_value", x_attr="elapsed_seconds"),
            "elapsed seconds",
            "objective value",
            "Objective vs wall time",
        ),
    ]

    summary = out_dir / f"{stem}_summary.csv"
    lines = ["label,iterations,f_final,fitting_error_final,symmetry_gap_final"]
    for label, trace in traces.items():
        last = trace[-1]
        lines.append(
            f"{label},{last.k},{last.f_value:.17g},"
            f"{last.fitting_error:.17g},{last.symmetry_gap:.17g}"
        )
    summary.write_text("\n".join(lines) + "\n", encoding="ascii")
    written.append(summary)
    return written
