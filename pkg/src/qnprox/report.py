"""Figure rendering for experiment outputs.

The CSVs are the canonical record; these plots are a convenience view of
the same tables (cost versus iteration and time, PSNR versus time).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .solvers import IterationRecord  # noqa: E402

_STYLES = {
    "cqnpm": dict(color="tab:red", linestyle="-"),
    "apm": dict(color="tab:blue", linestyle="--"),
    "s_cqnpm": dict(color="tab:orange", linestyle="-."),
    "s_apm": dict(color="tab:green", linestyle=":"),
}


def _plot(tables: dict[str, list[IterationRecord]], x_of, y_of,
          xlabel: str, ylabel: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2), constrained_layout=True)
    for method, records in tables.items():
        style = _STYLES.get(method, {})
        ax.plot([x_of(r) for r in records], [y_of(r) for r in records],
                label=method, linewidth=1.6, **style)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, linestyle=":", alpha=0.6)
    ax.legend()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(tables: dict[str, list[IterationRecord]],
                   out_dir: str | Path) -> list[str]:
    """Write the standard trio of PNGs next to the CSVs; returns filenames."""
    out = Path(out_dir)
    made = []
    for name, x_of, y_of, xl, yl in (
        ("cost_vs_iter.png", lambda r: r.iter, lambda r: r.cost, "iteration", "cost"),
        ("cost_vs_time.png", lambda r: r.time_s, lambda r: r.cost, "time (s)", "cost"),
        ("psnr_vs_time.png", lambda r: r.time_s, lambda r: r.psnr, "time (s)", "PSNR (dB)"),
    ):
        _plot(tables, x_of, y_of, xl, yl, out / name)
        made.append(name)
    return made
