"""Delimited output and figure rendering.

Both writers are deterministic: identical inputs give identical bytes.  CSV
floats use a fixed %.12g rendering and the header carries no timestamps; SVG
output pins the hash salt and drops the date metadata.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

PACKAGE_VERSION = "0.1.0"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path: str | Path, subcommand: str, units: str,
              columns: Sequence[str], rows: Sequence[Sequence]) -> Path:
    """Write rows under a comment header naming the tool, subcommand and
    units, then the column header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# taubergames {PACKAGE_VERSION} subcommand={subcommand} "
                 f"units={units}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def line_chart(path: str | Path, x: Sequence[float],
               series: Mapping[str, Sequence[float]], *, title: str,
               xlabel: str, ylabel: str, logx: bool = False,
               logy: bool = False) -> Path:
    """Render one SVG line chart with a curve per series entry."""
    return curves_chart(path, {label: (x, ys) for label, ys in series.items()},
                        title=title, xlabel=xlabel, ylabel=ylabel, logx=logx,
                        logy=logy)


def curves_chart(path: str | Path,
                 curves: Mapping[str, tuple[Sequence[float], Sequence[float]]],
                 *, title: str, xlabel: str, ylabel: str, logx: bool = False,
                 logy: bool = False) -> Path:
    """Like line_chart but each curve carries its own x values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "taubergames",
                         "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            for label, (xs, ys) in curves.items():
                ax.plot(list(xs), list(ys), marker="o", markersize=3,
                        label=label)
            if logx:
                ax.set_xscale("log")
            if logy:
                ax.set_yscale("log")
            ax.set_title(title)
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            ax.grid(True, alpha=0.3)
            if curves:
                ax.legend(fontsize=8)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
