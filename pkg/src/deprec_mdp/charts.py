"""
Sweep Charts for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

SVG line charts of gamma sweeps: one line per state, values against gamma.
Rendering uses matplotlib's object API (no pyplot state), with a fixed
hash salt and no date stamp so identical sweeps give identical files.
"""

import io
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "deprec-mdp"


def write_sweep_svg(
    rows: Sequence[Tuple[float, Sequence[float]]],
    state_names: Sequence[str],
    path: Optional[Union[str, Path]] = None,
    title: Optional[str] = None,
    states: Optional[Sequence[str]] = None,
) -> str:
    """
    Render a gamma sweep as an SVG line chart.

    Args:
        rows: (gamma, per-state values) in gamma order
        state_names: names of the value columns
        path: where to write the SVG; nothing is written when None
        title: chart title
        states: subset of state names to draw (default: all)

    Returns:
        The SVG document text

    Raises:
        ValueError: If rows is empty or names an unknown state
    """
    if not rows:
        raise ValueError("sweep needs at least one row")
    names = list(state_names)
    selected = list(states) if states is not None else names
    for name in selected:
        if name not in names:
            raise ValueError(f"unknown state '{name}' in chart selection")

    gammas = np.array([gamma for gamma, _ in rows], dtype=np.float64)
    table = np.array([np.asarray(values, dtype=np.float64) for _, values in rows])

    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    for name in selected:
        ax.plot(gammas, table[:, names.index(name)], label=name, linewidth=1.5)
    ax.set_xlabel("gamma")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()

    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    svg = buffer.getvalue()

    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(svg, encoding="utf-8")
        logger.info(f"Sweep chart written to {path}")
    return svg
