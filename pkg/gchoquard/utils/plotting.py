"""
SVG line plots: ray profiles and radial slices
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

try:
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt
    HAS_MATPLOTLIB = True
except ImportError:
    HAS_MATPLOTLIB = False

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
colors = ['#08589e', '#2b8cbe', '#4eb3d3', '#7bccc4', '#a8ddb5']

_RC_PARAMS = {
    'axes.labelsize': 10,
    'font.family': 'serif',
    'font.size': 9,
    'mathtext.fontset': 'stix',
    'legend.fontsize': 8,
    'xtick.labelsize': 8,
    'ytick.labelsize': 8,
    'figure.figsize': [fig_width, fig_width * golden_mean],
    'lines.linewidth': 1.2,
    'figure.subplot.left': 0.15,
    'figure.subplot.bottom': 0.15,
    'svg.hashsalt': 'gchoquard',
    'svg.fonttype': 'none',
}


def _save(fig, path: Path) -> Path:
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.debug("wrote %s", path)
    return path


def plot_ray_profile(path, profile: Sequence[Tuple[float, float]],
                     t_star: Optional[float] = None, t1: Optional[float] = None) -> Optional[Path]:
    """E(t phi) against t, with the ray maximum and the zero crossing marked"""
    if not HAS_MATPLOTLIB:
        logger.warning("matplotlib not installed, skipping %s", path)
        return None
    t = np.array([x for x, _ in profile])
    e = np.array([y for _, y in profile])
    with matplotlib.rc_context(_RC_PARAMS):
        fig, ax = plt.subplots()
        ax.plot(t, e, color=colors[0], label=r'$E(t\varphi)$')
        ax.axhline(0.0, color='0.6', lw=0.8)
        if t_star is not None:
            ax.axvline(t_star, color=colors[2], ls='--', lw=0.8, label=r'$t^*$')
        if t1 is not None:
            ax.axvline(t1, color=colors[3], ls=':', lw=0.8, label=r'$t_1$')
        ax.set_xlabel(r'$t$')
        ax.set_ylabel('energy')
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def plot_radial_slices(path, u, K=None) -> Optional[Path]:
    """u (and K) along s = first node and along r = first node"""
    if not HAS_MATPLOTLIB:
        logger.warning("matplotlib not installed, skipping %s", path)
        return None
    grid = u.grid
    with matplotlib.rc_context(_RC_PARAMS):
        fig, (ax_r, ax_s) = plt.subplots(1, 2, sharey=False, figsize=[2 * fig_width, fig_width * golden_mean])
        ax_r.plot(grid.r_nodes, u.values[:, 0], color=colors[0], label=r'$u$')
        ax_s.plot(grid.s_nodes, u.values[0, :], color=colors[0], label=r'$u$')
        if K is not None:
            ax_r.plot(grid.r_nodes, K.values[:, 0], color=colors[3], label=r'$K$')
            ax_s.plot(grid.s_nodes, K.values[0, :], color=colors[3], label=r'$K$')
        ax_r.set_xlabel(r'$r = |x|$')
        ax_s.set_xlabel(r'$s = |y|$')
        ax_r.legend(frameon=False)
        return _save(fig, Path(path))
