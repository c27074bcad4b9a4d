"""Hand-built hierarchies with known boundary structure.

Each synthetic level is given by a set of cut segments on the unit grid; its
supertiles are the connected components of the window minus the cuts.  Cut
sets grow as levels go down, so the levels are nested by construction.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .inflation import InflationHierarchy, LevelSchedule, hierarchy_from_owners, run_hierarchy
from .tiling import TilingWindow

SIDES = (4, 16, 64)
SIZE = 64


def blank_window(size: int = SIZE, label: str = "a") -> TilingWindow:
    return TilingWindow((0, 0), np.zeros((size, size), dtype=np.int32), (label,))


def owner_from_cuts(width: int, height: int, segments) -> np.ndarray:
    """Cells labelled by component of the window minus axis-parallel ``segments``.

    Ids are numbered in row-major order of each component's first cell.
    """
    grid = np.zeros((2 * height + 1, 2 * width + 1), dtype=bool)
    grid[1::2, 1::2] = True
    grid[1::2, 2:-1:2] = True
    grid[2:-1:2, 1::2] = True
    for (x0, y0), (x1, y1) in segments:
        if x0 == x1:
            lo, hi = sorted((y0, y1))
            grid[2 * lo + 1:2 * hi:2, 2 * x0] = False
        elif y0 == y1:
            lo, hi = sorted((x0, x1))
            grid[2 * y0, 2 * lo + 1:2 * hi:2] = False
        else:
            raise ValueError("cuts must be horizontal or vertical")
    labels, _ = ndimage.label(grid)
    cells = labels[1::2, 1::2]
    _, first, inv = np.unique(cells.ravel(), return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int32)
    rank[np.argsort(first)] = np.arange(len(first), dtype=np.int32)
    return rank[inv.ravel()].reshape(height, width)


def _vline(x, y0=0, y1=SIZE):
    return ((x, y0), (x, y1))


def _hline(y, x0=0, x1=SIZE):
    return ((x0, y), (x1, y))


def _grid(step, skip=()):
    out = []
    for v in range(step, SIZE, step):
        if v not in skip:
            out += [_vline(v), _hline(v)]
    return out


def _build(levels_top_first) -> InflationHierarchy:
    """``levels_top_first[i]`` are the cuts added at level ``depth - i``."""
    cuts, owners = [], []
    for added in levels_top_first:
        cuts = cuts + list(added)
        owners.append(owner_from_cuts(SIZE, SIZE, cuts))
    owners.reverse()
    return hierarchy_from_owners(blank_window(), owners, SIDES)


def two_end_ribbon() -> InflationHierarchy:
    """A single horizontal line persists through three levels: two ends."""
    return _build([[_hline(32)], [_vline(16), _vline(48), _hline(16), _hline(48)],
                   _grid(8, skip=(16, 32, 48))])


def four_exit_cross() -> InflationHierarchy:
    """Two full lines crossing at (32, 32) at every level: one 4-exit virtual cross."""
    return _build([[_hline(32), _vline(32)], [_vline(16), _vline(48), _hline(16), _hline(48)],
                   _grid(8, skip=(16, 32, 48))])


def two_root_tree(ell: int = 6) -> InflationHierarchy:
    """An H: two vertical lines joined by a bar of length ``ell`` at y = 32.

    Extra cuts at lower levels stay clear of the two branch points so the
    merged basic patch has four supertiles at every level.
    """
    xa = 32 - ell // 2
    xb = xa + ell
    top = [_vline(xa), _vline(xb), _hline(32, xa, xb)]
    mid = [_vline(16), _vline(48), _hline(16), _hline(48)]
    low = []
    for v in (8, 24, 40, 56):
        if v not in (xa, xb):
            low.append(_vline(v))
        low.append(_hline(v))
    return _build([top, mid, low])


def three_end_tree() -> InflationHierarchy:
    """A T through (32, 32); the lowest level also cuts the stem below, so D = (4, 3, 3)."""
    top = [_hline(32), _vline(32, 32, SIZE)]
    mid = [_vline(16), _vline(48), _hline(16), _hline(48)]
    low = [_vline(32, 0, 32)] + _grid(8, skip=(16, 32, 48))
    return _build([top, mid, low])


def empty_boundary() -> InflationHierarchy:
    """The top level is a single supertile, so nothing persists."""
    return _build([[], [_vline(32)], _grid(8, skip=(32,))])


def four_square_anchors():
    return [(0, 0), (5, 0), (0, 5), (5, 5)]


def four_square_fixture() -> InflationHierarchy:
    """8x8 window, N = 3, squares at (0,0), (5,0), (0,5), (5,5), no margin.

    The gaps give four arms of width 2 and one 2x2 cross in the middle; each
    supertile is a 4x4 quadrant.
    """
    win = blank_window(8)
    return run_hierarchy(win, LevelSchedule((3,)), margin_factor=0, anchors=[four_square_anchors()])


CANONICAL = {
    "two-end-ribbon": two_end_ribbon,
    "four-exit-cross": four_exit_cross,
    "two-root-tree": two_root_tree,
    "three-end-tree": three_end_tree,
    "empty-boundary": empty_boundary,
}
