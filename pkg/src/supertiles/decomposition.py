"""Partial box decomposition of one level: squares, arms, crosses, sectors.

Geometry is exact.  Lengths that can be half-integers (axes, exit points,
centres of crosses) are stored in *doubled* coordinates: the doubled value
``2 * v`` of a real coordinate ``v``.  Integer rectangles are closed boxes
``(x0, y0, x1, y1)`` in window-local coordinates (the window origin is
``(0, 0)``), so a cell ``(x, y)`` is the box ``(x, y, x + 1, y + 1)``.

Crosses are found on the cell complex of the unit grid, laid out as a
``(2H + 1, 2W + 1)`` array in which even indices are grid lines and odd
indices open unit intervals.  A square covers its open interior; an arm covers
its box minus its two ends.  Where an end rests on a square it touches no
cross, so those points are covered too, except inside leftovers that are
already a straight segment or a point: those are degenerate crosses made of
arm ends.  Each bounded component of what is left is a cross.  A zero-area
one needs at least two arms (two degenerate arms for a point); otherwise it is
a contact and is dropped.  An exit point is the midpoint of the
intersection of an arm end with a cross.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from . import kernels
from .kernels import DOWN, LEFT, RIGHT, UP
from .tiling import TilingWindow, occurrences, patch_type_map

RULES = ("greedy-lex", "pattern-anchored")


class DecompositionError(RuntimeError):
    """The complement of squares and arms is not made of rectangles."""


@dataclass(frozen=True)
class SquarePlacement:
    anchor: tuple[int, int]
    side: int

    @property
    def box(self) -> tuple[int, int, int, int]:
        x, y = self.anchor
        return (x, y, x + self.side, y + self.side)


@dataclass(frozen=True)
class Arm:
    between: tuple[int, int]
    rect: tuple[int, int, int, int]
    axis: tuple[tuple[int, int], tuple[int, int]]  # doubled coordinates, negative end first
    orientation: str  # of the axis: "vertical" when the squares face left/right
    degenerate: bool

    @property
    def width(self) -> int:
        x0, y0, x1, y1 = self.rect
        return x1 - x0 if self.orientation == "vertical" else y1 - y0

    @property
    def length(self) -> int:
        x0, y0, x1, y1 = self.rect
        return y1 - y0 if self.orientation == "vertical" else x1 - x0


@dataclass(frozen=True)
class Exit:
    point: tuple[int, int]  # doubled
    side: str  # side of the cross the arm comes from
    sign: str  # "positive" or "negative" end of the arm's axis
    arm: int
    squares: tuple[int, int]


@dataclass(frozen=True)
class Cross:
    rect: tuple[int, int, int, int]
    exits: tuple[Exit, ...]
    kind: str  # regular4 | regular3 | degenerate-segment | degenerate-point

    @property
    def center(self) -> tuple[int, int]:
        """Centre of mass, doubled."""
        x0, y0, x1, y1 = self.rect
        return (x0 + x1, y0 + y1)

    @property
    def multiplicity(self) -> int:
        return len(self.exits)

    def exit_points(self) -> dict[tuple[int, int], int]:
        """Distinct exit points with their multiplicities."""
        out: dict[tuple[int, int], int] = {}
        for e in self.exits:
            out[e.point] = out.get(e.point, 0) + 1
        return out

    @property
    def sides(self) -> set[str]:
        return {e.side for e in self.exits}


@dataclass(frozen=True)
class CrossSector:
    owner_cross: int
    region: tuple[tuple[int, int], ...]  # polygon, doubled coordinates
    cells: tuple[tuple[int, int], ...]
    square: int = -1


# ---------------------------------------------------------------- placement

def default_marker(window: TilingWindow, size: int = 2) -> TilingWindow:
    """The most frequent ``size x size`` patch (lowest type id on ties)."""
    types = patch_type_map(window, size)
    counts = np.bincount(types.ravel())
    t = int(np.argmax(counts))
    ys, xs = np.nonzero(types == t)
    return window.subwindow(int(xs[0]) + window.origin[0], int(ys[0]) + window.origin[1],
                            size, size)


def _place(window: TilingWindow, n: int, rule: str, region, marker=None) -> np.ndarray:
    if rule not in RULES:
        raise ValueError(f"unknown placement rule {rule!r}; expected one of {RULES}")
    x0, y0, x1, y1 = region
    if x1 - x0 < n or y1 - y0 < n:
        raise DecompositionError(
            f"region {x1 - x0}x{y1 - y0} is smaller than one {n}x{n} square")
    occ = np.zeros((window.height, window.width), dtype=np.uint8)
    placed = []
    if rule == "pattern-anchored":
        marker = marker if marker is not None else default_marker(window)
        ox, oy = window.origin
        cands = sorted((p.position[1] - oy, p.position[0] - ox)
                       for p in occurrences(window, marker))
        for y, x in cands:
            if x < x0 or y < y0 or x + n > x1 or y + n > y1:
                continue
            if occ[y:y + n, x:x + n].any():
                continue
            occ[y:y + n, x:x + n] = 1
            placed.append((x, y))
    rest = kernels.greedy_fill(occ, n, x0, y0, x1, y1)
    anchors = np.array(placed, dtype=np.int32).reshape(-1, 2)
    return np.ascontiguousarray(np.vstack([anchors, rest]).astype(np.int32))


def place_maximal_squares(window: TilingWindow, n: int, rule: str = "greedy-lex",
                          region=None, marker=None) -> list[SquarePlacement]:
    """Pairwise disjoint ``n x n`` squares, maximal inside ``region``.

    ``greedy-lex`` scans cells row by row from the bottom left and places a
    square wherever it fits.  ``pattern-anchored`` first places squares at
    occurrences of ``marker`` (default: the most frequent 2x2 patch), then
    completes greedily.
    """
    if n < 2:
        raise ValueError("square side must be at least 2")
    if window.width < n or window.height < n:
        raise DecompositionError(f"window {window.width}x{window.height} smaller than {n}x{n}")
    region = region or (0, 0, window.width, window.height)
    return [SquarePlacement((int(x), int(y)), n) for x, y in _place(window, n, rule, region, marker)]


def empty_squares(covered: np.ndarray, n: int, region) -> np.ndarray:
    """Anchors ``(x, y)`` of every ``n x n`` block in ``region`` with no covered cell."""
    x0, y0, x1, y1 = region
    sub = covered[y0:y1, x0:x1].astype(np.int64)
    if sub.shape[0] < n or sub.shape[1] < n:
        return np.zeros((0, 2), dtype=np.int64)
    s = np.zeros((sub.shape[0] + 1, sub.shape[1] + 1), dtype=np.int64)
    s[1:, 1:] = sub.cumsum(0).cumsum(1)
    block = s[n:, n:] - s[:-n, n:] - s[n:, :-n] + s[:-n, :-n]
    ys, xs = np.nonzero(block == 0)
    return np.stack([xs + x0, ys + y0], axis=1)


def maximality_violations(shape, anchors, n, region) -> list[tuple[int, int]]:
    """Positions where another ``n x n`` square would still fit (row-major)."""
    covered = np.zeros(shape, dtype=np.uint8)
    for x, y in anchors:
        covered[y:y + n, x:x + n] = 1
    found = empty_squares(covered, n, region)
    order = np.lexsort((found[:, 0], found[:, 1])) if len(found) else []
    return [(int(found[i, 0]), int(found[i, 1])) for i in order]


# ---------------------------------------------------------------- arms

def _arms_from_neighbors(anchors, n, dist, nbrs):
    """Vectorised arm construction; duplicates (P->Q and Q->P) are merged."""
    rows = []
    for direction in (RIGHT, UP, LEFT, DOWN):
        for slot in (0, 1):
            q = nbrs[:, direction, slot]
            s = np.nonzero(q >= 0)[0]
            if len(s) == 0:
                continue
            rows.append(np.stack([s, q[s], np.full(len(s), direction)], axis=1))
    if not rows:
        return np.zeros((0, 4), np.int64), np.zeros((0, 2), np.int64), np.zeros(0, bool)
    cand = np.vstack(rows).astype(np.int64)
    s, q, d = cand[:, 0], cand[:, 1], cand[:, 2]
    ps, qs = anchors[s].astype(np.int64), anchors[q].astype(np.int64)
    horiz_gap = (d == RIGHT) | (d == LEFT)
    # left/bottom square first
    lo = np.where(horiz_gap, np.where(ps[:, 0] <= qs[:, 0], s, q), np.where(ps[:, 1] <= qs[:, 1], s, q))
    hi = np.where(lo == s, q, s)
    a, b = anchors[lo].astype(np.int64), anchors[hi].astype(np.int64)
    rect = np.empty((len(cand), 4), dtype=np.int64)
    rect[:, 0] = np.where(horiz_gap, a[:, 0] + n, np.maximum(a[:, 0], b[:, 0]))
    rect[:, 1] = np.where(horiz_gap, np.maximum(a[:, 1], b[:, 1]), a[:, 1] + n)
    rect[:, 2] = np.where(horiz_gap, b[:, 0], np.minimum(a[:, 0], b[:, 0]) + n)
    rect[:, 3] = np.where(horiz_gap, np.minimum(a[:, 1], b[:, 1]) + n, b[:, 1])
    # the unordered pair and the gap direction determine the arm
    key = (lo * len(anchors) + hi) * 2 + horiz_gap
    _, first = np.unique(key, return_index=True)
    first = np.sort(first)
    between = np.stack([s[first], q[first]], axis=1)
    return rect[first], between, horiz_gap[first]


def _arm_axis(rect, vertical):
    x0, y0, x1, y1 = (int(v) for v in rect)
    if vertical:
        mx = x0 + x1
        return ((mx, 2 * y0), (mx, 2 * y1))
    my = y0 + y1
    return ((2 * x0, my), (2 * x1, my))


def neighbors_and_arms(anchors: np.ndarray, n: int, region, shape):
    """Arms of a packing.

    Returns ``(rects, between, vertical_axis, censored)`` where ``censored``
    lists ``(square, direction)`` pairs whose edge found no square inside the
    region.
    """
    sqmap = np.full(shape, -1, dtype=np.int32)
    a = np.asarray(anchors, dtype=np.int64).reshape(-1, 2)
    paint_rects(sqmap, np.stack([a[:, 1], a[:, 0], a[:, 1] + n, a[:, 0] + n], axis=1),
                np.arange(len(a), dtype=np.int32))
    x0, y0, x1, y1 = region
    dist, nbrs = kernels.nearest_squares(sqmap, np.ascontiguousarray(anchors, dtype=np.int32),
                                         n, x0, y0, x1, y1)
    rects, between, vertical = _arms_from_neighbors(anchors, n, dist, nbrs)
    cs, cd = np.nonzero(dist < 0)
    return rects, between, vertical, list(zip(cs.tolist(), cd.tolist())), sqmap


# ---------------------------------------------------------------- crosses

def paint_rects(arr: np.ndarray, rects: np.ndarray, value, add: bool = False,
                chunk: int = 1 << 22) -> None:
    """Fill half-open boxes ``rects[i] = (r0, c0, r1, c1)`` of ``arr`` (row, col).

    Boxes of equal shape are painted together with fancy indexing; empty boxes
    are skipped.  ``value`` is a scalar or one value per box.
    """
    rects = np.asarray(rects, dtype=np.int64).reshape(-1, 4)
    vals = np.broadcast_to(np.asarray(value), (len(rects),))
    hw = np.stack([rects[:, 2] - rects[:, 0], rects[:, 3] - rects[:, 1]], axis=1)
    keep = (hw[:, 0] > 0) & (hw[:, 1] > 0)
    if not keep.any():
        return
    shapes, inv = np.unique(hw[keep], axis=0, return_inverse=True)
    idx_keep = np.nonzero(keep)[0]
    for g, (h, w) in enumerate(shapes):
        members = idx_keep[inv.ravel() == g]
        step = max(1, chunk // int(h * w))
        dr = np.arange(h)[None, :, None]
        dc = np.arange(w)[None, None, :]
        for k in range(0, len(members), step):
            m = members[k:k + step]
            rows = rects[m, 0][:, None, None] + dr
            cols = rects[m, 1][:, None, None] + dc
            v = vals[m][:, None, None]
            if add:
                np.add.at(arr, (np.broadcast_to(rows, (len(m), h, w)),
                                np.broadcast_to(cols, (len(m), h, w))),
                          np.broadcast_to(v, (len(m), h, w)))
            else:
                arr[rows, cols] = v


def _end_boxes(rects, vertical):
    """Complex-index boxes ``(r0, c0, r1, c1)`` of arm ends, with outward steps.

    Returns ``(boxes, step)`` for the 2m ends (negative end first); ``step`` is
    the ``(dy, dx)`` pointing away from the arm.
    """
    r = np.asarray(rects, dtype=np.int64).reshape(-1, 4)
    v = np.asarray(vertical, dtype=bool)
    m = len(r)
    boxes = np.empty((m, 2, 4), dtype=np.int64)
    step = np.empty((m, 2, 2), dtype=np.int64)
    # vertical axis: ends are the rows y0 and y1 over columns x0..x1
    boxes[:, 0] = np.where(v[:, None],
                           np.stack([2 * r[:, 1], 2 * r[:, 0], 2 * r[:, 1] + 1, 2 * r[:, 2] + 1], 1),
                           np.stack([2 * r[:, 1], 2 * r[:, 0], 2 * r[:, 3] + 1, 2 * r[:, 0] + 1], 1))
    boxes[:, 1] = np.where(v[:, None],
                           np.stack([2 * r[:, 3], 2 * r[:, 0], 2 * r[:, 3] + 1, 2 * r[:, 2] + 1], 1),
                           np.stack([2 * r[:, 1], 2 * r[:, 2], 2 * r[:, 3] + 1, 2 * r[:, 2] + 1], 1))
    step[:, 0] = np.where(v[:, None], [-1, 0], [0, -1])
    step[:, 1] = np.where(v[:, None], [1, 0], [0, 1])
    return boxes.reshape(-1, 4), step.reshape(-1, 2)


def _complex_cover(shape, anchors, n, rects, vertical):
    h, w = shape
    cover = np.zeros((2 * h + 1, 2 * w + 1), dtype=np.uint8)
    a = np.asarray(anchors, dtype=np.int64).reshape(-1, 2)
    paint_rects(cover, np.stack([2 * a[:, 1] + 1, 2 * a[:, 0] + 1,
                                 2 * (a[:, 1] + n), 2 * (a[:, 0] + n)], axis=1), 1)
    square = cover.astype(bool)
    r = np.asarray(rects, dtype=np.int64).reshape(-1, 4)
    v = np.asarray(vertical, dtype=bool)
    # vertical axis: closed across the gap (x), open along the length (y)
    rv, rh = r[v], r[~v]
    paint_rects(cover, np.stack([2 * rv[:, 1] + 1, 2 * rv[:, 0], 2 * rv[:, 3], 2 * rv[:, 2] + 1], axis=1), 1)
    paint_rects(cover, np.stack([2 * rh[:, 1], 2 * rh[:, 0] + 1, 2 * rh[:, 3] + 1, 2 * rh[:, 2]], axis=1), 1)
    # contacts: end points whose outward neighbour is a square interior
    boxes, step = _end_boxes(r, v)
    end = np.zeros_like(square)
    contact = np.zeros_like(square)
    H, W = square.shape
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        sel = (step[:, 0] == dy) & (step[:, 1] == dx)
        if not sel.any():
            continue
        end[:] = False
        paint_rects(end, boxes[sel], True)
        out = np.zeros_like(square)
        out[max(0, -dy):H - max(0, dy), max(0, -dx):W - max(0, dx)] = \
            square[max(0, dy):H - max(0, -dy), max(0, dx):W - max(0, -dx)]
        contact |= end & out
    return cover, contact


SIDES = ("left", "right", "bottom", "top")
SIGNS = ("positive", "negative")
KINDS = ("regular4", "regular3", "degenerate-segment", "degenerate-point")


def arm_axes(rects: np.ndarray, vertical: np.ndarray) -> np.ndarray:
    """Axis endpoints ``(m, 2, 2)`` in doubled coordinates, negative end first."""
    r = np.asarray(rects, dtype=np.int64).reshape(-1, 4)
    v = np.asarray(vertical, dtype=bool)
    out = np.empty((len(r), 2, 2), dtype=np.int64)
    out[:, 0, 0] = np.where(v, r[:, 0] + r[:, 2], 2 * r[:, 0])
    out[:, 0, 1] = np.where(v, 2 * r[:, 1], r[:, 1] + r[:, 3])
    out[:, 1, 0] = np.where(v, r[:, 0] + r[:, 2], 2 * r[:, 2])
    out[:, 1, 1] = np.where(v, 2 * r[:, 3], r[:, 1] + r[:, 3])
    return out


@dataclass
class CrossArrays:
    """Crosses and their exits as flat arrays (exits grouped by cross)."""

    rects: np.ndarray  # (m, 4)
    kinds: np.ndarray  # (m,) index into KINDS
    exit_cross: np.ndarray  # (e,)
    exit_points: np.ndarray  # (e, 2) doubled
    exit_sides: np.ndarray  # (e,) index into SIDES
    exit_signs: np.ndarray  # (e,) index into SIGNS
    exit_arms: np.ndarray  # (e,)
    irregular: list

    def __len__(self):
        return len(self.rects)


def _end_hits(labels, boxes, along_cols, live, chunk: int = 1 << 22):
    """``(end, label, tmin, tmax)`` for every arm end meeting a live component.

    ``t`` is the complex index along the end: the column where ``along_cols``
    (ends of vertical-axis arms), else the row.
    """
    lens = np.maximum(boxes[:, 2] - boxes[:, 0], boxes[:, 3] - boxes[:, 1])
    out = []
    for L in np.unique(lens):
        members = np.nonzero(lens == L)[0]
        t = np.arange(L)
        for k in range(0, len(members), max(1, chunk // int(L))):
            m = members[k:k + chunk // int(L)]
            ac = along_cols[m][:, None]
            ys = boxes[m, 0][:, None] + np.where(ac, 0, t)
            xs = boxes[m, 1][:, None] + np.where(ac, t, 0)
            lab = labels[ys, xs]
            hit = live[lab]
            if not hit.any():
                continue
            e = np.broadcast_to(m[:, None], lab.shape)[hit]
            tt = np.where(ac, xs, ys)[hit]
            out.append(np.stack([e, lab[hit], tt], axis=1))
    if not out:
        return np.zeros((0, 4), dtype=np.int64)
    pts = np.concatenate(out).astype(np.int64)
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    pts = pts[order]
    new = np.r_[True, (pts[1:, 0] != pts[:-1, 0]) | (pts[1:, 1] != pts[:-1, 1])]
    starts = np.nonzero(new)[0]
    ends = np.r_[starts[1:], len(pts)] - 1
    return np.stack([pts[starts, 0], pts[starts, 1], pts[starts, 2], pts[ends, 2]], axis=1)


def _components(labels, skip=None):
    """Per-label complex bounds, point counts and whether any open cell is present."""
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    if skip is not None:
        keep = ~skip[lab]
        ys, xs, lab = ys[keep], xs[keep], lab[keep]
    order = np.argsort(lab, kind="stable")
    ys, xs, lab = ys[order], xs[order], lab[order]
    ids, sizes = np.unique(lab, return_counts=True)
    if not len(ids):
        z = np.zeros(0, np.int64)
        return ids, z, z, z, z, sizes, z.astype(bool)
    bounds = np.r_[0, np.cumsum(sizes)[:-1]]
    cell = ((xs % 2) & (ys % 2)).astype(np.int8)
    return (ids, np.minimum.reduceat(xs, bounds), np.maximum.reduceat(xs, bounds),
            np.minimum.reduceat(ys, bounds), np.maximum.reduceat(ys, bounds), sizes,
            np.maximum.reduceat(cell, bounds) > 0)


def find_crosses(shape, anchors, n, rects, between, vertical, strict=True) -> CrossArrays:
    """Bounded complement components as crosses, plus any non-rectangular ones."""
    cover, contact = _complex_cover(shape, anchors, n, rects, vertical)
    # zero-area segments and points keep their contacts; everything else drops them
    labels, count = ndimage.label(cover == 0)
    ids, X0, X1, Y0, Y1, sizes, _ = _components(labels)
    flat = ((X0 == X1) | (Y0 == Y1)) & ((X1 - X0 + 1) * (Y1 - Y0 + 1) == sizes) \
        & (X0 % 2 == 0) & (Y0 % 2 == 0) & (X1 % 2 == 0) & (Y1 % 2 == 0)
    keep = np.zeros(count + 1, dtype=bool)
    keep[ids[flat]] = True
    cover |= contact & ~keep[labels]
    del contact, keep
    labels, count = ndimage.label(cover == 0)
    del cover
    frame = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    unbounded = np.zeros(count + 1, dtype=bool)
    unbounded[np.unique(frame)] = True
    unbounded[0] = True
    ids, X0, X1, Y0, Y1, sizes, area = _components(labels, unbounded)

    # arm ends meeting each component
    r = np.asarray(rects, dtype=np.int64).reshape(-1, 4)
    v = np.asarray(vertical, dtype=bool)
    boxes, _ = _end_boxes(r, v)
    hits = _end_hits(labels, boxes, np.repeat(v, 2), ~unbounded)
    del labels
    lab_index = np.full(count + 1, -1, dtype=np.int64)
    lab_index[ids] = np.arange(len(ids))
    comp = lab_index[hits[:, 1]]
    degenerate = np.where(v, r[:, 0] == r[:, 2], r[:, 1] == r[:, 3])[hits[:, 0] // 2]
    point = (X0 == X1) & (Y0 == Y1)
    # a point cross is where degenerate arms meet; elsewhere a wide arm must share a stretch
    counted = np.where(point[comp], True, (hits[:, 3] > hits[:, 2]) | degenerate)
    hits, comp, degenerate = hits[counted], comp[counted], degenerate[counted]

    def arms_per_component(mask):
        pairs = np.unique(np.stack([comp[mask], hits[mask, 0] // 2], axis=1), axis=0)
        return np.bincount(pairs[:, 0], minlength=len(ids)) if len(pairs) else np.zeros(len(ids), np.int64)
    contact = ~area & (arms_per_component(np.where(point[comp], degenerate, True)) < 2)

    ok = (((X1 - X0 + 1) * (Y1 - Y0 + 1)) == sizes) & (X0 % 2 == 0) & (X1 % 2 == 0) \
        & (Y0 % 2 == 0) & (Y1 % 2 == 0) & ~contact
    bad = [(X0[i] / 2, Y0[i] / 2, X1[i] / 2, Y1[i] / 2) for i in np.nonzero(~ok & ~contact)[0]]
    if bad and strict:
        raise DecompositionError(
            f"{len(bad)} complement component(s) are not rectangles, first bounding box {bad[0]}")
    crect = np.stack([X0 // 2, Y0 // 2, X1 // 2, Y1 // 2], axis=1)[ok].astype(np.int64)
    cross_lab = ids[ok]
    srt = np.lexsort((crect[:, 2], crect[:, 3], crect[:, 0], crect[:, 1]))
    crect, cross_lab = crect[srt], cross_lab[srt]
    lab_to_cross = np.full(count + 1, -1, dtype=np.int64)
    lab_to_cross[cross_lab] = np.arange(len(cross_lab))

    # exits: midpoint of each arm end's intersection with a cross
    cid = lab_to_cross[hits[:, 1]]
    sel = cid >= 0
    hits, cid = hits[sel], cid[sel]
    e_arm = hits[:, 0] // 2
    pos = (hits[:, 0] % 2) == 1
    vert = v[e_arm]
    mid = (hits[:, 2] + hits[:, 3]) // 2
    fixed = np.where(vert, np.where(pos, 2 * r[e_arm, 3], 2 * r[e_arm, 1]),
                     np.where(pos, 2 * r[e_arm, 2], 2 * r[e_arm, 0]))
    e_pts = np.stack([np.where(vert, mid, fixed), np.where(vert, fixed, mid)], axis=1)
    # vertical axis: positive (top) end -> cross's bottom side
    side = np.where(vert, np.where(pos, 2, 3), np.where(pos, 0, 1))
    e_cross = cid
    e_sign = np.where(pos, 0, 1)
    eo = np.lexsort((e_arm, side, e_pts[:, 1], e_pts[:, 0], e_cross))
    e_cross, e_pts, e_arm, side, e_sign = e_cross[eo], e_pts[eo], e_arm[eo], side[eo], e_sign[eo]

    mult = np.bincount(e_cross, minlength=len(crect))
    w = crect[:, 2] - crect[:, 0]
    h = crect[:, 3] - crect[:, 1]
    kinds = np.where((w == 0) & (h == 0), 3, np.where((w == 0) | (h == 0), 2, np.where(mult >= 4, 0, 1)))
    return CrossArrays(crect, kinds.astype(np.int8), e_cross, e_pts, side.astype(np.int8),
                       e_sign.astype(np.int8), e_arm, bad)


# ---------------------------------------------------------------- sectors

def _boundary_param(rect, p):
    """Counter-clockwise position of doubled point ``p`` on the doubled rect boundary."""
    x0, y0, x1, y1 = (2 * v for v in rect)
    w, h = x1 - x0, y1 - y0
    px, py = p
    if py == y0 and px < x1:
        return px - x0
    if px == x1 and py < y1:
        return w + (py - y0)
    if py == y1 and px > x0:
        return w + h + (x1 - px)
    return 2 * w + h + (y1 - py)


def _corners_between(rect, t0, t1):
    x0, y0, x1, y1 = (2 * v for v in rect)
    w, h = x1 - x0, y1 - y0
    total = 2 * (w + h)
    corners = [(0, (x0, y0)), (w, (x1, y0)), (w + h, (x1, y1)), (2 * w + h, (x0, y1))]
    out = []
    span = (t1 - t0) % total or total
    for t, c in sorted(corners, key=lambda tc: (tc[0] - t0) % total):
        if 0 < (t - t0) % total < span:
            out.append(c)
    return out


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _sector_of_direction(rays, v):
    """Index ``i`` of the sector between rays ``i`` and ``i+1`` (ccw) containing ``v``.

    ``v`` is nudged by ``(eps, eps**2)``: points on a decoration ray go to the
    sector on its right (for upward rays) or above (for rightward rays).
    """
    if v == (0, 0):
        v_ang, v_nudge = 0.0, True
    else:
        v_ang = math.atan2(v[1], v[0]) % (2 * math.pi)
        v_nudge = False
    angles = [math.atan2(r[1], r[0]) % (2 * math.pi) for r in rays]
    k = len(rays)
    for i, r in enumerate(rays):
        if v != (0, 0) and _cross(r, v) == 0 and r[0] * v[0] + r[1] * v[1] > 0:
            # on ray i: nudge direction (1, eps) decides
            c = -r[1] if r[1] != 0 else r[0]
            return i if c > 0 else (i - 1) % k
    if v_nudge:
        v_ang = 0.0
        # a ray pointing exactly along +x belongs to the sector starting there
        for i, a in enumerate(angles):
            if a == 0.0:
                return i
    for i in range(k):
        a0, a1 = angles[i], angles[(i + 1) % k]
        span = (a1 - a0) % (2 * math.pi) or 2 * math.pi
        if 0 <= (v_ang - a0) % (2 * math.pi) < span:
            return i
    return k - 1


def decorate_cross(cross: Cross, owner_cross: int = -1, squares=None) -> list[CrossSector]:
    """Cross-sectors cut out by the segments joining the centre to the exits.

    Every unit cell of a non-degenerate cross lands in exactly one sector.
    Degenerate segments split at their midpoint into two empty half-segments;
    degenerate points have no sectors.
    """
    if cross.kind == "degenerate-point":
        return []
    x0, y0, x1, y1 = cross.rect
    c = cross.center
    if cross.kind == "degenerate-segment":
        a, b = (2 * x0, 2 * y0), (2 * x1, 2 * y1)
        return [CrossSector(owner_cross, (a, c), ()), CrossSector(owner_cross, (c, b), ())]
    pts = sorted({e.point for e in cross.exits}, key=lambda p: _boundary_param(cross.rect, p))
    if len(pts) < 2:
        cells = tuple((x, y) for y in range(y0, y1) for x in range(x0, x1))
        poly = ((2 * x0, 2 * y0), (2 * x1, 2 * y0), (2 * x1, 2 * y1), (2 * x0, 2 * y1))
        sq = _sector_square(cross, pts[0] if pts else c, pts[0] if pts else c, squares)
        return [CrossSector(owner_cross, poly, cells, sq)]
    rays = [(p[0] - c[0], p[1] - c[1]) for p in pts]
    buckets: list[list[tuple[int, int]]] = [[] for _ in pts]
    for y in range(y0, y1):
        for x in range(x0, x1):
            v = (2 * x + 1 - c[0], 2 * y + 1 - c[1])
            buckets[_sector_of_direction(rays, v)].append((x, y))
    sectors = []
    k = len(pts)
    for i in range(k):
        p, q = pts[i], pts[(i + 1) % k]
        t0 = _boundary_param(cross.rect, p)
        t1 = _boundary_param(cross.rect, q)
        poly = (c, p, *_corners_between(cross.rect, t0, t1), q)
        sq = _sector_square(cross, p, q, squares)
        sectors.append(CrossSector(owner_cross, poly, tuple(buckets[i]), sq))
    return sectors


def _sector_square(cross, p, q, squares):
    """Square owning the sector between exit points ``p`` and ``q``."""
    sp = {s for e in cross.exits if e.point == p for s in e.squares}
    sq = {s for e in cross.exits if e.point == q for s in e.squares}
    common = sp & sq
    if len(common) == 1:
        return common.pop()
    if squares is None:
        return -1
    # fall back to the square nearest (max-distance) to the middle of the boundary arc
    t0 = _boundary_param(cross.rect, p)
    t1 = _boundary_param(cross.rect, q)
    corners = _corners_between(cross.rect, t0, t1)
    probe = corners[len(corners) // 2] if corners else ((p[0] + q[0]) // 2, (p[1] + q[1]) // 2)
    cands = sorted(common) if common else range(len(squares))
    best, best_d = -1, None
    for i in cands:
        bx0, by0, bx1, by1 = (2 * v for v in squares[i].box)
        dx = max(bx0 - probe[0], 0, probe[0] - bx1)
        dy = max(by0 - probe[1], 0, probe[1] - by1)
        d = max(dx, dy)
        if best_d is None or d < best_d:
            best, best_d = i, d
    return best


# ---------------------------------------------------------------- decomposition

@dataclass(eq=False)
class PartialDecomposition:
    """One level of squares, arms and crosses inside a packing region."""

    N: int
    shape: tuple[int, int]
    region: tuple[int, int, int, int]
    margin: int
    anchors: np.ndarray
    arm_rects: np.ndarray
    arm_between: np.ndarray
    arm_vertical: np.ndarray
    cross_data: CrossArrays
    censored: list[tuple[int, int]] = field(default_factory=list)
    rule: str = "greedy-lex"

    @property
    def trusted_box(self):
        x0, y0, x1, y1 = self.region
        m = self.margin
        return (x0 + m, y0 + m, x1 - m, y1 - m)

    @property
    def irregular(self):
        return self.cross_data.irregular

    @cached_property
    def squares(self) -> list[SquarePlacement]:
        return [SquarePlacement((int(x), int(y)), self.N) for x, y in self.anchors]

    @cached_property
    def arms(self) -> list[Arm]:
        out = []
        for rect, (s, q), vert in zip(self.arm_rects, self.arm_between, self.arm_vertical):
            rect = tuple(int(v) for v in rect)
            vert = bool(vert)
            out.append(Arm((int(s), int(q)), rect, _arm_axis(rect, vert),
                           "vertical" if vert else "horizontal",
                           (rect[2] == rect[0]) if vert else (rect[3] == rect[1])))
        return out

    @cached_property
    def _exit_bounds(self) -> np.ndarray:
        cd = self.cross_data
        return np.searchsorted(cd.exit_cross, np.arange(len(cd) + 1))

    def cross(self, i: int) -> Cross:
        cd = self.cross_data
        b = self._exit_bounds
        exits = []
        for j in range(b[i], b[i + 1]):
            a = int(cd.exit_arms[j])
            s, q = self.arm_between[a]
            exits.append(Exit((int(cd.exit_points[j, 0]), int(cd.exit_points[j, 1])),
                              SIDES[cd.exit_sides[j]], SIGNS[cd.exit_signs[j]], a,
                              (int(s), int(q))))
        return Cross(tuple(int(v) for v in cd.rects[i]), tuple(exits), KINDS[cd.kinds[i]])

    @cached_property
    def crosses(self) -> list[Cross]:
        return [self.cross(i) for i in range(len(self.cross_data))]

    def regular_crosses(self) -> np.ndarray:
        return np.nonzero(self.cross_data.kinds <= 1)[0]

    @cached_property
    def sectors(self) -> list[CrossSector]:
        """Sectors of the non-degenerate crosses (the degenerate ones carry no cells)."""
        regular = self.regular_crosses()
        sq = self.squares if len(regular) else None
        out = []
        for i in regular:
            out.extend(decorate_cross(self.cross(int(i)), int(i), sq))
        return out

    def square_map(self) -> np.ndarray:
        sq = np.full(self.shape, -1, dtype=np.int32)
        a = self.anchors.astype(np.int64)
        n = self.N
        paint_rects(sq, np.stack([a[:, 1], a[:, 0], a[:, 1] + n, a[:, 0] + n], axis=1),
                    np.arange(len(a), dtype=np.int32))
        return sq

    def coverage(self) -> np.ndarray:
        """Per cell: how many of squares, arm boxes and cross boxes contain it."""
        cov = np.zeros(self.shape, dtype=np.int16)
        a = self.anchors.astype(np.int64)
        n = self.N
        boxes = [np.stack([a[:, 0], a[:, 1], a[:, 0] + n, a[:, 1] + n], axis=1),
                 self.arm_rects, self.cross_data.rects]
        for b in boxes:
            b = np.asarray(b, dtype=np.int64).reshape(-1, 4)
            paint_rects(cov, b[:, [1, 0, 3, 2]], 1, add=True)
        return cov


def decompose(window: TilingWindow, n: int, rule: str = "greedy-lex", region=None,
              margin: int | None = None, marker=None, anchors=None,
              strict: bool = True) -> PartialDecomposition:
    """Pack ``n``-squares into ``region`` and compute arms and crosses.

    ``anchors`` overrides placement (used for hand-built fixtures).  ``margin``
    defaults to ``3 * n``: features within it of the region edge are not trusted.
    """
    shape = (window.height, window.width)
    region = tuple(int(v) for v in (region or (0, 0, window.width, window.height)))
    if anchors is None:
        anchors = _place(window, n, rule, region, marker)
    anchors = np.ascontiguousarray(np.asarray(anchors, dtype=np.int32).reshape(-1, 2))
    rects, between, vertical, censored, _ = neighbors_and_arms(anchors, n, region, shape)
    cd = find_crosses(shape, anchors, n, rects, between, vertical, strict=strict)
    return PartialDecomposition(
        N=n, shape=shape, region=region, margin=3 * n if margin is None else margin,
        anchors=anchors, arm_rects=rects.astype(np.int64), arm_between=between.astype(np.int64),
        arm_vertical=vertical.astype(bool), cross_data=cd, censored=censored, rule=rule)


def crosses_and_exits(dec: PartialDecomposition) -> list[Cross]:
    return dec.crosses
