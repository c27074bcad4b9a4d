"""Robinson inflation: P′ and P″ supertiles, level by level.

Every level keeps a full-resolution owner map ``owner[y, x]`` giving the id
of the trusted supertile containing each cell (``-1`` for untrusted cells).
Level 0 is the window itself, one supertile per cell with id ``y * W + x``.
Areas are cell counts and perimeters count unit edges, at every level.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import shapely
from shapely.geometry import Polygon

from . import kernels
from .decomposition import PartialDecomposition, decompose, paint_rects
from .tiling import TilingWindow


class InflationError(RuntimeError):
    pass


class WindowExhausted(InflationError):
    def __init__(self, level: int, side: int, min_size: int, size: tuple[int, int]):
        self.level, self.side, self.min_size = level, side, min_size
        super().__init__(
            f"window exhausted at level {level} (N={side}): window is {size[0]}x{size[1]}, "
            f"needs at least {min_size}x{min_size}")


@dataclass(frozen=True)
class LevelSchedule:
    sides: tuple[int, ...]
    mode: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(int(s) for s in self.sides))
        if self.mode not in ("cubic", "custom"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if any(s < 2 for s in self.sides):
            raise ValueError("square sides must be at least 2")
        if any(b <= a for a, b in zip(self.sides, self.sides[1:])):
            raise ValueError(f"schedule must be strictly increasing: {self.sides}")
        if self.mode == "cubic" and any(b < a ** 3 for a, b in zip(self.sides, self.sides[1:])):
            raise ValueError(f"cubic schedule needs N_(n+1) >= N_n^3: {self.sides}")

    @classmethod
    def cubic(cls, first: int, levels: int) -> "LevelSchedule":
        sides = [first]
        while len(sides) < levels:
            sides.append(sides[-1] ** 3)
        return cls(tuple(sides), "cubic")

    def __len__(self):
        return len(self.sides)


# ---------------------------------------------------------------- hashing

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLD
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _type_hashes(parent, child_types, child_pos, parent_pos, n_parents):
    """Order-free 128-bit hash of each parent's ``(dx, dy, child type)`` multiset."""
    ok = parent >= 0
    p = parent[ok]
    d = child_pos[ok] - parent_pos[p]
    off = np.int64(1 << 20)
    packed = (((d[:, 0] + off) << 42) | ((d[:, 1] + off) << 21) | child_types[ok].astype(np.int64))
    packed = packed.astype(np.uint64)
    out = np.zeros((n_parents, 2), dtype=np.uint64)
    with np.errstate(over="ignore"):
        h1 = _mix(packed)
        h2 = _mix(packed ^ np.uint64(0x5851F42D4C957F2D))
        np.add.at(out[:, 0], p, h1)
        np.add.at(out[:, 1], p, h2)
    return out


def _type_ids(hashes: np.ndarray, areas: np.ndarray):
    """Type ids numbered by first appearance, and the key string of each type."""
    with np.errstate(over="ignore"):
        key = hashes[:, 0] ^ _mix(hashes[:, 1] ^ areas.astype(np.uint64))
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    inv = inv.ravel()
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    ids = rank[inv].astype(np.int32)
    keys = [""] * len(first)
    for t, i in zip(rank, first):
        keys[t] = f"{int(hashes[i, 0]):016x}{int(hashes[i, 1]):016x}"
    return ids, keys


# ---------------------------------------------------------------- measurements

def tile_areas(owner: np.ndarray, n_tiles: int) -> np.ndarray:
    o = owner[owner >= 0]
    return np.bincount(o, minlength=n_tiles).astype(np.int64)


def boundary_counts(owner: np.ndarray, n_tiles: int):
    """Per tile: unit boundary edges, and cells with a 4-neighbour in another tile.

    Edges on the window edge count as boundary.
    """
    pad = np.pad(owner, 1, constant_values=-2)
    core = pad[1:-1, 1:-1]
    perim = np.zeros(n_tiles, dtype=np.int64)
    touching = np.zeros(owner.shape, dtype=bool)
    for nb in (pad[1:-1, 2:], pad[1:-1, :-2], pad[2:, 1:-1], pad[:-2, 1:-1]):
        diff = (nb != core) & (core >= 0)
        perim += np.bincount(core[diff], minlength=n_tiles)
        touching |= diff
    edge_cells = np.bincount(core[touching], minlength=n_tiles).astype(np.int64)
    return perim, edge_cells


# ---------------------------------------------------------------- levels

@dataclass(frozen=True)
class Supertile:
    id: int
    level: int
    anchor: tuple[int, int]
    cell_set: tuple[int, ...]
    area: int
    perimeter: int
    type_key: str
    pprime_region: Polygon | None = None


@dataclass(eq=False)
class Level:
    index: int
    side: int
    trusted_box: tuple[int, int, int, int]
    owner: np.ndarray
    parent: np.ndarray  # previous-level id -> id here (-1 when not in a trusted supertile)
    anchors: np.ndarray  # (k, 2) square anchors; cell coordinates at level 0
    areas: np.ndarray
    perimeters: np.ndarray
    edge_cells: np.ndarray
    ref_cells: np.ndarray
    type_ids: np.ndarray
    type_keys: list[str]
    decomposition: PartialDecomposition | None = None
    square_of: np.ndarray | None = None  # id -> square index in the decomposition
    margin: int = 0

    @property
    def count(self) -> int:
        return len(self.areas)

    @cached_property
    def children(self) -> list[np.ndarray]:
        """Previous-level ids composing each supertile, ascending."""
        if self.index == 0:
            return [np.zeros(0, dtype=np.int64) for _ in range(self.count)]
        order = np.argsort(self.parent, kind="stable")
        sp = self.parent[order]
        start = np.searchsorted(sp, np.arange(self.count))
        stop = np.searchsorted(sp, np.arange(self.count), side="right")
        return [order[a:b] for a, b in zip(start, stop)]

    @property
    def A(self) -> int:
        return int(self.areas.max()) if self.count else 0

    @property
    def L(self) -> int:
        return int(self.perimeters.max()) if self.count else 0

    @cached_property
    def pprime_polygons(self) -> list[Polygon]:
        if self.decomposition is None:
            return []
        return pprime_polygons(self.decomposition, self.square_of)

    @cached_property
    def pprime_stats(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact-enough (float) area and perimeter of every trusted P′."""
        polys = self.pprime_polygons
        return (np.array([p.area for p in polys], dtype=float),
                np.array([p.length for p in polys], dtype=float))


def unit_level(window: TilingWindow) -> Level:
    h, w = window.height, window.width
    hw = h * w
    owner = np.arange(hw, dtype=np.int32).reshape(h, w)
    ys, xs = np.divmod(np.arange(hw, dtype=np.int32), np.int32(w))
    cells = np.stack([xs, ys], axis=1)
    del xs, ys
    labels = window.cells.ravel().astype(np.int32)
    # per-cell constants stay as zero-copy broadcasts
    return Level(0, 1, (0, 0, w, h), owner, np.zeros(0, dtype=np.int32), cells,
                 np.broadcast_to(np.int64(1), (hw,)), np.broadcast_to(np.int64(4), (hw,)),
                 np.broadcast_to(np.int64(1), (hw,)), cells, labels, list(window.labels))


@dataclass(eq=False)
class InflationHierarchy:
    window: TilingWindow
    schedule: LevelSchedule
    levels: list[Level]
    rule: str = "greedy-lex"
    margin_factor: int = 3
    stopped: str | None = None  # why the schedule was cut short

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def supertile(self, level: int, tid: int) -> Supertile:
        lv = self.levels[level]
        poly = lv.pprime_polygons[tid] if level > 0 else None
        x, y = (int(v) for v in lv.anchors[tid])
        return Supertile(tid, level, (x, y), tuple(int(c) for c in lv.children[tid]),
                         int(lv.areas[tid]), int(lv.perimeters[tid]), lv.type_keys[lv.type_ids[tid]],
                         poly)

    def supertiles(self, level: int) -> list[Supertile]:
        return [self.supertile(level, i) for i in range(self.levels[level].count)]


# ---------------------------------------------------------------- P′ and P″

def _arm_halves(dec: PartialDecomposition):
    """Cell-aligned halves of non-degenerate arms: ``(owner square, r0, c0, r1, c1)``.

    A cell whose centre lies on the axis goes to the right / upper square.
    """
    r = dec.arm_rects
    if len(r) == 0:
        return np.zeros((0, 5), dtype=np.int64)
    v = dec.arm_vertical
    a = dec.anchors.astype(np.int64)
    s, q = dec.arm_between[:, 0], dec.arm_between[:, 1]
    coord = np.where(v, 0, 1)
    s_first = a[s, coord] <= a[q, coord]
    lo = np.where(s_first, s, q)
    hi = np.where(s_first, q, s)
    # first cell index on the hi side: smallest i with 2i+1 >= axis (doubled)
    ax = np.where(v, r[:, 0] + r[:, 2], r[:, 1] + r[:, 3])
    split = ax // 2
    out = []
    # vertical axis: halves split in x
    for sel, base in ((v, True), (~v, False)):
        rr = r[sel]
        sp = split[sel]
        if base:
            low = np.stack([lo[sel], rr[:, 1], rr[:, 0], rr[:, 3], sp], axis=1)
            high = np.stack([hi[sel], rr[:, 1], sp, rr[:, 3], rr[:, 2]], axis=1)
        else:
            low = np.stack([lo[sel], rr[:, 1], rr[:, 0], sp, rr[:, 2]], axis=1)
            high = np.stack([hi[sel], sp, rr[:, 0], rr[:, 3], rr[:, 2]], axis=1)
        out += [low, high]
    return np.vstack(out).astype(np.int64)


def pprime_cell_map(dec: PartialDecomposition) -> np.ndarray:
    """Square index owning each cell through its P′ (square, half-arm or sector)."""
    pm = dec.square_map()
    halves = _arm_halves(dec)
    if len(halves):
        paint_rects(pm, halves[:, 1:], halves[:, 0].astype(np.int32))
    for sec in dec.sectors:
        if sec.cells and sec.square >= 0:
            xs, ys = zip(*sec.cells)
            pm[list(ys), list(xs)] = sec.square
    return pm


def build_supertile_pprime(dec: PartialDecomposition, square: int) -> Polygon:
    """Geometric P′: the square, its half-arms and the cross-sectors assigned to it."""
    return pprime_polygons(dec, np.array([square]))[0]


def pprime_polygons(dec: PartialDecomposition, squares) -> list[Polygon]:
    """Union of square, half-arms and assigned sectors for each square in ``squares``."""
    n = dec.N
    squares = np.asarray(squares, dtype=np.int64).reshape(-1)
    slot = np.full(len(dec.anchors), -1, dtype=np.int64)
    slot[squares] = np.arange(len(squares))
    a = dec.anchors.astype(np.int64)
    owners = [np.arange(len(squares))]
    pieces = [shapely.box(a[squares, 0], a[squares, 1], a[squares, 0] + n, a[squares, 1] + n)]
    r, v = dec.arm_rects.astype(float), dec.arm_vertical
    if len(r):
        keep_arm = (r[:, 2] > r[:, 0]) & (r[:, 3] > r[:, 1])
        xm, ym = (r[:, 0] + r[:, 2]) / 2, (r[:, 1] + r[:, 3]) / 2
        for k in (0, 1):
            sq = dec.arm_between[:, k]
            keep = keep_arm & (slot[sq] >= 0)
            before = np.where(v, a[sq, 0] + n == r[:, 0], a[sq, 1] + n == r[:, 1])
            bx0 = np.where(v & ~before, xm, r[:, 0])
            bx1 = np.where(v & before, xm, r[:, 2])
            by0 = np.where(~v & ~before, ym, r[:, 1])
            by1 = np.where(~v & before, ym, r[:, 3])
            owners.append(slot[sq[keep]])
            pieces.append(shapely.box(bx0[keep], by0[keep], bx1[keep], by1[keep]))
    coords, ring, sec_owner = [], [], []
    for sec in dec.sectors:
        if sec.square >= 0 and slot[sec.square] >= 0 and len(sec.region) >= 3:
            ring.extend([len(sec_owner)] * len(sec.region))
            coords.extend(sec.region)
            sec_owner.append(slot[sec.square])
    if sec_owner:
        rings = shapely.linearrings(np.asarray(coords, dtype=float) / 2, indices=ring)
        owners.append(np.asarray(sec_owner, dtype=np.int64))
        pieces.append(shapely.polygons(rings))
    owner = np.concatenate(owners)
    geo = np.concatenate(pieces)
    order = np.argsort(owner, kind="stable")
    owner, geo = owner[order], geo[order]
    counts = np.bincount(owner, minlength=len(squares))
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    grid = np.full((len(squares), max(int(counts.max(initial=1)), 1)), None, dtype=object)
    grid[owner, np.arange(len(owner)) - start[owner]] = geo
    # the pieces tile P′ edge to edge, so the cheaper coverage union applies;
    # anything it cannot merge into one valid polygon goes through the general union
    try:
        out = shapely.coverage_union_all(grid, axis=1)
    except shapely.errors.GEOSException:
        return list(shapely.union_all(grid, axis=1))
    redo = ~shapely.is_valid(out) | (shapely.get_type_id(out) != 3)
    if redo.any():
        out[redo] = shapely.union_all(grid[redo], axis=1)
    return list(out)


def snap_pprime_to_cells(pprime: Polygon, prev: Level) -> np.ndarray:
    """Previous-level tiles whose reference cell lies in ``pprime`` (right/up tie rule).

    The cell centre is nudged by ``(eps, eps^2)`` so a centre on a vertical
    edge goes right and one on a horizontal edge goes up.
    """
    refs = prev.ref_cells
    ok = refs[:, 0] >= 0
    px = refs[:, 0] + 0.5 + 1e-7
    py = refs[:, 1] + 0.5 + 1e-11
    inside = shapely.contains_xy(pprime, px, py) & ok
    tiles = np.nonzero(inside)[0]
    if len(tiles) == 0:
        raise InflationError("empty P″: P′ swallowed no previous-level tile")
    return tiles


def _box_sums(bad: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Number of set cells of ``bad`` inside each half-open box ``(x0, y0, x1, y1)``."""
    s = np.zeros((bad.shape[0] + 1, bad.shape[1] + 1), dtype=np.int64)
    s[1:, 1:] = bad.astype(np.int64).cumsum(0).cumsum(1)
    x0, y0, x1, y1 = boxes.T
    return s[y1, x1] - s[y0, x1] - s[y1, x0] + s[y0, x0]


def min_window_size(sides, margin_factor: int = 3) -> int:
    """Smallest square window whose trusted region survives every level of ``sides``."""
    m, need = 0, 1
    for n in sides:
        need = max(need, 2 * m + n)
        m += margin_factor * n
        need = max(need, 2 * m + 1)
    return need


def inflate_level(hier: InflationHierarchy, n_next: int, anchors=None) -> InflationHierarchy:
    """Append one level of side ``n_next`` on top of ``hier``.

    ``anchors`` overrides the placement rule (used by hand-built fixtures).
    """
    prev = hier.levels[-1]
    win = hier.window
    if n_next <= prev.side:
        raise InflationError(f"N={n_next} does not exceed the current side {prev.side}")
    index = prev.index + 1
    region = prev.trusted_box
    mf = hier.margin_factor
    tb = (region[0] + mf * n_next, region[1] + mf * n_next,
          region[2] - mf * n_next, region[3] - mf * n_next)
    if (region[2] - region[0] < n_next or region[3] - region[1] < n_next
            or tb[2] <= tb[0] or tb[3] <= tb[1]):
        sides = [lv.side for lv in hier.levels[1:]] + [n_next]
        raise WindowExhausted(index, n_next, min_window_size(sides, mf), (win.width, win.height))

    dec = decompose(win, n_next, hier.rule, region=region, margin=mf * n_next,
                    anchors=anchors, strict=False)
    pmap = pprime_cell_map(dec)
    k = len(dec.anchors)
    h, w = win.height, win.width

    # complete squares: the 3N box around the square is fully decomposed and trusted below
    cov = dec.coverage()
    bad = (cov == 0) | (prev.owner < 0)
    del cov
    a = dec.anchors.astype(np.int64)
    boxes = np.stack([np.clip(a[:, 0] - n_next, 0, w), np.clip(a[:, 1] - n_next, 0, h),
                      np.clip(a[:, 0] + 2 * n_next, 0, w), np.clip(a[:, 1] + 2 * n_next, 0, h)], axis=1)
    complete = _box_sums(bad, boxes) == 0
    del bad

    refs = prev.ref_cells
    sq_of_prev = pmap[refs[:, 1], refs[:, 0]]
    sq_of_prev = np.where(refs[:, 0] >= 0, sq_of_prev, -1)
    cand = np.where((sq_of_prev >= 0) & complete[np.clip(sq_of_prev, 0, None)], sq_of_prev, -1)
    del pmap

    nonempty = np.bincount(cand[cand >= 0], minlength=k) > 0
    empty = np.nonzero(complete & ~nonempty)[0]
    if len(empty):
        x, y = dec.anchors[empty[0]]
        raise InflationError(
            f"level {index}: empty P″ for the square at ({x}, {y}); schedule too aggressive")

    cell_sq = np.where(prev.owner >= 0, cand[np.clip(prev.owner, 0, None)], -1)
    x0, y0, x1, y1 = tb
    meets = np.zeros(k, dtype=bool)
    inner = cell_sq[y0:y1, x0:x1]
    meets[np.unique(inner[inner >= 0])] = True
    trusted = complete & meets

    tsq = np.nonzero(trusted)[0]
    tsq = tsq[np.lexsort((a[tsq, 0], a[tsq, 1]))]
    new_id = np.full(k + 1, -1, dtype=np.int32)
    new_id[tsq] = np.arange(len(tsq), dtype=np.int32)
    parent = new_id[cand]  # cand == -1 hits the sentinel slot
    owner = np.where(cell_sq >= 0, new_id[cell_sq], -1).astype(np.int32)
    del cell_sq

    n_t = len(tsq)
    areas = tile_areas(owner, n_t)
    perims, edge_cells = boundary_counts(owner, n_t)
    ref_new = kernels.reference_cells(owner, n_t).astype(np.int64)
    hashes = _type_hashes(parent, prev.type_ids, refs, ref_new, n_t)
    type_ids, keys = _type_ids(hashes, areas)

    lv = Level(index, n_next, tb, owner, parent, dec.anchors[tsq].astype(np.int64), areas,
               perims, edge_cells, ref_new, type_ids, keys, dec, tsq, mf * n_next)
    sides = tuple(lvl.side for lvl in hier.levels[1:]) + (n_next,)
    return InflationHierarchy(win, LevelSchedule(sides), hier.levels + [lv], hier.rule,
                              hier.margin_factor, None)


def run_hierarchy(window: TilingWindow, schedule: LevelSchedule, rule: str = "greedy-lex",
                  margin_factor: int = 3, anchors=None) -> InflationHierarchy:
    """Inflate through ``schedule``, stopping early (with a note) if the window runs out.

    ``anchors`` optionally gives fixed square anchors per level (or ``None``
    entries to use the rule).
    """
    hier = InflationHierarchy(window, LevelSchedule(()), [unit_level(window)], rule, margin_factor)
    for i, n in enumerate(schedule.sides):
        try:
            hier = inflate_level(hier, n, anchors[i] if anchors else None)
        except WindowExhausted as exc:
            hier.stopped = str(exc)
            break
        except InflationError as exc:
            raise InflationError(f"level {i + 1}: {exc}") from exc
    hier.schedule = schedule
    return hier


# ---------------------------------------------------------------- isoperimetry

def closed_form_bound(n_cur: int, n_next: int) -> Fraction | None:
    """``(12 N_n)^2 / (N_(n+1) - (12 N_n)^2)``, or ``None`` when vacuous."""
    c = (12 * n_cur) ** 2
    if n_next <= c:
        return None
    return Fraction(c, n_next - c)


@dataclass(frozen=True)
class LevelReport:
    level: int
    side: int
    supertiles: int
    A: int
    L: int
    max_ratio: float
    bound: Fraction | None
    vacuous: bool
    holds: bool | None


@dataclass(frozen=True)
class IsoperimetricReport:
    levels: tuple[LevelReport, ...] = field(default_factory=tuple)

    def __getitem__(self, i):
        return self.levels[i]


def isoperimetric_report(hier: InflationHierarchy) -> IsoperimetricReport:
    rows = []
    for lv in hier.levels[1:]:
        ratio = float((lv.perimeters / lv.areas).max()) if lv.count else 0.0
        bound, vacuous, holds = None, False, None
        if lv.index >= 2:
            bound = closed_form_bound(hier.levels[lv.index - 1].side, lv.side)
            vacuous = bound is None
            holds = None if vacuous else ratio <= bound
        rows.append(LevelReport(lv.index, lv.side, lv.count, lv.A, lv.L, ratio, bound, vacuous, holds))
    return IsoperimetricReport(tuple(rows))


def level_from_owner(prev: Level, owner: np.ndarray, side: int,
                     trusted_box=None) -> Level:
    """A level given directly by its owner map (must be a coarsening of ``prev``).

    Used for hand-built hierarchies; there is no square decomposition behind it.
    """
    owner = np.asarray(owner, dtype=np.int32)
    if owner.shape != prev.owner.shape:
        raise InflationError("owner map shape differs from the previous level")
    n_t = int(owner.max()) + 1 if (owner >= 0).any() else 0
    if n_t and len(np.unique(owner[owner >= 0])) != n_t:
        raise InflationError("supertile ids must be 0..k-1 without gaps")
    ok = (prev.owner >= 0) & (owner >= 0)
    po, no = prev.owner[ok], owner[ok]
    parent = np.full(prev.count, -1, dtype=np.int32)
    parent[po] = no
    if not np.array_equal(parent[po], no):
        raise InflationError("owner map is not a union of previous-level supertiles")
    if ((owner >= 0) & (prev.owner < 0)).any():
        raise InflationError("a supertile contains untrusted previous-level cells")
    h, w = owner.shape
    areas = tile_areas(owner, n_t)
    perims, edge_cells = boundary_counts(owner, n_t)
    refs = kernels.reference_cells(owner, n_t).astype(np.int64)
    ys, xs = np.nonzero(owner >= 0)
    ids = owner[ys, xs]
    anchors = np.full((n_t, 2), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(anchors[:, 0], ids, xs)
    np.minimum.at(anchors[:, 1], ids, ys)
    hashes = _type_hashes(parent, prev.type_ids, prev.ref_cells.astype(np.int64), refs, n_t)
    type_ids, keys = _type_ids(hashes, areas)
    return Level(prev.index + 1, side, tuple(trusted_box or (0, 0, w, h)), owner, parent, anchors,
                 areas, perims, edge_cells, refs, type_ids, keys)


def hierarchy_from_owners(window: TilingWindow, owners, sides, margin_factor: int = 0) -> InflationHierarchy:
    levels = [unit_level(window)]
    for owner, side in zip(owners, sides):
        levels.append(level_from_owner(levels[-1], owner, side))
    return InflationHierarchy(window, LevelSchedule(tuple(sides)), levels, "fixed", margin_factor)
