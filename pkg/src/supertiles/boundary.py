"""Boundary graphs of a hierarchy, their classification, roots and strata.

A boundary graph lives on the unit grid of the window.  Edges are stored as
two boolean arrays: ``hor[y, x]`` is the edge ``(x, y)-(x+1, y)`` (between
cells ``(x, y-1)`` and ``(x, y)``), shape ``(H+1, W)``; ``ver[y, x]`` is the
edge ``(x, y)-(x, y+1)`` (between cells ``(x-1, y)`` and ``(x, y)``), shape
``(H, W+1)``.  Grid vertices are indexed ``[y, x]`` with shape ``(H+1, W+1)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .inflation import InflationHierarchy, Level


class BoundaryError(RuntimeError):
    pass


@dataclass(eq=False)
class BoundaryGraph:
    level: int | str
    hor: np.ndarray
    ver: np.ndarray
    hor_untrusted: np.ndarray
    ver_untrusted: np.ndarray
    trusted_cells: np.ndarray  # (H, W) bool

    @property
    def shape(self):
        return self.trusted_cells.shape

    @property
    def edge_count(self) -> int:
        return int(self.hor.sum() + self.ver.sum())

    def is_empty(self) -> bool:
        return self.edge_count == 0

    def edges(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Trusted edges as vertex pairs, horizontal first, row-major."""
        ys, xs = np.nonzero(self.hor)
        out = [((int(x), int(y)), (int(x) + 1, int(y))) for y, x in zip(ys, xs)]
        ys, xs = np.nonzero(self.ver)
        out += [((int(x), int(y)), (int(x), int(y) + 1)) for y, x in zip(ys, xs)]
        return out

    def cell_pairs(self) -> list[list[list[int]]]:
        """Each trusted edge as the pair of cells it separates."""
        ys, xs = np.nonzero(self.hor)
        out = [[[int(x), int(y) - 1], [int(x), int(y)]] for y, x in zip(ys, xs)]
        ys, xs = np.nonzero(self.ver)
        out += [[[int(x) - 1, int(y)], [int(x), int(y)]] for y, x in zip(ys, xs)]
        return out

    def degree(self) -> np.ndarray:
        h, w = self.shape
        deg = np.zeros((h + 1, w + 1), dtype=np.int8)
        hi, vi = self.hor.astype(np.int8), self.ver.astype(np.int8)
        deg[:, :-1] += hi
        deg[:, 1:] += hi
        deg[:-1, :] += vi
        deg[1:, :] += vi
        return deg

    def interior_vertices(self) -> np.ndarray:
        """Grid vertices whose four surrounding cells are all trusted."""
        t = self.trusted_cells
        h, w = t.shape
        out = np.zeros((h + 1, w + 1), dtype=bool)
        out[1:-1, 1:-1] = t[:-1, :-1] & t[:-1, 1:] & t[1:, :-1] & t[1:, 1:]
        return out

    def issubset(self, other: "BoundaryGraph") -> bool:
        return bool(not (self.hor & ~other.hor).any() and not (self.ver & ~other.ver).any())

    def difference_count(self, other: "BoundaryGraph") -> int:
        """Edges of ``self`` missing from ``other``."""
        return int((self.hor & ~other.hor).sum() + (self.ver & ~other.ver).sum())


def graph_from_owner(owner: np.ndarray, level) -> BoundaryGraph:
    h, w = owner.shape
    hor = np.zeros((h + 1, w), dtype=bool)
    ver = np.zeros((h, w + 1), dtype=bool)
    hu = np.zeros_like(hor)
    vu = np.zeros_like(ver)
    a, b = owner[:-1, :], owner[1:, :]
    diff = a != b
    both = (a >= 0) & (b >= 0)
    hor[1:h, :] = diff & both
    hu[1:h, :] = diff & ~both
    a, b = owner[:, :-1], owner[:, 1:]
    diff = a != b
    both = (a >= 0) & (b >= 0)
    ver[:, 1:w] = diff & both
    vu[:, 1:w] = diff & ~both
    return BoundaryGraph(level, hor, ver, hu, vu, owner >= 0)


def extract_boundary_graph(hier: InflationHierarchy, level: int) -> BoundaryGraph:
    """Unit edges separating two distinct trusted level-``level`` supertiles."""
    if not 0 <= level <= hier.depth:
        raise IndexError(f"level {level} not built (depth {hier.depth})")
    return graph_from_owner(hier.levels[level].owner, level)


def persistent_boundary(hier: InflationHierarchy, strict: bool = True) -> BoundaryGraph:
    """Edge intersection over all built levels.

    With ``strict`` the graph must be acyclic with no terminal vertex inside
    the trusted region.  Otherwise the only cycles allowed are the outlines of
    whole top-level supertiles (inevitable in a finite window).
    """
    if hier.depth < 1:
        raise BoundaryError("persistent boundary needs at least one level")
    g = extract_boundary_graph(hier, 1)
    hor, ver = g.hor.copy(), g.ver.copy()
    hu, vu = g.hor_untrusted.copy(), g.ver_untrusted.copy()
    for n in range(2, hier.depth + 1):
        gn = extract_boundary_graph(hier, n)
        hor &= gn.hor
        ver &= gn.ver
        hu |= gn.hor_untrusted
        vu |= gn.ver_untrusted
    top = hier.levels[-1].owner
    pg = BoundaryGraph("persistent", hor, ver, hu, vu, top >= 0)
    rep = tree_report(pg, top)
    if strict and not rep.is_tree:
        raise BoundaryError(
            f"persistent boundary is not a tree in the trusted region: "
            f"{rep.enclosed_faces} enclosed face(s), {rep.terminal_vertices} terminal vertex(es)")
    if not strict and not rep.cycles_are_tiles:
        raise BoundaryError("persistent boundary encloses a region that is not one top-level supertile")
    return pg


# ---------------------------------------------------------------- topology

def _cell_graph(g: BoundaryGraph, open_untrusted: bool):
    """Cells on the odd sites of a doubled grid, joined across non-boundary edges."""
    h, w = g.shape
    t = g.trusted_cells if not open_untrusted else np.ones_like(g.trusted_cells)
    pad = 1 if open_untrusted else 0
    H, W = 2 * h + 1 + 2 * pad, 2 * w + 1 + 2 * pad
    grid = np.zeros((H, W), dtype=bool)
    grid[1 + pad:2 * h + pad:2, 1 + pad:2 * w + pad:2] = t
    # vertical edges between horizontally adjacent cells
    open_v = t[:, :-1] & t[:, 1:] & ~g.ver[:, 1:w]
    grid[1 + pad:2 * h + pad:2, 2 + pad:2 * w - 1 + pad:2] = open_v
    open_h = t[:-1, :] & t[1:, :] & ~g.hor[1:h, :]
    grid[2 + pad:2 * h - 1 + pad:2, 1 + pad:2 * w + pad:2] = open_h
    if open_untrusted:
        # the frame is outside; connect it to border cells
        grid[0, :] = grid[-1, :] = grid[:, 0] = grid[:, -1] = True
        grid[pad, 1 + pad:2 * w + pad:2] = True
        grid[2 * h + pad, 1 + pad:2 * w + pad:2] = True
        grid[1 + pad:2 * h + pad:2, pad] = True
        grid[1 + pad:2 * h + pad:2, 2 * w + pad] = True
    labels, count = ndimage.label(grid)
    cells = labels[1 + pad:2 * h + pad:2, 1 + pad:2 * w + pad:2]
    return cells, labels[0, 0] if open_untrusted else 0


def component_count(g: BoundaryGraph) -> int:
    """Connected components of the trusted cells with the boundary edges removed."""
    cells, _ = _cell_graph(g, open_untrusted=False)
    vals = cells[g.trusted_cells]
    return int(len(np.unique(vals))) if len(vals) else 0


@dataclass(frozen=True)
class TreeReport:
    enclosed_faces: int
    terminal_vertices: int
    cycles_are_tiles: bool

    @property
    def is_tree(self) -> bool:
        return self.enclosed_faces == 0 and self.terminal_vertices == 0


def tree_report(g: BoundaryGraph, top_owner: np.ndarray | None = None) -> TreeReport:
    cells, outside = _cell_graph(g, open_untrusted=True)
    inner = g.trusted_cells & (cells != outside)
    faces = np.unique(cells[inner])
    tiles_ok = True
    if top_owner is not None and len(faces):
        # each enclosed face must be exactly one top-level supertile
        lab = cells[inner].astype(np.int64)
        own = top_owner[inner].astype(np.int64)
        pairs = np.unique(np.stack([lab, own], axis=1), axis=0)
        if len(pairs) != len(faces) or (pairs[:, 1] < 0).any():
            tiles_ok = False
        else:
            tile_area = np.bincount(top_owner[top_owner >= 0].ravel())
            face_area = np.bincount(np.searchsorted(faces, lab))
            tiles_ok = bool(np.array_equal(tile_area[pairs[:, 1]], face_area)) \
                and len(np.unique(pairs[:, 1])) == len(pairs)
    elif len(faces):
        tiles_ok = False
    deg = g.degree()
    term = int(((deg == 1) & g.interior_vertices()).sum())
    return TreeReport(len(faces), term, tiles_ok and term == 0)


def ends_count(g: BoundaryGraph) -> int:
    """Edges leaving the trusted interior (one per end of a tree reaching the rim)."""
    inner = g.interior_vertices()
    h_in = inner[:, :-1] & inner[:, 1:]
    v_in = inner[:-1, :] & inner[1:, :]
    return int((g.hor & ~h_in).sum() + (g.ver & ~v_in).sum())


# ---------------------------------------------------------------- virtual features

@dataclass(frozen=True)
class LevelFeatures:
    cross_centers: np.ndarray  # (m, 2) doubled
    cross_mult: np.ndarray  # (m,)
    cross_boxes: np.ndarray  # (m, 4) doubled closed rectangles
    arm_axes: np.ndarray  # (a, 2, 2) doubled
    arm_vertical: np.ndarray  # (a,)


def _runs(mask_row: np.ndarray, breaks: np.ndarray):
    """Maximal runs of True edges along a line, split at ``breaks`` vertices."""
    out = []
    start = None
    for i, v in enumerate(mask_row):
        if v and start is None:
            start = i
        elif v and start is not None and breaks[i]:
            out.append((start, i))
            start = i
        elif not v and start is not None:
            out.append((start, i))
            start = None
    if start is not None:
        out.append((start, len(mask_row)))
    return out


def features_from_owner(owner: np.ndarray) -> LevelFeatures:
    """Crosses and arms read off a tiling: branch points and straight boundary runs."""
    g = graph_from_owner(owner, -1)
    deg = g.degree()
    br = deg >= 3
    ys, xs = np.nonzero(br)
    centers = np.stack([2 * xs, 2 * ys], axis=1).astype(np.int64)
    mult = deg[ys, xs].astype(np.int64)
    axes, vert = [], []
    for y in range(g.hor.shape[0]):
        if g.hor[y].any():
            for a, b in _runs(g.hor[y], br[y]):
                axes.append(((2 * a, 2 * y), (2 * b, 2 * y)))
                vert.append(False)
    for x in range(g.ver.shape[1]):
        if g.ver[:, x].any():
            for a, b in _runs(g.ver[:, x], br[:, x]):
                axes.append(((2 * x, 2 * a), (2 * x, 2 * b)))
                vert.append(True)
    return LevelFeatures(centers, mult, np.concatenate([centers, centers], axis=1),
                         np.array(axes, dtype=np.int64).reshape(-1, 2, 2), np.array(vert, dtype=bool))


def features_of_level(level: Level) -> LevelFeatures:
    dec = level.decomposition
    if dec is None:
        return features_from_owner(level.owner)
    from .decomposition import arm_axes
    cd = dec.cross_data
    r = cd.rects
    centers = np.stack([r[:, 0] + r[:, 2], r[:, 1] + r[:, 3]], axis=1)
    mult = np.bincount(cd.exit_cross, minlength=len(r))
    return LevelFeatures(centers, mult, 2 * r, arm_axes(dec.arm_rects, dec.arm_vertical),
                         dec.arm_vertical)


@dataclass(frozen=True)
class VirtualFeature:
    kind: str  # virtual-arm | virtual-cross
    witnesses: tuple  # per level (top first): cross centre or arm axis, doubled
    bounds: tuple[int, int, int, int]  # doubled box (cross) or ribbon (arm)
    levels: tuple[int, ...]
    exits: int = 0  # top-level exit multiplicity of a virtual cross


def _near(sat: np.ndarray, box) -> bool:
    """Any marked vertex inside the doubled box ``(x0, y0, x1, y1)``?"""
    hv, wv = sat.shape[0] - 1, sat.shape[1] - 1
    x0 = max(0, -(-box[0] // 2))
    y0 = max(0, -(-box[1] // 2))
    x1 = min(wv, box[2] // 2 + 1)
    y1 = min(hv, box[3] // 2 + 1)
    if x1 <= x0 or y1 <= y0:
        return False
    return bool(sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0] > 0)


def detect_virtual_features(hier: InflationHierarchy, gamma: BoundaryGraph,
                            size: int | None = None, min_levels: int = 3) -> list[VirtualFeature]:
    """Chains of crosses (arms) hugging the persistent boundary in a fixed box (ribbon).

    ``size`` is the side of the box / width of the ribbon in cells (default
    ``2 * N_1``).  A chain must start at the top level and persist for
    ``min_levels`` consecutive levels.
    """
    if hier.depth < 1:
        return []
    s = size if size is not None else 2 * hier.levels[1].side
    verts = gamma.degree() > 0
    sat = np.zeros((verts.shape[0] + 1, verts.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = verts.cumsum(0).cumsum(1)
    tol = s  # half of the side, doubled
    feats = {n: features_of_level(hier.levels[n]) for n in range(1, hier.depth + 1)}

    def cross_ok(n):
        f = feats[n]
        return [i for i, b in enumerate(f.cross_boxes)
                if _near(sat, (b[0] - 2, b[1] - 2, b[2] + 2, b[3] + 2))]

    def arm_ok(n):
        f = feats[n]
        out = []
        for i, ax in enumerate(f.arm_axes):
            x0, y0 = ax.min(axis=0)
            x1, y1 = ax.max(axis=0)
            if _near(sat, (x0 - 2, y0 - 2, x1 + 2, y1 + 2)):
                out.append(i)
        return out

    top = hier.depth
    out = []
    crosses = {n: cross_ok(n) for n in feats}
    for i in crosses[top]:
        c = feats[top].cross_centers[i]
        box = (int(c[0] - tol), int(c[1] - tol), int(c[0] + tol), int(c[1] + tol))
        wit, lv = [tuple(int(v) for v in c)], [top]
        for n in range(top - 1, 0, -1):
            cc = feats[n].cross_centers[crosses[n]] if crosses[n] else np.zeros((0, 2))
            hit = np.nonzero((np.abs(cc - c) <= tol).all(axis=1))[0] if len(cc) else []
            if len(hit) == 0:
                break
            j = hit[np.argmin(np.abs(cc[hit] - c).sum(axis=1))]
            wit.append(tuple(int(v) for v in cc[j]))
            lv.append(n)
        if len(lv) >= min_levels:
            out.append(VirtualFeature("virtual-cross", tuple(wit), box, tuple(lv),
                                      int(feats[top].cross_mult[i])))
    arms = {n: arm_ok(n) for n in feats}
    for i in arms[top]:
        ax = feats[top].arm_axes[i]
        vert = bool(feats[top].arm_vertical[i])
        p = int(ax[0, 0] if vert else ax[0, 1])
        k = 1 if vert else 0
        lo, hi = int(ax[:, k].min()), int(ax[:, k].max())
        wit, lv = [tuple(map(tuple, ax.tolist()))], [top]
        for n in range(top - 1, 0, -1):
            found = None
            for j in arms[n]:
                if bool(feats[n].arm_vertical[j]) != vert:
                    continue
                b = feats[n].arm_axes[j]
                q = int(b[0, 0] if vert else b[0, 1])
                if abs(q - p) <= tol and b[:, k].max() > lo and b[:, k].min() < hi:
                    found = b
                    break
            if found is None:
                break
            wit.append(tuple(map(tuple, found.tolist())))
            lv.append(n)
        if len(lv) >= min_levels:
            span = [c[k] for ax in wit for c in ax]
            lo, hi = min(span), max(span)
            ribbon = (p - tol, lo, p + tol, hi) if vert else (lo, p - tol, hi, p + tol)
            out.append(VirtualFeature("virtual-arm", tuple(wit), ribbon, tuple(lv)))
    return out


# ---------------------------------------------------------------- classification

CASE_ENDS = {"case1": 0, "case2": 2, "case3-3exits": 3, "case3-4exits": 4, "case4": 4}


@dataclass(frozen=True)
class BoundaryClass:
    case_tag: str  # one of CASE_ENDS or "undetermined"
    ends: int | None
    component_count: int
    reason: str = ""

    @property
    def complete(self) -> bool:
        return self.case_tag != "undetermined"

    @property
    def consistent(self) -> bool:
        if not self.complete:
            return True
        return self.component_count == max(self.ends, 1) and self.component_count <= 4


def classify_boundary(hier: InflationHierarchy, features: list[VirtualFeature],
                      gamma: BoundaryGraph | None = None, min_levels: int = 3) -> BoundaryClass:
    gamma = gamma if gamma is not None else persistent_boundary(hier, strict=False)
    comps = component_count(gamma)
    if gamma.is_empty():
        return BoundaryClass("case1", 0, comps)
    rep = tree_report(gamma)
    if rep.enclosed_faces:
        return BoundaryClass("undetermined", None, comps,
                             f"persistent boundary still encloses {rep.enclosed_faces} face(s) "
                             f"at depth {hier.depth}")
    if hier.depth < min_levels:
        return BoundaryClass("undetermined", None, comps,
                             f"only {hier.depth} level(s) observed, need {min_levels}")
    vc = [f for f in features if f.kind == "virtual-cross"]
    va = [f for f in features if f.kind == "virtual-arm"]
    if len(vc) >= 2:
        tag = "case4"
    elif len(vc) == 1:
        tag = "case3-4exits" if vc[0].exits >= 4 else "case3-3exits"
    elif va:
        tag = "case2"
    else:
        return BoundaryClass("undetermined", None, comps, "no virtual arm or cross detected")
    return BoundaryClass(tag, CASE_ENDS[tag], comps)


# ---------------------------------------------------------------- roots and strata

@dataclass(frozen=True)
class RootData:
    roots: tuple[tuple[int, int], ...]
    basic_patches: tuple[tuple[int, ...] | None, ...]  # per level: supertile ids of M_n
    degree_sequence: tuple[int | None, ...]
    root_distance: int | None
    ends: int


def _tree_distance(g: BoundaryGraph, a, b) -> int | None:
    h, w = g.shape
    seen = {a: 0}
    q = deque([a])
    while q:
        x, y = q.popleft()
        if (x, y) == b:
            return seen[(x, y)]
        nbrs = []
        if x < w and g.hor[y, x]:
            nbrs.append((x + 1, y))
        if x > 0 and g.hor[y, x - 1]:
            nbrs.append((x - 1, y))
        if y < h and g.ver[y, x]:
            nbrs.append((x, y + 1))
        if y > 0 and g.ver[y - 1, x]:
            nbrs.append((x, y - 1))
        for v in nbrs:
            if v not in seen:
                seen[v] = seen[(x, y)] + 1
                q.append(v)
    return None


def find_roots(hier: InflationHierarchy, gamma: BoundaryGraph | None = None) -> RootData:
    """Vertices of degree >= 3 of the persistent tree and their basic patches."""
    gamma = gamma if gamma is not None else persistent_boundary(hier)
    deg = gamma.degree()
    inner = gamma.interior_vertices()
    ys, xs = np.nonzero((deg >= 3) & inner)
    roots = tuple(sorted((int(x), int(y)) for x, y in zip(xs, ys)))
    if len(roots) > 2:
        raise BoundaryError(f"{len(roots)} branch vertices in the trusted region (at most 2 allowed)")
    ends = ends_count(gamma)
    patches, seq = [], []
    for n in range(1, hier.depth + 1):
        if not roots:
            break
        own = hier.levels[n].owner
        sets = []
        for x, y in roots:
            ids = {int(own[cy, cx]) for cx, cy in ((x - 1, y - 1), (x, y - 1), (x - 1, y), (x, y))}
            ids.discard(-1)
            sets.append(ids)
        if len(sets) == 1:
            m = sets[0]
        elif sets[0] & sets[1]:
            m = sets[0] | sets[1]
        else:
            m = None
        patches.append(tuple(sorted(m)) if m is not None else None)
        seq.append(len(m) if m is not None else None)
    dist = _tree_distance(gamma, roots[0], roots[1]) if len(roots) == 2 else None
    return RootData(roots, tuple(patches), tuple(seq), dist, ends)


@dataclass(frozen=True)
class StratumLabel:
    stratum: str  # H2 | H3 | H4 | interior | undetermined
    index: int | None = None  # m for H3, distance for H4
    reason: str = ""

    def __str__(self):
        return f"{self.stratum}({self.index})" if self.index is not None else self.stratum


def stratify(root_data: RootData, levels_observed: int, min_levels: int = 3) -> StratumLabel:
    if not root_data.roots:
        if root_data.ends == 2:
            return StratumLabel("H2")
        if root_data.ends == 0:
            return StratumLabel("interior")
        return StratumLabel("undetermined", reason=f"{root_data.ends} ends without a branch vertex")
    if levels_observed < min_levels:
        return StratumLabel("undetermined",
                            reason=f"blocked at level {levels_observed}: need {min_levels} levels")
    if len(root_data.roots) == 2:
        return StratumLabel("H4", root_data.root_distance)
    seq = root_data.degree_sequence
    for n, d in enumerate(seq, start=1):
        if d not in (3, 4):
            return StratumLabel("undetermined", reason=f"basic patch at level {n} has D={d}")
    if all(d == 4 for d in seq):
        return StratumLabel("H4", 0)
    if seq[-1] == 3:
        m = len(seq) - 1
        while m > 0 and seq[m - 1] == 3:
            m -= 1
        return StratumLabel("H3", m)
    return StratumLabel("undetermined", reason=f"degree sequence {seq} ends in 4 after a 3")


@dataclass(frozen=True)
class BoundaryReport:
    gamma: BoundaryGraph
    features: list = field(default_factory=list)
    classification: BoundaryClass | None = None
    roots: RootData | None = None
    stratum: StratumLabel | None = None
    notes: tuple[str, ...] = ()


def analyze(hier: InflationHierarchy, size: int | None = None, strict: bool = True) -> BoundaryReport:
    """Persistent boundary, virtual features, class, roots and stratum in one pass."""
    gamma = persistent_boundary(hier, strict=strict)
    feats = detect_virtual_features(hier, gamma, size)
    cls = classify_boundary(hier, feats, gamma)
    notes = []
    roots = stratum = None
    if tree_report(gamma).is_tree:
        try:
            roots = find_roots(hier, gamma)
            stratum = stratify(roots, hier.depth)
        except BoundaryError as exc:
            notes.append(str(exc))
    else:
        notes.append("roots not computed: persistent boundary has cycles at this depth")
    return BoundaryReport(gamma, feats, cls, roots, stratum, tuple(notes))
