"""Bratteli diagrams of supertile hierarchies, Vershik maps and frequencies.

Level 0 of a diagram is a single root vertex.  Level 1 holds the prototile
labels (one edge from the root to each), and level ``n + 1`` the distinct
level-``n`` supertile types.  Edges ending at a vertex are stored contiguously
in their Vershik order, so an edge's order is its offset inside that block.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .inflation import InflationHierarchy
from .tiling import SquareSubstitution


class BratteliError(ValueError):
    pass


@dataclass(eq=False)
class BratteliDiagram:
    vertices: list[list[str]]
    sources: list[np.ndarray]  # sources[n]: for edges of E_n (n >= 1), index into V_(n-1)
    ranges: list[np.ndarray]  # ranges[n]: index into V_n, non-decreasing

    def __post_init__(self):
        if len(self.sources) != len(self.vertices) or len(self.ranges) != len(self.vertices):
            raise BratteliError("need one edge array per level (index 0 unused)")
        for n in range(1, len(self.vertices)):
            s, r = np.asarray(self.sources[n]), np.asarray(self.ranges[n])
            if len(s) != len(r):
                raise BratteliError(f"level {n}: source/range length mismatch")
            if len(s) and (s.min() < 0 or s.max() >= len(self.vertices[n - 1])
                           or r.min() < 0 or r.max() >= len(self.vertices[n])):
                raise BratteliError(f"level {n}: edge endpoint out of range")
            if np.any(np.diff(r) < 0):
                raise BratteliError(f"level {n}: edges must be grouped by range vertex")

    @property
    def depth(self) -> int:
        return len(self.vertices) - 1

    def fiber(self, n: int, v: int) -> range:
        """Indices of the edges of E_n ending at vertex ``v`` of V_n, in order."""
        r = self.ranges[n]
        return range(int(np.searchsorted(r, v)), int(np.searchsorted(r, v, side="right")))

    def multiplicity_matrix(self, n: int) -> np.ndarray:
        """``M[u, v]`` = number of edges from ``u`` in V_(n-1) to ``v`` in V_n."""
        m = np.zeros((len(self.vertices[n - 1]), len(self.vertices[n])), dtype=np.int64)
        np.add.at(m, (self.sources[n], self.ranges[n]), 1)
        return m

    @classmethod
    def from_multiplicities(cls, vertices, matrices) -> "BratteliDiagram":
        """Diagram whose edges realise ``matrices[n-1][u, v]`` (fibers ordered by source)."""
        sources, ranges = [np.zeros(0, np.int64)], [np.zeros(0, np.int64)]
        for m in matrices:
            m = np.asarray(m, dtype=np.int64)
            s, r = [], []
            for v in range(m.shape[1]):
                for u in range(m.shape[0]):
                    s += [u] * int(m[u, v])
                    r += [v] * int(m[u, v])
            sources.append(np.array(s, dtype=np.int64))
            ranges.append(np.array(r, dtype=np.int64))
        return cls([list(v) for v in vertices], sources, ranges)

    @classmethod
    def odometer(cls, depth: int, k: int = 2) -> "BratteliDiagram":
        """One vertex per level and ``k`` parallel edges between consecutive levels."""
        return cls.from_multiplicities([["o"]] * (depth + 1), [[[k]]] * depth)

    def to_json(self) -> dict:
        return {
            "levels": [list(v) for v in self.vertices],
            "edges": [[]] + [
                [{"source": int(s), "range": int(r), "order": int(i - self.fiber(n, int(r)).start)}
                 for i, (s, r) in enumerate(zip(self.sources[n], self.ranges[n]))]
                for n in range(1, len(self.vertices))],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BratteliDiagram":
        verts = [list(v) for v in data["levels"]]
        sources, ranges = [np.zeros(0, np.int64)], [np.zeros(0, np.int64)]
        for n in range(1, len(verts)):
            es = sorted(data["edges"][n], key=lambda e: (e["range"], e["order"]))
            sources.append(np.array([e["source"] for e in es], dtype=np.int64))
            ranges.append(np.array([e["range"] for e in es], dtype=np.int64))
        return cls(verts, sources, ranges)


def build_diagram(hier: InflationHierarchy) -> BratteliDiagram:
    """Types as vertices; one edge per child occurrence, ordered by child anchor (row-major)."""
    labels = list(hier.window.labels)
    verts = [["root"], labels]
    sources = [np.zeros(0, np.int64), np.zeros(len(labels), np.int64)]
    ranges = [np.zeros(0, np.int64), np.arange(len(labels), dtype=np.int64)]
    for n in range(1, hier.depth + 1):
        lv, prev = hier.levels[n], hier.levels[n - 1]
        verts.append([f"{n}:{k}" for k in lv.type_keys])
        s, r = [], []
        children = lv.children
        for t in range(len(lv.type_keys)):
            tiles = np.nonzero(lv.type_ids == t)[0]
            rep = int(tiles[0])
            ch = children[rep]
            anc = prev.anchors[ch]
            ch = ch[np.lexsort((anc[:, 0], anc[:, 1]))]
            s.extend(int(prev.type_ids[c]) for c in ch)
            r.extend([t] * len(ch))
        sources.append(np.array(s, dtype=np.int64))
        ranges.append(np.array(r, dtype=np.int64))
    return BratteliDiagram(verts, sources, ranges)


def check_standard_simple(d: BratteliDiagram) -> tuple[bool, bool]:
    standard = len(d.vertices[0]) == 1 and all(
        len(d.fiber(n, v)) > 0 for n in range(1, d.depth + 1) for v in range(len(d.vertices[n])))
    # reach[k][v] = set of vertices of V_m reachable from v, as boolean rows
    simple = True
    for k in range(d.depth + 1):
        for v in range(len(d.vertices[k])):
            cur = np.zeros(len(d.vertices[k]), dtype=bool)
            cur[v] = True
            ok = bool(cur.all())
            for m in range(k + 1, d.depth + 1):
                adj = d.multiplicity_matrix(m) > 0
                cur = (cur.astype(np.int64) @ adj.astype(np.int64)) > 0
                if cur.all():
                    ok = True
                    break
            if not ok:
                simple = False
                break
        if not simple:
            break
    return standard, simple


# ---------------------------------------------------------------- paths

FinitePath = tuple  # (e_1, ..., e_n): edge indices into E_1..E_n


def is_path(d: BratteliDiagram, p: FinitePath) -> bool:
    if len(p) > d.depth:
        return False
    for i, e in enumerate(p, start=1):
        if not 0 <= e < len(d.sources[i]):
            return False
        if i == 1 and d.sources[1][e] != 0:
            return False
        if i > 1 and d.sources[i][e] != d.ranges[i - 1][p[i - 2]]:
            return False
    return True


def tail_equivalent(p: FinitePath, q: FinitePath) -> bool:
    """Equal from some index on (in particular the last edges agree)."""
    if len(p) != len(q):
        raise BratteliError(f"paths of different lengths {len(p)} and {len(q)}")
    return len(p) == 0 or p[-1] == q[-1]


@dataclass(frozen=True)
class EdgeOrder:
    """Order on each fiber r^-1(v): position inside the contiguous block of edges."""

    diagram: BratteliDiagram

    def rank(self, n: int, e: int) -> int:
        return e - self.diagram.fiber(n, int(self.diagram.ranges[n][e])).start

    def is_max(self, n: int, e: int) -> bool:
        f = self.diagram.fiber(n, int(self.diagram.ranges[n][e]))
        return e == f.stop - 1

    def is_total(self) -> bool:
        return True  # fibers are contiguous blocks, so each is totally ordered


def _min_path_to(d: BratteliDiagram, n: int, v: int) -> list[int]:
    out = []
    for m in range(n, 0, -1):
        f = d.fiber(m, v)
        if len(f) == 0:
            raise BratteliError(f"vertex {v} at level {m} has no incoming edge")
        e = f.start
        out.append(e)
        v = int(d.sources[m][e])
    return out[::-1]


def min_path(d: BratteliDiagram, n: int, top: int = 0) -> FinitePath:
    return tuple(_min_path_to(d, n, top))


def max_path(d: BratteliDiagram, n: int) -> FinitePath:
    v = len(d.vertices[n]) - 1
    out = []
    for m in range(n, 0, -1):
        e = d.fiber(m, v).stop - 1
        out.append(e)
        v = int(d.sources[m][e])
    return tuple(out[::-1])


def vershik_successor(d: BratteliDiagram, p: FinitePath, cap: bool = False) -> FinitePath:
    """Next path in the Vershik order; the maximal path wraps to the minimal one.

    With several top vertices there is no unique maximal path and wrapping
    raises, unless ``cap`` orders the top vertices by index (a virtual vertex
    above the last level), which makes the map a bijection of the whole
    truncated path space.
    """
    if not is_path(d, p):
        raise BratteliError(f"{p} is not a path from the root")
    n = len(p)
    for i in range(n):
        m = i + 1
        e = p[i]
        f = d.fiber(m, int(d.ranges[m][e]))
        if e < f.stop - 1:
            nxt = e + 1
            lower = _min_path_to(d, m - 1, int(d.sources[m][nxt])) if m > 1 else []
            return tuple(lower) + (nxt,) + tuple(p[i + 1:])
    top = int(d.ranges[n][p[-1]]) if n else 0
    if len(d.vertices[n]) > 1 and not cap:
        raise BratteliError(f"{len(d.vertices[n])} maximal paths of length {n}: ordering not proper")
    nxt_top = top + 1 if top + 1 < len(d.vertices[n]) else 0
    return min_path(d, n, nxt_top)


def enumerate_paths(d: BratteliDiagram, n: int, limit: int | None = None) -> list[FinitePath]:
    """All root paths of length ``n`` in Vershik order (top vertex first, then lexicographic)."""
    total = path_count(d, n)
    if limit is not None and total > limit:
        raise BratteliError(f"{total} paths exceed the limit {limit}")
    out = [min_path(d, n, 0)]
    for _ in range(total - 1):
        out.append(vershik_successor(d, out[-1], cap=True))
    return out


def path_count(d: BratteliDiagram, n: int) -> int:
    counts = np.ones(1, dtype=object)
    for m in range(1, n + 1):
        mat = d.multiplicity_matrix(m).astype(object)
        counts = counts.dot(mat)
    return int(sum(counts))


def fiber_maximal(d: BratteliDiagram, p: FinitePath) -> bool:
    """Maximal among the paths ending at the same top vertex."""
    order = EdgeOrder(d)
    return all(order.is_max(i + 1, e) for i, e in enumerate(p))


def cap(d: BratteliDiagram, p: FinitePath) -> FinitePath:
    """``p`` extended by the virtual cap edge leaving its top vertex."""
    top = int(d.ranges[len(p)][p[-1]]) if p else 0
    return tuple(p) + (("cap", top),)


# ---------------------------------------------------------------- measures

@dataclass(frozen=True)
class FrequencyMeasure:
    labels: tuple[str, ...]
    values: tuple[float, ...]
    areas: tuple[float, ...]
    eigenvalue: float

    def __getitem__(self, label):
        return self.values[self.labels.index(label)]

    @property
    def total(self) -> float:
        return float(sum(v * a for v, a in zip(self.values, self.areas)))


def perron_left(m: np.ndarray, tol: float = 1e-12, max_iter: int = 1_000_000):
    """Left Perron eigenvector (sum 1) and eigenvalue of a primitive matrix."""
    m = np.asarray(m, dtype=float)
    x = np.full(m.shape[0], 1.0 / m.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = x @ m
        lam = y.sum()
        y /= lam
        if np.max(np.abs(y - x)) <= tol * np.max(np.abs(y)):
            return y, lam
        x = y
    raise BratteliError("power iteration did not converge")


def tile_frequencies(sub: SquareSubstitution) -> FrequencyMeasure:
    """Prototile frequencies: the normalised left Perron vector of the incidence matrix."""
    m = sub.incidence_matrix()
    if not sub.is_primitive():
        raise BratteliError(f"substitution {sub.name!r} is not primitive")
    v, lam = perron_left(m)
    return FrequencyMeasure(tuple(sub.prototiles.labels), tuple(float(t) for t in v),
                            (1.0,) * len(v), float(lam))


def boundary_measure_bound(hier: InflationHierarchy, level: int) -> Fraction:
    """max over supertiles of (cells touching another supertile) / (cells)."""
    lv = hier.levels[level]
    if lv.count == 0:
        raise BratteliError(f"level {level} has no trusted supertiles")
    e = np.broadcast_to(np.asarray(lv.edge_cells, dtype=np.int64), (lv.count,))
    a = np.broadcast_to(np.asarray(lv.areas, dtype=np.int64), (lv.count,))
    pairs = np.unique(np.stack([e, a], axis=1), axis=0)
    return max(Fraction(int(x), int(y)) for x, y in pairs)


def ratio_recount(owner: np.ndarray, tile: int) -> Fraction:
    """Independent recount of one supertile's boundary-cell ratio (loops over cells)."""
    h, w = owner.shape
    ys, xs = np.nonzero(owner == tile)
    touching = 0
    for x, y in zip(xs.tolist(), ys.tolist()):
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or owner[ny, nx] != tile:
                touching += 1
                break
    return Fraction(touching, len(xs))
