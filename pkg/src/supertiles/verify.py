"""Independent re-checks of every invariant against dumped artifacts.

Each check recounts from the raw JSON (cell ids, rectangles, child lists)
rather than reusing the producer's derived arrays.  Geometry for P′ comes
from the dumped squares, arms and crosses.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import shapely
from scipy import ndimage

from .bratteli import (BratteliDiagram, BratteliError, build_diagram, cap, enumerate_paths,
                       fiber_maximal, path_count, tail_equivalent, tile_frequencies,
                       vershik_successor)
from .inflation import InflationHierarchy, pprime_polygons
from .io import decomposition_from_json, diagram_to_json, graph_from_json
from .tiling import SquareSubstitution, TilingWindow

PATH_LIMIT = 10_000


@dataclass
class Check:
    name: str
    module: str
    passed: bool | None  # None: not applicable to these artifacts
    checked: int = 0
    failures: int = 0
    counterexample: list | None = None
    message: str = ""
    hard: bool = True

    def to_json(self) -> dict:
        return {"name": self.name, "module": self.module, "passed": self.passed,
                "checked": self.checked, "failures": self.failures,
                "counterexample": self.counterexample, "message": self.message,
                "hard": self.hard}


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks if c.hard)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if c.passed is False]

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self, timing: bool = False) -> dict:
        out = {"passed": self.passed, "checks": [c.to_json() for c in self.checks],
               "notes": list(self.notes)}
        if timing:
            out["timing"] = self.timing
        return out

    def lines(self) -> list[str]:
        tag = {True: "PASS", False: "FAIL", None: "SKIP"}
        out = []
        for c in self.checks:
            s = f"{tag[c.passed]:4}  {c.module:13} {c.name:24} checked={c.checked}"
            if c.failures:
                s += f" failures={c.failures}"
            if c.message:
                s += f"  {c.message}"
            out.append(s)
        return out


# ---------------------------------------------------------------- helpers

def _cell_xy(cid: int, width: int) -> list[int]:
    return [int(cid % width), int(cid // width)]


def _ref_cells(owner: np.ndarray, n: int) -> np.ndarray:
    """Per id: the cell maximising x + y, then x (by sorting, not the kernel)."""
    ys, xs = np.nonzero(owner >= 0)
    ids = owner[ys, xs]
    order = np.lexsort((xs, xs + ys, ids))
    last = np.searchsorted(ids[order], np.arange(n), side="right") - 1
    out = np.full((n, 2), -1, dtype=np.int64)
    ok = (last >= 0)
    ok[ok] = ids[order][last[ok]] == np.arange(n)[ok]
    out[ok, 0] = xs[order][last[ok]]
    out[ok, 1] = ys[order][last[ok]]
    return out


def _edge_masks(owner: np.ndarray):
    """Unit edges between two distinct trusted ids: horizontal (H+1, W), vertical (H, W+1)."""
    h, w = owner.shape
    hor = np.zeros((h + 1, w), dtype=bool)
    ver = np.zeros((h, w + 1), dtype=bool)
    a, b = owner[:-1], owner[1:]
    hor[1:h] = (a != b) & (a >= 0) & (b >= 0)
    a, b = owner[:, :-1], owner[:, 1:]
    ver[:, 1:w] = (a != b) & (a >= 0) & (b >= 0)
    return hor, ver


def _perimeter_and_edge_cells(owner: np.ndarray, n: int):
    """Unit-edge perimeter and boundary-touching cell count per id (window edge counts)."""
    pad = np.pad(owner, 1, constant_values=-2)
    c = pad[1:-1, 1:-1]
    per = np.zeros(owner.shape, dtype=np.int64)
    touch = np.zeros(owner.shape, dtype=bool)
    for nb in (pad[2:, 1:-1], pad[:-2, 1:-1], pad[1:-1, 2:], pad[1:-1, :-2]):
        d = nb != c
        per += d
        touch |= d
    m = owner >= 0
    perim = np.bincount(owner[m], weights=per[m], minlength=n).astype(np.int64)
    edge = np.bincount(owner[m], weights=touch[m], minlength=n).astype(np.int64)
    area = np.bincount(owner[m], minlength=n).astype(np.int64)
    return area, perim, edge


def _run(check_fn, name, module, *args) -> Check:
    try:
        return check_fn(*args)
    except Exception as exc:  # a malformed artifact fails the check, not the harness
        return Check(name, module, False, message=f"{type(exc).__name__}: {exc}")


# ---------------------------------------------------------------- decomposition

def _inside(rect, box) -> bool:
    return rect[0] >= box[0] and rect[1] >= box[1] and rect[2] <= box[2] and rect[3] <= box[3]


def _dec_boxes(d: dict):
    x0, y0, x1, y1 = d["region"]
    m = d["margin"]
    return (x0, y0, x1, y1), (x0 + m, y0 + m, x1 - m, y1 - m)


def check_arm_bounds(decs) -> Check:
    n_arms = bad = 0
    ce, msg = None, ""
    for lvl, d in decs:
        n = d["N"]
        for i, a in enumerate(d["arms"]):
            x0, y0, x1, y1 = a["rect"]
            width, length = (x1 - x0, y1 - y0) if a["orientation"] == "vertical" else (y1 - y0, x1 - x0)
            n_arms += 1
            if width > n or length > n or width < 0 or length < 0:
                bad += 1
                if ce is None:
                    ce = [lvl, i, a["rect"]]
                    msg = (f"level {lvl} arm {i} {a['rect']}: width {width}, length {length}, "
                           f"N={n} (arm lemma: length and width at most N)")
    return Check("arm-bounds", "decomposition", bad == 0, n_arms, bad, ce, msg)


def check_cross_rectangles(decs) -> Check:
    total = bad = 0
    ce, msg = None, ""
    for lvl, d in decs:
        n = d["N"]
        _, tb = _dec_boxes(d)
        for c in d["crosses"]:
            total += 1
            x0, y0, x1, y1 = c["rect"]
            if x1 - x0 > 2 * n or y1 - y0 > 2 * n:
                bad += 1
                if ce is None:
                    ce, msg = [lvl, c["rect"]], f"level {lvl} cross {c['rect']} exceeds 2N={2 * n}"
        for r in d.get("irregular", []):
            if _inside(r, tb):
                total += 1
                bad += 1
                if ce is None:
                    ce, msg = [lvl, r], f"level {lvl}: non-rectangular complement component in {r}"
    return Check("cross-rectangles", "decomposition", bad == 0, total, bad, ce, msg)


def check_exit_multiplicity(decs) -> Check:
    total = bad = 0
    ce, msg = None, ""
    for lvl, d in decs:
        _, tb = _dec_boxes(d)
        for c in d["crosses"]:
            if not _inside(c["rect"], tb):
                continue
            total += 1
            mult = len(c["exits"])
            sides = {e["side"] for e in c["exits"]}
            if not 3 <= mult <= 4 or len(sides) > 4:
                bad += 1
                if ce is None:
                    ce, msg = [lvl, c["rect"]], f"level {lvl} cross {c['rect']} has multiplicity {mult}"
    return Check("exit-multiplicity", "decomposition", bad == 0, total, bad, ce, msg)


def check_cover_partition(decs) -> Check:
    total = bad = 0
    ce, msg = None, ""
    for lvl, d in decs:
        h, w = d["shape"]
        n = d["N"]
        cov = np.zeros((h, w), dtype=np.int32)
        rects = [(x, y, x + n, y + n) for x, y in d["squares"]]
        rects += [a["rect"] for a in d["arms"]] + [c["rect"] for c in d["crosses"]]
        for x0, y0, x1, y1 in rects:
            cov[max(y0, 0):max(y1, 0), max(x0, 0):max(x1, 0)] += 1
        _, (x0, y0, x1, y1) = _dec_boxes(d)
        sub = cov[y0:y1, x0:x1]
        total += sub.size
        wrong = np.argwhere(sub != 1)
        bad += len(wrong)
        if len(wrong) and ce is None:
            y, x = (int(v) for v in wrong[0])
            ce = [lvl, x + x0, y + y0]
            msg = f"level {lvl}: cell ({x + x0}, {y + y0}) covered {int(sub[y, x])} times"
    return Check("cover-partition", "decomposition", bad == 0, total, bad, ce, msg)


def check_maximality(decs) -> Check:
    total = bad = 0
    ce, msg = None, ""
    for lvl, d in decs:
        h, w = d["shape"]
        n = d["N"]
        occ = np.zeros((h, w), dtype=np.int64)
        for x, y in d["squares"]:
            occ[y:y + n, x:x + n] = 1
        (x0, y0, x1, y1), _ = _dec_boxes(d)
        sub = occ[y0:y1, x0:x1]
        if sub.shape[0] < n or sub.shape[1] < n:
            continue
        s = np.zeros((sub.shape[0] + 1, sub.shape[1] + 1), dtype=np.int64)
        s[1:, 1:] = sub.cumsum(0).cumsum(1)
        win = s[n:, n:] - s[:-n, n:] - s[n:, :-n] + s[:-n, :-n]
        total += win.size
        empty = np.argwhere(win == 0)
        bad += len(empty)
        if len(empty) and ce is None:
            y, x = (int(v) for v in empty[0])
            ce, msg = [lvl, x + x0, y + y0], f"level {lvl}: empty {n}x{n} square at ({x + x0}, {y + y0})"
    return Check("maximality", "decomposition", bad == 0, total, bad, ce, msg)


# ---------------------------------------------------------------- inflation

def _owners(window: TilingWindow, hdata: dict):
    """Owner maps rebuilt from child lists, checking disjointness on the way."""
    h, w = window.height, window.width
    owner = np.arange(h * w, dtype=np.int64).reshape(h, w)
    owners, problems = [owner], []
    n_prev = h * w
    for rec in hdata["levels"]:
        parent = np.full(n_prev, -1, dtype=np.int64)
        for t in rec["supertiles"]:
            ch = np.asarray(t["children"], dtype=np.int64)
            dup = ch[parent[ch] >= 0]
            if len(dup) and not problems:
                problems.append((rec["index"], int(dup[0]), t["id"]))
            parent[ch] = t["id"]
        prev = owners[-1]
        owner = np.where(prev >= 0, np.append(parent, -1)[np.where(prev >= 0, prev, n_prev)], -1)
        owners.append(owner)
        n_prev = len(rec["supertiles"])
    return owners, problems


def check_partition(window: TilingWindow, hdata: dict, owners, problems,
                    hier: InflationHierarchy | None = None) -> Check:
    """Disjoint, covering the trusted box, and every child snapped into its parent's P′."""
    w = window.width
    checked = bad = 0
    ce, msg = None, ""
    if problems:
        lvl, child, tid = problems[0]
        cell = _cell_xy(child, w) if lvl == 1 else [int(v) for v in
                                                     np.argwhere(owners[lvl - 1] == child)[0][::-1]]
        return Check("partition", "inflation", False, 0, len(problems), [lvl] + cell,
                     f"level {lvl}: child {child} at {tuple(cell)} belongs to two supertiles")
    for rec in hdata["levels"]:
        lvl = rec["index"]
        owner, prev = owners[lvl], owners[lvl - 1]
        x0, y0, x1, y1 = rec["trusted_box"]
        sub = owner[y0:y1, x0:x1]
        checked += sub.size
        holes = np.argwhere(sub < 0)
        if len(holes):
            bad += len(holes)
            if ce is None:
                y, x = (int(v) for v in holes[0])
                ce, msg = [lvl, x + x0, y + y0], f"level {lvl}: trusted cell ({x + x0}, {y + y0}) has no supertile"
        dd = rec.get("decomposition")
        if dd is None or rec.get("square_of") is None:
            continue
        if hier is not None:
            polys = np.array(hier.levels[lvl].pprime_polygons, dtype=object)
        else:
            polys = np.array(pprime_polygons(decomposition_from_json(dd), rec["square_of"]),
                             dtype=object)
        n_prev = int(prev.max()) + 1 if (prev >= 0).any() else 0
        refs = _ref_cells(prev, n_prev)
        child, par = [], []
        for t in rec["supertiles"]:
            child.extend(t["children"])
            par.extend([t["id"]] * len(t["children"]))
        child = np.asarray(child, dtype=np.int64)
        par = np.asarray(par, dtype=np.int64)
        if not len(child):
            continue
        xy = refs[child] + 0.5
        ok = shapely.intersects_xy(polys[par], xy[:, 0], xy[:, 1])
        checked += len(child)
        miss = np.nonzero(~ok)[0]
        if len(miss):
            bad += len(miss)
            if ce is None:
                x, y = (int(v) for v in refs[child[miss[0]]])
                ce = [lvl, x, y]
                msg = (f"level {lvl}: cell ({x}, {y}) is assigned to supertile {int(par[miss[0]])} "
                       f"but lies outside its P′")
    return Check("partition", "inflation", bad == 0, checked, bad, ce, msg)


def check_nesting(owners) -> Check:
    checked = bad = 0
    ce, msg = None, ""
    for n in range(1, len(owners) - 1):
        h0, v0 = _edge_masks(owners[n])
        h1, v1 = _edge_masks(owners[n + 1])
        checked += int(h1.sum() + v1.sum())
        extra = np.argwhere(h1 & ~h0)
        extra_v = np.argwhere(v1 & ~v0)
        k = len(extra) + len(extra_v)
        bad += k
        if k and ce is None:
            y, x = (int(v) for v in (extra[0] if len(extra) else extra_v[0]))
            ce = [n + 1, x, y]
            msg = f"level {n + 1} boundary edge at vertex ({x}, {y}) is not a level-{n} edge"
    return Check("boundary-nesting", "inflation", bad == 0, checked, bad, ce, msg)


def check_type_keys(hier: InflationHierarchy, hdata: dict) -> Check:
    """Stored type keys must induce the same partition as the recomputed ones."""
    from .inflation import _type_hashes, _type_ids
    checked = bad = 0
    ce, msg = None, ""
    for lv, rec in zip(hier.levels[1:], hdata["levels"]):
        prev = hier.levels[lv.index - 1]
        hashes = _type_hashes(lv.parent, prev.type_ids, prev.ref_cells.astype(np.int64),
                              lv.ref_cells, lv.count)
        ids, keys = _type_ids(hashes, lv.areas)
        stored = [t["type_key"] for t in sorted(rec["supertiles"], key=lambda t: t["id"])]
        fresh = [keys[i] for i in ids]
        checked += lv.count
        wrong = [i for i, (a, b) in enumerate(zip(stored, fresh)) if a != b]
        bad += len(wrong)
        if wrong and ce is None:
            i = wrong[0]
            ce = [lv.index, i] + [int(v) for v in lv.anchors[i]]
            msg = f"level {lv.index} supertile {i}: stored type key does not match its contents"
    return Check("type-keys", "inflation", bad == 0, checked, bad, ce, msg)


def check_level1_lemma(hier: InflationHierarchy, owners) -> Check:
    if hier.depth < 1 or hier.levels[1].decomposition is None:
        return Check("level1-bounds", "inflation", None, message="no decomposition at level 1")
    lv = hier.levels[1]
    n = lv.side
    area_p, per_p = lv.pprime_stats
    _, per_pp, _ = _perimeter_and_edge_cells(owners[1], lv.count)
    ok = (area_p >= n * n - 1e-9) & (area_p <= 9 * n * n + 1e-9) & (per_p <= 16 * n + 1e-9) \
        & (per_pp <= 64 * n)
    bad = np.nonzero(~ok)[0]
    ce = msg = None
    if len(bad):
        i = int(bad[0])
        ce = [1, i] + [int(v) for v in lv.anchors[i]]
        msg = (f"supertile {i}: area(P′)={area_p[i]:g}, perim(P′)={per_p[i]:g}, "
               f"perim(P″)={per_pp[i]}, N={n}")
    return Check("level1-bounds", "inflation", len(bad) == 0, lv.count, len(bad), ce, msg or "")


def check_higher_lemma(hier: InflationHierarchy, owners) -> Check:
    checked = bad = 0
    ce, msg = None, ""
    applicable = False
    for lv in hier.levels[2:]:
        if lv.decomposition is None or lv.count == 0:
            continue
        applicable = True
        prev_area, prev_per, _ = _perimeter_and_edge_cells(owners[lv.index - 1], hier.levels[lv.index - 1].count)
        a_prev, l_prev = int(prev_area.max()), int(prev_per.max())
        area_p, per_p = lv.pprime_stats
        area_pp, per_pp, _ = _perimeter_and_edge_cells(owners[lv.index], lv.count)
        ok = (area_pp >= area_p - per_p * a_prev - 1e-6) & (per_pp <= per_p * l_prev + 1e-6)
        checked += lv.count
        fails = np.nonzero(~ok)[0]
        bad += len(fails)
        if len(fails) and ce is None:
            i = int(fails[0])
            ce = [lv.index, i]
            msg = f"level {lv.index} supertile {i} violates the area/perimeter inequalities"
    return Check("higher-bounds", "inflation", (bad == 0) if applicable else None, checked, bad, ce, msg)


def check_minimality(window: TilingWindow, hier: InflationHierarchy, owners, primitive: bool) -> Check:
    if not primitive or hier.depth < 1 or len(window.labels) < 2:
        return Check("minimality", "inflation", None, message="needs a primitive multi-label window",
                     hard=False)
    own = owners[1]
    m = own >= 0
    n_t = hier.levels[1].count
    present = np.zeros((n_t, len(window.labels)), dtype=bool)
    present[own[m], window.cells[m]] = True
    bad = np.nonzero(~present.all(axis=1))[0]
    ce = [1, int(bad[0])] if len(bad) else None
    return Check("minimality", "inflation", len(bad) == 0, n_t, len(bad), ce,
                 f"{len(bad)} level-1 supertiles miss a prototile label" if len(bad) else "")


# ---------------------------------------------------------------- boundary

def check_persistent_tree(hier: InflationHierarchy, owners) -> Check:
    if hier.depth < 1:
        return Check("persistent-tree", "boundary", None, message="no levels")
    hor, ver = _edge_masks(owners[1])
    for o in owners[2:]:
        h2, v2 = _edge_masks(o)
        hor &= h2
        ver &= v2
    top = owners[-1]
    h, w = top.shape
    t = top >= 0
    # cells joined across non-boundary edges; untrusted cells and the frame form the outside
    grid = np.zeros((2 * h + 3, 2 * w + 3), dtype=bool)
    grid[0, :] = grid[-1, :] = grid[:, 0] = grid[:, -1] = True
    inner = grid[1:-1, 1:-1]
    inner[1::2, 1::2] = True
    inner[2:-1:2, 1::2] = ~hor[1:h]  # between rows
    inner[1::2, 2:-1:2] = ~ver[:, 1:w]
    inner[0, 1::2] = inner[-1, 1::2] = True
    inner[1::2, 0] = inner[1::2, -1] = True
    lab, _ = ndimage.label(grid)
    cells = lab[2:-2:2, 2:-2:2]
    outside = lab[0, 0]
    touched = np.unique(np.concatenate([cells[~t], [outside]]))
    enclosed = t & ~np.isin(cells, touched)
    faces = np.unique(cells[enclosed])
    bad_faces = 0
    first = None
    for f in faces:
        mask = cells == f
        ids = np.unique(top[mask])
        if len(ids) != 1 or (top == ids[0]).sum() != mask.sum():
            bad_faces += 1
            if first is None:
                y, x = (int(v) for v in np.argwhere(mask)[0])
                first = [x, y]
    deg = np.zeros((h + 1, w + 1), dtype=np.int64)
    deg[:, :-1] += hor
    deg[:, 1:] += hor
    deg[:-1, :] += ver
    deg[1:, :] += ver
    interior = np.zeros((h + 1, w + 1), dtype=bool)
    interior[1:-1, 1:-1] = t[:-1, :-1] & t[:-1, 1:] & t[1:, :-1] & t[1:, 1:]
    term = np.argwhere((deg == 1) & interior)
    bad = bad_faces + len(term)
    msg, ce = "", None
    if bad_faces:
        ce, msg = first, f"enclosed face at {tuple(first)} is not a single top-level supertile"
    elif len(term):
        y, x = (int(v) for v in term[0])
        ce, msg = [x, y], f"terminal vertex ({x}, {y}) in the trusted interior"
    return Check("persistent-tree", "boundary", bad == 0, len(faces) + int(interior.sum()), bad, ce, msg)


def check_classification(bdata: dict | None) -> Check:
    if bdata is None:
        return Check("class-consistency", "boundary", None, message="no boundary artifact")
    g = graph_from_json(bdata["gamma"])
    t = g.trusted_cells
    h, w = t.shape
    grid = np.zeros((2 * h + 1, 2 * w + 1), dtype=bool)
    grid[1::2, 1::2] = t
    grid[1::2, 2:-1:2] = t[:, :-1] & t[:, 1:] & ~g.ver[:, 1:w]
    grid[2:-1:2, 1::2] = t[:-1] & t[1:] & ~g.hor[1:h]
    lab, _ = ndimage.label(grid)
    comps = len(np.unique(lab[1::2, 1::2][t]))
    cls = bdata.get("class")
    if cls is None:
        return Check("class-consistency", "boundary", None, message="not classified")
    ok = comps == cls["component_count"]
    msg = "" if ok else f"stored component count {cls['component_count']} but recount gives {comps}"
    if ok and cls["case_tag"] != "undetermined":
        ok = comps == max(cls["ends"], 1) and comps <= 4
        if not ok:
            msg = f"{cls['case_tag']} expects {cls['ends']} ends but there are {comps} components"
    return Check("class-consistency", "boundary", ok, 1, 0 if ok else 1, None, msg)


def check_degrees(bdata: dict | None) -> Check:
    if bdata is None or bdata.get("roots") is None or not bdata["roots"]["roots"]:
        return Check("degree-sequence", "boundary", None, message="no roots")
    seq = [d for d in bdata["roots"]["degree_sequence"] if d is not None]
    bad = [d for d in seq if d not in (3, 4)]
    st = bdata.get("stratum")
    ok = not bad and st is not None
    msg = f"degrees {bad} outside {{3, 4}}" if bad else ("" if st else "classified root without a stratum")
    return Check("degree-sequence", "boundary", ok, len(seq), len(bad), None, msg)


# ---------------------------------------------------------------- bratteli

def check_diagram(hier: InflationHierarchy, ddata: dict | None) -> Check:
    if ddata is None:
        return Check("diagram-conservation", "bratteli", None, message="no diagram artifact")
    d = BratteliDiagram.from_json(ddata)
    fresh = diagram_to_json(build_diagram(hier))
    if fresh != ddata:
        return Check("diagram-conservation", "bratteli", False, 1, 1, None,
                     "diagram does not match the hierarchy")
    checked = bad = 0
    ce, msg = None, ""
    for n in range(1, hier.depth + 1):
        lv, prev = hier.levels[n], hier.levels[n - 1]
        child_area = np.zeros(len(prev.type_keys), dtype=np.int64)
        child_area[np.asarray(prev.type_ids)] = np.asarray(prev.areas)
        m = d.multiplicity_matrix(n + 1)
        tot = child_area @ m
        for t in range(len(lv.type_keys)):
            area = int(lv.areas[np.nonzero(lv.type_ids == t)[0][0]])
            checked += 1
            if tot[t] != area:
                bad += 1
                if ce is None:
                    ce, msg = [n, t], f"level {n} type {t}: children sum to {tot[t]} cells, area {area}"
    return Check("diagram-conservation", "bratteli", bad == 0, checked, bad, ce, msg)


def tail_relation(paths) -> list[np.ndarray]:
    """Rows of the relation "equal from some index on", straight from the definition."""
    p = np.asarray(paths, dtype=np.int64)
    k, n = p.shape
    rows = []
    for i in range(k):
        eq = p == p[i]
        suffix = np.flip(np.cumprod(np.flip(eq, axis=1), axis=1), axis=1)
        rows.append(suffix.any(axis=1))
    return rows


def check_paths(ddata: dict | None) -> list[Check]:
    if ddata is None:
        return [Check("tail-equivalence", "bratteli", None, message="no diagram artifact"),
                Check("vershik-bijection", "bratteli", None, message="no diagram artifact")]
    d = BratteliDiagram.from_json(ddata)
    done_t = done_v = 0
    bad_t = bad_v = 0
    msg_t = msg_v = ""
    for n in range(1, d.depth + 1):
        if path_count(d, n) > PATH_LIMIT:
            break
        paths = enumerate_paths(d, n)
        if len(set(paths)) != len(paths):
            bad_v += 1
            msg_v = f"length {n}: enumeration revisits a path"
        rel = tail_relation(paths)
        done_t += len(paths) ** 2
        key = np.array([p[-1] for p in paths])
        blocks = np.unique(key, return_inverse=True)[1]
        # the relation is an equivalence iff it is exactly "same block" for some labelling
        same = all(np.array_equal(r, blocks[i] == blocks) for i, r in enumerate(rel))
        sample = range(0, len(paths), max(1, len(paths) // 60))
        fn_ok = all(tail_equivalent(paths[i], paths[j]) == bool(rel[i][j])
                    for i in sample for j in sample)
        if not (same and fn_ok):
            bad_t += 1
            msg_t = f"length {n}: tail relation is not an equivalence"
        succ = [vershik_successor(d, p, cap=True) for p in paths]
        done_v += len(paths)
        if sorted(succ) != sorted(paths):
            bad_v += 1
            msg_v = f"length {n}: successor is not a bijection"
        for p, s in zip(paths, succ):
            if not fiber_maximal(d, p) and not tail_equivalent(cap(d, p), cap(d, s)):
                bad_v += 1
                msg_v = f"length {n}: successor of {p} leaves its tail class"
                break
    skip = done_t == 0
    return [Check("tail-equivalence", "bratteli", None if skip else bad_t == 0, done_t, bad_t,
                  None, msg_t or (f"more than {PATH_LIMIT} paths" if skip else "")),
            Check("vershik-bijection", "bratteli", None if skip else bad_v == 0, done_v, bad_v,
                  None, msg_v)]


def check_measure(hier: InflationHierarchy, owners) -> Check:
    from .bratteli import boundary_measure_bound
    checked = bad = 0
    ce, msg = None, ""
    for n in range(1, hier.depth + 1):
        if hier.levels[n].count == 0:
            continue
        area, _, edge = _perimeter_and_edge_cells(owners[n], hier.levels[n].count)
        recount = max(Fraction(int(e), int(a)) for e, a in set(zip(edge.tolist(), area.tolist())))
        got = boundary_measure_bound(hier, n)
        checked += 1
        if got != recount:
            bad += 1
            if ce is None:
                ce, msg = [n], f"level {n}: bound {got} but recount {recount}"
    return Check("measure-bound", "bratteli", bad == 0 if checked else None, checked, bad, ce, msg)


def check_frequencies(sub: SquareSubstitution | None) -> Check:
    if sub is None:
        return Check("frequencies", "bratteli", None, message="no substitution", hard=False)
    try:
        f = tile_frequencies(sub)
    except BratteliError as exc:
        return Check("frequencies", "bratteli", None, message=str(exc), hard=False)
    ok = all(v > 0 for v in f.values) and abs(f.total - 1) <= 1e-9
    return Check("frequencies", "bratteli", ok, len(f.values), 0 if ok else 1, None,
                 " ".join(f"{lab}={v:.12g}" for lab, v in zip(f.labels, f.values)))


# ---------------------------------------------------------------- entry point

def verify_artifacts(window: TilingWindow, hdata: dict, bdata: dict | None = None,
                     ddata: dict | None = None, sub: SquareSubstitution | None = None,
                     threads: int = 1) -> VerificationReport:
    """Run every check; independent checks run on ``threads`` worker threads."""
    from .io import hierarchy_from_json
    rep = VerificationReport()
    pool = ThreadPoolExecutor(max_workers=max(1, threads))

    def batch(module, tasks):
        t0 = time.perf_counter()
        futs = [pool.submit(_run, fn, name, module, *args) for fn, name, args in tasks]
        rep.checks.extend(f.result() for f in futs)
        rep.timing[module] = rep.timing.get(module, 0.0) + time.perf_counter() - t0

    with pool:
        decs = [(rec["index"], rec["decomposition"]) for rec in hdata["levels"]
                if rec.get("decomposition") is not None]
        batch("decomposition", [(check_arm_bounds, "arm-bounds", (decs,)),
                                (check_cross_rectangles, "cross-rectangles", (decs,)),
                                (check_exit_multiplicity, "exit-multiplicity", (decs,)),
                                (check_cover_partition, "cover-partition", (decs,)),
                                (check_maximality, "maximality", (decs,))])
        owners, problems = _owners(window, hdata)
        if problems:
            batch("inflation", [(check_partition, "partition", (window, hdata, owners, problems)),
                                (check_nesting, "boundary-nesting", (owners,))])
            rep.notes.append("hierarchy is not a partition; later checks skipped")
            return rep
        hier = hierarchy_from_json(hdata, window)
        try:
            for lv in hier.levels[1:]:
                lv.pprime_polygons  # shared by the partition and lemma checks
        except Exception:  # a broken decomposition; the checks below report it
            pass
        primitive = sub is not None and sub.is_primitive()
        batch("inflation", [(check_partition, "partition", (window, hdata, owners, problems, hier)),
                            (check_nesting, "boundary-nesting", (owners,)),
                            (check_type_keys, "type-keys", (hier, hdata)),
                            (check_level1_lemma, "level1-bounds", (hier, owners)),
                            (check_higher_lemma, "higher-bounds", (hier, owners)),
                            (check_minimality, "minimality", (window, hier, owners, primitive))])
        if hdata.get("stopped"):
            rep.notes.append(hdata["stopped"])
        batch("boundary", [(check_persistent_tree, "persistent-tree", (hier, owners)),
                           (check_classification, "class-consistency", (bdata,)),
                           (check_degrees, "degree-sequence", (bdata,))])
        batch("bratteli", [(check_diagram, "diagram-conservation", (hier, ddata))])
        t0 = time.perf_counter()
        try:
            rep.checks.extend(check_paths(ddata))
        except Exception as exc:
            rep.checks.append(Check("vershik-bijection", "bratteli", False,
                                    message=f"{type(exc).__name__}: {exc}"))
        rep.timing["bratteli"] += time.perf_counter() - t0
        batch("bratteli", [(check_measure, "measure-bound", (hier, owners)),
                           (check_frequencies, "frequencies", (sub,))])
    return rep
