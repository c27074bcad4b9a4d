"""JSON dump/load for every artifact type, and run configuration.

Dumps are plain dicts with sorted keys; ``write_json`` emits them with a
fixed layout so identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .boundary import (BoundaryClass, BoundaryGraph, BoundaryReport, RootData, StratumLabel,
                       VirtualFeature)
from .bratteli import BratteliDiagram
from .decomposition import KINDS, SIDES, SIGNS, CrossArrays, PartialDecomposition
from .inflation import (InflationHierarchy, Level, LevelSchedule, boundary_counts, tile_areas,
                        unit_level)
from .tiling import TilingWindow


class ArtifactError(ValueError):
    pass


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ArtifactError(f"missing artifact {path}") from exc
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: not valid JSON ({exc})") from exc


def _ints(a) -> list:
    return np.asarray(a).astype(np.int64).tolist()


def _plain(obj):
    """Nested tuples / numpy scalars as JSON lists and ints."""
    if isinstance(obj, (tuple, list, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _tupled(obj):
    if isinstance(obj, list):
        return tuple(_tupled(v) for v in obj)
    return obj


# ---------------------------------------------------------------- decomposition

def decomposition_to_json(dec: PartialDecomposition, sectors: bool = True) -> dict:
    """Squares, arms and crosses; half-integer points are doubled integers."""
    cd = dec.cross_data
    bounds = np.searchsorted(cd.exit_cross, np.arange(len(cd) + 1))
    crosses = []
    for i in range(len(cd)):
        sl = slice(bounds[i], bounds[i + 1])
        crosses.append({
            "rect": _ints(cd.rects[i]), "kind": KINDS[cd.kinds[i]],
            "exits": [{"point": _ints(p), "side": SIDES[s], "sign": SIGNS[g], "arm": int(a)}
                      for p, s, g, a in zip(cd.exit_points[sl], cd.exit_sides[sl],
                                            cd.exit_signs[sl], cd.exit_arms[sl])],
        })
    out = {
        "N": int(dec.N), "shape": list(dec.shape), "region": list(dec.region),
        "margin": int(dec.margin), "rule": dec.rule,
        "squares": _ints(dec.anchors),
        "arms": [{"rect": _ints(r), "between": _ints(b),
                  "orientation": "vertical" if v else "horizontal"}
                 for r, b, v in zip(dec.arm_rects, dec.arm_between, dec.arm_vertical)],
        "crosses": crosses,
        "irregular": [_ints(r) for r in cd.irregular],
        "censored": [list(c) for c in dec.censored],
    }
    if sectors:
        out["sectors"] = [{"cross": s.owner_cross, "square": s.square,
                           "region": [list(p) for p in s.region],
                           "cells": [list(c) for c in s.cells]} for s in dec.sectors]
    return out


def decomposition_from_json(data: dict) -> PartialDecomposition:
    try:
        arms = data["arms"]
        crosses = data["crosses"]
        ex = [(i, e) for i, c in enumerate(crosses) for e in c["exits"]]
        cd = CrossArrays(
            rects=np.array([c["rect"] for c in crosses], dtype=np.int64).reshape(-1, 4),
            kinds=np.array([KINDS.index(c["kind"]) for c in crosses], dtype=np.int8),
            exit_cross=np.array([i for i, _ in ex], dtype=np.int64),
            exit_points=np.array([e["point"] for _, e in ex], dtype=np.int64).reshape(-1, 2),
            exit_sides=np.array([SIDES.index(e["side"]) for _, e in ex], dtype=np.int8),
            exit_signs=np.array([SIGNS.index(e["sign"]) for _, e in ex], dtype=np.int8),
            exit_arms=np.array([e["arm"] for _, e in ex], dtype=np.int64),
            irregular=[tuple(r) for r in data.get("irregular", [])],
        )
        return PartialDecomposition(
            N=int(data["N"]), shape=tuple(data["shape"]), region=tuple(data["region"]),
            margin=int(data["margin"]),
            anchors=np.array(data["squares"], dtype=np.int32).reshape(-1, 2),
            arm_rects=np.array([a["rect"] for a in arms], dtype=np.int64).reshape(-1, 4),
            arm_between=np.array([a["between"] for a in arms], dtype=np.int64).reshape(-1, 2),
            arm_vertical=np.array([a["orientation"] == "vertical" for a in arms], dtype=bool),
            cross_data=cd, censored=[tuple(c) for c in data.get("censored", [])],
            rule=data.get("rule", "greedy-lex"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"malformed decomposition dump: {exc!r}") from exc


# ---------------------------------------------------------------- hierarchy

def hierarchy_to_json(hier: InflationHierarchy) -> dict:
    levels = []
    for lv in hier.levels[1:]:
        children = lv.children
        levels.append({
            "index": lv.index, "side": int(lv.side), "trusted_box": list(lv.trusted_box),
            "margin": int(lv.margin),
            "supertiles": [{"id": i, "anchor": _ints(lv.anchors[i]),
                            "children": _ints(children[i]),
                            "type_key": lv.type_keys[lv.type_ids[i]]}
                           for i in range(lv.count)],
            "square_of": None if lv.square_of is None else _ints(lv.square_of),
            "decomposition": (None if lv.decomposition is None
                              else decomposition_to_json(lv.decomposition, sectors=False)),
        })
    return {
        "window": {"digest": hier.window.digest(), "width": hier.window.width,
                   "height": hier.window.height},
        "schedule": {"mode": hier.schedule.mode, "sides": list(hier.schedule.sides)},
        "rule": hier.rule, "margin_factor": int(hier.margin_factor), "stopped": hier.stopped,
        "levels": levels,
    }


def owner_from_children(prev_owner: np.ndarray, children: list[list[int]], n_prev: int) -> tuple:
    """Owner map and parent array of a level given as child-id lists."""
    parent = np.full(n_prev, -1, dtype=np.int32)
    for i, ch in enumerate(children):
        ch = np.asarray(ch, dtype=np.int64)
        if len(ch) and (ch.min() < 0 or ch.max() >= n_prev):
            raise ArtifactError(f"supertile {i} lists a child id outside 0..{n_prev - 1}")
        if (parent[ch] >= 0).any():
            raise ArtifactError(f"supertile {i} shares a child with supertile {parent[ch].max()}")
        parent[ch] = i
    lut = np.append(parent, -1)
    owner = lut[np.where(prev_owner >= 0, prev_owner, n_prev)]
    return owner.astype(np.int32), parent


def hierarchy_from_json(data: dict, window: TilingWindow) -> InflationHierarchy:
    w = data.get("window", {})
    if w.get("digest") not in (None, window.digest()):
        raise ArtifactError("hierarchy was built on a different window")
    levels = [unit_level(window)]
    for rec in data["levels"]:
        prev = levels[-1]
        tiles = sorted(rec["supertiles"], key=lambda t: t["id"])
        if [t["id"] for t in tiles] != list(range(len(tiles))):
            raise ArtifactError(f"level {rec['index']}: supertile ids must be 0..k-1")
        owner, parent = owner_from_children(prev.owner, [t["children"] for t in tiles], prev.count)
        n_t = len(tiles)
        keys, type_ids, seen = [], np.zeros(n_t, dtype=np.int64), {}
        for i, t in enumerate(tiles):
            k = t["type_key"]
            if k not in seen:
                seen[k] = len(keys)
                keys.append(k)
            type_ids[i] = seen[k]
        perims, edge_cells = boundary_counts(owner, n_t)
        dec = rec.get("decomposition")
        levels.append(Level(
            int(rec["index"]), int(rec["side"]), tuple(rec["trusted_box"]), owner, parent,
            np.array([t["anchor"] for t in tiles], dtype=np.int64).reshape(-1, 2),
            tile_areas(owner, n_t), perims, edge_cells,
            kernels.reference_cells(owner, n_t).astype(np.int64), type_ids, keys,
            None if dec is None else decomposition_from_json(dec),
            None if rec.get("square_of") is None else np.array(rec["square_of"], dtype=np.int64),
            int(rec.get("margin", 0))))
    sched = data["schedule"]
    return InflationHierarchy(window, LevelSchedule(tuple(sched["sides"]), sched["mode"]), levels,
                              data.get("rule", "greedy-lex"), int(data.get("margin_factor", 3)),
                              data.get("stopped"))


# ---------------------------------------------------------------- boundary

def _runs_of(mask: np.ndarray) -> list[list[int]]:
    """Row runs ``[y, x0, x1)`` of a boolean mask."""
    out = []
    for y in range(mask.shape[0]):
        row = np.concatenate([[0], mask[y].astype(np.int8), [0]])
        d = np.diff(row)
        for a, b in zip(np.nonzero(d == 1)[0], np.nonzero(d == -1)[0]):
            out.append([y, int(a), int(b)])
    return out


def _mask_of(runs, shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    for y, a, b in runs:
        m[y, a:b] = True
    return m


def graph_to_json(g: BoundaryGraph) -> dict:
    def idx(a):
        ys, xs = np.nonzero(a)
        return [[int(x), int(y)] for y, x in zip(ys, xs)]
    return {"level": g.level, "shape": list(g.shape), "edges": g.cell_pairs(),
            "hor": idx(g.hor), "ver": idx(g.ver),
            "hor_untrusted": idx(g.hor_untrusted), "ver_untrusted": idx(g.ver_untrusted),
            "trusted": _runs_of(g.trusted_cells)}


def graph_from_json(data: dict) -> BoundaryGraph:
    h, w = data["shape"]

    def arr(key, shape):
        a = np.zeros(shape, dtype=bool)
        for x, y in data[key]:
            a[y, x] = True
        return a
    return BoundaryGraph(data["level"], arr("hor", (h + 1, w)), arr("ver", (h, w + 1)),
                         arr("hor_untrusted", (h + 1, w)), arr("ver_untrusted", (h, w + 1)),
                         _mask_of(data["trusted"], (h, w)))


def boundary_to_json(rep: BoundaryReport) -> dict:
    cls, roots, st = rep.classification, rep.roots, rep.stratum
    return {
        "gamma": graph_to_json(rep.gamma),
        "features": [{"kind": f.kind, "witnesses": _plain(f.witnesses),
                      "bounds": _plain(f.bounds), "levels": _plain(f.levels),
                      "exits": f.exits} for f in rep.features],
        "class": None if cls is None else asdict(cls),
        "roots": None if roots is None else {
            "roots": [list(r) for r in roots.roots],
            "basic_patches": [None if p is None else list(p) for p in roots.basic_patches],
            "degree_sequence": list(roots.degree_sequence),
            "root_distance": roots.root_distance, "ends": roots.ends},
        "stratum": None if st is None else {"stratum": st.stratum, "index": st.index,
                                            "reason": st.reason, "label": str(st)},
        "notes": list(rep.notes),
    }


def boundary_from_json(data: dict) -> BoundaryReport:
    r = data.get("roots")
    st = data.get("stratum")
    return BoundaryReport(
        graph_from_json(data["gamma"]),
        [VirtualFeature(f["kind"], _tupled(f["witnesses"]), _tupled(f["bounds"]),
                        _tupled(f["levels"]), f["exits"]) for f in data["features"]],
        None if data.get("class") is None else BoundaryClass(**data["class"]),
        None if r is None else RootData(
            tuple(tuple(x) for x in r["roots"]),
            tuple(None if p is None else tuple(p) for p in r["basic_patches"]),
            tuple(r["degree_sequence"]), r["root_distance"], r["ends"]),
        None if st is None else StratumLabel(st["stratum"], st["index"], st["reason"]),
        tuple(data.get("notes", ())))


# ---------------------------------------------------------------- diagram

def diagram_to_json(d: BratteliDiagram) -> dict:
    out = d.to_json()
    for n in range(1, len(out["edges"])):
        m = d.multiplicity_matrix(n)
        for e in out["edges"][n]:
            e["multiplicity"] = int(m[e["source"], e["range"]])
    return out


def diagram_from_json(data: dict) -> BratteliDiagram:
    return BratteliDiagram.from_json(data)


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    substitution: str = "thue-morse"
    window: dict = field(default_factory=lambda: {"size": 128})
    schedule: dict = field(default_factory=lambda: {"mode": "custom", "sides": [4, 64]})
    rule: str = "greedy-lex"
    margin_factor: int = 3
    feature_size: int | None = None
    out: str = "out"
    seed: int = 0
    threads: int = 1
    anchors: list | None = None  # fixed square anchors per level (fixtures)

    RULES = {"greedy": "greedy-lex", "greedy-lex": "greedy-lex",
             "pattern": "pattern-anchored", "pattern-anchored": "pattern-anchored"}

    def __post_init__(self):
        self.rule = self.RULES.get(self.rule, self.rule)
        self.validate()

    @property
    def sides(self) -> tuple[int, ...]:
        s = self.schedule
        if s.get("mode") == "cubic" and "first" in s:
            return LevelSchedule.cubic(int(s["first"]), int(s["levels"])).sides
        return tuple(int(v) for v in s["sides"])

    def level_schedule(self) -> LevelSchedule:
        return LevelSchedule(self.sides, self.schedule.get("mode", "custom"))

    def validate(self) -> None:
        if self.rule not in ("greedy-lex", "pattern-anchored"):
            raise ArtifactError(f"unknown placement rule {self.rule!r}")
        try:
            self.level_schedule()
        except (ValueError, KeyError, TypeError) as exc:
            raise ArtifactError(f"invalid schedule: {exc}") from exc
        if self.margin_factor < 0:
            raise ArtifactError("margin factor must be non-negative")
        if self.anchors is None and self.margin_factor < 3:
            raise ArtifactError("margin must be at least 3N (margin_factor >= 3)")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ArtifactError("seed must be an unsigned 64-bit integer")

    def to_json(self) -> dict:
        return {"substitution": self.substitution, "window": self.window,
                "schedule": self.schedule, "rule": self.rule,
                "margin_factor": self.margin_factor, "feature_size": self.feature_size,
                "out": self.out, "seed": self.seed, "threads": self.threads,
                "anchors": self.anchors}

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ArtifactError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(read_json(path))
