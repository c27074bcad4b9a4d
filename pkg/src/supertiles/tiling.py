"""Marked-square prototiles, block substitutions and finite tiling windows.

Tiles are unit grid cells.  A window stores its labels as a dense integer
array ``cells[y, x]`` whose row 0 is the bottom row (``y = origin[1]``);
labels index into ``window.labels``.  Substitution rules, as written in JSON,
list their rows top row first; they are flipped on load.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

DEFAULT_CELL_BUDGET = 64_000_000


class TilingError(ValueError):
    """Invalid prototile set, substitution or window."""


class CellBudgetExceeded(TilingError):
    pass


def cell_budget() -> int:
    raw = os.environ.get("TIL_CELL_BUDGET")
    if raw is None:
        return DEFAULT_CELL_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise TilingError(f"TIL_CELL_BUDGET must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise TilingError("TIL_CELL_BUDGET must be positive")
    return value


@dataclass(frozen=True)
class PrototileSet:
    labels: tuple[str, ...]
    marks: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.labels:
            raise TilingError("prototile set is empty")
        if len(set(self.labels)) != len(self.labels):
            raise TilingError(f"duplicate prototile labels in {self.labels}")
        if not self.marks:
            object.__setattr__(self, "marks", tuple(self.labels))
        if len(self.marks) != len(self.labels):
            raise TilingError("every prototile needs exactly one mark")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise TilingError(f"unknown prototile {label!r}") from None

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class SquareSubstitution:
    """A ``k x k`` block substitution on a prototile set.

    ``blocks[i]`` is the image of prototile ``i`` as a ``(k, k)`` integer array
    indexed ``[y, x]`` with ``y = 0`` the bottom row.
    """

    prototiles: PrototileSet
    expansion: int
    blocks: np.ndarray
    name: str = ""

    def __post_init__(self):
        k = self.expansion
        if not isinstance(k, (int, np.integer)) or k < 2:
            raise TilingError(f"expansion must be an integer >= 2, got {k!r}")
        blocks = np.asarray(self.blocks, dtype=np.int32)
        n = len(self.prototiles)
        if blocks.shape != (n, k, k):
            raise TilingError(f"expected rule array of shape {(n, k, k)}, got {blocks.shape}")
        if blocks.min() < 0 or blocks.max() >= n:
            raise TilingError("rule references a label outside the prototile set")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_rules(cls, rules: dict[str, list[list[str]]], marks: dict[str, str] | None = None,
                   name: str = "") -> "SquareSubstitution":
        """Build from ``{label: rows}`` with rows listed top row first."""
        labels = tuple(rules)
        marks = marks or {}
        protos = PrototileSet(labels, tuple(marks.get(lab, lab) for lab in labels))
        k = len(next(iter(rules.values())))
        blocks = np.zeros((len(labels), k, k), dtype=np.int32)
        for i, lab in enumerate(labels):
            rows = rules[lab]
            if len(rows) != k or any(len(r) != k for r in rows):
                raise TilingError(f"rule for {lab!r} is not {k}x{k}")
            for r, row in enumerate(rows):
                for c, target in enumerate(row):
                    if target not in rules:
                        raise TilingError(f"rule for {lab!r} uses unknown label {target!r}")
                    blocks[i, k - 1 - r, c] = labels.index(target)
        return cls(protos, k, blocks, name=name)

    def rules(self) -> dict[str, list[list[str]]]:
        labs = self.prototiles.labels
        k = self.expansion
        return {
            lab: [[labs[self.blocks[i, k - 1 - r, c]] for c in range(k)] for r in range(k)]
            for i, lab in enumerate(labs)
        }

    def incidence_matrix(self) -> np.ndarray:
        """``M[i, j]`` = number of tiles ``j`` inside the image of tile ``i``."""
        n = len(self.prototiles)
        m = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            m[i] = np.bincount(self.blocks[i].ravel(), minlength=n)
        return m

    def primitivity_power(self, max_power: int | None = None) -> int | None:
        """Least ``p`` with ``M**p > 0`` entrywise, or None if not primitive."""
        n = len(self.prototiles)
        # Wielandt bound for primitive matrices.
        limit = max_power or (n - 1) ** 2 + 1
        pattern = (self.incidence_matrix() > 0).astype(np.int64)
        power = pattern.copy()
        for p in range(1, limit + 1):
            if power.all():
                return p
            power = ((power @ pattern) > 0).astype(np.int64)
        return None

    def is_primitive(self) -> bool:
        return self.primitivity_power() is not None

    def to_json(self) -> dict:
        return {
            "expansion": int(self.expansion),
            "prototiles": [{"name": lab, "mark": mark}
                           for lab, mark in zip(self.prototiles.labels, self.prototiles.marks)],
            "rules": self.rules(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SquareSubstitution":
        try:
            protos = data["prototiles"]
            rules = data["rules"]
            k = int(data["expansion"])
        except (KeyError, TypeError) as exc:
            raise TilingError(f"malformed substitution spec: missing {exc}") from exc
        names = [p["name"] for p in protos]
        marks = {p["name"]: p.get("mark", p["name"]) for p in protos}
        if set(names) != set(rules):
            raise TilingError("every prototile needs exactly one rule")
        sub = cls.from_rules({n: rules[n] for n in names}, marks, name=data.get("name", ""))
        if sub.expansion != k:
            raise TilingError(f"rules are {sub.expansion}x{sub.expansion} but expansion is {k}")
        return sub


@dataclass(frozen=True, eq=False)
class TilingWindow:
    origin: tuple[int, int]
    cells: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.int32)
        if cells.ndim != 2 or cells.size == 0:
            raise TilingError("window cells must be a non-empty 2-d array")
        if cells.min() < 0 or cells.max() >= len(self.labels):
            raise TilingError("window cell label out of range")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def label_at(self, x: int, y: int) -> str:
        return self.labels[self.cells[y - self.origin[1], x - self.origin[0]]]

    def rows(self) -> list[list[str]]:
        """Label rows, bottom row first."""
        labs = self.labels
        return [[labs[v] for v in row] for row in self.cells.tolist()]

    def subwindow(self, x: int, y: int, width: int, height: int) -> "TilingWindow":
        ox, oy = self.origin
        i, j = x - ox, y - oy
        if i < 0 or j < 0 or i + width > self.width or j + height > self.height:
            raise TilingError("subwindow exceeds window")
        return TilingWindow((x, y), self.cells[j:j + height, i:i + width], self.labels)

    def translated(self, dx: int, dy: int) -> "TilingWindow":
        return TilingWindow((self.origin[0] + dx, self.origin[1] + dy), self.cells, self.labels)

    def relabeled(self, labels: tuple[str, ...]) -> "TilingWindow":
        """Same picture with ``cells`` re-indexed into a (super)set of labels."""
        lookup = np.array([labels.index(lab) for lab in self.labels], dtype=np.int32)
        return TilingWindow(self.origin, lookup[self.cells], labels)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps([self.origin, list(self.labels), self.cells.shape]).encode())
        h.update(self.cells.tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, TilingWindow):
            return NotImplemented
        return (self.origin == other.origin and self.labels == other.labels
                and self.cells.shape == other.cells.shape
                and bool(np.array_equal(self.cells, other.cells)))

    def __hash__(self):
        return hash(self.digest())

    def to_json(self) -> dict:
        return {"origin": list(self.origin), "width": self.width, "height": self.height,
                "labels": list(self.labels), "cells": self.rows()}

    @classmethod
    def from_json(cls, data: dict) -> "TilingWindow":
        rows = data["cells"]
        w, h = int(data["width"]), int(data["height"])
        if len(rows) != h or any(len(r) != w for r in rows):
            raise TilingError("window cell count does not match width*height")
        labels = tuple(data.get("labels") or sorted({lab for r in rows for lab in r}))
        index = {lab: i for i, lab in enumerate(labels)}
        cells = np.array([[index[lab] for lab in r] for r in rows], dtype=np.int32)
        return cls(tuple(data["origin"]), cells, labels)

    @classmethod
    def from_rows(cls, rows: list[list[str]], origin=(0, 0), labels=None) -> "TilingWindow":
        """Rows listed bottom row first."""
        return cls.from_json({"origin": list(origin), "width": len(rows[0]), "height": len(rows),
                              "cells": rows, "labels": labels})


@dataclass(frozen=True)
class Occurrence:
    position: tuple[int, int]
    pattern_id: str = field(default="", compare=False)


def expand_substitution(sub: SquareSubstitution, label: str, level: int,
                        budget: int | None = None) -> TilingWindow:
    """Apply ``sub`` ``level`` times to ``label``; the result is ``k**level`` square."""
    idx = sub.prototiles.index(label)
    if level < 0:
        raise TilingError("level must be nonnegative")
    budget = cell_budget() if budget is None else budget
    side = sub.expansion ** level
    if side * side > budget:
        raise CellBudgetExceeded(
            f"level {level} needs {side * side} cells, budget is {budget}")
    cells = np.array([[idx]], dtype=np.int32)
    k = sub.expansion
    for _ in range(level):
        h, w = cells.shape
        # (h, w, k, k) -> (h, k, w, k): rows of each block stay together.
        cells = sub.blocks[cells].transpose(0, 2, 1, 3).reshape(h * k, w * k)
    return TilingWindow((0, 0), cells, sub.prototiles.labels)


def _patch_in_window_labels(window: TilingWindow, patch: TilingWindow) -> np.ndarray | None:
    lookup = {lab: i for i, lab in enumerate(window.labels)}
    trans = np.array([lookup.get(lab, -1) for lab in patch.labels], dtype=np.int32)
    out = trans[patch.cells]
    if (out < 0).any():
        return None
    return out


def occurrences(window: TilingWindow, patch: TilingWindow, pattern_id: str | None = None
                ) -> set[Occurrence]:
    """All translates of ``patch`` inside ``window`` (absolute anchor coordinates)."""
    pid = pattern_id if pattern_id is not None else patch.digest()
    ph, pw = patch.cells.shape
    if ph > window.height or pw > window.width:
        return set()
    p = _patch_in_window_labels(window, patch)
    if p is None:
        return set()
    views = sliding_window_view(window.cells, (ph, pw))
    hits = np.all(views == p, axis=(2, 3))
    ys, xs = np.nonzero(hits)
    ox, oy = window.origin
    return {Occurrence((int(x) + ox, int(y) + oy), pid) for y, x in zip(ys, xs)}


def patch_type_map(window: TilingWindow, size: int) -> np.ndarray:
    """Integer id of the ``size x size`` patch anchored at each valid position."""
    views = sliding_window_view(window.cells, (size, size))
    flat = views.reshape(views.shape[0], views.shape[1], size * size)
    _, inverse = np.unique(flat.reshape(-1, size * size), axis=0, return_inverse=True)
    return inverse.reshape(views.shape[0], views.shape[1])


def repetitivity_radius(window: TilingWindow, patch_size: int) -> int | None:
    """Least ``R`` such that every ``R x R`` subwindow contains every observed patch.

    Patches are the ``patch_size`` squares occurring in the window.  Returns
    None ("not observed") when no ``R`` with at least two ``R x R`` subwindows
    works, since a single subwindow carries no recurrence evidence.
    """
    w, h = window.width, window.height
    if patch_size < 1 or patch_size > min(w, h):
        raise TilingError(f"patch size {patch_size} does not fit a {w}x{h} window")
    types = patch_type_map(window, patch_size)
    n_types = int(types.max()) + 1
    # Prefix sums of each type's anchor indicator.
    prefix = np.zeros((n_types, types.shape[0] + 1, types.shape[1] + 1), dtype=np.int64)
    for t in range(n_types):
        prefix[t, 1:, 1:] = np.cumsum(np.cumsum(types == t, axis=0), axis=1)
    for r in range(patch_size, min(w, h) + 1):
        if (w - r + 1) * (h - r + 1) < 2:
            break
        span = r - patch_size + 1
        ny, nx = types.shape[0] - span + 1, types.shape[1] - span + 1
        ok = True
        for t in range(n_types):
            p = prefix[t]
            counts = p[span:span + ny, span:span + nx] - p[:ny, span:span + nx] \
                - p[span:span + ny, :nx] + p[:ny, :nx]
            if (counts == 0).any():
                ok = False
                break
        if ok:
            return r
    return None


# Bundled generators.  Aperiodicity and repetitivity of these are taken as known.

def thue_morse() -> SquareSubstitution:
    return SquareSubstitution.from_rules(
        {"a": [["a", "b"], ["b", "a"]], "b": [["b", "a"], ["a", "b"]]}, name="thue-morse")


def chair_arrows() -> SquareSubstitution:
    """Chair tiling encoded by diagonal arrows on a 2x2 block substitution.

    An arrow ``d`` keeps ``d`` in the quadrants ``d`` and ``-d`` and puts the
    quadrant's own direction in the two remaining quadrants.
    """
    dirs = {"ne": (1, 1), "nw": (-1, 1), "sw": (-1, -1), "se": (1, -1)}
    name_of = {v: k for k, v in dirs.items()}
    rules = {}
    for lab, (dx, dy) in dirs.items():
        rows = []
        for qy in (1, -1):  # top row first
            row = []
            for qx in (-1, 1):
                q = (qx, qy)
                row.append(lab if q in ((dx, dy), (-dx, -dy)) else name_of[q])
            rows.append(row)
        rules[lab] = rows
    return SquareSubstitution.from_rules(rules, name="chair-arrows")


BUNDLED = {"thue-morse": thue_morse, "chair-arrows": chair_arrows}


def load_substitution(path_or_name: str | Path) -> SquareSubstitution:
    if str(path_or_name) in BUNDLED:
        return BUNDLED[str(path_or_name)]()
    with open(path_or_name) as fh:
        return SquareSubstitution.from_json(json.load(fh))


def expansion_window(sub: SquareSubstitution, label: str, level: int,
                     x: int, y: int, width: int, height: int) -> TilingWindow:
    """The ``width x height`` window at ``(x, y)`` of ``sigma^level(label)``.

    Cells are computed from the base-k digits of their coordinates, so only
    the window itself is materialised.
    """
    k = sub.expansion
    side = k ** level
    if x < 0 or y < 0 or x + width > side or y + height > side:
        raise TilingError(f"window exceeds the {side}x{side} expansion")
    budget = cell_budget()
    if width * height > budget:
        raise CellBudgetExceeded(f"window needs {width * height} cells, budget is {budget}")
    xs = np.arange(x, x + width, dtype=np.int64)
    ys = np.arange(y, y + height, dtype=np.int64)
    lab = np.full((height, width), sub.prototiles.index(label), dtype=np.int32)
    for lv in range(level - 1, -1, -1):
        dx = (xs // k ** lv) % k
        dy = (ys // k ** lv) % k
        lab = sub.blocks[lab, dy[:, None], dx[None, :]]
    return TilingWindow((x, y), lab.astype(np.int32), sub.prototiles.labels)


def sample_window(sub: SquareSubstitution, size: int, rng: np.random.Generator,
                  label: str | None = None) -> TilingWindow:
    """A ``size x size`` window at a random offset inside a large expansion.

    The returned window is re-anchored at the origin.
    """
    level = 0
    while sub.expansion ** level < 2 * size:
        level += 1
    side = sub.expansion ** level
    x = int(rng.integers(0, side - size + 1))
    y = int(rng.integers(0, side - size + 1))
    win = expansion_window(sub, label or sub.prototiles.labels[0], level, x, y, size, size)
    return TilingWindow((0, 0), win.cells, win.labels)
