import itertools

import numpy as np
import pytest

from supertiles.tiling import (Occurrence, PrototileSet, SquareSubstitution, TilingError,
                               TilingWindow, expand_substitution, expansion_window,
                               load_substitution, occurrences, repetitivity_radius)

from conftest import rows_window

RULES = {"a": [["a", "b"], ["b", "a"]], "b": [["b", "a"], ["a", "b"]]}


def by_hand(label, level):
    """Repeated block replacement on nested lists, rows top first."""
    grid = [[label]]
    for _ in range(level):
        out = []
        for row in grid:
            block_rows = [RULES[c] for c in row]
            for i in range(2):
                out.append([s for b in block_rows for s in b[i]])
        grid = out
    return grid


def test_level1(tm):
    w = expand_substitution(tm, "a", 1)
    assert w.rows()[::-1] == [["a", "b"], ["b", "a"]]


def test_level0(tm):
    w = expand_substitution(tm, "a", 0)
    assert (w.width, w.height) == (1, 1)
    assert w.rows() == [["a"]]


@pytest.mark.parametrize("level", [2, 3, 4])
def test_expansion_matches_hand_application(tm, level):
    w = expand_substitution(tm, "a", level)
    assert w.rows()[::-1] == by_hand("a", level)
    assert w.width == w.height == 2 ** level


def test_unknown_label(tm):
    with pytest.raises(TilingError):
        expand_substitution(tm, "z", 1)


def test_cell_budget(tm, monkeypatch):
    monkeypatch.setenv("TIL_CELL_BUDGET", "100")
    with pytest.raises(TilingError):
        expand_substitution(tm, "a", 4)


def test_rule_validation():
    with pytest.raises(TilingError):
        SquareSubstitution.from_rules({"a": [["a", "c"], ["a", "a"]]})
    with pytest.raises(TilingError):
        SquareSubstitution.from_rules({"a": [["a", "a"], ["a"]]})
    with pytest.raises(TilingError):
        PrototileSet(("a", "a"), ("m", "m"))


def test_primitivity(tm):
    assert tm.is_primitive()
    m = tm.incidence_matrix()
    assert m.tolist() == [[2, 2], [2, 2]]
    split = SquareSubstitution.from_rules({"a": [["a", "a"], ["a", "a"]],
                                           "b": [["b", "b"], ["b", "b"]]})
    assert not split.is_primitive()


def test_occurrences_single_cell():
    w = TilingWindow.from_rows([["a", "b"], ["b", "a"]])
    p = TilingWindow.from_rows([["a"]])
    assert {o.position for o in occurrences(w, p)} == {(0, 0), (1, 1)}


def test_occurrences_self_match():
    w = TilingWindow.from_rows([["a", "b"], ["b", "a"]])
    assert {o.position for o in occurrences(w, w)} == {(0, 0)}


def test_occurrences_brute_force(tm):
    w = expand_substitution(tm, "a", 3)
    p = TilingWindow.from_rows([["a", "b"], ["b", "a"]])
    rows = w.rows()
    expect = set()
    for y, x in itertools.product(range(w.height - 1), range(w.width - 1)):
        if all(rows[y + j][x + i] == p.rows()[j][i] for i in range(2) for j in range(2)):
            expect.add((x, y))
    got = occurrences(w, p, "ab")
    assert {o.position for o in got} == expect
    assert all(isinstance(o, Occurrence) and o.pattern_id == "ab" for o in got)


def test_occurrences_respect_origin(tm):
    w = expand_substitution(tm, "a", 2).translated(10, -3)
    p = TilingWindow.from_rows([["a"]])
    assert all(w.label_at(*o.position) == "a" for o in occurrences(w, p))


def radius_by_scan(w, k):
    rows = w.rows()
    patches = {tuple(tuple(rows[y + j][x:x + k]) for j in range(k))
               for y in range(w.height - k + 1) for x in range(w.width - k + 1)}
    for r in range(k, min(w.width, w.height) + 1):
        if (w.width - r + 1) * (w.height - r + 1) < 2:
            return None
        ok = True
        for y, x in itertools.product(range(w.height - r + 1), range(w.width - r + 1)):
            seen = {tuple(tuple(rows[y + b + j][x + a:x + a + k]) for j in range(k))
                    for b in range(r - k + 1) for a in range(r - k + 1)}
            if seen != patches:
                ok = False
                break
        if ok:
            return r
    return None


def test_repetitivity_thue_morse(tm):
    w = expand_substitution(tm, "a", 2)
    assert repetitivity_radius(w, 1) == radius_by_scan(w, 1)


def test_repetitivity_constant():
    w = TilingWindow.from_rows([["a"] * 5] * 5)
    assert repetitivity_radius(w, 1) == 1


def test_repetitivity_not_observed():
    w = TilingWindow.from_rows([["a", "b"], ["b", "a"]])
    assert repetitivity_radius(w, 2) is None


def test_repetitivity_matches_scan_on_subwindows(tm):
    big = expand_substitution(tm, "b", 4)
    for k in (1, 2):
        w = big.subwindow(3, 2, 9, 8)
        assert repetitivity_radius(w, k) == radius_by_scan(w, k)


def test_expansion_window_is_a_crop(tm):
    full = expand_substitution(tm, "a", 5)
    crop = expansion_window(tm, "a", 5, 7, 3, 11, 9)
    assert np.array_equal(crop.cells, full.subwindow(7, 3, 11, 9).cells)


def test_window_json_roundtrip(tm):
    w = expand_substitution(tm, "a", 3).translated(2, 5)
    assert TilingWindow.from_json(w.to_json()) == w


def test_window_cell_count_checked():
    with pytest.raises(TilingError):
        TilingWindow.from_json({"origin": [0, 0], "width": 3, "height": 1, "cells": [["a", "a"]]})


def test_bundled_substitutions():
    chair = load_substitution("chair-arrows")
    assert chair.expansion == 2 and chair.is_primitive()
    assert load_substitution("thue-morse").prototiles.labels == ("a", "b")


def test_rows_helper():
    w = rows_window("b a\na b")
    assert w.label_at(0, 0) == "a" and w.label_at(0, 1) == "b"
