from fractions import Fraction

import numpy as np
import pytest
from shapely.geometry import box

from supertiles import (InflationError, LevelSchedule, closed_form_bound, inflate_level,
                        isoperimetric_report, min_window_size, run_hierarchy)
from supertiles.decomposition import decompose
from supertiles.inflation import (build_supertile_pprime, pprime_cell_map, snap_pprime_to_cells,
                                  unit_level)
from supertiles.synthetic import blank_window, four_square_anchors
from supertiles.tiling import expand_substitution
from oracles import direct_pprime, slow_area_perimeter


def test_fixture_pprime():
    dec = decompose(blank_window(8), 3, anchors=four_square_anchors(), margin=0)
    for sq in range(4):
        got = build_supertile_pprime(dec, sq)
        assert got.equals(direct_pprime(dec, sq))
    assert build_supertile_pprime(dec, 0).equals(box(0, 0, 4, 4))


def test_isolated_square_censored():
    win = blank_window(30)
    dec = decompose(win, 3, anchors=[(13, 13)], margin=0)
    assert dec.arms == []
    hier = run_hierarchy(win, LevelSchedule((3,)), margin_factor=0, anchors=[[(13, 13)]])
    assert hier.levels[1].count == 0


def test_fixture_lemma_bounds(fixture_hier):
    lv = fixture_hier.levels[1]
    n = lv.side
    for poly in lv.pprime_polygons:
        assert n * n <= poly.area <= 9 * n * n
        assert poly.length <= 16 * n
    assert (lv.perimeters <= 64 * n).all()


def test_snap_identity(fixture_hier):
    prev = fixture_hier.levels[0]
    tiles = snap_pprime_to_cells(box(0, 0, 4, 4), prev)
    w = fixture_hier.window.width
    assert sorted(tiles.tolist()) == sorted(y * w + x for y in range(4) for x in range(4))


def test_half_integer_axis_goes_right():
    # gap of one column between [0,3) and [4,7): axis x = 3.5 splits column 3
    dec = decompose(blank_window(7), 3, anchors=[(0, 0), (4, 0)], margin=0)
    (arm,) = dec.arms
    assert arm.axis[0][0] == 7
    pm = pprime_cell_map(dec)
    assert (pm[0:3, 3] == 1).all()
    poly_right = build_supertile_pprime(dec, 1)
    tiles = snap_pprime_to_cells(poly_right, unit_level(blank_window(7)))
    assert {int(t) % 7 for t in tiles} == {3, 4, 5, 6}


def test_snap_empty_is_error(fixture_hier):
    with pytest.raises(InflationError):
        snap_pprime_to_cells(box(0.1, 0.1, 0.4, 0.4), fixture_hier.levels[0])


def test_inflate_fixture(fixture_hier):
    lv = fixture_hier.levels[1]
    assert lv.count == 4
    assert lv.areas.tolist() == [16, 16, 16, 16]
    quad = {(0, 0): 0, (4, 0): 1, (0, 4): 2, (4, 4): 3}
    for y in range(8):
        for x in range(8):
            assert lv.owner[y, x] == quad[(x // 4 * 4, y // 4 * 4)]


def test_window_exhausted_direct():
    base = run_hierarchy(blank_window(20), LevelSchedule(()))
    with pytest.raises(InflationError, match="window exhausted"):
        inflate_level(base, 4)


def test_empty_schedule(tm):
    win = expand_substitution(tm, "a", 3)
    hier = run_hierarchy(win, LevelSchedule(()))
    assert hier.depth == 0
    assert hier.levels[0].count == 64


def margins_oracle(sides, size):
    """First level whose trusted region is empty, by plain arithmetic."""
    m = 0
    for i, n in enumerate(sides, start=1):
        if size - 2 * m < n or size - 2 * (m + 3 * n) <= 0:
            return i
        m += 3 * n
    return None


def test_cubic_schedule_stops(tm):
    sched = LevelSchedule.cubic(2, 3)
    assert sched.sides == (2, 8, 512)
    win = expand_substitution(tm, "a", 10)
    hier = run_hierarchy(win, sched)
    stop = margins_oracle(sched.sides, 1024)
    assert hier.depth == stop - 1 == 2
    assert f"level {stop}" in hier.stopped
    assert f"{min_window_size(sched.sides)}x" in hier.stopped


def test_min_window_size_oracle():
    for sides in [(4,), (4, 64), (3, 27), (2, 8, 512)]:
        need = min_window_size(sides)
        assert margins_oracle(sides, need) is None
        assert margins_oracle(sides, need - 1) is not None


def test_schedule_validation():
    with pytest.raises(ValueError):
        LevelSchedule((5, 3))
    with pytest.raises(ValueError):
        LevelSchedule((2, 5), mode="cubic")


def test_two_level_inequalities(tm_two_level):
    hier = tm_two_level
    assert hier.depth == 2
    l1, l2 = hier.levels[1], hier.levels[2]
    a1, p1 = slow_area_perimeter(l1.owner, l1.count)
    assert np.array_equal(a1, l1.areas) and np.array_equal(p1, l1.perimeters)
    a2, p2 = slow_area_perimeter(l2.owner, l2.count)
    dec = l2.decomposition
    for i, sq in enumerate(l2.square_of):
        pp = direct_pprime(dec, int(sq))
        assert a2[i] >= pp.area - pp.length * a1.max()
        assert p2[i] <= pp.length * p1.max()


def test_nesting_and_boundary_containment(tm_two_level):
    hier = tm_two_level
    for n in range(1, hier.depth + 1):
        lo, hi = hier.levels[n - 1].owner, hier.levels[n].owner
        both = (lo >= 0) & (hi >= 0)
        # every lower tile inside an upper tile maps to one parent
        pairs = np.unique(np.stack([lo[both], hi[both]], 1), axis=0)
        assert len(np.unique(pairs[:, 0])) == len(pairs)
        assert not ((hi >= 0) & (lo < 0)).any()
        # vertical boundary of the upper level lies on the lower one
        cut_hi = (hi[:, 1:] != hi[:, :-1]) & (hi[:, 1:] >= 0) & (hi[:, :-1] >= 0)
        cut_lo = lo[:, 1:] != lo[:, :-1]
        assert not (cut_hi & ~cut_lo).any()
        # some child lies strictly inside each parent
        for t in range(hier.levels[n].count):
            kids = hier.levels[n].children[t]
            assert len(kids) >= 1


def test_partition_counts(tm_two_level):
    for lv in tm_two_level.levels[1:]:
        x0, y0, x1, y1 = lv.trusted_box
        assert (lv.owner[y0:y1, x0:x1] >= 0).all()
        assert int(lv.areas.sum()) == int((lv.owner >= 0).sum())


def test_minimality_proxy(tm_two_level, chair_pattern):
    for hier in (tm_two_level, chair_pattern):
        own = hier.levels[1].owner
        cells = hier.window.cells
        for t in range(hier.levels[1].count):
            assert set(np.unique(cells[own == t]).tolist()) == set(range(len(hier.window.labels)))


def test_determinism(tm_window):
    a = run_hierarchy(tm_window, LevelSchedule((4,)), rule="pattern-anchored")
    b = run_hierarchy(tm_window, LevelSchedule((4,)), rule="pattern-anchored")
    assert np.array_equal(a.levels[1].owner, b.levels[1].owner)
    assert a.levels[1].type_keys == b.levels[1].type_keys


def test_fixture_report(fixture_hier):
    rep = isoperimetric_report(fixture_hier)
    assert rep[0].A == 16 and rep[0].L == 16 and rep[0].max_ratio == 1.0


def test_closed_form():
    assert closed_form_bound(150, 150 ** 3) == Fraction(3_240_000, 135_000) == 24
    assert closed_form_bound(4, 64) is None
    assert closed_form_bound(10, 14400) is None
    assert closed_form_bound(10, 14401) == Fraction(14400, 1)


def test_report_flags_vacuous(tm_two_level):
    rep = isoperimetric_report(tm_two_level)
    assert rep[1].vacuous and rep[1].bound is None
    assert rep[1].A == tm_two_level.levels[2].areas.max()
