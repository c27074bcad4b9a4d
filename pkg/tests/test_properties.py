import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from supertiles import (BratteliDiagram, LevelSchedule, run_hierarchy, tail_equivalent,
                        tile_frequencies, vershik_successor)
from supertiles.bratteli import cap, enumerate_paths, fiber_maximal, path_count
from supertiles.decomposition import decompose, empty_squares
from supertiles.tiling import (SquareSubstitution, TilingWindow, chair_arrows, expand_substitution,
                               occurrences, thue_morse)

SUBS = {"thue-morse": thue_morse(), "chair-arrows": chair_arrows()}
FAST = settings(max_examples=25, deadline=None)


def window_from(seed, size, name):
    sub = SUBS[name]
    full = expand_substitution(sub, sub.prototiles.labels[seed % len(sub.prototiles.labels)], 7)
    rng = np.random.default_rng(seed)
    x, y = (int(v) for v in rng.integers(0, full.width - size, 2))
    return TilingWindow((0, 0), full.cells[y:y + size, x:x + size], full.labels)


windows = st.builds(window_from, st.integers(0, 10 ** 6), st.integers(24, 72),
                    st.sampled_from(sorted(SUBS)))


@st.composite
def substitutions(draw):
    k = draw(st.integers(2, 3))
    labels = ["a", "b", "c"][:draw(st.integers(1, 3))]
    rules = {lab: [[draw(st.sampled_from(labels)) for _ in range(k)] for _ in range(k)]
             for lab in labels}
    return SquareSubstitution.from_rules(rules)


# ---------------------------------------------------------------- tiling

@FAST
@given(sub=substitutions(), n=st.integers(1, 4), m=st.integers(0, 3), data=st.data())
def test_expansion_hierarchy_consistency(sub, n, m, data):
    assume(m <= n and sub.expansion ** n <= 81)
    top = expand_substitution(sub, sub.prototiles.labels[0], n)
    coarse = expand_substitution(sub, sub.prototiles.labels[0], n - m)
    s = sub.expansion ** m
    i = data.draw(st.integers(0, coarse.width - 1))
    j = data.draw(st.integers(0, coarse.height - 1))
    block = top.subwindow(i * s, j * s, s, s)
    again = expand_substitution(sub, coarse.label_at(i, j), m)
    assert block.rows() == again.rows()


@FAST
@given(w=windows, dx=st.integers(-50, 50), dy=st.integers(-50, 50), k=st.integers(1, 3))
def test_occurrences_translation_equivariant(w, dx, dy, k):
    patch = w.subwindow(3, 4, k, k)
    a = {o.position for o in occurrences(w, patch)}
    b = {o.position for o in occurrences(w.translated(dx, dy), patch)}
    assert b == {(x + dx, y + dy) for x, y in a}


@FAST
@given(sub=substitutions())
def test_primitive_shows_every_label(sub):
    p = sub.primitivity_power()
    assume(p is not None and sub.expansion ** p <= 243)
    for lab in sub.prototiles.labels:
        w = expand_substitution(sub, lab, p)
        assert set(np.unique(w.cells).tolist()) == set(range(len(sub.prototiles.labels)))


# ---------------------------------------------------------------- decomposition

@FAST
@given(w=windows, n=st.integers(2, 5), rule=st.sampled_from(["greedy-lex", "pattern-anchored"]))
def test_decomposition_invariants(w, n, rule):
    d = decompose(w, n, rule, strict=False)
    cov = np.zeros(d.shape, dtype=np.int32)
    for x, y in d.anchors:
        cov[y:y + n, x:x + n] += 1
    assert cov.max() <= 1
    assert len(empty_squares(cov > 0, n, d.region)) == 0
    for a in d.arms:
        assert a.length <= n and a.width <= n
        # axis parallel to and midway between the facing edges
        (px, py), (qx, qy) = a.axis
        x0, y0, x1, y1 = a.rect
        if a.orientation == "vertical":
            assert px == qx == x0 + x1
        else:
            assert py == qy == y0 + y1
    for i, c in enumerate(d.crosses):
        x0, y0, x1, y1 = c.rect
        assert x1 - x0 <= 2 * n and y1 - y0 <= 2 * n
        assert c.multiplicity >= 3
        if c.kind.startswith("regular"):
            sides = [e.side for e in c.exits]
            assert len(set(sides)) == len(sides)
            cells = [cell for s in d.sectors if s.owner_cross == i for cell in s.cells]
            assert sorted(cells) == sorted((x, y) for x in range(x0, x1) for y in range(y0, y1))


# ---------------------------------------------------------------- inflation

@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 3), rule=st.sampled_from(["greedy-lex", "pattern-anchored"]))
def test_inflation_partition_and_bounds(seed, n, rule):
    w = window_from(seed, 48, "thue-morse" if seed % 2 else "chair-arrows")
    hier = run_hierarchy(w, LevelSchedule((n,)), rule=rule)
    lv = hier.levels[1]
    x0, y0, x1, y1 = lv.trusted_box
    assert (lv.owner[y0:y1, x0:x1] >= 0).all()
    assert lv.areas.sum() == (lv.owner >= 0).sum()
    for i, poly in enumerate(lv.pprime_polygons):
        assert n * n <= poly.area + 1e-9 <= 9 * n * n + 2e-9
        assert poly.length <= 16 * n + 1e-9
    assert (lv.perimeters <= 64 * n).all()
    again = run_hierarchy(w, LevelSchedule((n,)), rule=rule)
    assert np.array_equal(again.levels[1].owner, lv.owner)


# ---------------------------------------------------------------- bratteli

@st.composite
def diagrams(draw):
    depth = draw(st.integers(1, 4))
    sizes = [1] + [draw(st.integers(1, 3)) for _ in range(depth)]
    mats = []
    for a, b in zip(sizes, sizes[1:]):
        m = np.array([[draw(st.integers(0, 2)) for _ in range(b)] for _ in range(a)])
        for v in range(b):
            if m[:, v].sum() == 0:
                m[draw(st.integers(0, a - 1)), v] = 1
        mats.append(m)
    verts = [[f"{lv}.{i}" for i in range(s)] for lv, s in enumerate(sizes)]
    return BratteliDiagram.from_multiplicities(verts, mats)


@FAST
@given(d=diagrams())
def test_vershik_bijection_and_tails(d):
    n = d.depth
    assume(path_count(d, n) <= 2000)
    paths = enumerate_paths(d, n)
    assert len(set(paths)) == len(paths) == path_count(d, n)
    succ = {p: vershik_successor(d, p, cap=True) for p in paths}
    assert sorted(succ.values()) == sorted(paths)
    for p, q in succ.items():
        if not fiber_maximal(d, p):
            assert tail_equivalent(cap(d, p), cap(d, q))


@FAST
@given(d=diagrams())
def test_tail_is_equivalence(d):
    n = d.depth
    assume(path_count(d, n) <= 60)
    paths = enumerate_paths(d, n)
    for p in paths:
        assert tail_equivalent(p, p)
        for q in paths:
            assert tail_equivalent(p, q) == tail_equivalent(q, p)
            if tail_equivalent(p, q):
                assert all(tail_equivalent(p, r) for r in paths if tail_equivalent(q, r))


@FAST
@given(sub=substitutions())
def test_frequencies_normalised(sub):
    assume(sub.is_primitive())
    f = tile_frequencies(sub)
    assert all(v > 0 for v in f.values)
    assert abs(f.total - 1) <= 1e-9
    m = sub.incidence_matrix().astype(float)
    v = np.array(f.values)
    assert np.allclose(v @ m, f.eigenvalue * v, atol=1e-9)
