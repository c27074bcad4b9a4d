"""The ten acceptance criteria; each prints one PASS/FAIL line (also in the summary)."""
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from supertiles import (BratteliDiagram, LevelSchedule, analyze, boundary_measure_bound,
                        build_diagram, closed_form_bound, extract_boundary_graph,
                        isoperimetric_report, persistent_boundary, place_maximal_squares,
                        run_hierarchy, tail_equivalent, tile_frequencies, vershik_successor)
from supertiles.bratteli import cap, enumerate_paths, fiber_maximal, max_path, min_path, path_count
from supertiles.cli import main
from supertiles.decomposition import RULES, decompose
from supertiles.io import (boundary_from_json, boundary_to_json, decomposition_from_json,
                          decomposition_to_json, diagram_from_json, diagram_to_json,
                          hierarchy_from_json, hierarchy_to_json, read_json, write_json)
from supertiles.tiling import TilingWindow, chair_arrows, sample_window, thue_morse
from oracles import (area_perimeter, boundary_cell_ratio, cycle_rank, direct_pprime,
                     interior_terminals, open_component_boxes, pprime_unions, region_count)

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SEEDS = range(100)
SIDES = (3, 4, 5)
WINDOW = 128


@pytest.fixture(scope="module")
def tm_windows():
    tm = thue_morse()
    return [sample_window(tm, WINDOW, np.random.default_rng(s)) for s in SEEDS]


@pytest.fixture(scope="module")
def big_run():
    """The (4, 64) run on a 4096 x 4096 Thue-Morse window, with its wall time."""
    t0 = time.perf_counter()
    win = sample_window(thue_morse(), 4096, np.random.default_rng(2024))
    hier = run_hierarchy(win, LevelSchedule((4, 64)))
    return hier, time.perf_counter() - t0


def test_criterion_1_packing_maximality(criterion, tm_windows):
    with criterion(1, "packing maximality") as out:
        t0 = time.perf_counter()
        runs = empty = overlap = 0
        for w in tm_windows:
            for n in SIDES:
                m = 3 * n
                for rule in RULES:
                    sq = place_maximal_squares(w, n, rule)
                    cov = np.zeros((w.height, w.width), dtype=np.int32)
                    for s in sq:
                        x, y = s.anchor
                        cov[y:y + n, x:x + n] += 1
                    overlap += int((cov > 1).sum())
                    trusted = cov[m:w.height - m, m:w.width - m] > 0
                    free = ~sliding_window_view(trusted, (n, n)).any(axis=(2, 3))
                    empty += int(free.sum())
                    runs += 1
        elapsed = time.perf_counter() - t0
        out["detail"] = (f"{runs} packings ({len(tm_windows)} windows x N in {SIDES} x {len(RULES)} rules), "
                         f"{empty} empty squares, {overlap} overlapping cells, {elapsed:.1f}s")
        assert overlap == 0, out["detail"]
        assert empty == 0, out["detail"]
        assert elapsed < 30, out["detail"]


def test_criterion_2_arm_and_cross_lemmas(criterion, tm_windows):
    with criterion(2, "arm and cross lemmas") as out:
        arms = bad_arms = comps = bad_comps = crosses = bad_mult = mismatch = 0
        first = None
        for seed, w in zip(SEEDS, tm_windows):
            for n in SIDES:
                for rule in RULES:
                    d = decompose(w, n, rule, strict=False)
                    x0, y0, x1, y1 = d.trusted_box

                    def inside(r):
                        return r[0] >= x0 and r[1] >= y0 and r[2] <= x1 and r[3] <= y1
                    for a in d.arms:
                        arms += 1
                        if a.length > n or a.width > n:
                            bad_arms += 1
                            first = first or f"seed {seed} N={n} {rule}: arm {a.rect}"
                    # bounded open components, found from scratch
                    boxes = [b for b in open_component_boxes(d) if inside(b)]
                    comps += len(boxes)
                    for bx0, by0, bx1, by1, full in boxes:
                        if not full or bx1 - bx0 > 2 * n or by1 - by0 > 2 * n:
                            bad_comps += 1
                            first = first or f"seed {seed} N={n} {rule}: component {(bx0, by0, bx1, by1)}"
                    ours = sorted(c.rect for c in d.crosses
                                  if inside(c.rect) and c.rect[0] < c.rect[2] and c.rect[1] < c.rect[3])
                    if ours != sorted(b[:4] for b in boxes):
                        mismatch += 1
                        first = first or f"seed {seed} N={n} {rule}: crosses differ from components"
                    irregular = [r for r in d.irregular if inside(r)]
                    bad_comps += len(irregular)
                    if irregular:
                        first = first or f"seed {seed} N={n} {rule}: irregular {irregular[0]}"
                    for c in d.crosses:
                        if not inside(c.rect):
                            continue
                        crosses += 1
                        cx0, cy0, cx1, cy1 = c.rect
                        if c.multiplicity not in (3, 4) or cx1 - cx0 > 2 * n or cy1 - cy0 > 2 * n:
                            bad_mult += 1
                            first = first or (f"seed {seed} N={n} {rule}: cross {c.rect} "
                                              f"multiplicity {c.multiplicity}")
        out["detail"] = (f"{arms} arms ({bad_arms} bad), {comps} open components ({bad_comps} bad), "
                         f"{crosses} trusted crosses ({bad_mult} bad), {mismatch} mismatches")
        assert bad_arms == bad_comps == bad_mult == mismatch == 0, f"{out['detail']}; first: {first}"


def test_criterion_3_level1_isoperimetric(criterion, fixture_hier, tm_two_level, chair_pattern, big_run):
    with criterion(3, "level-1 isoperimetric lemma") as out:
        hiers = {"fixture": fixture_hier, "tm480": tm_two_level, "chair200": chair_pattern,
                 "tm4096": big_run[0]}
        total = bad = 0
        for name, hier in hiers.items():
            lv = hier.levels[1]
            n = lv.side
            if name == "tm4096":
                areas, lengths = lv.pprime_stats
                # spot-check the fast polygons against the piecewise union
                idx = np.linspace(0, lv.count - 1, 200).astype(int)
                for i, poly in zip(idx, pprime_unions(lv.decomposition, lv.square_of[idx])):
                    assert poly.area == areas[i] and poly.length == lengths[i], (name, i)
            else:
                polys = [direct_pprime(lv.decomposition, int(sq)) for sq in lv.square_of]
                areas = np.array([p.area for p in polys])
                lengths = np.array([p.length for p in polys])
            _, per = area_perimeter(lv.owner, lv.count)
            assert np.array_equal(per, lv.perimeters), name
            total += lv.count
            bad += int(((areas < n * n) | (areas > 9 * n * n) | (lengths > 16 * n)
                        | (per > 64 * n)).sum())
        out["detail"] = f"{total} level-1 supertiles on {len(hiers)} hierarchies, {bad} violations"
        assert bad == 0, out["detail"]


def test_criterion_4_higher_level_inequalities(criterion, big_run):
    with criterion(4, "higher-level inequalities") as out:
        hier, elapsed = big_run
        assert hier.depth == 2, f"depth {hier.depth}: {hier.stopped}"
        l1, l2 = hier.levels[1], hier.levels[2]
        a1, p1 = area_perimeter(l1.owner, l1.count)
        a2, p2 = area_perimeter(l2.owner, l2.count)
        assert np.array_equal(a2, l2.areas) and np.array_equal(p2, l2.perimeters)
        A1, L1 = int(a1.max()), int(p1.max())
        polys = pprime_unions(l2.decomposition, l2.square_of)
        bad = 0
        for i, pp in enumerate(polys):
            # P' has half-integer vertices, so doubling makes everything an integer
            area4, length2 = round(4 * pp.area), round(2 * pp.length)
            assert 4 * pp.area == area4 and 2 * pp.length == length2
            if 4 * int(a2[i]) < area4 - 2 * length2 * A1 or 2 * int(p2[i]) > length2 * L1:
                bad += 1
        out["detail"] = (f"{len(polys)} level-2 supertiles, A1={A1}, L1={L1}, {bad} violations, "
                         f"run {elapsed:.0f}s")
        assert bad == 0 and elapsed < 300, out["detail"]


def test_criterion_5_closed_form_bound(criterion, tm_two_level):
    with criterion(5, "closed-form bound") as out:
        c = (12 * 150) ** 2
        assert closed_form_bound(150, 150 ** 3) == Fraction(c, 150 ** 3 - c) == 24
        for cur in (1, 4, 10, 150):
            edge = (12 * cur) ** 2
            for nxt in (cur + 1, edge // 2, edge):
                if nxt > cur:
                    assert closed_form_bound(cur, nxt) is None, (cur, nxt)
            assert closed_form_bound(cur, edge + 1) == edge
        rep = isoperimetric_report(tm_two_level)
        assert rep[1].vacuous and rep[1].bound is None
        out["detail"] = "(150, 150^3) gives 24; N' <= (12N)^2 flagged vacuous"


def test_criterion_6_boundary_structure(criterion, canonical, fixture_hier, tm_two_level,
                                        chair_pattern):
    with criterion(6, "boundary structure") as out:
        hiers = dict(canonical, fixture=fixture_hier)
        classified = 0
        for name, hier in hiers.items():
            g = persistent_boundary(hier)
            assert cycle_rank(g) == 0, f"{name}: cycle"
            assert interior_terminals(g) == [], f"{name}: terminal vertex"
            for n in range(2, hier.depth + 1):
                assert extract_boundary_graph(hier, n).issubset(extract_boundary_graph(hier, n - 1)), name
            cls = analyze(hier).classification
            if cls.complete:
                classified += 1
                assert cls.component_count == region_count(g) <= 4, name
                assert cls.component_count == max(cls.ends, 1), name
        for hier in (tm_two_level, chair_pattern):
            for n in range(2, hier.depth + 1):
                assert extract_boundary_graph(hier, n).issubset(extract_boundary_graph(hier, n - 1))
        out["detail"] = (f"{len(hiers)} fixture/synthetic hierarchies acyclic without terminals, "
                         f"{classified} complete classifications, nesting also on 2 sampled runs")


def test_criterion_7_stratification(criterion, canonical):
    with criterion(7, "stratification") as out:
        want = {"two-end-ribbon": "H2", "four-exit-cross": "H4(0)", "two-root-tree": "H4(6)"}
        got = {}
        for name, label in want.items():
            rep = analyze(canonical[name])
            got[name] = str(rep.stratum)
            assert got[name] == label, f"{name}: {got[name]} != {label}"
            seq = [d for d in rep.roots.degree_sequence if d is not None]
            assert all(d in (3, 4) for d in seq), f"{name}: degrees {seq}"
            deg = {}
            for u, v in rep.gamma.edges():
                deg[u] = deg.get(u, 0) + 1
                deg[v] = deg.get(v, 0) + 1
            assert all(deg.get(tuple(r), 0) in (3, 4) for r in rep.roots.roots), name
        out["detail"] = ", ".join(f"{k} -> {v}" for k, v in got.items())


def _diagrams(fixture_hier, tm_two_level, chair_pattern, canonical):
    out = {f"odometer(2) depth {k}": BratteliDiagram.odometer(k) for k in range(1, 14)}
    out |= {f"odometer(3) depth {k}": BratteliDiagram.odometer(k, k=3) for k in range(1, 9)}
    out["fixture"] = build_diagram(fixture_hier)
    out["tm480"] = build_diagram(tm_two_level)
    out["chair200"] = build_diagram(chair_pattern)
    for name, hier in canonical.items():
        out[name] = build_diagram(hier)
    return out


def _relation_by_definition(paths: np.ndarray) -> np.ndarray:
    """R[i, j]: paths i and j agree from some index on."""
    k = len(paths)
    rel = np.zeros((k, k), dtype=bool)
    for i in range(k):
        eq = paths == paths[i]
        rel[i] = np.flip(np.cumprod(np.flip(eq, axis=1), axis=1), axis=1).any(axis=1)
    return rel


def test_criterion_8_bratteli_vershik(criterion, fixture_hier, tm_two_level, chair_pattern, canonical):
    with criterion(8, "Bratteli and Vershik") as out:
        d3 = BratteliDiagram.odometer(3)
        assert vershik_successor(d3, (1, 1, 0)) == (0, 0, 1)
        assert vershik_successor(d3, (1, 1, 1)) == (0, 0, 0)
        spaces = pairs = called = 0
        for name, d in _diagrams(fixture_hier, tm_two_level, chair_pattern, canonical).items():
            for n in range(1, d.depth + 1):
                if path_count(d, n) > 10 ** 4:
                    break
                paths = enumerate_paths(d, n)
                P = np.array(paths, dtype=np.int64).reshape(len(paths), n)
                rel = _relation_by_definition(P)
                pairs += rel.size
                # reflexive, symmetric, and transitive: rows agree inside each class
                assert rel.diagonal().all() and (rel == rel.T).all(), (name, n)
                rows, inv = np.unique(rel, axis=0, return_inverse=True)
                inv = inv.ravel()
                for c, row in enumerate(rows):
                    assert np.array_equal(row, inv == c), (name, n)
                # the library predicate, on every pair for small spaces and a grid otherwise
                step = 1 if len(paths) <= 1500 else len(paths) // 400
                idx = range(0, len(paths), step)
                for i in idx:
                    for j in idx:
                        assert tail_equivalent(paths[i], paths[j]) == rel[i, j], (name, n, i, j)
                        called += 1
                succ = [vershik_successor(d, p, cap=True) for p in paths]
                assert sorted(succ) == sorted(paths), f"{name} length {n}: not a bijection"
                single_top = len(d.vertices[n]) == 1
                for p, s in zip(paths, succ):
                    if fiber_maximal(d, p):
                        if single_top:
                            assert p == max_path(d, n) and s == min_path(d, n)
                        continue
                    assert tail_equivalent(cap(d, p), cap(d, s)), (name, n, p)
                spaces += 1
        out["detail"] = (f"{spaces} path spaces, {pairs} pairs by definition, {called} library "
                         f"calls; successor bijective and tail-preserving off maximal paths")


def test_criterion_9_thinness_arithmetic(criterion, big_run, tm_two_level):
    with criterion(9, "thinness arithmetic") as out:
        hier = big_run[0]
        vals = {}
        for name, h in (("tm4096", hier), ("tm480", tm_two_level)):
            for n in (1, 2):
                lv = h.levels[n]
                touch, area = boundary_cell_ratio(lv.owner, lv.count)
                recount = max(Fraction(int(t), int(a)) for t, a in zip(touch, area))
                got = boundary_measure_bound(h, n)
                assert got == recount, (name, n, got, recount)
                vals[name, n] = got
        assert vals["tm4096", 2] < vals["tm4096", 1]
        f = tile_frequencies(thue_morse())
        assert abs(f["a"] - 0.5) <= 1e-12 and abs(f["b"] - 0.5) <= 1e-12
        for sub in (thue_morse(), chair_arrows()):
            assert abs(tile_frequencies(sub).total - 1) <= 1e-9
        out["detail"] = (f"bounds match recounts; (4,64) level 1 {float(vals['tm4096', 1]):.4f} > "
                         f"level 2 {float(vals['tm4096', 2]):.4f}; Thue-Morse frequencies (1/2, 1/2)")


def _run_twice(tmp: Path, cfg: Path) -> list[dict[str, bytes]]:
    out = tmp / "run"
    snaps = []
    for _ in range(2):
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["render", str(out)]) == 0
        snaps.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        for p in out.iterdir():
            p.unlink()
    return snaps


def test_criterion_10_determinism_and_round_trip(criterion, tmp_path, capsys, tm_two_level,
                                                 chair_pattern, canonical):
    with criterion(10, "determinism and round-trip") as out:
        files = 0
        for cfg in ("fixture.json", "chair-pattern.json"):
            a, b = _run_twice(tmp_path / cfg, CONFIGS / cfg)
            assert a.keys() == b.keys() and "figure.svg" in a
            for name in a:
                assert a[name] == b[name], f"{cfg}: {name} differs"
            files += len(a)
        for hier in (tm_two_level, chair_pattern, *canonical.values()):
            data = hierarchy_to_json(hier)
            assert hierarchy_to_json(hierarchy_from_json(data, hier.window)) == data
            dd = diagram_to_json(build_diagram(hier))
            assert diagram_to_json(diagram_from_json(dd)) == dd
            dec = hier.levels[1].decomposition
            if dec is not None:
                dj = decomposition_to_json(dec)
                assert decomposition_to_json(decomposition_from_json(dj)) == dj
            assert TilingWindow.from_json(hier.window.to_json()) == hier.window
        for hier in canonical.values():
            bj = boundary_to_json(analyze(hier))
            assert boundary_to_json(boundary_from_json(bj)) == bj

        # the two deliberate mutations must be caught by verify
        base = tmp_path / "base"
        assert main(["run", "--config", str(CONFIGS / "fixture.json"), "--out", str(base)]) == 0
        caught = 0
        for tag in ("partition", "arm-bounds"):
            bad = tmp_path / tag
            bad.mkdir()
            for f in base.glob("*.json"):
                (bad / f.name).write_bytes(f.read_bytes())
            h = read_json(bad / "hierarchy.json")
            if tag == "partition":
                tiles = h["levels"][0]["supertiles"]
                tiles[1]["children"].append(tiles[0]["children"].pop(0))
                tiles[1]["children"].sort()
            else:
                h["levels"][0]["decomposition"]["arms"][0]["rect"] = [3, 0, 7, 3]
            write_json(bad / "hierarchy.json", h)
            capsys.readouterr()
            assert main(["verify", str(bad)]) == 1, tag
            lines = capsys.readouterr().out.splitlines()
            assert any(line.startswith("FAIL") and tag in line for line in lines), tag
            caught += 1
        out["detail"] = (f"{files} artifacts byte-identical across reruns, round-trips exact, "
                         f"{caught}/2 mutations caught")
