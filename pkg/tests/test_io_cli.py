import json
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from supertiles import RunConfig, analyze, build_diagram
from supertiles.cli import main, verify_dir
from supertiles.decomposition import decompose
from supertiles.io import (ArtifactError, boundary_from_json, boundary_to_json,
                          decomposition_from_json, decomposition_to_json, diagram_from_json,
                          diagram_to_json, graph_from_json, graph_to_json, hierarchy_from_json,
                          hierarchy_to_json, read_json, write_json)
from supertiles.render import RenderError, render_svg
from supertiles.tiling import TilingWindow

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixture")
    assert run_cli("run", "--config", CONFIGS / "fixture.json", "--out", out) == 0
    return out


def clone(src: Path, dst: Path) -> Path:
    dst.mkdir()
    for f in src.glob("*.json"):
        (dst / f.name).write_bytes(f.read_bytes())
    return dst


# ---------------------------------------------------------------- round trips

def test_hierarchy_roundtrip(fixture_hier, tm_two_level, chair_pattern, canonical):
    for hier in [fixture_hier, tm_two_level, chair_pattern, *canonical.values()]:
        data = hierarchy_to_json(hier)
        back = hierarchy_from_json(json.loads(json.dumps(data)), hier.window)
        assert hierarchy_to_json(back) == data
        for a, b in zip(hier.levels, back.levels):
            assert np.array_equal(a.owner, b.owner)


def test_decomposition_roundtrip(tm_window):
    dec = decompose(tm_window, 4, "pattern-anchored", strict=False)
    data = decomposition_to_json(dec)
    again = decomposition_to_json(decomposition_from_json(json.loads(json.dumps(data))))
    assert again == data


def test_boundary_and_diagram_roundtrip(canonical, tm_two_level):
    for hier in canonical.values():
        rep = analyze(hier)
        data = boundary_to_json(rep)
        assert boundary_to_json(boundary_from_json(json.loads(json.dumps(data)))) == data
        g = rep.gamma
        assert graph_to_json(graph_from_json(graph_to_json(g))) == graph_to_json(g)
    d = build_diagram(tm_two_level)
    data = diagram_to_json(d)
    assert diagram_to_json(diagram_from_json(json.loads(json.dumps(data)))) == data


def test_window_and_config_roundtrip(tm_window, tmp_path):
    write_json(tmp_path / "w.json", tm_window.to_json())
    assert TilingWindow.from_json(read_json(tmp_path / "w.json")) == tm_window
    cfg = RunConfig.load(CONFIGS / "thue-morse.json")
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_hierarchy_rejects_wrong_window(fixture_hier, tm_window):
    with pytest.raises(ArtifactError):
        hierarchy_from_json(hierarchy_to_json(fixture_hier), tm_window)


def test_read_json_errors(tmp_path):
    with pytest.raises(ArtifactError):
        read_json(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ArtifactError):
        read_json(tmp_path / "bad.json")


# ---------------------------------------------------------------- config

def test_config_validation():
    with pytest.raises(ArtifactError, match="invalid schedule"):
        RunConfig(schedule={"mode": "custom", "sides": [5, 3]})
    with pytest.raises(ArtifactError, match="3N"):
        RunConfig(margin_factor=2)
    with pytest.raises(ArtifactError, match="unknown config keys"):
        RunConfig.from_json({"colour": "red"})
    assert RunConfig(rule="pattern").rule == "pattern-anchored"


def test_decreasing_schedule_exit_2(tmp_path, capsys):
    assert run_cli("run", "--config", CONFIGS / "thue-morse.json", "--schedule", "5,3",
                   "--out", tmp_path) == 2
    assert "invalid schedule" in capsys.readouterr().err


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run_cli("frobnicate")
    assert exc.value.code == 2


# ---------------------------------------------------------------- pipeline

def test_fixture_run_artifacts(fixture_run):
    for name in ("config", "window", "hierarchy", "boundary", "diagram", "report"):
        assert (fixture_run / f"{name}.json").exists()
    rep = read_json(fixture_run / "report.json")
    assert rep["passed"] is True
    assert verify_dir(fixture_run).passed


def test_run_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}"
        assert run_cli("run", "--config", CONFIGS / "chair-pattern.json", "--out", out) == 0
        assert run_cli("render", out) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert "figure.svg" in names
    for name in names:
        if name == "config.json":
            continue  # records the output directory
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_window_exhausted_run(tmp_path, capsys):
    assert run_cli("run", "--config", CONFIGS / "exhausted.json", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "window exhausted at level 2 (N=64)" in out
    assert "409x409" in out
    h = read_json(tmp_path / "hierarchy.json")
    assert len(h["levels"]) == 1


def test_subcommands(tmp_path):
    cfg = CONFIGS / "fixture.json"
    assert run_cli("generate", "--config", cfg, "--out", tmp_path / "g") == 0
    assert (tmp_path / "g" / "window.json").exists()
    assert run_cli("decompose", "--config", cfg, "--out", tmp_path / "d") == 0
    dec = read_json(tmp_path / "d" / "decomposition.json")
    assert dec["crosses"][0]["kind"] == "regular4"
    assert run_cli("render", tmp_path / "d", "--layers", "squares,arms,crosses") == 0
    assert run_cli("inflate", "--config", cfg, "--out", tmp_path / "i") == 0
    assert run_cli("boundary", "--config", cfg, "--out", tmp_path / "b") == 0
    assert run_cli("bratteli", "--config", cfg, "--out", tmp_path / "br") == 0
    assert len(read_json(tmp_path / "br" / "diagram.json")["levels"]) == 3


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "supertiles", "verify", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "artifact" in res.stdout


# ---------------------------------------------------------------- mutations

def test_mutation_cell_reassigned(fixture_run, tmp_path, capsys):
    bad = clone(fixture_run, tmp_path / "m1")
    h = read_json(bad / "hierarchy.json")
    tiles = h["levels"][0]["supertiles"]
    moved = tiles[0]["children"].pop(0)
    tiles[1]["children"].append(moved)
    tiles[1]["children"].sort()
    write_json(bad / "hierarchy.json", h)
    assert run_cli("verify", bad) == 1
    out = capsys.readouterr().out
    assert re.search(r"^FAIL +inflation +partition .*cell \(0, 0\)", out, re.M)
    assert "cell (0, 0)" in out


def test_mutation_arm_widened(fixture_run, tmp_path, capsys):
    bad = clone(fixture_run, tmp_path / "m2")
    h = read_json(bad / "hierarchy.json")
    arm = h["levels"][0]["decomposition"]["arms"][0]
    assert arm["rect"] == [3, 0, 5, 3]
    arm["rect"] = [3, 0, 7, 3]
    write_json(bad / "hierarchy.json", h)
    assert run_cli("verify", bad) == 1
    out = capsys.readouterr().out
    assert re.search(r"^FAIL +decomposition +arm-bounds .*width 4", out, re.M)
    assert "arm lemma" in out


# ---------------------------------------------------------------- render

def test_render_fixture_geometry(fixture_run):
    svg = render_svg(read_json(fixture_run / "window.json"), read_json(fixture_run / "hierarchy.json"),
                     layers=("squares", "arms", "crosses"), unit=8)
    for x, y in ((0, 0), (5, 0), (0, 5), (5, 5)):
        assert f'class="sq" x="{x * 8}" y="{(8 - y - 3) * 8}" width="24" height="24"' in svg
    assert 'class="cr" x="24" y="24" width="16" height="16"' in svg
    assert svg.count('class="arm"') == 4


def test_render_empty_boundary(canonical, tmp_path):
    hier = canonical["empty-boundary"]
    rep = analyze(hier)
    svg = render_svg(hier.window.to_json(), hierarchy_to_json(hier), boundary_to_json(rep),
                     layers=("boundary",))
    assert 'class="gam"' not in svg


def test_render_errors(fixture_run, tmp_path):
    with pytest.raises(RenderError):
        render_svg(read_json(fixture_run / "window.json"), unit=3)
    assert run_cli("render", fixture_run, "--layers", "nope") == 2
    assert run_cli("render", tmp_path) == 2
