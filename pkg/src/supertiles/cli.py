"""Command-line driver.

Exit codes: 0 all checks pass, 1 an invariant failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .boundary import BoundaryError, analyze
from .bratteli import build_diagram
from .decomposition import decompose
from .inflation import InflationError, run_hierarchy
from .io import (ArtifactError, RunConfig, boundary_to_json, decomposition_to_json,
                 diagram_to_json, hierarchy_to_json, read_json, write_json)
from .render import RenderError, parse_layers, render_svg
from .tiling import (TilingError, TilingWindow, expansion_window, load_substitution,
                     sample_window)
from .verify import VerificationReport, verify_artifacts

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- pipeline

def make_window(cfg: RunConfig) -> TilingWindow:
    spec = dict(cfg.window)
    if "blank" in spec:
        size = int(spec["blank"])
        return TilingWindow((0, 0), np.zeros((size, size), dtype=np.int32), (spec.get("label", "a"),))
    sub = load_substitution(cfg.substitution)
    label = spec.get("label", sub.prototiles.labels[0])
    if "level" in spec:
        side = sub.expansion ** int(spec["level"])
        w = int(spec.get("width", spec.get("size", side)))
        h = int(spec.get("height", spec.get("size", side)))
        return expansion_window(sub, label, int(spec["level"]), int(spec.get("x", 0)),
                                int(spec.get("y", 0)), w, h)
    if "size" in spec:
        return sample_window(sub, int(spec["size"]), np.random.default_rng(cfg.seed), label)
    raise ArtifactError("window needs one of 'blank', 'level' or 'size'")


def substitution_of(cfg: RunConfig):
    if "blank" in cfg.window or not cfg.substitution:
        return None
    return load_substitution(cfg.substitution)


def build_hierarchy(cfg: RunConfig, window: TilingWindow):
    return run_hierarchy(window, cfg.level_schedule(), rule=cfg.rule,
                         margin_factor=cfg.margin_factor, anchors=cfg.anchors)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def run_pipeline(cfg: RunConfig, out: Path, stages=("window", "hierarchy", "boundary", "diagram",
                                                   "report")) -> VerificationReport | None:
    """Build and dump artifacts; returns the verification report when requested."""
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.to_json())
    t0 = time.perf_counter()
    window = make_window(cfg)
    wdata = window.to_json()
    write_json(out / "window.json", wdata)
    _say(f"window {window.width}x{window.height} ({time.perf_counter() - t0:.2f}s)")
    if stages == ("window",):
        return None

    t0 = time.perf_counter()
    hier = build_hierarchy(cfg, window)
    hdata = hierarchy_to_json(hier)
    write_json(out / "hierarchy.json", hdata)
    _say(f"hierarchy depth {hier.depth}, kernels={kernels.BACKEND} ({time.perf_counter() - t0:.2f}s)")
    if hier.stopped:
        _say(f"stopped: {hier.stopped}")

    bdata = ddata = None
    if "boundary" in stages and hier.depth >= 1:
        t0 = time.perf_counter()
        try:
            rep = analyze(hier, size=cfg.feature_size, strict=False)
            bdata = boundary_to_json(rep)
            write_json(out / "boundary.json", bdata)
            _say(f"boundary: {rep.classification.case_tag}, stratum {rep.stratum} "
                 f"({time.perf_counter() - t0:.2f}s)")
        except BoundaryError as exc:
            _say(f"boundary: {exc}")
    if "diagram" in stages:
        ddata = diagram_to_json(build_diagram(hier))
        write_json(out / "diagram.json", ddata)
    if "report" not in stages:
        return None
    t0 = time.perf_counter()
    report = verify_artifacts(window, hdata, bdata, ddata, substitution_of(cfg), cfg.threads)
    if hier.stopped and hier.stopped not in report.notes:
        report.notes.append(hier.stopped)
    write_json(out / "report.json", report.to_json())
    _say(f"verification ({time.perf_counter() - t0:.2f}s)")
    return report


def verify_dir(out: Path, threads: int = 1) -> VerificationReport:
    window = TilingWindow.from_json(read_json(out / "window.json"))
    hdata = read_json(out / "hierarchy.json")
    bdata = read_json(out / "boundary.json") if (out / "boundary.json").exists() else None
    ddata = read_json(out / "diagram.json") if (out / "diagram.json").exists() else None
    sub = None
    if (out / "config.json").exists():
        sub = substitution_of(RunConfig.from_json(read_json(out / "config.json")))
    return verify_artifacts(window, hdata, bdata, ddata, sub, threads)


def _print_report(report: VerificationReport) -> int:
    for line in report.lines():
        print(line)
    for note in report.notes:
        print(f"note: {note}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------- commands

def _config(args) -> RunConfig:
    data = read_json(args.config).copy() if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.schedule:
        try:
            data["schedule"] = {"mode": "custom",
                                "sides": [int(s) for s in args.schedule.split(",") if s.strip()]}
        except ValueError as exc:
            raise UsageError(f"bad --schedule {args.schedule!r}") from exc
    if args.rule:
        data["rule"] = args.rule
    if args.threads is not None:
        data["threads"] = args.threads
    if args.out:
        data["out"] = args.out
    return RunConfig.from_json(data)


def cmd_generate(args) -> int:
    cfg = _config(args)
    run_pipeline(cfg, Path(cfg.out), stages=("window",))
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = _config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    window = make_window(cfg)
    n = args.side or cfg.sides[0]
    anchors = cfg.anchors[0] if cfg.anchors else None
    margin = cfg.margin_factor * n
    dec = decompose(window, n, cfg.rule, margin=margin, anchors=anchors, strict=False)
    write_json(out / "window.json", window.to_json())
    write_json(out / "decomposition.json", decomposition_to_json(dec))
    print(f"N={n}: {len(dec.anchors)} squares, {len(dec.arm_rects)} arms, "
          f"{len(dec.cross_data)} crosses, {len(dec.irregular)} non-rectangular components")
    return EXIT_OK


def cmd_inflate(args) -> int:
    cfg = _config(args)
    run_pipeline(cfg, Path(cfg.out), stages=("window", "hierarchy"))
    return EXIT_OK


def cmd_boundary(args) -> int:
    cfg = _config(args)
    run_pipeline(cfg, Path(cfg.out), stages=("window", "hierarchy", "boundary"))
    b = read_json(Path(cfg.out) / "boundary.json") if (Path(cfg.out) / "boundary.json").exists() else None
    if b is not None:
        print(f"class {b['class']['case_tag']}, components {b['class']['component_count']}, "
              f"stratum {b['stratum']['label'] if b['stratum'] else 'n/a'}")
    return EXIT_OK


def cmd_bratteli(args) -> int:
    cfg = _config(args)
    run_pipeline(cfg, Path(cfg.out), stages=("window", "hierarchy", "diagram"))
    d = read_json(Path(cfg.out) / "diagram.json")
    print("vertices per level: " + " ".join(str(len(v)) for v in d["levels"]))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    return _print_report(run_pipeline(cfg, Path(cfg.out)))


def cmd_verify(args) -> int:
    out = Path(args.artifacts or args.out or "out")
    report = verify_dir(out, args.threads or 1)
    write_json(out / "report.json", report.to_json())
    return _print_report(report)


def cmd_render(args) -> int:
    out = Path(args.artifacts or args.out or "out")
    layers = parse_layers(args.layers)
    window = read_json(out / "window.json")
    hier = read_json(out / "hierarchy.json") if (out / "hierarchy.json").exists() else None
    bnd = read_json(out / "boundary.json") if (out / "boundary.json").exists() else None
    dec = read_json(out / "decomposition.json") if (hier is None and (out / "decomposition.json").exists()) else None
    if hier is None and dec is None:
        raise ArtifactError(f"no hierarchy.json or decomposition.json in {out}")
    svg = render_svg(window, hier, bnd, dec, layers, args.level, args.unit)
    target = Path(args.svg) if args.svg else out / "figure.svg"
    target.write_text(svg)
    print(target)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "decompose": cmd_decompose, "inflate": cmd_inflate,
            "boundary": cmd_boundary, "bratteli": cmd_bratteli, "verify": cmd_verify,
            "render": cmd_render, "run": cmd_run}

HELP = {
    "generate": "write a tiling window",
    "decompose": "square packing, arms and crosses for one side",
    "inflate": "build the supertile hierarchy",
    "boundary": "persistent boundary, classification and stratum",
    "bratteli": "Bratteli diagram of supertile types",
    "verify": "re-check every invariant on dumped artifacts",
    "render": "SVG figure from dumped artifacts",
    "run": "all stages plus verification",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="supertiles", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (JSON)")
    common.add_argument("--out", metavar="DIR", help="artifact directory")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--schedule", metavar="SIDES", help='comma-separated sides, e.g. "4,64"')
    common.add_argument("--rule", choices=("greedy", "pattern", "greedy-lex", "pattern-anchored"))
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=HELP[name])
        sp.set_defaults(func=fn)
        if name == "decompose":
            sp.add_argument("--side", type=int, help="square side (default: first scheduled side)")
        if name in ("verify", "render"):
            sp.add_argument("artifacts", nargs="?", help="artifact directory (default --out)")
        if name == "render":
            sp.add_argument("--layers", metavar="CSV", help="squares,arms,crosses,decorations,boundary,supertiles")
            sp.add_argument("--level", type=int, default=1)
            sp.add_argument("--unit", type=int, default=8, help="pixels per cell (even)")
            sp.add_argument("--svg", metavar="PATH", help="output file (default DIR/figure.svg)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ArtifactError, RenderError, TilingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InflationError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
