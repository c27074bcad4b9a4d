"""Deterministic SVG figures of decompositions, supertiles and boundaries.

One cell is ``unit`` pixels (even, so doubled half-integer points land on
whole pixels).  The y axis is flipped so row 0 is drawn at the bottom.
"""
from __future__ import annotations

import numpy as np

LAYERS = ("supertiles", "squares", "arms", "crosses", "decorations", "boundary")

_PALETTE = ("#e8d9b5", "#c9dbe8", "#d9e8c9", "#e8c9d9", "#d5cde8", "#e8e0c9", "#c9e8e0", "#e0c9c9")


class RenderError(ValueError):
    pass


def parse_layers(spec: str | None) -> tuple[str, ...]:
    if not spec:
        return LAYERS
    out = tuple(s.strip() for s in spec.split(",") if s.strip())
    bad = [s for s in out if s not in LAYERS]
    if bad:
        raise RenderError(f"unknown layers {bad}; choose from {', '.join(LAYERS)}")
    return out


class _Canvas:
    def __init__(self, width: int, height: int, unit: int):
        if unit < 2 or unit % 2:
            raise RenderError("unit must be an even number of pixels")
        self.w, self.h, self.u = width, height, unit
        self.parts: list[str] = []

    def X(self, x2: int) -> int:  # doubled coordinate -> pixels
        return x2 * self.u // 2

    def Y(self, y2: int) -> int:
        return (2 * self.h - y2) * self.u // 2

    def rect(self, x0, y0, x1, y1, cls):
        """Cell-coordinate box."""
        self.parts.append(f'<rect class="{cls}" x="{x0 * self.u}" y="{(self.h - y1) * self.u}" '
                          f'width="{(x1 - x0) * self.u}" height="{(y1 - y0) * self.u}"/>')

    def path(self, d: str, cls: str):
        self.parts.append(f'<path class="{cls}" d="{d}"/>')

    def group(self, name: str, body: list[str]):
        self.parts.append(f'<g id="{name}">')
        self.parts.extend(body)
        self.parts.append("</g>")

    def svg(self) -> str:
        W, H = self.w * self.u, self.h * self.u
        style = (".sq{fill:#f2f2f2;stroke:#333;stroke-width:1}"
                 ".arm{fill:url(#hatch);stroke:#777;stroke-width:0.5}"
                 ".cr{fill:#fff3c4;stroke:#b08000;stroke-width:1}"
                 ".dec{fill:none;stroke:#b03000;stroke-width:1.5}"
                 ".ex{fill:#b03000}"
                 ".st{fill:none;stroke:#555;stroke-width:1}"
                 ".gam{fill:none;stroke:#c00;stroke-width:3;stroke-linecap:square}")
        for i, c in enumerate(_PALETTE):
            style += f".t{i}{{fill:{c};stroke:none}}"
        head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
                f'viewBox="0 0 {W} {H}">',
                f"<style>{style}</style>",
                '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
                'patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" '
                'stroke="#888" stroke-width="1.5"/></pattern></defs>',
                f'<rect width="{W}" height="{H}" fill="#ffffff"/>']
        return "\n".join(head + self.parts + ["</svg>"]) + "\n"


def _edges_path(c: _Canvas, hor: np.ndarray, ver: np.ndarray) -> str:
    """One path of unit segments; ``hor[y, x]`` is the edge (x,y)-(x+1,y)."""
    segs = []
    for y, x in np.argwhere(hor):
        segs.append(f"M{c.X(2 * x)} {c.Y(2 * y)}H{c.X(2 * x + 2)}")
    for y, x in np.argwhere(ver):
        segs.append(f"M{c.X(2 * x)} {c.Y(2 * y)}V{c.Y(2 * y + 2)}")
    return "".join(segs)


def render_svg(window: dict, hierarchy: dict | None = None, boundary: dict | None = None,
               decomposition: dict | None = None, layers=LAYERS, level: int = 1,
               unit: int = 8) -> str:
    """SVG text for the chosen layers.

    ``decomposition`` defaults to the one stored with ``level`` in the hierarchy.
    """
    w, h = int(window["width"]), int(window["height"])
    c = _Canvas(w, h, unit)
    rec = None
    if hierarchy is not None:
        recs = [r for r in hierarchy["levels"] if r["index"] == level]
        rec = recs[0] if recs else None
        if decomposition is None and rec is not None:
            decomposition = rec.get("decomposition")
    layers = tuple(layers)

    if "supertiles" in layers and rec is not None:
        from .verify import _owners, _edge_masks
        from .tiling import TilingWindow
        owners, _ = _owners(TilingWindow.from_json(window), hierarchy)
        own = owners[level]
        keys = {}
        tids = []
        for t in sorted(rec["supertiles"], key=lambda t: t["id"]):
            tids.append(keys.setdefault(t["type_key"], len(keys)))
        body = []
        tid = np.array(tids + [-1], dtype=np.int64)
        types = tid[np.where(own >= 0, own, len(tids))]
        for y in range(h):
            row = types[y]
            x = 0
            while x < w:
                x1 = x
                while x1 < w and row[x1] == row[x]:
                    x1 += 1
                if row[x] >= 0:
                    body.append(f'<rect class="t{row[x] % len(_PALETTE)}" x="{x * unit}" '
                                f'y="{(h - y - 1) * unit}" width="{(x1 - x) * unit}" height="{unit}"/>')
                x = x1
        hor, ver = _edge_masks(own)
        body.append(f'<path class="st" d="{_edges_path(c, hor, ver)}"/>')
        c.group("supertiles", body)

    if decomposition is not None:
        n = decomposition["N"]
        if "squares" in layers:
            sub = _Canvas(w, h, unit)
            for x, y in decomposition["squares"]:
                sub.rect(x, y, x + n, y + n, "sq")
            c.group("squares", sub.parts)
        if "arms" in layers:
            sub = _Canvas(w, h, unit)
            for a in decomposition["arms"]:
                x0, y0, x1, y1 = a["rect"]
                if x1 > x0 and y1 > y0:
                    sub.rect(x0, y0, x1, y1, "arm")
            c.group("arms", sub.parts)
        if "crosses" in layers:
            sub = _Canvas(w, h, unit)
            for cr in decomposition["crosses"]:
                x0, y0, x1, y1 = cr["rect"]
                if x1 > x0 and y1 > y0:
                    sub.rect(x0, y0, x1, y1, "cr")
            c.group("crosses", sub.parts)
        if "decorations" in layers:
            body = []
            for cr in decomposition["crosses"]:
                if not cr["kind"].startswith("regular"):
                    continue
                x0, y0, x1, y1 = cr["rect"]
                cx, cy = x0 + x1, y0 + y1
                d = "".join(f"M{c.X(cx)} {c.Y(cy)}L{c.X(px)} {c.Y(py)}"
                            for px, py in sorted({tuple(e["point"]) for e in cr["exits"]}))
                body.append(f'<path class="dec" d="{d}"/>')
                for px, py in sorted({tuple(e["point"]) for e in cr["exits"]}):
                    body.append(f'<circle class="ex" cx="{c.X(px)}" cy="{c.Y(py)}" r="{max(1, unit // 4)}"/>')
            c.group("decorations", body)

    if "boundary" in layers and boundary is not None:
        g = boundary["gamma"]
        hor = np.zeros((h + 1, w), dtype=bool)
        ver = np.zeros((h, w + 1), dtype=bool)
        for x, y in g["hor"]:
            hor[y, x] = True
        for x, y in g["ver"]:
            ver[y, x] = True
        d = _edges_path(c, hor, ver)
        c.group("boundary", [f'<path class="gam" d="{d}"/>'] if d else [])
    return c.svg()
