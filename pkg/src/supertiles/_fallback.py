"""Pure numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module.  Arrays are
indexed ``[y, x]``; regions are half-open ``[x0, x1) x [y0, y1)``.
"""
import numpy as np

# Direction codes shared with the compiled kernels.
RIGHT, UP, LEFT, DOWN = 0, 1, 2, 3


def greedy_fill(occ, n, x0, y0, x1, y1):
    """Row-major first-fit placement of ``n x n`` squares on free cells.

    ``occ`` (uint8) is updated in place; returns placed anchors as ``(m, 2)``
    int32 ``(x, y)`` rows in placement order.
    """
    placed = []
    if x1 - x0 < n or y1 - y0 < n:
        return np.zeros((0, 2), dtype=np.int32)
    for y in range(y0, y1 - n + 1):
        band = occ[y:y + n, x0:x1]
        colfree = ~band.any(axis=0)
        if not colfree[0] and not colfree.any():
            continue
        x = 0
        width = x1 - x0
        # run[x] = length of the free-column run starting at x
        run = np.zeros(width + 1, dtype=np.int64)
        for i in range(width - 1, -1, -1):
            run[i] = run[i + 1] + 1 if colfree[i] else 0
        while x <= width - n:
            if run[x] >= n:
                occ[y:y + n, x0 + x:x0 + x + n] = 1
                placed.append((x0 + x, y))
                x += n
            elif run[x] == 0:
                x += 1
            else:
                x += int(run[x])
    return np.array(placed, dtype=np.int32).reshape(-1, 2)


def _next_index(mask, reverse):
    """For each cell, index along axis 1 of the nearest True at or after it.

    With ``reverse`` it is the nearest at or before.  Missing -> -1.
    """
    h, w = mask.shape
    idx = np.broadcast_to(np.arange(w, dtype=np.int64), (h, w))
    if not reverse:
        vals = np.where(mask, idx, w)
        out = np.minimum.accumulate(vals[:, ::-1], axis=1)[:, ::-1]
        out = np.where(out == w, -1, out)
    else:
        vals = np.where(mask, idx, -1)
        out = np.maximum.accumulate(vals, axis=1)
    return out


def _scan(sqmap, anchors, n, forward, x_lo, x_hi):
    """Nearest squares beyond the right (forward) or left edge of each square."""
    k = anchors.shape[0]
    dist = np.full(k, -1, dtype=np.int32)
    nb = np.full((k, 2), -1, dtype=np.int32)
    if k == 0:
        return dist, nb
    sub = sqmap[:, x_lo:x_hi]
    nxt = _next_index(sub >= 0, reverse=not forward)
    ax = anchors[:, 0].astype(np.int64) - x_lo
    ay = anchors[:, 1].astype(np.int64)
    rows = ay[:, None] + np.arange(n)[None, :]
    col = ax + n if forward else ax - 1
    valid = (col >= 0) & (col < sub.shape[1])
    colc = np.clip(col, 0, sub.shape[1] - 1)
    hits = nxt[rows, colc[:, None]]
    hits = np.where(valid[:, None], hits, -1)
    d = np.where(hits >= 0, (hits - colc[:, None]) if forward else (colc[:, None] - hits), -1)
    big = np.iinfo(np.int64).max
    dmin = np.where(d >= 0, d, big).min(axis=1)
    has = dmin != big
    ids = np.where(hits >= 0, sub[rows, np.clip(hits, 0, None)], -1)
    at_min = (d == dmin[:, None]) & has[:, None]
    id_lo = np.where(at_min, ids, np.iinfo(np.int32).max).min(axis=1)
    id_hi = np.where(at_min, ids, -1).max(axis=1)
    dist[has] = dmin[has]
    nb[has, 0] = id_lo[has]
    nb[has, 1] = np.where(id_hi[has] != id_lo[has], id_hi[has], -1)
    return dist, nb


def nearest_squares(sqmap, anchors, n, x0, y0, x1, y1):
    """Per square and direction: orthogonal distance to the nearest square.

    Returns ``dist`` of shape ``(k, 4)`` (-1 when nothing is found inside the
    region) and ``nbrs`` of shape ``(k, 4, 2)`` holding the one or two squares
    realising that distance (-1 padded).  ``sqmap[y, x]`` is the index of the
    square covering a cell or -1.
    """
    k = anchors.shape[0]
    dist = np.full((k, 4), -1, dtype=np.int32)
    nbrs = np.full((k, 4, 2), -1, dtype=np.int32)
    region = np.full_like(sqmap, -1)
    region[y0:y1, x0:x1] = sqmap[y0:y1, x0:x1]
    for direction, forward in ((RIGHT, True), (LEFT, False)):
        d, nb = _scan(region, anchors, n, forward, 0, region.shape[1])
        dist[:, direction], nbrs[:, direction] = d, nb
    swapped = np.ascontiguousarray(anchors[:, ::-1])
    tregion = np.ascontiguousarray(region.T)
    for direction, forward in ((UP, True), (DOWN, False)):
        d, nb = _scan(tregion, swapped, n, forward, 0, tregion.shape[1])
        dist[:, direction], nbrs[:, direction] = d, nb
    return dist, nbrs


def reference_cells(owner, n_tiles):
    """Upper-right cell of each tile: maximise ``x + y``, then ``x``.

    Returns ``(n_tiles, 2)`` int64 ``(x, y)``; tiles without cells get -1.
    """
    h, w = owner.shape
    ys, xs = np.nonzero(owner >= 0)
    ids = owner[ys, xs]
    key = (xs.astype(np.int64) + ys) * (w + 1) + xs
    best = np.full(n_tiles, -1, dtype=np.int64)
    np.maximum.at(best, ids, key)
    out = np.full((n_tiles, 2), -1, dtype=np.int64)
    ok = best >= 0
    x = best[ok] % (w + 1)
    s = best[ok] // (w + 1)
    out[ok, 0] = x
    out[ok, 1] = s - x
    return out
