# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_fallback``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def greedy_fill(cnp.uint8_t[:, ::1] occ, int n, int x0, int y0, int x1, int y1):
    cdef Py_ssize_t x, y, i, j, blocked_at
    cdef list placed = []
    cdef bint free
    if x1 - x0 < n or y1 - y0 < n:
        return np.zeros((0, 2), dtype=np.int32)
    for y in range(y0, y1 - n + 1):
        x = x0
        while x <= x1 - n:
            if occ[y, x]:
                x += 1
                continue
            free = True
            blocked_at = -1
            # Scan right-to-left so a blocking column lets us jump past it.
            for i in range(x + n - 1, x - 1, -1):
                for j in range(y, y + n):
                    if occ[j, i]:
                        free = False
                        blocked_at = i
                        break
                if not free:
                    break
            if free:
                for j in range(y, y + n):
                    for i in range(x, x + n):
                        occ[j, i] = 1
                placed.append((x, y))
                x += n
            else:
                x = blocked_at + 1
    return np.array(placed, dtype=np.int32).reshape(-1, 2)


cdef void _scan_dir(const cnp.int32_t[:, ::1] sqmap, const cnp.int32_t[:, ::1] anchors,
                    int n, int x0, int y0, int x1, int y1, int direction,
                    cnp.int32_t[:, ::1] dist, cnp.int32_t[:, :, ::1] nbrs):
    cdef Py_ssize_t s, t, step, k = anchors.shape[0]
    cdef int ax, ay, best, d, cx, cy, sid, lo, hi
    for s in range(k):
        ax = anchors[s, 0]
        ay = anchors[s, 1]
        best = -1
        lo = -1
        hi = -1
        for t in range(n):
            d = 0
            while True:
                if direction == 0:
                    cx = ax + n + d
                    cy = ay + t
                elif direction == 2:
                    cx = ax - 1 - d
                    cy = ay + t
                elif direction == 1:
                    cx = ax + t
                    cy = ay + n + d
                else:
                    cx = ax + t
                    cy = ay - 1 - d
                if cx < x0 or cx >= x1 or cy < y0 or cy >= y1:
                    d = -1
                    break
                if best >= 0 and d > best:
                    d = -1
                    break
                sid = sqmap[cy, cx]
                if sid >= 0:
                    break
                d += 1
            if d < 0:
                continue
            sid = sqmap[cy, cx]
            if best < 0 or d < best:
                best = d
                lo = sid
                hi = -1
            elif d == best and sid != lo and sid != hi:
                # at most two disjoint squares can face one edge at equal distance
                if hi < 0:
                    hi = sid
                elif sid > hi:
                    hi = sid
        dist[s, direction] = best
        if best >= 0:
            if hi >= 0 and hi < lo:
                lo, hi = hi, lo
            nbrs[s, direction, 0] = lo
            nbrs[s, direction, 1] = hi


def nearest_squares(sqmap, anchors, int n, int x0, int y0, int x1, int y1):
    cdef Py_ssize_t k = anchors.shape[0]
    dist = np.full((k, 4), -1, dtype=np.int32)
    nbrs = np.full((k, 4, 2), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] sm = np.ascontiguousarray(sqmap, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] an = np.ascontiguousarray(anchors, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] dv = dist
    cdef cnp.int32_t[:, :, ::1] nv = nbrs
    cdef int direction
    for direction in range(4):
        _scan_dir(sm, an, n, x0, y0, x1, y1, direction, dv, nv)
    return dist, nbrs


def reference_cells(owner, Py_ssize_t n_tiles):
    cdef cnp.int32_t[:, ::1] ow = np.ascontiguousarray(owner, dtype=np.int32)
    out_arr = np.full((n_tiles, 2), -1, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t x, y, h = ow.shape[0], w = ow.shape[1]
    cdef int t
    for y in range(h):
        for x in range(w):
            t = ow[y, x]
            if t < 0:
                continue
            if out[t, 0] < 0 or x + y > out[t, 0] + out[t, 1] or \
                    (x + y == out[t, 0] + out[t, 1] and x > out[t, 0]):
                out[t, 0] = x
                out[t, 1] = y
    return out_arr
