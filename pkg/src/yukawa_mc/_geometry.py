"""Numba geometry primitives on packed domains.

A packed domain is ``(kind, params)``:

* ``BALL``: params = ``[c_0, ..., c_{n-1}, radius]``
* ``HALF``: params = ``[axis, offset]`` (0-based axis; region ``x[axis] > offset``)
* ``BOX``: params = ``[lo_0, ..., lo_{n-1}, hi_0, ..., hi_{n-1}]``
* ``FREE``: no boundary

Box faces are numbered ``2 * axis + side`` with ``side = 0`` for the lower face.
"""

import math

import numpy as np
from numba import njit

BALL = 0
HALF = 1
BOX = 2
FREE = 3


@njit(cache=True)
def signed_dist(kind, p, x):
    """Distance to the boundary, positive inside and negative outside."""
    n = x.size
    if kind == BALL:
        s = 0.0
        for i in range(n):
            d = x[i] - p[i]
            s += d * d
        return p[n] - math.sqrt(s)
    if kind == HALF:
        return x[int(p[0])] - p[1]
    if kind == BOX:
        best = math.inf
        for i in range(n):
            lo = x[i] - p[i]
            hi = p[n + i] - x[i]
            if lo < best:
                best = lo
            if hi < best:
                best = hi
        return best
    return math.inf


@njit(cache=True)
def face_dist(p, x, face):
    """Signed distance from ``x`` to the plane of one box face (positive inside)."""
    n = x.size
    axis = face // 2
    if face % 2 == 0:
        return x[axis] - p[axis]
    return p[n + axis] - x[axis]


@njit(cache=True)
def nearest_face(p, x):
    """Box face closest to ``x``; ties go to the lowest axis, then the lower face."""
    n = x.size
    best = math.inf
    face = 0
    for f in range(2 * n):
        d = face_dist(p, x, f)
        if d < best:
            best = d
            face = f
    return face


@njit(cache=True)
def snap_to_face(p, x, face, out):
    """Point of the box face ``face`` obtained by fixing its coordinate and clamping the rest."""
    n = x.size
    axis = face // 2
    for i in range(n):
        v = x[i]
        if v < p[i]:
            v = p[i]
        elif v > p[n + i]:
            v = p[n + i]
        out[i] = v
    out[axis] = p[axis] if face % 2 == 0 else p[n + axis]


@njit(cache=True)
def project(kind, p, x, out):
    """Nearest boundary point of ``x`` (radial for balls, clamped for boxes)."""
    n = x.size
    if kind == BALL:
        s = 0.0
        for i in range(n):
            d = x[i] - p[i]
            s += d * d
        norm = math.sqrt(s)
        if norm == 0.0:
            for i in range(n):
                out[i] = p[i]
            out[0] = p[0] - p[n]
            return
        scale = p[n] / norm
        for i in range(n):
            out[i] = p[i] + scale * (x[i] - p[i])
        return
    if kind == HALF:
        for i in range(n):
            out[i] = x[i]
        out[int(p[0])] = p[1]
        return
    if kind == BOX:
        inside = True
        for i in range(n):
            if x[i] < p[i] or x[i] > p[n + i]:
                inside = False
        if inside:
            snap_to_face(p, x, nearest_face(p, x), out)
        else:
            for i in range(n):
                out[i] = min(max(x[i], p[i]), p[n + i])
        return
    for i in range(n):
        out[i] = x[i]


@njit(cache=True)
def signed_dist_many(kind, p, xs):
    m = xs.shape[0]
    out = np.empty(m)
    for j in range(m):
        out[j] = signed_dist(kind, p, xs[j])
    return out
