"""Numba path kernels.

Every path owns one Philox stream ``(key, stream)``. Block 0 of the stream is
reserved for the per-path exponential clock of the killed estimator; the walk
itself draws from block 1 onward, so the Brownian path is the same whatever
the killing rate or estimator mode.

Bridge correction treats the boundary as locally flat. Between grid points at
distances ``a`` and ``b`` from a face, the bridge crosses with probability
``exp(-2ab/h)``; given a crossing, the crossing time ``T`` satisfies
``T/(h-T) ~ InverseGaussian(mean=a/b, shape=a^2/h)``, which is sampled exactly.
"""

import math

import numpy as np
from numba import njit, prange

from ._geometry import BOX, face_dist, project, signed_dist, snap_to_face
from .rng import normal_pair, uniform_pair
from .specfun import psi_nu

DISCOUNTED = 0
KILLED = 1
DUFFIN = 2

EXITED = 0
KILLED_STATUS = 1
TRUNCATED = 2

# bridge crossing probabilities below exp(-40) are treated as zero
_BRIDGE_CUT = 20.0


@njit(cache=True)
def _inverse_gaussian(mean, shape, z, u):
    v = z * z
    mv = mean * v
    y = mean - 2.0 * mean * mv / (mv + math.sqrt(4.0 * mean * shape * v + mv * mv))
    if u <= mean / (mean + y):
        return y
    return mean * mean / y


@njit(cache=True)
def _crossing_fraction(a, b, h, key, stream, ctr):
    """Fraction of the step elapsed at the first crossing of a bridge from ``a`` to ``-b``.

    Returns the fraction and the next unused block index.
    """
    if b <= 0.0:
        return 1.0, ctr
    if a <= 0.0:
        return 0.0, ctr
    z, _, ctr = normal_pair(key, stream, ctr)
    u, _ = uniform_pair(key, stream, ctr)
    s = _inverse_gaussian(a / b, a * a / h, z, u)
    return s / (1.0 + s), ctr + np.uint64(1)


@njit(cache=True)
def _bridge_prob(a, b, h):
    ab = a * b
    if ab >= _BRIDGE_CUT * h:
        return 0.0
    return math.exp(-2.0 * ab / h)


@njit(cache=True)
def step_path(kind, p, x0, h, max_steps, bridge, mode, mu, key, stream, out):
    """One discrete-time path; returns ``(exit_time, weight, status, steps)``.

    ``out`` receives the exit point (the last position for truncated paths).
    """
    n = x0.size
    x = x0.copy()
    xn = np.empty(n)
    z = np.empty(n + 2)
    cross = np.empty(n)
    sq = math.sqrt(h)
    ctr = np.uint64(1)

    clock = math.inf
    if mode == KILLED and mu > 0.0:
        u0, _ = uniform_pair(key, stream, np.uint64(0))
        clock = -math.log(u0) / (0.5 * mu * mu)

    duffin = mode == DUFFIN
    half_width = 0.5 * math.pi / mu if duffin else 0.0
    w = 0.0
    strip_alive = duffin

    d1 = signed_dist(kind, p, x)
    t = 0.0
    for step in range(max_steps):
        m = n + 1 if strip_alive else n
        for j in range((m + 1) // 2):
            g0, g1, ctr = normal_pair(key, stream, ctr)
            z[2 * j] = g0
            z[2 * j + 1] = g1
        for i in range(n):
            xn[i] = x[i] + sq * z[i]
        wn = w + sq * z[n] if strip_alive else 0.0

        d2 = signed_dist(kind, p, xn)

        # exit of W from D
        exit_w = False
        face = -1
        fa = 0.0
        fb = 0.0
        if d2 <= 0.0:
            exit_w = True
            if kind == BOX:
                best = math.inf
                for f in range(2 * n):
                    e1 = face_dist(p, x, f)
                    e2 = face_dist(p, xn, f)
                    if e2 <= 0.0:
                        s = e1 / (e1 - e2)
                        if s < best:
                            best = s
                            face = f
                            fa = e1
                            fb = -e2
            else:
                fa = d1
                fb = -d2
        elif bridge:
            if kind == BOX:
                stay = 1.0
                for f in range(2 * n):
                    stay *= 1.0 - _bridge_prob(face_dist(p, x, f), face_dist(p, xn, f), h)
                if stay < 1.0:
                    u, _ = uniform_pair(key, stream, ctr)
                    ctr += np.uint64(1)
                    if u < 1.0 - stay:
                        exit_w = True
                        # pick the crossed face in proportion to its crossing probability
                        target = u / (1.0 - stay)
                        total = 0.0
                        for f in range(2 * n):
                            total += _bridge_prob(face_dist(p, x, f), face_dist(p, xn, f), h)
                        acc = 0.0
                        for f in range(2 * n):
                            e1 = face_dist(p, x, f)
                            e2 = face_dist(p, xn, f)
                            acc += _bridge_prob(e1, e2, h) / total
                            face = f
                            fa = e1
                            fb = e2
                            if target < acc:
                                break
            else:
                prob = _bridge_prob(d1, d2, h)
                if prob > 0.0:
                    u, _ = uniform_pair(key, stream, ctr)
                    ctr += np.uint64(1)
                    if u < prob:
                        exit_w = True
                        fa = d1
                        fb = d2

        # escape of the auxiliary coordinate from the strip
        exit_s = False
        sa = 0.0
        sb = 0.0
        if strip_alive:
            top1 = half_width - w
            top2 = half_width - wn
            bot1 = half_width + w
            bot2 = half_width + wn
            if top2 <= 0.0 or bot2 <= 0.0:
                exit_s = True
                if top2 <= 0.0:
                    sa = top1
                    sb = -top2
                else:
                    sa = bot1
                    sb = -bot2
            elif bridge:
                pt = _bridge_prob(top1, top2, h)
                pb = _bridge_prob(bot1, bot2, h)
                stay = (1.0 - pt) * (1.0 - pb)
                if stay < 1.0:
                    u, _ = uniform_pair(key, stream, ctr)
                    ctr += np.uint64(1)
                    if u < 1.0 - stay:
                        exit_s = True
                        if u < (1.0 - stay) * pt / (pt + pb):
                            sa = top1
                            sb = top2
                        else:
                            sa = bot1
                            sb = bot2

        if exit_w or exit_s:
            if bridge:
                tw = 1.0
                ts = 1.0
                if exit_w:
                    tw, ctr = _crossing_fraction(fa, fb, h, key, stream, ctr)
                if exit_s:
                    ts, ctr = _crossing_fraction(sa, sb, h, key, stream, ctr)
            else:
                tw = fa / (fa + fb) if exit_w else 1.0
                ts = sa / (sa + sb) if exit_s else 1.0
            if exit_s and (not exit_w or ts <= tw):
                strip_alive = False
            if exit_w:
                for i in range(n):
                    cross[i] = x[i] + tw * (xn[i] - x[i])
                if kind == BOX:
                    if face < 0:
                        project(kind, p, cross, out)
                    else:
                        snap_to_face(p, cross, face, out)
                else:
                    project(kind, p, cross, out)
                tau = t + tw * h if bridge else t + h
                if mode == DISCOUNTED:
                    return tau, math.exp(-0.5 * mu * mu * tau), EXITED, step + 1
                if mode == KILLED:
                    if clock > tau:
                        return tau, 1.0, EXITED, step + 1
                    return tau, 0.0, KILLED_STATUS, step + 1
                weight = 0.0
                if strip_alive:
                    weight = math.cos(mu * (w + tw * (wn - w)))
                    weight = min(max(weight, 0.0), 1.0)
                return tau, weight, EXITED, step + 1

        for i in range(n):
            x[i] = xn[i]
        w = wn
        d1 = d2
        t += h

    for i in range(n):
        out[i] = x[i]
    return t, 0.0, TRUNCATED, max_steps


@njit(cache=True)
def wos_path(kind, p, x0, eps, max_steps, mu, nu, key, stream, out):
    """One walk-on-spheres path; returns ``(weight, status, jumps)``."""
    n = x0.size
    x = x0.copy()
    z = np.empty(n + 1)
    ctr = np.uint64(1)
    weight = 1.0
    for jump in range(max_steps + 1):
        r = signed_dist(kind, p, x)
        if r < eps:
            project(kind, p, x, out)
            return weight, EXITED, jump
        if jump == max_steps:
            break
        if mu > 0.0:
            weight *= psi_nu(nu, mu * r)
        norm2 = 0.0
        for j in range((n + 1) // 2):
            g0, g1, ctr = normal_pair(key, stream, ctr)
            z[2 * j] = g0
            z[2 * j + 1] = g1
        for i in range(n):
            norm2 += z[i] * z[i]
        scale = r / math.sqrt(norm2)
        for i in range(n):
            x[i] += scale * z[i]
    for i in range(n):
        out[i] = x[i]
    return 0.0, TRUNCATED, max_steps


@njit(parallel=True, cache=True)
def step_batch(kind, p, x0, h, max_steps, bridge, mode, mu, key, stream0, pts, times, weights, status, steps):
    for i in prange(pts.shape[0]):
        tau, wt, st, ns = step_path(
            kind, p, x0, h, max_steps, bridge, mode, mu, key, stream0 + np.uint64(i), pts[i]
        )
        times[i] = tau
        weights[i] = wt
        status[i] = st
        steps[i] = ns


@njit(parallel=True, cache=True)
def wos_batch(kind, p, x0, eps, max_steps, mu, nu, key, stream0, pts, weights, status, steps):
    for i in prange(pts.shape[0]):
        wt, st, ns = wos_path(kind, p, x0, eps, max_steps, mu, nu, key, stream0 + np.uint64(i), pts[i])
        weights[i] = wt
        status[i] = st
        steps[i] = ns
