"""Compiled inner loops for the vertex aggregation and edge pre-activation.

The numpy formulation of these steps materialises several (V, K, d)
temporaries per block; these loops touch each incident pair once per pass
and write straight into the caller's buffers.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def aggregate_forward(E, slot, count, eps, out, col0):
    """Write [mean, max, min, std] of each vertex's incident rows of E into out[:, col0:].

    Returns sqrt(var + eps) per vertex, which the backward pass needs.
    Vertices with no incident pairs get zeros.
    """
    V = slot.shape[0]
    d = E.shape[1]
    root = np.full((V, d), np.sqrt(eps))
    # per-vertex accumulators kept in small local arrays so the loops vectorise
    mean = np.zeros(d)
    mx = np.zeros(d)
    mn = np.zeros(d)
    var = np.zeros(d)
    for v in range(V):
        c = count[v]
        if c == 0:
            for j in range(4 * d):
                out[v, col0 + j] = 0.0
            continue
        p0 = slot[v, 0]
        for j in range(d):
            x = E[p0, j]
            mean[j] = x
            mx[j] = x
            mn[j] = x
        for k in range(1, c):
            p = slot[v, k]
            for j in range(d):
                x = E[p, j]
                mean[j] += x
                mx[j] = max(mx[j], x)
                mn[j] = min(mn[j], x)
        for j in range(d):
            mean[j] /= c
            var[j] = 0.0
        # second pass keeps the variance free of cancellation
        for k in range(c):
            p = slot[v, k]
            for j in range(d):
                t = E[p, j] - mean[j]
                var[j] += t * t
        for j in range(d):
            r = np.sqrt(var[j] / c + eps)
            root[v, j] = r
            out[v, col0 + j] = mean[j]
            out[v, col0 + d + j] = mx[j]
            out[v, col0 + 2 * d + j] = mn[j]
            out[v, col0 + 3 * d + j] = r - np.sqrt(eps)
    return root


@numba.njit(cache=True)
def aggregate_backward(E, slot, count, agg, col0, root, dagg, dE):
    """Accumulate the gradient w.r.t. E into dE.

    ``agg``/``dagg`` hold the forward output and its gradient at columns
    col0.. (mean, max, min, std blocks). Ties at the max (min) share its
    gradient equally.
    """
    V = slot.shape[0]
    d = E.shape[1]
    cm, cx, cn, cs = col0, col0 + d, col0 + 2 * d, col0 + 3 * d
    gmax = np.zeros(d)
    gmin = np.zeros(d)
    lin = np.zeros(d)
    off = np.zeros(d)
    mx = np.zeros(d)
    mn = np.zeros(d)
    for v in range(V):
        c = count[v]
        if c == 0:
            continue
        for j in range(d):
            gmax[j] = 0.0
            gmin[j] = 0.0
            mx[j] = agg[v, cx + j]
            mn[j] = agg[v, cn + j]
        for k in range(c):
            p = slot[v, k]
            for j in range(d):
                x = E[p, j]
                if x == mx[j]:
                    gmax[j] += 1.0
                if x == mn[j]:
                    gmin[j] += 1.0
        # mean and std terms are affine in x: g = off + lin * x
        for j in range(d):
            lin[j] = dagg[v, cs + j] / (root[v, j] * c)
            off[j] = dagg[v, cm + j] / c - lin[j] * agg[v, cm + j]
            gmax[j] = dagg[v, cx + j] / gmax[j]
            gmin[j] = dagg[v, cn + j] / gmin[j]
        for k in range(c):
            p = slot[v, k]
            for j in range(d):
                x = E[p, j]
                g = off[j] + lin[j] * x
                if x == mx[j]:
                    g += gmax[j]
                if x == mn[j]:
                    g += gmin[j]
                dE[p, j] += g
    return dE


@numba.njit(cache=True)
def edge_hidden(base, hu, hv, src, dst, b):
    """relu(base[p] + hu[src[p]] + hv[dst[p]] + b), computed in place in base."""
    P, d = base.shape
    for p in range(P):
        s = src[p]
        t = dst[p]
        for j in range(d):
            x = base[p, j] + hu[s, j] + hv[t, j] + b[j]
            base[p, j] = x if x > 0.0 else 0.0
    return base


@numba.njit(cache=True)
def relu_backward(g, act):
    """Zero g wherever the ReLU output was zero (in place)."""
    n, d = g.shape
    for i in range(n):
        for j in range(d):
            if act[i, j] <= 0.0:
                g[i, j] = 0.0
    return g
