"""Compiled inner loops for the verification oracles.

These replicate the generic Frank-Wolfe iteration (same step rule, same
greedy linear subproblem, stable tie-breaking) with the gradient inlined;
equivalence with the pure-Python path is asserted by the test suite.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def greedy_vertex(c, gid, caps, total):
    """Maximize c.p over the laminar polytope: fill coordinates in
    decreasing c, skipping non-positive coefficients."""
    m = c.size
    p = np.zeros(m)
    rem_caps = caps.copy()
    rem_total = total
    order = np.argsort(-c, kind="mergesort")
    for k in range(m):
        i = order[k]
        if c[i] <= 0.0 or rem_total <= 0.0:
            break
        fill = min(rem_caps[gid[i]], rem_total)
        p[i] = fill
        rem_caps[gid[i]] -= fill
        rem_total -= fill
    return p


@njit(cache=True)
def fw_log(g, gid, caps, total, max_iters, gap_tol):
    """Frank-Wolfe on sum_i ln(1 + g_i p_i); returns (x, gap, iterations)."""
    m = g.size
    x = np.zeros(m)
    gap = np.inf
    for k in range(max_iters):
        grad = g / (1.0 + g * x)
        v = greedy_vertex(grad, gid, caps, total)
        gap = np.dot(grad, v - x)
        if gap <= gap_tol:
            return x, gap, k
        x += (2.0 / (k + 2.0)) * (v - x)
    grad = g / (1.0 + g * x)
    v = greedy_vertex(grad, gid, caps, total)
    gap = np.dot(grad, v - x)
    return x, gap, max_iters


@njit(cache=True, fastmath=True)
def saa_gradient(gt, x, grad):
    """Mean of g/(1+g p) per coordinate; gt is (m, n_samples), C-contiguous."""
    m, n = gt.shape
    for i in range(m):
        s = 0.0
        xi = x[i]
        for t in range(n):
            gti = gt[i, t]
            s += gti / (1.0 + gti * xi)
        grad[i] = s / n


@njit(cache=True, fastmath=True)
def saa_objective(gt, x):
    """Sample-average of sum_i ln(1 + g_i p_i) over the fixed draws."""
    m, n = gt.shape
    s = 0.0
    for i in range(m):
        xi = x[i]
        for t in range(n):
            s += np.log1p(gt[i, t] * xi)
    return s / n


@njit(cache=True)
def fw_saa(gt, gid, caps, total, max_iters, gap_tol):
    """Frank-Wolfe on the fixed-sample-set average objective."""
    m = gt.shape[0]
    x = np.zeros(m)
    grad = np.zeros(m)
    gap = np.inf
    for k in range(max_iters):
        saa_gradient(gt, x, grad)
        v = greedy_vertex(grad, gid, caps, total)
        gap = np.dot(grad, v - x)
        if gap <= gap_tol:
            return x, gap, k
        x += (2.0 / (k + 2.0)) * (v - x)
    saa_gradient(gt, x, grad)
    v = greedy_vertex(grad, gid, caps, total)
    gap = np.dot(grad, v - x)
    return x, gap, max_iters


@njit(cache=True)
def grid_search(g, gid, caps, total, res):
    """Best feasible grid allocation for m <= 3.

    The last coordinate is filled to its remaining budget in closed form
    (the objective is increasing in every coordinate), which dominates every
    grid choice for it; the others sweep the feasible grid.
    """
    m = g.size
    best = -np.inf
    best_p = np.zeros(m)
    evals = 0
    if m == 1:
        best_p[0] = min(caps[gid[0]], total)
        best = np.log1p(g[0] * best_p[0])
        evals = 1
        return best_p, best, evals

    hi0 = min(caps[gid[0]], total)
    n0 = int(hi0 / res) + 1
    for k0 in range(n0 + 1):
        p0 = min(k0 * res, hi0)
        rem_total0 = total - p0
        if rem_total0 < 0.0:
            break
        if m == 2:
            cap1 = caps[gid[1]] - (p0 if gid[1] == gid[0] else 0.0)
            p1 = min(cap1, rem_total0)
            obj = np.log1p(g[0] * p0) + np.log1p(g[1] * p1)
            evals += 1
            if obj > best:
                best = obj
                best_p[0] = p0
                best_p[1] = p1
        else:
            cap1 = caps[gid[1]] - (p0 if gid[1] == gid[0] else 0.0)
            hi1 = min(cap1, rem_total0)
            n1 = int(hi1 / res) + 1
            for k1 in range(n1 + 1):
                p1 = min(k1 * res, hi1)
                rem_total1 = rem_total0 - p1
                if rem_total1 < 0.0:
                    break
                cap2 = caps[gid[2]]
                if gid[2] == gid[0]:
                    cap2 -= p0
                if gid[2] == gid[1]:
                    cap2 -= p1
                p2 = min(cap2, rem_total1)
                obj = np.log1p(g[0] * p0) + np.log1p(g[1] * p1) + np.log1p(g[2] * p2)
                evals += 1
                if obj > best:
                    best = obj
                    best_p[0] = p0
                    best_p[1] = p1
                    best_p[2] = p2
    return best_p, best, evals
