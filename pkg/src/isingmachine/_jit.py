"""Compiled inner loops for long runs of the lane kernel.

These reproduce ``kernel.mcs_array`` draw for draw; the numpy version is
the readable reference and the tests hold the two to bit-identical output.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _lfsr32(g):
    fb = ((g >> 31) ^ (g >> 21) ^ (g >> 1) ^ g) & 1
    return ((g << 1) | fb) & 0xFFFFFFFF


@njit(cache=True)
def _steps(s, sites, nbrs, offsets, thr, g, lanes, n_mcs, leap):
    n_steps = offsets.size - 1
    for _ in range(n_mcs):
        for st in range(n_steps):
            g = _lfsr32(g)
            gl = g & 0xFFF
            a = offsets[st]
            for k in range(offsets[st + 1] - a):
                loc = lanes[k]
                for _l in range(leap):
                    fb = ((loc >> 11) ^ (loc >> 10) ^ (loc >> 9) ^ (loc >> 3)) & 1
                    loc = ((loc << 1) | fb) & 0xFFF
                lanes[k] = loc
                r = gl ^ loc
                p = a + k
                site = sites[p]
                s0 = s[site]
                eps = s0 * (s[nbrs[0, p]] + s[nbrs[1, p]] + s[nbrs[2, p]] + s[nbrs[3, p]])
                if eps <= 0 or r < thr[(eps + 4) >> 1]:
                    s[site] = -s0
    return g


@njit(cache=True)
def _measure(s, L):
    m = 0
    e = 0
    for i in range(L):
        down = (i + 1) % L
        for j in range(L):
            v = s[i * L + j]
            m += v
            e -= v * (s[i * L + (j + 1) % L] + s[down * L + j])
    return m, e


@njit(cache=True)
def _sample(s, L, sites, nbrs, offsets, thr, g, lanes, n_samples, stride, leap, out_m, out_e):
    for k in range(n_samples):
        g = _steps(s, sites, nbrs, offsets, thr, g, lanes, stride, leap)
        m, e = _measure(s, L)
        out_m[k] = m
        out_e[k] = e
    return g


def flatten_plans(plans):
    sites = np.concatenate([p.sites for p in plans]).astype(np.int64)
    nbrs = np.concatenate([p.nbrs for p in plans], axis=1).astype(np.int64)
    offsets = np.zeros(len(plans) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([p.sites.size for p in plans])
    return sites, nbrs, offsets
