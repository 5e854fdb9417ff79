"""numba-compiled recurrent scans; same contracts as the numpy backend.

Gate arithmetic is fused into explicit loops, the recurrent products go
through ``np.dot`` (BLAS). Inputs must be C-contiguous float64.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def gru_forward(xp, ut):
    L, B, H3 = xp.shape
    H = H3 // 3
    hs = np.zeros((L + 1, B, H))
    z = np.empty((L, B, H))
    r = np.empty((L, B, H))
    n = np.empty((L, B, H))
    hn = np.empty((L, B, H))
    for t in range(L):
        hp = np.dot(hs[t], ut)
        for b in range(B):
            for j in range(H):
                zt = _sigmoid(xp[t, b, j] + hp[b, j])
                rt = _sigmoid(xp[t, b, H + j] + hp[b, H + j])
                hnt = hp[b, 2 * H + j]
                a = xp[t, b, 2 * H + j] + rt * hnt
                nt = a if a > 0.0 else 0.0
                z[t, b, j] = zt
                r[t, b, j] = rt
                n[t, b, j] = nt
                hn[t, b, j] = hnt
                hs[t + 1, b, j] = (1.0 - zt) * nt + zt * hs[t, b, j]
    return hs, z, r, n, hn


@njit(cache=True)
def gru_backward(dh_ext, hs, z, r, n, hn, u):
    L, B, H = dh_ext.shape
    dxp = np.empty((L, B, 3 * H))
    dhp = np.empty((L, B, 3 * H))
    dh_next = np.zeros((B, H))
    carry = np.empty((B, H))
    for t in range(L - 1, -1, -1):
        for b in range(B):
            for j in range(H):
                dh = dh_ext[t, b, j] + dh_next[b, j]
                zt = z[t, b, j]
                rt = r[t, b, j]
                nt = n[t, b, j]
                da = dh * (1.0 - zt) if nt > 0.0 else 0.0
                dzp = dh * (hs[t, b, j] - nt) * zt * (1.0 - zt)
                drp = da * hn[t, b, j] * rt * (1.0 - rt)
                dxp[t, b, j] = dzp
                dxp[t, b, H + j] = drp
                dxp[t, b, 2 * H + j] = da
                dhp[t, b, j] = dzp
                dhp[t, b, H + j] = drp
                dhp[t, b, 2 * H + j] = da * rt
                carry[b, j] = dh * zt
        dh_next = carry + np.dot(dhp[t], u)
    return dxp, dhp


@njit(cache=True)
def lstm_forward(xp, ut):
    L, B, H4 = xp.shape
    H = H4 // 4
    hs = np.zeros((L + 1, B, H))
    cs = np.zeros((L + 1, B, H))
    gates = np.empty((L, B, 4 * H))
    for t in range(L):
        hp = np.dot(hs[t], ut)
        for b in range(B):
            for j in range(H):
                i = _sigmoid(xp[t, b, j] + hp[b, j])
                f = _sigmoid(xp[t, b, H + j] + hp[b, H + j])
                g = xp[t, b, 2 * H + j] + hp[b, 2 * H + j]
                g = g if g > 0.0 else 0.0
                o = _sigmoid(xp[t, b, 3 * H + j] + hp[b, 3 * H + j])
                c = f * cs[t, b, j] + i * g
                cs[t + 1, b, j] = c
                hs[t + 1, b, j] = o * (c if c > 0.0 else 0.0)
                gates[t, b, j] = i
                gates[t, b, H + j] = f
                gates[t, b, 2 * H + j] = g
                gates[t, b, 3 * H + j] = o
    return hs, cs, gates


@njit(cache=True)
def lstm_backward(dh_ext, hs, cs, gates, u):
    L, B, H = dh_ext.shape
    dpre = np.empty((L, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(L - 1, -1, -1):
        for b in range(B):
            for j in range(H):
                i = gates[t, b, j]
                f = gates[t, b, H + j]
                g = gates[t, b, 2 * H + j]
                o = gates[t, b, 3 * H + j]
                c = cs[t + 1, b, j]
                dh = dh_ext[t, b, j] + dh_next[b, j]
                dc = dc_next[b, j]
                if c > 0.0:
                    dc += dh * o
                dpre[t, b, j] = dc * g * i * (1.0 - i)
                dpre[t, b, H + j] = dc * cs[t, b, j] * f * (1.0 - f)
                dpre[t, b, 2 * H + j] = dc * i if g > 0.0 else 0.0
                dpre[t, b, 3 * H + j] = dh * (c if c > 0.0 else 0.0) * o * (1.0 - o)
                dc_next[b, j] = dc * f
        dh_next = np.dot(dpre[t], u)
    return dpre


@njit(cache=True)
def adam_update(p, g, m, v, lr, beta1, beta2, c1, c2, eps):
    """In place on flat 1-D ``p``, ``m``, ``v``."""
    for k in range(p.size):
        gk = g[k]
        mk = beta1 * m[k] + (1.0 - beta1) * gk
        vk = beta2 * v[k] + (1.0 - beta2) * gk * gk
        m[k] = mk
        v[k] = vk
        p[k] -= lr * (mk / c1) / (math.sqrt(vk / c2) + eps)
