"""Vectorised numpy versions of the recurrent scans.

All arrays are time-major: ``(L, B, features)``. Input projections ``xp``
already include the bias. ``ut`` is the transposed recurrent matrix, so the
hidden contribution at step t is ``h[t] @ ut``.
"""

import numpy as np


def sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def gru_forward(xp, ut):
    L, B, H3 = xp.shape
    H = H3 // 3
    hs = np.zeros((L + 1, B, H))
    z = np.empty((L, B, H))
    r = np.empty((L, B, H))
    n = np.empty((L, B, H))
    hn = np.empty((L, B, H))
    for t in range(L):
        hp = hs[t] @ ut
        z[t] = sigmoid(xp[t, :, :H] + hp[:, :H])
        r[t] = sigmoid(xp[t, :, H : 2 * H] + hp[:, H : 2 * H])
        hn[t] = hp[:, 2 * H :]
        n[t] = np.maximum(xp[t, :, 2 * H :] + r[t] * hn[t], 0.0)
        hs[t + 1] = (1.0 - z[t]) * n[t] + z[t] * hs[t]
    return hs, z, r, n, hn


def gru_backward(dh_ext, hs, z, r, n, hn, u):
    """Returns gradients w.r.t. the input projections and the hidden projections."""
    L, B, H = dh_ext.shape
    dxp = np.empty((L, B, 3 * H))
    dhp = np.empty((L, B, 3 * H))
    dh_next = np.zeros((B, H))
    for t in range(L - 1, -1, -1):
        dh = dh_ext[t] + dh_next
        da = np.where(n[t] > 0.0, dh * (1.0 - z[t]), 0.0)
        dzp = dh * (hs[t] - n[t]) * z[t] * (1.0 - z[t])
        drp = da * hn[t] * r[t] * (1.0 - r[t])
        dxp[t, :, :H] = dzp
        dxp[t, :, H : 2 * H] = drp
        dxp[t, :, 2 * H :] = da
        dhp[t, :, : 2 * H] = dxp[t, :, : 2 * H]
        dhp[t, :, 2 * H :] = da * r[t]
        dh_next = dh * z[t] + dhp[t] @ u
    return dxp, dhp


def lstm_forward(xp, ut):
    L, B, H4 = xp.shape
    H = H4 // 4
    hs = np.zeros((L + 1, B, H))
    cs = np.zeros((L + 1, B, H))
    gates = np.empty((L, B, 4 * H))
    for t in range(L):
        a = xp[t] + hs[t] @ ut
        i = sigmoid(a[:, :H])
        f = sigmoid(a[:, H : 2 * H])
        g = np.maximum(a[:, 2 * H : 3 * H], 0.0)
        o = sigmoid(a[:, 3 * H :])
        cs[t + 1] = f * cs[t] + i * g
        hs[t + 1] = o * np.maximum(cs[t + 1], 0.0)
        gates[t, :, :H] = i
        gates[t, :, H : 2 * H] = f
        gates[t, :, 2 * H : 3 * H] = g
        gates[t, :, 3 * H :] = o
    return hs, cs, gates


def lstm_backward(dh_ext, hs, cs, gates, u):
    """Gradient w.r.t. the gate pre-activations (shared by input and hidden paths)."""
    L, B, H = dh_ext.shape
    dpre = np.empty((L, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(L - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H : 2 * H]
        g = gates[t, :, 2 * H : 3 * H]
        o = gates[t, :, 3 * H :]
        c = cs[t + 1]
        dh = dh_ext[t] + dh_next
        dc = dc_next + np.where(c > 0.0, dh * o, 0.0)
        dpre[t, :, :H] = dc * g * i * (1.0 - i)
        dpre[t, :, H : 2 * H] = dc * cs[t] * f * (1.0 - f)
        dpre[t, :, 2 * H : 3 * H] = np.where(g > 0.0, dc * i, 0.0)
        dpre[t, :, 3 * H :] = dh * np.maximum(c, 0.0) * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dpre[t] @ u
    return dpre


def adam_update(p, g, m, v, lr, beta1, beta2, c1, c2, eps):
    """Bias-corrected Adam, in place on ``p``, ``m``, ``v``; ``c1``/``c2`` are ``1 - beta**t``."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
