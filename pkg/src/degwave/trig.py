"""Closed-form integrals over [0, T] of products of ``t^p cos(w t)`` / ``t^p sin(w t)``.

A family member is a triple ``(power, kind, freq)`` with ``power`` in {0, 1} and
``kind`` 0 for cosine and 1 for sine, so ``1 = (0, 0, 0)`` and ``t = (1, 0, 0)``.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["moment_cos", "moment_sin", "family", "inner_products", "gram_matrix"]

# below this |w| T the Taylor series replaces the closed forms (cancellation)
_SERIES_SWITCH = 1.0
_SERIES_TERMS = 16


def _series(p, w, T, odd):
    out = np.zeros_like(w)
    wt = w * T
    for k in range(_SERIES_TERMS):
        m = 2 * k + odd
        out += (-1) ** k * wt**m / (math.factorial(m) * (m + p + 1))
    return out * T ** (p + 1)


def moment_cos(p: int, w, T: float):
    """``int_0^T t^p cos(w t) dt`` for ``p`` in {0, 1, 2}, vectorised in ``w``."""
    w = np.abs(np.asarray(w, dtype=float))
    small = w * T < _SERIES_SWITCH
    ws = np.where(small, 1.0, w)
    s, c = np.sin(ws * T), np.cos(ws * T)
    if p == 0:
        big = s / ws
    elif p == 1:
        big = T * s / ws + (c - 1.0) / ws**2
    elif p == 2:
        big = T * T * s / ws + 2 * T * c / ws**2 - 2 * s / ws**3
    else:
        raise ValueError("p must be 0, 1 or 2")
    return np.where(small, _series(p, w, T, 0), big)


def moment_sin(p: int, w, T: float):
    """``int_0^T t^p sin(w t) dt`` for ``p`` in {0, 1, 2}, vectorised in ``w``."""
    w = np.asarray(w, dtype=float)
    sign = np.sign(w)
    w = np.abs(w)
    small = w * T < _SERIES_SWITCH
    ws = np.where(small, 1.0, w)
    s, c = np.sin(ws * T), np.cos(ws * T)
    if p == 0:
        big = (1.0 - c) / ws
    elif p == 1:
        big = -T * c / ws + s / ws**2
    elif p == 2:
        big = -T * T * c / ws + 2 * T * s / ws**2 + 2 * (c - 1.0) / ws**3
    else:
        raise ValueError("p must be 0, 1 or 2")
    return sign * np.where(small, _series(p, w, T, 1), big)


def family(omegas):
    """Members ``[1, t, cos w_1 t, sin w_1 t, ..., cos w_N t, sin w_N t]``."""
    om = np.asarray(omegas, dtype=float)
    n = len(om)
    power = np.zeros(2 * n + 2, dtype=int)
    power[1] = 1
    kind = np.zeros(2 * n + 2, dtype=int)
    kind[3::2] = 1
    freq = np.zeros(2 * n + 2)
    freq[2::2] = om
    freq[3::2] = om
    return power, kind, freq


def inner_products(fa, fb, T: float) -> np.ndarray:
    """Matrix of ``int_0^T f_i g_j dt`` for member arrays ``fa``, ``fb``."""
    pa, ka, wa = (np.asarray(v)[:, None] for v in fa)
    pb, kb, wb = (np.asarray(v)[None, :] for v in fb)
    pa, pb, ka, kb, wa, wb = np.broadcast_arrays(pa, pb, ka, kb, wa, wb)
    p = pa + pb
    dif, tot = wa - wb, wa + wb
    out = np.zeros(p.shape)
    for power in (0, 1, 2):
        sel = p == power
        if not sel.any():
            continue
        cd, ct = moment_cos(power, dif[sel], T), moment_cos(power, tot[sel], T)
        sd, st = moment_sin(power, dif[sel], T), moment_sin(power, tot[sel], T)
        kk = ka[sel] * 2 + kb[sel]
        val = np.select(
            [kk == 0, kk == 3, kk == 2, kk == 1],
            [
                0.5 * (cd + ct),  # cos a cos b
                0.5 * (cd - ct),  # sin a sin b
                0.5 * (st + sd),  # sin a cos b
                0.5 * (st - sd),  # cos a sin b
            ],
        )
        out[sel] = val
    return out


def gram_matrix(omegas, T: float) -> np.ndarray:
    """L2(0, T) Gram matrix of :func:`family`; exactly symmetric."""
    f = family(omegas)
    G = inner_products(f, f, T)
    return 0.5 * (G + G.T)
