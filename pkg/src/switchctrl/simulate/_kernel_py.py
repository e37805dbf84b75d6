"""Pure-numpy path integrator, vectorised across samples.

Mirrors ``_ckernel.pyx`` step for step; used when the compiled module is
unavailable or ``SWITCHCTRL_BACKEND=python``.
"""
from __future__ import annotations

import numpy as np


def lagrange3(u: np.ndarray) -> np.ndarray:
    """Quadratic Lagrange weights for nodes 0, 1/2, 1 of an interval."""
    u = np.asarray(u, dtype=float)
    return np.stack([2.0 * (u - 0.5) * (u - 1.0), -4.0 * u * (u - 1.0),
                     2.0 * u * (u - 0.5)], axis=-1)


def _at(tab, key, ti, u):
    """Interpolate node table rows ``tab[key, ti, :, ...]`` at fractions ``u``."""
    nodes = tab[key, ti]                         # (n, 3, ...)
    lw = lagrange3(u)
    return np.einsum("nk,nk...->n...", lw, nodes)


def _quad(Wm, wv, z):
    return np.einsum("ni,naij,nj->na", z, Wm, z) + np.einsum("nai,ni->na", wv, z)


def _partial(tabs, z, acc, ii, key, ti, ua, ub, h):
    F, f, W, w = tabs
    hs = ((ub - ua) * h)[:, None]
    um = 0.5 * (ua + ub)
    Fa, fa, Wa, wa = (_at(t, key, ti, ua) for t in (F, f, W, w))
    Fm, fm, Wm, wm = (_at(t, key, ti, um) for t in (F, f, W, w))
    Fb, fb, Wb, wb = (_at(t, key, ti, ub) for t in (F, f, W, w))
    mv = lambda M, v: np.einsum("nij,nj->ni", M, v)
    z1 = z[ii]
    k1 = mv(Fa, z1) + fa
    z2 = z1 + 0.5 * hs * k1
    k2 = mv(Fm, z2) + fm
    z3 = z1 + 0.5 * hs * k2
    k3 = mv(Fm, z3) + fm
    z4 = z1 + hs * k3
    k4 = mv(Fb, z4) + fb
    q = _quad(Wa, wa, z1) + 2.0 * _quad(Wm, wm, z2) + 2.0 * _quad(Wm, wm, z3) \
        + _quad(Wb, wb, z4)
    z[ii] = z1 + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    acc[ii] += (hs / 6.0) * q


def run_paths(model, z0, g0, jt, jm, T, record=False):
    """Integrate every sample; see :func:`switchctrl.simulate.backend.run`."""
    # blow-ups surface as non-finite output, which the engine reports
    with np.errstate(over="ignore", invalid="ignore"):
        return _run_paths(model, z0, g0, jt, jm, T, record)


def _run_paths(model, z0, g0, jt, jm, T, record):
    nS, D = z0.shape
    M = jt.shape[1]
    L, h, Lt = model.L, model.h, model.Lt
    lv, p = model.F.shape[:2]
    A = model.n_acc
    flat = lambda a: a.reshape((lv * p,) + a.shape[2:])
    F, f, W, w = flat(model.F), flat(model.f), flat(model.W), flat(model.w)
    Jt, bt = flat(model.J), flat(model.b)
    R, r, S, s, sig = (flat(a) for a in (model.R, model.r, model.S, model.s, model.sig))
    tabs = (F, f, W, w)

    z = np.array(z0, dtype=float, copy=True)
    acc = np.zeros((nS, A))
    lvl = np.zeros(nS, dtype=np.int64)
    mode = np.full(nS, g0, dtype=np.int64)
    pre = np.full((nS, M, D), np.nan)
    post = np.full((nS, M, D), np.nan)
    snaps = np.empty((nS, L + 1, D)) if record else None
    if record:
        snaps[:, 0] = z
    nxt = jt[:, 0].copy() if M else np.full(nS, np.inf)
    rows = np.arange(nS)

    for j in range(L):
        ti = j if Lt > 1 else 0
        t0 = j * h
        last = j == L - 1
        t1 = (j + 1) * h
        hit = (nxt <= T) if last else (nxt < t1)
        if hit.any():
            idx = rows[hit]
            u = np.zeros(len(idx))
            sub = np.arange(len(idx))
            while sub.size:
                ii = idx[sub]
                ub = np.clip((nxt[ii] - t0) / h, u[sub], 1.0)
                key = lvl[ii] * p + mode[ii]
                _partial(tabs, z, acc, ii, key, ti, u[sub], ub, h)
                th = jm[ii, lvl[ii]]
                lw = lagrange3(ub)
                Jm = np.einsum("nk,nkij->nij", lw, Jt[key, th, ti])
                bm = np.einsum("nk,nki->ni", lw, bt[key, th, ti])
                pre[ii, lvl[ii]] = z[ii]
                z[ii] = np.einsum("nij,nj->ni", Jm, z[ii]) + bm
                post[ii, lvl[ii]] = z[ii]
                lvl[ii] += 1
                mode[ii] = th
                u[sub] = ub
                more = lvl[ii] < M
                nxt[ii] = np.where(more, jt[ii, np.minimum(lvl[ii], M - 1)], np.inf)
                nn = nxt[ii]
                sub = sub[(nn <= T) if last else (nn < t1)]
            key = lvl[idx] * p + mode[idx]
            _partial(tabs, z, acc, idx, key, ti, u, np.ones(len(idx)), h)
        rest = rows[~hit] if hit.any() else rows
        if rest.size:
            key = lvl[rest] * p + mode[rest]
            zr = z[rest]
            acc[rest] += (np.einsum("ni,naij,nj->na", zr, S[key, ti], zr)
                          + np.einsum("nai,ni->na", s[key, ti], zr) + sig[key, ti])
            z[rest] = np.einsum("nij,nj->ni", R[key, ti], zr) + r[key, ti]
        if record:
            snaps[:, j + 1] = z
    return z, acc, pre, post, snaps
