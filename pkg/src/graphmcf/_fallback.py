"""Pure-numpy implementations of the flow right-hand-side kernels.

These are the reference semantics for the compiled kernels in `_kernels.pyx`:
every arithmetic expression here is mirrored there with the same operation
tree, so the two backends produce bit-identical results.  Keep the expression
shapes in sync when editing either side.

Each kernel returns (rhs, min_relative_det, argmin_node); the relative
determinant is det(g)/det(g1), which is >= 1 for exact graph data and <= 0
only when the data has degenerated.
"""
from __future__ import annotations

import numpy as np


def _wrap(delta, periods):
    return delta - periods * np.floor(delta / periods + 0.5)


def rhs_torus2_flat(u, ctx):
    p1, m1 = ctx["p1"], ctx["m1"]
    p2, m2 = ctx["p2"], ctx["m2"]
    pp, pm, mp, mm = ctx["d12"]
    L = ctx["L"]
    dp1 = _wrap(u[p1] - u, L)
    dm1 = _wrap(u[m1] - u, L)
    dp2 = _wrap(u[p2] - u, L)
    dm2 = _wrap(u[m2] - u, L)
    dpp = _wrap(u[pp] - u, L)
    dpm = _wrap(u[pm] - u, L)
    dmp = _wrap(u[mp] - u, L)
    dmm = _wrap(u[mm] - u, L)
    d1 = (dp1 - dm1) / ctx["th1"]
    d2 = (dp2 - dm2) / ctx["th2"]
    d11 = (dp1 + dm1) / ctx["h11"]
    d22 = (dp2 + dm2) / ctx["h22"]
    d12 = (dpp - dpm - dmp + dmm) / ctx["q12"]
    bg = ctx["bg"]
    j1 = bg[0] + d1
    j2 = bg[1] + d2
    g11 = 1.0 + (j1[:, 0] * j1[:, 0] + j1[:, 1] * j1[:, 1])
    g12 = j1[:, 0] * j2[:, 0] + j1[:, 1] * j2[:, 1]
    g22 = 1.0 + (j2[:, 0] * j2[:, 0] + j2[:, 1] * j2[:, 1])
    det = g11 * g22 - g12 * g12
    i11 = g22 / det
    i12 = -(g12 / det)
    i22 = g11 / det
    rhs = i11[:, None] * d11 + 2.0 * (i12[:, None] * d12) + i22[:, None] * d22
    amin = int(np.argmin(det))
    return rhs, float(det[amin]), amin


def rhs_torus3_flat(u, ctx):
    L = ctx["L"]
    dp = [None] * 3
    dm = [None] * 3
    for d in range(3):
        dp[d] = _wrap(u[ctx[f"p{d + 1}"]] - u, L)
        dm[d] = _wrap(u[ctx[f"m{d + 1}"]] - u, L)
    d1 = [(dp[d] - dm[d]) / ctx[f"th{d + 1}"] for d in range(3)]
    dii = [(dp[d] + dm[d]) / ctx[f"h{d + 1}{d + 1}"] for d in range(3)]
    dmix = {}
    for key in ((0, 1), (0, 2), (1, 2)):
        tpp, tpm, tmp, tmm = ctx[f"d{key[0] + 1}{key[1] + 1}"]
        num = _wrap(u[tpp] - u, L) - _wrap(u[tpm] - u, L) - _wrap(u[tmp] - u, L) + _wrap(u[tmm] - u, L)
        dmix[key] = num / ctx[f"q{key[0] + 1}{key[1] + 1}"]
    bg = ctx["bg"]
    j = [bg[d] + d1[d] for d in range(3)]

    def dot(a, b):
        return a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]

    g = {}
    for a in range(3):
        for b in range(a, 3):
            val = dot(j[a], j[b])
            if a == b:
                val = 1.0 + val
            g[(a, b)] = val
    c00 = g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(1, 2)]
    c01 = g[(0, 1)] * g[(2, 2)] - g[(0, 2)] * g[(1, 2)]
    c02 = g[(0, 1)] * g[(1, 2)] - g[(0, 2)] * g[(1, 1)]
    det = g[(0, 0)] * c00 - g[(0, 1)] * c01 + g[(0, 2)] * c02
    i00 = c00 / det
    i01 = -(c01 / det)
    i02 = c02 / det
    i11 = (g[(0, 0)] * g[(2, 2)] - g[(0, 2)] * g[(0, 2)]) / det
    i12 = -((g[(0, 0)] * g[(1, 2)] - g[(0, 1)] * g[(0, 2)]) / det)
    i22 = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(0, 1)]) / det
    rhs = (
        i00[:, None] * dii[0]
        + 2.0 * (i01[:, None] * dmix[(0, 1)])
        + 2.0 * (i02[:, None] * dmix[(0, 2)])
        + i11[:, None] * dii[1]
        + 2.0 * (i12[:, None] * dmix[(1, 2)])
        + i22[:, None] * dii[2]
    )
    amin = int(np.argmin(det))
    return rhs, float(det[amin]), amin


def _sphere_common(u, ctx, wrap_periods):
    p1, m1 = ctx["p1"], ctx["m1"]
    p2, m2 = ctx["p2"], ctx["m2"]
    pp, pm, mp, mm = ctx["d12"]

    if wrap_periods is None:
        def diff(nbr):
            return u[nbr] - u
    else:
        def diff(nbr):
            return _wrap(u[nbr] - u, wrap_periods)

    dp1 = diff(p1)
    dm1 = diff(m1)
    dp2 = diff(p2)
    dm2 = diff(m2)
    dpp = diff(pp)
    dpm = diff(pm)
    dmp = diff(mp)
    dmm = diff(mm)
    d1 = (dp1 - dm1) / ctx["th1"]
    d2 = (dp2 - dm2) / ctx["th2n"][:, None]
    d11 = (dp1 + dm1) / ctx["h11"]
    d22 = (dp2 + dm2) / ctx["h22n"][:, None]
    d12 = (dpp - dpm - dmp + dmm) / ctx["q12n"][:, None]

    def dot(a, b):
        acc = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
        if a.shape[1] == 3:
            acc = acc + a[:, 2] * b[:, 2]
        return acc

    p11 = dot(d1, d1)
    p12 = dot(d1, d2)
    p22 = dot(d2, d2)
    g11 = ctx["r1sq"] + p11
    g12 = p12
    g22 = ctx["g122"] + p22
    det = g11 * g22 - g12 * g12
    detrel = det / (ctx["r1sq"] * ctx["g122"])
    i11 = g22 / det
    i12 = -(g12 / det)
    i22 = g11 / det
    hess11 = d11
    hess12 = d12 - ctx["cot"][:, None] * d2
    hess22 = d22 + ctx["sc"][:, None] * d1
    lap = i11[:, None] * hess11 + 2.0 * (i12[:, None] * hess12) + i22[:, None] * hess22
    return lap, (p11, p12, p22), (i11, i12, i22), detrel


def rhs_sphere2_sphere(u, ctx):
    lap, pull, inv, detrel = _sphere_common(u, ctx, None)
    p11, p12, p22 = pull
    i11, i12, i22 = inv
    q = i11 * p11 + 2.0 * (i12 * p12) + i22 * p22
    rhs = lap + (ctx["k2"] * q)[:, None] * u
    amin = int(np.argmin(detrel))
    return rhs, float(detrel[amin]), amin


def rhs_sphere2_flat(u, ctx):
    lap, _, _, detrel = _sphere_common(u, ctx, ctx["L"])
    amin = int(np.argmin(detrel))
    return lap, float(detrel[amin]), amin
