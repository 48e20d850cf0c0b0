"""Backend selection and dispatch for the flow's hot kernels.

The compiled Cython core (`graphmcf._kernels`) is preferred when it was built;
otherwise the pure-numpy fallback (`graphmcf._fallback`) is used.  Both
implement identical arithmetic, so results are bit-identical across backends.
Set GRAPHMCF_KERNELS=python or =compiled to force one side.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback
from .errors import ConfigurationError
from .field import Grid, sphere_phi_strides
from .manifolds import FLAT_TORUS, ROUND_SPHERE, ManifoldSpec, ProductSpec

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_FORCED = os.environ.get("GRAPHMCF_KERNELS", "").strip().lower()
if _FORCED == "python":
    _compiled = None
elif _FORCED == "compiled" and _compiled is None:
    raise ImportError(
        "GRAPHMCF_KERNELS=compiled but the compiled kernels are not built; "
        "run `pip install -e . --no-build-isolation`"
    )

BACKEND = "compiled" if _compiled is not None else "python"


def backend_name(backend: str | None = None) -> str:
    return BACKEND if backend in (None, "") else backend


def build_context(grid: Grid, target: ManifoldSpec, widen: bool = True) -> dict:
    """Precompute the stencil tables and geometry arrays a kernel needs.

    The same context feeds both backends; everything data-dependent on the
    grid is computed here once, in numpy, so the backends cannot diverge.
    """
    tables = grid.tables(widen=widen)
    nd = grid.ndim
    ctx: dict = {"nd": nd}
    for d in range(nd):
        ctx[f"p{d + 1}"] = tables.plus[d]
        ctx[f"m{d + 1}"] = tables.minus[d]
    for (d, e), combo in tables.diag.items():
        ctx[f"d{d + 1}{e + 1}"] = combo

    flat_target = target.kind == FLAT_TORUS
    ctx["L"] = np.asarray(target.periods, dtype=float) if flat_target else None
    ctx["ncomp"] = 2 if flat_target else 3
    if flat_target:
        ctx["bg"] = np.zeros((nd, 2))

    if grid.spec.kind == FLAT_TORUS:
        ctx["kind"] = f"torus{nd}_flat"
        if not flat_target:
            raise ConfigurationError(
                "torus domains pair with flat targets (curvature hypothesis)"
            )
        for d in range(nd):
            h = float(tables.h_eff[d])
            ctx[f"th{d + 1}"] = 2.0 * h
            ctx[f"h{d + 1}{d + 1}"] = h * h
        for d in range(nd):
            for e in range(d + 1, nd):
                ctx[f"q{d + 1}{e + 1}"] = 4.0 * float(tables.h_eff[d]) * float(tables.h_eff[e])
    else:
        ctx["kind"] = "sphere2_flat" if flat_target else "sphere2_sphere"
        h1 = float(tables.h_eff[0])
        h2n = np.asarray(tables.h_eff[1], dtype=float)
        theta = grid.theta()
        s, c = np.sin(theta), np.cos(theta)
        r1sq = 1.0 / grid.spec.curvature
        ctx.update(
            th1=2.0 * h1,
            h11=h1 * h1,
            th2n=2.0 * h2n,
            h22n=h2n * h2n,
            q12n=4.0 * h1 * h2n,
            r1sq=r1sq,
            g122=r1sq * s * s,
            sc=s * c,
            cot=c / s,
            k2=target.curvature_value,
        )
    return ctx


def set_background(ctx: dict, background) -> None:
    if background is not None:
        ctx["bg"] = np.ascontiguousarray(background, dtype=float)


_FALLBACK_FNS = {
    "torus2_flat": _fallback.rhs_torus2_flat,
    "torus3_flat": _fallback.rhs_torus3_flat,
    "sphere2_sphere": _fallback.rhs_sphere2_sphere,
    "sphere2_flat": _fallback.rhs_sphere2_flat,
}


def rhs(values: np.ndarray, ctx: dict, backend: str | None = None):
    """Evaluate the flow right-hand side; returns (rhs, min_rel_det, node)."""
    name = backend_name(backend)
    if name == "compiled" and _compiled is not None:
        out = np.empty_like(values)
        if ctx["kind"] == "torus2_flat":
            det, node = _compiled.rhs_torus2_flat(
                values, ctx["bg"], ctx["p1"], ctx["m1"], ctx["p2"], ctx["m2"],
                *ctx["d12"], ctx["L"], ctx["th1"], ctx["th2"], ctx["h11"],
                ctx["h22"], ctx["q12"], out,
            )
        elif ctx["kind"] == "torus3_flat":
            det, node = _compiled.rhs_torus3_flat(
                values, ctx["bg"], ctx["p1"], ctx["m1"], ctx["p2"], ctx["m2"],
                ctx["p3"], ctx["m3"], *ctx["d12"], *ctx["d13"], *ctx["d23"],
                ctx["L"], ctx["th1"], ctx["th2"], ctx["th3"], ctx["h11"],
                ctx["h22"], ctx["h33"], ctx["q12"], ctx["q13"], ctx["q23"], out,
            )
        elif ctx["kind"] == "sphere2_sphere":
            det, node = _compiled.rhs_sphere2_sphere(
                values, ctx["p1"], ctx["m1"], ctx["p2"], ctx["m2"], *ctx["d12"],
                ctx["th1"], ctx["h11"], ctx["th2n"], ctx["h22n"], ctx["q12n"],
                ctx["r1sq"], ctx["g122"], ctx["sc"], ctx["cot"], ctx["k2"], out,
            )
        elif ctx["kind"] == "sphere2_flat":
            det, node = _compiled.rhs_sphere2_flat(
                values, ctx["p1"], ctx["m1"], ctx["p2"], ctx["m2"], *ctx["d12"],
                ctx["L"], ctx["th1"], ctx["h11"], ctx["th2n"], ctx["h22n"],
                ctx["q12n"], ctx["r1sq"], ctx["g122"], ctx["sc"], ctx["cot"], out,
            )
        else:
            raise ConfigurationError(f"unknown kernel kind {ctx['kind']!r}")
        return out, det, node
    fn = _FALLBACK_FNS.get(ctx["kind"])
    if fn is None:
        raise ConfigurationError(f"unknown kernel kind {ctx['kind']!r}")
    return fn(values, ctx)
