"""Library of initial maps for flow runs.

Provides maps inside and outside the strictly area-decreasing class:
constant slices, (perturbed) affine torus maps with arbitrary linear part,
and a sphere-to-sphere map built by exponentiating a fixed low-order vector
field so its steepness scales linearly with the amplitude parameter.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError, ValidationError
from .field import Grid, MapField
from .manifolds import FLAT_TORUS, ROUND_SPHERE, ProductSpec

INITIAL_MAP_NAMES = ("constant", "affine", "perturbed-affine", "sphere-harmonic")


def _sphere_point(target, q0):
    theta, phi = float(q0[0]), float(q0[1])
    if not 0.0 < theta < math.pi:
        raise ValidationError(f"target base point colatitude {theta!r} outside (0, pi)")
    r = target.radius
    return r * np.array([math.sin(theta) * math.cos(phi),
                         math.sin(theta) * math.sin(phi),
                         math.cos(theta)])


def _affine_background(params, grid) -> np.ndarray:
    a = np.asarray(params.get("a", np.zeros(2 * grid.ndim)), dtype=float)
    if a.size != 2 * grid.ndim:
        raise ValidationError(
            f"affine matrix needs {2 * grid.ndim} entries (row-major 2 x {grid.ndim})"
        )
    if not np.all(np.isfinite(a)):
        raise ValidationError("affine matrix entries must be finite")
    return np.ascontiguousarray(a.reshape(2, grid.ndim).T)


def initial_map(name: str, params: dict, grid: Grid, product: ProductSpec) -> MapField:
    """Construct a named initial map on the given grid.

    constant          f == q0 (torus coordinates or sphere chart point)
    affine            f(x) = A x + b, torus domain and target; the linear
                      part is carried as the field background, so lattice
                      compatibility of A is not required (the graph is then
                      periodic over the cover)
    perturbed-affine  affine plus the modulation
                      (eps sin(2 pi x1/L1), eps cos(2 pi x2/L2))
    sphere-harmonic   f(p) = exp_q0(eps W(p)) with the fixed unit-C1 field
                      W(theta, phi) = (sin theta cos phi) E1
                                    + (sin theta sin phi) E2
                      in the chart basis (E1, E2) at q0, so max lambda <= C eps
    """
    params = dict(params or {})
    target = product.sigma2
    n_nodes = grid.nnodes
    if name == "constant":
        if target.kind == FLAT_TORUS:
            q0 = np.asarray(params.get("q0", (0.0, 0.0)), dtype=float)
            values = np.tile(q0, (n_nodes, 1))
            return MapField(grid=grid, target=target, values=values)
        q0 = params.get("q0", (math.pi / 3.0, 0.0))
        values = np.tile(_sphere_point(target, q0), (n_nodes, 1))
        return MapField(grid=grid, target=target, values=values)

    if name in ("affine", "perturbed-affine"):
        if target.kind != FLAT_TORUS or grid.spec.kind != FLAT_TORUS:
            raise ValidationError(f"{name} maps need torus domain and target")
        bg = _affine_background(params, grid)
        b = np.asarray(params.get("b", (0.0, 0.0)), dtype=float)
        if b.size != 2:
            raise ValidationError("offset b needs 2 entries")
        values = np.tile(b, (n_nodes, 1))
        if name == "perturbed-affine":
            eps = float(params.get("eps", 0.1))
            x = grid.coordinates()
            l_dom = grid.spec.periods
            values = values.copy()
            values[:, 0] += eps * np.sin(2.0 * math.pi * x[:, 0] / l_dom[0])
            values[:, 1] += eps * np.cos(2.0 * math.pi * x[:, 1] / l_dom[1])
        return MapField(grid=grid, target=target, values=values, background=bg)

    if name == "sphere-harmonic":
        if target.kind != ROUND_SPHERE or grid.spec.kind != ROUND_SPHERE:
            raise ValidationError("sphere-harmonic maps need sphere domain and target")
        eps = float(params.get("eps", 0.1))
        q0 = params.get("q0", (math.pi / 3.0, 0.0))
        theta0, phi0 = float(q0[0]), float(q0[1])
        base = _sphere_point(target, (theta0, phi0))
        r = target.radius
        e1 = np.array([math.cos(theta0) * math.cos(phi0),
                       math.cos(theta0) * math.sin(phi0),
                       -math.sin(theta0)])
        e2 = np.array([-math.sin(phi0), math.cos(phi0), 0.0])
        x = grid.coordinates()
        w1 = np.sin(x[:, 0]) * np.cos(x[:, 1])
        w2 = np.sin(x[:, 0]) * np.sin(x[:, 1])
        v = eps * (w1[:, None] * e1 + w2[:, None] * e2)
        speed = np.linalg.norm(v, axis=1)
        angle = speed / r
        small = speed < 1e-300
        direction = v / np.where(small, 1.0, speed)[:, None]
        values = (np.cos(angle)[:, None] * base
                  + (r * np.sin(angle))[:, None] * direction)
        values[small] = base
        return MapField(grid=grid, target=target, values=values)

    raise ConfigurationError(
        f"unknown initial map {name!r}; choose one of {', '.join(INITIAL_MAP_NAMES)}"
    )


def identity_sphere_map(grid: Grid, product: ProductSpec) -> MapField:
    """The identity map of the round sphere onto an equal-curvature target.

    Lies on the boundary of the area-decreasing class (lambda1 lambda2 = 1),
    so the flow engine refuses it; used by refusal tests.
    """
    if (grid.spec.kind != ROUND_SPHERE or product.sigma2.kind != ROUND_SPHERE
            or grid.spec.curvature != product.sigma2.curvature):
        raise ValidationError("identity map needs equal-curvature sphere factors")
    x = grid.coordinates()
    r = product.sigma2.radius
    values = r * np.stack(
        [np.sin(x[:, 0]) * np.cos(x[:, 1]),
         np.sin(x[:, 0]) * np.sin(x[:, 1]),
         np.cos(x[:, 0])],
        axis=1,
    )
    return MapField(grid=grid, target=product.sigma2, values=values)
