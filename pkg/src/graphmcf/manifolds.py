"""Exact metric, connection, and curvature data for the supported factors.

Supported factors are flat tori (any periods) and round spheres of constant
positive curvature; the ambient space is their Riemannian product.  Tangent
vectors of the product are represented as concatenated component arrays
``[v1 | v2]`` in orthonormal bases of the two factor tangent spaces, so the
product metric on components is the standard dot product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, ValidationError

FLAT_TORUS = "flat-torus"
ROUND_SPHERE = "round-sphere"


@dataclass(frozen=True)
class ManifoldSpec:
    """One factor: a flat torus with given periods or a round sphere.

    kind       "flat-torus" or "round-sphere"
    dim        2 or 3 for the domain factor, 2 for the target factor
    periods    per-dimension periods (torus only)
    curvature  sectional curvature k > 0 (sphere only); radius is 1/sqrt(k)
    """

    kind: str
    dim: int
    periods: tuple[float, ...] | None = None
    curvature: float | None = None

    def __post_init__(self):
        if self.kind not in (FLAT_TORUS, ROUND_SPHERE):
            raise ConfigurationError(f"unknown manifold kind {self.kind!r}")
        if self.dim < 2 or self.dim > 3:
            raise ConfigurationError(f"unsupported dimension {self.dim} (need 2 or 3)")
        if self.kind == FLAT_TORUS:
            if self.curvature is not None:
                raise ConfigurationError("flat torus carries no curvature field")
            if self.periods is None or len(self.periods) != self.dim:
                raise ConfigurationError("torus needs one period per dimension")
            object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
            if any(p <= 0 for p in self.periods):
                raise ConfigurationError("torus periods must be positive")
        else:
            if self.periods is not None:
                raise ConfigurationError("sphere carries no periods")
            if self.curvature is None or self.curvature <= 0:
                raise ConfigurationError("sphere needs curvature k > 0")
            object.__setattr__(self, "curvature", float(self.curvature))

    @property
    def curvature_value(self) -> float:
        """Sectional curvature (0 for the flat torus)."""
        return 0.0 if self.kind == FLAT_TORUS else float(self.curvature)

    @property
    def radius(self) -> float:
        if self.kind != ROUND_SPHERE:
            raise DomainError("radius is defined for spheres only")
        return 1.0 / math.sqrt(self.curvature)

    def describe(self) -> str:
        """Compact single-token description used by snapshot headers."""
        if self.kind == FLAT_TORUS:
            pp = ",".join(repr(p) for p in self.periods)
            return f"{FLAT_TORUS};dim={self.dim};periods={pp}"
        return f"{ROUND_SPHERE};dim={self.dim};curvature={self.curvature!r}"

    @classmethod
    def parse(cls, token: str) -> "ManifoldSpec":
        parts = token.strip().split(";")
        kind = parts[0]
        fields: dict[str, str] = {}
        for part in parts[1:]:
            key, _, val = part.partition("=")
            fields[key] = val
        try:
            dim = int(fields["dim"])
            if kind == FLAT_TORUS:
                periods = tuple(float(x) for x in fields["periods"].split(","))
                return cls(kind=kind, dim=dim, periods=periods)
            return cls(kind=kind, dim=dim, curvature=float(fields["curvature"]))
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad manifold token {token!r}: {exc}") from exc


@dataclass(frozen=True)
class ProductSpec:
    """The ambient product: domain factor sigma1 (dim n) times target sigma2 (dim 2)."""

    sigma1: ManifoldSpec
    sigma2: ManifoldSpec

    def __post_init__(self):
        if self.sigma2.dim != 2:
            raise ConfigurationError("target factor must be two-dimensional")
        k1 = self.sigma1.curvature_value
        k2 = self.sigma2.curvature_value
        if k1 < abs(k2):
            raise ConfigurationError(
                f"curvature hypothesis k1 >= |k2| fails (k1={k1}, k2={k2})"
            )

    @property
    def n(self) -> int:
        return self.sigma1.dim

    @property
    def ambient_dim(self) -> int:
        return self.sigma1.dim + 2


@dataclass(frozen=True)
class MetricData:
    """Chart metric data at a point: g, its inverse, Christoffels, sqrt(det g).

    christoffel[k, i, j] holds Gamma^k_ij and is symmetric in (i, j); for the
    flat torus it vanishes identically.
    """

    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray
    sqrt_det: float


_POLE_BAND = 1e-12


def geometry_at(spec: ManifoldSpec, point) -> MetricData:
    """Exact metric data of one factor at chart coordinates `point`.

    Torus charts are global Cartesian coordinates (flat metric).  Sphere
    charts are colatitude/longitude coordinates (hyperspherical for dim 3);
    each colatitude must lie strictly inside (0, pi).
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    d = spec.dim
    if spec.kind == FLAT_TORUS:
        eye = np.eye(d)
        return MetricData(g=eye, g_inv=eye.copy(), christoffel=np.zeros((d, d, d)), sqrt_det=1.0)

    if point.shape[0] < d:
        raise DomainError(f"sphere chart point needs {d} coordinates")
    r2 = 1.0 / spec.curvature
    for axis in range(d - 1):
        th = point[axis]
        if not (_POLE_BAND < th < math.pi - _POLE_BAND):
            raise DomainError(
                f"colatitude coordinate {axis} = {th!r} is outside the pole "
                f"exclusion band (0, pi)"
            )
    gamma = np.zeros((d, d, d))
    if d == 2:
        th = point[0]
        s, c = math.sin(th), math.cos(th)
        g = np.diag([r2, r2 * s * s])
        gamma[0, 1, 1] = -s * c
        gamma[1, 0, 1] = gamma[1, 1, 0] = c / s
    else:
        t1, t2 = point[0], point[1]
        s1, c1 = math.sin(t1), math.cos(t1)
        s2, c2 = math.sin(t2), math.cos(t2)
        g = np.diag([r2, r2 * s1 * s1, r2 * s1 * s1 * s2 * s2])
        gamma[0, 1, 1] = -s1 * c1
        gamma[0, 2, 2] = -s1 * c1 * s2 * s2
        gamma[1, 0, 1] = gamma[1, 1, 0] = c1 / s1
        gamma[1, 2, 2] = -s2 * c2
        gamma[2, 0, 2] = gamma[2, 2, 0] = c1 / s1
        gamma[2, 1, 2] = gamma[2, 2, 1] = c2 / s2
    g_inv = np.diag(1.0 / np.diag(g))
    return MetricData(g=g, g_inv=g_inv, christoffel=gamma, sqrt_det=math.sqrt(np.prod(np.diag(g))))


def _split(product: ProductSpec, v: np.ndarray):
    n = product.n
    return v[:n], v[n:]


def riemann(product: ProductSpec, x, y, z, w) -> float:
    """Curvature tensor of the product on component vectors.

    Convention: per factor of constant curvature k,
        R(X, Y, Z, W) = k (<X,Z><Y,W> - <X,W><Y,Z>),
    so the sectional curvature of an orthonormal pair (u, v) inside one
    factor is R(u, v, u, v) = k.  This is the convention under which the
    closed-form contraction used by the sphere-regime analysis comes out
    with positive sign; the cross-module oracle test pins it down.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    total = 0.0
    for factor, (xv, yv, zv, wv) in zip(
        (product.sigma1, product.sigma2),
        zip(_split(product, x), _split(product, y), _split(product, z), _split(product, w)),
    ):
        k = factor.curvature_value
        if k != 0.0:
            total += k * (np.dot(xv, zv) * np.dot(yv, wv) - np.dot(xv, wv) * np.dot(yv, zv))
    return float(total)


def riemann_contraction(product: ProductSpec, e_alpha, frame, i: int) -> float:
    """Sum_k R(e_alpha, e_k, e_k, e_i) over an orthonormal tangent frame.

    `frame` is a sequence of n component vectors orthonormal for the product
    metric; `e_alpha` must be unit and orthogonal to all of them; `i` is the
    0-based index of the distinguished frame vector.  Serves as the
    independent oracle for the closed-form curvature term.
    """
    frame = [np.asarray(e, dtype=float) for e in frame]
    e_alpha = np.asarray(e_alpha, dtype=float)
    vecs = np.stack(frame + [e_alpha])
    gram = vecs @ vecs.T
    dev = float(np.max(np.abs(gram - np.eye(len(vecs)))))
    if dev > 1e-10:
        raise ValidationError(
            f"frame + normal vector not orthonormal (max Gram deviation {dev:.3e})"
        )
    if not 0 <= i < len(frame):
        raise ValidationError(f"frame index {i} out of range")
    return float(sum(riemann(product, e_alpha, ek, ek, frame[i]) for ek in frame))
