"""Discretized graph maps: grids, stencil topology, derivatives, normalization.

The domain is discretized on a structured grid whose topology encodes the
factor: tori are periodic in every direction; spheres use a longitude-periodic
grid with colatitude rows staggered off the poles, and stencils that cross a
pole continue onto the antipodal meridian.  Map values are stored per node:
torus targets as the periodic part of the map (an affine background is carried
separately so arbitrary linear parts are representable), sphere targets as
ambient 3-vectors of fixed radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .errors import ConfigurationError, DomainError, NumericError
from .manifolds import FLAT_TORUS, ROUND_SPHERE, ManifoldSpec


@dataclass(frozen=True)
class StencilTables:
    """Flat-index neighbor maps for second-order central stencils.

    plus[d]/minus[d] give the +1/-1 neighbor along axis d for every node.
    diag[(d, e)] holds the four diagonal neighbors (++, +-, -+, --) for the
    mixed derivative in axes d < e.  h_eff[d] is the effective step used in
    derivative denominators: a scalar for uniform axes, or a per-node array
    when azimuthal stencils are widened near sphere poles.
    """

    plus: tuple[np.ndarray, ...]
    minus: tuple[np.ndarray, ...]
    diag: dict
    h_eff: tuple


def _build_torus_tables(shape, spacing, strides=None) -> StencilTables:
    nd = len(shape)
    idx = np.arange(int(np.prod(shape)), dtype=np.int64).reshape(shape)
    if strides is None:
        strides = [1] * nd

    def shifted(offsets):
        out = idx
        for ax, off in enumerate(offsets):
            if off:
                out = np.roll(out, -off, axis=ax)
        return np.ascontiguousarray(out.ravel())

    plus, minus = [], []
    for d in range(nd):
        off = [0] * nd
        off[d] = strides[d]
        plus.append(shifted(off))
        off[d] = -strides[d]
        minus.append(shifted(off))
    diag = {}
    for d in range(nd):
        for e in range(d + 1, nd):
            combos = []
            for sd in (strides[d], -strides[d]):
                for se in (strides[e], -strides[e]):
                    off = [0] * nd
                    off[d], off[e] = sd, se
                    combos.append(shifted(off))
            diag[(d, e)] = tuple(combos)
    h_eff = tuple(spacing[d] * strides[d] for d in range(nd))
    return StencilTables(plus=tuple(plus), minus=tuple(minus), diag=diag, h_eff=h_eff)


def _build_sphere_tables(shape, spacing, phi_strides) -> StencilTables:
    """Neighbor maps for the staggered colatitude/longitude grid on S^2.

    Crossing a pole maps (theta, phi) -> (-theta, phi + pi): the ghost row
    beyond either end is the end row itself with a half-turn longitude shift.
    phi_strides[j] widens the longitude stencil of row j (stride in nodes).
    """
    nt, np_ = shape
    if np_ % 2:
        raise ConfigurationError("sphere grids need an even longitude count")
    half = np_ // 2
    idx = np.arange(nt * np_, dtype=np.int64).reshape(nt, np_)
    cols = np.arange(np_)

    def node(row, col_arr, flip):
        # row may be -1 or nt: reflect through the pole with a half-turn.
        extra = 0
        if row < 0:
            row = -1 - row
            extra = half
        elif row >= nt:
            row = 2 * nt - 1 - row
            extra = half
        return idx[row, (col_arr + extra + flip) % np_]

    def table(dt, dp_per_row):
        rows = [node(j + dt, cols, dp_per_row[j]) for j in range(nt)]
        return np.ascontiguousarray(np.stack(rows).ravel())

    s = np.asarray(phi_strides, dtype=np.int64)
    zero = np.zeros(nt, dtype=np.int64)
    plus = (table(1, zero), table(0, s))
    minus = (table(-1, zero), table(0, -s))
    diag = {
        (0, 1): (
            table(1, s),
            table(1, -s),
            table(-1, s),
            table(-1, -s),
        )
    }
    h_phi = np.repeat(spacing[1] * s.astype(float), np_)
    return StencilTables(
        plus=plus, minus=minus, diag=diag, h_eff=(spacing[0], np.ascontiguousarray(h_phi))
    )


def sphere_phi_strides(shape, spacing, widen: bool) -> np.ndarray:
    """Longitude stencil strides per colatitude row.

    With widening, the stride is chosen so the physical azimuthal step
    sin(theta) * stride * h_phi is at least the colatitude step; this keeps the
    explicit diffusion CFL uniform over the grid instead of collapsing like
    sin(theta)^2 at the pole rows.
    """
    nt, np_ = shape
    if not widen:
        return np.ones(nt, dtype=np.int64)
    h_t, h_p = spacing
    theta = (np.arange(nt) + 0.5) * h_t
    s = np.ceil(h_t / (h_p * np.sin(theta)) - 1e-12).astype(np.int64)
    return np.clip(s, 1, max(1, np_ // 2 - 1))


@dataclass(frozen=True)
class Grid:
    """Structured grid over the domain factor."""

    spec: ManifoldSpec
    shape: tuple[int, ...]
    spacing: tuple[float, ...]

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def nnodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, d: int) -> np.ndarray:
        if self.spec.kind == ROUND_SPHERE and d < self.ndim - 1:
            return (np.arange(self.shape[d]) + 0.5) * self.spacing[d]
        return np.arange(self.shape[d]) * self.spacing[d]

    def coordinates(self) -> np.ndarray:
        """(nnodes, ndim) chart coordinates in row-major node order."""
        axes = [self.axis_coords(d) for d in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def tables(self, widen: bool = False) -> StencilTables:
        key = "_tables_widened" if widen else "_tables_plain"
        cached = self.__dict__.get(key)
        if cached is None:
            if self.spec.kind == FLAT_TORUS:
                cached = _build_torus_tables(self.shape, self.spacing)
            else:
                strides = sphere_phi_strides(self.shape, self.spacing, widen)
                cached = _build_sphere_tables(self.shape, self.spacing, strides)
            self.__dict__[key] = cached
        return cached

    def theta(self) -> np.ndarray:
        """Per-node colatitude (sphere grids)."""
        if self.spec.kind != ROUND_SPHERE:
            raise DomainError("theta is defined on sphere grids only")
        return np.repeat(self.axis_coords(0), self.shape[1])


def make_grid(spec: ManifoldSpec, resolution) -> Grid:
    """Uniform grid respecting the factor topology.

    Torus spacings are period/count per dimension.  Sphere grids (dim 2 only)
    stagger colatitude rows at theta_j = (j + 1/2) pi/N so no node touches a
    pole, and are periodic in longitude.
    """
    resolution = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(resolution) == 1:
        resolution = resolution * spec.dim
    if len(resolution) != spec.dim:
        raise ConfigurationError(
            f"resolution needs {spec.dim} entries, got {len(resolution)}"
        )
    if any(r < 8 for r in resolution):
        raise ConfigurationError(f"resolution {resolution} below the minimum of 8 per dimension")
    if spec.kind == FLAT_TORUS:
        spacing = tuple(p / r for p, r in zip(spec.periods, resolution))
    else:
        if spec.dim != 2:
            raise ConfigurationError(
                "sphere grids are supported for dim 2 only (pointwise geometry "
                "handles dim 3)"
            )
        if resolution[1] % 2:
            raise ConfigurationError("sphere grids need an even longitude count")
        spacing = (math.pi / resolution[0], 2.0 * math.pi / resolution[1])
    return Grid(spec=spec, shape=resolution, spacing=spacing)


@dataclass(frozen=True)
class MapField:
    """Discretized map from the gridded domain into the target factor.

    values: (nnodes, C) array; C = 2 periodic components for torus targets
    (the periodic part of the map), C = 3 ambient components for sphere
    targets (norm fixed to the target radius).  For torus targets an optional
    affine background (A, b) is carried so the represented map is
    A x + b + values; this keeps maps with arbitrary linear part (graphs that
    are periodic over the cover) representable without seam artifacts.
    background has shape (ndim, 2): background[i, a] = dA^a/dx^i.
    """

    grid: Grid
    target: ManifoldSpec
    values: np.ndarray
    background: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=float))
        if self.values.shape != (self.grid.nnodes, self.components):
            raise ConfigurationError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nnodes} nodes, {self.components} components)"
            )
        if self.background is not None:
            bg = np.ascontiguousarray(self.background, dtype=float)
            if self.target.kind != FLAT_TORUS:
                raise ConfigurationError("affine background applies to torus targets only")
            if bg.shape != (self.grid.ndim, 2):
                raise ConfigurationError(f"background shape {bg.shape} != ({self.grid.ndim}, 2)")
            object.__setattr__(self, "background", bg)

    @property
    def components(self) -> int:
        return 2 if self.target.kind == FLAT_TORUS else 3

    def with_values(self, values: np.ndarray) -> "MapField":
        return replace(self, values=values)


@dataclass(frozen=True)
class FlowState:
    """One instant of a simulated flow."""

    time: float
    field: MapField
    step_index: int = 0


def wrap_minimal(delta: np.ndarray, periods) -> np.ndarray:
    """Minimal-image representative of per-component differences."""
    periods = np.asarray(periods, dtype=float)
    return delta - periods * np.floor(delta / periods + 0.5)


@dataclass
class Derivatives:
    """Central-difference chart derivatives of a field's stored values.

    d1[i] is the first derivative along axis i, d2[i][j] the (symmetric)
    second derivative; all arrays are (nnodes, C).  Torus-target differences
    are taken minimal-image so stored-value wraps never leak into stencils.
    """

    d1: list
    d2: list


def field_derivatives(fieldmap: MapField, tables: StencilTables | None = None) -> Derivatives:
    if tables is None:
        tables = fieldmap.grid.tables()
    u = fieldmap.values
    nd = fieldmap.grid.ndim
    wrap = fieldmap.target.kind == FLAT_TORUS
    periods = np.asarray(fieldmap.target.periods, dtype=float) if wrap else None

    def diff(nbr):
        d = u[nbr] - u
        return wrap_minimal(d, periods) if wrap else d

    def h_as_col(h):
        return h if np.isscalar(h) else h[:, None]

    d1 = [None] * nd
    d2 = [[None] * nd for _ in range(nd)]
    dplus, dminus = [], []
    for d in range(nd):
        dp = diff(tables.plus[d])
        dm = diff(tables.minus[d])
        dplus.append(dp)
        dminus.append(dm)
        h = h_as_col(tables.h_eff[d])
        d1[d] = (dp - dm) / (2.0 * h)
        d2[d][d] = (dp + dm) / (h * h)
    for (d, e), (pp, pm, mp, mm) in tables.diag.items():
        hd = h_as_col(tables.h_eff[d])
        he = h_as_col(tables.h_eff[e])
        mixed = (diff(pp) - diff(pm) - diff(mp) + diff(mm)) / (4.0 * hd * he)
        d2[d][e] = mixed
        d2[e][d] = mixed
    return Derivatives(d1=d1, d2=d2)


def sphere_tangent_basis(values: np.ndarray, radius: float):
    """Deterministic orthonormal tangent basis at each sphere-target value.

    Returns (t1, t2), each (nnodes, 3), with t2 = unit-radial x t1.  The
    helper axis is the ambient axis least aligned with the radial direction
    (first index on ties), so the construction is reproducible.
    """
    fh = values / radius
    pick = np.argmin(np.abs(fh), axis=1)
    h = np.zeros_like(values)
    h[np.arange(values.shape[0]), pick] = 1.0
    t1 = h - (np.sum(h * fh, axis=1, keepdims=True)) * fh
    t1 = t1 / np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(fh, t1)
    return t1, t2


@dataclass(frozen=True)
class DifferentialData:
    """Per-node derivative record of the represented map.

    df: (ndim, 2) intrinsic differential — rows are domain chart directions,
    columns an orthonormal basis of the target tangent plane (torus chart
    components, or the deterministic tangent basis for sphere targets).
    second_derivs: (ndim, ndim, C) raw second derivatives of the stored
    representation (chart components for torus targets, ambient components
    for sphere targets), symmetric in the derivative indices.
    """

    df: np.ndarray
    second_derivs: np.ndarray


def differential_at(fieldmap: MapField, node: int) -> DifferentialData:
    """Second-order central-difference differential of the map at one node."""
    u = fieldmap.values
    if not np.all(np.isfinite(u)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(u), axis=1))[0])
        raise NumericError(f"non-finite field values at node {bad}", node=bad)
    deriv = field_derivatives(fieldmap)
    nd = fieldmap.grid.ndim
    d1 = np.stack([deriv.d1[d][node] for d in range(nd)])
    d2 = np.stack(
        [np.stack([deriv.d2[d][e][node] for e in range(nd)]) for d in range(nd)]
    )
    if fieldmap.target.kind == FLAT_TORUS:
        df = d1 if fieldmap.background is None else fieldmap.background + d1
        return DifferentialData(df=df, second_derivs=d2)
    radius = fieldmap.target.radius
    t1, t2 = sphere_tangent_basis(u[node : node + 1], radius)
    df = np.stack([d1 @ t1[0], d1 @ t2[0]], axis=1)
    return DifferentialData(df=df, second_derivs=d2)


def chart_normalize(fieldmap: MapField) -> MapField:
    """Return the field with values put back on the target chart/radius.

    Torus values are wrapped into the fundamental domain [0, L); sphere
    values are rescaled to the target radius.  Idempotent: values already in
    range (to a few ulp) are returned unchanged.
    """
    u = fieldmap.values
    if fieldmap.target.kind == FLAT_TORUS:
        periods = np.asarray(fieldmap.target.periods, dtype=float)
        wrapped = u - periods * np.floor(u / periods)
        wrapped = np.where(wrapped == periods, 0.0, wrapped)
        return fieldmap.with_values(wrapped)
    radius = fieldmap.target.radius
    norms = np.sqrt(np.sum(u * u, axis=1))
    if np.any(norms < 1e-8):
        bad = int(np.argmin(norms))
        raise NumericError(
            f"sphere value with norm {norms[bad]:.3e} at node {bad}: radial "
            f"projection undefined",
            node=bad,
        )
    scale = np.where(np.abs(norms - radius) <= 4.0 * np.finfo(float).eps * radius,
                     1.0, radius / norms)
    return fieldmap.with_values(u * scale[:, None])
