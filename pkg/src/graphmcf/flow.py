"""Time evolution of the graph map by nonparametric mean curvature flow.

The graph is advanced in graph coordinates: the coordinate velocity is the
quasilinear trace g^{ij} (Hess f)_{ij} (with the target-sphere correction for
extrinsically stored values), whose normal component equals the mean
curvature vector, so the swept surface is the mean curvature flow while the
graph condition holds.  Stepping is explicit two-stage Runge-Kutta (midpoint)
with a CFL-limited, fixed time step chosen from the initial state, which is
the steepest state along a decaying run.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import diagnostics, kernels
from .analysis import FieldAnalysis
from .errors import (
    ConfigurationError,
    FlowBreakdownError,
    NumericBlowupError,
    OutOfClassError,
    ValidationError,
)
from .field import FlowState, MapField, chart_normalize, make_grid
from .manifolds import FLAT_TORUS, ProductSpec

AREA_DECREASING_CONDITION = "1 - |lambda_1 lambda_2| > 0"


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters for the flow engine."""

    product: ProductSpec
    resolution: tuple[int, ...]
    cfl_safety: float = 0.25
    t_max: float = 10.0
    stop_A_norm: float = 1e-8
    stop_eta1: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ConfigurationError(f"cfl_safety {self.cfl_safety} outside (0, 1]")
        if self.stop_A_norm <= 0 or self.stop_eta1 <= 0 or self.t_max <= 0:
            raise ConfigurationError("thresholds and t_max must be positive")


@dataclass
class MonitorPlan:
    """Cadence and instrumentation for a run."""

    interval: int = 20
    verify: bool = False
    snapshot_every: int = 0
    out_dir: str | None = None
    max_steps: int | None = None
    progress: object = None

    def __post_init__(self):
        if self.interval < 1:
            raise ConfigurationError("monitor interval must be >= 1")


@dataclass
class RunResult:
    """Trajectory summary: final state, stop reason, and the time series."""

    final_state: FlowState
    stop_reason: str
    rows: list
    dt: float
    backend: str
    verify_rows: list = dc_field(default_factory=list)


def _check_product(fieldmap: MapField, product: ProductSpec) -> None:
    if fieldmap.grid.spec != product.sigma1 or fieldmap.target != product.sigma2:
        raise ValidationError("field factors do not match the product spec")


def mcf_rhs(state: FlowState, product: ProductSpec, *, widen: bool = True,
            backend: str | None = None) -> np.ndarray:
    """Coordinate velocity of the graph map (per-node target vectors)."""
    fieldmap = state.field if isinstance(state, FlowState) else state
    _check_product(fieldmap, product)
    ctx = kernels.build_context(fieldmap.grid, fieldmap.target, widen=widen)
    kernels.set_background(ctx, fieldmap.background)
    rhs, min_det, node = kernels.rhs(fieldmap.values, ctx, backend)
    if not (min_det > 0.0):
        t = state.time if isinstance(state, FlowState) else 0.0
        raise FlowBreakdownError(
            f"graph degenerating: induced metric determinant {min_det:.3e} at "
            f"node {node}, time {t!r}",
            node=node,
            time=t,
        )
    return rhs


def stable_dt(state: FlowState, product: ProductSpec, cfl_safety: float = 0.25,
              *, widen: bool = True) -> float:
    """CFL-limited explicit step.

    dt = cfl * min over nodes and directions of
         (physical spacing)^2 / (2 n lambda_max(g relative to g1)),
    where the relative eigenvalues of the induced metric are 1 + lambda_i^2,
    so steeper maps get strictly smaller steps.
    """
    fieldmap = state.field if isinstance(state, FlowState) else state
    _check_product(fieldmap, product)
    ana = FieldAnalysis(fieldmap, product)
    rel_max = 1.0 + ana.lambdas[0] ** 2
    grid = fieldmap.grid
    two_n = 2.0 * grid.ndim
    if grid.spec.kind == FLAT_TORUS:
        h_min_sq = min(h * h for h in grid.spacing)
        dt = h_min_sq / (two_n * float(np.max(rel_max)))
    else:
        tables = grid.tables(widen=widen)
        r1 = grid.spec.radius
        h_theta_sq = (r1 * grid.spacing[0]) ** 2
        h_phi_phys = r1 * np.sin(grid.theta()) * np.asarray(tables.h_eff[1])
        per_node = np.minimum(h_theta_sq, h_phi_phys * h_phi_phys) / (two_n * rel_max)
        dt = float(np.min(per_node))
    dt = cfl_safety * dt
    if not dt > 0.0:
        raise FlowBreakdownError("degenerate metric: no positive stable step")
    return dt


def _step_values(values: np.ndarray, ctx: dict, dt: float, backend: str | None):
    """One RK2 (midpoint) update of the raw value array."""
    k1, det1, node1 = kernels.rhs(values, ctx, backend)
    if not (det1 > 0.0):
        raise FlowBreakdownError(
            f"graph degenerating at node {node1} (relative det {det1:.3e})", node=node1
        )
    mid = values + (0.5 * dt) * k1
    k2, det2, node2 = kernels.rhs(mid, ctx, backend)
    if not (det2 > 0.0):
        raise FlowBreakdownError(
            f"graph degenerating at node {node2} (relative det {det2:.3e})", node=node2
        )
    return values + dt * k2


def advance(state: FlowState, dt: float, product: ProductSpec, *,
            check: bool = True, backend: str | None = None,
            _ctx: dict | None = None) -> FlowState:
    """Explicit RK2 (midpoint) step followed by chart normalization.

    Deterministic: identical inputs produce bit-identical outputs.  With
    check=True the step is validated against the current stable step (a full
    sweep); long runs validate once up front and audit periodically instead.
    """
    fieldmap = state.field
    if check:
        limit = stable_dt(state, product, 1.0)
        if dt > limit * (1.0 + 1e-12):
            raise ValidationError(
                f"dt {dt!r} exceeds the stable step {limit!r} for this state"
            )
    ctx = _ctx
    if ctx is None:
        _check_product(fieldmap, product)
        ctx = kernels.build_context(fieldmap.grid, fieldmap.target, widen=True)
        kernels.set_background(ctx, fieldmap.background)
    try:
        new_values = _step_values(fieldmap.values, ctx, dt, backend)
    except FlowBreakdownError as exc:
        exc.time = state.time
        raise
    finite = np.isfinite(new_values)
    if not finite.all():
        node = int(np.flatnonzero(~finite.all(axis=1))[0])
        raise NumericBlowupError(
            f"non-finite values after step at node {node}", node=node, time=state.time
        )
    new_field = chart_normalize(fieldmap.with_values(new_values))
    return FlowState(time=state.time + dt, field=new_field, step_index=state.step_index + 1)


def run(config: FlowConfig, initial: MapField, monitors: MonitorPlan | None = None,
        *, backend: str | None = None) -> RunResult:
    """Drive the flow to a stop condition, monitoring invariants.

    The initial field must lie strictly in the area-decreasing class
    (min eta > 0) or the run is refused before stepping.  Stops on
    t >= t_max, on max |A|^2 < stop_A_norm (totally geodesic limit), or on
    1 - min eta1 < stop_eta1 (constant-map limit).
    """
    monitors = monitors or MonitorPlan()
    _check_product(initial, config.product)
    if initial.grid.shape != tuple(config.resolution):
        raise ConfigurationError(
            f"field resolution {initial.grid.shape} != configured {tuple(config.resolution)}"
        )
    initial = chart_normalize(initial)
    ana0 = FieldAnalysis(initial, config.product)
    min_eta0 = float(np.min(ana0.eta))
    if not min_eta0 > 0.0:
        node = int(np.argmin(ana0.eta))
        raise OutOfClassError(
            f"initial map is not strictly area decreasing: the condition "
            f"{AREA_DECREASING_CONDITION} fails at node {node} "
            f"(min eta = {min_eta0:.6e})"
        )
    state = FlowState(time=0.0, field=initial, step_index=0)
    dt = stable_dt(state, config.product, config.cfl_safety)
    ctx = kernels.build_context(initial.grid, initial.target, widen=True)
    kernels.set_background(ctx, initial.background)

    is_sphere_regime = config.product.sigma1.curvature_value > 0.0
    rows: list = []
    verify_rows: list = []
    window: list[FlowState] = [state]
    pending: tuple | None = None  # (row, monitored state) awaiting one more step

    def emit_snapshot(st: FlowState, tag: str) -> None:
        if monitors.out_dir is not None:
            from .snapshots import snapshot_write

            snapshot_write(st, f"{monitors.out_dir}/snapshot_{tag}.txt")

    def monitor_state(st: FlowState):
        row = diagnostics.monitor(st, config.product)
        rows.append(row)
        if monitors.progress is not None:
            monitors.progress(row)
        return row

    def finish_pending() -> None:
        nonlocal pending
        if pending is None or not monitors.verify:
            pending = None
            return
        row, idx = pending
        pending = None
        if idx < 1 or len(window) < 3:
            return
        triple = window[-3:]
        report = diagnostics.verify_states(triple, config.product)
        if report is not None:
            verify_rows.append(report)
            if is_sphere_regime:
                row.residual_49 = report.min_slack
            else:
                row.residual_44 = report.max_abs_residual

    row0 = monitor_state(state)
    stop_reason = None
    if row0.max_A_norm_sq < config.stop_A_norm:
        stop_reason = "A-norm threshold"
    elif 1.0 - row0.min_eta1 < config.stop_eta1:
        stop_reason = "eta1 threshold"
    step_cap = monitors.max_steps

    try:
        while stop_reason is None:
            state = advance(state, dt, config.product, check=False, backend=backend, _ctx=ctx)
            window.append(state)
            if len(window) > 3:
                window.pop(0)
            s = state.step_index
            if pending is not None:
                finish_pending()
            if monitors.snapshot_every and s % monitors.snapshot_every == 0:
                emit_snapshot(state, f"{s:08d}")
            if s % monitors.interval == 0:
                row = monitor_state(state)
                pending = (row, s)
                # Audit the frozen step against the current state; flows that
                # steepen past the safety margin are stopped, not mis-stepped.
                limit = stable_dt(state, config.product, 1.0)
                if dt > limit:
                    raise FlowBreakdownError(
                        f"flow steepened past the CFL margin (dt {dt!r} > {limit!r})",
                        time=state.time,
                    )
                if row.max_A_norm_sq < config.stop_A_norm:
                    stop_reason = "A-norm threshold"
                elif 1.0 - row.min_eta1 < config.stop_eta1:
                    stop_reason = "eta1 threshold"
                elif state.time >= config.t_max:
                    stop_reason = "t_max"
            if stop_reason is None and step_cap is not None and s >= step_cap:
                stop_reason = "max-steps"
                if s % monitors.interval != 0:
                    monitor_state(state)
    except (FlowBreakdownError, NumericBlowupError):
        emit_snapshot(state, "last_good")
        raise
    if pending is not None and stop_reason != "max-steps":
        # One extra step so the last monitored row can be verified too.
        if monitors.verify:
            try:
                extra = advance(state, dt, config.product, check=False,
                                backend=backend, _ctx=ctx)
                window.append(extra)
                if len(window) > 3:
                    window.pop(0)
                finish_pending()
            except (FlowBreakdownError, NumericBlowupError):
                pass
    emit_snapshot(state, "final")
    return RunResult(
        final_state=state,
        stop_reason=stop_reason,
        rows=rows,
        dt=dt,
        backend=kernels.backend_name(backend),
        verify_rows=verify_rows,
    )
