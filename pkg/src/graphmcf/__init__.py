"""Mean curvature flow of graphical submanifolds of product manifolds.

Simulates the nonparametric flow of graph maps between flat tori and round
spheres, monitors the Gauss-map functionals that govern the area-decreasing
condition, and numerically verifies the evolution identities and
inequalities those functionals satisfy along the flow.
"""

from .analysis import FieldAnalysis
from .diagnostics import (
    TimeSeriesRow,
    VerifierReport,
    emit_timeseries,
    laplace_beltrami,
    measured_order,
    monitor,
    read_timeseries,
    verify_evolution_flat,
    verify_inequality_sphere,
)
from .errors import (
    ConfigurationError,
    DomainError,
    FlowBreakdownError,
    FormatError,
    GraphMCFError,
    NumericBlowupError,
    NumericError,
    OutOfClassError,
    ValidationError,
)
from .field import (
    DifferentialData,
    FlowState,
    Grid,
    MapField,
    chart_normalize,
    differential_at,
    make_grid,
)
from .flow import FlowConfig, MonitorPlan, RunResult, advance, mcf_rhs, run, stable_dt
from .gauss import (
    AdaptedFrame,
    CurvatureTerms,
    GaussFunctionals,
    SecondFormData,
    SingularData,
    adapted_frame,
    curvature_term_closed,
    gauss_functionals,
    second_fundamental_form,
    singular_values,
    star_omega,
)
from .initial_maps import identity_sphere_map, initial_map
from .kernels import BACKEND
from .manifolds import (
    ManifoldSpec,
    MetricData,
    ProductSpec,
    geometry_at,
    riemann,
    riemann_contraction,
)
from .snapshots import snapshot_read, snapshot_write

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
