"""Exception types shared across the package.

Every error carries the name of the subsystem that raised it so the CLI can
report provenance alongside the message.
"""


class GraphMCFError(Exception):
    """Base class; `module` names the subsystem that raised the error."""

    module = "graphmcf"

    def __str__(self) -> str:
        return f"[{self.module}] {super().__str__()}"


class DomainError(GraphMCFError):
    """A chart / parameter is outside its admissible domain."""

    module = "manifolds"


class ValidationError(GraphMCFError):
    """Inputs violate a declared precondition (non-orthonormal frame, ...)."""

    module = "manifolds"


class ConfigurationError(GraphMCFError):
    """Bad grid resolution, manifold block, or run configuration."""

    module = "config"

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors) if errors else [message]


class NumericError(GraphMCFError):
    """Non-finite data where finite values are required."""

    module = "field"

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class FormatError(GraphMCFError):
    """Malformed snapshot stream."""

    module = "snapshots"

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class OutOfClassError(GraphMCFError):
    """Initial data outside the strictly area-decreasing class."""

    module = "flow"


class FlowBreakdownError(GraphMCFError):
    """Induced metric degenerated (graph condition lost) during a run."""

    module = "flow"

    def __init__(self, message, node=None, time=None):
        super().__init__(message)
        self.node = node
        self.time = time


class NumericBlowupError(GraphMCFError):
    """Non-finite values appeared after a time step."""

    module = "flow"

    def __init__(self, message, node=None, time=None):
        super().__init__(message)
        self.node = node
        self.time = time
