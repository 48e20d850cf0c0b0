"""Sectioned key=value run configuration: parsing, validation, serialization.

The format is deliberately strict: unknown sections or keys and duplicate
keys are rejected, and validation reports every error at once with line
numbers rather than stopping at the first.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigurationError
from .manifolds import FLAT_TORUS, ROUND_SPHERE, ManifoldSpec, ProductSpec

_KNOWN_KEYS = {
    "manifold": {
        "sigma1_kind", "sigma1_dim", "sigma1_periods", "sigma1_curvature",
        "sigma2_kind", "sigma2_periods", "sigma2_curvature",
    },
    "grid": {"resolution"},
    "flow": {"cfl_safety", "t_max", "stop_a_norm", "stop_eta1", "monitor_interval"},
    "initial": {"name", "a", "b", "eps", "q0"},
    "output": {"directory", "snapshot_every", "verify"},
}


@dataclass
class RunConfig:
    product: ProductSpec
    resolution: tuple[int, ...]
    cfl_safety: float = 0.25
    t_max: float = 10.0
    stop_A_norm: float = 1e-8
    stop_eta1: float = 1e-4
    monitor_interval: int = 20
    initial_name: str = "constant"
    initial_params: dict = dc_field(default_factory=dict)
    out_dir: str = "out"
    snapshot_every: int = 0
    verify: bool = False


def _parse_floats(text):
    return tuple(float(x) for x in text.split(","))


def _parse_ints(text):
    return tuple(int(x) for x in text.split(","))


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(source_text: str) -> RunConfig:
    """Parse and fully validate a sectioned key=value configuration.

    Raises ConfigurationError carrying the complete list of problems.
    """
    errors: list[str] = []
    entries: dict[tuple[str, str], str] = {}
    seen_lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(source_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _KNOWN_KEYS:
                errors.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"line {lineno}: expected key=value, got {line!r}")
            continue
        if section is None:
            errors.append(f"line {lineno}: key outside a known section")
            continue
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS[section]:
            errors.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
            continue
        if (section, key) in entries:
            errors.append(
                f"line {lineno}: duplicate key {key!r} in section [{section}] "
                f"(first at line {seen_lines[(section, key)]})"
            )
            continue
        entries[(section, key)] = value
        seen_lines[(section, key)] = lineno

    def take(section, key, default=None):
        return entries.pop((section, key), default)

    def typed(section, key, conv, default):
        text = take(section, key)
        if text is None:
            return default
        try:
            return conv(text)
        except ValueError as exc:
            errors.append(f"[{section}] {key}: {exc}")
            return default

    # --- manifold block ---
    def build_factor(prefix, default_dim):
        kind = take("manifold", f"{prefix}_kind")
        if kind is None:
            errors.append(f"[manifold] {prefix}_kind is required")
            return None
        dim = typed("manifold", f"{prefix}_dim", int, default_dim)
        periods = take("manifold", f"{prefix}_periods")
        curvature = take("manifold", f"{prefix}_curvature")
        try:
            if kind == FLAT_TORUS:
                if curvature is not None:
                    raise ConfigurationError("flat torus takes no curvature")
                per = _parse_floats(periods) if periods else tuple([2.0 * np.pi] * dim)
                return ManifoldSpec(kind=kind, dim=dim, periods=per)
            if kind == ROUND_SPHERE:
                if periods is not None:
                    raise ConfigurationError("sphere takes no periods")
                if curvature is None:
                    raise ConfigurationError("sphere needs a curvature")
                return ManifoldSpec(kind=kind, dim=dim, curvature=float(curvature))
            raise ConfigurationError(f"unknown kind {kind!r}")
        except (ConfigurationError, ValueError) as exc:
            errors.append(f"[manifold] {prefix}: {exc}")
            return None

    sigma1 = build_factor("sigma1", 2)
    sigma2 = build_factor("sigma2", 2)
    product = None
    if sigma1 is not None and sigma2 is not None:
        try:
            product = ProductSpec(sigma1=sigma1, sigma2=sigma2)
        except ConfigurationError as exc:
            errors.append(f"[manifold] {exc}")

    # --- grid block ---
    resolution = typed("grid", "resolution", _parse_ints, None)
    if resolution is None:
        errors.append("[grid] resolution is required")
    elif sigma1 is not None:
        if len(resolution) == 1:
            resolution = resolution * sigma1.dim
        if len(resolution) != sigma1.dim:
            errors.append(
                f"[grid] resolution needs {sigma1.dim} entries, got {len(resolution)}"
            )
        elif any(r < 8 for r in resolution):
            errors.append("[grid] resolution below the minimum of 8 per dimension")

    # --- flow block ---
    cfl = typed("flow", "cfl_safety", float, 0.25)
    t_max = typed("flow", "t_max", float, 10.0)
    stop_a = typed("flow", "stop_a_norm", float, 1e-8)
    stop_eta1 = typed("flow", "stop_eta1", float, 1e-4)
    interval = typed("flow", "monitor_interval", int, 20)
    if not 0.0 < cfl <= 1.0:
        errors.append(f"[flow] cfl_safety {cfl} outside (0, 1]")
    if t_max <= 0:
        errors.append("[flow] t_max must be positive")
    if stop_a <= 0 or stop_eta1 <= 0:
        errors.append("[flow] stop thresholds must be positive")
    if interval < 1:
        errors.append("[flow] monitor_interval must be >= 1")

    # --- initial block ---
    name = take("initial", "name", "constant")
    params: dict = {}
    for key, conv in (("a", _parse_floats), ("b", _parse_floats),
                      ("q0", _parse_floats), ("eps", float)):
        text = take("initial", key)
        if text is not None:
            try:
                params[key] = conv(text)
            except ValueError as exc:
                errors.append(f"[initial] {key}: {exc}")
    from .initial_maps import INITIAL_MAP_NAMES

    if name not in INITIAL_MAP_NAMES:
        errors.append(f"[initial] unknown map name {name!r}")

    # --- output block ---
    out_dir = take("output", "directory", "out")
    snapshot_every = typed("output", "snapshot_every", int, 0)
    verify = typed("output", "verify", _parse_bool, False)
    if snapshot_every < 0:
        errors.append("[output] snapshot_every must be >= 0")

    if errors:
        raise ConfigurationError(
            "configuration invalid:\n  " + "\n  ".join(errors), errors=errors
        )
    return RunConfig(
        product=product,
        resolution=tuple(resolution),
        cfl_safety=cfl,
        t_max=t_max,
        stop_A_norm=stop_a,
        stop_eta1=stop_eta1,
        monitor_interval=interval,
        initial_name=name,
        initial_params=params,
        out_dir=out_dir,
        snapshot_every=snapshot_every,
        verify=verify,
    )


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to the sectioned text format (round-trips)."""
    lines = ["[manifold]"]

    def factor_lines(prefix, spec):
        lines.append(f"{prefix}_kind = {spec.kind}")
        lines.append(f"{prefix}_dim = {spec.dim}")
        if spec.kind == FLAT_TORUS:
            lines.append(f"{prefix}_periods = " + ",".join(repr(p) for p in spec.periods))
        else:
            lines.append(f"{prefix}_curvature = {spec.curvature!r}")

    factor_lines("sigma1", cfg.product.sigma1)
    factor_lines("sigma2", cfg.product.sigma2)
    lines.append("")
    lines.append("[grid]")
    lines.append("resolution = " + ",".join(str(r) for r in cfg.resolution))
    lines.append("")
    lines.append("[flow]")
    lines.append(f"cfl_safety = {cfg.cfl_safety!r}")
    lines.append(f"t_max = {cfg.t_max!r}")
    lines.append(f"stop_a_norm = {cfg.stop_A_norm!r}")
    lines.append(f"stop_eta1 = {cfg.stop_eta1!r}")
    lines.append(f"monitor_interval = {cfg.monitor_interval}")
    lines.append("")
    lines.append("[initial]")
    lines.append(f"name = {cfg.initial_name}")
    for key in ("a", "b", "q0"):
        if key in cfg.initial_params:
            lines.append(f"{key} = " + ",".join(repr(v) for v in cfg.initial_params[key]))
    if "eps" in cfg.initial_params:
        lines.append(f"eps = {cfg.initial_params['eps']!r}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"directory = {cfg.out_dir}")
    lines.append(f"snapshot_every = {cfg.snapshot_every}")
    lines.append(f"verify = {'true' if cfg.verify else 'false'}")
    return "\n".join(lines) + "\n"
