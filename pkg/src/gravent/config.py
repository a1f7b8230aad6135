"""Run configuration: a versioned YAML document.

Example::

    schema_version: 1
    mode: closed_form            # closed_form | simulate | sweep | verify | relativistic
    groups:                      # or an ``experiment`` block (m, d, alpha, beta, T[, G, hbar, c])
      phi: 1.0e-3
      epsilon: 0.02
      xi: 0.0
      Omega: 0.0
      omegaT: 1.0
    formulas: [unified, oscillator_limit]
    numerics:
      final_points: 96
      nodes: 64
      trajectory_kind: straight_line
      order_Omega: 0
      ret: 0
      kin: 0
      oracle: none               # none | expanded_second_order | full_inverse_separation
      split_steps: 100
      check_convergence: false
      tolerance: 1.0e-8
    sweep:
      axes:
        - {name: omegaT, min: 0.5, max: 2.0, count: 4, scale: linear}
      outputs: [unified]
    output: out
    threads: 1

Validation errors carry the YAML line of the offending field.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .closed_form import FORMULAS
from .params import DimensionlessGroups, ExperimentParams, InvalidParameterError, derive_groups

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "SweepAxis",
    "Numerics",
    "RunConfig",
    "load_config",
    "parse_config",
]

SCHEMA_VERSION = 1
MODES = ("closed_form", "simulate", "sweep", "verify", "relativistic")
GROUP_NAMES = ("phi", "epsilon", "xi", "Omega", "omegaT")
EXPERIMENT_NAMES = ("m", "d", "alpha", "beta", "T", "G", "hbar", "c")
ORACLES = ("none", "expanded_second_order", "full_inverse_separation")
SIM_OUTPUTS = ("simulated",)


class ConfigError(ValueError):
    def __init__(self, message, field_name=None, line=None):
        self.field = field_name
        self.line = line
        where = ""
        if field_name:
            where = f"{field_name}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"

    def values(self) -> list:
        if self.count == 1:
            return [float(self.min)]
        if self.scale == "log":
            lo, hi = math.log10(self.min), math.log10(self.max)
            return [10 ** (lo + (hi - lo) * k / (self.count - 1)) for k in range(self.count)]
        return [self.min + (self.max - self.min) * k / (self.count - 1) for k in range(self.count)]


@dataclass(frozen=True)
class Numerics:
    final_points: int = 96
    nodes: int = 64
    trajectory_kind: str = "straight_line"
    order_Omega: int = 0
    ret: int = 0
    kin: int = 0
    oracle: str = "none"
    split_steps: int = 100
    check_convergence: bool = False
    tolerance: float = 1e-8


@dataclass(frozen=True)
class RunConfig:
    mode: str
    groups: Optional[dict] = None
    experiment: Optional[dict] = None
    formulas: tuple = ("unified",)
    numerics: Numerics = Numerics()
    sweep_axes: tuple = ()
    sweep_outputs: tuple = ("unified",)
    output: str = "out"
    threads: int = 1
    schema_version: int = SCHEMA_VERSION

    def resolved_groups(self, **overrides) -> DimensionlessGroups:
        """Dimensionless groups with optional per-sweep-point overrides."""
        if self.groups is not None:
            vals = dict(self.groups)
            vals.update({k: v for k, v in overrides.items() if k in GROUP_NAMES})
            return DimensionlessGroups(**vals)
        vals = dict(self.experiment)
        vals.update({k: v for k, v in overrides.items() if k in EXPERIMENT_NAMES})
        return derive_groups(ExperimentParams(**vals))

    def with_overrides(self, output=None, threads=None, tolerance=None) -> "RunConfig":
        cfg = self
        if output is not None:
            cfg = dataclasses.replace(cfg, output=output)
        if threads is not None:
            if threads < 1:
                raise ConfigError("must be >= 1", "threads")
            cfg = dataclasses.replace(cfg, threads=threads)
        if tolerance is not None:
            if not tolerance > 0:
                raise ConfigError("must be > 0", "numerics.tolerance")
            cfg = dataclasses.replace(cfg, numerics=dataclasses.replace(cfg.numerics, tolerance=tolerance))
        return cfg

    def provenance(self) -> dict:
        """Resolved settings that determine results (no paths, no thread count)."""
        out = {
            "schema_version": self.schema_version,
            "mode": self.mode,
            "groups": self.groups,
            "experiment": self.experiment,
            "formulas": list(self.formulas),
            "numerics": dataclasses.asdict(self.numerics),
            "sweep": {
                "axes": [dataclasses.asdict(a) for a in self.sweep_axes],
                "outputs": list(self.sweep_outputs),
            },
        }
        return out


def _lines(node, path=()):
    """Map key paths to 1-based line numbers from a YAML compose tree."""
    table = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            table.update(_lines(value, path + (key.value,)))
            table[path + (key.value,)] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for k, item in enumerate(node.value):
            table.update(_lines(item, path + (k,)))
    return table


class _Reader:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, message):
        name = ".".join(str(p) for p in path)
        line = None
        for k in range(len(path), -1, -1):
            if tuple(path[:k]) in self.lines:
                line = self.lines[tuple(path[:k])]
                break
        raise ConfigError(message, name or None, line)

    def mapping(self, data, path, allowed):
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        for key in data:
            if key not in allowed:
                self.fail(path + (key,), f"unknown field (allowed: {', '.join(allowed)})")
        return data

    def number(self, data, path, positive=False, integer=False):
        if isinstance(data, bool) or not isinstance(data, (int, float)):
            self.fail(path, f"expected a number, got {data!r}")
        if integer and int(data) != data:
            self.fail(path, f"expected an integer, got {data!r}")
        if not math.isfinite(data):
            self.fail(path, "must be finite")
        if positive and data <= 0:
            self.fail(path, "must be > 0")
        return int(data) if integer else float(data)

    def choice(self, data, path, options):
        if data not in options:
            self.fail(path, f"expected one of {', '.join(map(str, options))}, got {data!r}")
        return data


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from exc
    if node is None:
        raise ConfigError("empty configuration")
    r = _Reader(_lines(node))
    top = (
        "schema_version", "mode", "groups", "experiment", "formulas",
        "numerics", "sweep", "output", "threads",
    )
    r.mapping(data, (), top)
    if "schema_version" not in data:
        r.fail((), "missing schema_version")
    if data["schema_version"] != SCHEMA_VERSION:
        r.fail(("schema_version",), f"unsupported version {data['schema_version']!r} (expected {SCHEMA_VERSION})")
    mode = r.choice(data.get("mode", "closed_form"), ("mode",), MODES)

    has_g, has_e = "groups" in data, "experiment" in data
    if has_g == has_e:
        r.fail((), "exactly one of the blocks 'groups' and 'experiment' is required")
    groups = experiment = None
    if has_g:
        blk = r.mapping(data["groups"], ("groups",), GROUP_NAMES)
        for req in ("phi", "epsilon"):
            if req not in blk:
                r.fail(("groups",), f"missing {req}")
        groups = {k: r.number(v, ("groups", k)) for k, v in blk.items()}
    else:
        blk = r.mapping(data["experiment"], ("experiment",), EXPERIMENT_NAMES)
        for req in ("m", "d", "alpha", "beta", "T"):
            if req not in blk:
                r.fail(("experiment",), f"missing {req}")
        experiment = {k: r.number(v, ("experiment", k)) for k, v in blk.items()}

    formulas = data.get("formulas", ["unified"])
    if not isinstance(formulas, list) or not formulas:
        r.fail(("formulas",), "expected a non-empty list")
    for k, f in enumerate(formulas):
        r.choice(f, ("formulas", k), FORMULAS)

    num = r.mapping(data.get("numerics", {}) or {}, ("numerics",), tuple(f.name for f in dataclasses.fields(Numerics)))
    p = ("numerics",)
    numerics = Numerics(
        final_points=r.number(num.get("final_points", 96), p + ("final_points",), True, True),
        nodes=r.number(num.get("nodes", 64), p + ("nodes",), True, True),
        trajectory_kind=r.choice(num.get("trajectory_kind", "straight_line"), p + ("trajectory_kind",), ("straight_line", "kepler_bvp")),
        order_Omega=r.choice(num.get("order_Omega", 0), p + ("order_Omega",), (0, 2)),
        ret=r.choice(num.get("ret", 0), p + ("ret",), (0, 1)),
        kin=r.choice(num.get("kin", 0), p + ("kin",), (0, 1)),
        oracle=r.choice(num.get("oracle", "none"), p + ("oracle",), ORACLES),
        split_steps=r.number(num.get("split_steps", 100), p + ("split_steps",), True, True),
        check_convergence=r.choice(num.get("check_convergence", False), p + ("check_convergence",), (True, False)),
        tolerance=r.number(num.get("tolerance", 1e-8), p + ("tolerance",), True),
    )
    if numerics.nodes < 16:
        r.fail(p + ("nodes",), "need at least 16 quadrature nodes")
    if numerics.final_points < 8:
        r.fail(p + ("final_points",), "need at least 8 final grid points")

    names = GROUP_NAMES if has_g else EXPERIMENT_NAMES
    axes = []
    outputs = ["unified"]
    if "sweep" in data:
        sw = r.mapping(data["sweep"], ("sweep",), ("axes", "outputs"))
        raw_axes = sw.get("axes", [])
        if not isinstance(raw_axes, list) or not raw_axes:
            r.fail(("sweep", "axes"), "expected a non-empty list")
        for k, ax in enumerate(raw_axes):
            q = ("sweep", "axes", k)
            r.mapping(ax, q, ("name", "min", "max", "count", "scale"))
            for req in ("name", "min", "max", "count"):
                if req not in ax:
                    r.fail(q, f"missing {req}")
            name = r.choice(ax["name"], q + ("name",), names)
            scale = r.choice(ax.get("scale", "linear"), q + ("scale",), ("linear", "log"))
            lo = r.number(ax["min"], q + ("min",))
            hi = r.number(ax["max"], q + ("max",))
            count = r.number(ax["count"], q + ("count",), True, True)
            if scale == "log" and not (lo > 0 and hi > 0):
                r.fail(q, "log scale needs positive bounds")
            axes.append(SweepAxis(name, lo, hi, count, scale))
        if len({a.name for a in axes}) != len(axes):
            r.fail(("sweep", "axes"), "duplicate axis name")
        outputs = sw.get("outputs", ["unified"])
        if not isinstance(outputs, list) or not outputs:
            r.fail(("sweep", "outputs"), "expected a non-empty list")
        for k, o in enumerate(outputs):
            r.choice(o, ("sweep", "outputs", k), FORMULAS + SIM_OUTPUTS)
    elif mode == "sweep":
        r.fail((), "sweep mode needs a 'sweep' block")

    output = data.get("output", "out")
    if not isinstance(output, str) or not output:
        r.fail(("output",), "expected a path")
    threads = r.number(data.get("threads", 1), ("threads",), True, True)

    cfg = RunConfig(
        mode=mode,
        groups=groups,
        experiment=experiment,
        formulas=tuple(formulas),
        numerics=numerics,
        sweep_axes=tuple(axes),
        sweep_outputs=tuple(outputs),
        output=output,
        threads=threads,
    )
    try:
        cfg.resolved_groups()
    except InvalidParameterError as exc:
        block = "groups" if has_g else "experiment"
        if exc.field in (GROUP_NAMES if has_g else EXPERIMENT_NAMES):
            r.fail((block, exc.field), str(exc))
        r.fail((block,), str(exc))
    if numerics.order_Omega == 2 and not cfg.resolved_groups().Omega > 0:
        r.fail(p + ("order_Omega",), "order_Omega: 2 needs Omega > 0")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)
