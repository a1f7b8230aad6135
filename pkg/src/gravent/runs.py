"""High-level operations behind the command-line subcommands.

Every writer produces byte-identical files for identical inputs: floats are
written with ``repr``, rows in a fixed order, and headers carry no
timestamps or thread counts.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import os
import subprocess
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .closed_form import (
    UnsupportedRegimeError,
    entanglement_oscillator_large_omegaT,
    entanglement_oscillator_limit,
    entanglement_path_limit,
    entanglement_unified,
    f_functions,
    relativistic_correction,
)
from .config import ConfigError, RunConfig
from .dynamics import LagrangianConfig
from .entanglement import Axis, aligned_distance, fidelity, marginals, measure_quadrature, measure_schmidt
from .gridio import save_binary
from .params import DimensionlessGroups, RegimeWarning, validate_regime
from .propagator import (
    EvolutionSpec,
    OneParticleState,
    default_final_axis,
    evolve_split_step,
    evolve_stationary_phase,
    initial_state,
    split_step_axis,
)

__all__ = [
    "ClosedFormReport",
    "SimulationReport",
    "run_closed_form",
    "closed_form_rows",
    "run_simulate",
    "simulate_point",
    "run_sweep",
    "emit_ffunction_plot",
    "git_revision",
    "SPECTRUM_HEAD",
]

SPECTRUM_HEAD = 8


def git_revision() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], cwd=here, capture_output=True, text=True, timeout=10
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    rev = out.stdout.strip()
    return rev if out.returncode == 0 and rev else "unknown"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header_lines(cfg: RunConfig) -> list:
    blob = json.dumps(cfg.provenance(), sort_keys=True, separators=(",", ":"))
    return [
        f"# gravent {__version__}",
        f"# git {git_revision()}",
        f"# config {blob}",
    ]


def _write_csv(path, cfg, columns, rows):
    buf = io.StringIO(newline="")
    for line in _header_lines(cfg):
        buf.write(line + "\r\n")
    w = csv.writer(buf)
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _dump_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


# closed form ------------------------------------------------------------


def _evaluate_formula(name, groups):
    """Return (value, correction, note) for one formula tag."""
    try:
        if name == "unified":
            return entanglement_unified(groups).value, None, ""
        if name == "path_limit":
            return entanglement_path_limit(groups).value, None, ""
        if name == "oscillator_limit":
            return entanglement_oscillator_limit(groups).value, None, ""
        if name == "oscillator_large_omegaT":
            return entanglement_oscillator_large_omegaT(groups).value, None, ""
        if name == "relativistic_corrected":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                r = relativistic_correction(groups).general
            return r.value, r.correction, ""
    except UnsupportedRegimeError as exc:
        return None, None, str(exc)
    raise ValueError(f"unknown formula {name!r}")


def closed_form_rows(groups: DimensionlessGroups, formulas) -> list:
    return [(name, *_evaluate_formula(name, groups)) for name in formulas]


@dataclass
class ClosedFormReport:
    groups: DimensionlessGroups
    rows: list
    regime: list

    def text(self) -> str:
        g = self.groups
        lines = ["groups: " + ", ".join(f"{k}={v:.6g}" for k, v in g.as_dict().items())]
        lines.append(f"{'formula':<26}{'E':>16}{'correction':>16}")
        for name, value, corr, note in self.rows:
            v = f"{value:16.6e}" if value is not None else f"{'n/a':>16}"
            c = f"{corr:16.6e}" if corr is not None else f"{'':>16}"
            lines.append(f"{name:<26}{v}{c}" + (f"  ({note})" if note else ""))
        lines.append("regime:")
        for name, desc, value, thr, status in self.regime:
            lines.append(f"  {desc:<18}{value:12.4g} <= {thr:<8.3g} {status}")
        return "\n".join(lines)


def run_closed_form(cfg: RunConfig, write: bool = True) -> ClosedFormReport:
    """Evaluate the requested formulas at the configured point."""
    groups = cfg.resolved_groups()
    formulas = list(cfg.formulas)
    if cfg.mode == "relativistic" and "relativistic_corrected" not in formulas:
        formulas.append("relativistic_corrected")
    rows = closed_form_rows(groups, formulas)
    report = ClosedFormReport(groups, rows, validate_regime(groups).rows())
    if write:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            out / "closed_form.csv",
            cfg,
            ["formula", "E", "correction", "note"],
            [(n, v, c, note) for n, v, c, note in rows],
        )
        _write_csv(
            out / "regime.csv",
            cfg,
            ["check", "quantity", "value", "threshold", "status"],
            report.regime,
        )
    return report


# simulation -------------------------------------------------------------


@dataclass
class SimulationReport:
    groups: DimensionlessGroups
    E_quadrature: float
    E_schmidt: float
    E_closed_form: Optional[float]
    spectrum_head: list
    oracle: Optional[dict]
    psi3: object = None

    def as_dict(self) -> dict:
        return {
            "groups": self.groups.as_dict(),
            "E_quadrature": self.E_quadrature,
            "E_schmidt": self.E_schmidt,
            "E_closed_form": self.E_closed_form,
            "schmidt_spectrum_head": self.spectrum_head,
            "oracle": self.oracle,
        }

    def text(self) -> str:
        lines = [
            f"E (quadrature)  {self.E_quadrature:.10e}",
            f"E (schmidt)     {self.E_schmidt:.10e}",
        ]
        if self.E_closed_form is not None:
            lines.append(f"E (closed form) {self.E_closed_form:.10e}")
        lines.append("schmidt weights " + " ".join(f"{w:.3e}" for w in self.spectrum_head))
        if self.oracle:
            lines.append(
                f"split-step oracle ({self.oracle['potential']}): fidelity {self.oracle['fidelity']:.12f}, "
                f"E {self.oracle['E_split_step']:.10e}"
            )
        return "\n".join(lines)


def _evolution_spec(cfg: RunConfig, groups, threads, axis_a=None, axis_b=None):
    n = cfg.numerics
    lag = LagrangianConfig(groups, n.order_Omega, n.ret, n.kin)
    return EvolutionSpec(
        groups.omegaT,
        lag,
        n.trajectory_kind,
        n.nodes,
        axis_a,
        axis_b,
        threads,
        n.check_convergence,
        n.tolerance,
    )


def _prepared(groups, axis):
    spec = OneParticleState.two_gaussians(groups.xi, axis)
    return initial_state(spec, spec)


def simulate_point(cfg: RunConfig, groups: DimensionlessGroups, threads: int = 1) -> SimulationReport:
    """Stationary-phase evolution at one parameter point, with optional oracle."""
    n = cfg.numerics
    final = default_final_axis(groups.xi, groups.omegaT, n.final_points)
    start = Axis.symmetric(groups.xi / 2 + 9, n.final_points)
    psi2 = _prepared(groups, start)
    psi3 = evolve_stationary_phase(psi2, _evolution_spec(cfg, groups, threads, final, final))
    quad = measure_quadrature(psi3)
    sch = measure_schmidt(psi3)
    cf = None
    if n.order_Omega == 0:
        cf = entanglement_unified(groups).value
    oracle = None
    if n.oracle != "none":
        box = split_step_axis(groups.xi, groups.omegaT)
        psi2_box = _prepared(groups, box)
        ss, raw = evolve_split_step(
            psi2_box, n.oracle, n.split_steps, groups.omegaT, groups, return_raw_norm=True
        )
        sp = evolve_stationary_phase(psi2_box, _evolution_spec(cfg, groups, threads, box, box))
        oracle = {
            "potential": n.oracle,
            "steps": n.split_steps,
            "fidelity": fidelity(ss, sp),
            "distance": aligned_distance(ss, sp),
            "E_split_step": measure_schmidt(ss).value,
            "E_stationary_phase_same_grid": measure_schmidt(sp).value,
            "norm_before_renormalization": raw,
        }
    head = [float(w) for w in sch.schmidt_spectrum[:SPECTRUM_HEAD]]
    return SimulationReport(groups, quad.value, sch.value, cf, head, oracle, psi3)


def run_simulate(cfg: RunConfig) -> SimulationReport:
    """Simulate psi3, write psi3.bin, marginals.csv and report.json."""
    groups = cfg.resolved_groups()
    validate_regime(groups).emit()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        report = simulate_point(cfg, groups, cfg.threads)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    psi3 = report.psi3
    save_binary(psi3, out / "psi3.bin")
    pa, pb = marginals(psi3)
    _write_csv(
        out / "marginals.csv",
        cfg,
        ["y", "density_A", "density_B"],
        zip(psi3.axis_A.points.tolist(), pa.tolist(), pb.tolist()),
    )
    _dump_json(out / "report.json", {"config": cfg.provenance(), "result": report.as_dict()})
    return report


# sweep --------------------------------------------------------------------


def _sweep_columns(cfg):
    cols = [a.name for a in cfg.sweep_axes]
    for o in cfg.sweep_outputs:
        if o == "simulated":
            cols += ["simulated_quadrature", "simulated_schmidt"]
        else:
            cols.append(o)
    return cols


def _sweep_point(cfg, values):
    overrides = dict(zip([a.name for a in cfg.sweep_axes], values))
    groups = cfg.resolved_groups(**overrides)
    row = list(values)
    for o in cfg.sweep_outputs:
        if o == "simulated":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                rep = simulate_point(cfg, groups, 1)
            row += [rep.E_quadrature, rep.E_schmidt]
        else:
            value, _, _ = _evaluate_formula(o, groups)
            row.append(float("nan") if value is None else value)
    return row


def _resume_count(path, prefix, total):
    """Number of complete rows already in ``path``; rejects foreign files."""
    with open(path, newline="") as fh:
        text = fh.read()
    if not text.startswith(prefix):
        raise ConfigError(
            f"{path} holds a sweep with different settings; choose another output directory"
        )
    body = text[len(prefix):]
    if body and not body.endswith("\r\n"):
        # drop a partially written last row
        cut = body.rfind("\r\n") + 2 if "\r\n" in body else 0
        body = body[:cut]
        with open(path, "w", newline="") as fh:
            fh.write(prefix + body)
    done = body.count("\r\n")
    if done > total:
        raise ConfigError(f"{path} has more rows than the sweep defines")
    return done


def run_sweep(cfg: RunConfig) -> Path:
    """Evaluate every sweep point; rows are appended in order as they finish.

    An interrupted sweep resumes where it stopped when rerun with the same
    configuration and output directory.
    """
    if not cfg.sweep_axes:
        raise ConfigError("no sweep axes configured", "sweep")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    points = list(itertools.product(*[a.values() for a in cfg.sweep_axes]))
    buf = io.StringIO(newline="")
    for line in _header_lines(cfg):
        buf.write(line + "\r\n")
    csv.writer(buf).writerow(_sweep_columns(cfg))
    prefix = buf.getvalue()
    done = _resume_count(path, prefix, len(points)) if path.exists() else 0
    if done == 0:
        with open(path, "w", newline="") as fh:
            fh.write(prefix)
    todo = points[done:]
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)

        def emit(row):
            writer.writerow([_fmt(v) for v in row])
            fh.flush()
            os.fsync(fh.fileno())

        if cfg.threads == 1:
            for p in todo:
                emit(_sweep_point(cfg, p))
        else:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                for row in pool.map(lambda p: _sweep_point(cfg, p), todo):
                    emit(row)
    return path


# f-function plot -------------------------------------------------------------


def _svg(xs, series, width=640, height=400, pad=50):
    ys = np.concatenate([s for _, s, _ in series])
    y_lo, y_hi = float(np.min(ys)), float(np.max(ys))
    y_lo, y_hi = min(y_lo, 0.0), max(y_hi, 1.0)
    span = y_hi - y_lo or 1.0
    x_lo, x_hi = float(xs[0]), float(xs[-1])

    def px(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y_lo) / span * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{py(y_lo):.2f}" x2="{width - pad}" y2="{py(y_lo):.2f}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{py(1.0):.2f}" x2="{width - pad}" y2="{py(1.0):.2f}" '
        f'stroke="#bbbbbb" stroke-dasharray="4 4"/>',
    ]
    for k in range(6):
        x = x_lo + (x_hi - x_lo) * k / 5
        parts.append(
            f'<text x="{px(x):.2f}" y="{height - pad + 18}" font-size="12" text-anchor="middle">{x:g}</text>'
        )
    for y in (y_lo, 0.0, 1.0, y_hi):
        parts.append(
            f'<text x="{pad - 6}" y="{py(y) + 4:.2f}" font-size="12" text-anchor="end">{y:.2g}</text>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 10}" font-size="13" text-anchor="middle">x = beta/alpha</text>'
    )
    for k, (name, ys_, colour) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys_))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad - 40}" y="{pad + 16 * (k + 1)}" font-size="13" fill="{colour}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_ffunction_plot(out_dir, x_min: float = 0.0, x_max: float = 5.0, count: int = 501, cfg=None):
    """Write f_functions.csv (x, f0, f2, f4) and an SVG rendering.

    Returns the arrays ``(x, f0, f2, f4)``.
    """
    if not (0 <= x_min < x_max) or count < 2:
        raise ValueError("need 0 <= x_min < x_max and count >= 2")
    xs = np.linspace(x_min, x_max, count)
    a0, a2, a4 = f_functions(xs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "f_functions.csv", "w", newline="") as fh:
        fh.write(f"# gravent {__version__}\r\n# git {git_revision()}\r\n")
        w = csv.writer(fh)
        w.writerow(["x", "f0", "f2", "f4"])
        for row in zip(xs, a0, a2, a4):
            w.writerow([_fmt(float(v)) for v in row])
    svg = _svg(xs, [("f0", a0, "#1f77b4"), ("f2", a2, "#d62728"), ("f4", a4, "#2ca02c")])
    with open(out / "f_functions.svg", "w") as fh:
        fh.write(svg)
    return xs, a0, a2, a4
