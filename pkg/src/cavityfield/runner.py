"""Run configurations and the computations behind each CLI command."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import AtomFieldConfig, ProtocolTimes, run_protocol
from .errors import DomainError, UndefinedStatisticError, ZeroNormError
from .quasiprob import PhaseSpaceGrid, eval_grid
from .states import DEFAULT_HEADROOM, DEFAULT_TAIL_TOL, InputFieldSpec, choose_cutoff, input_density
from .statistics import closed_moment_sums, mandel_q, moments, squeezing_opt

NORMALIZATION_NAMES = {"faithful": "paper_faithful", "renorm": "renormalized"}
COHERENT_GRID = PhaseSpaceGrid(-4, 4, -4, 4, 121, 121)
WIDE_GRID = PhaseSpaceGrid(-6, 6, -6, 6, 161, 161)


class ConfigError(DomainError):
    """Bad command-line or sidecar configuration (exit code 2)."""


def parse_time(text: str) -> float:
    """``"pi:7/6"`` -> 7*pi/6; plain decimals pass through."""
    text = text.strip()
    try:
        if text.startswith("pi:"):
            return math.pi * float(Fraction(text[3:]))
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse time {text!r}") from exc


def parse_input(text: str) -> InputFieldSpec:
    kind, _, value = text.partition(":")
    try:
        if kind == "coherent":
            return InputFieldSpec.coherent(complex(value.replace(" ", "")))
        if kind == "thermal":
            return InputFieldSpec.thermal(float(value))
        if kind == "fock":
            return InputFieldSpec.fock(int(value))
        if kind == "vacuum" and not value:
            return InputFieldSpec.fock(0)
    except ValueError as exc:
        raise ConfigError(f"cannot parse input {text!r}: {exc}") from exc
    raise ConfigError(f"input must look like coherent:A, thermal:NBAR, fock:N or vacuum, got {text!r}")


def format_input(spec: InputFieldSpec) -> str:
    if spec.kind == "coherent":
        a = spec.alpha0
        return f"coherent:{a.real!r}" if a.imag == 0 else f"coherent:{a!r}"
    if spec.kind == "thermal":
        return f"thermal:{spec.nbar!r}"
    if spec.kind == "fock":
        return f"fock:{spec.n}"
    raise ConfigError("custom inputs have no command-line form")


def parse_grid(text: str) -> PhaseSpaceGrid:
    parts = text.split(":")
    if len(parts) != 6:
        raise ConfigError(f"grid must be re_min:re_max:im_min:im_max:nx:ny, got {text!r}")
    try:
        return PhaseSpaceGrid(*(float(p) for p in parts[:4]), int(parts[4]), int(parts[5]))
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


def parse_cutoff(text: str):
    parts = text.split(":")
    try:
        if parts[0] == "auto":
            tol = float(parts[1]) if len(parts) > 1 else DEFAULT_TAIL_TOL
            headroom = int(parts[2]) if len(parts) > 2 else DEFAULT_HEADROOM
            if not 0 < tol < 1 or headroom < 0 or len(parts) > 3:
                raise ValueError("need 0 < tol < 1 and headroom >= 0")
            return ("auto", tol, headroom)
        if parts[0] == "fixed" and len(parts) == 2:
            dim = int(parts[1])
            if dim < 1:
                raise ValueError("dim must be positive")
            return ("fixed", dim)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad cutoff {text!r}: {exc}") from exc
    raise ConfigError(f"cutoff must be auto[:tol[:headroom]] or fixed:DIM, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    input: InputFieldSpec
    config: AtomFieldConfig = AtomFieldConfig()
    times: ProtocolTimes = ProtocolTimes(math.pi / 6, math.pi / 6)
    time_exprs: tuple = ("pi:1/6", "pi:1/6")
    grid: Optional[PhaseSpaceGrid] = None
    normalization: str = "paper_faithful"
    cutoff: tuple = ("auto", DEFAULT_TAIL_TOL, DEFAULT_HEADROOM)
    no_atoms: bool = False
    out: Optional[str] = None
    fmt: str = "csv"

    def resolved_dim(self, spec: InputFieldSpec = None) -> int:
        spec = spec or self.input
        if self.cutoff[0] == "fixed":
            return int(self.cutoff[1])
        return choose_cutoff(spec, self.cutoff[1], self.cutoff[2])

    def to_dict(self) -> dict:
        c = self.config
        return {
            "input": self.input.describe(),
            "atom_field": {"g1": c.g1, "g2": c.g2, "delta1": c.delta1, "delta2": c.delta2},
            "times": {"t1": self.times.t1, "t2": self.times.t2,
                      "t1_expr": self.time_exprs[0], "t2_expr": self.time_exprs[1]},
            "grid": None if self.grid is None else list(self.grid.as_tuple()),
            "normalization": self.normalization,
            "cutoff": list(self.cutoff),
            "no_atoms": self.no_atoms,
            "format": self.fmt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            af = d["atom_field"]
            times = d["times"]
            t1_expr, t2_expr = times["t1_expr"], times["t2_expr"]
            grid = d.get("grid")
            cutoff = d["cutoff"]
            cutoff = ("fixed", int(cutoff[1])) if cutoff[0] == "fixed" else (
                "auto", float(cutoff[1]), int(cutoff[2]))
            return cls(
                input=InputFieldSpec.from_description(d["input"]),
                config=AtomFieldConfig(af["g1"], af["g2"], af["delta1"], af["delta2"]),
                times=ProtocolTimes(parse_time(t1_expr), parse_time(t2_expr)),
                time_exprs=(t1_expr, t2_expr),
                grid=None if grid is None else PhaseSpaceGrid(*grid[:4], int(grid[4]), int(grid[5])),
                normalization=d["normalization"],
                cutoff=cutoff,
                no_atoms=bool(d.get("no_atoms", False)),
                fmt=d.get("format", "csv"),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"incomplete run description: {exc!r}") from exc


@dataclass
class FieldOutcome:
    rho: object
    probability: float
    dim: int
    route: str


def compute_field(cfg: RunConfig, spec: InputFieldSpec = None, times: ProtocolTimes = None,
                  normalization: str = None) -> FieldOutcome:
    spec = spec or cfg.input
    times = times or cfg.times
    normalization = normalization or cfg.normalization
    dim = cfg.resolved_dim(spec)
    if cfg.no_atoms:
        return FieldOutcome(input_density(spec, dim), 1.0, dim, "input")
    res = run_protocol(spec, cfg.config, times, normalization, dim=dim)
    return FieldOutcome(res.rho, res.probability, res.dim, res.route)


def base_sidecar(command: str, cfg: RunConfig) -> dict:
    return {"suite_version": __version__, "command": command, "config": cfg.to_dict()}


def run_grid(cfg: RunConfig, kind: str, workers: int = 1):
    """Evaluate the Husimi or Wigner grid; returns ``(field, sidecar)``."""
    outcome = compute_field(cfg)
    grid = cfg.grid
    defaulted = grid is None
    if defaulted:
        grid = WIDE_GRID if (cfg.input.kind == "thermal" and cfg.input.nbar >= 12) else COHERENT_GRID
    result = eval_grid(outcome.rho, grid, kind, workers=workers)
    loc_max, vmax = result.argmax()
    loc_min, vmin = result.argmin()
    meta = base_sidecar("qfunc" if kind == "husimi" else "wigner", cfg)
    meta.update({
        "kind": kind,
        "grid_used": list(grid.as_tuple()),
        "grid_defaulted": defaulted,
        "resolved_dim": outcome.dim,
        "route": outcome.route,
        "trace_rho_f": outcome.rho.trace,
        "postselection_probability": outcome.probability,
        "extrema": {"max": {"value": vmax, "re": loc_max.real, "im": loc_max.imag},
                    "min": {"value": vmin, "re": loc_min.real, "im": loc_min.imag}},
    })
    return result, meta


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.parameter not in ("gt", "alpha0", "nbar"):
            raise ConfigError(f"sweep parameter must be gt, alpha0 or nbar, got {self.parameter!r}")
        if not (self.step > 0 and self.stop > self.start):
            raise ConfigError(f"empty sweep range {self.start}:{self.stop} step {self.step}")

    def values(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)

    def to_dict(self):
        return {"parameter": self.parameter, "start": self.start, "stop": self.stop, "step": self.step}


SWEEP_COLUMNS = ("sweep_value", "mandel_q_faithful", "mandel_q_renorm", "s_opt_faithful",
                 "s_opt_renorm", "trace")


def _point_setup(cfg: RunConfig, parameter: str, value: float):
    spec, times = cfg.input, cfg.times
    if parameter == "gt":
        t = value / cfg.config.g1
        times = ProtocolTimes(t, t)
    elif parameter == "alpha0":
        spec = InputFieldSpec.coherent(value)
    else:
        spec = InputFieldSpec.thermal(value)
    return spec, times


def statistics_row(cfg: RunConfig, spec: InputFieldSpec, times: ProtocolTimes):
    """Mandel Q and S_opt in both normalizations, plus Tr rho_f; NaN where undefined."""
    nan = float("nan")
    warnings = []
    try:
        outcome = compute_field(cfg, spec, times, "paper_faithful")
    except ZeroNormError as exc:
        return [nan] * 5, [f"zero-norm: {exc}"]
    m = moments(outcome.rho)
    row = []
    for norm in ("paper_faithful", "renormalized"):
        try:
            row.append(mandel_q(m, norm))
        except UndefinedStatisticError as exc:
            row.append(nan)
            warnings.append(str(exc))
    row += [squeezing_opt(m, "paper_faithful").s_opt, squeezing_opt(m, "renormalized").s_opt,
            outcome.rho.trace]
    return row, warnings


def _parallel_map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_sweep(cfg: RunConfig, sweep: SweepSpec, workers: int = 1):
    """One statistics row per sweep value; returns ``(columns, rows, sidecar)``."""
    values = sweep.values()

    def point(value):
        spec, times = _point_setup(cfg, sweep.parameter, value)
        return statistics_row(cfg, spec, times)

    results = _parallel_map(point, values, workers)
    rows = [[v] + r for v, (r, _) in zip(values, results)]
    warnings = [w for _, ws in results for w in ws]
    meta = base_sidecar("sweep", cfg)
    meta.update(_sweep_summary(rows, warnings))
    meta["sweep"] = sweep.to_dict()
    return SWEEP_COLUMNS, rows, meta


def _sweep_summary(rows, warnings):
    arr = np.array([r[1:] for r in rows], dtype=float)
    summary = {"samples": len(rows), "warning_count": len(warnings), "warnings": warnings[:20]}
    summary["mean_mandel_q"] = {}
    for k, name in enumerate(("mandel_q_faithful", "mandel_q_renorm")):
        col = arr[:, k]
        finite = col[np.isfinite(col)]
        summary[f"fraction_negative_{name}"] = float(np.mean(finite < 0)) if finite.size else None
        summary["mean_mandel_q"][name.split("_")[-1]] = float(finite.mean()) if finite.size else None
    for k, name in ((2, "s_opt_faithful"), (3, "s_opt_renorm")):
        col = arr[:, k]
        finite = col[np.isfinite(col)]
        summary[f"fraction_squeezed_{name}"] = float(np.mean(finite < 0)) if finite.size else None
    return summary


CONTOUR_COLUMNS = ("s_opt_faithful", "s_opt_renorm", "s_opt_printed")


def run_contour(cfg: RunConfig, parameter: str, outer_values, gt_values, workers: int = 1):
    """Long-format (parameter, gt, S_opt...) table for a two-parameter contour."""
    points = [(float(p), float(gt)) for p in outer_values for gt in gt_values]

    def point(pair):
        p, gt = pair
        spec, _ = _point_setup(cfg, parameter, p)
        t = gt / cfg.config.g1
        try:
            outcome = compute_field(cfg, spec, ProtocolTimes(t, t), "paper_faithful")
            m = moments(outcome.rho)
            faithful = squeezing_opt(m, "paper_faithful").s_opt
            renorm = squeezing_opt(m, "renormalized").s_opt
        except ZeroNormError:
            faithful = renorm = float("nan")
        printed = squeezing_opt(closed_moment_sums(spec, cfg.config.g1, t, t,
                                                   dim=cfg.resolved_dim(spec))).s_opt
        return [p, gt, faithful, renorm, printed]

    rows = _parallel_map(point, points, workers)
    meta = base_sidecar("contour", cfg)
    arr = np.array(rows, dtype=float)
    meta["contour"] = {"parameter": parameter, "outer_values": [float(v) for v in outer_values],
                       "gt_values": [float(v) for v in gt_values]}
    for k, name in enumerate(CONTOUR_COLUMNS):
        col = arr[:, 2 + k]
        finite = col[np.isfinite(col)]
        meta[f"fraction_squeezed_{name}"] = float(np.mean(finite < 0)) if finite.size else None
        meta[f"min_{name}"] = float(finite.min()) if finite.size else None
    return (parameter, "gt") + CONTOUR_COLUMNS, rows, meta
