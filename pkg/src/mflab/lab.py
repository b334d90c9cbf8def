"""Experiment harness: configuration, hbar-ladder execution, rate regression,
and report emission.

The default grid coupling keeps quantization phases resolvable along a ladder:
n = 2^ceil(log2(L^2/h)) clamped to [n_min, n_max], with the momentum box
L_xi = n h / L. Exact ladder halvings of hbar then double n, so grid-relative
quantities (softening in cells, spacing over hbar) stay constant across the
ladder and slope fits are not polluted by discretization drift.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimates
from .dynamics import (
    EvolutionConfig,
    KernelSpec,
    MomentMonitor,
    exchange_operator,
    hartree_energy,
    hartree_fock_step,
    hartree_step,
    moment_monitor_step,
    vlasov_step,
)
from .errors import FitUnderdeterminedError, NonpositiveError
from .phasespace import PhaseSpaceField, PhaseSpaceGrid, spatial_density
from .quantize import DensityOperator, psd_repair, resonant_grid, weyl_quantize
from .schatten import semiclassical_factor

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = (
    "hartree_vs_vlasov",
    "hf_vs_vlasov",
    "hartree_vs_hf",
    "classical_stability",
)


@dataclass(frozen=True)
class InitialData:
    kind: str = "gaussian"
    center_x: float = 0.0
    center_xi: float = 0.0
    variance_x: float = 1.0
    variance_xi: float = 1.0
    separation: float = 2.0
    offset_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "double_bump"):
            raise ValueError(f"unknown initial data kind {self.kind!r}")

    def provider(self):
        """Closed-form f(u, xi) used for quantization midpoints."""
        sx, sxi = math.sqrt(self.variance_x), math.sqrt(self.variance_xi)
        cx, cxi = self.center_x, self.center_xi
        norm = 1.0 / (2.0 * math.pi * sx * sxi)

        def gauss(u, xi, shift=0.0):
            return norm * np.exp(
                -((u - cx - shift) ** 2) / (2 * sx ** 2) - ((xi - cxi) ** 2) / (2 * sxi ** 2)
            )

        if self.kind == "gaussian":
            return lambda u, xi: gauss(u, xi)
        half = self.separation / 2.0
        return lambda u, xi: 0.5 * (gauss(u, xi, -half) + gauss(u, xi, half))

    def bump_provider(self):
        """Odd, mass-free perturbation direction used for hbar-sized initial offsets."""
        base = self.provider()
        sx = math.sqrt(self.variance_x)
        cx = self.center_x
        return lambda u, xi: (u - cx) / sx * base(u, xi)

    def field(self, grid: PhaseSpaceGrid) -> PhaseSpaceField:
        prov = self.provider()
        mesh_x = grid.axis_points(0)
        mesh_xi = grid.axis_points(1)
        return PhaseSpaceField(grid, prov(mesh_x, mesh_xi))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    kernel_a: float = 0.5
    kernel_sign: int = 1
    kernel_log: bool = False
    softening_cells: float | None = 2.0
    softening: float | None = None
    d: int = 1
    box: float = 12.0
    n_min: int = 256
    n_max: int = 1024
    hbar_ladder: tuple = (0.2, 0.1, 0.05, 0.025)
    dt: float = 2.5e-3
    t_final: float = 0.5
    record_every: int = 20
    initial: InitialData = field(default_factory=InitialData)
    norms_to_track: tuple = (2.0,)
    seed: int = 0
    synthetic_slope: float | None = None
    grid_check: bool = False
    grid_budget: float = 0.25
    stability_magnitudes: tuple = (0.01, 0.03, 0.1)
    bound_args: dict = field(default_factory=dict)

    def __post_init__(self):
        kinds_ok = self.experiment in EXPERIMENT_KINDS or self.experiment.startswith("bound_check:")
        if not kinds_ok:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if list(self.hbar_ladder) != sorted(self.hbar_ladder, reverse=True):
            raise ValueError("hbar_ladder must be strictly decreasing")
        if len(set(self.hbar_ladder)) != len(self.hbar_ladder):
            raise ValueError("hbar_ladder must be strictly decreasing")
        if self.initial.kind == "gaussian" and self.hbar_ladder:
            if min(self.initial.variance_x, self.initial.variance_xi) < max(self.hbar_ladder) / 2:
                raise ValueError("gaussian variance must be >= hbar_max/2 for a PSD-friendly state")

    def kernel_for(self, grid_spacing: float) -> KernelSpec:
        delta = self.softening if self.softening is not None else self.softening_cells * grid_spacing
        return KernelSpec(self.kernel_a, self.kernel_sign, delta, self.kernel_log, dim=self.d)

    def evolution(self, hbar: float) -> EvolutionConfig:
        return EvolutionConfig(dt=self.dt, t_final=self.t_final, hbar=hbar, record_every=self.record_every)

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "kernel": {
                "a": self.kernel_a,
                "sign": self.kernel_sign,
                "log": self.kernel_log,
                "softening_cells": self.softening_cells,
                "softening": self.softening,
            },
            "d": self.d,
            "grid": {"box": self.box, "n_min": self.n_min, "n_max": self.n_max},
            "hbar_ladder": list(self.hbar_ladder),
            "evolution": {"dt": self.dt, "t_final": self.t_final, "record_every": self.record_every},
            "initial": {
                "kind": self.initial.kind,
                "center_x": self.initial.center_x,
                "center_xi": self.initial.center_xi,
                "variance_x": self.initial.variance_x,
                "variance_xi": self.initial.variance_xi,
                "separation": self.initial.separation,
                "offset_scale": self.initial.offset_scale,
            },
            "norms": list(self.norms_to_track),
            "seed": self.seed,
        }
        if self.synthetic_slope is not None:
            d["synthetic_slope"] = self.synthetic_slope
        return d


def _get(cp, section, key, cast, default):
    if not cp.has_section(section) or not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw)


def load_config(path) -> ExperimentConfig:
    """Parse the flat key/section config format (see README for the schema)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    ladder_raw = _get(cp, "ladder", "hbar", str, "0.2 0.1 0.05 0.025")
    hbars = tuple(float(tok) for tok in ladder_raw.split())
    norms_raw = _get(cp, "norms", "p", str, "2")
    norms = tuple(float(tok) for tok in norms_raw.split())
    softening_cells = _get(cp, "kernel", "softening_cells", float, 2.0)
    softening = _get(cp, "kernel", "softening", float, None)
    init = InitialData(
        kind=_get(cp, "initial", "kind", str, "gaussian"),
        center_x=_get(cp, "initial", "center_x", float, 0.0),
        center_xi=_get(cp, "initial", "center_xi", float, 0.0),
        variance_x=_get(cp, "initial", "variance_x", float, 1.0),
        variance_xi=_get(cp, "initial", "variance_xi", float, 1.0),
        separation=_get(cp, "initial", "separation", float, 2.0),
        offset_scale=_get(cp, "initial", "offset_scale", float, 0.0),
    )
    synth = _get(cp, "experiment", "synthetic_slope", float, None)
    return ExperimentConfig(
        experiment=_get(cp, "experiment", "kind", str, "hartree_vs_vlasov"),
        kernel_a=_get(cp, "kernel", "a", float, 0.5),
        kernel_sign=_get(cp, "kernel", "sign", int, 1),
        kernel_log=_get(cp, "kernel", "log", bool, False),
        softening_cells=softening_cells,
        softening=softening,
        d=_get(cp, "experiment", "d", int, 1),
        box=_get(cp, "grid", "box", float, 12.0),
        n_min=_get(cp, "grid", "n_min", int, 256),
        n_max=_get(cp, "grid", "n_max", int, 1024),
        hbar_ladder=hbars,
        dt=_get(cp, "evolution", "dt", float, 2.5e-3),
        t_final=_get(cp, "evolution", "t_final", float, 0.5),
        record_every=_get(cp, "evolution", "record_every", int, 20),
        initial=init,
        norms_to_track=norms,
        seed=_get(cp, "experiment", "seed", int, 0),
        synthetic_slope=synth,
        grid_check=_get(cp, "experiment", "grid_check", bool, False),
    )


@dataclass
class LadderRun:
    """One convergence experiment: per-hbar error records plus the fitted slope."""

    kind: str
    config: dict
    records: list = field(default_factory=list)
    series: list = field(default_factory=list)
    fit: dict | None = None
    checks: list = field(default_factory=list)
    schema: int = SCHEMA_VERSION

    def to_json(self) -> dict:
        return {
            "schema": self.schema,
            "kind": self.kind,
            "config": self.config,
            "records": self.records,
            "series": self.series,
            "fit": self.fit,
            "checks": self.checks,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LadderRun":
        return cls(
            kind=data["kind"],
            config=data["config"],
            records=data["records"],
            series=data["series"],
            fit=data["fit"],
            checks=data.get("checks", []),
            schema=data.get("schema", SCHEMA_VERSION),
        )


def rate_fit(points) -> dict:
    """Least squares of log(error) on log(hbar): {slope, intercept, r2}."""
    points = [(h, e) for h, e in points]
    if len(points) < 3:
        raise FitUnderdeterminedError(f"need >= 3 ladder points, got {len(points)}")
    if any(e <= 0 for _, e in points):
        raise NonpositiveError("errors must be positive for a log-log fit")
    x = np.log([h for h, _ in points])
    y = np.log([e for _, e in points])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-30 else 1.0 - ss_res / ss_tot
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "r2": float(r2)}


# ---------------------------------------------------------------------------
# Ladder-point pipelines
# ---------------------------------------------------------------------------

def _checkpoint_metrics(delta: np.ndarray, hbar: float, p_list) -> dict:
    lam = np.linalg.eigvalsh(0.5 * (delta + delta.conj().T))
    absl = np.abs(lam)
    h = 2 * math.pi * hbar
    out = {
        "trace_dist": float(absl.sum()),
        "l2_dist": float(np.sqrt((absl ** 2).sum()) / math.sqrt(h)),
    }
    out["lp_dist"] = {
        str(p): float((absl ** p).sum() ** (1.0 / p) * semiclassical_factor(hbar, p)) for p in p_list
    }
    return out


def _rim_mass(f: PhaseSpaceField, cells: int = 2) -> float:
    mask = np.zeros(f.grid.shape, dtype=bool)
    for ax in range(2 * f.grid.dim):
        n = f.grid.shape[ax]
        idx = [slice(None)] * len(f.grid.shape)
        idx[ax] = slice(0, cells)
        mask[tuple(idx)] = True
        idx[ax] = slice(n - cells, n)
        mask[tuple(idx)] = True
    return float(np.abs(f.values[mask]).sum() * f.grid.cell_volume)


def _prepare_state(cfg: ExperimentConfig, hbar: float):
    grid = resonant_grid(cfg.box, hbar, cfg.n_min, cfg.n_max)
    kernel = cfg.kernel_for(grid.x.spacing)
    f0 = cfg.initial.field(grid)
    base = cfg.initial.provider()
    rho_f0 = weyl_quantize(f0, hbar, midpoint_source=base)
    if cfg.initial.offset_scale > 0.0:
        bump = cfg.initial.bump_provider()
        bump_op = weyl_quantize(f0, hbar, midpoint_source=bump)
        bump_trace = float(np.abs(np.linalg.eigvalsh(bump_op.matrix)).sum())
        amp = cfg.initial.offset_scale * hbar / bump_trace
        perturbed = lambda u, xi: base(u, xi) + amp * bump(u, xi)
        raw = weyl_quantize(f0, hbar, midpoint_source=perturbed)
    else:
        raw = rho_f0
    rho0, clipped = psd_repair(raw)
    return grid, kernel, f0, rho_f0, rho0, clipped


def _run_quantum_point(cfg: ExperimentConfig, hbar: float) -> tuple[dict, list]:
    t0 = _time.perf_counter()
    grid, kernel, f, rho_f0, rho, clipped = _prepare_state(cfg, hbar)
    evo = cfg.evolution(hbar)
    evo.validate_for(grid.x, float(np.max(np.abs(grid.xi.points))))
    with_hf = cfg.experiment in ("hf_vs_vlasov", "hartree_vs_hf")
    with_hartree = cfg.experiment in ("hartree_vs_vlasov", "hartree_vs_hf")
    rho_h = rho if with_hartree else None
    rho_hf = rho if with_hf else None

    series = []
    n_steps = evo.n_steps()

    def record(t, f_now, rho_h_now, rho_hf_now):
        rho_fw = weyl_quantize(f_now, hbar)
        row = {"hbar": hbar, "t": t, "mass_f": f_now.mass}
        quantum = rho_h_now if rho_h_now is not None else rho_hf_now
        row["trace_q"] = quantum.trace
        row["energy"] = hartree_energy(quantum, kernel)
        for label, op in (("hartree", rho_h_now), ("hf", rho_hf_now)):
            if op is None:
                continue
            m = _checkpoint_metrics(op.matrix - rho_fw.matrix, hbar, cfg.norms_to_track)
            row[f"{label}_trace_dist"] = m["trace_dist"]
            row[f"{label}_l2_dist"] = m["l2_dist"]
            row[f"{label}_lp_dist"] = m["lp_dist"]
            density_gap = float(np.abs(np.diag(op.matrix - rho_fw.matrix)).sum())
            row[f"{label}_density_l1"] = density_gap
            row[f"{label}_l1_dominates"] = bool(density_gap <= m["trace_dist"] * (1 + 1e-9))
        if rho_h_now is not None and rho_hf_now is not None:
            m = _checkpoint_metrics(rho_h_now.matrix - rho_hf_now.matrix, hbar, cfg.norms_to_track)
            row["hf_gap_trace"] = m["trace_dist"]
            row["hf_gap_lp"] = m["lp_dist"]
            X = exchange_operator(rho_hf_now, kernel)
            row["exchange_size"] = float(np.trace(X @ rho_hf_now.matrix).real)
        series.append(row)

    record(0.0, f, rho_h, rho_hf)
    for step in range(1, n_steps + 1):
        f = vlasov_step(f, kernel, evo.dt)
        if rho_h is not None:
            rho_h = hartree_step(rho_h, kernel, evo.dt)
        if rho_hf is not None:
            rho_hf = hartree_fock_step(rho_hf, kernel, evo.dt)
        if step % evo.record_every == 0 or step == n_steps:
            record(step * evo.dt, f, rho_h, rho_hf)

    final = series[-1]
    primary = "hartree" if with_hartree else "hf"
    rec = {
        "hbar": hbar,
        "n": grid.x.n_points,
        "softening": kernel.softening,
        "clipped_mass": clipped,
        "initial_trace_offset": float(
            np.abs(np.linalg.eigvalsh(rho.matrix - rho_f0.matrix)).sum()
        ),
        "trace_error": final[f"{primary}_trace_dist"],
        "l2_error": final[f"{primary}_l2_dist"],
        "lp_errors": final[f"{primary}_lp_dist"],
        "boundary_mass": _rim_mass(f),
        "l1_dominates_everywhere": all(
            row.get(f"{primary}_l1_dominates", True) for row in series
        ),
        "wallclock": _time.perf_counter() - t0,
    }
    if with_hf and with_hartree:
        rec["hf_gap_trace"] = final["hf_gap_trace"]
        rec["hf_vs_vlasov_trace"] = final["hf_trace_dist"]
        rec["exchange_size"] = final["exchange_size"]
        rec["exchange_initial"] = series[0]["exchange_size"]
    return rec, series


def _run_synthetic(cfg: ExperimentConfig) -> LadderRun:
    run = LadderRun(kind=cfg.experiment, config=cfg.to_dict())
    for hbar in cfg.hbar_ladder:
        err = math.exp(1.0) * hbar ** cfg.synthetic_slope
        run.records.append(
            {"hbar": hbar, "n": 0, "trace_error": err, "l2_error": err, "lp_errors": {}, "wallclock": 0.0}
        )
    run.fit = rate_fit([(r["hbar"], r["trace_error"]) for r in run.records])
    return run


def _run_classical_stability(cfg: ExperimentConfig) -> LadderRun:
    run = LadderRun(kind=cfg.experiment, config=cfg.to_dict())
    hbar = cfg.hbar_ladder[0] if cfg.hbar_ladder else 0.1
    grid = resonant_grid(cfg.box, hbar, cfg.n_min, cfg.n_max)
    kernel = cfg.kernel_for(grid.x.spacing)
    evo = cfg.evolution(hbar)
    f1 = cfg.initial.field(grid)
    rng = np.random.default_rng(cfg.seed)
    for mag in cfg.stability_magnitudes:
        shift = mag * math.sqrt(cfg.initial.variance_x)
        pert = InitialData(
            kind=cfg.initial.kind,
            center_x=cfg.initial.center_x + shift,
            center_xi=cfg.initial.center_xi,
            variance_x=cfg.initial.variance_x,
            variance_xi=cfg.initial.variance_xi,
            separation=cfg.initial.separation,
        )
        f2 = pert.field(grid)
        rep = estimates.classical_stability_check(f1, f2, kernel, evo)
        chk = rep.to_boundcheck()
        chk.extras["magnitude"] = mag
        run.checks.append(chk.to_json())
        for t, d1, e1 in zip(rep.times, rep.l1_distance, rep.l1_envelope):
            run.series.append({"magnitude": mag, "t": float(t), "l1_dist": float(d1), "envelope": float(e1)})
    _ = rng  # seed reserved for randomized perturbation variants
    return run


_BOUND_RUNNERS = {}


def _bound_runner(name):
    def deco(fn):
        _BOUND_RUNNERS[name] = fn
        return fn
    return deco


@_bound_runner("gaussian_decomposition")
def _bound_gaussian(cfg: ExperimentConfig) -> list:
    kernel = KernelSpec(cfg.kernel_a, cfg.kernel_sign, 0.0, cfg.kernel_log, dim=cfg.d)
    radii = cfg.bound_args.get("radii", [0.25, 0.5, 1.0, 2.0, 4.0])
    return [estimates.gaussian_decomposition_check(kernel, radii).to_json()]


def _ladder_states(cfg: ExperimentConfig, coherent: bool = False):
    """Quantized states along the hbar ladder (coherent family or fixed gaussian)."""
    out = []
    for hbar in cfg.hbar_ladder:
        grid = resonant_grid(cfg.box, hbar, cfg.n_min, cfg.n_max)
        if coherent:
            prov = lambda u, xi, hb=hbar: np.exp(-(u ** 2 + xi ** 2) / hb) / (math.pi * hb)
            init = InitialData(variance_x=hbar / 2, variance_xi=hbar / 2)
        else:
            init = cfg.initial
            prov = init.provider()
        mesh_x, mesh_xi = grid.axis_points(0), grid.axis_points(1)
        f = PhaseSpaceField(grid, prov(mesh_x, mesh_xi))
        rho = weyl_quantize(f, hbar, midpoint_source=prov)
        kernel = cfg.kernel_for(grid.x.spacing)
        out.append((hbar, grid, f, rho, kernel))
    return out


@_bound_runner("commutator_trace")
def _bound_comm_trace(cfg: ExperimentConfig) -> list:
    z_list = cfg.bound_args.get("z_list")
    checks = []
    for hbar, grid, f, rho, kernel in _ladder_states(cfg):
        zs = z_list if z_list is not None else list(grid.x.spacing * np.arange(0, 64, 8))
        checks.append(estimates.commutator_trace_check(rho, kernel, zs, hbar))
    return [estimates.merge_checks("commutator_trace", checks, "hbar_z").to_json()]


@_bound_runner("commutator_lp")
def _bound_comm_lp(cfg: ExperimentConfig) -> list:
    p = cfg.bound_args.get("p", 1.0)
    checks = []
    for hbar, grid, f, rho, kernel in _ladder_states(cfg):
        zs = cfg.bound_args.get("z_list", [0.0, 8 * grid.x.spacing])
        checks.append(estimates.commutator_lp_check(rho, kernel, zs, hbar, p))
    return [estimates.merge_checks("commutator_lp", checks, "hbar_z").to_json()]


@_bound_runner("kinetic_interpolation")
def _bound_kinetic(cfg: ExperimentConfig) -> list:
    n1 = cfg.bound_args.get("n1", 2)
    checks = [
        estimates.kinetic_interpolation_check(rho, hbar, n1)
        for hbar, grid, f, rho, kernel in _ladder_states(cfg, coherent=True)
    ]
    return [estimates.merge_checks("kinetic_interpolation", checks, "hbar").to_json()]


@_bound_runner("weighted_weyl")
def _bound_weighted(cfg: ExperimentConfig) -> list:
    n = cfg.bound_args.get("n", 2)
    n1 = cfg.bound_args.get("n1", 2)
    per_name = {}
    for hbar, grid, f, rho, kernel in _ladder_states(cfg):
        for chk in estimates.weighted_weyl_bound_check(f, hbar, n, n1):
            per_name.setdefault(chk.name, []).append(chk)
    return [
        estimates.merge_checks(name, checks, "hbar").to_json() for name, checks in per_name.items()
    ]


@_bound_runner("exchange_bound")
def _bound_exchange(cfg: ExperimentConfig) -> list:
    checks = [
        estimates.exchange_bound_check(rho, kernel, hbar)
        for hbar, grid, f, rho, kernel in _ladder_states(cfg)
    ]
    merged = estimates.merge_checks("exchange_bound", checks, "hbar")
    pts = [(pt.param, pt.lhs) for pt in merged.points if pt.lhs > 0]
    if len(pts) >= 3:
        fit = rate_fit([(2 * math.pi * h, lhs) for h, lhs in pts])
        merged.extras["slope_vs_h"] = fit["slope"]
        merged.extras["target_s"] = cfg.d - cfg.kernel_a
    return [merged.to_json()]


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> LadderRun:
    """Execute one experiment; optionally write report artifacts to out_dir."""
    if cfg.synthetic_slope is not None:
        run = _run_synthetic(cfg)
    elif cfg.experiment == "classical_stability":
        run = _run_classical_stability(cfg)
    elif cfg.experiment.startswith("bound_check:"):
        name = cfg.experiment.split(":", 1)[1]
        if name not in _BOUND_RUNNERS:
            raise ValueError(f"unknown bound check {name!r}; known: {sorted(_BOUND_RUNNERS)}")
        run = LadderRun(kind=cfg.experiment, config=cfg.to_dict())
        run.checks = _BOUND_RUNNERS[name](cfg)
    else:
        run = LadderRun(kind=cfg.experiment, config=cfg.to_dict())
        threads = int(os.environ.get("LAB_THREADS", "1"))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda h: _run_quantum_point(cfg, h), cfg.hbar_ladder))
        else:
            results = [_run_quantum_point(cfg, h) for h in cfg.hbar_ladder]
        for rec, series in results:
            run.records.append(rec)
            run.series.extend(series)
        try:
            run.fit = rate_fit([(r["hbar"], r["trace_error"]) for r in run.records])
            run.fit["l2"] = rate_fit([(r["hbar"], r["l2_error"]) for r in run.records])
        except (FitUnderdeterminedError, NonpositiveError) as exc:
            run.fit = {"error": str(exc)}
        if cfg.grid_check and run.records:
            run.fit = run.fit or {}
            run.fit["grid_budget"] = _grid_budget(cfg)
            run.fit["grid_limited"] = bool(run.fit["grid_budget"] > cfg.grid_budget)
    if out_dir is not None:
        report(run, out_dir)
    return run


def _grid_budget(cfg: ExperimentConfig) -> float:
    """Relative change of the coarsest-ladder error when n is doubled."""
    from dataclasses import replace

    hbar = cfg.hbar_ladder[0]
    base, _ = _run_quantum_point(cfg, hbar)
    fine_cfg = replace(cfg, n_min=cfg.n_min * 2, n_max=cfg.n_max * 2, grid_check=False)
    fine, _ = _run_quantum_point(fine_cfg, hbar)
    denom = max(base["trace_error"], 1e-300)
    return abs(base["trace_error"] - fine["trace_error"]) / denom


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def report(run: LadderRun, out_dir) -> Path:
    """Write run.json, checkpoints.csv, and gnuplot-ready metric columns."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(json.dumps(run.to_json(), sort_keys=True, indent=2) + "\n")

    if run.series:
        keys = sorted({k for row in run.series for k in row})
        with open(out / "checkpoints.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for row in run.series:
                writer.writerow({k: json.dumps(row[k], sort_keys=True) if isinstance(row[k], dict) else row[k] for k in row})

    if run.records:
        lines = ["# hbar  trace_error  l2_error"]
        for rec in run.records:
            lines.append(f"{rec['hbar']:.12g} {rec.get('trace_error', float('nan')):.12g} {rec.get('l2_error', float('nan')):.12g}")
        (out / "ladder.dat").write_text("\n".join(lines) + "\n")
    return out / "run.json"


def read_run(out_dir) -> LadderRun:
    data = json.loads((Path(out_dir) / "run.json").read_text())
    return LadderRun.from_json(data)


def canonical_numerics(run: LadderRun) -> bytes:
    """Deterministic byte encoding of a run with wallclock fields removed."""

    def strip(obj):
        if isinstance(obj, dict):
            return {k: strip(v) for k, v in sorted(obj.items()) if k != "wallclock"}
        if isinstance(obj, list):
            return [strip(v) for v in obj]
        return obj

    return json.dumps(strip(run.to_json()), sort_keys=True).encode()
