"""Scenario set-up, the time loop and the convergence-study driver."""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import analytic, diagnostics
from .boundary import BoundaryCondition
from .config import BoundarySpec, RunConfig
from .errors import CFLViolation, ConfigError, NumericalError
from .grid import (Bathymetry, CellState, FacePressure, Grid, build_uniform_grid, bump_profile,
                   init_state, load_bathymetry_profile)
from .hyperbolic import heun_step, prediction_step, stable_dt
from .projection import CorrectionReport, divergence_residual, project

log = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = ("t", "mass", "eta_total", "eta_hyd", "max_div_residual", "clipped_faces")
SNAPSHOT_HEADER = ("x", "H", "u", "w", "zb", "p_left_face", "p_right_face")
MAX_STEP_RETRIES = 4


@dataclass
class Scenario:
    grid: Grid
    state: CellState
    bathy: Bathymetry
    left: BoundaryCondition
    right: BoundaryCondition
    source: Optional[Callable] = None
    reference: Optional[Callable] = None  # (x, t) -> fields with at least H, u, w


def _profile(cfg: RunConfig) -> Callable:
    name = cfg.bathymetry
    if name == "flat":
        return lambda x: 0.0 * np.asarray(x, dtype=float)
    if name == "bump":
        return bump_profile(cfg.bump_center, cfg.bump_height, cfg.bump_curvature)
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"bathymetry: expected flat, bump or a file path, got {name!r}")
    return load_bathymetry_profile(path)


def _boundary(spec: BoundarySpec, x_edge: float, sol, x0: float, period) -> BoundaryCondition:
    if spec.value == "soliton":
        def inflow(t: float) -> float:
            f = analytic.soliton_fields(sol, np.array([x_edge]), t, x0, period)
            return float(f.H[0] * f.u[0])
        return BoundaryCondition(spec.kind, inflow)
    return BoundaryCondition(spec.kind, spec.value)


def build_scenario(cfg: RunConfig) -> Scenario:
    grid = build_uniform_grid(cfg.x_min, cfg.x_max, cfg.cells)
    sol = period = None
    source = reference = None
    if cfg.scenario in ("lake_at_rest", "dam_break"):
        params = dict(level=cfg.level, h_left=cfg.h_left, h_right=cfg.h_right, x_dam=cfg.x_dam,
                      profile=_profile(cfg))
        state, bathy = init_state(cfg.scenario, grid, params, cfg.h_dry, cfg.quadrature_points)
        if cfg.scenario == "lake_at_rest":
            H0 = state.H.copy()
            reference = lambda x, t: analytic.SolitonFields(
                np.interp(x, grid.centers, H0), 0.0 * x, 0.0 * x, 0.0 * x)
    elif cfg.scenario == "parabolic_bowl":
        bowl = analytic.BowlParams.from_amplitude(cfg.bowl_a, cfg.bowl_H0, cfg.bowl_b1,
                                                  cfg.bowl_b2, cfg.g)
        state, bathy = init_state("parabolic_bowl", grid, {"bowl": bowl}, cfg.h_dry,
                                  cfg.quadrature_points)
        tab = analytic.BowlSolution(bowl, t_end=cfg.t_final + 1e-3)
        source = tab.source
        reference = tab.fields
    else:
        sol = analytic.SolitonParams(cfg.soliton_H0, cfg.soliton_l, cfg.soliton_d, cfg.g)
        period = (cfg.x_max - cfg.x_min) if cfg.periodic else None
        x0 = cfg.soliton_x0
        state, bathy = init_state("soliton", grid, {"soliton": sol, "x0": x0, "period": period},
                                  cfg.h_dry)
        reference = lambda x, t: analytic.soliton_fields(sol, x, t, x0, period)
    left = _boundary(cfg.bc_left, cfg.x_min, sol, cfg.soliton_x0, period)
    right = _boundary(cfg.bc_right, cfg.x_max, sol, cfg.soliton_x0, period)
    return Scenario(grid, state, bathy, left, right, source, reference)


@dataclass
class RunResult:
    config: RunConfig
    grid: Grid
    bathy: Bathymetry
    state: CellState
    pressure: FacePressure
    diagnostics: dict
    steps: int
    t: float
    wall_clock: float
    scenario: Scenario

    def reference_fields(self, t: Optional[float] = None):
        if self.scenario.reference is None:
            raise ConfigError(f"scenario {self.config.scenario} has no reference solution")
        return self.scenario.reference(self.grid.centers, self.t if t is None else t)

    def l1_error(self, field: str = "H") -> float:
        ref = self.reference_fields()
        sampler = {"H": ref.H, "u": ref.u, "w": ref.w, "p": ref.p_nh}[field]
        return diagnostics.l1_error(self.state, lambda x: sampler, self.grid, field,
                                    h_dry=self.config.h_dry, pressure=self.pressure)


class Stepper:
    """One time step of the projection-correction scheme for a fixed scenario."""

    def __init__(self, cfg: RunConfig, sc: Scenario):
        self.cfg, self.sc = cfg, sc

    def _project(self, state: CellState, dt: float):
        cfg, sc = self.cfg, self.sc
        if not cfg.nonhydrostatic:
            res = divergence_residual(state, sc.bathy, sc.grid, sc.left, sc.right,
                                      alpha=cfg.alpha, h_dry=cfg.h_dry)
            return state, np.zeros(sc.grid.cells + 1), CorrectionReport(res, 0, "none")
        new, p, rep = project(state, sc.bathy, sc.grid, dt, sc.left, sc.right, alpha=cfg.alpha,
                              epsilon=cfg.epsilon, g=cfg.g, h_dry=cfg.h_dry,
                              resolve=cfg.positivity_resolve)
        return new, p.p, rep

    def _phi(self, state: CellState, t: float, dt: float, order: int):
        cfg, sc = self.cfg, self.sc
        half = prediction_step(state, sc.bathy, sc.grid, dt, sc.source, t=t, left=sc.left,
                               right=sc.right, order=order, g=cfg.g, h_dry=cfg.h_dry)
        return self._project(half, dt)

    def __call__(self, state: CellState, t: float, dt: float):
        """Return ``(state, pressure, clipped_faces, residual)`` after a step of length ``dt``.

        ``residual`` is the divergence residual of the returned state.
        """
        if self.cfg.order == 1:
            new, p, rep = self._phi(state, t, dt, 1)
            return new, p, rep.pressure_clipped_faces, rep.max_div_residual
        pressures, clipped, last = [], [0], []

        def phi(s, tt):
            out, p, rep = self._phi(s, tt, dt, 2)
            pressures.append(p)
            clipped[0] += rep.pressure_clipped_faces
            return out

        def finish(s):
            out, p, rep = self._project(s, dt)
            pressures.append(p)
            clipped[0] += rep.pressure_clipped_faces
            last.append(rep.max_div_residual)
            return out

        new = heun_step(state, t, dt, phi, finish if self.cfg.final_projection else None)
        p = 0.5 * (pressures[0] + pressures[1])
        if last:
            p = p + pressures[2]
            res = last[0]
        else:
            sc = self.sc
            res = divergence_residual(new, sc.bathy, sc.grid, sc.left, sc.right,
                                      alpha=self.cfg.alpha, h_dry=self.cfg.h_dry)
        return new, p, clipped[0], res


def _write_snapshot(path: Path, grid: Grid, bathy: Bathymetry, state: CellState, p, h_dry):
    u, w = state.velocities(h_dry)
    cols = (grid.centers, state.H, u, w, bathy.zb, p[:-1], p[1:])
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(SNAPSHOT_HEADER) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _write_table(path: Path, columns: Sequence[str], data: dict):
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in zip(*(data[c] for c in columns)):
            fh.write(",".join(str(v) if isinstance(v, (int, np.integer)) else f"{v:.17g}"
                              for v in row) + "\n")


def run_simulation(cfg: RunConfig, observer: Optional[Callable] = None) -> RunResult:
    """Run the time loop of ``cfg``.

    Stops at ``t_final`` or after ``max_steps`` steps, whichever comes first.
    ``observer(step, t, state, pressure)`` is called after every step.

    Raises
    ------
    NumericalError
        Negative depth or singular pressure system, with step and time context.
    """
    sc = build_scenario(cfg)
    grid, bathy = sc.grid, sc.bathy
    state = sc.state
    p = np.zeros(grid.cells + 1)
    step_fn = Stepper(cfg, sc)
    out = Path(cfg.out_dir) if cfg.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.resolved").write_text(cfg.to_text(), encoding="utf-8")
    snaps: list[tuple[int, float]] = []

    def snapshot(t):
        if out is None:
            return
        k = len(snaps)
        _write_snapshot(out / f"snapshot_{k:05d}.csv", grid, bathy, state, p, cfg.h_dry)
        snaps.append((k, t))

    diag = {k: [] for k in (*DIAGNOSTIC_COLUMNS, "dt", "min_H", "max_u", "flux_left",
                            "flux_right", "probe_error")}
    probe_ref = cfg.scenario == "parabolic_bowl" and sc.reference is not None

    def record(t, dt, clipped, residual):
        e = diagnostics.total_energy(state, bathy, grid, cfg.g, cfg.h_dry)
        u, _ = state.velocities(cfg.h_dry)
        flux = diagnostics.face_energy_flux(state, bathy, grid, p, cfg.g, cfg.h_dry)
        diag["t"].append(t)
        diag["dt"].append(dt)
        diag["mass"].append(diagnostics.mass(state, grid))
        diag["eta_total"].append(e.eta_total)
        diag["eta_hyd"].append(e.eta_hyd)
        diag["max_div_residual"].append(residual)
        diag["clipped_faces"].append(int(clipped))
        diag["min_H"].append(float(np.min(state.H)))
        diag["max_u"].append(float(np.max(np.abs(u), initial=0.0)))
        diag["flux_left"].append(float(flux[0]))
        diag["flux_right"].append(float(flux[-1]))
        if probe_ref:
            h_exact = float(sc.reference(np.array([cfg.probe_x]), t).H[0])
            diag["probe_error"].append(diagnostics.point_relative_error(
                state, grid, h_exact, cfg.probe_x, cfg.h_dry))
        else:
            diag["probe_error"].append(math.nan)

    t, steps = 0.0, 0
    record(t, 0.0, 0, divergence_residual(state, bathy, grid, sc.left, sc.right,
                                          alpha=cfg.alpha, h_dry=cfg.h_dry))
    snapshot(t)
    interval = cfg.snapshot_interval
    next_snap = interval if interval else math.inf
    t_tol = 1e-12 * max(1.0, cfg.t_final)
    start = time.perf_counter()
    while cfg.t_final - t > t_tol and (cfg.max_steps is None or steps < cfg.max_steps):
        dt = stable_dt(state, grid, cfg.cfl, cfg.g, cfg.h_dry, cfg.max_dt)
        dt = min(dt, cfg.t_final - t, next_snap - t)
        if not (dt > 0.0 and math.isfinite(dt)):
            raise NumericalError(f"step {steps + 1}, t={t:.9g}: invalid time step {dt!r}")
        for attempt in range(MAX_STEP_RETRIES + 1):
            try:
                state_new, p_new, clipped, residual = step_fn(state, t, dt)
                break
            except CFLViolation as exc:
                if attempt == MAX_STEP_RETRIES:
                    raise CFLViolation(f"step {steps + 1}, t={t:.9g}: {exc}") from exc
                log.info("step %d, t=%g: %s; retrying with dt=%g", steps + 1, t, exc, dt / 2)
                dt *= 0.5
            except NumericalError as exc:
                raise type(exc)(f"step {steps + 1}, t={t:.9g}: {exc}") from exc
        state, p = state_new, p_new
        t = t + dt
        steps += 1
        if not np.all(np.isfinite(state.stack())):
            raise NumericalError(f"step {steps}, t={t:.9g}: non-finite state")
        record(t, dt, clipped, residual)
        if observer is not None:
            observer(steps, t, state, p)
        if t >= next_snap - t_tol:
            snapshot(t)
            next_snap += interval
    wall = time.perf_counter() - start
    if out is not None:
        if not snaps or snaps[-1][1] != t:
            snapshot(t)
        _write_table(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS, diag)
        _write_table(out / "snapshots.csv", ("index", "t"),
                     {"index": [k for k, _ in snaps], "t": [s for _, s in snaps]})
    log.info("finished %s: %d steps to t=%g in %.2fs", cfg.scenario, steps, t, wall)
    return RunResult(cfg, grid, bathy, state, FacePressure(p),
                     {k: np.asarray(v) for k, v in diag.items()}, steps, t, wall, sc)


@dataclass(frozen=True)
class ConvergenceRow:
    cells: int
    h: float
    l1_error: float
    order: float
    status: str


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]
    order: float

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["cells", "h", "L1_error", "order", "status"])
            for r in self.rows:
                w.writerow([r.cells, f"{r.h:.17g}", f"{r.l1_error:.17g}",
                            "" if math.isnan(r.order) else f"{r.order:.6f}", r.status])
            w.writerow(["least_squares", "", "", "" if math.isnan(self.order) else
                        f"{self.order:.6f}", ""])


def _mesh_error(args):
    cfg, field = args
    try:
        res = run_simulation(cfg)
        return res.l1_error(field), "ok"
    except (NumericalError, ConfigError) as exc:
        return math.nan, f"failed: {exc}"


def run_convergence_study(config_template: RunConfig, mesh_list: Sequence[int], *,
                          field: str = "H", out_path=None, workers: int = 1) -> ConvergenceTable:
    """Independent runs on each mesh; failed meshes are kept as marked rows."""
    meshes = [int(m) for m in mesh_list]
    if len(meshes) < 2:
        raise ConfigError("a convergence study needs at least 2 meshes")
    cfgs = [(config_template.replace(cells=m, out_dir=None), field) for m in meshes]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_mesh_error, cfgs))
    else:
        results = [_mesh_error(c) for c in cfgs]
    length = config_template.x_max - config_template.x_min
    hs = [length / m for m in meshes]
    rows = []
    for k, (m, h, (err, status)) in enumerate(zip(meshes, hs, results)):
        order = math.nan
        if k > 0:
            e0, h0 = results[k - 1][0], hs[k - 1]
            if h0 == h:
                status = "order undefined: repeated mesh" if status == "ok" else status
            elif e0 > 0 and err > 0:
                order = math.log(e0 / err) / math.log(h0 / h)
        rows.append(ConvergenceRow(m, h, err, order, status))
    errs = np.array([r.l1_error for r in rows])
    good = np.isfinite(errs) & (errs > 0)
    try:
        order = diagnostics.convergence_order(errs[good], np.array(hs)[good]).order
    except ValueError:
        order = math.nan
    table = ConvergenceTable(tuple(rows), order)
    if out_path is not None:
        table.to_csv(out_path)
    return table
