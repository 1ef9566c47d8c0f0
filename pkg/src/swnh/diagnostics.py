"""Energy, mass, error norms and convergence rates."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .grid import H_DRY, Bathymetry, CellState, Grid
from .kinetic import G


@dataclass(frozen=True)
class EnergyBreakdown:
    """``eta_total = eta_hyd + kinetic_vertical`` (domain integrals)."""

    eta_total: float
    eta_hyd: float
    kinetic_vertical: float


def total_energy(state: CellState, bathy: Bathymetry, grid: Grid, g: float = G,
                 h_dry: float = H_DRY) -> EnergyBreakdown:
    u, w = state.velocities(h_dry)
    H = state.H
    hyd = grid.widths * (0.5 * H * u * u + 0.5 * g * H * H + g * H * bathy.zb)
    vert = grid.widths * 0.5 * H * w * w
    e_hyd = float(np.sum(hyd))
    e_vert = float(np.sum(vert))
    return EnergyBreakdown(e_hyd + e_vert, e_hyd, e_vert)


def mass(state: CellState, grid: Grid) -> float:
    return float(np.sum(grid.widths * state.H))


FIELDS = ("H", "u", "w", "p")


def field_values(state: CellState, field: str, h_dry: float = H_DRY, pressure=None) -> np.ndarray:
    if field == "H":
        return state.H
    if field in ("u", "w"):
        u, w = state.velocities(h_dry)
        return u if field == "u" else w
    if field == "p":
        if pressure is None:
            raise ValueError("field 'p' needs the face pressure")
        p = np.asarray(getattr(pressure, "p", pressure), dtype=float)
        return 0.5 * (p[:-1] + p[1:])
    raise ValueError(f"field must be one of {FIELDS}")


def l1_error(state: CellState, reference_sampler: Callable, grid: Grid, field: str = "H",
             *, h_dry: float = H_DRY, pressure=None, relative: bool = True) -> float:
    """``sum dx |v - ref(x_i)|``, relative to ``sum dx |ref|`` unless that is below 1e-14.

    ``reference_sampler(x)`` returns point values at the cell centres. For the
    pressure the face values are averaged to cells.
    """
    v = field_values(state, field, h_dry, pressure)
    ref = np.asarray(reference_sampler(grid.centers), dtype=float)
    err = float(np.sum(grid.widths * np.abs(v - ref)))
    norm = float(np.sum(grid.widths * np.abs(ref)))
    return err / norm if relative and norm > 1e-14 else err


class ConvergenceFit(NamedTuple):
    order: float
    pairwise: np.ndarray
    used: np.ndarray


def convergence_order(errors: Sequence[float], mesh_sizes: Sequence[float]) -> ConvergenceFit:
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Non-positive or non-finite errors are dropped with a warning. Pairwise
    slopes between consecutive retained meshes are NaN where two meshes
    coincide.

    Raises
    ------
    ValueError
        If fewer than two meshes remain.
    """
    e = np.asarray(errors, dtype=float)
    h = np.asarray(mesh_sizes, dtype=float)
    if e.shape != h.shape:
        raise ValueError("errors and mesh_sizes must have the same length")
    keep = np.isfinite(e) & (e > 0.0) & (h > 0.0)
    if not np.all(keep):
        warnings.warn(f"excluding {int(np.sum(~keep))} mesh(es) with non-positive error",
                      RuntimeWarning, stacklevel=2)
    e, h = e[keep], h[keep]
    if e.size < 2:
        raise ValueError("at least two meshes with positive error are required")
    lh, le = np.log(h), np.log(e)
    with np.errstate(divide="ignore", invalid="ignore"):
        dh = np.diff(lh)
        pair = np.where(dh != 0.0, np.diff(le) / np.where(dh != 0.0, dh, 1.0), np.nan)
    if np.ptp(lh) == 0.0:
        return ConvergenceFit(float("nan"), pair, np.flatnonzero(keep))
    slope = float(np.polyfit(lh, le, 1)[0])
    return ConvergenceFit(slope, pair, np.flatnonzero(keep))


def mesh_size(grid: Grid) -> float:
    return float(np.max(grid.widths))


def point_relative_error(state: CellState, grid: Grid, H_exact: float, x0: float,
                         h_dry: float = H_DRY) -> float:
    """``100 |H_sim - H_exact| / H_sim`` at ``x0``, with ``H_sim`` floored at ``h_dry``.

    ``H_sim`` is linearly interpolated between cell centres.
    """
    h_sim = float(np.interp(x0, grid.centers, state.H))
    return 100.0 * abs(h_sim - H_exact) / max(h_sim, h_dry)


def face_energy_flux(state: CellState, bathy: Bathymetry, grid: Grid, p=None,
                     g: float = G, h_dry: float = H_DRY) -> np.ndarray:
    """Energy flux through every face from arithmetic face means.

    ``(Hu)_f (u_f^2 / 2 + w_f^2 / 2 + g (H_f + zb_f)) + (Hu)_f p_f``, with
    mirrored cells beyond the boundaries, so walls carry no flux.
    """
    u, w = state.velocities(h_dry)
    n = grid.cells
    L = np.concatenate(([0], np.arange(n)))
    R = np.concatenate((np.arange(n), [n - 1]))
    sign_l = np.ones(n + 1)
    sign_r = np.ones(n + 1)
    sign_l[0] = -1.0
    sign_r[-1] = -1.0
    q = state.H * u
    qf = 0.5 * (sign_l * q[L] + sign_r * q[R])
    uf = 0.5 * (sign_l * u[L] + sign_r * u[R])
    wf = 0.5 * (w[L] + w[R])
    hf = 0.5 * (state.H[L] + state.H[R])
    zf = 0.5 * (bathy.zb[L] + bathy.zb[R])
    pf = np.zeros(n + 1) if p is None else np.asarray(getattr(p, "p", p), dtype=float)
    return qf * (0.5 * uf * uf + 0.5 * wf * wf + g * (hf + zf)) + qf * pf


class EntropySeries(NamedTuple):
    t: np.ndarray
    energy: np.ndarray
    flux_left: np.ndarray
    flux_right: np.ndarray

    def budget_residual(self) -> np.ndarray:
        """Energy change per step plus the time-integrated net outflow (trapezoidal)."""
        dt = np.diff(self.t)
        net = self.flux_right - self.flux_left
        return np.diff(self.energy) + 0.5 * dt * (net[1:] + net[:-1])


def entropy_flux_series(run) -> EntropySeries:
    """Energy and boundary energy fluxes recorded by a run (see :class:`swnh.runner.RunResult`)."""
    d = run.diagnostics
    return EntropySeries(np.asarray(d["t"]), np.asarray(d["eta_total"]),
                         np.asarray(d["flux_left"]), np.asarray(d["flux_right"]))
