"""Correction step: pressure solve, positivity clip, velocity update."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import WALL, BoundaryCondition, check_pair
from .grid import H_DRY, Bathymetry, CellState, FacePressure, Grid
from .kinetic import G
from .operators import (ALPHA, assemble_laplacian, constrained_faces,
                        correction_coefficients, div_sw)


@dataclass(frozen=True)
class CorrectionReport:
    max_div_residual: float
    pressure_clipped_faces: int
    solver: str = "direct-tridiagonal"


def solve_pressure(state_half: CellState, bathy: Bathymetry, grid: Grid, dt: float,
                   left: BoundaryCondition = WALL, right: BoundaryCondition = WALL, *,
                   alpha: float = ALPHA, epsilon: float = 1e-6,
                   h_dry: float = H_DRY, released=None) -> FacePressure:
    """Face pressure making the corrected velocity field divergence free.

    ``released`` faces are held at zero pressure and carry no constraint.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    u, w = state_half.velocities(h_dry)
    system = assemble_laplacian(state_half.H, bathy.zb, grid, left, right, u=u, w=w, dt=dt,
                                alpha=alpha, epsilon=epsilon, h_dry=h_dry, released=released)
    sol = system.solve()
    p = np.zeros(grid.cells + 1)
    if system.periodic:
        p[:-1] = sol
        p[-1] = sol[0]
    else:
        p[:] = sol
    p[~_unknown_mask(system, grid)] = 0.0
    return FacePressure(p)


def _unknown_mask(system, grid: Grid) -> np.ndarray:
    mask = np.zeros(grid.cells + 1, dtype=bool)
    if system.periodic:
        mask[:-1] = system.active
        mask[-1] = system.active[0]
    else:
        mask[:] = system.active
    return mask


def enforce_pressure_positivity(p, H, g: float = G, periodic: bool = False):
    """Zero the faces where the total pressure ``g/2 min(H_L, H_R) + p`` is not positive.

    Returns the clipped pressure and the indices of faces whose non-zero
    value was removed.
    """
    p = np.array(getattr(p, "p", p), dtype=float)
    H = np.asarray(H, dtype=float)
    n = H.size
    if p.size != n + 1:
        raise ValueError("p must have one value per face")
    left = np.concatenate(([H[-1] if periodic else H[0]], H))
    right = np.concatenate((H, [H[0] if periodic else H[-1]]))
    bad = 0.5 * g * np.minimum(left, right) + p <= 0.0
    clipped = np.flatnonzero(bad & (p != 0.0))
    p[bad] = 0.0
    return FacePressure(p), clipped


def correct_velocity(state_half: CellState, p, bathy: Bathymetry, grid: Grid, dt: float,
                     epsilon: float = 1e-6, *, alpha: float = ALPHA, periodic: bool = False,
                     h_dry: float = H_DRY) -> CellState:
    """Apply ``v -= dt * grad_sw p / H`` (regularised); depth and dry cells are untouched."""
    p = np.asarray(getattr(p, "p", p), dtype=float)
    H = state_half.H
    C = correction_coefficients(H, bathy.zb, grid, epsilon, alpha, periodic, h_dry)
    pL, pR = p[:-1], p[1:]
    du = C.u_left * pL + C.u_right * pR
    dw = C.w_left * pL + C.w_right * pR
    wet = H >= h_dry
    qx = np.where(wet, state_half.qx - dt * H * du, state_half.qx)
    qz = np.where(wet, state_half.qz - dt * H * dw, state_half.qz)
    return CellState(H, qx, qz)


def divergence_residual(state: CellState, bathy: Bathymetry, grid: Grid,
                        left: BoundaryCondition = WALL, right: BoundaryCondition = WALL, *,
                        alpha: float = ALPHA, h_dry: float = H_DRY, released=None) -> float:
    """Largest ``|div_sw v|`` over the faces that carry a constraint."""
    periodic = check_pair(left, right)
    u, w = state.velocities(h_dry)
    d = div_sw(u, w, state.H, bathy.zb, grid, alpha, periodic)
    active = constrained_faces(state.H, grid, left, right, h_dry, released)
    return float(np.max(np.abs(d[active]), initial=0.0))


def project(state_half: CellState, bathy: Bathymetry, grid: Grid, dt: float,
            left: BoundaryCondition = WALL, right: BoundaryCondition = WALL, *,
            alpha: float = ALPHA, epsilon: float = 1e-6, g: float = G,
            h_dry: float = H_DRY, resolve: bool = True):
    """Solve, enforce the total-pressure constraint and correct.

    With ``resolve`` (default) faces failing the constraint are released,
    i.e. their pressure is fixed to zero, and the system is solved again
    until no new face fails; the corrected field is then divergence free on
    every remaining constrained face. Without it a single clip follows the
    solve.

    Returns
    -------
    state : CellState
        Corrected state with ``H`` identical to the input.
    pressure : FacePressure
    report : CorrectionReport
        ``pressure_clipped_faces`` counts faces whose non-zero pressure was removed.
    """
    periodic = check_pair(left, right)
    released = np.zeros(grid.cells + 1, dtype=bool)
    kw = dict(alpha=alpha, epsilon=epsilon, h_dry=h_dry)
    p = solve_pressure(state_half, bathy, grid, dt, left, right, **kw)
    p_clip, clipped = enforce_pressure_positivity(p, state_half.H, g, periodic)
    while resolve and clipped.size:
        released[clipped] = True
        if periodic:
            released[0] = released[-1] = released[0] or released[-1]
        p = solve_pressure(state_half, bathy, grid, dt, left, right, released=released, **kw)
        p_clip, clipped = enforce_pressure_positivity(p, state_half.H, g, periodic)
    if not resolve:
        released[clipped] = True
    n_released = int(np.count_nonzero(released[:-1] if periodic else released))
    new = correct_velocity(state_half, p_clip, bathy, grid, dt, epsilon, alpha=alpha,
                           periodic=periodic, h_dry=h_dry)
    res = divergence_residual(new, bathy, grid, left, right, alpha=alpha, h_dry=h_dry,
                              released=released)
    return new, p_clip, CorrectionReport(res, n_released)
