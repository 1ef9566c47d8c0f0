"""Hyperbolic prediction step: hydrostatic reconstruction, kinetic fluxes, time stepping."""
from __future__ import annotations

from typing import Callable, NamedTuple, Optional

import numpy as np

from .boundary import N_GHOST, WALL, BoundaryCondition, extend
from .errors import CFLViolation
from .grid import H_DRY, Bathymetry, CellState, Grid
from .kinetic import G, homogeneous_kinetic_flux


class ReconstructedPair(NamedTuple):
    H_minus: np.ndarray
    H_plus: np.ndarray
    zstar: np.ndarray


class FaceStates(NamedTuple):
    """Left (``*_l``) and right (``*_r``) traces at each of the ``cells + 1`` faces."""

    h_l: np.ndarray
    u_l: np.ndarray
    w_l: np.ndarray
    z_l: np.ndarray
    h_r: np.ndarray
    u_r: np.ndarray
    w_r: np.ndarray
    z_r: np.ndarray


class InterfaceFluxes(NamedTuple):
    """Flux 3-vectors ``(H, qx, qz)`` per face, as seen by the left and right cell."""

    F_minus: np.ndarray
    F_plus: np.ndarray


def hydrostatic_reconstruct(H_L, zb_L, H_R, zb_R) -> ReconstructedPair:
    H_L = np.asarray(H_L, dtype=float)
    H_R = np.asarray(H_R, dtype=float)
    zstar = np.maximum(zb_L, zb_R)
    H_minus = np.maximum(H_L + zb_L - zstar, 0.0)
    H_plus = np.maximum(H_R + zb_R - zstar, 0.0)
    return ReconstructedPair(H_minus, H_plus, zstar)


def interface_fluxes(faces: FaceStates, g: float = G) -> InterfaceFluxes:
    """Well-balanced kinetic fluxes on the reconstructed interface states.

    The ``qz`` flux transports the upwind vertical velocity, taken from the
    left when the mass flux is non-negative.
    """
    rec = hydrostatic_reconstruct(faces.h_l, faces.z_l, faces.h_r, faces.z_r)
    kin = homogeneous_kinetic_flux(rec.H_minus, faces.u_l, rec.H_plus, faces.u_r, g)
    f_h = kin.F_H
    f_qz = f_h * np.where(f_h >= 0.0, faces.w_l, faces.w_r)
    q_minus = kin.F_qx + 0.5 * g * (faces.h_l ** 2 - rec.H_minus ** 2)
    q_plus = kin.F_qx + 0.5 * g * (faces.h_r ** 2 - rec.H_plus ** 2)
    return InterfaceFluxes(np.stack([f_h, q_minus, f_qz]), np.stack([f_h, q_plus, f_qz]))


def _minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _limited_slopes(v, x):
    """Minmod slopes on the interior of a padded array (length shrinks by 2)."""
    d = np.diff(v) / np.diff(x)
    return _minmod(d[:-1], d[1:])


def _ghost_centers(dx_ext: np.ndarray) -> np.ndarray:
    edges = np.concatenate(([0.0], np.cumsum(dx_ext)))
    return 0.5 * (edges[:-1] + edges[1:])


def first_order_faces(H, u, w, zb, left: BoundaryCondition, right: BoundaryCondition,
                      t: float = 0.0, h_dry: float = H_DRY, dx=None, g: float = G) -> FaceStates:
    dx = np.ones_like(H) if dx is None else dx
    ext = extend(H, u, w, zb, dx, left, right, t, h_dry, g)
    lo, hi = N_GHOST - 1, ext.H.size - N_GHOST
    sl, sr = slice(lo, hi), slice(lo + 1, hi + 1)
    return FaceStates(ext.H[sl], ext.u[sl], ext.w[sl], ext.zb[sl],
                      ext.H[sr], ext.u[sr], ext.w[sr], ext.zb[sr])


def muscl_reconstruct(state: CellState, bathy: Bathymetry, grid: Grid,
                      left: BoundaryCondition = WALL, right: BoundaryCondition = WALL,
                      t: float = 0.0, h_dry: float = H_DRY, g: float = G) -> FaceStates:
    """Minmod-limited linear traces of ``(H, u, w, H + zb)``.

    Ghost cells supply the neighbours of the boundary cells. Trace depths are
    clipped at zero and the trace bottom is recovered as ``eta - H``.
    """
    u, w = state.velocities(h_dry)
    ext = extend(state.H, u, w, bathy.zb, grid.widths, left, right, t, h_dry, g)
    x = _ghost_centers(ext.dx)
    eta = ext.H + ext.zb
    # cells with one padded neighbour on each side: ghost layer 2 .. last-1
    core = slice(1, ext.H.size - 1)
    half = 0.5 * ext.dx[core]
    tr = {}
    for name, v in (("H", ext.H), ("u", ext.u), ("w", ext.w), ("eta", eta)):
        s = _limited_slopes(v, x) * half
        tr[name] = (v[core] - s, v[core] + s)
    h_lo = np.maximum(tr["H"][0], 0.0)
    h_hi = np.maximum(tr["H"][1], 0.0)
    z_lo = tr["eta"][0] - h_lo
    z_hi = tr["eta"][1] - h_hi
    # padded core index k corresponds to extended cell k + 1; faces of the
    # physical grid sit between core cells N_GHOST - 2 + j and N_GHOST - 1 + j
    n = grid.cells
    L = slice(N_GHOST - 2, N_GHOST - 2 + n + 1)
    R = slice(N_GHOST - 1, N_GHOST - 1 + n + 1)
    return FaceStates(h_hi[L], tr["u"][1][L], tr["w"][1][L], z_hi[L],
                      h_lo[R], tr["u"][0][R], tr["w"][0][R], z_lo[R])


def stable_dt(state: CellState, grid: Grid, cfl: float, g: float = G,
              h_dry: float = H_DRY, max_dt: float = np.inf) -> float:
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    u, _ = state.velocities(h_dry)
    speed = np.abs(u) + np.sqrt(2.0 * g * np.maximum(state.H, 0.0))
    vmax = float(np.max(speed))
    if vmax <= 0.0:
        return float(max_dt)
    return float(min(cfl * float(np.min(grid.widths)) / vmax, max_dt))


def prediction_step(state: CellState, bathy: Bathymetry, grid: Grid, dt: float,
                    source_s: Optional[Callable] = None, *, t: float = 0.0,
                    left: BoundaryCondition = WALL, right: BoundaryCondition = WALL,
                    order: int = 1, g: float = G, h_dry: float = H_DRY) -> CellState:
    """Explicit finite-volume update of ``(H, qx, qz)`` over ``dt``.

    With ``order=2`` the traces come from :func:`muscl_reconstruct` and the
    centered topography source keeps the lake at rest exact. ``source_s(x, t)``
    adds ``dt * H * s`` to the vertical momentum.

    Raises
    ------
    CFLViolation
        If a depth turns negative.
    """
    if order == 1:
        u, w = state.velocities(h_dry)
        faces = first_order_faces(state.H, u, w, bathy.zb, left, right, t, h_dry, grid.widths, g)
    elif order == 2:
        faces = muscl_reconstruct(state, bathy, grid, left, right, t, h_dry, g)
    else:
        raise ValueError("order must be 1 or 2")
    flux = interface_fluxes(faces, g)
    F_minus, F_plus = flux.F_minus, flux.F_plus
    for idx, bc in ((0, left), (-1, right)):
        if bc.kind == "wall":
            F_minus[0, idx] = F_plus[0, idx] = 0.0
            F_minus[2, idx] = F_plus[2, idx] = 0.0
    div = F_minus[:, 1:] - F_plus[:, :-1]
    # centered topography source, zero when traces equal cell values
    h_a, h_b = faces.h_r[:-1], faces.h_l[1:]
    sc = 0.5 * g * (h_a + h_b) * (faces.z_r[:-1] - faces.z_l[1:])
    div[1] -= sc
    X = state.stack() - (dt / grid.widths) * div
    if source_s is not None:
        X[2] = X[2] + dt * state.H * np.asarray(source_s(grid.centers, t), dtype=float)
    bad = np.flatnonzero(X[0] < 0.0)
    if bad.size:
        i = int(bad[0])
        raise CFLViolation(f"negative depth {X[0, i]:.3e} in cell {i} (x={grid.centers[i]:.6g}) "
                           f"at t={t:.6g}, dt={dt:.3e}")
    return CellState.from_stack(X)


def heun_step(state: CellState, t: float, dt: float,
              phi: Callable[[CellState, float], CellState],
              project: Optional[Callable[[CellState], CellState]] = None) -> CellState:
    """Two-stage Heun average ``(X + phi(phi(X, t), t + dt)) / 2``.

    ``project`` is applied to the averaged state when given.
    """
    s1 = phi(state, t)
    s2 = phi(s1, t + dt)
    X = 0.5 * (state.stack() + s2.stack())
    out = CellState.from_stack(X)
    return project(out) if project is not None else out
