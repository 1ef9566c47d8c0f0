"""Shallow-water gradient and divergence on the staggered grid, and the pressure operator.

Pressures live on the ``cells + 1`` faces, velocities in the cells. With
``zeta_i = H_i / 2 + zb_i`` and ``A_f = zeta_R - zeta_L`` across face ``f``::

    dx_i grad_i p|1 = H_i (p_R - p_L) + p_R A_R + p_L A_L
    dx_i grad_i p|2 = -(alpha / 2) (dxf_R p_R + dxf_L p_L)
    dxf_f div_f v   = (Hu)_R - (Hu)_L - (u_L + u_R) A_f + (alpha / 2) dxf_f (w_L + w_R)

where ``p_L, p_R`` are the pressures on the faces of cell ``i`` and ``L, R``
the cells around face ``f``. Outside the domain cells are mirrored (``A = 0``)
unless the grid is periodic.

The velocity correction is linear in the face pressures,
``v_new = v - dt * C p``, and the pressure equation enforces
``Bt v_new = 0`` with ``Bt`` the divergence scaled by ``dxf``. The system
matrix is ``K = -Bt C`` (tridiagonal because each operator only touches
neighbours). Without regularisation ``C = -D^-1 Lambda Bt^T`` with
``D = diag(dx)`` and ``Lambda = diag(1/H)``, so ``K`` is symmetric positive
definite on wet domains.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .boundary import WALL, BoundaryCondition, check_pair, pinned_faces
from .grid import H_DRY, Grid
from .tridiag import TriDiagSystem

ALPHA = 2.0


class SwGradient(NamedTuple):
    comp1: np.ndarray
    comp2: np.ndarray


class FaceGeometry(NamedTuple):
    """Per-face data: neighbour cell indices, widths and ``zeta`` jump."""

    left: np.ndarray
    right: np.ndarray
    dxf: np.ndarray
    A: np.ndarray


def face_geometry(H, zb, grid: Grid, periodic: bool = False) -> FaceGeometry:
    n = grid.cells
    zeta = 0.5 * np.asarray(H, dtype=float) + np.asarray(zb, dtype=float)
    faces = np.arange(n + 1)
    left = faces - 1
    right = faces.copy()
    dxf = grid.face_widths.copy()
    if periodic:
        left[0], right[-1] = n - 1, 0
        dxf[0] = dxf[-1] = 0.5 * (grid.widths[0] + grid.widths[-1])
    else:
        left[0], right[-1] = 0, n - 1
    A = zeta[right] - zeta[left]
    return FaceGeometry(left, right, dxf, A)


def grad_sw(p, H, zb, grid: Grid, alpha: float = ALPHA, periodic: bool = False) -> SwGradient:
    p = np.asarray(getattr(p, "p", p), dtype=float)
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, zb, grid, periodic)
    pL, pR = p[:-1], p[1:]
    c1 = H * (pR - pL) + pR * geo.A[1:] + pL * geo.A[:-1]
    c2 = -0.5 * alpha * (geo.dxf[1:] * pR + geo.dxf[:-1] * pL)
    return SwGradient(c1 / grid.widths, c2 / grid.widths)


def grad_sw_eps(p, H, zb, grid: Grid, epsilon: float, alpha: float = ALPHA,
                periodic: bool = False) -> SwGradient:
    """Gradient already divided by the depth, regularised below ``epsilon``.

    ``1/H`` becomes ``1/max(H, epsilon)`` and the ``zeta`` terms of the first
    component are dropped where ``H < epsilon``, so the result stays bounded
    on dry cells.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    p = np.asarray(getattr(p, "p", p), dtype=float)
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, zb, grid, periodic)
    inv = np.where(H >= epsilon, 1.0, 0.0) / np.maximum(H, epsilon)
    pL, pR = p[:-1], p[1:]
    c1 = (pR - pL) + inv * (pR * geo.A[1:] + pL * geo.A[:-1])
    c2 = -0.5 * alpha * (geo.dxf[1:] * pR + geo.dxf[:-1] * pL) / np.maximum(H, epsilon)
    return SwGradient(c1 / grid.widths, c2 / grid.widths)


def scaled_div_sw(u, w, H, zb, grid: Grid, alpha: float = ALPHA,
                  periodic: bool = False) -> np.ndarray:
    """``dxf * div_sw`` on all faces, with mirrored cells outside the domain."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, zb, grid, periodic)
    L, R = geo.left, geo.right
    q = H * u
    return q[R] - q[L] - (u[L] + u[R]) * geo.A + 0.5 * alpha * geo.dxf * (w[L] + w[R])


def div_sw(u, w, H, zb, grid: Grid, alpha: float = ALPHA, periodic: bool = False) -> np.ndarray:
    """Shallow-water divergence on the ``cells + 1`` faces.

    Boundary faces of a non-periodic grid carry no constraint and are
    returned as zero; on a periodic grid the last face repeats the first.
    """
    d = scaled_div_sw(u, w, H, zb, grid, alpha, periodic) / face_geometry(H, zb, grid, periodic).dxf
    if not periodic:
        d[0] = d[-1] = 0.0
    return d


def duality_face_terms(p, u, w, H, zb, grid: Grid, alpha: float = ALPHA,
                       periodic: bool = False) -> np.ndarray:
    """Face fluxes ``p (Hu)_f + d_f`` of the cellwise duality identity.

    For every cell,
    ``dx_i grad_i p . v_i + (D_R + D_L) / 2 = G_R - G_L`` with
    ``D_f = dxf_f p_f div_f v`` and ``G`` the value returned here, where
    ``(Hu)_f`` is the arithmetic face mean and
    ``d_f = (p_f / 2) ((alpha / 2) dxf_f (w_R - w_L) - (u_R - u_L) A_f)``.
    Summing over cells gives the discrete adjoint relation between the two
    operators up to boundary terms.
    """
    p = np.asarray(getattr(p, "p", p), dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, zb, grid, periodic)
    L, R = geo.left, geo.right
    q = H * u
    d = 0.5 * p * (0.5 * alpha * geo.dxf * (w[R] - w[L]) - (u[R] - u[L]) * geo.A)
    return p * 0.5 * (q[L] + q[R]) + d


class CorrectionCoefficients(NamedTuple):
    """``v_new = v - dt * C p`` with per-cell weights on the left/right face pressure."""

    u_left: np.ndarray
    u_right: np.ndarray
    w_left: np.ndarray
    w_right: np.ndarray


def correction_coefficients(H, zb, grid: Grid, epsilon: float, alpha: float = ALPHA,
                            periodic: bool = False, h_dry: float = H_DRY) -> CorrectionCoefficients:
    """Rows of ``C`` (from :func:`grad_sw_eps`); dry cells get zero rows."""
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, zb, grid, periodic)
    inv = np.where(H >= epsilon, 1.0, 0.0) / np.maximum(H, epsilon)
    wet = H >= h_dry
    dx = grid.widths
    cu_r = np.where(wet, (1.0 + inv * geo.A[1:]) / dx, 0.0)
    cu_l = np.where(wet, (-1.0 + inv * geo.A[:-1]) / dx, 0.0)
    cw = -0.5 * alpha / (dx * np.maximum(H, epsilon))
    cw_r = np.where(wet, cw * geo.dxf[1:], 0.0)
    cw_l = np.where(wet, cw * geo.dxf[:-1], 0.0)
    return CorrectionCoefficients(cu_l, cu_r, cw_l, cw_r)


def divergence_matrices(H, zb, grid: Grid, alpha: float = ALPHA, periodic: bool = False):
    """Dense ``(Bu, Bw)`` with ``Bu @ u + Bw @ w == scaled_div_sw(u, w, ...)``."""
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, zb, grid, periodic)
    nf, n = grid.cells + 1, grid.cells
    Bu = np.zeros((nf, n))
    Bw = np.zeros((nf, n))
    f = np.arange(nf)
    np.add.at(Bu, (f, geo.right), H[geo.right] - geo.A)
    np.add.at(Bu, (f, geo.left), -H[geo.left] - geo.A)
    np.add.at(Bw, (f, geo.right), 0.5 * alpha * geo.dxf)
    np.add.at(Bw, (f, geo.left), 0.5 * alpha * geo.dxf)
    return Bu, Bw


def constrained_faces(H, grid: Grid, left: BoundaryCondition = WALL,
                      right: BoundaryCondition = WALL, h_dry: float = H_DRY,
                      released=None) -> np.ndarray:
    """Faces carrying an incompressibility constraint (pressure unknowns).

    Excludes boundary faces, the extra given-depth face, faces next to a
    dry cell and the ``released`` faces (pressure held at zero).
    """
    periodic = check_pair(left, right)
    n = grid.cells
    H = np.asarray(H, dtype=float)
    geo = face_geometry(H, np.zeros(n), grid, periodic)
    dry = H < h_dry
    active = ~pinned_faces(n, left, right) & ~(dry[geo.left] | dry[geo.right])
    if released is not None:
        active &= ~np.asarray(released, dtype=bool)
    if periodic:
        active[-1] = False
    return active


def assemble_laplacian(H, zb, grid: Grid, bc_left: BoundaryCondition = WALL,
                       bc_right: BoundaryCondition = WALL, *, u=None, w=None, dt: float = 1.0,
                       alpha: float = ALPHA, epsilon: float = 1e-6,
                       h_dry: float = H_DRY, released=None) -> TriDiagSystem:
    """Tridiagonal pressure system ``K p = -Bt v / dt`` on the faces.

    Rows are indexed by face. Inactive faces (see :func:`constrained_faces`)
    become identity rows with zero right-hand side, and their coupling
    columns are removed so that symmetry is kept. On a periodic grid the
    system has ``cells`` unknowns (face ``cells`` is face ``0``) and the
    corner entries are stored in ``lower[0]`` and ``upper[-1]``.
    When ``u, w`` are omitted the right-hand side is zero. ``released`` is an
    optional face mask of additional zero-pressure faces.
    """
    periodic = check_pair(bc_left, bc_right)
    H = np.asarray(H, dtype=float)
    n = grid.cells
    geo = face_geometry(H, zb, grid, periodic)
    C = correction_coefficients(H, zb, grid, epsilon, alpha, periodic, h_dry)
    L, R = geo.left, geo.right
    bl = -H[L] - geo.A
    br = H[R] - geo.A
    bw = 0.5 * alpha * geo.dxf
    # K[f, f] through the right face of L and the left face of R
    diag = -(bl * C.u_right[L] + bw * C.w_right[L] + br * C.u_left[R] + bw * C.w_left[R])
    upper = -(br * C.u_right[R] + bw * C.w_right[R])
    lower = -(bl * C.u_left[L] + bw * C.w_left[L])
    if u is None:
        rhs = np.zeros(n + 1)
    else:
        rhs = -scaled_div_sw(u, w, H, zb, grid, alpha, periodic) / dt
    active = constrained_faces(H, grid, bc_left, bc_right, h_dry, released)
    if periodic:
        m = n
        diag, upper, lower, rhs = diag[:m].copy(), upper[:m].copy(), lower[:m].copy(), rhs[:m].copy()
        active = active[:m].copy()
        nxt = np.roll(active, -1)
        prv = np.roll(active, 1)
    else:
        m = n + 1
        lower[0] = upper[-1] = 0.0
        nxt = np.append(active[1:], False)
        prv = np.insert(active[:-1], 0, False)
    upper = np.where(active & nxt, upper, 0.0)
    lower = np.where(active & prv, lower, 0.0)
    diag = np.where(active, diag, 1.0)
    rhs = np.where(active, rhs, 0.0)
    return TriDiagSystem(lower, diag, upper, rhs, periodic, active)


def dense_operator(H, zb, grid: Grid, epsilon: float = 1e-6, alpha: float = ALPHA,
                   periodic: bool = False, h_dry: float = H_DRY) -> np.ndarray:
    """Dense ``K = Bt C`` on all ``cells + 1`` faces, without boundary handling."""
    Bu, Bw = divergence_matrices(H, zb, grid, alpha, periodic)
    C = correction_coefficients(H, zb, grid, epsilon, alpha, periodic, h_dry)
    n = grid.cells
    Cu = np.zeros((n, n + 1))
    Cw = np.zeros((n, n + 1))
    i = np.arange(n)
    Cu[i, i], Cu[i, i + 1] = C.u_left, C.u_right
    Cw[i, i], Cw[i, i + 1] = C.w_left, C.w_right
    if periodic:
        # face n is face 0
        Cu[:, 0] += Cu[:, n]
        Cw[:, 0] += Cw[:, n]
        Cu[:, n] = Cw[:, n] = 0.0
    return -(Bu @ Cu + Bw @ Cw)
