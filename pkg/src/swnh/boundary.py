"""Boundary conditions: ghost cells for the hyperbolic step, pinned faces for the pressure.

Four kinds are supported on each side independently:

``wall``
    Mirror depth and bottom, negate the horizontal velocity, copy ``w``.
``periodic``
    Wrap around; must be used on both sides.
``given_flux``
    Ghost discharge set to ``Q0`` (a number or a function of time). The ghost
    depth keeps the outgoing Riemann invariant ``u -+ 2 sqrt(gH)`` of the
    boundary cell (the boundary cell depth is copied when no such depth
    exists); ``w`` is copied. The boundary face pressure is zero.
``given_depth``
    Ghost depth set to ``H0``, discharge and ``w`` copied. The pressure
    vanishes on the boundary face and on the first interior face.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError
from .kinetic import G

KINDS = ("wall", "periodic", "given_flux", "given_depth")

#: ghost layers on each side (enough for a limited linear reconstruction)
N_GHOST = 2


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str = "wall"
    value: Union[float, Callable[[float], float], None] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown boundary kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("given_flux", "given_depth") and self.value is None:
            raise ConfigError(f"{self.kind} boundary needs a value")

    def at(self, t: float) -> float:
        v = self.value
        return float(v(t)) if callable(v) else float(v)

    def __str__(self) -> str:
        if self.kind in ("given_flux", "given_depth"):
            v = "function" if callable(self.value) else repr(float(self.value))
            return f"{self.kind}({v})"
        return self.kind


WALL = BoundaryCondition("wall")
PERIODIC = BoundaryCondition("periodic")


def check_pair(left: BoundaryCondition, right: BoundaryCondition) -> bool:
    """Validate a boundary pair; return True when the domain is periodic."""
    if (left.kind == "periodic") != (right.kind == "periodic"):
        raise ConfigError("periodic boundaries must be used on both sides")
    return left.kind == "periodic"


class Extended(NamedTuple):
    """Primitive fields padded with ``N_GHOST`` ghost cells on each side."""

    H: np.ndarray
    u: np.ndarray
    w: np.ndarray
    zb: np.ndarray
    dx: np.ndarray


def characteristic_depth(q0: float, H1: float, u1: float, side: str, g: float = G,
                         h_dry: float = 1e-10) -> float:
    """Depth ``h`` with ``q0 / h -+ 2 sqrt(g h)`` equal to the outgoing invariant of ``(H1, u1)``.

    ``side`` is ``"left"`` (invariant ``u - 2c``) or ``"right"`` (``u + 2c``).
    Returns ``H1`` when the cell is dry or no positive root brackets ``H1``.
    """
    if H1 < h_dry:
        return H1
    sign = -1.0 if side == "left" else 1.0
    target = u1 + sign * 2.0 * np.sqrt(g * H1)

    def phi(h):
        return q0 / h + sign * 2.0 * np.sqrt(g * h) - target

    lo, hi = 0.5 * H1, 2.0 * H1
    for _ in range(60):
        if phi(lo) * phi(hi) <= 0.0:
            return float(brentq(phi, lo, hi, xtol=1e-14 * H1, rtol=1e-14))
        lo, hi = 0.5 * lo, 2.0 * hi
    return H1


def _ghost_side(bc, H, u, w, zb, dx, t, h_dry, side, g=G):
    """Ghost values ordered from the boundary outwards."""
    ng = N_GHOST
    if side == "left":
        inner = slice(0, ng)
        H_in, u_in, w_in, z_in, d_in = H[inner], u[inner], w[inner], zb[inner], dx[inner]
        H_b, q_b, w_b, z_b, d_b = H[0], H[0] * u[0], w[0], zb[0], dx[0]
        wrap = slice(-1, -ng - 1, -1)
    else:
        inner = slice(-1, -ng - 1, -1)
        H_in, u_in, w_in, z_in, d_in = H[inner], u[inner], w[inner], zb[inner], dx[inner]
        H_b, q_b, w_b, z_b, d_b = H[-1], H[-1] * u[-1], w[-1], zb[-1], dx[-1]
        wrap = slice(0, ng)
    ones = np.ones(ng)
    if bc.kind == "wall":
        return H_in.copy(), -u_in, w_in.copy(), z_in.copy(), d_in.copy()
    if bc.kind == "periodic":
        return H[wrap].copy(), u[wrap].copy(), w[wrap].copy(), zb[wrap].copy(), dx[wrap].copy()
    if bc.kind == "given_flux":
        q0 = bc.at(t)
        h_g = characteristic_depth(q0, H_b, q_b / H_b if H_b >= h_dry else 0.0, side, g, h_dry)
        u_g = q0 / h_g if h_g >= h_dry else 0.0
        return h_g * ones, u_g * ones, w_b * ones, z_b * ones, d_b * ones
    h0 = bc.at(t)
    u_g = q_b / h0 if h0 >= h_dry else 0.0
    return h0 * ones, u_g * ones, w_b * ones, z_b * ones, d_b * ones


def extend(H, u, w, zb, dx, left: BoundaryCondition, right: BoundaryCondition,
           t: float = 0.0, h_dry: float = 1e-10, g: float = G) -> Extended:
    check_pair(left, right)
    gl = _ghost_side(left, H, u, w, zb, dx, t, h_dry, "left", g)
    gr = _ghost_side(right, H, u, w, zb, dx, t, h_dry, "right", g)
    out = [np.concatenate((a[::-1], b, c)) for a, b, c in zip(gl, (H, u, w, zb, dx), gr)]
    return Extended(*out)


def pinned_faces(cells: int, left: BoundaryCondition, right: BoundaryCondition) -> np.ndarray:
    """Boolean mask over the ``cells + 1`` faces where the pressure is fixed to zero."""
    periodic = check_pair(left, right)
    mask = np.zeros(cells + 1, dtype=bool)
    if periodic:
        return mask
    mask[0] = mask[-1] = True
    if left.kind == "given_depth":
        mask[1] = True
    if right.kind == "given_depth":
        mask[-2] = True
    return mask
