"""Grid, cell state, bathymetry and scenario initialisation."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import analytic
from .errors import ConfigError

#: Cells shallower than this are dry: their velocities are defined as zero.
H_DRY = 1e-10

_GAUSS_OFFSET = 0.5 / np.sqrt(3.0)


@dataclass(frozen=True)
class Grid:
    """One-dimensional finite-volume mesh.

    ``face_widths`` has one entry per face (``cells + 1``). Interior entries
    are distances between neighbouring centres; the two boundary entries are
    the adjacent cell widths, i.e. the distance to a mirrored ghost centre.
    """

    centers: np.ndarray
    widths: np.ndarray
    edges: np.ndarray
    face_widths: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.centers, dtype=float)
        w = np.asarray(self.widths, dtype=float)
        e = np.asarray(self.edges, dtype=float)
        if c.ndim != 1 or c.shape != w.shape or e.shape != (c.size + 1,):
            raise ValueError("inconsistent grid array shapes")
        if c.size < 3:
            raise ValueError("a grid needs at least 3 cells")
        if np.any(w <= 0.0) or np.any(np.diff(e) <= 0.0) or np.any(np.diff(c) <= 0.0):
            raise ValueError("cells must have positive width and increasing positions")
        fw = np.empty(c.size + 1)
        fw[1:-1] = np.diff(c)
        fw[0], fw[-1] = w[0], w[-1]
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "face_widths", fw)

    @classmethod
    def from_edges(cls, edges) -> "Grid":
        e = np.asarray(edges, dtype=float)
        return cls(0.5 * (e[:-1] + e[1:]), np.diff(e), e)

    @classmethod
    def from_nodes(cls, nodes, start: float, end: float) -> "Grid":
        """Cells around ``nodes`` with faces halfway between consecutive nodes."""
        x = np.asarray(nodes, dtype=float)
        e = np.concatenate(([start], 0.5 * (x[:-1] + x[1:]), [end]))
        return cls(x, np.diff(e), e)

    @property
    def cells(self) -> int:
        return self.centers.size

    @property
    def length(self) -> float:
        return float(self.edges[-1] - self.edges[0])

    def locate(self, x: float) -> int:
        """Index of the cell containing ``x``."""
        return int(np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.cells - 1))


def build_uniform_grid(domain_start: float, domain_end: float, cells: int) -> Grid:
    if not domain_end > domain_start:
        raise ValueError("domain_end must exceed domain_start")
    if cells < 3:
        raise ValueError("at least 3 cells are required (the stencils need two neighbours)")
    dx = (domain_end - domain_start) / cells
    centers = domain_start + (np.arange(cells) + 0.5) * dx
    edges = domain_start + np.arange(cells + 1) * dx
    edges[-1] = domain_end
    return Grid(centers, np.full(cells, dx), edges)


@dataclass(frozen=True)
class Bathymetry:
    """Cell-averaged bottom elevation."""

    zb: np.ndarray

    def __post_init__(self) -> None:
        zb = np.asarray(self.zb, dtype=float)
        if not np.all(np.isfinite(zb)):
            raise ValueError("bathymetry must be finite")
        object.__setattr__(self, "zb", zb)

    @classmethod
    def flat(cls, grid: Grid, level: float = 0.0) -> "Bathymetry":
        return cls(np.full(grid.cells, float(level)))


@dataclass(frozen=True)
class CellState:
    """Conserved variables ``(H, H u, H w)`` per cell."""

    H: np.ndarray
    qx: np.ndarray
    qz: np.ndarray

    def __post_init__(self) -> None:
        for name in ("H", "qx", "qz"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def from_primitive(cls, H, u, w, h_dry: float = H_DRY) -> "CellState":
        H = np.asarray(H, dtype=float)
        wet = H >= h_dry
        return cls(H, np.where(wet, H * u, 0.0), np.where(wet, H * w, 0.0))

    def velocities(self, h_dry: float = H_DRY) -> tuple[np.ndarray, np.ndarray]:
        """``(u, w)``, zero on dry cells."""
        wet = self.H >= h_dry
        safe = np.where(wet, self.H, 1.0)
        return np.where(wet, self.qx / safe, 0.0), np.where(wet, self.qz / safe, 0.0)

    def stack(self) -> np.ndarray:
        return np.stack([self.H, self.qx, self.qz])

    @classmethod
    def from_stack(cls, X) -> "CellState":
        return cls(X[0], X[1], X[2])


@dataclass(frozen=True)
class FacePressure:
    """Non-hydrostatic pressure (divided by density) on the ``cells + 1`` faces."""

    p: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @classmethod
    def zeros(cls, grid: Grid) -> "FacePressure":
        return cls(np.zeros(grid.cells + 1))


def sample_bathymetry(profile: Callable, grid: Grid, quadrature_points: int = 2) -> Bathymetry:
    """Cell averages of ``profile`` by midpoint (1) or two-point Gauss (2) rule."""
    c, w = grid.centers, grid.widths
    if quadrature_points == 1:
        zb = np.asarray(profile(c), dtype=float)
    elif quadrature_points == 2:
        zb = 0.5 * (np.asarray(profile(c - _GAUSS_OFFSET * w), dtype=float)
                    + np.asarray(profile(c + _GAUSS_OFFSET * w), dtype=float))
    else:
        raise ValueError("quadrature_points must be 1 or 2")
    return Bathymetry(np.broadcast_to(zb, c.shape).copy())


def load_bathymetry_profile(path) -> Callable:
    """Piecewise-linear bottom from a two-column ``x z_b`` text file."""
    data = np.loadtxt(Path(path), ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError(f"bathymetry file {path} needs two columns")
    order = np.argsort(data[:, 0])
    xs, zs = data[order, 0], data[order, 1]
    return lambda x: np.interp(x, xs, zs)


def bump_profile(center: float = 10.0, height: float = 0.2, curvature: float = 0.05) -> Callable:
    return lambda x: np.maximum(height - curvature * (np.asarray(x) - center) ** 2, 0.0)


def step_profile(height: float = 0.5, position: float = 0.0) -> Callable:
    return lambda x: np.where(np.asarray(x) > position, height, 0.0)


def _require(params: Mapping, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigError(f"missing scenario parameter(s): {', '.join(missing)}")
    return [params[k] for k in keys]


def init_state(scenario: str, grid: Grid, params: Mapping, h_dry: float = H_DRY,
               quadrature_points: int = 2) -> tuple[CellState, Bathymetry]:
    """Initial state and bathymetry of a named scenario.

    ``lake_at_rest`` and ``dam_break`` read a bottom ``profile`` callable from
    ``params`` (flat if absent). ``parabolic_bowl`` needs ``bowl`` (a
    :class:`~swnh.analytic.BowlParams`) and ``soliton`` needs ``soliton`` (a
    :class:`~swnh.analytic.SolitonParams`) plus optional ``x0``/``period``.
    """
    x = grid.centers
    zero = np.zeros(grid.cells)
    if scenario == "lake_at_rest":
        (level,) = _require(params, "level")
        bathy = sample_bathymetry(params.get("profile", lambda s: 0.0 * s), grid, quadrature_points)
        H = analytic.lake_at_rest_depth(level, bathy.zb)
        return CellState(H, zero, zero.copy()), bathy
    if scenario == "dam_break":
        h_left, h_right, x_dam = _require(params, "h_left", "h_right", "x_dam")
        bathy = sample_bathymetry(params.get("profile", lambda s: 0.0 * s), grid, quadrature_points)
        H = np.where(x < x_dam, float(h_left), float(h_right))
        return CellState(H, zero, zero.copy()), bathy
    if scenario == "parabolic_bowl":
        (bowl,) = _require(params, "bowl")
        bathy = sample_bathymetry(bowl.bottom, grid, quadrature_points)
        fields = analytic.bowl_fields(bowl, bowl.f0, bowl.F0, x)
        return CellState.from_primitive(fields.H, fields.u, fields.w, h_dry), bathy
    if scenario == "soliton":
        (sol,) = _require(params, "soliton")
        fields = analytic.soliton_fields(sol, x, params.get("t0", 0.0), params.get("x0", 0.0),
                                         params.get("period"))
        return CellState.from_primitive(fields.H, fields.u, fields.w, h_dry), Bathymetry.flat(grid)
    raise ConfigError(f"unknown scenario {scenario!r}")
