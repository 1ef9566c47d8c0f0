"""Reference solutions of the non-hydrostatic system.

Parabolic bowl (time periodic, moving shorelines, driven by a scalar ODE),
translating solitary wave, and the lake at rest.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class BowlParams:
    """Parameters of the parabolic bowl.

    ``f0`` is the initial value of the oscillator ``f`` and ``F0`` the initial
    value of its time integral, which is the horizontal offset of the water
    body with respect to the bowl axis.
    """

    H0: float = 1.0
    b1: float = 0.0
    b2: float = 1.0
    f0: float = 0.0
    F0: float = 0.0
    g: float = 9.81

    def __post_init__(self) -> None:
        if not self.H0 > 0.0:
            raise ConfigError("bowl H0 must be positive")
        if self.b2 < 0.0:
            raise ConfigError("bowl b2 must be non-negative")

    @classmethod
    def from_amplitude(cls, a: float = 1.0, H0: float = 1.0, b1: float = 0.0,
                       b2: float = 1.0, g: float = 9.81) -> "BowlParams":
        """Bowl at rest in velocity with offset ``a / sqrt(g b2)``."""
        return cls(H0=H0, b1=b1, b2=b2, f0=0.0, F0=a / math.sqrt(g * b2), g=g)

    def bottom(self, x):
        return self.b1 + 0.5 * self.b2 * np.asarray(x, dtype=float) ** 2

    def rhs(self, f, F):
        """Right-hand side of the augmented system ``(f, F)' = (-b2 (g + b2 f^2) F, f)``."""
        return -self.b2 * (self.g + self.b2 * f * f) * F, f


def _rk4_advance(params: BowlParams, f: float, F: float, h: float, n: int):
    for _ in range(n):
        k1f, k1F = params.rhs(f, F)
        k2f, k2F = params.rhs(f + 0.5 * h * k1f, F + 0.5 * h * k1F)
        k3f, k3F = params.rhs(f + 0.5 * h * k2f, F + 0.5 * h * k2F)
        k4f, k4F = params.rhs(f + h * k3f, F + h * k3F)
        f += h * (k1f + 2.0 * k2f + 2.0 * k3f + k4f) / 6.0
        F += h * (k1F + 2.0 * k2F + 2.0 * k3F + k4F) / 6.0
    return f, F


def integrate_bowl_ode(params: BowlParams, t_grid, t0: float = 0.0,
                       max_step: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the bowl oscillator with classical RK4.

    Each interval between consecutive requested times is split into equal
    substeps no longer than ``max_step``.

    Returns
    -------
    f, F : ndarray
        Oscillator value and its time integral at every time of ``t_grid``.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size and (t_grid[0] < t0 or np.any(np.diff(t_grid) < 0.0)):
        raise ValueError("t_grid must be increasing and start at or after t0")
    f, F = float(params.f0), float(params.F0)
    t = t0
    out_f = np.empty_like(t_grid)
    out_F = np.empty_like(t_grid)
    for k, t_next in enumerate(t_grid):
        span = t_next - t
        if span > 0.0:
            n = max(1, math.ceil(span / max_step - 1e-9))
            f, F = _rk4_advance(params, f, F, span / n, n)
        out_f[k], out_F[k] = f, F
        t = t_next
    return out_f, out_F


class BowlFields(NamedTuple):
    H: np.ndarray
    u: np.ndarray
    w: np.ndarray
    p_nh: np.ndarray
    s: np.ndarray


def bowl_fields(params: BowlParams, f: float, F: float, x) -> BowlFields:
    """Exact bowl fields at the time where the oscillator equals ``(f, F)``."""
    x = np.asarray(x, dtype=float)
    H = np.maximum(params.H0 - 0.5 * params.b2 * (x - F) ** 2, 0.0)
    wet = H > 0.0
    u = np.where(wet, f, 0.0)
    w = np.where(wet, params.b2 * x * f, 0.0)
    p_nh = 0.5 * params.b2 * f * f * H
    dfdt, _ = params.rhs(f, F)
    s = params.b2 * x * dfdt
    return BowlFields(H, u, w, p_nh, s)


class BowlSolution:
    """Tabulated bowl oscillator with cubic Hermite evaluation at any time.

    The table is built once with RK4 at spacing ``step``; derivatives at the
    nodes come from the ODE itself, so interpolation error is far below the
    integration error.
    """

    def __init__(self, params: BowlParams, t_end: float, t0: float = 0.0,
                 step: float = 1e-4):
        self.params = params
        self.t0 = float(t0)
        n = max(1, math.ceil((t_end - t0) / step))
        self.times = np.linspace(t0, t0 + n * step, n + 1)
        self.f, self.F = integrate_bowl_ode(params, self.times, t0=t0, max_step=step)
        self.df, _ = params.rhs(self.f, self.F)
        self._h = step

    def oscillator(self, t: float) -> tuple[float, float]:
        if t < self.t0 or t > self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside tabulated range")
        k = min(int((t - self.t0) / self._h), len(self.times) - 2)
        h = self._h
        s = (t - self.times[k]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        f = h00 * self.f[k] + h10 * h * self.df[k] + h01 * self.f[k + 1] + h11 * h * self.df[k + 1]
        F = h00 * self.F[k] + h10 * h * self.f[k] + h01 * self.F[k + 1] + h11 * h * self.f[k + 1]
        return float(f), float(F)

    def fields(self, x, t: float) -> BowlFields:
        f, F = self.oscillator(t)
        return bowl_fields(self.params, f, F, x)

    def source(self, x, t: float) -> np.ndarray:
        """Vertical-momentum forcing ``s(x, t)``."""
        return self.fields(x, t).s


@dataclass(frozen=True)
class SolitonParams:
    """Solitary wave of depth ``H0`` at infinity, width ``l`` and parameter ``d``."""

    H0: float = 1.0
    l: float = 1.7
    d: float = 1.0
    g: float = 9.81

    def __post_init__(self) -> None:
        if not (self.l > self.H0 > 0.0):
            raise ConfigError("soliton parameters require l > H0 > 0")
        if self.d == 0.0:
            raise ConfigError("soliton parameter d must be non-zero")

    @property
    def a(self) -> float:
        return self.H0 ** 3 / (self.l ** 2 - self.H0 ** 2)

    @property
    def c0(self) -> float:
        return (self.l / self.d) * math.sqrt(self.g * self.H0 ** 3 / (self.l ** 2 - self.H0 ** 2))


class SolitonFields(NamedTuple):
    H: np.ndarray
    u: np.ndarray
    w: np.ndarray
    p_nh: np.ndarray


def soliton_fields(params: SolitonParams, x, t: float, x0: float = 0.0,
                   period: float | None = None) -> SolitonFields:
    """Exact solitary wave centred at ``x0 + c0 t``.

    With ``period`` set, the travelling coordinate is wrapped into
    ``[-period/2, period/2)`` so that the wave lives on a periodic box.
    """
    a, c0, l, d, H0 = params.a, params.c0, params.l, params.d, params.H0
    r = np.asarray(x, dtype=float) - x0 - c0 * t
    if period is not None:
        r = (r + 0.5 * period) % period - 0.5 * period
    y = r / l
    sech = 1.0 / np.cosh(y)
    tanh = np.tanh(y)
    dsech = -sech * tanh
    d2sech = sech * (tanh * tanh - sech * sech)
    H = H0 + a * sech * sech
    u = c0 * (1.0 - d / H)
    w = -a * c0 * d / (l * H) * sech * dsech
    p_nh = a * c0 ** 2 * d ** 2 / (2.0 * l ** 2 * H ** 2) * (
        (2.0 * H0 - H) * dsech ** 2 + H * sech * d2sech)
    return SolitonFields(H, u, w, p_nh)


def lake_at_rest_depth(level: float, zb) -> np.ndarray:
    """Depth of a motionless lake with free surface ``level``."""
    return np.maximum(level - np.asarray(zb, dtype=float), 0.0)


def write_reference_csv(path, x, fields: Mapping[str, np.ndarray]) -> None:
    """Dump sampled reference fields as CSV with an ``x`` column first."""
    path = Path(path)
    names = list(fields)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", *names])
        cols = [np.asarray(x, dtype=float)] + [np.broadcast_to(fields[k], np.shape(x)) for k in names]
        for row in zip(*cols):
            writer.writerow([f"{v:.17g}" for v in row])
