"""Grids, fields, run configuration and initial data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending entry."""

    def __init__(self, key, message, line=None):
        self.key = key
        self.line = line
        if line is None:
            where = ""
        else:
            where = f"line {line}: " if isinstance(line, int) else f"{line}: "
        super().__init__(f"{where}{key}: {message}")


class NumericalBlowup(RuntimeError):
    def __init__(self, step, message="non-finite value in solution"):
        self.step = step
        super().__init__(f"step {step}: {message}")


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform cell-centred tensor grid in (x, v).

    The fluid lives on the x-cells of the same grid.
    """

    x_min: float = -10.0
    x_max: float = 10.0
    nx: int = 200
    v_min: float = -8.0
    v_max: float = 8.0
    nv: int = 128

    def __post_init__(self):
        if self.nx < 4 or self.nv < 4:
            raise DomainError(f"need nx, nv >= 4 (got {self.nx}, {self.nv})")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")
        if not (self.v_min < 0.0 < self.v_max):
            raise DomainError("velocity range must bracket zero")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def dv(self):
        return (self.v_max - self.v_min) / self.nv

    @property
    def x(self):
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def v(self):
        return self.v_min + (np.arange(self.nv) + 0.5) * self.dv

    @property
    def shape(self):
        return (self.nx, self.nv)

    def with_cells(self, nx=None, nv=None):
        return replace(self, nx=self.nx if nx is None else nx, nv=self.nv if nv is None else nv)


@dataclass
class FluidField:
    u: np.ndarray
    u_minus: float = 0.0
    u_plus: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if not np.all(np.isfinite(self.u)):
            raise DomainError("fluid velocity has non-finite entries")

    def padded(self):
        """u with one ghost cell per side holding the far-field states."""
        return np.concatenate(([self.u_minus], self.u, [self.u_plus]))

    def copy(self):
        return FluidField(self.u.copy(), self.u_minus, self.u_plus)


@dataclass
class KineticField:
    f: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)

    def copy(self):
        return KineticField(self.f.copy())


@dataclass
class ConnectorProfile:
    L0: float
    u_minus: float
    u_plus: float
    values: np.ndarray

    def __call__(self, x):
        return connector_value(x, self.u_minus, self.u_plus, self.L0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        theta = np.clip((x + self.L0) / (2.0 * self.L0), 0.0, 1.0)
        return (self.u_plus - self.u_minus) * 6.0 * theta * (1.0 - theta) / (2.0 * self.L0)


def connector_value(x, u_minus, u_plus, L0):
    x = np.asarray(x, dtype=float)
    theta = np.clip((x + L0) / (2.0 * L0), 0.0, 1.0)
    s = theta * theta * (3.0 - 2.0 * theta)
    return u_minus + (u_plus - u_minus) * s


def build_connector(u_minus, u_plus, L0, grid):
    """Monotone C1 profile equal to ``u_minus`` left of -L0 and ``u_plus`` right of L0."""
    if not L0 > 0:
        raise DomainError("L0 must be positive")
    if not (-L0 > grid.x_min and L0 < grid.x_max):
        raise DomainError(f"transition zone [-{L0}, {L0}] not inside [{grid.x_min}, {grid.x_max}]")
    values = connector_value(grid.x, u_minus, u_plus, L0)
    return ConnectorProfile(float(L0), float(u_minus), float(u_plus), values)


@dataclass
class InitialData:
    """Named analytic families for (u0, f0).

    u families: ``riemann`` (tanh-smoothed step between the far-field
    states), ``bump`` (far-field state plus a compact (1 - s^2)^3 bump; needs
    u_minus == u_plus) and ``connector`` (u0 equal to the connector profile).
    f families: ``zero``, ``gaussian`` (cut off at ``f_cut`` standard
    deviations in each variable) and ``box``.
    """

    u_family: str = "riemann"
    u_center: float = 0.0
    u_width: float = 0.2
    u_amp: float = 0.0
    # when positive, the riemann width is u_width_eps * epsilon
    u_width_eps: float = 0.0
    f_family: str = "zero"
    f_mass: float = 1.0
    f_x0: float = 0.0
    f_v0: float = 0.0
    f_sx: float = 1.0
    f_sv: float = 1.0
    f_height: float = 1.0
    f_cut: float = 6.0


U_FAMILIES = ("riemann", "bump", "connector")
F_FAMILIES = ("zero", "gaussian", "box")


@dataclass
class SimConfig:
    epsilon: float = 0.05
    t_final: float = 1.0
    cfl: float = 0.4
    grid: PhaseGrid = field(default_factory=PhaseGrid)
    L0: float = 1.0
    u_minus: float = 1.0
    u_plus: float = 0.0
    initial: InitialData = field(default_factory=InitialData)
    output_times: tuple = ()
    window: tuple = (-1.0, 1.0)
    # debug hook: -1 flips the sign of the drag source seen by the fluid
    drag_sign: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise ConfigError("epsilon", f"must lie in [0, 1), got {self.epsilon}")
        if not (0.0 < self.cfl < 1.0):
            raise ConfigError("cfl", f"must lie in (0, 1), got {self.cfl}")
        if not self.t_final >= 0.0:
            raise ConfigError("t_final", f"must be non-negative, got {self.t_final}")
        if self.initial.u_family not in U_FAMILIES:
            raise ConfigError("u_family", f"unknown family {self.initial.u_family!r}")
        if self.initial.f_family not in F_FAMILIES:
            raise ConfigError("f_family", f"unknown family {self.initial.f_family!r}")
        a, b = self.window
        if not (self.grid.x_min < a < b < self.grid.x_max):
            raise ConfigError("window", f"[{a}, {b}] must lie strictly inside the x-domain")
        if any(t < 0 for t in self.output_times):
            raise ConfigError("output_times", "negative output time")
        if not (self.L0 > 0 and -self.L0 > self.grid.x_min and self.L0 < self.grid.x_max):
            raise ConfigError("L0", f"transition zone [-{self.L0}, {self.L0}] must lie inside the x-domain")

    def connector(self):
        return build_connector(self.u_minus, self.u_plus, self.L0, self.grid)

    def with_(self, **changes):
        return replace(self, **changes)


def _bump3(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 3, 0.0)


def initial_velocity(config, x):
    ini = config.initial
    um, up = config.u_minus, config.u_plus
    if ini.u_family == "riemann":
        w = ini.u_width_eps * config.epsilon if ini.u_width_eps > 0 else ini.u_width
        if not w > 0:
            raise DomainError("u_width must be positive")
        return um + (up - um) * 0.5 * (1.0 + np.tanh((x - ini.u_center) / w))
    if ini.u_family == "bump":
        if um != up:
            raise DomainError("bump initial data needs u_minus == u_plus")
        return um + ini.u_amp * _bump3((x - ini.u_center) / ini.u_width)
    return connector_value(x, um, up, config.L0)


def initial_distribution(config):
    ini, g = config.initial, config.grid
    if ini.f_family == "zero":
        return np.zeros(g.shape)
    X, V = np.meshgrid(g.x, g.v, indexing="ij")
    if ini.f_family == "gaussian":
        hx, hv = ini.f_cut * ini.f_sx, ini.f_cut * ini.f_sv
        _check_support(g, ini.f_x0 - hx, ini.f_x0 + hx, ini.f_v0 - hv, ini.f_v0 + hv)
        zx = (X - ini.f_x0) / ini.f_sx
        zv = (V - ini.f_v0) / ini.f_sv
        f = ini.f_mass / (2.0 * math.pi * ini.f_sx * ini.f_sv) * np.exp(-0.5 * (zx * zx + zv * zv))
        f[(np.abs(zx) > ini.f_cut) | (np.abs(zv) > ini.f_cut)] = 0.0
        return f
    # box: half-widths f_sx, f_sv
    _check_support(g, ini.f_x0 - ini.f_sx, ini.f_x0 + ini.f_sx, ini.f_v0 - ini.f_sv, ini.f_v0 + ini.f_sv)
    inside = (np.abs(X - ini.f_x0) <= ini.f_sx) & (np.abs(V - ini.f_v0) <= ini.f_sv)
    return np.where(inside, ini.f_height, 0.0)


def _check_support(g, xa, xb, va, vb):
    if xa < g.x_min or xb > g.x_max or va < g.v_min or vb > g.v_max:
        raise DomainError(
            f"initial f support [{xa:g}, {xb:g}] x [{va:g}, {vb:g}] exceeds the grid "
            f"[{g.x_min:g}, {g.x_max:g}] x [{g.v_min:g}, {g.v_max:g}]"
        )


def make_initial_data(config):
    """Sample (u0, f0) for ``config`` on its grid."""
    g = config.grid
    u = FluidField(initial_velocity(config, g.x), config.u_minus, config.u_plus)
    f = KineticField(initial_distribution(config))
    return u, f
