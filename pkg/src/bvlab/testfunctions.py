"""Compactly supported tensor-product test functions.

Each factor is B((s - c)/r) with B(s) = (1 - s^2)^3 on |s| <= 1, which is C2
with cheap exact derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError


def bump(s):
    s = np.asarray(s, dtype=float)
    w = np.clip(1.0 - s * s, 0.0, None)
    return w ** 3


def bump_prime(s):
    s = np.asarray(s, dtype=float)
    w = np.clip(1.0 - s * s, 0.0, None)
    return -6.0 * s * w ** 2


@dataclass(frozen=True)
class Factor:
    center: float
    radius: float

    def __call__(self, s):
        return bump((np.asarray(s) - self.center) / self.radius)

    def d(self, s):
        return bump_prime((np.asarray(s) - self.center) / self.radius) / self.radius

    @property
    def support(self):
        return (self.center - self.radius, self.center + self.radius)


# max |B'| on [-1, 1], attained at s = 1/sqrt(5)
_BP_MAX = 6.0 / np.sqrt(5.0) * (0.8 ** 2)


@dataclass(frozen=True)
class SpaceTimeBump:
    """phi(x, t) = B((x - cx)/rx) B((t - ct)/rt)."""

    cx: float
    rx: float
    ct: float
    rt: float

    @property
    def fx(self):
        return Factor(self.cx, self.rx)

    @property
    def ft(self):
        return Factor(self.ct, self.rt)

    def __call__(self, x, t):
        return self.fx(x) * self.ft(t)

    def dx(self, x, t):
        return self.fx.d(x) * self.ft(t)

    def dt(self, x, t):
        return self.fx(x) * self.ft.d(t)

    def c1_norm(self):
        """sup|phi| + sup|phi_x| + sup|phi_t|."""
        return 1.0 + _BP_MAX / self.rx + _BP_MAX / self.rt

    def check(self, grid, t_final):
        a, b = self.fx.support
        if a <= grid.x_min or b >= grid.x_max:
            raise DomainError("test function support leaves the x-domain")
        if self.ct + self.rt > t_final + 1e-12:
            raise DomainError("test function does not vanish at t = T")

    def scaled(self, alpha):
        return ScaledTestFunction(self, alpha)


@dataclass(frozen=True)
class PhaseSpaceBump:
    """phi(x, v, t) = B((x - cx)/rx) B((v - cv)/rv) B((t - ct)/rt)."""

    cx: float
    rx: float
    cv: float
    rv: float
    ct: float
    rt: float

    @property
    def fx(self):
        return Factor(self.cx, self.rx)

    @property
    def fv(self):
        return Factor(self.cv, self.rv)

    @property
    def ft(self):
        return Factor(self.ct, self.rt)

    def __call__(self, x, v, t):
        return self.fx(x) * self.fv(v) * self.ft(t)

    def c1_norm(self):
        return 1.0 + _BP_MAX * (1.0 / self.rx + 1.0 / self.rv + 1.0 / self.rt)

    def check(self, grid, t_final):
        a, b = self.fx.support
        c, d = self.fv.support
        if a <= grid.x_min or b >= grid.x_max or c <= grid.v_min or d >= grid.v_max:
            raise DomainError("test function support leaves the phase-space domain")
        if self.ct + self.rt > t_final + 1e-12:
            raise DomainError("test function does not vanish at t = T")


@dataclass(frozen=True)
class ScaledTestFunction:
    """alpha * phi; lets residual linearity be checked without new kernels."""

    base: SpaceTimeBump
    alpha: float

    def __call__(self, x, t):
        return self.alpha * self.base(x, t)

    def dx(self, x, t):
        return self.alpha * self.base.dx(x, t)

    def dt(self, x, t):
        return self.alpha * self.base.dt(x, t)

    def c1_norm(self):
        return abs(self.alpha) * self.base.c1_norm()

    def check(self, grid, t_final):
        self.base.check(grid, t_final)


def default_space_time(t_final=1.0):
    """Five placements over the shock path x = t/2 and the particle cloud."""
    T = t_final
    return (
        SpaceTimeBump(0.25, 1.0, 0.5 * T, 0.45 * T),
        SpaceTimeBump(0.0, 1.5, 0.0, 0.9 * T),
        SpaceTimeBump(0.5, 0.5, 0.6 * T, 0.35 * T),
        SpaceTimeBump(-1.0, 1.0, 0.4 * T, 0.4 * T),
        SpaceTimeBump(1.0, 1.5, 0.3 * T, 0.6 * T),
    )


def default_phase_space(t_final=1.0):
    T = t_final
    return (
        PhaseSpaceBump(0.0, 1.5, 0.0, 1.5, 0.5 * T, 0.45 * T),
        PhaseSpaceBump(-0.5, 1.0, 0.5, 1.0, 0.0, 0.9 * T),
        PhaseSpaceBump(0.5, 1.0, 0.5, 1.0, 0.6 * T, 0.35 * T),
        PhaseSpaceBump(-1.0, 1.0, -0.5, 1.0, 0.4 * T, 0.4 * T),
        PhaseSpaceBump(1.0, 1.5, 1.0, 1.5, 0.3 * T, 0.6 * T),
    )
