"""Semi-Lagrangian Vlasov step along backward characteristics.

Over a step of length dt the characteristics dX/ds = V, dV/ds = u(X) - V are
followed backwards from every grid node with u frozen, and the new value is
e^{dt} times the bilinear interpolant of the old field at the foot point.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import KineticField


@dataclass
class CharacteristicEndpoint:
    X: np.ndarray
    V: np.ndarray
    outside: np.ndarray

    def __iter__(self):
        return iter((self.X, self.V))


def trace_back(x, v, u, dt, grid):
    """Foot (X, V) of the backward characteristic through (x, v).

    ``outside`` flags feet beyond [x_min - dx, x_max + dx]; the transported
    value there is the far-field zero.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    X, V = kernels.trace_back_numpy(x, v, u.u, u.u_minus, u.u_plus, grid.x_min, grid.dx, dt)
    outside = (X < grid.x_min - grid.dx) | (X > grid.x_max + grid.dx)
    return CharacteristicEndpoint(X, V, outside)


def vlasov_step(f, u, dt, grid, use_numba=None):
    if not dt > 0:
        raise ValueError("dt must be positive")
    new = kernels.vlasov_update(f.f, u.u, u.u_minus, u.u_plus, grid.x_min, grid.dx,
                                grid.v_min, grid.dv, dt, use_numba=use_numba)
    # bilinear weights are convex and the growth factor positive
    assert new.min() >= 0.0 or f.f.min() < 0.0, "negative value from non-negative data"
    return KineticField(new)


def jacobian_probe(x, v, u, dt, grid, h=None):
    """Central-difference determinant of d(X, V)/d(x, v) for the backward map.

    The continuum value is e^{dt} regardless of u.
    """
    if h is None:
        h = 1e-3 * min(grid.dx, grid.dv)
    Xp, Vp = kernels.trace_back_numpy(x + h, v, u.u, u.u_minus, u.u_plus, grid.x_min, grid.dx, dt)
    Xm, Vm = kernels.trace_back_numpy(x - h, v, u.u, u.u_minus, u.u_plus, grid.x_min, grid.dx, dt)
    Xq, Vq = kernels.trace_back_numpy(x, v + h, u.u, u.u_minus, u.u_plus, grid.x_min, grid.dx, dt)
    Xr, Vr = kernels.trace_back_numpy(x, v - h, u.u, u.u_minus, u.u_plus, grid.x_min, grid.dx, dt)
    dXdx = (Xp - Xm) / (2 * h)
    dVdx = (Vp - Vm) / (2 * h)
    dXdv = (Xq - Xr) / (2 * h)
    dVdv = (Vq - Vr) / (2 * h)
    return float(dXdx * dVdv - dXdv * dVdx)
