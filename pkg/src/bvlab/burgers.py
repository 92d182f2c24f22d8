"""Explicit viscous Burgers step with a prescribed drag source.

Local Lax-Friedrichs flux for u^2/2, centred second difference for the
viscosity, forward Euler in time. Ghost cells hold the far-field states.
"""
import numpy as np

from .core import FluidField, NumericalBlowup


def stable_dt(u, epsilon, grid, cfl):
    if not 0.0 < cfl < 1.0:
        raise ValueError(f"cfl must lie in (0, 1), got {cfl}")
    dx = grid.dx
    umax = max(float(np.max(np.abs(u.u))), abs(u.u_minus), abs(u.u_plus))
    limits = []
    if umax > 0.0:
        limits.append(dx / umax)
    if epsilon > 0.0:
        limits.append(dx * dx / (2.0 * epsilon))
    if not limits:
        return cfl * dx
    return cfl * min(limits)


def llf_flux(ul, ur):
    alpha = np.maximum(np.abs(ul), np.abs(ur))
    return 0.25 * (ul * ul + ur * ur) - 0.5 * alpha * (ur - ul)


def interface_fluxes(u):
    """LLF fluxes at the nx + 1 cell interfaces, ghosts included."""
    up = u.padded()
    return llf_flux(up[:-1], up[1:])


def burgers_step(u, source, epsilon, dt, grid, step=None):
    s = np.asarray(source, dtype=float)
    if s.shape != u.u.shape:
        raise ValueError(f"source has shape {s.shape}, expected {u.u.shape}")
    dx = grid.dx
    up = u.padded()
    F = llf_flux(up[:-1], up[1:])
    lap = up[2:] - 2.0 * up[1:-1] + up[:-2]
    new = u.u - (dt / dx) * (F[1:] - F[:-1]) + (dt * epsilon / (dx * dx)) * lap + dt * s
    if not np.all(np.isfinite(new)):
        raise NumericalBlowup(step if step is not None else -1)
    return FluidField(new, u.u_minus, u.u_plus)
