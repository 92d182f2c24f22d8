"""Named benchmark configurations; the files in configs/ are dumps of these."""
from __future__ import annotations

from .core import InitialData, PhaseGrid, SimConfig

SWEEP_EPS = (0.1, 0.05, 0.025, 0.0125)


def _nx(length, eps, cells_per_eps=4.0):
    return int(round(length * cells_per_eps / eps))


def shock(epsilon=0.05, nx=None, t_final=1.0, drag_sign=1.0):
    """Pure Burgers: tanh step from 1 to 0 of width 4 eps, no particles."""
    grid = PhaseGrid(-3.0, 3.0, nx or _nx(6.0, epsilon), -1.0, 1.0, 4)
    ini = InitialData(u_family="riemann", u_width_eps=4.0, f_family="zero")
    return SimConfig(epsilon=epsilon, t_final=t_final, cfl=0.4, grid=grid, L0=1.0,
                     u_minus=1.0, u_plus=0.0, initial=ini, window=(-1.0, 1.0),
                     drag_sign=drag_sign)


def coupled(epsilon=0.05, nx=None, nv=48, t_final=1.0, drag_sign=1.0):
    """Same fluid step plus a Gaussian particle cloud upstream of the shock."""
    grid = PhaseGrid(-4.0, 4.0, nx or _nx(8.0, epsilon), -3.0, 3.0, nv)
    ini = InitialData(u_family="riemann", u_width_eps=4.0, f_family="gaussian",
                      f_mass=0.5, f_x0=-0.5, f_v0=0.0, f_sx=0.5, f_sv=0.5, f_cut=4.0)
    return SimConfig(epsilon=epsilon, t_final=t_final, cfl=0.4, grid=grid, L0=1.0,
                     u_minus=1.0, u_plus=0.0, initial=ini, window=(-1.0, 1.0),
                     drag_sign=drag_sign)


def energy_identity(h=1.0 / 32, epsilon=0.05, t_final=1.0, drag_sign=1.0):
    """Equal far-field states (zero), compact velocity bump and a unit Gaussian cloud."""
    n = int(round(16.0 / h))
    grid = PhaseGrid(-8.0, 8.0, n, -8.0, 8.0, n)
    ini = InitialData(u_family="bump", u_center=0.0, u_width=2.0, u_amp=0.5,
                      f_family="gaussian", f_mass=1.0, f_sx=1.0, f_sv=1.0, f_cut=6.0)
    return SimConfig(epsilon=epsilon, t_final=t_final, cfl=0.4, grid=grid, L0=1.0,
                     u_minus=0.0, u_plus=0.0, initial=ini, window=(-1.0, 1.0),
                     drag_sign=drag_sign)


def smooth(h=1.0 / 32, epsilon=0.05, amp=1.5, t_final=1.0):
    """Pure Burgers bump that stays smooth up to t = 1."""
    grid = PhaseGrid(-4.0, 4.0, int(round(8.0 / h)), -1.0, 1.0, 4)
    ini = InitialData(u_family="bump", u_width=2.0, u_amp=amp, f_family="zero")
    return SimConfig(epsilon=epsilon, t_final=t_final, cfl=0.4, grid=grid, L0=1.0,
                     u_minus=0.0, u_plus=0.0, initial=ini)


PRESETS = {
    "shock": shock,
    "coupled": coupled,
    "energy_identity": energy_identity,
    "smooth": smooth,
}
