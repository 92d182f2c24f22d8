"""Velocity moments, Strang splitting for the coupled system, and the time loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .burgers import burgers_step, stable_dt
from .core import FluidField, KineticField, NumericalBlowup, make_initial_data
from .vlasov import vlasov_step

log = logging.getLogger(__name__)


@dataclass
class Moments:
    rho: np.ndarray
    j: np.ndarray
    e2: np.ndarray

    def drag(self, u):
        """Fluid force per unit length, int f (v - u) dv."""
        return self.j - u * self.rho


def moments(f, grid):
    """Midpoint quadrature of f, f v and f v^2 over the velocity grid."""
    v = grid.v
    basis = np.stack([np.ones_like(v), v, v * v], axis=1) * grid.dv
    m = np.asarray(f.f if isinstance(f, KineticField) else f) @ basis
    return Moments(m[:, 0].copy(), m[:, 1].copy(), m[:, 2].copy())


def strang_step(u, f, epsilon, dt, grid, drag_sign=1.0, use_numba=None, step=None):
    """Half Vlasov step, full Burgers step driven by mid-step moments, half Vlasov step."""
    if not f.f.any():
        # zero stays zero under transport; skip the kinetic work
        return burgers_step(u, np.zeros(grid.nx), epsilon, dt, grid, step=step), f
    f_half = vlasov_step(f, u, 0.5 * dt, grid, use_numba=use_numba)
    source = drag_sign * moments(f_half, grid).drag(u.u)
    u_new = burgers_step(u, source, epsilon, dt, grid, step=step)
    f_new = vlasov_step(f_half, u_new, 0.5 * dt, grid, use_numba=use_numba)
    return u_new, f_new


@dataclass
class Trajectory:
    config: object
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    history: list | None = None
    observers: tuple = ()
    failure: str | None = None

    @property
    def grid(self):
        return self.config.grid

    def connector(self):
        return self.config.connector()

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def step_times(self):
        return self.column("t")

    def states(self):
        """(t, u, f) at every recorded step; needs ``keep_history=True``."""
        if self.history is None:
            raise ValueError("trajectory was run without keep_history")
        return iter(self.history)

    @property
    def final(self):
        return self.snapshots[-1]


class RunFailed(RuntimeError):
    def __init__(self, step, trajectory, message):
        self.step = step
        self.trajectory = trajectory
        super().__init__(message)


def run(config, observers=(), keep_history=False, use_numba=None, max_steps=None):
    """Advance the coupled system to ``config.t_final`` with dt = stable_dt.

    Diagnostics are recorded at every step. Snapshots are stored for the
    initial data, at the first step reaching each requested output time, and
    at the final time. ``observers`` are fed (t, u, f, moments) at every step.
    """
    from .diagnostics import StepRecorder

    grid, eps = config.grid, config.epsilon
    u, f = make_initial_data(config)
    traj = Trajectory(config=config, history=[] if keep_history else None,
                      observers=tuple(observers))
    recorder = StepRecorder(config)
    pending = sorted(t for t in set(config.output_times) if 0.0 < t < config.t_final)

    def observe(step, t, dt, u, f):
        m = moments(f, grid)
        traj.records.append(recorder.record(step, t, dt, u, f, m))
        for ob in traj.observers:
            ob.observe(t, u, f, m)
        if keep_history:
            traj.history.append((t, u, f))

    t, step = 0.0, 0
    observe(0, t, 0.0, u, f)
    traj.times.append(0.0)
    traj.snapshots.append((u, f))
    tiny = 1e-12 * max(config.t_final, 1.0)
    while t < config.t_final - tiny:
        if max_steps is not None and step >= max_steps:
            break
        remaining = config.t_final - t
        dt = stable_dt(u, eps, grid, config.cfl)
        last = dt >= remaining - tiny
        if last:
            dt = remaining
        try:
            u, f = strang_step(u, f, eps, dt, grid, drag_sign=config.drag_sign,
                               use_numba=use_numba, step=step + 1)
        except NumericalBlowup as exc:
            traj.failure = str(exc)
            raise RunFailed(exc.step, traj, str(exc)) from exc
        t = config.t_final if last else t + dt
        step += 1
        observe(step, t, dt, u, f)
        while pending and t >= pending[0] - tiny:
            pending.pop(0)
            traj.times.append(t)
            traj.snapshots.append((u, f))
    if t > traj.times[-1]:
        traj.times.append(t)
        traj.snapshots.append((u, f))
    log.debug("run finished: %d steps to t=%g", step, t)
    return traj
