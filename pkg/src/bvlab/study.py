"""Vanishing-viscosity sweeps: one run per epsilon on epsilon-resolving grids.

Every run is reduced in its own worker to small arrays (u restricted to the
common window on the coarsest grid at a fixed set of sample times, moment
functionals, weak residuals, diagnostics summaries), and the report is a
single-threaded reduction over those.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DomainError, SimConfig
from .coupling import RunFailed, run
from .diagnostics import BurgersWeakResidual, VlasovWeakResidual, _TimeFold
from .testfunctions import default_phase_space, default_space_time

log = logging.getLogger(__name__)

R_LIST = (1, 2, 4)
MOMENT_NAMES = ("rho", "j", "u_rho")
# runs whose outermost cells hold more than this fraction of the mass are rejected
BOUNDARY_LIMIT = 1e-8


def restrict_to_window(u, fine, coarse, K):
    """Cell averages of ``u`` (on ``fine``) over the ``coarse`` cells lying inside K.

    The two grids must cover the same x-interval with nx ratio an integer.
    Only coarse cells fully inside K are returned, so the integral over
    those cells is preserved exactly.
    """
    u = getattr(u, "u", u)
    u = np.asarray(u, dtype=float)
    if fine.x_min != coarse.x_min or fine.x_max != coarse.x_max:
        raise DomainError("grids cover different x-intervals")
    if fine.nx % coarse.nx:
        raise DomainError(f"nx {fine.nx} is not a multiple of {coarse.nx}")
    ratio = fine.nx // coarse.nx
    avg = u.reshape(coarse.nx, ratio).mean(axis=1)
    return avg[window_cells(coarse, K)]


def window_cells(grid, K):
    a, b = K
    edges = grid.x_min + np.arange(grid.nx + 1) * grid.dx
    tol = 1e-9 * grid.dx
    return (edges[:-1] >= a - tol) & (edges[1:] <= b + tol)


def fit_rate(pairs):
    """Least-squares slope of log(distance) against log(eps); "exact" for zero distances."""
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least two (eps, distance) pairs")
    e = np.array([p[0] for p in pairs], dtype=float)
    d = np.array([p[1] for p in pairs], dtype=float)
    if np.all(d == 0.0):
        return "exact"
    if np.any(d <= 0.0):
        raise ValueError("distances must be positive")
    return float(np.polyfit(np.log(e), np.log(d), 1)[0])


def riemann_solution(x, t, u_left, u_right, x0=0.0):
    """Entropy solution of inviscid Burgers for a jump at x0."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.where(x < x0, u_left, u_right)
    if u_left > u_right:
        s = 0.5 * (u_left + u_right)
        return np.where(x - x0 < s * t, u_left, u_right)
    xi = (x - x0) / t
    return np.clip(xi, u_left, u_right)


@dataclass
class SweepPlan:
    base: SimConfig
    eps_list: tuple = (0.1, 0.05, 0.025, 0.0125)
    cells_per_eps: float = 4.0
    window: tuple | None = None
    r_list: tuple = R_LIST
    t_samples: int = 21
    space_time: tuple | None = None
    phase_space: tuple | None = None
    workers: int = 1

    def __post_init__(self):
        self.eps_list = tuple(float(e) for e in self.eps_list)
        if self.window is None:
            self.window = tuple(self.base.window)
        T = self.base.t_final
        if self.space_time is None:
            self.space_time = default_space_time(T)
        if self.phase_space is None:
            self.phase_space = default_phase_space(T)
        self.validate()

    def validate(self):
        e = self.eps_list
        if not e:
            raise DomainError("eps_list is empty")
        if any(b >= a for a, b in zip(e, e[1:])):
            raise DomainError("eps_list must be strictly decreasing")
        g = self.base.grid
        a, b = self.window
        if not (g.x_min < a < b < g.x_max):
            raise DomainError("window K must lie strictly inside the x-domain")
        if not self.base.t_final > 0:
            raise DomainError("sweeps need t_final > 0")
        for phi in self.space_time:
            phi.check(g, self.base.t_final)
        if self.base.initial.f_family != "zero":
            for phi in self.phase_space:
                phi.check(g, self.base.t_final)
        for eps, grid in zip(e, self.grids()):
            if grid.dx > eps / self.cells_per_eps * (1 + 1e-12):
                raise DomainError(f"grid rule violated at eps={eps}")

    def grids(self):
        """Nested x-grids: coarsest meets dx <= eps_0 / c, finer ones refine by powers of 2."""
        g = self.base.grid
        L = g.x_max - g.x_min
        c = self.cells_per_eps
        nx0 = max(4, math.ceil(L * c / self.eps_list[0] - 1e-9))
        out = []
        for eps in self.eps_list:
            nx = nx0
            while L / nx > eps / c * (1 + 1e-12):
                nx *= 2
            out.append(g.with_cells(nx=nx))
        return out

    def configs(self):
        return [replace(self.base, epsilon=eps, grid=grid, output_times=())
                for eps, grid in zip(self.eps_list, self.grids())]

    def sample_times(self):
        return np.linspace(0.0, self.base.t_final, self.t_samples)

    def estimate(self):
        """(eps, cells, estimated steps) per run, for a budget check before starting."""
        out = []
        umax = max(abs(self.base.u_minus), abs(self.base.u_plus), 1.0)
        for cfg in self.configs():
            g = cfg.grid
            dt = cfg.cfl * min(g.dx / umax, g.dx * g.dx / (2 * cfg.epsilon))
            cells = g.nx * (g.nv if cfg.initial.f_family != "zero" else 1)
            out.append((cfg.epsilon, cells, math.ceil(cfg.t_final / dt)))
        return out


class MomentFunctionals(_TimeFold):
    """int int <rho, phi>, <j, phi>, <u rho, phi> over [0, T] for each phi(x, t)."""

    def __init__(self, phis, grid):
        super().__init__()
        self.phis, self.grid = phis, grid

    def observe(self, t, u, f, m):
        x, dx = self.grid.x, self.grid.dx
        vals = []
        for phi in self.phis:
            p = phi(x, t)
            vals += [np.sum(m.rho * p) * dx, np.sum(m.j * p) * dx, np.sum(u.u * m.rho * p) * dx]
        self._accumulate(t, vals)

    def values(self):
        return np.asarray(self.total).reshape(len(self.phis), len(MOMENT_NAMES))


class WindowSampler:
    """Restricted u at the first step reaching each sample time."""

    def __init__(self, times, fine, coarse, K):
        self.pending = list(times)
        self.fine, self.coarse, self.K = fine, coarse, K
        self.times, self.values = [], []
        self.tiny = 1e-12 * max(1.0, float(times[-1]))

    def observe(self, t, u, f, m):
        while self.pending and t >= self.pending[0] - self.tiny:
            self.pending.pop(0)
            self.times.append(t)
            self.values.append(restrict_to_window(u, self.fine, self.coarse, self.K))


@dataclass
class RunOutcome:
    epsilon: float
    grid: object
    status: str
    steps: int = 0
    wall: float = 0.0
    summary: dict = field(default_factory=dict)
    sample_times: np.ndarray | None = None
    samples: np.ndarray | None = None
    final_u: np.ndarray | None = None
    functionals: np.ndarray | None = None
    burgers_residual: np.ndarray | None = None
    burgers_viscous: np.ndarray | None = None
    vlasov_residual: np.ndarray | None = None
    records: list = field(default_factory=list)
    final: tuple | None = None

    @property
    def ok(self):
        return self.status == "ok"


def _summary(traj):
    E = traj.column("energy")
    mass = traj.column("mass")
    P = traj.column("momentum")
    m0 = mass[0] if mass[0] > 0 else 1.0
    return {
        "steps": len(traj.records) - 1,
        "t_end": float(traj.records[-1].t),
        "energy_initial": float(E[0]),
        "energy_final": float(E[-1]),
        "energy_sup": float(E.max()),
        "mass_drift": float(abs(mass[-1] - mass[0]) / m0),
        "momentum_drift": float(abs(P[-1] - P[0])),
        "l4_window": float(traj.records[-1].l4_window),
        "boundary_mass_max": float(traj.column("boundary_mass_indicator").max()),
    }


def _execute(job):
    cfg, coarse, K, times, space_time, phase_space, use_numba = job
    grid = cfg.grid
    sampler = WindowSampler(times, grid, coarse, K)
    funcs = MomentFunctionals(space_time, grid)
    bres = [BurgersWeakResidual(p, grid, cfg.epsilon) for p in space_time]
    kinetic = cfg.initial.f_family != "zero"
    vres = [VlasovWeakResidual(p, grid) for p in phase_space] if kinetic else []
    observers = [sampler, funcs] + bres + vres
    t0 = time.perf_counter()
    out = RunOutcome(cfg.epsilon, grid, "ok")
    try:
        traj = run(cfg, observers=observers, use_numba=use_numba)
    except RunFailed as exc:
        traj = exc.trajectory
        out.status = f"blowup at step {exc.step}: {exc}"
    out.wall = time.perf_counter() - t0
    out.steps = len(traj.records) - 1
    out.summary = _summary(traj)
    out.records = traj.records
    out.final = (traj.times[-1], traj.final[0].u.copy(), traj.final[1].f.copy())
    if out.ok and out.summary["boundary_mass_max"] > BOUNDARY_LIMIT:
        out.status = f"rejected: boundary mass fraction {out.summary['boundary_mass_max']:.2e}"
    if out.ok:
        out.sample_times = np.array(sampler.times)
        out.samples = np.array(sampler.values)
        out.final_u = traj.final[0].u.copy()
        out.functionals = funcs.values()
        out.burgers_residual = np.array([r.value for r in bres])
        out.burgers_viscous = np.array([r.viscous for r in bres])
        out.vlasov_residual = np.array([r.value for r in vres]) if vres else np.zeros(0)
    return out


@dataclass
class SweepReport:
    plan: SweepPlan
    outcomes: list
    distances: dict
    functional_diffs: np.ndarray
    rates: dict
    l4_ratio: float
    energy_spread: float
    shock_distance: float | None = None

    @property
    def failures(self):
        return [(o.epsilon, o.status) for o in self.outcomes if not o.ok]

    @property
    def complete(self):
        return not self.failures

    def d(self, r):
        return self.distances[r]

    def tag(self):
        """File-name stem with the epsilon range and grid sizes."""
        g0, g1 = self.outcomes[0].grid, self.outcomes[-1].grid
        e = self.plan.eps_list
        return f"eps{e[0]:g}-{e[-1]:g}_nx{g0.nx}-{g1.nx}_nv{g0.nv}"

    def residual_table(self):
        """Rows (eps, test index, burgers residual, viscous pairing, vlasov residual)."""
        rows = []
        for o in self.outcomes:
            if not o.ok:
                continue
            for k in range(len(o.burgers_residual)):
                vl = o.vlasov_residual[k] if k < len(o.vlasov_residual) else float("nan")
                rows.append((o.epsilon, k, o.burgers_residual[k], o.burgers_viscous[k], vl))
        return rows


def _lr_distance(a, b, times, dx, r):
    """L^r(K x [0, T]) distance, trapezoid in t over the sample times."""
    per_t = np.sum(np.abs(a - b) ** r, axis=1) * dx
    integral = float(np.sum(0.5 * (per_t[1:] + per_t[:-1]) * np.diff(times)))
    return integral ** (1.0 / r)


def assemble(plan, outcomes):
    grids = plan.grids()
    coarse = grids[0]
    times = plan.sample_times()
    n = len(outcomes)
    distances = {r: np.full(max(n - 1, 0), np.nan) for r in plan.r_list}
    nf = len(plan.space_time) * len(MOMENT_NAMES)
    fdiffs = np.full((max(n - 1, 0), nf), np.nan)
    for k in range(n - 1):
        a, b = outcomes[k], outcomes[k + 1]
        if not (a.ok and b.ok):
            continue
        for r in plan.r_list:
            distances[r][k] = _lr_distance(a.samples, b.samples, times, coarse.dx, r)
        fdiffs[k] = np.abs(a.functionals - b.functionals).ravel()
    rates = {}
    for r in plan.r_list:
        pairs = [(plan.eps_list[k], distances[r][k]) for k in range(n - 1)
                 if np.isfinite(distances[r][k])]
        try:
            rates[r] = fit_rate(pairs) if len(pairs) >= 2 else None
        except ValueError:
            rates[r] = None
    ok = [o for o in outcomes if o.ok]
    l4 = np.array([o.summary["l4_window"] for o in ok])
    sup_e = np.array([o.summary["energy_sup"] for o in ok])
    l4_ratio = float(l4.max() / l4.min()) if len(l4) and l4.min() > 0 else float("nan")
    spread = float((sup_e.max() - sup_e.min()) / sup_e.max()) if len(sup_e) and sup_e.max() > 0 else 0.0
    shock = None
    base = plan.base
    if base.initial.f_family == "zero" and base.initial.u_family == "riemann" and ok and outcomes[-1].ok:
        fin = outcomes[-1]
        g = fin.grid
        mask = window_cells(g, plan.window)
        exact = riemann_solution(g.x, base.t_final, base.u_minus, base.u_plus, base.initial.u_center)
        shock = float(np.sum(np.abs(fin.final_u - exact)[mask]) * g.dx)
    return SweepReport(plan, outcomes, distances, fdiffs, rates, l4_ratio, spread, shock)


def run_sweep(plan, use_numba=None):
    """Run every epsilon of the plan and reduce to a SweepReport.

    A run that blows up is kept as an annotated failure; the tables skip
    pairs touching it.
    """
    coarse = plan.grids()[0]
    times = plan.sample_times()
    for eps, cells, steps in plan.estimate():
        log.info("eps=%g: %d cells x ~%d steps", eps, cells, steps)
    jobs = [(cfg, coarse, tuple(plan.window), times, plan.space_time, plan.phase_space, use_numba)
            for cfg in plan.configs()]
    if plan.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            outcomes = list(pool.map(_execute, jobs))
    else:
        outcomes = [_execute(j) for j in jobs]
    return assemble(plan, outcomes)
