"""Energy accounting, weak-form residuals and other analytical diagnostics.

Space and velocity integrals use midpoint quadrature on the cell centres;
time integrals use the trapezoid rule on the adaptive step times. Every
trajectory fold is written as an observer with ``observe(t, u, f, moments)``
so it can either ride along with :func:`bvlab.coupling.run` or be replayed
over a stored history.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, KineticField
from .coupling import moments as _moments


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    dt: float
    energy: float
    drag_dissipation: float
    viscous_dissipation: float
    mass: float
    momentum: float
    boundary_mass_indicator: float
    l4_window: float

    FIELDS = ("step", "t", "dt", "energy", "drag_dissipation", "viscous_dissipation",
              "mass", "momentum", "boundary_mass_indicator", "l4_window")

    def row(self):
        return [getattr(self, k) for k in self.FIELDS]


def velocity_gradient(u, grid):
    """Centred u_x with one-sided differences at the two end cells."""
    return np.gradient(u.u, grid.dx)


def boundary_mass_fraction(f, width=2):
    f = f.f if isinstance(f, KineticField) else f
    total = f.sum()
    if total <= 0.0:
        return 0.0
    inner = f[width:-width, width:-width].sum()
    return float((total - inner) / total)


def relative_energy(u, f, ubar, grid, m=None):
    """E[u, f] = 1/2 int (u - ubar)^2 + 1/2 int int f (1 + v^2)."""
    if m is None:
        m = _moments(f, grid)
    fluid = 0.5 * np.sum((u.u - ubar.values) ** 2) * grid.dx
    kinetic = 0.5 * np.sum(m.rho + m.e2) * grid.dx
    return float(fluid + kinetic)


def drag_dissipation(u, m, grid):
    """int int f (v - u)^2 dv dx, expanded through the moments."""
    return float(np.sum(m.e2 - 2.0 * u.u * m.j + u.u * u.u * m.rho) * grid.dx)


def viscous_dissipation(u, epsilon, grid):
    ux = velocity_gradient(u, grid)
    return float(epsilon * np.sum(ux * ux) * grid.dx)


class StepRecorder:
    """Builds one DiagnosticsRecord per step and carries the running L4 integral."""

    def __init__(self, config):
        self.config = config
        self.grid = config.grid
        self.ubar = config.connector()
        a, b = config.window
        self.window = (self.grid.x >= a) & (self.grid.x <= b)
        self._l4 = 0.0
        self._prev = None

    def record(self, step, t, dt, u, f, m):
        g = self.grid
        q = float(np.sum(u.u[self.window] ** 4) * g.dx)
        if self._prev is not None:
            t0, q0 = self._prev
            self._l4 += 0.5 * (q + q0) * (t - t0)
        self._prev = (t, q)
        mass = float(np.sum(m.rho) * g.dx)
        momentum = float(np.sum(u.u - self.ubar.values) * g.dx + np.sum(m.j) * g.dx)
        return DiagnosticsRecord(
            step=step, t=t, dt=dt,
            energy=relative_energy(u, f, self.ubar, g, m),
            drag_dissipation=drag_dissipation(u, m, g),
            viscous_dissipation=viscous_dissipation(u, self.config.epsilon, g),
            mass=mass, momentum=momentum,
            boundary_mass_indicator=boundary_mass_fraction(f),
            l4_window=self._l4,
        )


def _cumtrapz(y, t):
    out = np.zeros_like(y, dtype=float)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def dissipated(traj):
    """int_0^t (drag + viscous dissipation), trapezoid on step times."""
    t = traj.column("t")
    d = traj.column("drag_dissipation") + traj.column("viscous_dissipation")
    return _cumtrapz(d, t)


def energy_balance_residual(traj):
    """r(t) = E(t) + int_0^t (drag + viscous) - E(0) at every step time.

    Only defined when u_minus == u_plus: then the energy law is an identity
    and r vanishes in the continuum.
    """
    cfg = traj.config
    if cfg.u_minus != cfg.u_plus:
        raise DomainError("energy identity needs u_minus == u_plus; use gronwall_bound_check")
    E = traj.column("energy")
    return E + dissipated(traj) - E[0]


def momentum_drift(traj):
    P = traj.column("momentum")
    return P - P[0]


@dataclass
class GronwallReport:
    C1: float
    C2: float
    E0: float
    max_violation: float
    holds: bool

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        return (self.E0 + self.C2 * t) * np.exp(self.C1 * t)


def fit_gronwall(t, lhs):
    """Constants (C1, C2) of an envelope (E0 + C2 t) e^{C1 t} over lhs(t).

    C1 is the least-squares growth rate of log(lhs + 1); C2 is then the
    smallest non-negative value keeping lhs under the envelope.
    """
    t = np.asarray(t, dtype=float)
    lhs = np.asarray(lhs, dtype=float)
    E0 = float(lhs[0])
    y = np.log(lhs + 1.0)
    if len(t) > 1 and np.ptp(t) > 0:
        C1 = max(0.0, float(np.polyfit(t, y, 1)[0]))
    else:
        C1 = 0.0
    pos = t > 0
    C2 = 0.0
    if np.any(pos):
        C2 = max(0.0, float(np.max((lhs[pos] * np.exp(-C1 * t[pos]) - E0) / t[pos])))
    return C1, C2


def gronwall_bound_check(traj, constants=None, tol=1e-8):
    """Check E(t) + int(diss) <= (E(0) + C2 t) e^{C1 t}.

    Without ``constants`` the envelope is fitted to this trajectory; passing
    constants fitted elsewhere tests the envelope on an independent run.
    """
    t = traj.column("t")
    lhs = traj.column("energy") + dissipated(traj)
    E0 = float(lhs[0])
    C1, C2 = fit_gronwall(t, lhs) if constants is None else constants
    env = (E0 + C2 * t) * np.exp(C1 * t)
    viol = float(np.max(lhs - env))
    return GronwallReport(C1, C2, E0, viol, viol <= tol)


def l4_local(traj, K):
    """int_0^t int_K u^4 dx dtau up to the trajectory's final time."""
    a, b = K
    g = traj.grid
    if not (g.x_min <= a < b <= g.x_max):
        raise DomainError("window K must lie inside the x-domain")
    if traj.history is None:
        if tuple(K) != tuple(traj.config.window):
            raise ValueError("trajectory without history only carries the configured window")
        return float(traj.records[-1].l4_window)
    mask = (g.x >= a) & (g.x <= b)
    ts = np.array([s[0] for s in traj.history])
    q = np.array([np.sum(s[1].u[mask] ** 4) * g.dx for s in traj.history])
    return float(_cumtrapz(q, ts)[-1])


class _TimeFold:
    """Trapezoid accumulation of a scalar integrand over observed step times."""

    def __init__(self):
        self._prev = None
        self.started = False

    def _accumulate(self, t, values):
        values = np.asarray(values, dtype=float)
        if self._prev is None:
            self.total = np.zeros_like(values)
        else:
            t0, v0 = self._prev
            self.total = self.total + 0.5 * (values + v0) * (t - t0)
        self._prev = (t, values)


class BurgersWeakResidual(_TimeFold):
    """Residual of the inviscid fluid weak form against phi(x, t).

    ``value`` = int phi(x,0) u0 + int int (u phi_t + u^2/2 phi_x + phi int f (v-u) dv);
    ``viscous`` = eps int int u_x phi_x, the continuum value of ``value``.
    """

    def __init__(self, phi, grid, epsilon):
        super().__init__()
        self.phi, self.grid, self.epsilon = phi, grid, epsilon
        self.initial = 0.0

    def observe(self, t, u, f, m):
        x, dx = self.grid.x, self.grid.dx
        if self._prev is None:
            self.initial = float(np.sum(self.phi(x, t) * u.u) * dx)
        ux = velocity_gradient(u, self.grid)
        phi, px, pt = self.phi(x, t), self.phi.dx(x, t), self.phi.dt(x, t)
        main = np.sum(u.u * pt + 0.5 * u.u * u.u * px + phi * m.drag(u.u)) * dx
        visc = self.epsilon * np.sum(ux * px) * dx
        self._accumulate(t, [main, visc])

    @property
    def value(self):
        return self.initial + float(self.total[0])

    @property
    def viscous(self):
        return float(self.total[1])


class VlasovWeakResidual(_TimeFold):
    """Residual of the Vlasov weak form against a tensor bump phi(x, v, t)."""

    def __init__(self, phi, grid):
        super().__init__()
        self.phi, self.grid = phi, grid
        v = grid.v
        bv, dbv = phi.fv(v), phi.fv.d(v)
        self._vbasis = np.stack([bv, v * bv, dbv, v * dbv], axis=1) * grid.dv
        self.initial = 0.0

    def observe(self, t, u, f, m):
        x, dx = self.grid.x, self.grid.dx
        bx, dbx = self.phi.fx(x), self.phi.fx.d(x)
        bt, dbt = float(self.phi.ft(t)), float(self.phi.ft.d(t))
        c = f.f @ self._vbasis
        if self._prev is None:
            self.initial = float(bt * np.sum(bx * c[:, 0]) * dx)
        term_t = dbt * np.sum(bx * c[:, 0])
        term_x = bt * np.sum(dbx * c[:, 1])
        term_v = bt * np.sum(bx * (u.u * c[:, 2] - c[:, 3]))
        self._accumulate(t, [(term_t + term_x + term_v) * dx])

    @property
    def value(self):
        return self.initial + float(self.total[0])


class EntropyProduction(_TimeFold):
    """Weak pairings of dt I_n + dx F_n and dt F_n + dx Phi_n with phi(x, t).

    Alongside the second pairing it accumulates the right-hand side of the
    smooth-solution identity dt F_n + dx Phi_n = (eps u_xx + drag) F_n'(u),
    split into its viscous and drag parts.
    """

    def __init__(self, triple, phi, grid, epsilon):
        super().__init__()
        self.tri, self.phi, self.grid, self.epsilon = triple, phi, grid, epsilon
        self.initial = np.zeros(2)

    def observe(self, t, u, f, m):
        tri, g = self.tri, self.grid
        x, dx = g.x, g.dx
        phi, px, pt = self.phi(x, t), self.phi.dx(x, t), self.phi.dt(x, t)
        I, F, P = tri.I(u.u), tri.F(u.u), tri.Phi(u.u)
        if self._prev is None:
            self.initial = -np.array([np.sum(I * phi), np.sum(F * phi)]) * dx
        up = u.padded()
        uxx = (up[2:] - 2.0 * up[1:-1] + up[:-2]) / (dx * dx)
        dF = tri.dF(u.u)
        vals = [
            -np.sum(I * pt + F * px) * dx,
            -np.sum(F * pt + P * px) * dx,
            np.sum(self.epsilon * uxx * dF * phi) * dx,
            np.sum(m.drag(u.u) * dF * phi) * dx,
        ]
        self._accumulate(t, vals)

    @property
    def pairing_I(self):
        return float(self.initial[0] + self.total[0])

    @property
    def pairing_F(self):
        return float(self.initial[1] + self.total[1])

    @property
    def rhs_viscous(self):
        return float(self.total[2])

    @property
    def rhs_drag(self):
        return float(self.total[3])

    @property
    def identity_gap(self):
        return self.pairing_F - (self.rhs_viscous + self.rhs_drag)

    def result(self):
        c1 = self.phi.c1_norm()
        return {
            "pairing_I": self.pairing_I,
            "pairing_F": self.pairing_F,
            "pairing_I_normalized": self.pairing_I / c1,
            "pairing_F_normalized": self.pairing_F / c1,
            "rhs_viscous": self.rhs_viscous,
            "rhs_drag": self.rhs_drag,
            "identity_gap": self.identity_gap,
        }


def _replay(traj, fold):
    for t, u, f in traj.states():
        fold.observe(t, u, f, _moments(f, traj.grid))
    return fold


def weak_residual_burgers(traj, phi):
    """Returns (residual, viscous pairing) for a space-time test function."""
    phi.check(traj.grid, traj.config.t_final)
    fold = _replay(traj, BurgersWeakResidual(phi, traj.grid, traj.config.epsilon))
    return fold.value, fold.viscous


def weak_residual_vlasov(traj, phi):
    phi.check(traj.grid, traj.config.t_final)
    return _replay(traj, VlasovWeakResidual(phi, traj.grid)).value


def entropy_production(traj, triple, phi):
    phi.check(traj.grid, traj.config.t_final)
    return _replay(traj, EntropyProduction(triple, phi, traj.grid, traj.config.epsilon)).result()


def truncated_moment(f, L, which, grid):
    """Velocity moment with cutoff 1_{|v| <= L} and the tail energy beyond L.

    Returns (per-cell truncated moment, int int f v^2 1_{|v| > L}).
    """
    if not L > 0:
        raise DomainError("cutoff L must be positive")
    v = grid.v
    inside = np.abs(v) <= L
    ff = f.f if isinstance(f, KineticField) else np.asarray(f)
    if which == "density":
        w = inside.astype(float)
    elif which == "momentum":
        w = v * inside
    else:
        raise ValueError(f"which must be 'density' or 'momentum', got {which!r}")
    trunc = ff @ w * grid.dv
    tail = float(np.sum(ff @ (v * v * ~inside)) * grid.dv * grid.dx)
    return trunc, tail


def level_set_decomposition(f, k_max, scale=1.0):
    """Bands 1_{k s <= f < (k+1) s} f for k < k_max plus the remainder f >= k_max s.

    ``scale`` is the accumulated growth factor of the transport; band masses
    are conserved when the edges are rescaled by it.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    ff = f.f if isinstance(f, KineticField) else np.asarray(f)
    level = np.floor(ff / scale)
    pieces = [KineticField(np.where(level == k, ff, 0.0)) for k in range(k_max)]
    pieces.append(KineticField(np.where(level >= k_max, ff, 0.0)))
    return pieces
