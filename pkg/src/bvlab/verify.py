"""The acceptance suite: twelve criteria, each a function returning a Criterion.

``bvlab verify`` and tests/test_acceptance.py both call :func:`run_all`.
Runs shared between criteria (the coupled refinement ladder, the two
epsilon-sweeps) are computed once per process and cached.
"""
from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import presets
from .core import FluidField, InitialData, PhaseGrid, SimConfig, make_initial_data
from .coupling import moments, run
from .diagnostics import (energy_balance_residual, entropy_production, gronwall_bound_check,
                          level_set_decomposition, momentum_drift)
from .entropy import make_entropy_triple
from .study import SweepPlan, fit_rate, run_sweep
from .testfunctions import SpaceTimeBump
from .vlasov import jacobian_probe, trace_back, vlasov_step

TIME_BUDGET = 300.0


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.name}: {self.detail}"


class Context:
    """Run cache plus the debug drag-sign flip applied to coupled runs."""

    def __init__(self, drag_sign=1.0, use_numba=None):
        self.drag_sign = drag_sign
        self.use_numba = use_numba
        self._cache = {}

    def get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    def run(self, key, cfg, **kw):
        return self.get(key, lambda: run(cfg, use_numba=self.use_numba, **kw))


def _order(hs, errs):
    """Least-squares slope of log err against log h."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def _fmt(xs):
    return "[" + ", ".join(f"{x:.3g}" for x in xs) + "]"


# 1 -------------------------------------------------------------------------

def _traveling_wave(x, t, eps):
    return 0.5 - 0.5 * np.tanh((x - 0.5 * t) / (4.0 * eps))


def criterion_1(ctx):
    eps = 0.05
    out = {}
    for nx in (320, 640):
        grid = PhaseGrid(-2.0, 2.0, nx, -1.0, 1.0, 4)
        cfg = replace(presets.shock(eps), grid=grid, output_times=(0.25, 0.5, 0.75))
        traj = ctx.run(("c1", nx), cfg)
        linf = max(float(np.max(np.abs(u.u - _traveling_wave(grid.x, t, eps))))
                   for t, (u, _) in zip(traj.times, traj.snapshots))
        uT = traj.final[0].u
        l1 = float(np.sum(np.abs(uT - _traveling_wave(grid.x, traj.times[-1], eps))) * grid.dx)
        out[nx] = (linf, l1)
    linf = out[320][0]
    ratio = out[320][1] / out[640][1]
    ok = linf <= 1e-2 and ratio >= 1.7
    return Criterion(1, "viscous-shock oracle", ok,
                     f"Linf={linf:.3e} (<=1e-2), L1 ratio on halving dx={ratio:.2f} (>=1.7)")


# 2 -------------------------------------------------------------------------

def criterion_2(ctx):
    grid = PhaseGrid(-10.0, 10.0, 64, -8.0, 8.0, 64)
    u = FluidField(np.ones(grid.nx), 1.0, 1.0)
    dt = 0.05
    rng = np.random.default_rng(20240607)
    x = rng.uniform(-5.0, 5.0, 1000)
    v = rng.uniform(-5.0, 5.0, 1000)
    X, V = trace_back(x, v, u, dt, grid)
    Xe = x - dt - (v - 1.0) * np.expm1(dt)
    Ve = 1.0 + (v - 1.0) * math.exp(dt)
    err = float(max(np.max(np.abs(X - Xe)), np.max(np.abs(V - Ve))))
    jac = max(abs(jacobian_probe(x[k], v[k], u, dt, grid) - math.exp(dt)) for k in range(50))
    ok = err <= 1e-5 and jac <= 1e-6
    return Criterion(2, "characteristic oracle", ok,
                     f"endpoint error={err:.2e} (<=1e-5), |J - e^dt|={jac:.2e} (<=1e-6)")


# 3 -------------------------------------------------------------------------

def criterion_3(ctx):
    grid = PhaseGrid(-8.0, 8.0, 256, -8.0, 8.0, 1024)
    ini = InitialData(u_family="connector", f_family="gaussian", f_mass=1.0,
                      f_x0=-2.0, f_v0=0.0, f_sx=1.0, f_sv=1.0)
    cfg = SimConfig(epsilon=0.05, t_final=2.0, grid=grid, u_minus=1.0, u_plus=1.0, initial=ini)
    u, f = make_initial_data(cfg)
    dt = 1.0 / 128
    v = grid.v
    worst = 0.0
    for k in range(1, 257):
        f = vlasov_step(f, u, dt, grid, use_numba=ctx.use_numba)
        rho = f.f.sum()
        mean_v = float((f.f @ v).sum() / rho)
        worst = max(worst, abs(mean_v - (1.0 - math.exp(-k * dt))))
    return Criterion(3, "relaxation law", worst <= 5e-3,
                     f"max |<v> - (1 - e^-t)| on [0, 2]={worst:.2e} (<=5e-3)")


# 4 and 6 share the coupled refinement ladder ------------------------------

LADDER = ((320, 24), (640, 48), (1280, 96))
REFERENCE = 1


class _Positivity:
    def __init__(self):
        self.min = math.inf

    def observe(self, t, u, f, m):
        self.min = min(self.min, float(f.f.min()))


def _ladder(ctx):
    def make():
        out = []
        for nx, nv in LADDER:
            cfg = replace(presets.coupled(0.05, nx=nx, nv=nv), drag_sign=ctx.drag_sign)
            pos = _Positivity()
            traj = run(cfg, observers=[pos], use_numba=ctx.use_numba)
            out.append((cfg, traj, pos.min))
        return out
    return ctx.get("ladder", make)


def criterion_4(ctx):
    ladder = _ladder(ctx)
    fmin = min(p for _, _, p in ladder)
    drifts, hs = [], []
    for cfg, traj, _ in ladder:
        mass = traj.column("mass")
        drifts.append(float(np.max(np.abs(mass - mass[0])) / mass[0]))
        hs.append(cfg.grid.dv)
    order = _order(hs, drifts)
    ok = fmin >= 0.0 and drifts[REFERENCE] <= 1e-3 and order >= 1.7
    return Criterion(4, "mass and positivity", ok,
                     f"min f={fmin:.1e} (>=0), drift={_fmt(drifts)} (ref <=1e-3), order={order:.2f} (>=1.7)")


# 5 -------------------------------------------------------------------------

ENERGY_H = (1.0 / 8, 1.0 / 16, 1.0 / 32)


def criterion_5(ctx):
    res, mom = [], []
    for h in ENERGY_H:
        cfg = presets.energy_identity(h, drag_sign=ctx.drag_sign)
        traj = ctx.run(("c5", h, ctx.drag_sign), cfg)
        res.append(float(np.max(np.abs(energy_balance_residual(traj)))))
        mom.append(float(np.max(np.abs(momentum_drift(traj)))))
    o_r, o_m = _order(ENERGY_H, res), _order(ENERGY_H, mom)
    ok = res[-1] <= 5e-3 and mom[-1] <= 5e-3 and o_r >= 0.9 and o_m >= 0.9
    return Criterion(5, "energy identity", ok,
                     f"sup|r|={_fmt(res)} (ref <=5e-3, order {o_r:.2f} >=0.9); "
                     f"momentum drift={_fmt(mom)} (order {o_m:.2f})")


# 6 -------------------------------------------------------------------------

def criterion_6(ctx):
    ladder = _ladder(ctx)
    reps = [gronwall_bound_check(traj) for _, traj, _ in ladder]
    ref = reps[REFERENCE]
    stable = all(abs(r.C1 - ref.C1) <= 0.2 * abs(ref.C1) + 1e-12 and
                 abs(r.C2 - ref.C2) <= 0.2 * abs(ref.C2) + 1e-12 for r in reps)
    below = True
    for _, traj, _ in ladder:
        chk = gronwall_bound_check(traj, constants=(ref.C1, ref.C2), tol=1e-2 * ref.E0)
        below &= chk.holds
    ok = stable and below
    return Criterion(6, "Gronwall envelope", ok,
                     f"C1={_fmt([r.C1 for r in reps])}, C2={_fmt([r.C2 for r in reps])} "
                     f"(within 20%: {stable}), below reference envelope: {below}")


# 7, 8, 9 share the two sweeps ----------------------------------------------

def _sweep(ctx, name):
    def make():
        base = presets.shock() if name == "shock" else presets.coupled()
        base = replace(base, drag_sign=ctx.drag_sign)
        plan = SweepPlan(base, eps_list=presets.SWEEP_EPS, t_samples=21)
        return run_sweep(plan, use_numba=ctx.use_numba)
    return ctx.get(("sweep", name), make)


def criterion_7(ctx):
    ratios = {n: _sweep(ctx, n).l4_ratio for n in ("shock", "coupled")}
    ok = all(r <= 2.0 for r in ratios.values())
    return Criterion(7, "L4_loc uniformity", ok,
                     ", ".join(f"{n} max/min={r:.3f}" for n, r in ratios.items()) + " (<=2)")


def criterion_8(ctx):
    parts, ok = [], True
    for name in ("shock", "coupled"):
        rep = _sweep(ctx, name)
        for r in (1, 2, 4):
            d = rep.d(r)
            dec = bool(np.all(np.isfinite(d)) and np.all(np.diff(d) < 0))
            ok &= dec
            parts.append(f"{name} d{r}={_fmt(d)}")
    rep = _sweep(ctx, "shock")
    fin = rep.outcomes[-1]
    bound = 3 * rep.plan.eps_list[-1] + 2 * fin.grid.dx
    ok &= rep.shock_distance is not None and rep.shock_distance <= bound
    parts.append(f"shock L1(K) distance={rep.shock_distance:.3e} (<= {bound:.3e})")
    return Criterion(8, "vanishing-viscosity Cauchy test", ok, "; ".join(parts))


def criterion_9(ctx):
    rep = _sweep(ctx, "coupled")
    if not rep.complete:
        bad = ", ".join(f"eps={e:g}: {msg}" for e, msg in rep.failures)
        return Criterion(9, "weak-solution residuals", False, f"sweep incomplete ({bad})")
    ok = True
    plan = rep.plan
    eps = np.array(plan.eps_list)
    B = np.array([o.burgers_residual for o in rep.outcomes])
    Vv = np.array([o.vlasov_residual for o in rep.outcomes])
    visc = np.array([o.burgers_viscous for o in rep.outcomes])
    e_min = eps[-1]
    worst_b = worst_v = 0.0
    for k, phi in enumerate(plan.space_time):
        tol = max(1e-2, 5 * math.sqrt(e_min) * phi.c1_norm())
        worst_b = max(worst_b, abs(B[-1, k]) / tol)
    for k, phi in enumerate(plan.phase_space):
        tol = max(1e-2, 5 * math.sqrt(e_min) * phi.c1_norm())
        worst_v = max(worst_v, abs(Vv[-1, k]) / tol)
    dec_b = bool(np.all(np.diff(np.abs(B), axis=0) < 0))
    dec_v = bool(np.all(np.diff(np.abs(Vv), axis=0) < 0))
    expo = [fit_rate(list(zip(eps, np.abs(visc[:, k])))) for k in range(visc.shape[1])]
    expo_ok = all(isinstance(p, float) and 0.4 <= p <= 0.6 for p in expo)
    ok = ok and worst_b <= 1 and worst_v <= 1 and dec_b and dec_v and expo_ok
    return Criterion(9, "weak-solution residuals", ok,
                     f"max |res|/bound burgers={worst_b:.2f}, vlasov={worst_v:.2f} (<=1); "
                     f"decreasing burgers={dec_b}, vlasov={dec_v}; "
                     f"viscous pairing exponents={_fmt(expo)} (in [0.4, 0.6])")


# 10 ------------------------------------------------------------------------

def entropy_property_suite(ns=(1, 2, 3)):
    """(ok, worst bound excess, worst C2 jump, worst closed-form error)."""
    bound = jump = closed = 0.0
    for n in ns:
        tri = make_entropy_triple(n)
        u = np.linspace(-3 * n, 3 * n, 100_001)
        I, dI = tri.I(u), tri.dI(u)
        bound = max(bound, float(np.max(np.abs(I) - np.abs(u))), float(np.max(np.abs(dI)) - 2.0))
        inner = np.abs(u) <= n
        outer = np.abs(u) >= 2 * n
        closed = max(closed, float(np.max(np.abs(I[inner] - u[inner]))), float(np.max(np.abs(I[outer]))))
        s = u[inner]
        closed = max(closed, float(np.max(np.abs(tri.F(s) - 0.5 * s * s))),
                     float(np.max(np.abs(tri.Phi(s) - s ** 3 / 3.0))))
        h = 1e-4
        for c in (-2 * n, -n, n, 2 * n):
            right = (tri.I(c + 2 * h) - 2 * tri.I(c + h) + tri.I(c)) / (h * h)
            left = (tri.I(c) - 2 * tri.I(c - h) + tri.I(c - 2 * h)) / (h * h)
            jump = max(jump, float(abs(right - left)))
    ok = bound <= 0.0 and jump <= 1e-6 and closed <= 1e-8
    return ok, bound, jump, closed


def criterion_10(ctx):
    ok, bound, jump, closed = entropy_property_suite()
    tri = make_entropy_triple(1)
    phi = SpaceTimeBump(0.0, 1.5, 0.5, 0.45)
    gaps = []
    # three levels; the order is read off the two finest, past the pre-asymptotic range
    for h in (1.0 / 32, 1.0 / 64, 1.0 / 128):
        traj = ctx.run(("c10", h), presets.smooth(h), keep_history=True)
        gaps.append(abs(entropy_production(traj, tri, phi)["identity_gap"]))
    order = math.log2(gaps[-2] / gaps[-1]) if gaps[-1] > 0 else math.inf
    ok = ok and order >= 0.9
    return Criterion(10, "entropy machinery", ok,
                     f"bound excess={bound:.1e}, C2 jump={jump:.1e} (<=1e-6), closed forms={closed:.1e} "
                     f"(<=1e-8); identity gap={_fmt(gaps)} (order {order:.2f} >=0.9)")


# 11 ------------------------------------------------------------------------

def criterion_11(ctx):
    h = 1.0 / 64
    grid = PhaseGrid(-6.0, 6.0, int(12 / h), -6.0, 6.0, int(12 / h))
    ini = InitialData(u_width=0.2, f_family="gaussian", f_mass=28.0, f_sx=1.0, f_sv=1.0, f_cut=5.0)
    cfg = SimConfig(epsilon=0.05, grid=grid, u_minus=1.0, u_plus=0.0, initial=ini)
    u, f = make_initial_data(cfg)
    dt = 0.05
    f1 = vlasov_step(f, u, dt, grid, use_numba=ctx.use_numba)
    cell = grid.dx * grid.dv
    before = level_set_decomposition(f, 5)
    after = level_set_decomposition(f1, 5, scale=math.exp(dt))
    m0 = np.array([p.f.sum() * cell for p in before])
    m1 = np.array([p.f.sum() * cell for p in after])
    total = f.f.sum() * cell
    worst = float(np.max(np.abs(m1 - m0)) / total)
    band_rel = float(np.max(np.abs(m1 - m0)[m0 > 0] / m0[m0 > 0]))
    exact = True
    for field, pieces in ((f, before), (f1, after)):
        exact &= bool(np.array_equal(sum(p.f for p in pieces), field.f))
        exact &= math.fsum(x for p in pieces for x in p.f.ravel()) == math.fsum(field.f.ravel())
    ok = worst <= 1e-3 and exact
    return Criterion(11, "level sets", ok,
                     f"max band-mass change/||f||={worst:.2e} (<=1e-3; per-band {band_rel:.1e}), "
                     f"partition exact={exact}")


# 12 ------------------------------------------------------------------------

def criterion_12(ctx, elapsed=None):
    from .io import read_snapshot, write_diagnostics, write_snapshot

    cfg = presets.coupled(0.1, nv=24, t_final=0.2)
    same = True
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for k in range(2):
            traj = run(cfg, use_numba=ctx.use_numba)
            d = Path(tmp) / f"r{k}"
            d.mkdir()
            write_diagnostics(d / "diagnostics.csv", traj.records)
            u, f = traj.final
            write_snapshot(d / "final.txt", u, f, cfg.grid, cfg.epsilon, traj.times[-1])
            paths.append(d)
        for name in ("diagnostics.csv", "final.txt"):
            same &= filecmp.cmp(paths[0] / name, paths[1] / name, shallow=False)
        snap = read_snapshot(paths[0] / "final.txt")
        u, f = traj.final
        rt = (np.array_equal(snap.u, u.u) and np.array_equal(snap.f, f.f)
              and snap.t == traj.times[-1] and snap.grid == cfg.grid and snap.epsilon == cfg.epsilon)
    ok = same and rt
    detail = f"byte-identical repeats={same}, snapshot round trip bit-exact={rt}"
    if elapsed is not None:
        ok = ok and elapsed <= TIME_BUDGET
        detail += f", criteria 1-11 took {elapsed:.0f}s (<={TIME_BUDGET:.0f}s)"
    return Criterion(12, "determinism and I/O", ok, detail)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11)


def run_all(drag_sign=1.0, use_numba=None, report=None, context=None):
    """Evaluate every criterion; ``report`` is called with each result as it lands."""
    ctx = context or Context(drag_sign, use_numba)
    results = []
    t0 = time.perf_counter()
    for fn in CRITERIA:
        try:
            res = fn(ctx)
        except Exception as exc:  # a crash is a failure of that criterion, not of the suite
            num = int(fn.__name__.rsplit("_", 1)[1])
            res = Criterion(num, fn.__name__, False, f"raised {type(exc).__name__}: {exc}")
        results.append(res)
        if report:
            report(res)
    res = criterion_12(ctx, elapsed=time.perf_counter() - t0)
    results.append(res)
    if report:
        report(res)
    return results
