import numpy as np
import pytest

from bvlab import presets, study
from bvlab.core import DomainError, PhaseGrid
from bvlab.coupling import RunFailed
from bvlab.study import (SweepPlan, fit_rate, restrict_to_window, riemann_solution, run_sweep,
                         window_cells)


def test_restriction_preserves_integral():
    coarse = PhaseGrid(-2, 2, 8, -1, 1, 4)
    fine = coarse.with_cells(nx=32)
    u = np.sin(fine.x)
    K = (-1.0, 1.0)
    r = restrict_to_window(u, fine, coarse, K)
    assert r.shape == (4,)
    m = (fine.x > -1) & (fine.x < 1)
    assert r.sum() * coarse.dx == pytest.approx(u[m].sum() * fine.dx, rel=1e-14)


def test_restriction_needs_nesting():
    coarse = PhaseGrid(-2, 2, 8, -1, 1, 4)
    with pytest.raises(DomainError):
        restrict_to_window(np.zeros(12), coarse.with_cells(nx=12), coarse, (-1, 1))
    with pytest.raises(DomainError):
        other = PhaseGrid(-3, 2, 16, -1, 1, 4)
        restrict_to_window(np.zeros(16), other, coarse, (-1, 1))


def test_window_cells_only_full_cells():
    g = PhaseGrid(0, 1, 10, -1, 1, 4)
    assert window_cells(g, (0.15, 0.55)).sum() == 3


def test_fit_rate():
    assert fit_rate([(0.1, 0.2), (0.05, 0.1), (0.025, 0.05)]) == pytest.approx(1.0)
    assert fit_rate([(0.1, 0.0), (0.05, 0.0)]) == "exact"
    with pytest.raises(ValueError):
        fit_rate([(0.1, 1.0)])
    with pytest.raises(ValueError):
        fit_rate([(0.1, 1.0), (0.05, 0.0)])


def test_riemann_solution():
    x = np.array([-1.0, 0.4, 0.6])
    assert np.array_equal(riemann_solution(x, 1.0, 1.0, 0.0), [1.0, 1.0, 0.0])
    assert np.allclose(riemann_solution(x, 1.0, 0.0, 1.0), [0.0, 0.4, 0.6])


def test_grids_follow_rule_and_nest():
    plan = SweepPlan(presets.shock(), eps_list=(0.1, 0.05, 0.03))
    gs = plan.grids()
    L = 6.0
    assert gs[0].nx == 240
    for eps, g in zip(plan.eps_list, gs):
        assert L / g.nx <= eps / 4 + 1e-12
        assert g.nx % gs[0].nx == 0
    assert [g.nx for g in gs] == [240, 480, 960]


def test_plan_validation():
    with pytest.raises(DomainError):
        SweepPlan(presets.shock(), eps_list=(0.05, 0.1))
    with pytest.raises(DomainError):
        SweepPlan(presets.shock(), eps_list=())
    with pytest.raises(DomainError):
        SweepPlan(presets.shock(), window=(-5.0, 0.0))


def test_single_eps_gives_empty_tables():
    plan = SweepPlan(presets.shock(t_final=0.2), eps_list=(0.1,))
    rep = run_sweep(plan)
    assert rep.complete
    assert all(len(rep.d(r)) == 0 for r in plan.r_list)
    assert all(v is None for v in rep.rates.values())
    assert rep.tag() == "eps0.1-0.1_nx240-240_nv4"


def test_partial_failure_is_reported(monkeypatch):
    real = study.run

    def flaky(cfg, **kw):
        if cfg.epsilon < 0.07:
            traj = real(cfg.with_(t_final=0.01), **kw)
            raise RunFailed(5, traj, "forced")
        return real(cfg, **kw)

    monkeypatch.setattr(study, "run", flaky)
    plan = SweepPlan(presets.shock(t_final=0.2), eps_list=(0.1, 0.08, 0.05))
    rep = run_sweep(plan)
    assert [e for e, _ in rep.failures] == [0.05]
    assert "blowup at step 5" in rep.failures[0][1]
    assert np.isfinite(rep.d(1)[0]) and np.isnan(rep.d(1)[1])


def test_boundary_rejection():
    cfg = presets.coupled(0.1, nv=16).with_(t_final=0.2)
    ini = cfg.initial
    from dataclasses import replace
    near_edge = cfg.with_(initial=replace(ini, f_x0=-2.5, f_cut=3.0))
    plan = SweepPlan(near_edge, eps_list=(0.1,))
    rep = run_sweep(plan)
    assert not rep.complete
    assert rep.failures[0][1].startswith("rejected: boundary mass")


def test_shock_sweep_distances_and_rate():
    plan = SweepPlan(presets.shock(), eps_list=presets.SWEEP_EPS, workers=2)
    rep = run_sweep(plan)
    assert rep.complete
    d1 = rep.d(1)
    assert np.all(np.diff(d1) < 0)
    assert 0.5 <= rep.rates[1] <= 1.2
    assert rep.shock_distance < 0.05
