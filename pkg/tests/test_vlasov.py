import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvlab import _accel, kernels
from bvlab.core import FluidField, KineticField, PhaseGrid
from bvlab.vlasov import jacobian_probe, trace_back, vlasov_step


def closed_form(x, v, c, t):
    """Backward foot for constant u = c."""
    V = c + (v - c) * math.exp(t)
    X = x - c * t - (v - c) * math.expm1(t)
    return X, V


@pytest.mark.parametrize("c", [0.0, 0.7, -1.3])
def test_constant_velocity_foot_is_exact(c):
    g = PhaseGrid(-10, 10, 64, -4, 4, 32)
    u = FluidField(np.full(g.nx, c), c, c)
    x, v = 0.3, -0.9
    end = trace_back(np.array(x), np.array(v), u, 0.37, g)
    X, V = closed_form(x, v, c, 0.37)
    assert end.X == pytest.approx(X, abs=1e-14) and end.V == pytest.approx(V, abs=1e-14)
    assert not end.outside


def test_foot_far_away_is_flagged():
    g = PhaseGrid(-1, 1, 16, -4, 4, 16)
    u = FluidField(np.zeros(g.nx))
    end = trace_back(np.array([0.9]), np.array([-3.9]), u, 1.0, g)
    assert end.outside[0]


def test_jacobian_is_e_to_dt():
    g = PhaseGrid(-4, 4, 64, -3, 3, 32)
    u = FluidField(0.4 * np.sin(g.x), 0.0, 0.0)
    for dt in (0.01, 0.1):
        assert jacobian_probe(0.2, 0.5, u, dt, g) == pytest.approx(math.exp(dt), rel=1e-3)


def test_dt_must_be_positive():
    g = PhaseGrid()
    with pytest.raises(ValueError):
        vlasov_step(KineticField(np.zeros(g.shape)), FluidField(np.zeros(g.nx)), 0.0, g)


def test_positivity_and_zero_preserved():
    rng = np.random.default_rng(3)
    g = PhaseGrid(-2, 2, 24, -2, 2, 16)
    u = FluidField(rng.normal(size=g.nx), 0.3, -0.2)
    f = KineticField(rng.random(g.shape))
    assert vlasov_step(f, u, 0.05, g).f.min() >= 0.0
    z = vlasov_step(KineticField(np.zeros(g.shape)), u, 0.05, g)
    assert not z.f.any()


def test_mass_conserved_for_interior_bump_in_constant_flow():
    g = PhaseGrid(-4, 4, 128, -4, 4, 128)
    X, V = np.meshgrid(g.x, g.v, indexing="ij")
    f0 = np.exp(-(X ** 2 + V ** 2) / 0.5)
    u = FluidField(np.full(g.nx, 0.3), 0.3, 0.3)
    f = KineticField(f0)
    for _ in range(10):
        f = vlasov_step(f, u, 0.02, g)
    m0 = f0.sum()
    # interpolation at the contracted velocity nodes loses mass at first order in dv
    assert abs(f.f.sum() - m0) / m0 < 1e-2


def test_galilean_covariance():
    # shifting u by c and v by c maps the solution to one translated by c t in x
    g = PhaseGrid(-6, 6, 96, -4, 4, 64)
    c = g.dv * 4
    X, V = np.meshgrid(g.x, g.v, indexing="ij")
    f0 = np.exp(-(X ** 2) - (V + c) ** 2 * 2)
    u0 = FluidField(np.zeros(g.nx))
    shifted = np.exp(-(X ** 2) - V ** 2 * 2)
    uc = FluidField(np.full(g.nx, c), c, c)
    dt = g.dx / c  # one cell per step in x
    a, b = KineticField(f0), KineticField(shifted)
    for _ in range(4):
        a = vlasov_step(a, u0, dt, g)
        b = vlasov_step(b, uc, dt, g)
    # b at (x + 4 dx, v + 4 dv) equals a at (x, v) up to interpolation differences
    lhs = b.f[4:, 4:]
    rhs = a.f[:-4, :-4]
    assert np.max(np.abs(lhs - rhs)) < 0.05 * a.f.max()


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(1e-3, 0.5), st.floats(-2, 2), st.floats(-2, 2))
def test_numba_matches_numpy(seed, h, um, up):
    rng = np.random.default_rng(seed)
    nx, nv = 13, 9
    f = rng.random((nx, nv))
    u = rng.normal(size=nx)
    args = (f, u, um, up, -1.0, 2.0 / nx, -2.0, 4.0 / nv, h)
    a = kernels.vlasov_update_numpy(*args)
    b = kernels.vlasov_update_numba(*args)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_dispatch_respects_flag():
    g = PhaseGrid(-1, 1, 8, -1, 1, 8)
    f = np.ones(g.shape)
    u = np.zeros(g.nx)
    a = kernels.vlasov_update(f, u, 0.0, 0.0, -1.0, g.dx, -1.0, g.dv, 0.1, use_numba=False)
    assert np.array_equal(a, kernels.vlasov_update_numpy(f, u, 0.0, 0.0, -1.0, g.dx, -1.0, g.dv, 0.1))
    assert _accel.backend() in ("numba", "numpy")


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys

    env = dict(os.environ, BVLAB_NO_NUMBA="1")
    r = subprocess.run([sys.executable, "-c", "from bvlab import backend; print(backend())"],
                       env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "numpy"
