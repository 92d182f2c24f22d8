import numpy as np
import pytest

from bvlab.core import DomainError
from bvlab.entropy import make_entropy_triple
from bvlab.testfunctions import SpaceTimeBump, bump, bump_prime, default_phase_space, default_space_time
from bvlab.verify import entropy_property_suite


@pytest.fixture(scope="module")
def tri():
    return make_entropy_triple(1)


def test_suite_passes():
    ok, bound, jump, closed = entropy_property_suite((1, 2))
    assert ok, (bound, jump, closed)


def test_closed_forms_inside(tri):
    u = np.linspace(-1, 1, 11)
    assert np.allclose(tri.I(u), u)
    assert np.allclose(tri.F(u), u * u / 2, atol=1e-9)
    assert np.allclose(tri.Phi(u), u ** 3 / 3, atol=1e-9)


def test_vanishes_outside_and_bounded(tri):
    u = np.linspace(-6, 6, 20001)
    assert np.all(tri.I(u[np.abs(u) >= 2]) == 0.0)
    assert np.max(np.abs(tri.dI(u))) <= 1.5 + 1e-12
    assert np.all(np.abs(tri.I(u)) <= np.abs(u) + 1e-15)


def test_derivatives_consistent(tri):
    u = np.linspace(-2.5, 2.5, 501)
    h = 1e-6
    assert np.allclose((tri.I(u + h) - tri.I(u - h)) / (2 * h), tri.dI(u), atol=1e-6)
    assert np.allclose((tri.F(u + h) - tri.F(u - h)) / (2 * h), tri.dF(u), atol=1e-5)
    assert np.allclose((tri.dI(u + h) - tri.dI(u - h)) / (2 * h), tri.d2I(u), atol=1e-4)


def test_odd_and_even(tri):
    u = np.linspace(0, 3, 31)
    assert np.allclose(tri.I(-u), -tri.I(u))
    assert np.allclose(tri.F(-u), tri.F(u))
    assert np.allclose(tri.Phi(-u), -tri.Phi(u))


@pytest.mark.parametrize("n", [0, -1, 1.5])
def test_bad_level(n):
    with pytest.raises(DomainError):
        make_entropy_triple(n)


def test_bump_shape():
    assert bump(0.0) == 1.0 and bump(1.0) == 0.0 and bump(2.0) == 0.0
    s = np.linspace(-0.99, 0.99, 7)
    h = 1e-6
    assert np.allclose((bump(s + h) - bump(s - h)) / (2 * h), bump_prime(s), atol=1e-8)


def test_c1_norm_bounds_derivatives():
    phi = SpaceTimeBump(0.0, 0.5, 0.5, 0.3)
    x = np.linspace(-1, 1, 2001)[:, None]
    t = np.linspace(0, 1, 2001)[None, :]
    emp = np.abs(phi(x, t)).max() + np.abs(phi.dx(x, t)).max() + np.abs(phi.dt(x, t)).max()
    assert emp <= phi.c1_norm() + 1e-9
    assert emp >= 0.99 * phi.c1_norm()


def test_default_placements_vanish_at_final_time():
    for T in (1.0, 0.5):
        for phi in default_space_time(T):
            assert phi.ct + phi.rt <= T + 1e-12
        for phi in default_phase_space(T):
            assert phi.ct + phi.rt <= T + 1e-12
