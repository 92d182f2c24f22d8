"""Truncated entropy/flux triples (I_n, F_n, Phi_n) for Burgers' flux.

I_n is the identity on |u| <= n and vanishes for |u| >= 2n. On the
transition n <= |u| <= 2n its derivative g(theta), theta = (|u| - n)/n, is
held at -m on the middle of [0, 1] and joined to the end values 1 and 0 by
septic smoothsteps of width a. With a = 1/4 the area condition int g = -1
forces m = 3/2, so |I_n'| <= 3/2 and I_n is C^4.

F_n(u) = int_0^u I_n'(s) s ds and Phi_n(u) = int_0^u F_n'(s) s ds are built
by adaptive quadrature onto a 4096-point table and cubic-spline interpolated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .core import DomainError

RAMP = 0.25
DEPTH = (1.0 + 0.5 * RAMP) / (1.0 - RAMP)
TABLE_SIZE = 4096
QUAD_TOL = 1e-10


def _s7(t):
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t ** 3)


def _s7_prime(t):
    return 140.0 * t ** 3 * (1.0 - t) ** 3


def _s7_integral(t):
    return t ** 5 * (7.0 + t * (-14.0 + t * (10.0 - 2.5 * t)))


def _g(theta):
    a, m = RAMP, DEPTH
    theta = np.asarray(theta, dtype=float)
    lo = theta <= a
    hi = theta >= 1.0 - a
    out = np.full(theta.shape, -m)
    out = np.where(lo, 1.0 - (1.0 + m) * _s7(np.clip(theta / a, 0, 1)), out)
    out = np.where(hi, -m + m * _s7(np.clip((theta - 1.0 + a) / a, 0, 1)), out)
    return out


def _g_prime(theta):
    a, m = RAMP, DEPTH
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape)
    out = np.where(theta <= a, -(1.0 + m) * _s7_prime(np.clip(theta / a, 0, 1)) / a, out)
    out = np.where(theta >= 1.0 - a, m * _s7_prime(np.clip((theta - 1.0 + a) / a, 0, 1)) / a, out)
    return out


def _g_integral(theta):
    a, m = RAMP, DEPTH
    theta = np.asarray(theta, dtype=float)
    t1 = np.clip(theta / a, 0, 1)
    G = np.where(theta <= a, theta - (1.0 + m) * a * _s7_integral(t1), 0.0)
    Ga = a - (1.0 + m) * a * 0.5
    mid = Ga - m * (np.clip(theta, a, 1.0 - a) - a)
    t2 = np.clip((theta - 1.0 + a) / a, 0, 1)
    tail = m * a * _s7_integral(t2) - m * a * t2
    return np.where(theta <= a, G, mid + tail)


def _dI_scalar(s, n):
    if s <= n:
        return 1.0
    if s >= 2 * n:
        return 0.0
    a, m = RAMP, DEPTH
    theta = (s - n) / n
    if theta <= a:
        return 1.0 - (1.0 + m) * _s7(theta / a)
    if theta >= 1.0 - a:
        return -m + m * _s7((theta - 1.0 + a) / a)
    return -m


@dataclass
class EntropyTriple:
    n: int
    _F: CubicSpline = field(repr=False, default=None)
    _Phi: CubicSpline = field(repr=False, default=None)

    def I(self, u):
        u = np.asarray(u, dtype=float)
        s = np.abs(u)
        n = float(self.n)
        theta = np.clip((s - n) / n, 0.0, 1.0)
        trans = np.sign(u) * n * (1.0 + _g_integral(theta))
        return np.where(s <= n, u, np.where(s >= 2 * n, 0.0, trans))

    def dI(self, u):
        u = np.asarray(u, dtype=float)
        s = np.abs(u)
        n = float(self.n)
        theta = np.clip((s - n) / n, 0.0, 1.0)
        return np.where(s <= n, 1.0, np.where(s >= 2 * n, 0.0, _g(theta)))

    def d2I(self, u):
        u = np.asarray(u, dtype=float)
        s = np.abs(u)
        n = float(self.n)
        theta = np.clip((s - n) / n, 0.0, 1.0)
        inside = (s > n) & (s < 2 * n)
        return np.where(inside, np.sign(u) * _g_prime(theta) / n, 0.0)

    def F(self, u):
        s = np.minimum(np.abs(np.asarray(u, dtype=float)), 2.0 * self.n)
        return self._F(s)

    def dF(self, u):
        u = np.asarray(u, dtype=float)
        return self.dI(u) * u

    def d2F(self, u):
        u = np.asarray(u, dtype=float)
        return self.d2I(u) * u + self.dI(u)

    def Phi(self, u):
        u = np.asarray(u, dtype=float)
        s = np.minimum(np.abs(u), 2.0 * self.n)
        return np.sign(u) * self._Phi(s)

    def dPhi(self, u):
        u = np.asarray(u, dtype=float)
        return self.dF(u) * u


def make_entropy_triple(n):
    if n < 1 or int(n) != n:
        raise DomainError(f"truncation level must be a positive integer, got {n}")
    n = int(n)
    tri = EntropyTriple(n)
    s = np.linspace(0.0, 2.0 * n, TABLE_SIZE)
    F = np.zeros_like(s)
    P = np.zeros_like(s)
    dF = lambda x: _dI_scalar(x, n) * x
    dP = lambda x: _dI_scalar(x, n) * x * x
    brk = [float(n * (1 + RAMP)), float(n * (2 - RAMP))]
    for k in range(1, s.size):
        a, b = s[k - 1], s[k]
        pts = [p for p in brk if a < p < b] or None
        F[k] = F[k - 1] + quad(dF, a, b, epsabs=QUAD_TOL, epsrel=0.0, points=pts)[0]
        P[k] = P[k - 1] + quad(dP, a, b, epsabs=QUAD_TOL, epsrel=0.0, points=pts)[0]
    tri._F = CubicSpline(s, F)
    tri._Phi = CubicSpline(s, P)
    return tri
