"""Hot loops of the semi-Lagrangian phase-space update.

Each kernel exists twice: a vectorised numpy version (always available, also
the reference for tests) and a numba version compiled from a scalar loop.
``vlasov_update`` dispatches on :mod:`bvlab._accel`.

Backward characteristics over one step of length h are integrated with the
exponential midpoint rule: the fluid velocity is frozen at its value at the
half-step predictor position, and the linear relaxation dV/ds = a - V is
then solved exactly. The rule is second order and reproduces the closed form
when u is constant.
"""
import math

import numpy as np

from . import _accel


def interp_fluid(xq, u, u_minus, u_plus, x_min, dx):
    """Piecewise-linear u at arbitrary positions; far-field states outside."""
    nx = u.shape[0]
    xs = x_min + (np.arange(-1, nx + 1) + 0.5) * dx
    up = np.concatenate(([u_minus], u, [u_plus]))
    return np.interp(xq, xs, up)


def trace_back_numpy(x, v, u, u_minus, u_plus, x_min, dx, h):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    a1 = interp_fluid(x, u, u_minus, u_plus, x_min, dx)
    em_half = math.expm1(0.5 * h)
    xh = x - a1 * (0.5 * h) - (v - a1) * em_half
    a2 = interp_fluid(xh, u, u_minus, u_plus, x_min, dx)
    em = math.expm1(h)
    X = x - a2 * h - (v - a2) * em
    V = a2 + (v - a2) * (1.0 + em)
    return X, V


def bilinear_numpy(f, X, V, x_min, dx, v_min, dv):
    """Bilinear interpolation of cell-centred f, zero outside the grid."""
    nx, nv = f.shape
    fp = np.zeros((nx + 2, nv + 2))
    fp[1:-1, 1:-1] = f
    p = (X - x_min) / dx - 0.5
    q = (V - v_min) / dv - 0.5
    ip = np.floor(p)
    iq = np.floor(q)
    a = p - ip
    b = q - iq
    inside = (ip >= -1) & (ip <= nx - 1) & (iq >= -1) & (iq <= nv - 1)
    i0 = np.clip(ip, -1, nx - 1).astype(np.int64) + 1
    j0 = np.clip(iq, -1, nv - 1).astype(np.int64) + 1
    val = ((1 - a) * (1 - b) * fp[i0, j0] + a * (1 - b) * fp[i0 + 1, j0]
           + (1 - a) * b * fp[i0, j0 + 1] + a * b * fp[i0 + 1, j0 + 1])
    return np.where(inside, val, 0.0)


def vlasov_update_numpy(f, u, u_minus, u_plus, x_min, dx, v_min, dv, h):
    nx, nv = f.shape
    x = x_min + (np.arange(nx) + 0.5) * dx
    v = v_min + (np.arange(nv) + 0.5) * dv
    X, V = trace_back_numpy(x[:, None], v[None, :], u, u_minus, u_plus, x_min, dx, h)
    return math.exp(h) * bilinear_numpy(f, X, V, x_min, dx, v_min, dv)


@_accel.njit
def _interp_fluid_scalar(xq, u, u_minus, u_plus, x_min, dx):
    nx = u.shape[0]
    p = (xq - x_min) / dx - 0.5
    if p <= -1.0:
        return u_minus
    if p >= nx:
        return u_plus
    ip = math.floor(p)
    a = p - ip
    i = int(ip)
    left = u_minus if i < 0 else u[i]
    right = u_plus if i + 1 > nx - 1 else u[i + 1]
    return (1.0 - a) * left + a * right


@_accel.njit
def _vlasov_update_loop(f, u, u_minus, u_plus, x_min, dx, v_min, dv, h, out):
    nx, nv = f.shape
    em_half = math.expm1(0.5 * h)
    em = math.expm1(h)
    growth = math.exp(h)
    for i in range(nx):
        x = x_min + (i + 0.5) * dx
        a1 = u[i]
        for j in range(nv):
            v = v_min + (j + 0.5) * dv
            xh = x - a1 * (0.5 * h) - (v - a1) * em_half
            a2 = _interp_fluid_scalar(xh, u, u_minus, u_plus, x_min, dx)
            X = x - a2 * h - (v - a2) * em
            V = a2 + (v - a2) * (1.0 + em)
            p = (X - x_min) / dx - 0.5
            q = (V - v_min) / dv - 0.5
            ip = math.floor(p)
            iq = math.floor(q)
            if ip < -1 or ip > nx - 1 or iq < -1 or iq > nv - 1:
                out[i, j] = 0.0
                continue
            a = p - ip
            b = q - iq
            i0 = int(ip)
            j0 = int(iq)
            acc = 0.0
            if i0 >= 0:
                if j0 >= 0:
                    acc += (1.0 - a) * (1.0 - b) * f[i0, j0]
                if j0 + 1 < nv:
                    acc += (1.0 - a) * b * f[i0, j0 + 1]
            if i0 + 1 < nx:
                if j0 >= 0:
                    acc += a * (1.0 - b) * f[i0 + 1, j0]
                if j0 + 1 < nv:
                    acc += a * b * f[i0 + 1, j0 + 1]
            out[i, j] = growth * acc
    return out


def vlasov_update_numba(f, u, u_minus, u_plus, x_min, dx, v_min, dv, h):
    out = np.empty_like(f)
    return _vlasov_update_loop(np.ascontiguousarray(f), np.ascontiguousarray(u), float(u_minus),
                               float(u_plus), float(x_min), float(dx), float(v_min), float(dv),
                               float(h), out)


def vlasov_update(f, u, u_minus, u_plus, x_min, dx, v_min, dv, h, use_numba=None):
    if use_numba is None:
        use_numba = _accel.HAVE_NUMBA
    if use_numba:
        return vlasov_update_numba(f, u, u_minus, u_plus, x_min, dx, v_min, dv, h)
    return vlasov_update_numpy(f, u, u_minus, u_plus, x_min, dx, v_min, dv, h)
