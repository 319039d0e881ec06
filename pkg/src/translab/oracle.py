"""Closed-form reference solutions and their strong-form residual checks.

Each oracle returns ``(u, grad_u)`` for points ``(P, n)``: ``u`` has shape
``(P,)`` (scalar) or ``(P, m)`` (vector), ``grad_u`` one more trailing axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import ParameterError


def _pts(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def flat_interface(a, b, x):
    """Coefficient ``a`` on ``{x_2 <= 0}``, ``b`` on ``D = {x_2 > 0}``; ``u = x_2`` below, ``(a/b) x_2`` above."""
    if not (a > 0 and b > 0):
        raise ParameterError("coefficients must be positive")
    x = _pts(x)
    slope = np.where(x[:, 1] > 0, a / b, 1.0)
    u = slope * x[:, 1]
    grad = np.zeros_like(x)
    grad[:, 1] = slope
    return u, grad


def _disk_inside(k, R, x):
    c = 2.0 / (1.0 + k)
    u = c * x[:, 0]
    grad = np.zeros_like(x)
    grad[:, 0] = c
    return u, grad


def _disk_outside(k, R, x):
    beta = (1.0 - k) / (1.0 + k) * R * R
    x1, x2 = x[:, 0], x[:, 1]
    r2 = x1 * x1 + x2 * x2
    u = x1 * (1.0 + beta / r2)
    grad = np.empty_like(x)
    grad[:, 0] = 1.0 + beta * (x2 * x2 - x1 * x1) / (r2 * r2)
    grad[:, 1] = -2.0 * beta * x1 * x2 / (r2 * r2)
    return u, grad


def disk_inclusion(k, R, x):
    """Planar two-phase solution: coefficient ``k`` in ``B_R(0)``, ``1`` outside, far field ``x_1``."""
    if not k > 0 or not 0 < R < 1:
        raise ParameterError("need k > 0 and R in (0, 1)")
    x = _pts(x)
    inside = np.einsum("pk,pk->p", x, x) < R * R
    u = np.empty(x.shape[0])
    grad = np.empty_like(x)
    if inside.any():
        u[inside], grad[inside] = _disk_inside(k, R, x[inside])
    if (~inside).any():
        u[~inside], grad[~inside] = _disk_outside(k, R, x[~inside])
    return u, grad


def vector_decoupled(base, m, scales=None):
    """Stack ``m`` copies of a scalar oracle ``base(x) -> (u, grad)``; component ``i`` times ``scales[i]``."""
    scales = np.ones(m) if scales is None else np.asarray(scales, dtype=float)
    if scales.shape != (m,):
        raise ParameterError("scales must have length m")

    def oracle(x):
        u, g = base(x)
        return u[:, None] * scales, g[:, None, :] * scales[:, None]

    return oracle


def eigenmode_decay(n, modes, x, t_elapsed):
    """``prod_i sin(pi p_i x_i) exp(-pi^2 |p|^2 t)``: a Dirichlet eigenmode of ``[-1, 1]^n``."""
    x = _pts(x)
    p = np.asarray(modes, dtype=float)
    if p.shape != (n,) or x.shape[1] != n:
        raise ParameterError("modes and points must have length n")
    t = np.asarray(t_elapsed, dtype=float)
    amp = np.exp(-math.pi**2 * float(p @ p) * t)
    s = np.sin(math.pi * p * x)
    c = np.cos(math.pi * p * x)
    u = s.prod(axis=1) * amp
    grad = np.empty_like(x)
    for i in range(n):
        grad[:, i] = math.pi * p[i] * c[:, i] * np.delete(s, i, axis=1).prod(axis=1) * amp
    return u, grad


def eigenmode_rate(modes):
    p = np.asarray(modes, dtype=float)
    return math.pi**2 * float(p @ p)


# --------------------------------------------------------------------------
# strong-form residual suite

FD_STEP = 1e-5
# flux derivatives difference O(1) quantities; 1e-5 leaves a ~1e-10 roundoff floor
FLUX_STEP = 2e-4
# fourth-order central first-derivative stencil
_STENCIL = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
_STENCIL6 = ((-3, -1.0 / 60), (-2, 3.0 / 20), (-1, -3.0 / 4), (1, 3.0 / 4), (2, -3.0 / 20), (3, 1.0 / 60))
# sixth-order one-sided first-derivative stencil, offsets 0..6
_ONE_SIDED = (-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3, -15.0 / 4, 6.0 / 5, -1.0 / 6)


def divergence_of_flux(flux, x, h=FLUX_STEP):
    """``sum_k d_k flux_k`` by the sixth-order central stencil of an analytic flux ``(P, n)``."""
    out = np.zeros(x.shape[0])
    for k in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[k] = h
        for off, w in _STENCIL6:
            out += w * flux(x + off * e)[:, k] / h
    return out


def fd_gradient(u, x, h=FD_STEP):
    g = np.zeros_like(x)
    for k in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[k] = h
        for off, w in _STENCIL:
            g[:, k] += w * u(x + off * e) / h
    return g


def one_sided_derivative(u, x, direction, h=FLUX_STEP):
    """Derivative of ``u`` along ``direction`` using points ``x + j h direction``, ``j = 0..6``."""
    out = np.zeros(x.shape[0])
    for j, w in enumerate(_ONE_SIDED):
        out += w * u(x + j * h * direction)
    return out / h


@dataclass
class CheckRow:
    oracle: str
    check: str
    max_residual: float
    tolerance: float
    points: int

    @property
    def passed(self):
        return self.max_residual <= self.tolerance


def _halton_box(n, count, lo=-1.0, hi=1.0):
    return lo + (hi - lo) * qmc.Halton(d=n, scramble=False).random(count + 1)[1:]


def strong_form_suite(points=10**6, tol=1e-10, margin=1e-3, flat=(1.0, 4.0), disk=(2.0, 0.5), modes=(1, 2)):
    """Strong-form, flux-continuity and gradient cross-checks for every oracle."""
    rows = []
    a, b = flat
    k, R = disk
    x = _halton_box(2, points)

    # flat interface
    keep = np.abs(x[:, 1]) > margin
    xs = x[keep]
    coef = lambda y: np.where(y[:, 1] > 0, b, a)  # noqa: E731
    flux = lambda y: coef(y)[:, None] * flat_interface(a, b, y)[1]  # noqa: E731
    rows.append(CheckRow("flat_interface", "strong_form", float(np.abs(divergence_of_flux(flux, xs)).max()), tol, xs.shape[0]))
    fd = fd_gradient(lambda y: flat_interface(a, b, y)[0], xs)
    rows.append(CheckRow("flat_interface", "gradient", float(np.abs(fd - flat_interface(a, b, xs)[1]).max()), tol, xs.shape[0]))
    xi = np.column_stack([x[: points // 10, 0], np.zeros(points // 10)])
    e2 = np.array([0.0, 1.0])
    below = -one_sided_derivative(lambda y: y[:, 1], xi, -e2)
    above = one_sided_derivative(lambda y: (a / b) * y[:, 1], xi, e2)
    rows.append(CheckRow("flat_interface", "flux_jump", float(np.abs(a * below - b * above).max()), tol, xi.shape[0]))

    # disk inclusion
    rr = np.sqrt(np.einsum("pk,pk->p", x, x))
    keep = (np.abs(rr - R) > margin) & (rr > margin)
    xs = x[keep]
    coef = lambda y: np.where(np.einsum("pk,pk->p", y, y) < R * R, k, 1.0)  # noqa: E731
    flux = lambda y: coef(y)[:, None] * disk_inclusion(k, R, y)[1]  # noqa: E731
    rows.append(CheckRow("disk_inclusion", "strong_form", float(np.abs(divergence_of_flux(flux, xs)).max()), tol, xs.shape[0]))
    fd = fd_gradient(lambda y: disk_inclusion(k, R, y)[0], xs)
    rows.append(CheckRow("disk_inclusion", "gradient", float(np.abs(fd - disk_inclusion(k, R, xs)[1]).max()), tol, xs.shape[0]))
    theta = 2 * math.pi * _halton_box(1, points // 10, 0.0, 1.0)[:, 0]
    nu = np.column_stack([np.cos(theta), np.sin(theta)])
    xi = R * nu
    inner = -one_sided_derivative(lambda y: _disk_inside(k, R, y)[0], xi, -nu)
    outer = one_sided_derivative(lambda y: _disk_outside(k, R, y)[0], xi, nu)
    rows.append(CheckRow("disk_inclusion", "flux_jump", float(np.abs(k * inner - outer).max()), tol, xi.shape[0]))
    trace = np.abs(_disk_inside(k, R, xi)[0] - _disk_outside(k, R, xi)[0]).max()
    rows.append(CheckRow("disk_inclusion", "trace_jump", float(trace), tol, xi.shape[0]))

    # eigenmode: d_t u - lap u = 0
    n = len(modes)
    xt = _halton_box(n + 1, points // 10, 0.0, 1.0)
    xe, te = 2 * xt[:, :n] - 1, xt[:, n]
    lap = divergence_of_flux(lambda y: eigenmode_decay(n, modes, y, te)[1], xe)
    ut = -eigenmode_rate(modes) * eigenmode_decay(n, modes, xe, te)[0]
    rows.append(CheckRow("eigenmode_decay", "strong_form", float(np.abs(ut - lap).max()), tol, xe.shape[0]))
    fd = fd_gradient(lambda y: eigenmode_decay(n, modes, y, te)[0], xe)
    rows.append(CheckRow("eigenmode_decay", "gradient", float(np.abs(fd - eigenmode_decay(n, modes, xe, te)[1]).max()), tol, xe.shape[0]))
    return rows
