"""Theta-scheme time stepping for the parabolic transmission problem on ``[-1, 1]^n x (t0, t_end)``.

Per step::

    (M + theta dt K(t+)) u+ = (M - (1 - theta) dt K(t)) u + dt (theta f(t+) + (1 - theta) f(t))

with consistent Q1 mass ``M`` and Dirichlet data applied at ``t+``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError
from .fem import DiscreteField, Grid, dirichlet_data, mass_matrix, reduce_system, solve_cg, stiffness_and_load
from .problem import TransmissionProblem, verify_conditions

SCHEMES = {"backward-euler": 1.0, "crank-nicolson": 0.5}


@dataclass(eq=False)
class TimeField:
    """Snapshots ``values[k]`` (shape ``(m, num_nodes)``) at increasing ``times[k]``."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    dt: float = 0.0
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 2:
            self.values = self.values[:, None, :]
        if self.values.shape[0] != self.times.size or self.values.shape[2] != self.grid.num_nodes:
            raise ParameterError("values must have shape (levels, m, num_nodes)")
        if np.any(np.diff(self.times) <= 0):
            raise ParameterError("times must be strictly increasing")

    @property
    def m(self):
        return self.values.shape[1]

    def level(self, k) -> DiscreteField:
        return DiscreteField(self.grid, self.values[k])

    def levels_in(self, lo, hi, tol=1e-12):
        """Indices of stored levels with ``lo <= t <= hi`` (inclusive up to ``tol``)."""
        return np.flatnonzero((self.times >= lo - tol) & (self.times <= hi + tol))

    @classmethod
    def from_function(cls, grid: Grid, fn, times):
        """Sample ``fn(x, t) -> (P,) or (P, m)`` at the nodes for each time."""
        times = np.asarray(times, dtype=float)
        vals = []
        for t in times:
            v = np.asarray(fn(grid.nodes, np.full(grid.num_nodes, t)), dtype=float)
            vals.append(v.reshape(grid.num_nodes, -1).T)
        dt = float(np.diff(times).min()) if times.size > 1 else 0.0
        return cls(grid, times, np.array(vals), dt)


def sample_spacetime(f: TimeField, x, t):
    """Value ``(P, m)`` and spatial gradient ``(P, m, n)`` at ``(x, t)``.

    Multilinear in space, linear in time between stored levels.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1])
    lo, hi = f.times[0], f.times[-1]
    if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
        raise DomainError(f"time outside the computed range [{lo}, {hi}]")
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise DomainError("point outside [-1, 1]^n")
    k = np.clip(np.searchsorted(f.times, t, side="right") - 1, 0, max(f.times.size - 2, 0))
    u = np.empty((x.shape[0], f.m))
    g = np.empty((x.shape[0], f.m, f.grid.n))
    for kk in np.unique(k):
        sel = k == kk
        u0, g0 = f.level(kk).evaluate(x[sel], with_gradient=True)
        if f.times.size == 1:
            u[sel], g[sel] = u0, g0
            continue
        u1, g1 = f.level(kk + 1).evaluate(x[sel], with_gradient=True)
        w = (t[sel] - f.times[kk]) / (f.times[kk + 1] - f.times[kk])
        u[sel] = (1 - w)[:, None] * u0 + w[:, None] * u1
        g[sel] = (1 - w)[:, None, None] * g0 + w[:, None, None] * g1
    return u, g


def solve_parabolic(p: TransmissionProblem, grid: Grid, dt=None, scheme="backward-euler",
                    initial: Union[Callable, np.ndarray, DiscreteField, None] = None,
                    t0=-1.0, t_end=0.0, n_steps=None, snapshot_every=1, tol=1e-10,
                    max_iter=None, verify=True, run_log=None, on_step=None) -> TimeField:
    """March from ``t0`` with ``n_steps`` steps (default: until ``t_end``).

    ``p.boundary`` and ``p.forcing`` take ``(x, t)``.  ``initial`` is a nodal
    vector, a :class:`DiscreteField`, or a callable ``x -> (P,) or (P, m)``.
    ``on_step(k, t, u_full, K)`` is called after every step.
    """
    if scheme not in SCHEMES:
        raise ParameterError(f"scheme must be one of {sorted(SCHEMES)}")
    theta = SCHEMES[scheme]
    dt = grid.h**2 if dt is None else float(dt)
    if not 0 < dt < 1:
        raise ParameterError("dt must lie in (0, 1)")
    if n_steps is None:
        n_steps = int(round((t_end - t0) / dt))
    if n_steps < 1:
        raise ParameterError("need at least one time step")
    if verify:
        verify_conditions(p).raise_if_failed()

    m, size = p.m, p.m * grid.num_nodes
    if initial is None:
        u = np.zeros(size)
    elif isinstance(initial, DiscreteField):
        u = initial.flat().copy()
    elif callable(initial):
        u = np.asarray(initial(grid.nodes), dtype=float).reshape(grid.num_nodes, -1).T.ravel().copy()
    else:
        u = np.asarray(initial, dtype=float).ravel().copy()
    if u.size != size:
        raise ParameterError("initial data does not match the grid")

    M = mass_matrix(grid, m)
    static = not p.time_dependent
    K_cur, f_cur = stiffness_and_load(p, grid, t0)
    lhs_cache = None

    times, snaps = [t0], [u.reshape(m, -1).copy()]
    total_iters, worst = 0, 0.0
    start = time.perf_counter()
    for k in range(1, n_steps + 1):
        t_next = t0 + k * dt
        if static:
            K_next, f_next = K_cur, f_cur
        else:
            K_next, f_next = stiffness_and_load(p, grid, t_next)
        if lhs_cache is None or not static:
            lhs_cache = (M + (theta * dt) * K_next).tocsr()
        rhs = M @ u + dt * (theta * f_next + (1 - theta) * f_cur)
        if theta < 1:
            rhs -= ((1 - theta) * dt) * (K_cur @ u)
        mask, values = dirichlet_data(p, grid, t_next)
        system = reduce_system(lhs_cache, rhs, mask, values)
        try:
            u, info = solve_cg(system, tol=tol, max_iter=max_iter, x0=u, return_info=True)
        except ConvergenceError as exc:
            raise ConvergenceError(f"time step {k} (t={t_next:.6g}): {exc}", exc.partial, exc.residual, step=k) from exc
        total_iters += info.iterations
        worst = max(worst, info.residual)
        if on_step is not None:
            on_step(k, t_next, u, K_next)
        if k % snapshot_every == 0 or k == n_steps:
            times.append(t_next)
            snaps.append(u.reshape(m, -1).copy())
        K_cur, f_cur = K_next, f_next
    stats = {
        "kind": "parabolic", "scheme": scheme, "dt": dt, "steps": n_steps,
        "iterations": total_iters, "residual": float(worst),
        "wall_time": round(time.perf_counter() - start, 6),
        "cells_per_side": grid.cells_per_side, "n": grid.n, "m": m,
        "problem": p.fingerprint(t=t0), "label": p.label,
    }
    if run_log is not None:
        run_log.write(stats)
    return TimeField(grid, np.array(times), np.array(snaps), dt * snapshot_every, stats)


def normalization_summands(f: TimeField, D, ball_weights=None):
    """``(sup_t int_{B_1} |u|^2, max |grad u| on cells fully inside D cap B_1)`` over stored levels."""
    from .regularity import cells_inside, l2_ball_norm

    sup_l2 = 0.0
    lip = 0.0
    for k, t in enumerate(f.times):
        fld = f.level(k)
        sup_l2 = max(sup_l2, l2_ball_norm(fld) ** 2)
        inside = cells_inside(fld.grid, D, t=t)
        if inside.any():
            lip = max(lip, float(np.linalg.norm(fld.cell_gradients[inside], axis=(1, 2)).max()))
    return sup_l2, lip
