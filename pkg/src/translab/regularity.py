"""Dyadic regularity analysis of discrete fields.

Ball integrals use the cell-center value and gradient of the Q1 field,
weighted by the fraction of each cell's ``8^n`` midpoint subsamples that lie
in the ball.  All constants of the underlying estimates are reported, never
assumed: every report records the smallest constant consistent with the data.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GeometryError, ParameterError, ResolutionError
from .fem import DiscreteField, Grid, element_stiffness, gauss_rule, scatter, solve_cg, reduce_system
from .modulus import Modulus
from .parabolic import TimeField, sample_spacetime
from .problem import TransmissionProblem, identity_block, parabolic_rescaled_density, rescaled_density

SUBSAMPLES = 8
MIN_CELLS = 4
FROZEN_MIN_CELLS = 16


# --------------------------------------------------------------------------
# ball quadrature


def ball_weights(grid: Grid, z, r, sub=SUBSAMPLES):
    """Cells meeting ``B_r(z)`` and the in-ball fraction of each; ``(cells, weights)``."""
    z = np.asarray(z, dtype=float)
    n, h, N = grid.n, grid.h, grid.cells_per_side
    lo = np.clip(np.floor((z - r + 1.0) / h).astype(int), 0, N - 1)
    hi = np.clip(np.floor((z + r + 1.0) / h).astype(int), 0, N - 1)
    ranges = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    multi = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, n)
    origins = -1.0 + h * multi
    ticks = (np.arange(sub) + 0.5) / sub
    offs = np.stack(np.meshgrid(*([ticks] * n), indexing="ij"), axis=-1).reshape(-1, n) * h
    frac = np.empty(origins.shape[0])
    chunk = max(1, 2_000_000 // offs.shape[0])
    for s in range(0, origins.shape[0], chunk):
        d = origins[s:s + chunk, None, :] + offs[None, :, :] - z
        frac[s:s + chunk] = (np.einsum("csk,csk->cs", d, d) < r * r).mean(axis=1)
    keep = frac > 0
    return grid.cell_index(multi[keep]), frac[keep]


def _check_ball(grid, z, r, min_cells, container=1.0):
    z = np.asarray(z, dtype=float)
    if z.size != grid.n:
        raise ParameterError("center dimension does not match the grid")
    if not r > 0 or np.linalg.norm(z) + r > container + 1e-12:
        raise GeometryError(f"B_r(z) with z={z.tolist()}, r={r} is not contained in B_{container}")
    if r < min_cells * grid.h * (1 - 1e-12):
        raise ResolutionError(f"radius {r} is below {min_cells} cells (h={grid.h})")
    return z


def l2_ball_norm(u: DiscreteField, z=None, r=1.0):
    z = np.zeros(u.grid.n) if z is None else np.asarray(z, dtype=float)
    cells, w = ball_weights(u.grid, z, r)
    vals = u.cell_values[cells]
    return math.sqrt(float(np.sum(w[:, None] * vals**2)) * u.grid.h**u.grid.n)


def cells_inside(grid: Grid, D, t=None):
    """Cells whose ``2^n`` corners all lie in ``D`` and in the open unit ball."""
    corners = grid.nodes
    ok = D.contains(corners, None if t is None else np.full(corners.shape[0], t))
    ok &= np.einsum("pk,pk->p", corners, corners) < 1.0
    return ok[grid.cell_nodes].all(axis=1)


# --------------------------------------------------------------------------
# affine fits


@dataclass
class AffineFit:
    center: np.ndarray
    radius: float
    value: np.ndarray
    gradient: np.ndarray
    residual: float

    @property
    def gradient_norm(self):
        return float(np.linalg.norm(self.gradient))

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.value[None, :] + (x - self.center) @ self.gradient.T


def affine_fit(u: DiscreteField, z, r, min_cells=MIN_CELLS) -> AffineFit:
    """Affine map with gradient the ball average of ``grad u`` and value the ball average of ``u``.

    The average of ``u`` sits at the quadrature centroid of the ball, so
    ``l(z) = mean(u) - grad l . (centroid - z)``; affine fields are reproduced
    exactly.  ``residual`` is ``r^{-n} int_{B_r(z)} |grad u - grad l|^2``.
    """
    g = u.grid
    z = _check_ball(g, z, r, min_cells)
    cells, w = ball_weights(g, z, r)
    grads = u.cell_gradients[cells]
    total = w.sum()
    G = np.einsum("c,cij->ij", w, grads) / total
    centroid = w @ g.cell_centers[cells] / total
    value = w @ u.cell_values[cells] / total - G @ (centroid - z)
    dev = grads - G
    residual = float(np.einsum("c,cij,cij->", w, dev, dev)) * g.h**g.n / r**g.n
    return AffineFit(z, r, value, G, residual)


def affine_fit_analytic(grad_fn, z, r, resolution=64, value_fn=None) -> AffineFit:
    """Same fit for an analytic field: midpoint samples over the bounding box of ``B_r(z)``.

    ``grad_fn`` maps points ``(P, n)`` to ``(P, m, n)`` (or ``(P, n)`` when scalar).
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    ticks = -1.0 + 2.0 * (np.arange(resolution) + 0.5) / resolution
    ref = np.stack(np.meshgrid(*([ticks] * n), indexing="ij"), axis=-1).reshape(-1, n)
    ref = ref[np.einsum("pk,pk->p", ref, ref) < 1.0]
    pts = z + r * ref
    grads = np.asarray(grad_fn(pts), dtype=float)
    if grads.ndim == 2:
        grads = grads[:, None, :]
    G = grads.mean(axis=0)
    cell_vol = (2.0 * r / resolution) ** n
    residual = float(np.sum((grads - G) ** 2)) * cell_vol / r**n
    value = np.zeros(grads.shape[1])
    if value_fn is not None:
        value = np.asarray(value_fn(pts), dtype=float).reshape(pts.shape[0], -1).mean(axis=0)
    return AffineFit(z, r, value, G, residual)


# --------------------------------------------------------------------------
# dyadic reports


@dataclass
class DyadicReport:
    center: np.ndarray
    scales: np.ndarray
    grad_norm: np.ndarray
    bmo: np.ndarray
    density: np.ndarray = None
    density_half: np.ndarray = None
    density_rhs: np.ndarray = None
    slack: np.ndarray = None
    hypothesis_met: np.ndarray = None
    M: float = math.nan
    case_tag: str = "undetermined"
    gradients: list = field(default_factory=list)
    # parabolic extras
    time: Optional[float] = None
    sup_t_residual: np.ndarray = None
    log_bound_ratio: np.ndarray = None

    @property
    def c_required(self):
        """Smallest constant consistent with the density decay at scales meeting the hypothesis."""
        if self.slack is None or self.hypothesis_met is None or not self.hypothesis_met.any():
            return None
        return float(max(0.0, np.max(self.slack[self.hypothesis_met])))

    def verdict(self, c):
        req = self.c_required
        return True if req is None else c >= req

    def drift_violations(self):
        """Consecutive scales where ``|grad l_r - grad l_{r/2}|^2 > 2^{n+1} (C_r + C_{r/2})``."""
        n = self.center.size
        bad = []
        for k in range(len(self.gradients) - 1):
            g0, g1 = self.gradients[k], self.gradients[k + 1]
            if g0 is None or g1 is None:
                continue
            lhs = float(np.sum((g0 - g1) ** 2))
            if lhs > 2 ** (n + 1) * (self.bmo[k] + self.bmo[k + 1]) + 1e-12:
                bad.append(k)
        return bad


def dyadic_scales(r0, count):
    return r0 * 2.0 ** -np.arange(count)


def classify(grad_norms, M):
    g = np.asarray(grad_norms, dtype=float)
    g = g[np.isfinite(g)]
    if g.size < 3:
        return "undetermined"
    return "Case1" if g.min() < 2 * M else "Case2"


def _fits(u, z, scales, min_cells):
    fits = []
    for r in scales:
        try:
            fits.append(affine_fit(u, z, r, min_cells))
        except ResolutionError:
            fits.append(None)
    return fits


def _report_from_fits(z, scales, fits, M=math.nan):
    grad = np.array([f.gradient_norm if f else math.nan for f in fits])
    bmo = np.array([f.residual if f else math.nan for f in fits])
    return DyadicReport(np.asarray(z, dtype=float), np.asarray(scales, dtype=float), grad, bmo, M=M,
                        case_tag=classify(grad, M) if np.isfinite(M) else "undetermined",
                        gradients=[f.gradient if f else None for f in fits])


def bmo_profile(u: DiscreteField, z, r0, k_max, min_cells=MIN_CELLS) -> DyadicReport:
    """``C_{r_k} = r_k^{-n} int_{B_{r_k}(z)} |grad u - (grad u)_{z,r_k}|^2`` for ``r_k = r0 2^{-k}``, ``k = 0..k_max``."""
    scales = dyadic_scales(r0, k_max + 1)
    if scales[-1] < min_cells * u.grid.h * (1 - 1e-12):
        raise ResolutionError(f"finest scale {scales[-1]} is below {min_cells} cells")
    return _report_from_fits(z, scales, _fits(u, z, scales, min_cells))


def _density_columns(report, D, omega, n, decay_exp, factor, density_fn):
    d = np.array([density_fn(r) for r in report.scales])
    d_half = np.array([density_fn(r / 2) for r in report.scales])
    rhs = d / factor
    w = np.array([omega(min(r, 1.0)) for r in report.scales])
    report.density, report.density_half, report.density_rhs = d, d_half, rhs
    report.slack = (d_half - rhs) / w**decay_exp
    report.hypothesis_met = np.isfinite(report.grad_norm) & (report.grad_norm >= report.M)


def _modulus_of(p, modulus):
    if modulus is not None:
        return modulus
    return p.A.modulus if p.A.modulus is not None else Modulus.power(1.0)


def density_decay_report(p: TransmissionProblem, u: DiscreteField, z, scales, M, c_fit=None,
                         resolution=512, min_cells=MIN_CELLS, modulus=None) -> DyadicReport:
    """Per-scale fit, BMO and density columns for the density decay ``|D_{z,r/2}|`` vs ``|D_{z,r}|/2^n``.

    ``slack = (|D_{z,r/2}| - |D_{z,r}|/2^n) / omega(r)^{3n}``; the decay holds
    for every ``c >= report.c_required``.  ``omega`` defaults to ``A``'s
    modulus (``r`` for constant tensors without one).
    """
    scales = np.asarray(scales, dtype=float)
    if M <= 0:
        raise ParameterError("M must be positive")
    if np.any(np.abs(scales[1:] / scales[:-1] - 0.5) > 1e-12):
        raise ParameterError("scales must be dyadic")
    z = np.asarray(z, dtype=float)
    n = z.size
    fits = _fits(u, z, scales, min_cells) if u is not None else [None] * scales.size
    report = _report_from_fits(z, scales, fits, M)
    omega = _modulus_of(p, modulus)
    _density_columns(report, p.D, omega, n, 3 * n, 2.0**n,
                     lambda r: rescaled_density(p.D, z, r, resolution))
    if c_fit is not None:
        report.c_fit = c_fit
    return report


def dichotomy_classify(u: DiscreteField, z, M, r0, k_max, min_cells=MIN_CELLS):
    """``Case1`` if some resolvable ``|grad l_{z,r_k}| < 2M``, ``Case2`` if all are ``>= 2M``."""
    scales = dyadic_scales(r0, k_max + 1)
    fits = _fits(u, z, scales, min_cells)
    return classify([f.gradient_norm if f else math.nan for f in fits], M)


# --------------------------------------------------------------------------
# Lipschitz ratio


@dataclass
class LipschitzRatio:
    sup_grad: float
    norm_L2: float
    norm_lipD: float
    ratio: float

    @property
    def norm_sum(self):
        return self.norm_L2 + self.norm_lipD


def lipschitz_ratio(p: TransmissionProblem, u: DiscreteField) -> LipschitzRatio:
    """``max_{B_1/2} |grad u| / (||u||_{L2(B_1)} + max_{D cap B_1} |grad u|)`` on cell centers."""
    g = u.grid
    norms = np.linalg.norm(u.cell_gradients, axis=(1, 2))
    centers = g.cell_centers
    half = np.einsum("pk,pk->p", centers, centers) < 0.25
    sup_grad = float(norms[half].max()) if half.any() else 0.0
    norm_l2 = l2_ball_norm(u)
    inside = cells_inside(g, p.D)
    lip_d = float(norms[inside].max()) if inside.any() else 0.0
    denom = norm_l2 + lip_d
    ratio = sup_grad / denom if denom > 0 else 0.0
    return LipschitzRatio(sup_grad, norm_l2, lip_d, ratio)


def default_threshold(p, u, factor=10.0):
    return factor * lipschitz_ratio(p, u).norm_sum


# --------------------------------------------------------------------------
# frozen-coefficient comparison


@dataclass
class FrozenComparison:
    v: DiscreteField
    active_cells: np.ndarray
    sup_grad_inner: float
    energy_ratio: float
    energy_v: float
    energy_w: float
    fit: AffineFit


def frozen_comparison(p: TransmissionProblem, u: DiscreteField, z, r, min_cells=FROZEN_MIN_CELLS,
                      tol=1e-12) -> FrozenComparison:
    """Solve ``div(A(z) grad v) = 0`` on the discrete ball with ``v = u - l_{z,r}`` on its boundary.

    The discrete ball is the union of cells with every corner in the closed
    ball.  ``energy_ratio = ||grad v||^2 / ||grad (u - l)||^2`` over it.
    """
    g = u.grid
    z = _check_ball(g, z, r, min_cells)
    fit = affine_fit(u, z, r, min_cells=0)
    m, n = u.m, g.n
    d = g.nodes - z
    node_in = np.einsum("pk,pk->p", d, d) <= r * r * (1 + 1e-12)
    active = node_in[g.cell_nodes].all(axis=1)
    cells = np.flatnonzero(active)
    if cells.size == 0:
        raise ResolutionError("no grid cell fits inside the ball")
    # a node is interior when every incident cell is active
    incident_inactive = np.zeros(g.num_nodes, dtype=bool)
    incident_inactive[g.cell_nodes[~active].ravel()] = True
    touched = np.zeros(g.num_nodes, dtype=bool)
    touched[g.cell_nodes[cells].ravel()] = True
    interior = touched & ~incident_inactive & ~g.boundary_mask

    ref, wq = gauss_rule(n)
    weights = wq * g.h**n
    Az = p.A(z[None, :])[0]
    ke = element_stiffness(np.broadcast_to(Az, (1, ref.shape[0]) + Az.shape), g.h, weights, n)[0]
    ki = element_stiffness(np.broadcast_to(identity_block(n, m), (1, ref.shape[0], m, n, m, n)), g.h, weights, n)[0]
    K = scatter(g, m, ke, cells)
    KI = scatter(g, m, ki, cells)

    w = (u.values - fit(g.nodes).T).ravel()
    mask = ~np.tile(interior, m)
    values = np.where(np.tile(touched, m), w, 0.0)
    system = reduce_system(K, np.zeros(m * g.num_nodes), mask, values)
    v = solve_cg(system, tol=tol) if system.rhs.size else values
    v = np.where(np.tile(touched, m), v, 0.0)
    vf = DiscreteField(g, v.reshape(m, -1))

    inner = active & (np.einsum("pk,pk->p", g.cell_centers - z, g.cell_centers - z) < (2 * r / 3) ** 2)
    sup_inner = float(np.linalg.norm(vf.cell_gradients[inner], axis=(1, 2)).max()) if inner.any() else 0.0
    e_v = float(v @ (KI @ v))
    e_w = float(w @ (KI @ w))
    e_u = float(u.flat() @ (KI @ u.flat()))
    # u - l constant up to roundoff: nothing to compare
    ratio = e_v / e_w if e_w > 1e-24 * max(e_u, 1.0) else 0.0
    return FrozenComparison(vf, active, sup_inner, ratio, e_v, e_w, fit)


# --------------------------------------------------------------------------
# parabolic harness


@dataclass
class ParabolicFit:
    center: np.ndarray
    time: float
    radius: float
    anchor: np.ndarray
    gradient: np.ndarray
    sup_t_residual: float
    log_bound_ratio: float
    levels: np.ndarray
    oscillation: float = math.nan

    @property
    def gradient_norm(self):
        return float(np.linalg.norm(self.gradient))


def parabolic_affine_fit(u: TimeField, Z, r, min_cells=MIN_CELLS) -> ParabolicFit:
    """Time-independent linear fit on ``Q_r(Z)``.

    The gradient is the mean over stored levels in ``[s - r^2, s]`` of the
    ball-averaged spatial gradient; the residual is the largest over those
    levels of ``r^{-n-2} int_{B_r(z)} |u(., t) - u(Z) - l|^2``.  ``oscillation``
    is the level average of ``r^{-n} int_{B_r(z)} |grad u - grad l|^2``.
    """
    Z = np.asarray(Z, dtype=float)
    z, s = Z[:-1], float(Z[-1])
    g = u.grid
    _check_ball(g, z, r, min_cells)
    if u.dt > 0 and r * r < 4 * u.dt * (1 - 1e-12):
        raise ResolutionError(f"r^2 = {r * r} is below 4 dt = {4 * u.dt}")
    if s - r * r < u.times[0] - 1e-12 or s > u.times[-1] + 1e-12:
        raise GeometryError("cylinder Q_r(Z) leaves the computed time range")
    levels = u.levels_in(s - r * r, s)
    if levels.size == 0:
        raise ResolutionError("no stored time level inside the cylinder")
    cells, w = ball_weights(g, z, r)
    total = w.sum()
    cell_grads = [u.level(k).cell_gradients[cells] for k in levels]
    grads = np.array([np.einsum("c,cij->ij", w, cg) / total for cg in cell_grads])
    G = grads.mean(axis=0)
    osc = np.mean([np.einsum("c,cij,cij->", w, cg - G, cg - G) for cg in cell_grads]) * g.h**g.n / r**g.n
    anchor = sample_spacetime(u, z[None, :], s)[0][0]
    xc = g.cell_centers[cells] - z
    lin = xc @ G.T
    res = 0.0
    for k in levels:
        dev = u.level(k).cell_values[cells] - anchor - lin
        res = max(res, float(np.einsum("c,cm,cm->", w, dev, dev)))
    res *= g.h**g.n / r ** (g.n + 2)
    logr = abs(math.log(r))
    ratio = float(np.linalg.norm(G)) / logr if logr > 0 else math.inf
    return ParabolicFit(z, s, r, anchor, G, res, ratio, u.times[levels], float(osc))


def parabolic_density_decay(p: TransmissionProblem, u: Optional[TimeField], Z, scales, M, c_fit=None,
                            resolution=256, time_resolution=64, min_cells=MIN_CELLS, modulus=None) -> DyadicReport:
    """Parabolic analogue of :func:`density_decay_report`: factor ``2^{n+2}``, exponent ``3n+4``."""
    Z = np.asarray(Z, dtype=float)
    z, s = Z[:-1], float(Z[-1])
    n = z.size
    scales = np.asarray(scales, dtype=float)
    if M <= 0:
        raise ParameterError("M must be positive")
    fits = []
    for r in scales:
        try:
            fits.append(parabolic_affine_fit(u, Z, r, min_cells) if u is not None else None)
        except (ResolutionError, GeometryError):
            fits.append(None)
    grad = np.array([f.gradient_norm if f else math.nan for f in fits])
    res = np.array([f.sup_t_residual if f else math.nan for f in fits])
    lbr = np.array([f.log_bound_ratio if f else math.nan for f in fits])
    osc = np.array([f.oscillation if f else math.nan for f in fits])
    report = DyadicReport(z, scales, grad, osc, M=M,
                          case_tag=classify(grad, M), gradients=[f.gradient if f else None for f in fits],
                          time=s, sup_t_residual=res, log_bound_ratio=lbr)
    omega = _modulus_of(p, modulus)
    _density_columns(report, p.D, omega, n, 3 * n + 4, 2.0 ** (n + 2),
                     lambda r: parabolic_rescaled_density(p.D, Z, r, resolution, time_resolution))
    if c_fit is not None:
        report.c_fit = c_fit
    return report


@dataclass
class HolderReport:
    ratios: np.ndarray
    exponent: Optional[float]
    status: str
    gaps: np.ndarray = None
    increments: np.ndarray = None

    @property
    def max_ratio(self):
        return float(self.ratios.max()) if self.ratios.size else 0.0


def parabolic_distance(X, Y):
    X, Y = np.atleast_2d(X), np.atleast_2d(Y)
    dx = X[:, :-1] - Y[:, :-1]
    return np.sqrt(np.einsum("pk,pk->p", dx, dx) + np.abs(X[:, -1] - Y[:, -1]))


def holder_time_exponent(u: TimeField, pairs, probe=None, gaps=None, static_tol=1e-13) -> HolderReport:
    """Parabolic Lipschitz ratios over ``pairs`` and the fitted time exponent at ``probe = (x, s)``.

    The exponent is the least-squares slope of ``log|u(x,s) - u(x,s-gap)|``
    against ``log gap``; ``status`` is ``"static"`` when every increment vanishes.
    """
    pairs = [(np.asarray(X, dtype=float), np.asarray(Y, dtype=float)) for X, Y in pairs]
    if not pairs:
        raise ParameterError("empty pair set")
    X = np.array([a for a, _ in pairs])
    Y = np.array([b for _, b in pairs])
    n = u.grid.n
    if X.shape[1] != n + 1 or Y.shape[1] != n + 1:
        raise ParameterError("pairs must be (x, t) points of dimension n + 1")
    sep = 2 * max(u.grid.h, math.sqrt(u.dt))
    dp = parabolic_distance(X, Y)
    if np.any(dp < sep * (1 - 1e-12)):
        raise ParameterError(f"pairs closer than 2 max(h, sqrt(dt)) = {sep:g}")
    for P in (X, Y):
        if np.any(np.linalg.norm(P[:, :n], axis=1) >= 0.5) or np.any(P[:, n] <= -0.25) or np.any(P[:, n] > 0):
            raise ParameterError("pairs must lie in Q_1/2")
    ux = sample_spacetime(u, X[:, :n], X[:, n])[0]
    uy = sample_spacetime(u, Y[:, :n], Y[:, n])[0]
    ratios = np.linalg.norm(ux - uy, axis=1) / dp

    if probe is None:
        return HolderReport(ratios, None, "not-fitted")
    x, s = np.asarray(probe[0], dtype=float), float(probe[1])
    if gaps is None:
        lo = max(4 * u.dt, 1e-12)
        ks = [k for k in range(1, 40) if lo <= 2.0**-k <= s - u.times[0]]
        gaps = 2.0 ** -np.array(ks, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if gaps.size < 2:
        raise ParameterError("need at least two time gaps")
    base = sample_spacetime(u, x[None, :], s)[0][0]
    incr = np.array([np.linalg.norm(base - sample_spacetime(u, x[None, :], s - gp)[0][0]) for gp in gaps])
    if np.all(incr <= static_tol * (1 + np.linalg.norm(base))):
        return HolderReport(ratios, None, "static", gaps, incr)
    ok = incr > 0
    slope = float(np.polyfit(np.log(gaps[ok]), np.log(incr[ok]), 1)[0])
    return HolderReport(ratios, slope, "fitted", gaps, incr)


# --------------------------------------------------------------------------
# batch analysis


def thread_count():
    try:
        cap = int(os.environ.get("TRANSLAB_THREADS", "0"))
    except ValueError:
        cap = 0
    avail = os.cpu_count() or 1
    return max(1, min(cap, avail) if cap > 0 else avail)


def admissible_centers(centers, r0, container=1.0):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    return centers[np.linalg.norm(centers, axis=1) + r0 <= container + 1e-12]


def analyze(p: TransmissionProblem, u: DiscreteField, centers, scales, M=None, resolution=256,
            min_cells=MIN_CELLS, threads=None, modulus=None):
    """Full elliptic report at every admissible center, sorted by center then scale."""
    scales = np.asarray(scales, dtype=float)
    M = default_threshold(p, u) if M is None else M
    cs = admissible_centers(centers, scales[0])
    order = np.lexsort(cs.T[::-1])
    cs = cs[order]
    work = lambda z: density_decay_report(p, u, z, scales, M, resolution=resolution,  # noqa: E731
                                         min_cells=min_cells, modulus=modulus)
    with ThreadPoolExecutor(max_workers=threads or thread_count()) as pool:
        return list(pool.map(work, cs))


def analyze_parabolic(p: TransmissionProblem, u: TimeField, centers, times, scales, M=None,
                      resolution=128, time_resolution=32, min_cells=MIN_CELLS, threads=None, modulus=None):
    scales = np.asarray(scales, dtype=float)
    if M is None:
        from .parabolic import normalization_summands
        l2, lip = normalization_summands(u, p.D)
        M = 10.0 * (math.sqrt(l2) + lip)
    cs = admissible_centers(centers, scales[0])
    Zs = [np.append(z, s) for z in cs for s in times if s - scales[0] ** 2 >= -1.0 - 1e-12]
    Zs.sort(key=lambda Z: tuple(Z))
    work = lambda Z: parabolic_density_decay(p, u, Z, scales, M, resolution=resolution,  # noqa: E731
                                             time_resolution=time_resolution, min_cells=min_cells, modulus=modulus)
    with ThreadPoolExecutor(max_workers=threads or thread_count()) as pool:
        return list(pool.map(work, Zs))
