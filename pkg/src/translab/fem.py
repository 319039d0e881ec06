"""Q1 finite elements on the uniform grid of ``[-1, 1]^n``.

Nodes are numbered in C order over the multi-index ``(i_1, ..., i_n)`` with
``x_k = -1 + i_k h``.  Vector unknowns are stored component-major: degree of
freedom ``c * num_nodes + node`` for component ``c``.  The coefficient is
sampled at the ``2^n`` Gauss points of every cell, so the interface need not
align with the grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DomainError, ParameterError
from .problem import TransmissionProblem, effective_tensor, verify_conditions

GAUSS_1D = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


@dataclass(frozen=True)
class Grid:
    n: int
    cells_per_side: int

    def __post_init__(self):
        N = self.cells_per_side
        if N < 1 or N & (N - 1):
            raise ParameterError("cells_per_side must be a power of two")
        if self.n < 1:
            raise ParameterError("n must be >= 1")

    @property
    def h(self):
        return 2.0 / self.cells_per_side

    @property
    def nodes_per_side(self):
        return self.cells_per_side + 1

    @property
    def num_nodes(self):
        return self.nodes_per_side**self.n

    @property
    def num_cells(self):
        return self.cells_per_side**self.n

    @property
    def node_shape(self):
        return (self.nodes_per_side,) * self.n

    @property
    def cell_shape(self):
        return (self.cells_per_side,) * self.n

    @cached_property
    def ticks(self):
        return -1.0 + self.h * np.arange(self.nodes_per_side)

    @cached_property
    def nodes(self):
        """Node coordinates, shape ``(num_nodes, n)``."""
        mesh = np.meshgrid(*([self.ticks] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @cached_property
    def cell_centers(self):
        c = self.ticks[:-1] + 0.5 * self.h
        mesh = np.meshgrid(*([c] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @cached_property
    def corner_offsets(self):
        """Local corner ``c`` of a cell sits at offset ``corner_offsets[c]`` (0/1 per axis)."""
        return np.array(list(itertools.product((0, 1), repeat=self.n)), dtype=np.int64)

    @cached_property
    def cell_nodes(self):
        """Global node of every local corner, shape ``(num_cells, 2^n)``."""
        idx = np.stack(np.meshgrid(*([np.arange(self.cells_per_side)] * self.n), indexing="ij"), axis=-1)
        idx = idx.reshape(-1, self.n)
        corners = idx[:, None, :] + self.corner_offsets[None, :, :]
        return np.ravel_multi_index(tuple(np.moveaxis(corners, -1, 0)), self.node_shape)

    @cached_property
    def boundary_mask(self):
        idx = np.indices(self.node_shape).reshape(self.n, -1)
        return np.any((idx == 0) | (idx == self.cells_per_side), axis=0)

    def locate(self, x):
        """Cell multi-index and local coordinates in ``[0, 1]^n`` of points ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if np.any(np.abs(x) > 1.0 + 1e-12):
            raise DomainError("point outside [-1, 1]^n")
        s = (x + 1.0) / self.h
        cell = np.clip(np.floor(s).astype(np.int64), 0, self.cells_per_side - 1)
        return cell, s - cell

    def cell_index(self, multi):
        return np.ravel_multi_index(tuple(np.asarray(multi).T), self.cell_shape)


# --------------------------------------------------------------------------
# reference element


def _basis_tables(n, points):
    """Values ``(Q, 2^n)`` and reference gradients ``(Q, 2^n, n)`` at local points."""
    corners = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    pts = np.atleast_2d(points)
    # per-axis factors b*xi + (1-b)(1-xi) and derivative 2b - 1
    fac = corners[None, :, :] * pts[:, None, :] + (1 - corners[None, :, :]) * (1 - pts[:, None, :])
    dfac = np.broadcast_to(2 * corners - 1, fac.shape)
    vals = fac.prod(axis=2)
    grads = np.empty(fac.shape)
    for k in range(n):
        others = np.delete(fac, k, axis=2).prod(axis=2) if n > 1 else np.ones(fac.shape[:2])
        grads[:, :, k] = dfac[:, :, k] * others
    return vals, grads


def gauss_rule(n, points_1d=GAUSS_1D, weights_1d=(0.5, 0.5)):
    pts = np.array(list(itertools.product(points_1d, repeat=n)))
    wts = np.array([np.prod(w) for w in itertools.product(weights_1d, repeat=n)])
    return pts, wts


def gauss_points(grid: Grid, cells=None):
    """Physical Gauss points ``(C, Q, n)`` and weights ``(Q,)`` (including ``h^n``)."""
    ref, w = gauss_rule(grid.n)
    origins = grid.nodes[grid.cell_nodes[:, 0]] if cells is None else grid.nodes[grid.cell_nodes[cells, 0]]
    return origins[:, None, :] + grid.h * ref[None, :, :], w * grid.h**grid.n


def element_stiffness(tensor_q, h, weights, n):
    """Element matrices ``(C, m*2^n, m*2^n)`` from tensor values ``(C, Q, m, n, m, n)``.

    Local ordering is component-major, matching the global layout.
    """
    ref, _ = gauss_rule(n)
    _, dphi = _basis_tables(n, ref)
    dphi = dphi / h
    # phi-index (i, alpha) contracts with the test gradient, (j, beta) with the trial gradient
    ke = np.einsum("q,cqiajb,qka,qlb->cikjl", weights, tensor_q, dphi, dphi, optimize=True)
    C, m, nc = ke.shape[0], ke.shape[1], ke.shape[2]
    return ke.reshape(C, m * nc, m * nc)


def element_mass(h, weights, n, m):
    ref, _ = gauss_rule(n)
    phi, _ = _basis_tables(n, ref)
    me = np.einsum("q,qk,ql->kl", weights, phi, phi)
    return np.kron(np.eye(m), me)


def _local_dofs(grid: Grid, m, cells=None):
    cn = grid.cell_nodes if cells is None else grid.cell_nodes[cells]
    return np.concatenate([cn + c * grid.num_nodes for c in range(m)], axis=1)


def scatter(grid: Grid, m, ke, cells=None):
    """Sum element matrices into a CSR matrix over all ``m * num_nodes`` dofs."""
    dofs = _local_dofs(grid, m, cells)
    k = dofs.shape[1]
    if ke.ndim == 2:
        ke = np.broadcast_to(ke, (dofs.shape[0], k, k))
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    size = m * grid.num_nodes
    return sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(size, size)).tocsr()


# --------------------------------------------------------------------------
# fields and systems


@dataclass(eq=False)
class DiscreteField:
    """Nodal values ``(m, num_nodes)`` of a Q1 function on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.shape[1] != self.grid.num_nodes:
            raise ParameterError("values do not match the grid node count")
        self.values = v

    @property
    def m(self):
        return self.values.shape[0]

    @classmethod
    def interpolate(cls, grid: Grid, fn):
        """Nodal interpolant of ``fn: (P, n) -> (P,) or (P, m)``."""
        v = np.asarray(fn(grid.nodes), dtype=float)
        return cls(grid, v.reshape(grid.num_nodes, -1).T.copy())

    def flat(self):
        return self.values.ravel()

    def nodal_array(self):
        return self.values.reshape((self.m,) + self.grid.node_shape)

    @cached_property
    def cell_gradients(self):
        """Gradient of the multilinear interpolant at every cell center, ``(C, m, n)``."""
        g = self.grid
        arr = self.nodal_array()
        out = np.empty((self.m, g.n) + g.cell_shape)
        for k in range(g.n):
            d = np.diff(arr, axis=k + 1) / g.h
            for j in range(g.n):
                if j != k:
                    d = 0.5 * (np.take(d, range(0, d.shape[j + 1] - 1), axis=j + 1)
                               + np.take(d, range(1, d.shape[j + 1]), axis=j + 1))
            out[:, k] = d
        return np.moveaxis(out.reshape(self.m, g.n, -1), -1, 0)

    @cached_property
    def cell_values(self):
        """Interpolant at cell centers (mean of the ``2^n`` corners), ``(C, m)``."""
        return self.values[:, self.grid.cell_nodes].mean(axis=2).T

    def gradient_at(self, cell):
        """``m x n`` gradient at the center of ``cell`` (flat index or multi-index)."""
        if np.ndim(cell) > 0:
            cell = int(self.grid.cell_index(np.atleast_2d(cell))[0])
        return self.cell_gradients[cell]

    def evaluate(self, x, with_gradient=False):
        """Multilinear interpolation at points ``(P, n)``; returns ``(P, m)`` [and ``(P, m, n)``]."""
        g = self.grid
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cell, loc = g.locate(x)
        base = np.ravel_multi_index(tuple(cell.T), g.node_shape)
        strides = np.array([g.nodes_per_side ** (g.n - 1 - k) for k in range(g.n)])
        corner_nodes = base[:, None] + g.corner_offsets @ strides
        vals = self.values[:, corner_nodes]  # (m, P, 2^n)
        off = g.corner_offsets[None, :, :]
        fac = off * loc[:, None, :] + (1 - off) * (1 - loc[:, None, :])
        u = np.einsum("mpc,pc->pm", vals, fac.prod(axis=2))
        if not with_gradient:
            return u
        grad = np.empty((x.shape[0], self.m, g.n))
        for k in range(g.n):
            w = np.delete(fac, k, axis=2).prod(axis=2) if g.n > 1 else np.ones(fac.shape[:2])
            grad[:, :, k] = np.einsum("mpc,pc->pm", vals, w * (2 * off[:, :, k] - 1)) / g.h
        return u, grad


def gradient_at(f: DiscreteField, cell):
    return f.gradient_at(cell)


@dataclass(eq=False)
class SparseSystem:
    """Free-node system ``matrix @ u_free = rhs`` with Dirichlet data eliminated.

    ``full_matrix`` and ``load`` keep the unreduced operator for residual and
    energy checks.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray
    full_matrix: Optional[sp.csr_matrix] = None
    load: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def free(self):
        return np.flatnonzero(~self.dirichlet_mask)

    def expand(self, u_free):
        u = self.dirichlet_values.copy()
        u[~self.dirichlet_mask] = u_free
        return u

    @classmethod
    def from_matrix(cls, matrix, rhs):
        """A system without Dirichlet nodes."""
        matrix = sp.csr_matrix(matrix)
        rhs = np.asarray(rhs, dtype=float)
        size = rhs.size
        return cls(matrix, rhs, np.zeros(size, dtype=bool), np.zeros(size), matrix, rhs)

    def export_triplets(self, path, full=False):
        """Write ``row col value`` lines (free-node matrix unless ``full``)."""
        coo = (self.full_matrix if full else self.matrix).tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {v:.17g}\n")


def reduce_system(full, load, mask, values):
    free = ~mask
    kf = full[free][:, free].tocsr()
    rhs = load[free] - full[free][:, mask] @ values[mask]
    return SparseSystem(kf, rhs, mask, values, full, load)


def stiffness_and_load(p: TransmissionProblem, grid: Grid, t=None):
    """Unreduced stiffness matrix and forcing load vector."""
    if grid.n != p.n:
        raise ParameterError("grid and problem dimensions differ")
    xq, w = gauss_points(grid)
    C, Q, n = xq.shape
    flat = xq.reshape(-1, n)
    tq = effective_tensor(p, flat, t).reshape(C, Q, p.m, n, p.m, n)
    ke = element_stiffness(tq, grid.h, w, n)
    K = scatter(grid, p.m, ke)
    load = np.zeros(p.m * grid.num_nodes)
    F = p.forcing_values(flat, t)
    if F is not None:
        ref, _ = gauss_rule(n)
        _, dphi = _basis_tables(n, ref)
        fe = np.einsum("q,cqia,qka->cik", w, F.reshape(C, Q, p.m, n), dphi / grid.h)
        dofs = _local_dofs(grid, p.m)
        np.add.at(load, dofs.ravel(), fe.reshape(C, -1).ravel())
    return K, load


def mass_matrix(grid: Grid, m=1):
    _, w = gauss_points(grid, cells=np.array([0]))
    return scatter(grid, m, element_mass(grid.h, w, grid.n, m))


def dirichlet_data(p: TransmissionProblem, grid: Grid, t=None):
    mask_nodes = grid.boundary_mask
    values = np.zeros((p.m, grid.num_nodes))
    values[:, mask_nodes] = p.boundary_values(grid.nodes[mask_nodes], t).T
    return np.tile(mask_nodes, p.m), values.ravel()


def assemble(p: TransmissionProblem, grid: Grid, verify=True, samples=256) -> SparseSystem:
    """Q1 Galerkin system of the transmission problem on ``grid``.

    The forcing enters as ``+ int F : grad phi`` (the weak form of
    ``div(a grad u) = div F``).  Raises :class:`~translab.errors.ConditionError`
    when ``verify`` and the sampled coefficient conditions fail.
    """
    if verify:
        verify_conditions(p, samples).raise_if_failed()
    K, load = stiffness_and_load(p, grid)
    mask, values = dirichlet_data(p, grid)
    system = reduce_system(K, load, mask, values)
    system.meta.update(n=grid.n, m=p.m, cells_per_side=grid.cells_per_side)
    return system


# --------------------------------------------------------------------------
# linear solver


@dataclass
class CGInfo:
    iterations: int
    residual: float
    converged: bool


def check_symmetric(matrix, rtol=1e-12):
    diff = matrix - matrix.T
    scale = abs(matrix).max() if matrix.nnz else 0.0
    return diff.nnz == 0 or abs(diff).max() <= rtol * max(scale, 1e-300)


def pcg(A, b, tol=1e-10, max_iter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients; returns ``(x, CGInfo)``."""
    size = b.size
    max_iter = 10 * size + 100 if max_iter is None else max_iter
    bnorm = np.linalg.norm(b)
    x = np.zeros(size) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(size), CGInfo(0, 0.0, True)
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise ParameterError("matrix has non-positive diagonal; not SPD")
    inv_diag = 1.0 / diag
    r = b - A @ x
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, CGInfo(0, res, True)
    z = inv_diag * r
    d = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ad = A @ d
        alpha = rz / (d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, CGInfo(it, res, True)
        z = inv_diag * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    raise ConvergenceError(f"CG did not converge in {max_iter} iterations (residual {res:.3e})",
                           partial=x, residual=res)


def solve_cg(s: SparseSystem, tol=1e-10, max_iter=None, x0=None, return_info=False):
    """Solve the free-node system and reinstate Dirichlet values.

    ``x0`` is a full nodal vector used as the initial guess on free nodes.
    """
    if not check_symmetric(s.matrix):
        raise ParameterError("system matrix is not symmetric; CG requires a symmetric system")
    guess = None if x0 is None else np.asarray(x0, dtype=float)[~s.dirichlet_mask]
    u_free, info = pcg(s.matrix, s.rhs, tol, max_iter, guess)
    u = s.expand(u_free)
    return (u, info) if return_info else u


def energy(K, u):
    return float(u @ (K @ u))


def l2_error(field: DiscreteField, exact, order=3):
    """``||u_h - u||_{L^2([-1,1]^n)}`` and ``||u||`` by tensor Gauss quadrature per cell."""
    g = field.grid
    x1, w1 = np.polynomial.legendre.leggauss(order)
    ref, w = gauss_rule(g.n, 0.5 * (x1 + 1), 0.5 * w1)
    err2 = norm2 = 0.0
    origins = g.nodes[g.cell_nodes[:, 0]]
    for q in range(ref.shape[0]):
        pts = origins + g.h * ref[q]
        uh = field.evaluate(pts)
        ue = np.asarray(exact(pts), dtype=float).reshape(pts.shape[0], -1)
        err2 += w[q] * np.sum((uh - ue) ** 2)
        norm2 += w[q] * np.sum(ue**2)
    scale = g.h**g.n
    return np.sqrt(err2 * scale), np.sqrt(norm2 * scale)
