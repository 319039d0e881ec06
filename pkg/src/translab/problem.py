"""Transmission problem instances: coefficient tensors, the phase set ``D``,
and the rescaled-density geometry.

Tensors are stored in the layout ``a[..., i, alpha, j, beta]`` so that the
bilinear form reads ``a[i, alpha, j, beta] * d_beta u^j * d_alpha phi^i``.
Every callable in this module is vectorised over a leading point axis.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import ConditionError, GeometryError, ParameterError
from .modulus import Modulus


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _points(x, n=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if n is not None and x.shape[-1] != n:
        raise ParameterError(f"expected points of dimension {n}, got {x.shape[-1]}")
    return x


def identity_block(n, m, scale=1.0):
    """``scale * delta_ij delta_alpha_beta`` as an ``(m, n, m, n)`` array."""
    return scale * np.einsum("ij,ab->iajb", np.eye(m), np.eye(n))


# --------------------------------------------------------------------------
# coefficient tensors


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """A coefficient field ``x -> a(x)`` with declared structural constants.

    ``fn`` maps points ``(P, n)`` (and times ``(P,)`` when ``time_dependent``)
    to an array ``(P, m, n, m, n)``.
    """

    n: int
    m: int
    fn: Callable
    lam: float = 0.5
    dini_bound: float = 1.0
    modulus: Optional[Modulus] = None
    time_dependent: bool = False
    constant: bool = False
    label: str = "custom"

    def __call__(self, x, t=None):
        x = _points(x, self.n)
        if self.time_dependent:
            tt = np.broadcast_to(np.asarray(0.0 if t is None else t, dtype=float), x.shape[:1])
            out = self.fn(x, tt)
        else:
            out = self.fn(x)
        out = np.asarray(out, dtype=float)
        if out.shape == (self.m, self.n, self.m, self.n):
            out = np.broadcast_to(out, (x.shape[0],) + out.shape)
        return out

    def as_matrix(self, x, t=None):
        """Tensor values reshaped to ``(P, mn, mn)`` matrices over ``(i alpha), (j beta)``."""
        mn = self.m * self.n
        return self(x, t).reshape(-1, mn, mn)

    @classmethod
    def constant_tensor(cls, tensor, lam=0.5, label="constant", **kw):
        """Constant field from an ``(m, n, m, n)`` array."""
        tensor = np.array(tensor, dtype=float)
        if tensor.ndim != 4:
            raise ParameterError("constant tensor must have shape (m, n, m, n)")
        tensor.setflags(write=False)
        return cls(n=tensor.shape[1], m=tensor.shape[0], fn=lambda x: tensor, lam=lam, constant=True, label=label, **kw)

    @classmethod
    def from_matrix(cls, matrix, n, m, lam=0.5, **kw):
        """Constant field from its ``mn x mn`` matrix over ``(i alpha), (j beta)``."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (m * n, m * n):
            raise ParameterError(f"matrix must be {m * n} x {m * n}")
        return cls.constant_tensor(matrix.reshape(m, n, m, n), lam=lam, **kw)

    @classmethod
    def isotropic(cls, n, m, value=1.0, lam=None, **kw):
        """Constant ``value`` times the identity block."""
        if lam is None:
            lam = min(value, 1.0 / value) if value > 0 else 0.5
        return cls.constant_tensor(identity_block(n, m, value), lam=lam, label=f"isotropic({value})", **kw)

    @classmethod
    def scalar_identity(cls, n, m, scalar, lam=0.5, label="scalar_identity", **kw):
        """``scalar(x) * I`` for a vectorised scalar field ``scalar: (P, n) -> (P,)``."""
        block = identity_block(n, m)

        def fn(x):
            return np.asarray(scalar(x), dtype=float)[:, None, None, None, None] * block

        return cls(n=n, m=m, fn=fn, lam=lam, label=label, **kw)

    @classmethod
    def affine(cls, base, slopes, lam=0.5, label="affine", **kw):
        """``base + sum_k x_k slopes[k]`` with ``base`` of shape ``(m, n, m, n)``."""
        base = np.array(base, dtype=float)
        slopes = np.array(slopes, dtype=float)
        n = base.shape[1]
        if slopes.shape != (n,) + base.shape:
            raise ParameterError("slopes must have shape (n, m, n, m, n)")

        def fn(x):
            return base + np.einsum("pk,kiajb->piajb", x, slopes)

        return cls(n=n, m=base.shape[0], fn=fn, lam=lam, label=label, **kw)

    def is_symmetric(self, x, t=None, tol=0.0):
        mats = self.as_matrix(x, t)
        return bool(np.all(np.abs(mats - mats.transpose(0, 2, 1)) <= tol))


# --------------------------------------------------------------------------
# phase sets


class Shape:
    """Base class of indicator sets.  ``contains`` returns a boolean array."""

    time_dependent = False

    def contains(self, x, t=None):
        raise NotImplementedError

    def __call__(self, x, t=None):
        return self.contains(_points(x), t)

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Empty(Shape):
    def contains(self, x, t=None):
        return np.zeros(_points(x).shape[0], dtype=bool)

    def to_dict(self):
        return {"shape": "empty"}


@dataclass(frozen=True)
class HalfSpace(Shape):
    """``{x : x . normal > offset}``."""

    normal: tuple
    offset: float = 0.0

    def contains(self, x, t=None):
        nu = np.asarray(self.normal, dtype=float)
        return _points(x) @ (nu / np.linalg.norm(nu)) > self.offset

    def to_dict(self):
        return {"shape": "half_space", "normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class Ball(Shape):
    center: tuple
    radius: float

    def contains(self, x, t=None):
        d = _points(x) - np.asarray(self.center, dtype=float)
        return np.einsum("pk,pk->p", d, d) < self.radius**2

    def to_dict(self):
        return {"shape": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Cusp(Shape):
    """``{x : x_axis - apex_axis < -|x_perp - apex_perp|**(1/gamma)}`` intersected with ``B_1``.

    ``gamma = 1/2`` gives the region under ``-|x_1|**2``; ``gamma > 1`` an
    inward cusp of zero density at the apex; ``gamma = 1`` a Lipschitz corner.
    """

    gamma: float
    apex: tuple = (0.0, 0.0)
    axis: int = -1

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError("cusp exponent must be positive")

    def contains(self, x, t=None):
        x = _points(x)
        d = x - np.asarray(self.apex, dtype=float)
        ax = self.axis % x.shape[1]
        perp = np.delete(d, ax, axis=1)
        rho = np.sqrt(np.einsum("pk,pk->p", perp, perp))
        inside_ball = np.einsum("pk,pk->p", x, x) < 1.0
        return (d[:, ax] < -(rho ** (1.0 / self.gamma))) & inside_ball

    def to_dict(self):
        return {"shape": "cusp", "gamma": self.gamma, "apex": list(self.apex), "axis": self.axis}


@dataclass(frozen=True)
class Complement(Shape):
    shape: Shape

    @property
    def time_dependent(self):
        return self.shape.time_dependent

    def contains(self, x, t=None):
        return ~self.shape.contains(x, t)

    def to_dict(self):
        return {"shape": "complement", "of": self.shape.to_dict()}


@dataclass(frozen=True)
class Union(Shape):
    shapes: tuple

    @property
    def time_dependent(self):
        return any(s.time_dependent for s in self.shapes)

    def contains(self, x, t=None):
        x = _points(x)
        out = np.zeros(x.shape[0], dtype=bool)
        for s in self.shapes:
            out |= s.contains(x, t)
        return out

    def to_dict(self):
        return {"shape": "union", "of": [s.to_dict() for s in self.shapes]}


@dataclass(frozen=True)
class Moving(Shape):
    """Spatial shape translated with constant ``velocity``: ``x - velocity * t`` in ``shape``."""

    shape: Shape
    velocity: tuple
    time_dependent = True

    def contains(self, x, t=None):
        x = _points(x)
        tt = np.broadcast_to(np.asarray(0.0 if t is None else t, dtype=float), x.shape[:1])
        return self.shape.contains(x - tt[:, None] * np.asarray(self.velocity, dtype=float), None)

    def to_dict(self):
        return {"shape": "moving", "of": self.shape.to_dict(), "velocity": list(self.velocity)}


@dataclass(frozen=True)
class TimeSlab(Shape):
    """``{(x, t) : t < t_max}``."""

    t_max: float
    time_dependent = True

    def contains(self, x, t=None):
        x = _points(x)
        tt = np.broadcast_to(np.asarray(0.0 if t is None else t, dtype=float), x.shape[:1])
        return tt < self.t_max

    def to_dict(self):
        return {"shape": "time_slab", "t_max": self.t_max}


def shape_from_dict(d):
    kind = d.get("shape")
    if kind == "empty":
        return Empty()
    if kind == "half_space":
        return HalfSpace(tuple(float(v) for v in d["normal"]), float(d.get("offset", 0.0)))
    if kind == "ball":
        return Ball(tuple(float(v) for v in d["center"]), float(d["radius"]))
    if kind == "cusp":
        return Cusp(float(d["gamma"]), tuple(float(v) for v in d.get("apex", (0.0, 0.0))), int(d.get("axis", -1)))
    if kind == "complement":
        return Complement(shape_from_dict(d["of"]))
    if kind == "union":
        return Union(tuple(shape_from_dict(s) for s in d["of"]))
    if kind == "moving":
        return Moving(shape_from_dict(d["of"]), tuple(float(v) for v in d["velocity"]))
    if kind == "time_slab":
        return TimeSlab(float(d["t_max"]))
    raise ParameterError(f"unknown shape {kind!r}")


# --------------------------------------------------------------------------
# problems


@dataclass(frozen=True, eq=False)
class TransmissionProblem:
    """``div((A + (B - A) chi_D) grad u) = div F`` with Dirichlet data ``boundary``.

    ``boundary`` and ``forcing`` take points ``(P, n)`` (plus times ``(P,)``
    for parabolic problems) and return ``(P, m)`` and ``(P, m, n)`` arrays.
    """

    A: CoefficientTensor
    B: CoefficientTensor
    D: Shape
    boundary: Optional[Callable] = None
    forcing: Optional[Callable] = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.A.n, self.A.m) != (self.B.n, self.B.m):
            raise ParameterError("A and B must share (n, m)")

    @property
    def n(self):
        return self.A.n

    @property
    def m(self):
        return self.A.m

    @property
    def time_dependent(self):
        return self.A.time_dependent or self.B.time_dependent or self.D.time_dependent

    def boundary_values(self, x, t=None):
        x = _points(x, self.n)
        if self.boundary is None:
            return np.zeros((x.shape[0], self.m))
        out = self.boundary(x) if t is None else self.boundary(x, np.broadcast_to(float(t), x.shape[:1]))
        return np.asarray(out, dtype=float).reshape(x.shape[0], self.m)

    def forcing_values(self, x, t=None):
        x = _points(x, self.n)
        if self.forcing is None:
            return None
        out = self.forcing(x) if t is None else self.forcing(x, np.broadcast_to(float(t), x.shape[:1]))
        return np.asarray(out, dtype=float).reshape(x.shape[0], self.m, self.n)

    def scaled(self, s):
        """Same problem with boundary data and forcing multiplied by ``s``."""
        g, f = self.boundary, self.forcing
        return TransmissionProblem(
            self.A, self.B, self.D,
            None if g is None else (lambda *a: s * np.asarray(g(*a))),
            None if f is None else (lambda *a: s * np.asarray(f(*a))),
            label=self.label, meta=dict(self.meta),
        )

    def fingerprint(self, samples=64, t=None):
        """Deterministic hash of the coefficient fields and ``D`` on fixed sample points."""
        pts = 2.0 * qmc.Halton(d=self.n, scramble=False).random(samples + 1)[1:] - 1.0
        if t is None and self.time_dependent:
            t = 0.0
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.A(pts, t)).tobytes())
        h.update(np.ascontiguousarray(self.B(pts, t)).tobytes())
        h.update(self.D.contains(pts, t).tobytes())
        h.update(self.boundary_values(pts, t).tobytes())
        return h.hexdigest()[:16]


def effective_tensor(p: TransmissionProblem, x, t=None):
    """``A(x)`` off ``D`` and ``B(x)`` on ``D``; shape ``(P, m, n, m, n)``."""
    x = _points(x, p.n)
    inside = p.D.contains(x, t)
    a = p.A(x, t)
    if not inside.any():
        return np.array(a)
    b = p.B(x, t)
    return np.where(inside[:, None, None, None, None], b, a)


# --------------------------------------------------------------------------
# condition verification


@dataclass
class ConditionsReport:
    lambda_observed: float
    bound_observed: float
    dini_seminorm_observed: float
    passed: bool
    failures: list = field(default_factory=list)

    def raise_if_failed(self):
        if not self.passed:
            raise ConditionError("; ".join(f["message"] for f in self.failures), self)
        return self


def _sample_points(n, count, time_dependent):
    """Fixed Halton points in ``B_1`` (times in ``(-1, 0)`` when requested)."""
    dim = n + (1 if time_dependent else 0)
    raw = qmc.Halton(d=dim, scramble=False).random(4 * count + 1)[1:]
    x = 2.0 * raw[:, :n] - 1.0
    keep = np.einsum("pk,pk->p", x, x) < 1.0
    x = x[keep][:count]
    t = (raw[keep][:count, n] - 1.0) if time_dependent else None
    return x, t


def _check_tensor(name, tensor, x, t, failures, check_dini, pairs):
    mats = tensor.as_matrix(x, t)
    sym = 0.5 * (mats + mats.transpose(0, 2, 1))
    evals, evecs = np.linalg.eigh(sym)
    low = evals[:, 0]
    k = int(np.argmin(low))
    lam_obs = float(low[k])
    if lam_obs < tensor.lam * (1 - 1e-12):
        failures.append({
            "message": f"{name}: ellipticity {lam_obs:.6g} < declared lambda {tensor.lam:.6g}",
            "condition": "ellipticity", "tensor": name,
            "x": x[k].tolist(), "t": None if t is None else float(t[k]),
            "xi": evecs[k, :, 0].reshape(tensor.m, tensor.n).tolist(),
        })
    entries = np.abs(mats).reshape(mats.shape[0], -1).max(axis=1)
    k = int(np.argmax(entries))
    bound_obs = float(entries[k])
    if bound_obs > (1.0 / tensor.lam) * (1 + 1e-12):
        failures.append({
            "message": f"{name}: entry bound {bound_obs:.6g} > 1/lambda {1.0 / tensor.lam:.6g}",
            "condition": "boundedness", "tensor": name,
            "x": x[k].tolist(), "t": None if t is None else float(t[k]),
        })
    dini_obs = 0.0
    if check_dini and tensor.modulus is not None and not tensor.constant:
        xa, ta, xb, tb = pairs
        if ta is None:
            dist = np.linalg.norm(xa - xb, axis=1)
        else:
            dist = np.sqrt(np.einsum("pk,pk->p", xa - xb, xa - xb) + np.abs(ta - tb))
        ok = (dist > 0) & (dist <= 1.0)
        da = np.abs(tensor.as_matrix(xa[ok], None if ta is None else ta[ok])
                    - tensor.as_matrix(xb[ok], None if tb is None else tb[ok]))
        quot = da.reshape(da.shape[0], -1).max(axis=1) / tensor.modulus(dist[ok])
        if quot.size:
            k = int(np.argmax(quot))
            dini_obs = float(quot[k])
            if dini_obs > tensor.dini_bound * (1 + 1e-12):
                failures.append({
                    "message": f"{name}: Dini quotient {dini_obs:.6g} > declared bound {tensor.dini_bound:.6g}",
                    "condition": "dini", "tensor": name,
                    "x": xa[ok][k].tolist(), "y": xb[ok][k].tolist(),
                })
    return lam_obs, bound_obs, dini_obs


def verify_conditions(p: TransmissionProblem, samples=256) -> ConditionsReport:
    """Sample ellipticity, boundedness and the Dini quotient of ``A`` (``B``: first two only).

    Ellipticity is checked in the strong Legendre form: the smallest
    eigenvalue of the symmetrised ``mn x mn`` matrix at each sample point.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    td = p.time_dependent
    x, t = _sample_points(p.n, samples, td)
    xa, ta = _sample_points(p.n, 2 * samples, td)
    half = xa.shape[0] // 2
    pairs = (xa[:half], None if ta is None else ta[:half], xa[half:2 * half], None if ta is None else ta[half:2 * half])
    failures = []
    la, ba, da = _check_tensor("A", p.A, x, t, failures, True, pairs)
    lb, bb, _ = _check_tensor("B", p.B, x, t, failures, False, pairs)
    return ConditionsReport(min(la, lb), max(ba, bb), da, not failures, failures)


# --------------------------------------------------------------------------
# rescaled densities

DEFAULT_RESOLUTION = 512


def _midpoints(resolution, lo=-1.0, hi=1.0):
    h = (hi - lo) / resolution
    return lo + h * (np.arange(resolution) + 0.5), h


def rescaled_density(D: Shape, z, r, resolution=DEFAULT_RESOLUTION, within=1.0, t=None):
    """``|D_{z,r}| = r^{-n} |D cap B_r(z)|`` by midpoint quadrature on ``[-1, 1]^n``.

    ``within < 1`` restricts the count to ``|x| < within``, i.e. returns
    ``|D_{z,r} cap B_within|`` on the same sample points.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    if resolution < 32:
        raise ParameterError("resolution must be >= 32")
    if not r > 0 or np.any(np.abs(z) + r > 1.0 + 1e-12):
        raise GeometryError(f"B_r(z) with z={z.tolist()}, r={r} is not inside [-1, 1]^{n}")
    ticks, h = _midpoints(resolution)
    tail = np.stack(np.meshgrid(*([ticks] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 else np.zeros((1, 0))
    tail_sq = np.einsum("pk,pk->p", tail, tail)
    count = 0
    for x0 in ticks:
        inball = x0 * x0 + tail_sq < within * within
        if not inball.any():
            continue
        pts = np.column_stack([np.full(int(inball.sum()), x0), tail[inball]])
        count += int(np.count_nonzero(D.contains(r * pts + z, t)))
    return count * h**n


def parabolic_rescaled_density(D: Shape, Z, r, resolution=256, time_resolution=64, within=1.0):
    """``|D_{Z,r}|`` for ``Q_r(Z) = B_r(z) x (s - r^2, s)`` with parabolic scaling ``(r x, r^2 t)``.

    ``within < 1`` restricts to the cylinder ``Q_within`` of the unit cylinder.
    """
    Z = np.asarray(Z, dtype=float)
    z, s = Z[:-1], float(Z[-1])
    n = z.size
    if resolution < 32:
        raise ParameterError("resolution must be >= 32")
    if not r > 0 or np.linalg.norm(z) + r > 1.0 + 1e-12 or s > 1e-12 or s - r * r < -1.0 - 1e-12:
        raise GeometryError(f"Q_r(Z) with Z={Z.tolist()}, r={r} is not inside Q_1")
    ticks, h = _midpoints(resolution)
    grid = np.stack(np.meshgrid(*([ticks] * n), indexing="ij"), axis=-1).reshape(-1, n)
    grid = grid[np.einsum("pk,pk->p", grid, grid) < within * within]
    t_lo = -within * within
    tticks, ht = _midpoints(time_resolution, t_lo, 0.0)
    xs = r * grid + z
    count = 0
    for tk in tticks:
        count += int(np.count_nonzero(D.contains(xs, np.full(xs.shape[0], r * r * tk + s))))
    return count * h**n * ht
