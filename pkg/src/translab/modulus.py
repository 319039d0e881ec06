"""Moduli of continuity and the Dini calculus used by the regularity harness.

A :class:`Modulus` is an immutable, vectorised, non-decreasing function on
``(0, 1]``.  Integrals with a singular endpoint at ``r = 0`` are evaluated in
the logarithmic variable ``s = -log r`` decade by decade; the per-decade
increments double as the data for the convergence verdict.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import DomainError, ParameterError, QuadratureError

LN10 = math.log(10.0)

# decay factor per decade required of the tail increments
DECAY_FACTOR = 1.2
# number of trailing decade ratios inspected by the verdict
VERDICT_WINDOW = 3
REL_TOL = 1e-8
ABS_TOL = 1e-14


@dataclass(frozen=True)
class Modulus:
    """A modulus of continuity.

    Use the constructors :meth:`power`, :meth:`log_power` and
    :meth:`tabulated` rather than instantiating directly.
    """

    kind: str
    params: tuple = ()
    breakpoints: tuple = field(default=(), repr=False)

    @classmethod
    def power(cls, alpha, scale=1.0):
        """``scale * r**alpha``."""
        if not alpha > 0 or not scale > 0:
            raise ParameterError("power modulus needs alpha > 0 and scale > 0")
        return cls("power", (float(alpha), float(scale)))

    @classmethod
    def log_power(cls, p, scale=1.0):
        """``scale * log(e/r)**(-p)``."""
        if not p > 0 or not scale > 0:
            raise ParameterError("log_power modulus needs p > 0 and scale > 0")
        return cls("log_power", (float(p), float(scale)))

    @classmethod
    def tabulated(cls, r, values):
        r = np.asarray(r, dtype=float)
        values = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != values.shape or r.size < 1:
            raise ParameterError("breakpoints must be two equal-length 1-d sequences")
        if np.any(r <= 0) or np.any(r > 1):
            raise ParameterError("breakpoint radii must lie in (0, 1]")
        if np.any(np.diff(r) <= 0):
            raise ParameterError("breakpoint radii must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise ParameterError("tabulated modulus must be non-decreasing")
        if np.any(values <= 0):
            raise ParameterError("tabulated modulus must be positive")
        return cls("tabulated", (), (tuple(r.tolist()), tuple(values.tolist())))

    @classmethod
    def from_csv(cls, path):
        """Read a two-column ``r, omega`` CSV (header lines and ``#`` comments skipped)."""
        rs, ws = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    r, w = float(row[0]), float(row[1])
                except ValueError:
                    continue
                rs.append(r)
                ws.append(w)
        return cls.tabulated(rs, ws)

    @property
    def smallest_breakpoint(self):
        return self.breakpoints[0][0] if self.kind == "tabulated" else 0.0

    def _raw(self, r):
        if self.kind == "power":
            alpha, scale = self.params
            return scale * r**alpha
        if self.kind == "log_power":
            p, scale = self.params
            return scale * (1.0 - np.log(r)) ** (-p)
        if self.kind == "tabulated":
            xs, ys = self.breakpoints
            return np.interp(r, xs, ys)
        raise ParameterError(f"unknown modulus kind {self.kind!r}")

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(~(r_arr > 0)) or np.any(r_arr > 1):
            raise DomainError("modulus evaluated outside (0, 1]")
        out = self._raw(r_arr)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        if self.kind == "power":
            return {"kind": "power", "alpha": self.params[0], "scale": self.params[1]}
        if self.kind == "log_power":
            return {"kind": "log_power", "p": self.params[0], "scale": self.params[1]}
        return {"kind": "tabulated", "r": list(self.breakpoints[0]), "omega": list(self.breakpoints[1])}


def evaluate(m: Modulus, r):
    return m(r)


class IntegralResult(NamedTuple):
    value: float
    is_convergent: bool
    increments: np.ndarray


def _quad(fn, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(fn, a, b, epsabs=ABS_TOL, epsrel=tol, limit=200)
        except integrate.IntegrationWarning as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                partial, _ = integrate.quad(fn, a, b, epsabs=ABS_TOL, epsrel=tol, limit=200)
            raise QuadratureError(f"quadrature on [{a:g}, {b:g}] did not converge: {exc}", partial)
    return value


def _decade_edges(r_min):
    """Edges in ``s = -log r`` at every full decade, ending exactly at ``r_min``."""
    if not 0 < r_min < 1:
        raise DomainError("r_min must lie in (0, 1)")
    s_max = -math.log(r_min)
    edges = [k * LN10 for k in range(int(s_max / LN10 + 1e-12) + 1)]
    if s_max - edges[-1] > 1e-12:
        edges.append(s_max)
    return np.array(edges)


def decay_verdict(increments, full=None, factor=DECAY_FACTOR, window=VERDICT_WINDOW):
    """Geometric-tail test on per-decade increments.

    ``full`` marks which increments span a whole decade; a trailing partial
    decade is excluded from the ratios.  Convergent when each of the last
    ``window`` ratios ``I_k / I_{k+1}`` is at least ``factor``.
    """
    inc = np.asarray(increments, dtype=float)
    if full is not None:
        inc = inc[np.asarray(full, dtype=bool)]
    if inc.size < 2:
        raise ParameterError("need at least two full decades for a convergence verdict")
    prev, nxt = inc[:-1][-window:], inc[1:][-window:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(nxt > 0, prev / nxt, np.inf)
    return bool(np.all(ratios >= factor))


def _log_integral(integrand_s, r_min, tol, floor):
    """Integrate ``integrand_s`` over ``s in [0, -log r_min]`` decade by decade."""
    edges = _decade_edges(r_min)
    inc = np.array([_quad(integrand_s, a, b, tol) for a, b in zip(edges[:-1], edges[1:])])
    full = np.isclose(np.diff(edges), LN10)
    # tabulated moduli are only data-defined down to their smallest breakpoint
    full &= np.exp(-edges[1:]) >= floor * (1 - 1e-12)
    return float(inc.sum()), decay_verdict(inc, full), inc


def dini_integral(m: Modulus, r_min=1e-20, tol=REL_TOL):
    """``int_{r_min}^1 omega(r)/r dr`` with a convergence verdict.

    Returns ``(value, is_convergent, increments)`` where ``increments`` are the
    per-decade contributions used by the verdict.
    """
    return IntegralResult(*_log_integral(lambda s: m(math.exp(-s)), r_min, tol, m.smallest_breakpoint))


def log_decay_profile(m: Modulus, radii):
    """``omega(r) * log(1/r)`` at each radius; tends to 0 for Dini moduli."""
    r = np.asarray(radii, dtype=float)
    if np.any(~(r > 0)) or np.any(r >= 1):
        raise DomainError("radii must lie in (0, 1)")
    return m(r) * np.log(1.0 / r)


def psi(m: Modulus, rho, n, tol=REL_TOL):
    """The auxiliary modulus ``rho**(n/2) + sqrt(rho**n int_rho^1 omega^{3n}/tau^{n+1}) + omega(rho)``."""
    if not 0 < rho <= 0.5:
        raise DomainError("rho must lie in (0, 1/2]")
    if n < 1:
        raise ParameterError("dimension n must be >= 1")
    # in s = -log tau the integrand is omega^{3n} e^{n s}; factor out rho^n = e^{-n s_rho}
    s_rho = -math.log(rho)
    edges = np.unique(np.append(np.arange(0.0, s_rho, LN10), s_rho))
    inner = sum(
        _quad(lambda s: m(math.exp(-s)) ** (3 * n) * math.exp(n * (s - s_rho)), a, b, tol)
        for a, b in zip(edges[:-1], edges[1:])
    )
    return rho ** (n / 2) + math.sqrt(inner) + m(rho)


def _a2_inner(m, alpha, s, tol):
    """``r^alpha int_r^1 omega^{2 alpha}(rho)/rho^{alpha+1} d rho`` at ``r = e^{-s}``."""
    if s == 0.0:
        return 0.0
    fn = lambda u: m(math.exp(-u)) ** (2 * alpha) * math.exp(-alpha * (s - u))  # noqa: E731
    split = max(0.0, s - 4.0 / alpha)
    val = _quad(fn, split, s, tol)
    if split > 0:
        val += _quad(fn, 0.0, split, tol)
    return val


def lemma_a2_check(m: Modulus, alpha, r_min=1e-20, tol=REL_TOL):
    """``int_{r_min}^1 r^{alpha/2-1} sqrt(int_r^1 omega^{2alpha}/rho^{alpha+1}) dr`` with verdict.

    In the log variable the outer integrand is ``sqrt`` of a bounded inner
    integral, which keeps the nested quadrature well scaled.
    """
    if not alpha > 1:
        raise ParameterError("alpha must exceed 1")
    integrand = lambda s: math.sqrt(_a2_inner(m, alpha, s, tol))  # noqa: E731
    return IntegralResult(*_log_integral(integrand, r_min, tol, m.smallest_breakpoint))


def check_rescaling(m: Modulus, parabolic=False, radii=None):
    """Whether ``m`` satisfies the normalisation the decay estimates assume.

    Elliptic: ``omega(1) <= 1/2``.  Parabolic: ``omega(r)|log r| <= 1/2`` on
    ``(0, 3/4]`` (checked on a dyadic grid).  Returns ``(ok, worst_value)``.
    """
    if not parabolic:
        w = m(1.0)
        return w <= 0.5, w
    r = np.asarray(radii if radii is not None else 0.75 * 2.0 ** -np.arange(0, 60), dtype=float)
    vals = m(r) * np.abs(np.log(r))
    return bool(np.all(vals <= 0.5)), float(vals.max())
