"""Elliptic transmission solves and resolution studies."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .fem import DiscreteField, Grid, assemble, l2_error, solve_cg
from .problem import TransmissionProblem

log = logging.getLogger(__name__)


class RunLog:
    """Collects one structured record per solve; optionally appends JSON lines to ``path``."""

    def __init__(self, path=None):
        self.path = path
        self.records = []

    def write(self, record):
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def solve_transmission(p: TransmissionProblem, grid: Grid, tol=1e-10, max_iter=None,
                       run_log: Optional[RunLog] = None, verify=True) -> DiscreteField:
    """Q1 Galerkin solution with the problem's boundary data on ``[-1, 1]^n``."""
    if grid.cells_per_side < 16:
        raise ParameterError("grid resolution must be at least 16 cells per side")
    start = time.perf_counter()
    system = assemble(p, grid, verify=verify)
    u, info = solve_cg(system, tol=tol, max_iter=max_iter, return_info=True)
    wall = time.perf_counter() - start
    record = {
        "kind": "elliptic",
        "problem": p.fingerprint(),
        "label": p.label,
        "n": grid.n,
        "m": p.m,
        "cells_per_side": grid.cells_per_side,
        "residual": float(info.residual),
        "iterations": info.iterations,
        "wall_time": round(wall, 6),
    }
    log.info("solve %s", record)
    if run_log is not None:
        run_log.write(record)
    return DiscreteField(grid, u.reshape(p.m, grid.num_nodes))


@dataclass
class ConvergenceTable:
    h: list
    errors: list
    reference: str
    rates: list = field(default_factory=list)
    exact: bool = False
    relative: list = field(default_factory=list)

    @property
    def fitted_rate(self):
        """Least-squares slope of ``log e`` against ``log h``."""
        if self.exact:
            return math.inf
        return float(np.polyfit(np.log(self.h), np.log(self.errors), 1)[0])

    def rows(self):
        out = []
        for i, (h, e) in enumerate(zip(self.h, self.errors)):
            rate = "" if i == 0 else ("exact" if self.exact else self.rates[i - 1])
            out.append({"h": h, "l2_error": e, "relative_error": self.relative[i] if self.relative else "", "rate": rate})
        return out


def _restrict_error(coarse: DiscreteField, fine: DiscreteField):
    """L2 distance between a coarse solution and the finest one, on the fine grid's quadrature."""
    return l2_error(fine, lambda x: coarse.evaluate(x))


def refine_study(p: TransmissionProblem, resolutions, exact: Optional[Callable] = None,
                 exact_tol=1e-8, **solve_kw) -> ConvergenceTable:
    """Solve at each resolution and report L2 errors and rates ``log2(e_h / e_{h/2})``.

    ``exact`` maps points ``(P, n)`` to ``(P,)`` or ``(P, m)``; without it the
    finest solve is the reference.  Errors at solver tolerance are reported as
    exact.
    """
    resolutions = list(resolutions)
    if len(resolutions) < 2:
        raise ParameterError("need at least two resolutions")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ParameterError("resolutions must be strictly increasing")
    fields = [solve_transmission(p, Grid(p.n, N), **solve_kw) for N in resolutions]
    if exact is not None:
        pairs = [l2_error(f, exact) for f in fields]
        errors = [e for e, _ in pairs]
        relative = [e / nrm if nrm > 0 else math.nan for e, nrm in pairs]
        hs, reference = [f.grid.h for f in fields], "oracle"
    else:
        finest = fields[-1]
        pairs = [_restrict_error(f, finest) for f in fields[:-1]]
        errors = [e for e, _ in pairs]
        relative = [e / nrm if nrm > 0 else math.nan for e, nrm in pairs]
        hs, reference = [f.grid.h for f in fields[:-1]], "finest"
    exact_flag = max(errors) <= exact_tol
    rates = []
    for e0, e1 in zip(errors, errors[1:]):
        rates.append(math.inf if exact_flag or e1 == 0 else math.log2(e0 / e1))
    return ConvergenceTable(hs, errors, reference, rates, exact_flag, relative)
