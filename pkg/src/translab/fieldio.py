"""Field files and CSV reports.

A field file is a short text header followed by the nodal payload as
little-endian float64 in ``(level, component, node)`` order::

    translab-field
    version 1
    n 2
    m 1
    cells_per_side 64
    levels 1
    times 0
    dt 0
    config {...}
    end
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .fem import DiscreteField, Grid
from .parabolic import TimeField

MAGIC = "translab-field"
VERSION = 1
REPORT_HEADER = "# translab-report v1"

ELLIPTIC_COLUMNS = ["r", "grad_l_norm", "bmo_C", "density", "density_rhs", "slack", "case_tag"]
PARABOLIC_COLUMNS = ["r", "grad_l_norm", "bmo_C", "density", "density_rhs", "slack", "case_tag",
                     "t", "sup_t_residual", "log_bound_ratio"]


@dataclass
class FieldFile:
    grid: Grid
    times: np.ndarray
    values: np.ndarray
    dt: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def is_time_series(self):
        return self.times.size > 1

    def field(self, level=-1) -> DiscreteField:
        return DiscreteField(self.grid, self.values[level])

    def time_field(self) -> TimeField:
        return TimeField(self.grid, self.times, self.values, self.dt)


def write_field(path, f, config=None):
    """Write a :class:`DiscreteField` or :class:`TimeField`."""
    if isinstance(f, TimeField):
        times, values, dt = f.times, f.values, f.dt
    elif isinstance(f, DiscreteField):
        times, values, dt = np.zeros(1), f.values[None], 0.0
    else:
        raise ParameterError("expected a DiscreteField or TimeField")
    g = f.grid
    lines = [
        MAGIC,
        f"version {VERSION}",
        f"n {g.n}",
        f"m {values.shape[1]}",
        f"cells_per_side {g.cells_per_side}",
        f"levels {times.size}",
        "times " + " ".join(f"{t:.17g}" for t in times),
        f"dt {dt:.17g}",
        "config " + json.dumps(config or {}, sort_keys=True),
        "end",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_field(path) -> FieldFile:
    with open(path, "rb") as fh:
        head = {}
        first = fh.readline().decode("utf-8").strip()
        if first != MAGIC:
            raise ParameterError(f"{path}: not a field file")
        while True:
            line = fh.readline()
            if not line:
                raise ParameterError(f"{path}: truncated header")
            line = line.decode("utf-8").rstrip("\n")
            if line == "end":
                break
            key, _, rest = line.partition(" ")
            head[key] = rest
        payload = fh.read()
    try:
        if int(head["version"]) != VERSION:
            raise ParameterError(f"{path}: unsupported version {head['version']}")
        n, m, N, levels = (int(head[k]) for k in ("n", "m", "cells_per_side", "levels"))
        times = np.array([float(v) for v in head["times"].split()])
        dt = float(head.get("dt", 0.0))
        config = json.loads(head.get("config", "{}"))
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"{path}: malformed header ({exc})") from exc
    grid = Grid(n, N)
    expected = levels * m * grid.num_nodes * 8
    if len(payload) != expected or times.size != levels:
        raise ParameterError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(levels, m, grid.num_nodes).astype(float)
    return FieldFile(grid, times, values, dt, config)


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def write_gradients(path, f: DiscreteField):
    """Cell-center gradients: ``x_1..x_n, d{a}u{i}`` columns."""
    g = f.grid
    grads = f.cell_gradients
    cols = [f"x{k + 1}" for k in range(g.n)]
    cols += [f"d{a + 1}u{i + 1}" for i in range(f.m) for a in range(g.n)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        flat = grads.reshape(grads.shape[0], -1)
        for c, row in zip(g.cell_centers, flat):
            fh.write(",".join(_fmt(v) for v in np.concatenate([c, row])) + "\n")


def report_rows(reports, parabolic=False):
    for rep in reports:
        for k, r in enumerate(rep.scales):
            row = [*rep.center, r, rep.grad_norm[k], rep.bmo[k], rep.density[k], rep.density_rhs[k],
                   rep.slack[k], rep.case_tag]
            if parabolic:
                row += [rep.time, rep.sup_t_residual[k], rep.log_bound_ratio[k]]
            yield row


def write_report(path, reports, n, parabolic=False):
    """Single-writer CSV emission in the order given."""
    cols = [f"z{k + 1}" for k in range(n)] + (PARABOLIC_COLUMNS if parabolic else ELLIPTIC_COLUMNS)
    count = 0
    with open(path, "w", newline="") as fh:
        fh.write(REPORT_HEADER + "\n")
        fh.write(",".join(cols) + "\n")
        for row in report_rows(reports, parabolic):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
            count += 1
    return count


def read_report(path):
    """``(columns, rows)`` of a report CSV; numeric cells parsed as float."""
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != REPORT_HEADER:
            raise ParameterError(f"{path}: missing report header")
        cols = fh.readline().rstrip("\n").split(",")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            cells = line.rstrip("\n").split(",")
            rows.append({c: (v if c == "case_tag" else float(v)) for c, v in zip(cols, cells)})
    return cols, rows
