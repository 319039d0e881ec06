"""YAML run configuration.

Validation errors carry the line of the offending entry.  A complete
annotated example lives in ``demos/configs/annotated.yaml``.
"""

from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass

import numpy as np
import yaml

from . import oracle
from .errors import ParameterError
from .modulus import Modulus, check_rescaling
from .problem import CoefficientTensor, TransmissionProblem, shape_from_dict

DEFAULTS = {
    "problem": {
        "label": "",
        "n": 2,
        "m": 1,
        "A": {"kind": "isotropic", "value": 1.0},
        "B": {"kind": "isotropic", "value": 1.0},
        "D": {"shape": "empty"},
        "boundary": {"kind": "zero"},
        "forcing": None,
        "modulus": None,
    },
    "grid": {"cells_per_side": 64},
    "solver": {"tol": 1e-10, "max_iter": None, "verify": True},
    "time": {
        "scheme": "backward-euler",
        "dt": None,
        "t0": -1.0,
        "t_end": 0.0,
        "snapshot_every": 1,
        "initial": None,
    },
    "analysis": {
        "centers": "grid4",
        "scales": "0.25:4",
        "M": None,
        "min_cells": 4,
        "resolution": 256,
        "time_resolution": 32,
        "times": None,
        "modulus_policy": "warn",
    },
    "sweep": {"resolutions": [16, 32, 64]},
    "moduli": [],
    "output": {"field": "out.fld", "log": "run.jsonl", "gradients": None, "report": "report.csv"},
}

POLICIES = ("warn", "reject", "rescale")


class ConfigError(ParameterError):
    """Malformed configuration; ``line`` is 1-based or ``None``."""

    def __init__(self, message, line=None, source="<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def _line_map(node, path=(), out=None):
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_map(v, path + (k.value,), out)
            out[path + (k.value,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _merge(defaults, given):
    if isinstance(defaults, dict) and isinstance(given, dict):
        out = copy.deepcopy(defaults)
        for k, v in given.items():
            out[k] = _merge(defaults.get(k), v) if k in defaults else v
        return out
    return copy.deepcopy(given)


@dataclass
class Config:
    data: dict
    lines: dict
    source: str = "<config>"

    def line(self, *path):
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def error(self, message, *path):
        return ConfigError(message, self.line(*path), self.source)

    def __getitem__(self, key):
        return self.data[key]

    def effective(self):
        """The configuration with defaults applied, as plain data."""
        return copy.deepcopy(self.data)

    def dump(self):
        return yaml.safe_dump(self.data, sort_keys=True)


def loads(text, source="<config>") -> Config:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line, source) from exc
    raw = {} if raw is None else raw
    lines = _line_map(node) if node is not None else {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    for key in raw:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown section {key!r}", lines.get((key,)), source)
    cfg = Config(_merge(DEFAULTS, raw), lines, source)
    validate(cfg)
    return cfg


def load(path) -> Config:
    with open(path) as fh:
        return loads(fh.read(), source=str(path))


# --------------------------------------------------------------------------
# validation


def _number(cfg, value, *path, positive=False, integer=False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if integer:
        ok = ok and float(value).is_integer()
    if not ok or (positive and not value > 0):
        kind = "integer" if integer else "number"
        raise cfg.error(f"{'/'.join(map(str, path))} must be a {'positive ' if positive else ''}{kind}, got {value!r}", *path)
    return int(value) if integer else float(value)


def validate(cfg: Config):
    d = cfg.data
    for section in ("problem", "grid", "solver", "time", "analysis", "sweep", "output"):
        if not isinstance(d[section], dict):
            raise cfg.error(f"section {section!r} must be a mapping", section)
        for key in d[section]:
            if key not in DEFAULTS[section]:
                raise cfg.error(f"unknown key {section}/{key}", section, key)
    N = _number(cfg, d["grid"]["cells_per_side"], "grid", "cells_per_side", positive=True, integer=True)
    if N & (N - 1):
        raise cfg.error("grid/cells_per_side must be a power of two", "grid", "cells_per_side")
    _number(cfg, d["problem"]["n"], "problem", "n", positive=True, integer=True)
    _number(cfg, d["problem"]["m"], "problem", "m", positive=True, integer=True)
    _number(cfg, d["solver"]["tol"], "solver", "tol", positive=True)
    if d["time"]["scheme"] not in ("backward-euler", "crank-nicolson"):
        raise cfg.error("time/scheme must be backward-euler or crank-nicolson", "time", "scheme")
    if d["analysis"]["modulus_policy"] not in POLICIES:
        raise cfg.error(f"analysis/modulus_policy must be one of {POLICIES}", "analysis", "modulus_policy")
    try:
        parse_scales(d["analysis"]["scales"])
    except ParameterError as exc:
        raise cfg.error(str(exc), "analysis", "scales") from exc
    if not isinstance(d["moduli"], list):
        raise cfg.error("moduli must be a list", "moduli")
    for i, entry in enumerate(d["moduli"]):
        build_modulus(cfg, entry, "moduli", i)
    # building the problem validates tensors, shapes and boundary data
    build_problem(cfg)


# --------------------------------------------------------------------------
# builders


def parse_scales(text):
    """``"r0:k"`` -> ``r0 * 2**-(0..k-1)``; a list is taken literally."""
    if isinstance(text, (list, tuple)):
        vals = np.asarray(text, dtype=float)
    else:
        r0, sep, k = str(text).partition(":")
        try:
            r0, k = float(r0), int(k)
        except ValueError:
            raise ParameterError(f"scales must look like 'r0:k', got {text!r}") from None
        if not sep or k < 1:
            raise ParameterError(f"scales must look like 'r0:k', got {text!r}")
        vals = r0 * 2.0 ** -np.arange(k)
    if vals.size == 0 or np.any(vals <= 0) or np.any(vals >= 1):
        raise ParameterError("scales must lie in (0, 1)")
    return vals


def parse_centers(entry, n=2):
    """``"gridK"`` -> ``K^n`` cell-centred points on ``[-1/2, 1/2]^n``; a list is taken literally."""
    if isinstance(entry, str):
        if not entry.startswith("grid"):
            raise ParameterError(f"centers must be 'gridK' or a list of points, got {entry!r}")
        try:
            K = int(entry[4:])
        except ValueError:
            raise ParameterError(f"bad center grid {entry!r}") from None
        if K < 1:
            raise ParameterError("center grid needs K >= 1")
        ticks = -0.5 + (np.arange(K) + 0.5) / K
        return np.stack(np.meshgrid(*([ticks] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = np.atleast_2d(np.asarray(entry, dtype=float))
    if pts.shape[1] != n:
        raise ParameterError("center points must have dimension n")
    return pts


def build_modulus(cfg, entry, *path):
    if entry is None:
        return None
    if not isinstance(entry, dict) or "kind" not in entry:
        raise cfg.error("a modulus needs a 'kind'", *path)
    kind = entry["kind"]
    try:
        if kind == "power":
            return Modulus.power(entry.get("alpha", 1.0), entry.get("scale", 1.0))
        if kind == "log_power":
            return Modulus.log_power(entry.get("p", 1.0), entry.get("scale", 1.0))
        if kind == "tabulated":
            if "csv" in entry:
                return Modulus.from_csv(entry["csv"])
            return Modulus.tabulated(entry["r"], entry["omega"])
    except (KeyError, OSError, ParameterError, TypeError) as exc:
        raise cfg.error(f"bad modulus: {exc}", *path) from exc
    raise cfg.error(f"unknown modulus kind {kind!r}", *path, "kind")


def apply_policy(m: Modulus, policy, parabolic=False):
    """Enforce the normalisation the decay estimates assume; returns ``(modulus, message)``."""
    ok, worst = check_rescaling(m, parabolic)
    if ok:
        return m, None
    what = "omega(r)|log r| <= 1/2" if parabolic else "omega(1) <= 1/2"
    msg = f"modulus violates {what} (worst value {worst:.6g})"
    if policy == "reject":
        raise ParameterError(msg)
    if policy == "warn":
        warnings.warn(msg, stacklevel=2)
        return m, msg
    factor = 0.5 / worst
    if m.kind == "tabulated":
        r, w = m.breakpoints
        return Modulus.tabulated(r, np.asarray(w) * factor), msg + f"; rescaled by {factor:.6g}"
    return Modulus(m.kind, (m.params[0], m.params[1] * factor)), msg + f"; rescaled by {factor:.6g}"


def _matrix(cfg, value, shape, *path):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise cfg.error("expected a numeric matrix", *path) from None
    if arr.shape != shape:
        raise cfg.error(f"expected shape {shape}, got {arr.shape}", *path)
    return arr


def scalar_field(cfg, entry, n, *path):
    """``affine``: ``value + gradient . x``; ``trig``: ``mean + amplitude sin(k . x + phase)``."""
    kind = entry.get("kind") if isinstance(entry, dict) else None
    if kind == "affine":
        c = float(entry.get("value", 0.0))
        g = _matrix(cfg, entry.get("gradient", [0.0] * n), (n,), *path, "gradient")
        return lambda x: c + x @ g
    if kind == "trig":
        mean, amp, phase = (float(entry.get(k, d)) for k, d in (("mean", 1.0), ("amplitude", 0.0), ("phase", 0.0)))
        k = _matrix(cfg, entry.get("wavevector", [math.pi] * n), (n,), *path, "wavevector")
        return lambda x: mean + amp * np.sin(x @ k + phase)
    raise cfg.error("scalar field kind must be affine or trig", *path)


def build_tensor(cfg, entry, n, m, modulus, *path):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise cfg.error("a tensor needs a 'kind'", *path)
    kind = entry["kind"]
    kw = {"modulus": modulus}
    if "dini_bound" in entry:
        kw["dini_bound"] = _number(cfg, entry["dini_bound"], *path, "dini_bound", positive=True)
    lam = entry.get("lam")
    if lam is not None:
        lam = _number(cfg, lam, *path, "lam", positive=True)
    mn = m * n
    if kind == "isotropic":
        value = _number(cfg, entry.get("value", 1.0), *path, "value", positive=True)
        return CoefficientTensor.isotropic(n, m, value, lam=lam, **kw)
    lam = 0.5 if lam is None else lam
    if kind == "constant":
        mat = _matrix(cfg, entry.get("matrix"), (mn, mn), *path, "matrix")
        return CoefficientTensor.from_matrix(mat, n, m, lam=lam, **kw)
    if kind == "affine":
        base = _matrix(cfg, entry.get("base"), (mn, mn), *path, "base").reshape(m, n, m, n)
        slopes = _matrix(cfg, entry.get("slopes"), (n, mn, mn), *path, "slopes").reshape(n, m, n, m, n)
        return CoefficientTensor.affine(base, slopes, lam=lam, **kw)
    if kind == "scalar_identity":
        fld = scalar_field(cfg, entry.get("field"), n, *path, "field")
        return CoefficientTensor.scalar_identity(n, m, fld, lam=lam, **kw)
    raise cfg.error(f"unknown tensor kind {kind!r}", *path, "kind")


def _oracle_fn(cfg, entry, n, m, path):
    name = entry.get("name")
    if name == "flat_interface":
        a, b = float(entry.get("a", 1.0)), float(entry.get("b", 4.0))
        base = lambda x: oracle.flat_interface(a, b, x)  # noqa: E731
    elif name == "disk_inclusion":
        k, R = float(entry.get("k", 2.0)), float(entry.get("R", 0.5))
        base = lambda x: oracle.disk_inclusion(k, R, x)  # noqa: E731
    elif name == "eigenmode":
        modes = tuple(entry.get("modes", [1] * n))
        t0 = float(cfg.data["time"]["t0"])

        def fn(x, t=None):
            te = np.zeros(x.shape[0]) if t is None else np.asarray(t) - t0
            u, g = oracle.eigenmode_decay(n, modes, x, te)
            return np.repeat(u[:, None], m, axis=1), np.repeat(g[:, None, :], m, axis=1)

        return fn, True
    else:
        raise cfg.error(f"unknown oracle {name!r}", *path, "name")
    stacked = oracle.vector_decoupled(base, m, entry.get("scales"))

    def fn(x, t=None):
        return stacked(x)

    return fn, False


def boundary_function(cfg, entry, n, m, *path):
    """``(fn(x, t=None) -> (P, m), exact)`` where ``exact(x) -> (P, m)`` or ``None``."""
    kind = entry.get("kind") if isinstance(entry, dict) else None
    if kind == "zero":
        return (lambda x, t=None: np.zeros((x.shape[0], m))), None
    if kind == "affine":
        value = _matrix(cfg, entry.get("value", [0.0] * m), (m,), *path, "value")
        grad = _matrix(cfg, entry.get("gradient", [[0.0] * n] * m), (m, n), *path, "gradient")
        rate = _matrix(cfg, entry.get("rate", [0.0] * m), (m,), *path, "rate")

        def fn(x, t=None):
            out = value + x @ grad.T
            return out if t is None else out + np.asarray(t)[:, None] * rate

        return fn, None
    if kind == "trig":
        amp = _matrix(cfg, entry.get("amplitude", [1.0] * m), (m,), *path, "amplitude")
        k = _matrix(cfg, entry.get("wavevector", [math.pi / 2] * n), (n,), *path, "wavevector")
        phase = float(entry.get("phase", 0.0))
        return (lambda x, t=None: np.sin(x @ k + phase)[:, None] * amp), None
    if kind == "oracle":
        ofn, _ = _oracle_fn(cfg, entry, n, m, path)
        return (lambda x, t=None: ofn(x, t)[0]), (lambda x: ofn(x)[0])
    raise cfg.error("boundary kind must be zero, affine, trig or oracle", *path)


def build_problem(cfg: Config, parabolic=False):
    """The configured :class:`TransmissionProblem`; ``parabolic`` makes data callables take ``(x, t)``."""
    d = cfg.data["problem"]
    n, m = int(d["n"]), int(d["m"])
    modulus = build_modulus(cfg, d["modulus"], "problem", "modulus")
    A = build_tensor(cfg, d["A"], n, m, modulus, "problem", "A")
    B = build_tensor(cfg, d["B"], n, m, None, "problem", "B")
    try:
        D = shape_from_dict(d["D"]) if isinstance(d["D"], dict) else None
    except (KeyError, TypeError, ParameterError) as exc:
        raise cfg.error(f"bad shape: {exc}", "problem", "D") from exc
    if D is None:
        raise cfg.error("D must be a mapping with a 'shape'", "problem", "D")
    gfn, exact = boundary_function(cfg, d["boundary"], n, m, "problem", "boundary")
    forcing = None
    if d["forcing"] is not None:
        F = _matrix(cfg, d["forcing"].get("value") if isinstance(d["forcing"], dict) else None,
                    (m, n), "problem", "forcing", "value")
        forcing = (lambda x, t: np.broadcast_to(F, (x.shape[0], m, n))) if parabolic else \
            (lambda x: np.broadcast_to(F, (x.shape[0], m, n)))
    boundary = (lambda x, t: gfn(x, t)) if parabolic else (lambda x: gfn(x))
    return TransmissionProblem(A, B, D, boundary, forcing, label=d["label"], meta={"exact": exact})


def initial_function(cfg: Config):
    """Initial data at ``t0``: the ``time/initial`` entry, else the boundary data at ``t0``."""
    d = cfg.data
    n, m = int(d["problem"]["n"]), int(d["problem"]["m"])
    entry = d["time"]["initial"]
    path = ("time", "initial")
    if entry is None:
        entry, path = d["problem"]["boundary"], ("problem", "boundary")
    fn, _ = boundary_function(cfg, entry, n, m, *path)
    t0 = float(d["time"]["t0"])
    return lambda x: fn(x, np.full(x.shape[0], t0))
