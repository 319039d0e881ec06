from pathlib import Path

import numpy as np
import pytest
import yaml

from translab import config as cfgmod
from translab.config import ConfigError, apply_policy, build_problem, loads, parse_centers, parse_scales
from translab.errors import ParameterError
from translab.modulus import Modulus

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "configs"


def test_defaults_applied():
    cfg = loads("grid: {cells_per_side: 32}\n")
    assert cfg["grid"]["cells_per_side"] == 32
    assert cfg["solver"]["tol"] == 1e-10
    assert cfg["analysis"]["modulus_policy"] == "warn"


@pytest.mark.parametrize("text, line", [
    ("grid:\n  cells_per_side: 48\n", 2),
    ("problem:\n  n: 2\n  A: {kind: wobbly}\n", 3),
    ("problem:\n  D: {shape: blob}\n", 2),
    ("solver:\n  tol: 1e-10\n  speed: 3\n", 3),
    ("extra: 1\n", 1),
    ("grid:\n  cells_per_side: [1\n", 3),
    ("analysis:\n  scales: 'x:y'\n", 2),
    ("moduli:\n  - {kind: power, alpha: 1}\n  - {kind: log_power, p: -1}\n", 3),
])
def test_errors_are_line_anchored(text, line):
    with pytest.raises(ConfigError) as exc:
        loads(text, source="c.yaml")
    assert exc.value.line == line
    assert str(exc.value).startswith(f"c.yaml:{line}:")


def test_scales_and_centers():
    assert parse_scales("0.25:3").tolist() == [0.25, 0.125, 0.0625]
    assert parse_scales([0.5, 0.1]).tolist() == [0.5, 0.1]
    with pytest.raises(ParameterError):
        parse_scales("1.5:2")
    c = parse_centers("grid4")
    assert c.shape == (16, 2)
    assert c.min() == -0.375 and c.max() == 0.375
    assert parse_centers([[0, 0.1]]).tolist() == [[0.0, 0.1]]


def test_problem_builders():
    cfg = loads("""
problem:
  m: 2
  A: {kind: constant, matrix: [[2,0,0,0],[0,2,0,0],[0,0,2,0],[0,0,0,2]], lam: 0.5}
  B: {kind: scalar_identity, field: {kind: trig, mean: 1.5, amplitude: 0.25}}
  D: {shape: union, of: [{shape: ball, center: [0, 0], radius: 0.2}, {shape: cusp, gamma: 2}]}
  boundary: {kind: affine, value: [1, 0], gradient: [[1, 0], [0, 1]]}
  forcing: {value: [[0, 0], [1, 0]]}
""")
    p = build_problem(cfg)
    x = np.array([[0.5, 0.5]])
    assert p.n == 2 and p.m == 2
    assert p.boundary_values(x).tolist() == [[1.5, 0.5]]
    assert p.forcing_values(x)[0, 1, 0] == 1.0


def test_affine_tensor_and_oracle_boundary():
    cfg = loads("""
problem:
  A: {kind: affine, base: [[1, 0], [0, 1]], slopes: [[[0.1, 0], [0, 0.1]], [[0, 0], [0, 0]]], lam: 0.5}
  boundary: {kind: oracle, name: disk_inclusion, k: 2, R: 0.5}
""")
    p = build_problem(cfg)
    assert p.A(np.array([[0.5, 0.0]]))[0, 0, 0, 0, 0] == pytest.approx(1.05)
    assert p.meta["exact"] is not None


def test_round_trip_of_effective_config():
    for path in sorted(DEMOS.glob("*.yaml")):
        cfg = cfgmod.load(path)
        again = loads(cfg.dump())
        assert again.effective() == cfg.effective(), path.name


def test_annotated_example_is_complete():
    raw = yaml.safe_load((DEMOS / "annotated.yaml").read_text())
    for section, defaults in cfgmod.DEFAULTS.items():
        assert section in raw
        if isinstance(defaults, dict):
            assert set(raw[section]) == set(defaults), section


def test_modulus_policy():
    m = Modulus.power(1.0, 2.0)
    with pytest.warns(UserWarning):
        same, msg = apply_policy(m, "warn")
    assert same is m and "omega(1)" in msg
    with pytest.raises(ParameterError):
        apply_policy(m, "reject")
    scaled, _ = apply_policy(m, "rescale")
    assert scaled(1.0) == pytest.approx(0.5)
    ok, msg = apply_policy(Modulus.power(1.0, 0.5), "reject")
    assert msg is None
