import math

import numpy as np
import pytest

from translab.errors import ParameterError
from translab.oracle import (disk_inclusion, eigenmode_decay, eigenmode_rate, fd_gradient, flat_interface,
                             one_sided_derivative, strong_form_suite, vector_decoupled)


def test_flat_interface_values():
    u, g = flat_interface(1.0, 4.0, np.array([[0.3, 0.5], [0.3, -0.5]]))
    assert u.tolist() == [0.125, -0.5]
    assert g[:, 1].tolist() == [0.25, 1.0]
    with pytest.raises(ParameterError):
        flat_interface(0.0, 1.0, np.zeros((1, 2)))


def test_disk_inclusion_continuity_and_flux():
    k, R = 3.0, 0.4
    theta = np.linspace(0, 2 * np.pi, 17)
    nu = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    inner, gi = disk_inclusion(k, R, (R - 1e-9) * nu)
    outer, go = disk_inclusion(k, R, (R + 1e-9) * nu)
    assert np.abs(inner - outer).max() < 1e-8
    assert np.abs(k * np.einsum("pk,pk->p", gi, nu) - np.einsum("pk,pk->p", go, nu)).max() < 1e-7


def test_disk_inclusion_uniform_inside():
    _, g = disk_inclusion(2.0, 0.5, np.array([[0.1, 0.1], [-0.2, 0.3]]))
    assert np.allclose(g, [[2 / 3, 0], [2 / 3, 0]])


def test_vector_decoupled():
    orc = vector_decoupled(lambda x: flat_interface(1.0, 2.0, x), 2, [1.0, -3.0])
    u, g = orc(np.array([[0.0, 0.4]]))
    assert u.shape == (1, 2) and g.shape == (1, 2, 2)
    assert u[0].tolist() == pytest.approx([0.2, -0.6])


def test_eigenmode():
    x = np.array([[0.5, 0.25]])
    u, _ = eigenmode_decay(2, (1, 2), x, 0.1)
    assert u[0] == pytest.approx(math.sin(math.pi / 2) * math.sin(math.pi / 2) * math.exp(-5 * math.pi**2 * 0.1))
    assert eigenmode_rate((1, 1)) == pytest.approx(2 * math.pi**2)
    edge, _ = eigenmode_decay(2, (1, 1), np.array([[1.0, 0.3], [-0.2, -1.0]]), 0.0)
    assert np.abs(edge).max() < 1e-15


def test_finite_difference_helpers():
    x = np.array([[0.2, -0.3]])
    fn = lambda y: np.sin(y[:, 0]) * y[:, 1]  # noqa: E731
    assert np.allclose(fd_gradient(fn, x), [[math.cos(0.2) * -0.3, math.sin(0.2)]], atol=1e-10)
    d = one_sided_derivative(fn, x, np.array([1.0, 0.0]))
    assert d[0] == pytest.approx(math.cos(0.2) * -0.3, abs=1e-10)


def test_strong_form_suite_small():
    rows = strong_form_suite(points=20000)
    assert len(rows) == 9
    assert all(r.passed for r in rows), [(r.oracle, r.check, r.max_residual) for r in rows if not r.passed]
