import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from translab.errors import DomainError, ParameterError, QuadratureError
from translab.modulus import (Modulus, check_rescaling, decay_verdict, dini_integral, evaluate,
                              lemma_a2_check, log_decay_profile, psi)


def test_constructors_validate():
    with pytest.raises(ParameterError):
        Modulus.power(0.0)
    with pytest.raises(ParameterError):
        Modulus.log_power(1.0, scale=-1)
    with pytest.raises(ParameterError):
        Modulus.tabulated([0.5, 0.25], [1.0, 2.0])
    with pytest.raises(ParameterError):
        Modulus.tabulated([0.25, 0.5], [2.0, 1.0])


def test_domain():
    m = Modulus.power(1.0)
    with pytest.raises(DomainError):
        m(0.0)
    with pytest.raises(DomainError):
        m(np.array([0.5, 1.5]))
    assert evaluate(m, 0.25) == 0.25


def test_log_power_value():
    m = Modulus.log_power(2.0, 3.0)
    assert m(math.exp(-1.0)) == pytest.approx(3.0 / 4.0)


def test_tabulated_interpolates_and_extends(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text("r,omega\n0.1,0.2\n0.5,0.3\n1.0,0.4\n")
    m = Modulus.from_csv(path)
    assert m(0.3) == pytest.approx(0.25)
    assert m(0.01) == pytest.approx(0.2)
    assert m.smallest_breakpoint == 0.1


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("scale", [1.0, 0.3])
def test_dini_power_closed_form(alpha, scale):
    res = dini_integral(Modulus.power(alpha, scale))
    assert res.is_convergent
    assert res.value == pytest.approx(scale / alpha, rel=1e-8)


def test_dini_log_power_divergent():
    assert not dini_integral(Modulus.log_power(1.0)).is_convergent
    assert not dini_integral(Modulus.log_power(0.5)).is_convergent


def test_dini_log_power_truncated_value():
    # int_{r_min}^1 (1 - log r)^-3 / r dr = (1 - (1 + S)^-2) / 2 with S = -log r_min
    S = -math.log(1e-20)
    res = dini_integral(Modulus.log_power(3.0))
    assert res.value == pytest.approx((1 - (1 + S) ** -2) / 2, rel=1e-8)


def test_tabulated_dini_uses_supported_decades():
    r = np.logspace(-6, 0, 13)
    res = dini_integral(Modulus.tabulated(r, r))
    assert res.is_convergent


def test_decay_verdict():
    assert decay_verdict([1.0, 0.1, 0.01, 0.001])
    assert not decay_verdict([1.0, 1.0, 1.0, 1.0])
    assert not decay_verdict([1.0, 1.0])
    assert not decay_verdict([1.0, 0.1, 0.2], full=[True, True, True])
    assert decay_verdict([1.0, 0.1, 0.2], full=[True, True, False])
    with pytest.raises(ParameterError):
        decay_verdict([1.0])


def test_log_decay_profile_tends_to_zero():
    vals = log_decay_profile(Modulus.power(0.5), [1e-2, 1e-4, 1e-8])
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(DomainError):
        log_decay_profile(Modulus.power(1.0), [1.0])


def test_psi_closed_form():
    # rho + sqrt(rho^2 (1 - rho^4) / 4) + rho at rho = 1/2
    assert psi(Modulus.power(1.0), 0.5, 2) == pytest.approx(1.242061459, abs=1e-8)
    with pytest.raises(DomainError):
        psi(Modulus.power(1.0), 0.6, 2)


def test_growth_integral_power_matches_nested_quadrature():
    # omega = r, alpha = 3: inner integral is (1 - r^3) / 3
    ref, _ = integrate.quad(lambda r: r**0.5 * math.sqrt((1 - r**3) / 3), 0, 1, epsabs=1e-13)
    res = lemma_a2_check(Modulus.power(1.0), 3.0)
    assert res.is_convergent
    assert res.value == pytest.approx(ref, rel=1e-7)


def test_growth_integral_rejects_small_alpha():
    with pytest.raises(ParameterError):
        lemma_a2_check(Modulus.power(1.0), 1.0)


def test_growth_integral_divergent_log():
    assert not lemma_a2_check(Modulus.log_power(0.5), 2.0).is_convergent


def test_quadrature_error_carries_partial():
    err = QuadratureError("x", partial=1.5)
    assert err.partial == 1.5


def test_rescaling_checks():
    assert check_rescaling(Modulus.power(1.0, 0.5))[0]
    assert not check_rescaling(Modulus.power(1.0, 1.0))[0]
    ok, worst = check_rescaling(Modulus.power(1.0, 1.0), parabolic=True)
    # max of r |log r| is 1/e
    assert ok and worst == pytest.approx(1 / math.e, rel=1e-2)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.1, 2.0), st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_power_monotone(alpha, scale, a, b):
    m = Modulus.power(alpha, scale)
    lo, hi = min(a, b), max(a, b)
    assert m(lo) <= m(hi)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.5), st.floats(0.1, 2.0))
def test_dini_scales_linearly(alpha, scale):
    base = dini_integral(Modulus.power(alpha)).value
    assert dini_integral(Modulus.power(alpha, scale)).value == pytest.approx(scale * base, rel=1e-7)
