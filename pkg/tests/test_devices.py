import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from birkhoff_rlc.devices import (Linear, Poly, Tanh, inductance, invert, is_strictly_increasing,
                                  make_model, passivity_check, solve_scalar, stored_energy)
from birkhoff_rlc.errors import InvalidModel, NoBracket, NotMonotone


def test_eval_and_derivative_examples():
    assert Linear(2).eval(3) == 6 and Linear(2).deriv(3) == 2
    cubic = Poly((0, 0, 0, 1))
    assert cubic.eval(2) == 8 and cubic.deriv(2) == 12
    t = Tanh(1, 1)
    assert t.eval(0) == 0 and t.deriv(0) == pytest.approx(1.0)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(-2, 2))
def test_poly_derivative_matches_finite_difference(coeffs, x):
    p = Poly(tuple(coeffs))
    h = 1e-6
    fd = (p.eval(x + h) - p.eval(x - h)) / (2 * h)
    assert p.deriv(x) == pytest.approx(fd, abs=1e-5)
    assert p.eval(x) == pytest.approx(float(np.polyval(coeffs[::-1], x)), abs=1e-12)


def test_models_accept_arrays():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(Tanh(2, 3).eval(x), 2 * np.tanh(3 * x))
    assert np.allclose(Poly((1, 2)).deriv(x), 2.0)


def test_make_model_validation():
    assert make_model("poly", [1, 2]) == Poly((1.0, 2.0))
    with pytest.raises(InvalidModel):
        make_model("linear", [1, 2])
    with pytest.raises(InvalidModel):
        make_model("spline", [1])
    with pytest.raises(InvalidModel):
        Poly(())


def test_passivity_grid():
    assert passivity_check(Linear(1)).passed
    assert passivity_check(Tanh(1, 2)).passed
    bad = passivity_check(Poly((0, -1, 0, 1)))  # x^3 - x is active on (-1, 1)
    assert not bad.passed
    assert abs(bad.first_violation) == pytest.approx(0.01)
    assert not passivity_check(Poly((0.1, 1))).passed  # f(0) != 0 fails near zero


def test_linear_inductor_is_constant_inductance():
    assert inductance(Linear(3.0), 0.0) == 3.0
    assert inductance(Poly((1.0, 0.0, 2.0)), 2.0) == 9.0


@pytest.mark.parametrize("model", [Linear(2.0), Poly((0.5, 0.0, 0.3)), Tanh(1.0, 0.7)])
@pytest.mark.parametrize("x", [-1.3, 0.0, 0.4, 2.5])
def test_inductor_energy_matches_quadrature(model, x):
    ref = integrate.quad(lambda s: float(inductance(model, s)) * s, 0, x, epsabs=1e-14)[0]
    assert stored_energy("L", model, x) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("model", [Linear(2.0), Poly((0.0, 1.0, 0.0, 0.5)), Tanh(1.0, 0.7)])
@pytest.mark.parametrize("x", [-1.3, 0.0, 0.4, 2.5])
def test_capacitor_energy_matches_quadrature(model, x):
    ref = integrate.quad(lambda s: float(model.eval(s)), 0, x, epsabs=1e-14)[0]
    assert stored_energy("C", model, x) == pytest.approx(ref, abs=1e-12)


def test_stored_energy_rejects_resistors():
    with pytest.raises(ValueError):
        stored_energy("R", Linear(1), 1.0)


@given(st.floats(-20, 20))
@settings(max_examples=60)
def test_invert_against_bisection(y):
    model = Poly((0.0, 0.3, 0.0, 0.2))
    v = invert(model, y)
    ref = optimize.brentq(lambda s: model.eval(s) - y, -100, 100, xtol=1e-14)
    assert v == pytest.approx(ref, abs=1e-9)
    assert model.eval(v) == pytest.approx(y, abs=1e-11 * max(1, abs(y)))


def test_invert_linear_and_errors():
    assert invert(Linear(0.5), 2.0) == 4.0
    with pytest.raises(NotMonotone):
        invert(Linear(-1.0), 1.0)
    with pytest.raises(NoBracket):
        invert(Tanh(1.0, 1.0), 2.0)  # outside the range of tanh


def test_solve_scalar_recovers_from_bad_newton_steps():
    # Newton from 0 on atan overshoots; bracketing must take over
    root = solve_scalar(lambda x: math.atan(x - 3.0), lambda x: 1 / (1 + (x - 3.0) ** 2), 0.0, 1e-13)
    assert root == pytest.approx(3.0, abs=1e-12)


def test_strictly_increasing():
    assert is_strictly_increasing(Poly((0, 1, 0, 1)))
    assert not is_strictly_increasing(Poly((0, 0, 1)))
