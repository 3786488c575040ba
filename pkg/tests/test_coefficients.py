import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from relvac.coefficients import (
    a_coeffs,
    b_coeffs,
    coefficient_bundle,
    flux_bracket,
    j_factor,
    lagrangian_a_coeffs,
    lambdas_a0,
)
from relvac.errors import DensityBreakdownError, PositivityLossError
from relvac.grid_ops import Grid
from relvac.thermo import INFINITE_C, PhysParams, State, demo_data, enthalpy_weight, lorentz_theta, uniform_data

P10 = PhysParams(c=10.0, gamma=2.0)
PINF = PhysParams(c=INFINITE_C, gamma=2.0)


def rel(a, b):
    return abs(float(a) / float(b) - 1.0)


def example_kernels():
    return oracles.kernels(mp.mpf(1), mp.mpf(2), mp.mpf(0), mp.mpf("0.5"), mp.mpf(10))


def test_lambdas_rest_and_classical():
    assert lambdas_a0(0.0, 0.0, 0.0, 0.5, P10) == (1.0, 1.0, 1.0, 1.0)
    assert all(v == 1.0 for v in lambdas_a0(1.0, 2.0, 3.0, 0.5, PINF))


def test_lambdas_example():
    lam1, lam2, lam3, a0 = lambdas_a0(1.0, 2.0, 0.0, 0.5, P10)
    o1, o2, o3, oa0, _, _ = example_kernels()
    assert rel(lam1, o1) <= 1e-9 and rel(lam2, o2) <= 1e-9 and rel(lam3, o3) <= 1e-9
    assert rel(a0, oa0) <= 1e-9
    assert lam1 == pytest.approx(1.0104211, abs=1e-7)
    assert lam2 == pytest.approx(0.9583158, abs=1e-7)
    assert lam3 == 1.0


def test_a_coeffs_rest_and_classical():
    assert a_coeffs(0.0, 0.0, 0.0, 0.5, P10) == (1.0, 1.0)
    assert a_coeffs(0.3, 2.0, 1.0, 0.5, PINF) == (1.0, 1.0)


def test_a12_example():
    _, a12 = a_coeffs(1.0, 2.0, 0.0, 0.5, P10)
    *_, oa11, oa12 = example_kernels()
    assert rel(a12, oa12) <= 1e-9
    assert rel(a_coeffs(1.0, 2.0, 0.0, 0.5, P10)[0], oa11) <= 1e-9


def test_b12_rest_example():
    _, b12 = b_coeffs(0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, P10)
    assert rel(b12, 1 - 2 * mp.mpf("0.5") / 100) <= 1e-12
    assert b_coeffs(0.4, 0.1, 0.2, 0.5, 1.0, 1.0, 1.0, PINF)[1] == 1.0


def test_b11_slot_vanishes_at_vacuum():
    g = Grid(32)
    init = demo_data(g)
    state = State.initial(init)
    bundle = coefficient_bundle(state, init, P10, g)
    q = enthalpy_weight(init.rho0, lorentz_theta(init.u0, init.v0, init.w0, 10.0), 2.0, 10.0)
    assert (q * bundle.b11)[-1] == 0.0


def j_state(c):
    g = Grid(4)
    init = uniform_data(g, 2.0, 0.5)
    state = State(0.0, g.nodes.copy(), init.u0, init.v0, init.w0)
    return j_factor(state, init, PhysParams(c=c), g)[2]


def test_j_factor_examples():
    g = Grid(16)
    init = demo_data(g)
    assert np.all(j_factor(State(0.0, g.nodes.copy(), init.u0, init.v0, init.w0), init, PINF, g) == 1.0)
    assert rel(j_state(10.0), 1 / (1 - mp.mpf("0.005")) ** 3) <= 1e-9


def test_j_factor_quarters_with_doubled_c():
    ratio = (j_state(10.0) - 1.0) / (j_state(20.0) - 1.0)
    assert abs(ratio / 4.0 - 1.0) <= 0.12


def test_flux_bracket_breakdown():
    with pytest.raises(DensityBreakdownError):
        flux_bracket(np.array([5.0]), np.array([1.0]), np.array([0.01]), np.array([1.0]), PhysParams(c=2.0))


def test_positivity_loss():
    with pytest.raises(PositivityLossError):
        lambdas_a0(0.0, 0.99, 0.0, 0.0, PhysParams(c=1.0))


velocity = st.floats(-2.0, 2.0)
density = st.floats(0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(velocity, velocity, velocity, density)
def test_coefficient_ordering_and_positivity(u, v, w, rho):
    lam1, lam2, lam3, a0 = lambdas_a0(u, v, w, rho, P10)
    assert lam2 <= 1.0 <= lam1 and 1.0 <= lam3
    assert min(lam1, lam2, lam3, a0) > 0.0


@settings(max_examples=60, deadline=None)
@given(velocity, velocity, velocity, density)
def test_coefficients_even_in_each_velocity(u, v, w, rho):
    ref = (*lambdas_a0(u, v, w, rho, P10), *a_coeffs(u, v, w, rho, P10))
    for signs in ((-1, 1, 1), (1, -1, 1), (1, 1, -1)):
        flipped = (*lambdas_a0(signs[0] * u, signs[1] * v, signs[2] * w, rho, P10),
                   *a_coeffs(signs[0] * u, signs[1] * v, signs[2] * w, rho, P10))
        assert flipped == ref


@settings(max_examples=60, deadline=None)
@given(velocity, velocity, density)
def test_a12_swap_structure(u, v, rho):
    assert a_coeffs(u, v, v, rho, P10)[1] == pytest.approx(1.0, abs=1e-15)
    w = 0.5 * v
    k = (1 - 2 * rho / 100) / (100 * lorentz_theta(u, v, w, 10.0) ** 2)
    a0 = lambdas_a0(u, v, w, rho, P10)[3]
    a0_swapped = lambdas_a0(u, w, v, rho, P10)[3]
    total = a_coeffs(u, v, w, rho, P10)[1] + a_coeffs(u, w, v, rho, P10)[1]
    assert total - 2.0 == pytest.approx(k * (v**2 - w**2) * (a0 - a0_swapped), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.05, 1.0))
def test_classical_limit_rate(u, v, w, rho):
    assume(u * u + v * v + w * w > 0.01)

    def coeffs(c):
        p = PhysParams(c=c)
        bracket = 1.0 - rho / c**2
        return np.array(
            [*lambdas_a0(u, v, w, rho, p), *lagrangian_a_coeffs(u, v, w, rho, bracket, p),
             b_coeffs(u, v, w, rho, 1.0, 1.0, bracket, p)[1]]
        )

    limit = coeffs(INFINITE_C)
    d1, d2 = np.abs(coeffs(40.0) - limit), np.abs(coeffs(80.0) - limit)
    # entries whose 1/c^2 coefficient vanishes converge faster; only bound them
    leading = d1 > 1e-3 / 40.0**2
    assert np.all(np.abs(d1[leading] / d2[leading] - 4.0) <= 0.5)
    assert np.all(d2[~leading] <= d1[~leading] / 3.5 + 1e-15)


def test_bundle_rest_state_and_classical():
    g = Grid(32)
    init = demo_data(g)
    zero = np.zeros(g.size)
    rest = State(0.0, g.nodes.copy(), zero, zero, zero)
    rest_init = uniform_data(g, 2.0, 0.5)
    b = coefficient_bundle(rest, rest_init, P10, g)
    for f in (b.lambda1, b.lambda2, b.lambda3, b.a0):
        assert np.all(f == 1.0)
    b_inf = coefficient_bundle(State.initial(init), init, PINF, g)
    for f in (b_inf.a11, b_inf.b12, b_inf.j_factor):
        assert np.all(f == 1.0)
    # the Lagrangian a12 multiplier carries a factor gamma that survives the limit
    assert np.all(b_inf.a12 == 2.0)
