import numpy as np
import pytest

from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.lyapunov.certify import verify_lyapunov
from kolmogorov_lab.lyapunov.derive import derive_static, derive_time_dependent
from kolmogorov_lab.lyapunov.functions import RadialExponential, RateFunction
from kolmogorov_lab.lyapunov.generator import apply_generator, apply_generator_fd, generator_ratio, generator_ratio_fd
from kolmogorov_lab.lyapunov.profile import smooth_radial_power
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import GrowthParams, brownian_field, make_example54


def _setup(m: float = 0.0):
    params = GrowthParams(m=m, p=3.0, Lambda=1.0, kappa=1.0, K=1.0)
    field = make_example54(1, params)
    grid = ShellGrid.build(1, np.linspace(0.0, 0.9, 10), 5.0, 0.1)
    return field, params, grid


def test_smooth_radial_power_coefficients() -> None:
    quartic = smooth_radial_power(4.0)
    assert (quartic.a, quartic.b_c, quartic.c) == pytest.approx((0.0, 0.0, 1.0))
    square = smooth_radial_power(2.0)
    assert (square.a, square.b_c, square.c) == pytest.approx((0.0, 1.0, 0.0))

    linear = smooth_radial_power(1.0)
    assert (linear.a, linear.b_c, linear.c) == pytest.approx((0.375, 0.75, -0.125))
    assert linear.core_minimum() == pytest.approx(0.375)


def test_profile_is_twice_continuous_at_the_unit_sphere() -> None:
    profile = smooth_radial_power(1.5)
    below, above = 1.0 - 1e-9, 1.0 + 1e-9
    assert profile.value_r(np.array(below)) == pytest.approx(profile.value_r(np.array(above)), abs=1e-7)
    assert profile.grad_coef(np.array(below)) == pytest.approx(profile.grad_coef(np.array(above)), abs=1e-7)
    assert profile.hess_coef(np.array(below)) == pytest.approx(profile.hess_coef(np.array(above)), abs=1e-7)


def test_derive_static_delta() -> None:
    field, params, grid = _setup()
    static = derive_static(field, params, 0.8, grid)
    assert static.delta == pytest.approx(0.2)
    assert static.M > 0
    assert static.r_cert == pytest.approx(5.0)
    assert static.tail["generator"][1] < static.tail["generator"][0] < 0

    field2, params2, grid2 = _setup(m=2.0)
    assert derive_static(field2, params2, 0.8, grid2).delta == pytest.approx(0.4)


def test_derive_static_rejects_fraction_of_one() -> None:
    field, params, grid = _setup()
    with pytest.raises(ParameterDomainError):
        derive_static(field, params, 1.0, grid)


def test_apply_generator_hand_value() -> None:
    field, _, _ = _setup()
    fn = RadialExponential(smooth_radial_power(4.0), 0.2)
    value = apply_generator(field, fn, 0.5, np.array([[1.0]]))[0]
    assert value == pytest.approx(0.8 * 2.8 * np.exp(0.2))


def test_generator_ratio_matches_finite_differences() -> None:
    field, _, _ = _setup()
    fn = RadialExponential(smooth_radial_power(4.0), 0.2)
    pts = np.array([[0.4], [1.5], [-2.5]])
    exact = generator_ratio(field, fn, 0.3, pts)
    numeric = generator_ratio_fd(field, fn, 0.3, pts)
    np.testing.assert_allclose(exact, numeric, rtol=1e-4, atol=1e-6)
    np.testing.assert_allclose(
        apply_generator(field, fn, 0.3, pts), apply_generator_fd(field, fn, 0.3, pts), rtol=1e-4, atol=1e-6
    )


def test_brownian_generator_at_origin() -> None:
    field = brownian_field(2, 1.0)
    fn = RadialExponential(smooth_radial_power(2.0), 0.1)
    assert apply_generator(field, fn, 0.0, np.zeros((1, 2)))[0] == pytest.approx(0.4)
    zero = RadialExponential(smooth_radial_power(2.0), 0.0)
    assert apply_generator(field, zero, 0.0, np.array([[1.0, 2.0]]))[0] == 0.0


def test_rate_function_integrals() -> None:
    assert RateFunction.zero(1.0)(0.3) == 0.0
    assert RateFunction.zero(1.0).integrate(0.0, 1.0) == 0.0
    assert RateFunction.analytic(2.0, -0.5, 1.0).integrate(0.0, 1.0) == pytest.approx(4.0)

    empirical = RateFunction(
        kind="empirical",
        horizon=1.0,
        edges=np.array([0.0, 0.5, 0.75]),
        values=np.array([1.0, 2.0]),
        constant=3.0,
        exponent=0.0,
    )
    assert empirical(0.6) == 2.0
    assert empirical(0.9) == 3.0
    assert empirical.integrate(0.0, 1.0) == pytest.approx(1.75)
    assert empirical.integrate(0.25, 0.6) == pytest.approx(0.25 + 0.2)


def test_time_dependent_rejects_alpha_at_threshold() -> None:
    field, params, grid = _setup()
    static = derive_static(field, params, 0.8, grid)
    with pytest.raises(ParameterDomainError, match="alpha"):
        derive_time_dependent(static, field, params, 1.0, 0.5, 2.0, grid)


def test_time_dependent_lyapunov_properties() -> None:
    field, params, grid = _setup()
    static = derive_static(field, params, 0.8, grid)
    W = derive_time_dependent(static, field, params, 1.0, 0.5, 2.5, grid)

    assert W.epsilon == pytest.approx(0.1)
    assert W.value(1.0, np.array([[3.0]]))[0] == 1.0
    assert W.dominated_by(static, grid.times, grid.points())
    assert W.analytic_exponent == pytest.approx(2.5 - 6.0 / 2.0)
    assert np.isfinite(W.integrate_rate(0.0, 1.0))
    assert W.h_analytic is not None


def test_verify_lyapunov_with_empirical_and_zero_rate() -> None:
    field, params, grid = _setup()
    static = derive_static(field, params, 0.8, grid)
    W = derive_time_dependent(static, field, params, 1.0, 0.5, 2.5, grid)

    certified = verify_lyapunov(W, field, grid)
    assert certified.passed
    assert certified.violation_count == 0
    assert certified.rate_kind == "empirical"

    broken = verify_lyapunov(W, field, grid, rate=RateFunction.zero(1.0))
    assert not broken.passed
    assert broken.violation_count > 0
    assert broken.to_dict()["status"] == "fail"
