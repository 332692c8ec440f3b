import numpy as np
import pytest

from kolmogorov_lab.approx.cutoff import make_cutoff
from kolmogorov_lab.approx.scheme import ApproximationScheme, approx_coefficients, verify_approx
from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.lyapunov.derive import derive_static, derive_time_dependent
from kolmogorov_lab.lyapunov.functions import RateFunction, TimeDependentLyapunov
from kolmogorov_lab.lyapunov.profile import smooth_radial_power
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import GrowthParams, make_example54


def _quadratic_growth_scheme(n: int) -> ApproximationScheme:
    params = GrowthParams(m=2.0, p=3.0, Lambda=1.0, kappa=1.0, K=1.0)
    w1 = TimeDependentLyapunov(
        profile=smooth_radial_power(2.0),
        epsilon=0.1,
        alpha=2.5,
        horizon=1.0,
        delta=0.4,
        h=RateFunction.zero(1.0),
        m=2.0,
        label="W1",
    )
    return ApproximationScheme(n=n, base=make_example54(1, params), w1=w1)


def test_cutoff_shape() -> None:
    phi = make_cutoff()
    assert phi(0.5) == 1.0
    assert phi(-1.0) == 1.0
    assert phi(3.0) == 0.0
    assert 0.0 < phi(1.5) < 1.0
    assert phi.slope_bound <= 2.0
    grid = np.linspace(0.0, 3.0, 301)
    assert np.all(np.diff(phi(grid)) <= 1e-12)


def test_truncated_diffusion_blends_to_eta() -> None:
    scheme = _quadratic_growth_scheme(10)
    q = approx_coefficients(scheme, 0.0, np.array([[1.0], [6.0]]))
    assert q[0, 0, 0] == pytest.approx(2.0)
    assert q[1, 0, 0] == pytest.approx(1.0)

    inner, outer = scheme.shell_radii(0.0)
    assert inner == pytest.approx(np.sqrt(np.log(10.0) / 0.1))
    assert outer == pytest.approx(np.sqrt(np.log(20.0) / 0.1))
    assert scheme.shell_radii(1.0) == (np.inf, np.inf)


def test_truncated_field_is_bounded_and_named() -> None:
    scheme = _quadratic_growth_scheme(10)
    field = scheme.as_field()
    assert field.name == "example54_n10"
    assert not field.autonomous
    far = field.q(0.0, np.array([[50.0], [-80.0]]))
    np.testing.assert_allclose(far[:, 0, 0], [1.0, 1.0])
    np.testing.assert_allclose(field.f(0.0, np.array([[2.0]])), [[-8.0]])


def test_truncation_level_must_be_positive() -> None:
    with pytest.raises(ParameterDomainError):
        _quadratic_growth_scheme(0)


def test_huge_level_leaves_operator_unchanged() -> None:
    params = GrowthParams(m=0.0, p=3.0, Lambda=1.0, kappa=1.0, K=1.0)
    field = make_example54(1, params)
    grid = ShellGrid.build(1, np.linspace(0.0, 0.9, 10), 3.0, 0.25)
    static = derive_static(field, params, 0.8, grid)
    w1 = derive_time_dependent(static, field, params, 1.0, 0.5, 2.5, grid, label="W1")

    report = verify_approx(ApproximationScheme(n=10**30, base=field, w1=w1), static, grid)
    assert report.identical_to_base
    assert report.passed
    assert set(report.to_dict()["checks"]) == {
        "generator_bound",
        "ellipticity",
        "bounded_diffusion",
        "bounded_derivatives",
        "lyapunov_same_rate",
    }
