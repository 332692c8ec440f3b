import numpy as np
import pytest

from kolmogorov_lab.errors import CoefficientEvaluationError, ParameterDomainError
from kolmogorov_lab.operators.grid import ShellGrid, default_directions
from kolmogorov_lab.operators.hypotheses import check_hypotheses
from kolmogorov_lab.operators.model import (
    CoefficientField,
    GrowthParams,
    constant_matrix,
    eval_coefficients,
    make_example54,
    spatial_divergence,
)


def _example54(d: int = 1, m: float = 0.0) -> CoefficientField:
    return make_example54(d, GrowthParams(m=m, p=3.0, Lambda=1.0, kappa=1.0, K=1.0))


def test_example54_coefficients_at_hand_points() -> None:
    field = _example54()
    assert field.f(0.3, np.array([[2.0]]))[0, 0] == pytest.approx(-8.0)
    assert field.q(0.3, np.array([[2.0]]))[0, 0, 0] == 1.0
    assert field.f(0.0, np.array([[0.0]]))[0, 0] == 0.0

    planar = _example54(d=2, m=2.0)
    np.testing.assert_allclose(planar.q(0.0, np.array([[1.0, 0.0]]))[0], 2.0 * np.eye(2))


def test_eval_coefficients_odd_drift() -> None:
    field = _example54()
    q, f = eval_coefficients(field, 0.5, np.array([[1.0], [-1.0], [0.5]]))
    np.testing.assert_allclose(q[:, 0, 0], [1.0, 1.0, 1.0])
    np.testing.assert_allclose(f[:, 0], [-1.0, 1.0, -0.125])


def test_eval_coefficients_rejects_non_finite_values() -> None:
    field = CoefficientField(
        d=1,
        diffusion=constant_matrix(1.0),
        drift=lambda t, x: np.full_like(x, np.inf),
        eta=1.0,
    )
    with pytest.raises(CoefficientEvaluationError) as excinfo:
        eval_coefficients(field, 0.2, np.array([[1.0]]))
    assert excinfo.value.t == 0.2


def test_spatial_divergence() -> None:
    constant = _example54()
    assert spatial_divergence(constant, 0.0, np.array([[3.0]]), 0)[0] == 0.0

    def q1(t: float, x: np.ndarray) -> np.ndarray:
        return (1.0 + x[..., 0] ** 2)[..., None, None] * np.ones((1, 1))

    numeric = CoefficientField(d=1, diffusion=q1, drift=lambda t, x: np.zeros_like(x), eta=1.0)
    assert spatial_divergence(numeric, 0.0, np.array([[3.0]]), 0)[0] == pytest.approx(6.0, rel=1e-6)

    planar = _example54(d=2, m=2.0)
    assert spatial_divergence(planar, 0.0, np.array([[1.0, 1.0]]), 0)[0] == pytest.approx(2.0)


def test_growth_params_domain() -> None:
    with pytest.raises(ParameterDomainError):
        GrowthParams(m=0.0, p=1.0, Lambda=1.0, kappa=1.0, K=1.0)
    with pytest.raises(ParameterDomainError):
        GrowthParams(m=0.0, p=3.0, Lambda=1.0, kappa=1.0, K=0.5)
    assert GrowthParams(m=0.0, p=3.0, Lambda=1.0, kappa=1.0, K=1.0).alpha_threshold == 2.0


def test_shell_grid_points_include_origin() -> None:
    grid = ShellGrid.build(1, [0.0, 0.5], 1.0, 0.5)
    np.testing.assert_allclose(grid.points()[:, 0], [0.0, 0.5, -0.5, 1.0, -1.0])
    assert default_directions(2).shape == (16, 2)
    assert grid.restrict_times(0.4, 1.0).times.tolist() == [0.5]


def test_example54_passes_every_condition() -> None:
    field = _example54()
    params = field.params
    assert params is not None
    grid = ShellGrid.build(1, np.linspace(0.0, 0.9, 4), 5.0, 0.1)
    report = check_hypotheses(field, params, grid)
    assert report.passed
    assert report.to_dict()["verdict"] == "pass"


def test_declared_ellipticity_too_large_fails() -> None:
    params = GrowthParams(m=0.0, p=3.0, Lambda=1.0, kappa=1.0, K=1.0)
    base = make_example54(1, params)
    field = CoefficientField(
        d=1,
        diffusion=constant_matrix(0.5),
        drift=base.drift,
        eta=1.0,
        diffusion_grad=lambda t, x: np.zeros(np.shape(x)[:-1] + (1, 1, 1)),
    )
    report = check_hypotheses(field, params, ShellGrid.build(1, [0.0], 2.0, 0.5))
    ellipticity = report.condition("ellipticity")
    assert not ellipticity.passed
    assert ellipticity.worst_margin == pytest.approx(-0.5)


def test_repulsive_drift_violates_coercivity() -> None:
    params = GrowthParams(m=0.0, p=3.0, Lambda=1.0, kappa=1.0, K=1.0)
    field = CoefficientField(
        d=1,
        diffusion=constant_matrix(1.0),
        drift=lambda t, x: (np.linalg.norm(x, axis=-1) ** 2)[..., None] * x,
        eta=1.0,
        diffusion_grad=lambda t, x: np.zeros(np.shape(x)[:-1] + (1, 1, 1)),
    )
    grid = ShellGrid(
        times=np.array([0.0]),
        radii=np.array([1.0]),
        directions=np.array([[1.0], [-1.0]]),
        include_origin=False,
    )
    coercive = check_hypotheses(field, params, grid).condition("drift_coercive_B2B3")
    assert not coercive.passed
    assert coercive.worst_violation == pytest.approx(2.0)
