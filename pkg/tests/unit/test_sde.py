import numpy as np
import pytest

from kolmogorov_lab.errors import FactorizationError, ParameterDomainError
from kolmogorov_lab.lyapunov.functions import RateFunction, StaticLyapunov, TimeDependentLyapunov
from kolmogorov_lab.lyapunov.profile import smooth_radial_power
from kolmogorov_lab.operators.model import CoefficientField, brownian_field, constant_matrix, ou_field
from kolmogorov_lab.sde.engine import SimulationPlan, simulate_paths
from kolmogorov_lab.sde.factor import diffusion_factor
from kolmogorov_lab.sde.moments import MomentCurve, moment_curve, verify_moment_bound
from kolmogorov_lab.sde.streams import PathNoise, block_layout, path_generator


def _unit_weight() -> TimeDependentLyapunov:
    return TimeDependentLyapunov(
        profile=smooth_radial_power(2.0),
        epsilon=0.0,
        alpha=2.5,
        horizon=1.0,
        delta=0.1,
        h=RateFunction.zero(1.0),
        label="W",
    )


def test_diffusion_factor_squares_to_twice_q() -> None:
    np.testing.assert_allclose(diffusion_factor(np.eye(2)), np.sqrt(2.0) * np.eye(2))
    np.testing.assert_allclose(diffusion_factor(np.diag([2.0, 0.5])), np.diag([2.0, 1.0]))
    np.testing.assert_allclose(diffusion_factor(np.array([[[0.5]]])), [[[1.0]]])


def test_diffusion_factor_reports_leading_minor() -> None:
    with pytest.raises(FactorizationError) as excinfo:
        diffusion_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert excinfo.value.leading_minor == 2


def test_path_streams_depend_only_on_keys() -> None:
    first = path_generator(7, 1, 3).standard_normal(5)
    again = path_generator(7, 1, 3).standard_normal(5)
    other = path_generator(7, 1, 4).standard_normal(5)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)
    assert block_layout(10_000) == [(0, 4096), (4096, 8192), (8192, 10_000)]


def test_path_noise_ignores_block_bounds_and_chunking() -> None:
    wide = PathNoise(3, 2, 0, 8, 2, chunk=4)
    narrow = PathNoise(3, 2, 5, 7, 2, chunk=3)
    wide_steps = np.stack([wide.next_step(10 - k) for k in range(10)], axis=1)
    narrow_steps = np.stack([narrow.next_step(10 - k) for k in range(10)], axis=1)
    np.testing.assert_array_equal(wide_steps[5:7], narrow_steps)


def test_path_does_not_depend_on_path_count() -> None:
    def run(n_paths: int) -> np.ndarray:
        plan = SimulationPlan(
            field=brownian_field(1), s=0.0, t=0.5, x0=np.zeros(1), n_paths=n_paths, dt=0.05, seed=5
        )
        return simulate_paths(plan).terminal

    small, large = run(10), run(100)
    np.testing.assert_array_equal(small, large[:10])


@pytest.mark.parametrize("scheme", ["tamed-euler", "semi-implicit-drift", "euler"])
def test_non_finite_drift_counts_as_explosion(scheme: str) -> None:
    def drift(t: float, x: np.ndarray) -> np.ndarray:
        return np.where(np.abs(x) > 0.5, np.nan, 0.0)

    field = CoefficientField(d=1, diffusion=constant_matrix(0.5), drift=drift, eta=0.5)
    plan = SimulationPlan(
        field=field, s=0.0, t=0.1, x0=np.zeros(1), n_paths=200, dt=0.01, scheme=scheme, seed=3
    )
    ensemble = simulate_paths(plan)
    lost = ~np.all(np.isfinite(ensemble.terminal), axis=-1)
    assert 0 < ensemble.explosions < 200
    assert ensemble.explosions == int(lost.sum())
    assert ensemble.finite_terminal.shape[0] == 200 - ensemble.explosions


def test_plan_validation() -> None:
    field = brownian_field(1)
    with pytest.raises(ParameterDomainError):
        SimulationPlan(field=field, s=0.5, t=0.5, x0=np.zeros(1), n_paths=10)
    with pytest.raises(ParameterDomainError):
        SimulationPlan(field=field, s=0.0, t=0.5, x0=np.zeros(1), n_paths=10, scheme="milstein")
    plan = SimulationPlan(field=field, s=0.0, t=0.5, x0=np.zeros(1), n_paths=10, dt=0.3)
    assert plan.n_steps == 2
    assert plan.step == pytest.approx(0.25)


def test_brownian_moments() -> None:
    plan = SimulationPlan(
        field=brownian_field(1, 0.5), s=0.0, t=0.5, x0=np.zeros(1), n_paths=100_000, dt=0.05, seed=11
    )
    terminal = simulate_paths(plan).terminal[:, 0]
    se = np.sqrt(0.5 / terminal.size)
    assert abs(terminal.mean()) < 4.0 * se
    assert terminal.var() == pytest.approx(0.5, abs=0.01)


def test_ou_variance_after_log_two() -> None:
    gap = np.log(2.0)
    plan = SimulationPlan(
        field=ou_field(1, 1.0, 1.0), s=1.0 - gap, t=1.0, x0=np.zeros(1), n_paths=50_000, dt=1e-3, seed=5
    )
    terminal = simulate_paths(plan).terminal[:, 0]
    assert terminal.var() == pytest.approx(0.75, abs=0.02)


def test_simulation_is_identical_across_thread_counts() -> None:
    plan = SimulationPlan(
        field=ou_field(2, 1.0, 1.0), s=0.2, t=1.0, x0=np.array([0.5, -0.5]), n_paths=10_000, dt=0.01, seed=99
    )
    single = simulate_paths(plan, threads=1)
    pooled = simulate_paths(plan, threads=4)
    np.testing.assert_array_equal(single.terminal, pooled.terminal)
    assert single.path_keys.shape == (10_000, 3)
    assert single.path_keys[5000].tolist() == [99, 0, 5000]
    assert single.diagnostics()["explosions"] == 0


def test_stored_slices() -> None:
    plan = SimulationPlan(
        field=brownian_field(1), s=0.0, t=0.4, x0=np.zeros(1), n_paths=50, dt=0.1, store_every=2
    )
    ensemble = simulate_paths(plan)
    assert ensemble.slices is not None
    assert ensemble.slices.shape == (2, 50, 1)
    np.testing.assert_allclose(ensemble.slice_times, [0.2, 0.4])
    np.testing.assert_array_equal(ensemble.slices[-1], ensemble.terminal)


def test_moment_curve_for_unit_weight() -> None:
    curve = moment_curve(brownian_field(1), [_unit_weight()], [0.5, 1.0], 1.0, np.zeros(1), 1000, 3)
    np.testing.assert_allclose(curve.zeta[0], [1.0, 1.0])
    np.testing.assert_allclose(curve.se[0], [0.0, 0.0])
    assert curve.explosions == [0, 0]
    assert verify_moment_bound(curve, _unit_weight()).passed


def test_moment_bound_detects_excess() -> None:
    curve = MomentCurve(
        starts=np.array([0.5]),
        horizon=1.0,
        x0=np.zeros(1),
        labels=["W"],
        zeta=np.array([[2.0]]),
        se=np.array([[0.01]]),
    )
    report = verify_moment_bound(curve, _unit_weight())
    assert not report.passed
    assert report.entries[0].bound == 1.0
    assert report.to_dict()["status"] == "fail"


def test_moment_bound_checks_static_function() -> None:
    static = StaticLyapunov(profile=smooth_radial_power(2.0), delta=0.1, M=1.0, r_cert=1.0)
    curve = moment_curve(
        brownian_field(1), [_unit_weight()], [0.5], 1.0, np.zeros(1), 2000, 3, static=static
    )
    report = verify_moment_bound(curve, _unit_weight(), V=static, M=1.0)
    kinds = [e.kind for e in report.entries]
    assert kinds == ["W", "V"]
    assert report.entries[1].bound == pytest.approx(1.5)


def test_exploded_paths_make_moment_bound_inconclusive() -> None:
    curve = MomentCurve(
        starts=np.array([0.5]),
        horizon=1.0,
        x0=np.zeros(1),
        labels=["W"],
        zeta=np.array([[1.0]]),
        se=np.array([[0.0]]),
        explosions=[3],
    )
    report = verify_moment_bound(curve, _unit_weight())
    assert not report.passed
    assert report.entries[0].status == "inconclusive"
    assert report.to_dict()["status"] == "inconclusive"
    assert report.to_dict()["entries"][0]["explosions"] == 3


def test_moment_curve_keeps_exploded_paths() -> None:
    def drift(t: float, x: np.ndarray) -> np.ndarray:
        return np.where(np.abs(x) > 0.5, np.nan, 0.0)

    field = CoefficientField(d=1, diffusion=constant_matrix(0.5), drift=drift, eta=0.5)
    curve = moment_curve(field, [_unit_weight()], [0.9], 1.0, np.zeros(1), 200, 3, dt=0.01)
    assert curve.explosions[0] > 0
    assert curve.zeta[0, 0] == np.inf
    assert verify_moment_bound(curve, _unit_weight()).status == "inconclusive"
