import numpy as np
import pytest
from scipy.integrate import trapezoid

from kolmogorov_lab.density.compare import compare_densities
from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.density.fokker_planck import lyapunov_box_radius, solve_fokker_planck, start_time_family
from kolmogorov_lab.density.gamma import gamma_functional
from kolmogorov_lab.density.kde import kde_density, kde_slice
from kolmogorov_lab.density.oracles import (
    brownian_density,
    gaussian_exp_moment,
    ou_density,
    ou_gamma_raw,
    ou_mean_var,
    tabulate_oracle,
)
from kolmogorov_lab.errors import ConfigurationError, InputError, ParameterDomainError
from kolmogorov_lab.operators.model import CoefficientField, brownian_field, constant_matrix, ou_field
from kolmogorov_lab.sde.engine import SimulationPlan, simulate_paths


def _flat_density(times: list[float], box: list[list[float]]) -> DensityField:
    grid = SpatialGrid.build(box, 11)
    return DensityField(
        times=np.asarray(times),
        grid=grid,
        values=np.ones((len(times),) + grid.shape),
        provenance="oracle",
        horizon=1.0,
        x0=np.zeros(1),
        field_name="flat",
    )


def test_spatial_grid_quadrature() -> None:
    grid = SpatialGrid.build([[-1.0, 1.0], [0.0, 2.0]], [5, 3])
    assert grid.shape == (5, 3)
    assert grid.spacing == (0.5, 1.0)
    assert float(np.sum(grid.weights())) == pytest.approx(4.0)
    assert grid.integrate(np.ones(grid.shape)) == pytest.approx(4.0)
    with pytest.raises(InputError):
        SpatialGrid.build([[1.0, 0.0]], 5)


def test_density_field_validates_shape() -> None:
    grid = SpatialGrid.build([[0.0, 1.0]], 5)
    with pytest.raises(InputError):
        DensityField(
            times=np.array([0.1, 0.2]),
            grid=grid,
            values=np.ones((1, 5)),
            provenance="fd",
            horizon=1.0,
            x0=np.zeros(1),
            field_name="x",
        )
    with pytest.raises(InputError):
        DensityField(
            times=np.array([0.1]),
            grid=grid,
            values=np.ones((1, 5)),
            provenance="mc",
            horizon=1.0,
            x0=np.zeros(1),
            field_name="x",
        )


def test_oracle_closed_forms() -> None:
    mean, var = ou_mean_var(np.log(2.0), np.array([1.0]), 1.0, 1.0)
    assert mean[0] == pytest.approx(0.5)
    assert var == pytest.approx(0.75)

    y = np.linspace(-8.0, 8.0, 4001)[:, None]
    assert trapezoid(brownian_density(0.5, np.zeros(1), y, 0.5), y[:, 0]) == pytest.approx(1.0, abs=1e-8)
    assert ou_density(0.5, np.zeros(1), np.zeros((1, 1)))[0] == pytest.approx(
        1.0 / np.sqrt(2.0 * np.pi * (1.0 - np.exp(-1.0)))
    )

    assert gaussian_exp_moment(0.25, np.zeros(1), 1.0) == pytest.approx(np.sqrt(2.0))
    assert gaussian_exp_moment(0.5, np.zeros(1), 1.0) == float("inf")

    expected = 1.0 - (1.0 - np.exp(-2.0)) / 2.0
    assert ou_gamma_raw(1.0, 1.0, np.zeros(1), 1.0, 0.0, 1.0) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ParameterDomainError):
        ou_gamma_raw(1.0, 1.0, np.zeros(1), 1.0, 0.0, 1.0, k=3)
    with pytest.raises(ParameterDomainError):
        brownian_density(0.0, np.zeros(1), np.zeros((1, 1)))


def test_heat_equation_matches_closed_form() -> None:
    field = brownian_field(1, 0.5)
    fd = start_time_family(field, [0.5, 0.75], 1.0, np.zeros(1), [[-6.0, 6.0]], 1201, 1e-4)
    assert fd.meta["solves"] == 1
    np.testing.assert_allclose(fd.times, [0.5, 0.75])
    np.testing.assert_allclose(fd.mass(), [1.0, 1.0], atol=1e-6)

    def heat(gap: float, y: np.ndarray) -> np.ndarray:
        return brownian_density(gap, np.zeros(1), y, 0.5)

    oracle = tabulate_oracle(heat, fd.grid, [0.5, 0.75], 1.0, np.zeros(1), field.name)
    comparison = compare_densities(fd, oracle)
    assert not comparison.resampled
    assert comparison.sup < 5e-3
    assert comparison.times == [0.5, 0.75]


def test_ou_error_shrinks_under_grid_refinement() -> None:
    field = ou_field(1, 1.0, 1.0)
    starts = [0.5, 0.75]

    def ou(gap: float, y: np.ndarray) -> np.ndarray:
        return ou_density(gap, np.zeros(1), y)

    def sup_error(nx: int, dt: float) -> float:
        fd = start_time_family(field, starts, 1.0, np.zeros(1), [[-6.0, 6.0]], nx, dt)
        oracle = tabulate_oracle(ou, fd.grid, starts, 1.0, np.zeros(1), field.name)
        return compare_densities(fd, oracle).sup

    coarse = sup_error(241, 2e-4)
    fine = sup_error(481, 1e-4)
    assert fine < coarse
    assert coarse / fine >= 3.0


def test_reflecting_boundary_conserves_mass() -> None:
    density = solve_fokker_planck(
        ou_field(1, 1.0, 1.0), 0.0, 0.2, np.zeros(1), [[-2.0, 2.0]], 201, 1e-4, "reflecting"
    )
    assert density.time_role == "forward"
    np.testing.assert_allclose(density.mass(), 1.0, atol=1e-9)
    assert float(np.asarray(density.leakage)[-1]) < 1e-9
    assert np.all(density.values >= 0.0)


def test_absorbing_boundary_accounts_for_leaked_mass() -> None:
    density = solve_fokker_planck(brownian_field(1, 1.0), 0.0, 0.5, np.zeros(1), [[-1.0, 1.0]], 81, 1e-4)
    leakage = np.asarray(density.leakage)
    assert leakage[-1] > 0.1
    assert np.all(np.diff(leakage) >= -1e-12)
    np.testing.assert_allclose(density.mass() + leakage, 1.0, atol=1e-6)


def test_time_step_above_admissible_is_rejected() -> None:
    with pytest.raises(ConfigurationError) as excinfo:
        solve_fokker_planck(brownian_field(1, 0.5), 0.0, 0.1, np.zeros(1), [[-6.0, 6.0]], 1201, 1e-3)
    assert excinfo.value.admissible_dt == pytest.approx(1e-4)


def test_gamma_of_constant_drift_and_density() -> None:
    field = CoefficientField(
        d=1,
        diffusion=constant_matrix(1.0),
        drift=lambda t, x: np.full_like(np.asarray(x, dtype=float), 2.0),
        eta=1.0,
    )
    gamma = gamma_functional(_flat_density([0.2, 0.6], [[0.0, 2.5]]), field, 2, (0.2, 0.6))
    assert gamma.raw == pytest.approx(4.0)
    assert gamma.value == pytest.approx(2.0)

    interpolated = gamma_functional(_flat_density([0.1, 0.5, 0.9], [[0.0, 2.5]]), field, 2, (0.2, 0.6))
    assert interpolated.raw == pytest.approx(4.0)

    with pytest.raises(InputError):
        gamma_functional(_flat_density([0.2, 0.6], [[0.0, 2.5]]), field, 2, (0.1, 0.6))


def test_compare_identical_and_resampled() -> None:
    first = _flat_density([0.2, 0.6], [[0.0, 2.5]])
    same = compare_densities(first, first)
    assert (same.sup, same.l1, same.l2) == (0.0, 0.0, 0.0)

    coarse = DensityField(
        times=np.array([0.6]),
        grid=SpatialGrid.build([[0.0, 2.0]], 5),
        values=np.full((1, 5), 0.5),
        provenance="kde",
        horizon=1.0,
        x0=np.zeros(1),
        field_name="flat",
    )
    shifted = compare_densities(first, coarse)
    assert shifted.resampled
    assert shifted.times == [0.6]
    assert shifted.sup == pytest.approx(0.5)
    assert shifted.l1 == pytest.approx(1.0)


def test_kde_single_sample_peak() -> None:
    grid = SpatialGrid.build([[-2.0, 2.0]], 41)
    est, width, method = kde_slice(np.zeros((1, 1)), grid, 0.5)
    assert method == "exact"
    assert width.tolist() == [0.5]
    assert est[20] == pytest.approx(1.0 / (0.5 * np.sqrt(2.0 * np.pi)))


def test_kde_binned_matches_exact() -> None:
    samples = np.random.default_rng(4).standard_normal((2000, 1))
    grid = SpatialGrid.build([[-5.0, 5.0]], 201)
    exact, _, m1 = kde_slice(samples, grid, "scott")
    binned, _, m2 = kde_slice(samples, grid, "scott", exact_limit=0)
    assert (m1, m2) == ("exact", "binned")
    assert np.max(np.abs(exact - binned)) < 2e-3


def test_kde_density_orders_start_times() -> None:
    field = brownian_field(1, 0.5)
    ensembles = [
        simulate_paths(
            SimulationPlan(field=field, s=s, t=1.0, x0=np.zeros(1), n_paths=2000, dt=0.05, seed=1, stream_id=j)
        )
        for j, s in enumerate([0.75, 0.5])
    ]
    density = kde_density(ensembles, SpatialGrid.build([[-5.0, 5.0]], 101))
    assert density.provenance == "kde"
    np.testing.assert_allclose(density.times, [0.5, 0.75])
    np.testing.assert_allclose(density.mass(), [1.0, 1.0], atol=0.02)
    assert np.all(np.asarray(density.leakage) >= 0.0)


def test_lyapunov_box_radius() -> None:
    assert lyapunov_box_radius(1.0, 1.0, 2.0, 1.0, level=4.0) == pytest.approx(2.0)
    with pytest.raises(ParameterDomainError):
        lyapunov_box_radius(0.0, 1.0, 2.0, 1.0)
