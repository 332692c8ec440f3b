import numpy as np
import pytest

from kolmogorov_lab.bounds.envelope import (
    brownian_envelope,
    canonical_window,
    envelope_exponents,
    eval_envelope,
    kernel_envelope,
)
from kolmogorov_lab.bounds.rhs import general_bound_rhs, main_bounded_rhs
from kolmogorov_lab.bounds.tails import fit_tail_decay, verify_envelope_domination
from kolmogorov_lab.bounds.weights import (
    WeightSystem,
    check_epsilons,
    localized_constants,
    power_exp_sup,
    r_exponents,
    weight_constants,
)
from kolmogorov_lab.density.field import SpatialGrid
from kolmogorov_lab.density.oracles import brownian_density, tabulate_oracle
from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.lyapunov.derive import derive_static
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import GrowthParams, make_example54

WINDOW = (0.1, 0.2, 0.5, 0.75)
PARAMS = GrowthParams(m=0.0, p=3.0, Lambda=1.0, kappa=1.0, K=1.0)


def _heat_family():
    grid = SpatialGrid.build([[-4.0, 4.0]], 161)

    def heat(gap: float, y: np.ndarray) -> np.ndarray:
        return brownian_density(gap, np.zeros(1), y, 0.5)

    return tabulate_oracle(heat, grid, [0.5, 0.75], 1.0, np.zeros(1), "brownian")


def test_envelope_exponents() -> None:
    assert envelope_exponents(3.0, 0.0, 2.5, 4.0) == pytest.approx((-6.5, -5.5))
    assert envelope_exponents(3.0, 2.0, 1.5, 4.0) == pytest.approx((-8.0, -10.0))
    with pytest.raises(ParameterDomainError, match="alpha"):
        envelope_exponents(3.0, 0.0, 2.0, 4.0)
    with pytest.raises(ParameterDomainError, match="d\\+2"):
        envelope_exponents(3.0, 0.0, 2.5, 3.0, d=1)


def test_kernel_envelope_default_rate() -> None:
    env = kernel_envelope(PARAMS, 2.5, 4.0, 1)
    assert env.delta0 == pytest.approx(0.2)
    assert env.beta == 4.0
    with pytest.raises(ParameterDomainError):
        kernel_envelope(PARAMS, 2.5, 4.0, 1, delta0=0.25)


def test_brownian_envelope_is_the_heat_kernel() -> None:
    env = brownian_envelope(0.5, 1)
    expected = brownian_density(0.5, np.zeros(1), np.array([[0.3]]), 0.5)[0]
    assert float(eval_envelope(env, 1.0, 0.5, 0.3)) == pytest.approx(expected)
    assert float(eval_envelope(env, 0.5, 0.0, np.array([0.3]))) == pytest.approx(expected)
    with pytest.raises(ParameterDomainError):
        eval_envelope(env, 0.5, 0.5, 0.3)


def test_canonical_window() -> None:
    assert canonical_window(0.5, 1.0) == pytest.approx((0.25, 2.0 / 3.0, 0.75))
    with pytest.raises(ParameterDomainError):
        canonical_window(0.0, 1.0)


def test_fit_tail_decay_recovers_rate() -> None:
    grid = SpatialGrid.build([[-2.0, 2.0]], 401)
    rho = np.exp(-1.5 * grid.points()[:, 0] ** 4)
    fit = fit_tail_decay(rho, grid, 4.0)
    assert fit.delta_hat == pytest.approx(1.5, rel=1e-6)
    assert fit.residual < 1e-8
    assert fit.n_points >= 8


def test_heat_kernel_is_dominated_by_its_envelope() -> None:
    report = verify_envelope_domination(_heat_family(), brownian_envelope(0.5, 1))
    assert report.passed
    assert report.fit_gap == pytest.approx(0.5)
    assert report.envelope.c_tilde == pytest.approx(0.5 / np.sqrt(2.0 * np.pi), rel=1e-9)
    assert [e.gap for e in report.entries] == pytest.approx([0.25, 0.5])


def test_domination_fails_when_a_slice_is_inflated() -> None:
    family = _heat_family()
    family.values[1] *= 2.0
    report = verify_envelope_domination(family, brownian_envelope(0.5, 1))
    assert not report.passed
    assert report.worst_factor == pytest.approx(2.0)
    assert report.to_dict()["status"] == "fail"


def test_rhs_all_ones() -> None:
    ws = WeightSystem.from_constants([1.0] * 8, 4, WINDOW)
    general = general_bound_rhs(ws, 1.0, 1.0, 1.0, 1.0)
    assert general.total == 65807.0
    assert general.terms["int_zeta1_squared"] == 65540.0
    assert main_bounded_rhs(ws, 1.0, 1.0, 1.0, 1.0).total == 65804.0
    assert general_bound_rhs(ws, 1.0, 1.0, 1.0, 2.0).total == 2.0 * 65807.0


def test_rhs_single_term() -> None:
    ws = WeightSystem.from_constants({"c1": 1.0}, 4, WINDOW)
    bound = general_bound_rhs(ws, 1.0, 0.0, 0.0, 1.0)
    assert bound.total == 1.0
    assert bound.terms["sup_zeta1"] == 1.0


def test_rhs_input_domain() -> None:
    ws = WeightSystem.from_constants([1.0] * 8, 4, WINDOW)
    with pytest.raises(ParameterDomainError):
        general_bound_rhs(ws, -1.0, 1.0, 1.0, 1.0)
    flat = WeightSystem.from_constants([1.0] * 8, 4, (0.1, 0.2, 0.5, 0.5))
    with pytest.raises(ParameterDomainError):
        main_bounded_rhs(flat, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ParameterDomainError):
        WeightSystem.from_constants([1.0] * 7, 4, WINDOW)


def test_constant_helpers() -> None:
    ones = {"c1": 1.0, "c2": 1.0, "c3": 1.0, "c5": 1.0, "c7": 1.0, "c8": 1.0}
    assert localized_constants(ones, 1.0) == (2.0, 2.0, 5.0)
    assert r_exponents(PARAMS, 2.5, 4.0)["c6"] == pytest.approx(7.5)
    assert r_exponents(PARAMS, 2.5, 4.0)["c4"] == 1.0
    assert power_exp_sup(1.0, 1.0, 1.0) == pytest.approx(np.exp(-1.0))
    assert check_epsilons((0.01, 0.02, 0.1), 0.2, 4.0) == (0.01, 0.02, 0.1)
    with pytest.raises(ParameterDomainError):
        check_epsilons((0.01, 0.05, 0.1), 0.2, 4.0)


def test_weight_constants_for_example54() -> None:
    field = make_example54(1, PARAMS)
    grid = ShellGrid.build(1, np.linspace(0.0, 0.9, 10), 3.0, 0.25)
    static = derive_static(field, PARAMS, 0.8, grid)
    system = weight_constants(
        field, PARAMS, static, (0.02, 0.04, 0.18), 2.5, 4.0, (0.25, 0.5, 2.0 / 3.0, 0.75), grid
    )
    values = np.array(list(system.constants.values()))
    assert np.all(np.isfinite(values)) and np.all(values >= 0.0)
    assert system.constants["c1"] >= 1.0
    assert system.constants["c5"] == 0.0
    assert system.ordering_holds
    assert system.sigma == pytest.approx(0.1)
    assert system.c0 >= 1.0
    assert system.analytic_c2 is not None and np.isfinite(system.analytic_c2)
    assert system.to_dict()["window"]["b0"] == 0.75
