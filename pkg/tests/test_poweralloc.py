import numpy as np
import pytest

from jcsim.poweralloc import (
    AllocationInfeasibleError,
    PowerAllocation,
    RadarSirCoefficients,
    feasibility,
    max_min_allocate,
    uniform_allocate,
)
from jcsim.rate import RateCoefficients, sinr
from oracles import grid_search_max_min


def make_coeffs(signal_gain, interference, radar_leakage, noise_var=1.0):
    k = len(signal_gain)
    return RateCoefficients(
        signal_gain=np.asarray(signal_gain, dtype=float),
        interference=np.asarray(interference, dtype=float).reshape(k, k),
        radar_leakage=np.asarray(radar_leakage, dtype=float),
        noise_var=noise_var,
        bandwidth=1e6,
        tau_c=200,
        tau_p=k,
    )


def random_instance(rng, k=3):
    signal = 10.0 ** rng.uniform(0.0, 2.0, size=k)
    xi = rng.uniform(0.1, 1.0, size=(k, k))
    zeta = rng.uniform(0.1, 1.0, size=k)
    coeffs = make_coeffs(signal, xi, zeta, noise_var=rng.uniform(0.5, 2.0))
    sir = RadarSirCoefficients(
        radar_gain=rng.uniform(1.0, 10.0), user_gains=rng.uniform(0.1, 1.0, size=k)
    )
    rho_star = rng.uniform(0.2, 2.0)
    return coeffs, sir, rho_star


class TestUniformAllocate:
    def test_table_scale_example(self):
        alloc = uniform_allocate(2.0, 1.0, n_users=10, n_subcarriers=512, n_symbols=14)
        np.testing.assert_allclose(alloc.eta_users, 2.0 / 71_680, rtol=1e-12)
        assert np.isclose(alloc.eta_radar, 2.0 / 7168, rtol=1e-12)

    def test_unit_ratio_radar_power(self):
        alloc = uniform_allocate(2.0, 1.0, n_users=4, n_subcarriers=64, n_symbols=14)
        assert np.isclose(alloc.eta_radar, 2.0 / (64 * 14), rtol=1e-12)

    def test_double_ratio_radar_power(self):
        alloc = uniform_allocate(2.0, 2.0, n_users=4, n_subcarriers=64, n_symbols=14)
        assert np.isclose(alloc.eta_radar, 4.0 / (64 * 14), rtol=1e-12)
        assert np.isclose(alloc.total, alloc.budget, rtol=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            uniform_allocate(0.0, 1.0, 4, 64, 14)
        with pytest.raises(ValueError):
            uniform_allocate(2.0, -1.0, 4, 64, 14)


class TestFeasibility:
    def test_zero_target_zero_ratio(self):
        coeffs = make_coeffs([1.0], [[0.1]], [0.2])
        sir = RadarSirCoefficients(radar_gain=1.0, user_gains=np.array([0.5]))
        point = feasibility(coeffs, sir, budget=1.0, rho_star=0.0, t=0.0)
        np.testing.assert_allclose(point, 0.0)

    def test_single_user_upper_bound_infeasible(self):
        coeffs = make_coeffs([4.0], [[0.5]], [0.0], noise_var=1.0)
        sir = RadarSirCoefficients(radar_gain=1.0, user_gains=np.array([0.0]))
        budget = 2.0
        t_star = 4.0 * budget / (0.5 * budget + 1.0)
        assert feasibility(coeffs, sir, budget, 0.0, 1.01 * t_star) is None
        point = feasibility(coeffs, sir, budget, 0.0, 0.99 * t_star)
        assert point is not None

    def test_monotone_in_target(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            coeffs, sir, rho = random_instance(rng)
            budget = 1.0
            alloc = max_min_allocate(coeffs, sir, budget, rho)
            t_star = alloc.achieved_t
            for frac in (0.1, 0.5, 0.9):
                assert feasibility(coeffs, sir, budget, rho, frac * t_star) is not None
            assert feasibility(coeffs, sir, budget, rho, 1.5 * t_star) is None

    def test_returned_point_satisfies_constraints(self):
        rng = np.random.default_rng(22)
        coeffs, sir, rho = random_instance(rng)
        alloc = max_min_allocate(coeffs, sir, 1.0, rho)
        point = feasibility(coeffs, sir, 1.0, rho, 0.9 * alloc.achieved_t)
        eta_radar, eta_users = point[0], point[1:]
        s = sinr(coeffs, (eta_users, eta_radar))
        assert np.all(s >= 0.9 * alloc.achieved_t * (1.0 - 1e-6))
        assert eta_users.sum() + eta_radar <= 1.0 + 1e-9
        lhs = eta_radar * sir.radar_gain
        rhs = rho * (sir.user_gains @ eta_users)
        assert lhs >= rhs * (1.0 - 1e-6)


class TestMaxMinAllocate:
    def test_symmetric_instance_equal_powers(self):
        xi = np.full((3, 3), 0.2) + 0.3 * np.eye(3)
        coeffs = make_coeffs([5.0, 5.0, 5.0], xi, [0.1, 0.1, 0.1])
        sir = RadarSirCoefficients(radar_gain=1.0, user_gains=np.zeros(3))
        alloc = max_min_allocate(coeffs, sir, budget=1.0, rho_star=0.0)
        np.testing.assert_allclose(
            alloc.eta_users, alloc.eta_users.mean(), rtol=1e-4
        )

    def test_single_user_full_budget(self):
        coeffs = make_coeffs([4.0], [[0.5]], [0.3], noise_var=1.0)
        sir = RadarSirCoefficients(radar_gain=1.0, user_gains=np.array([0.0]))
        budget = 2.0
        alloc = max_min_allocate(coeffs, sir, budget, rho_star=0.0)
        assert alloc.eta_users[0] >= budget * (1.0 - 1e-5)
        t_full = 4.0 * budget / (0.5 * budget + 1.0)
        assert np.isclose(alloc.achieved_t, t_full, rtol=1e-5)

    def test_budget_saturated(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            coeffs, sir, rho = random_instance(rng)
            alloc = max_min_allocate(coeffs, sir, 1.0, rho)
            assert np.isclose(alloc.total, 1.0, rtol=1e-6)

    def test_sir_constraint_holds(self):
        rng = np.random.default_rng(24)
        for _ in range(5):
            coeffs, sir, rho = random_instance(rng)
            alloc = max_min_allocate(coeffs, sir, 1.0, rho)
            lhs = alloc.eta_radar * sir.radar_gain
            rhs = rho * (sir.user_gains @ alloc.eta_users)
            assert lhs >= rhs * (1.0 - 1e-6)

    def test_dominates_uniform_min_sinr(self):
        rng = np.random.default_rng(25)
        for _ in range(5):
            coeffs, sir, rho = random_instance(rng)
            alloc = max_min_allocate(coeffs, sir, 1.0, rho)
            # A uniform split honoring the SIR constraint with equality.
            ratio = rho * sir.user_gains.mean() / sir.radar_gain
            eta_u = np.full(3, 1.0 / (3.0 + 3.0 * ratio))
            eta_r = 1.0 - eta_u.sum()
            uni_min = np.min(sinr(coeffs, (eta_u, eta_r)))
            assert alloc.achieved_t >= uni_min * (1.0 - 1e-6)

    def test_matches_grid_search_oracle(self):
        rng = np.random.default_rng(26)
        for _ in range(3):
            coeffs, sir, rho = random_instance(rng)
            alloc = max_min_allocate(coeffs, sir, 1.0, rho)
            t_grid, _, _ = grid_search_max_min(coeffs, sir, 1.0, rho, step=2e-3)
            assert abs(alloc.achieved_t - t_grid) <= 0.01 * alloc.achieved_t

    def test_infeasible_radar_constraint(self):
        coeffs = make_coeffs([1.0], [[0.1]], [0.2])
        sir = RadarSirCoefficients(radar_gain=0.0, user_gains=np.array([1.0]))
        with pytest.raises(AllocationInfeasibleError):
            max_min_allocate(coeffs, sir, budget=1.0, rho_star=1.0)

    def test_explicit_tolerance_respected(self):
        rng = np.random.default_rng(27)
        coeffs, sir, rho = random_instance(rng)
        loose = max_min_allocate(coeffs, sir, 1.0, rho, tol_eps=0.5)
        tight = max_min_allocate(coeffs, sir, 1.0, rho)
        assert tight.achieved_t >= loose.achieved_t - 0.5


class TestPowerAllocation:
    def test_rejects_negative_and_over_budget(self):
        with pytest.raises(ValueError):
            PowerAllocation(eta_users=np.array([-0.1]), eta_radar=0.0, budget=1.0)
        with pytest.raises(ValueError):
            PowerAllocation(eta_users=np.array([0.9]), eta_radar=0.2, budget=1.0)

    def test_sir_gains_validation(self):
        with pytest.raises(ValueError):
            RadarSirCoefficients(radar_gain=-1.0, user_gains=np.array([0.0]))
