import numpy as np
from django.test import SimpleTestCase

from optimal_balance.diagnostics import RateModel
from optimal_balance.diagnostics import SweepCell
from optimal_balance.diagnostics import default_series_order
from optimal_balance.diagnostics import fast_energy_trace
from optimal_balance.diagnostics import fit_algebraic_rate
from optimal_balance.diagnostics import fit_exponential_rate
from optimal_balance.diagnostics import local_orders
from optimal_balance.diagnostics import remainder_sup
from optimal_balance.diagnostics import sweep
from optimal_balance.integrate import IntegrationConfig
from optimal_balance.integrate import default_step
from optimal_balance.nudging import NudgingConfig
from optimal_balance.nudging import run_nudging
from optimal_balance.ramp import make_exp_ramp
from optimal_balance.ramp import make_poly_ramp
from tests.optimal_balance.utils import EPS_GRID
from tests.optimal_balance.utils import Q_STAR
from tests.optimal_balance.utils import free_system
from tests.optimal_balance.utils import log_log_slope
from tests.optimal_balance.utils import toy_system


def base_config(max_iter=12, **kwargs) -> NudgingConfig:
    options = {"eps": 0.1, "T": 1.0, "ramp": make_poly_ramp(2), "q_star": Q_STAR, "max_iter": max_iter}
    options.update(kwargs)

    return NudgingConfig(**options)


class RateFitTests(SimpleTestCase):
    def test_it_recovers_an_algebraic_rate(self):
        points = [(eps, 3.0 * eps**2) for eps in EPS_GRID]

        fit = fit_algebraic_rate(points)

        self.assertEqual(fit.model, RateModel.ALGEBRAIC)
        self.assertAlmostEqual(fit.slope, 2.0, delta=1e-12)
        self.assertAlmostEqual(fit.intercept, np.log(3.0), delta=1e-12)
        self.assertAlmostEqual(fit.r_squared, 1.0, delta=1e-12)

    def test_it_recovers_an_exponential_rate(self):
        points = [(eps, 5.0 * np.exp(-2.0 * np.cbrt(1.0 / eps))) for eps in EPS_GRID]

        fit = fit_exponential_rate(points, T=1.0)

        self.assertEqual(fit.model, RateModel.EXPONENTIAL)
        self.assertAlmostEqual(fit.rate, 2.0, delta=1e-10)
        self.assertAlmostEqual(fit.r_squared, 1.0, delta=1e-12)

    def test_it_tolerates_noise(self):
        rng = np.random.default_rng(42)
        eps = np.geomspace(0.1, 0.01, 8)
        points = list(zip(eps, eps**3 * np.exp(0.05 * rng.standard_normal(eps.size))))

        fit = fit_algebraic_rate(points)

        self.assertAlmostEqual(fit.slope, 3.0, delta=0.2)
        self.assertGreater(fit.r_squared, 0.95)

    def test_it_ignores_point_order(self):
        points = [(eps, eps**2 + eps**3) for eps in EPS_GRID]

        self.assertEqual(fit_algebraic_rate(points), fit_algebraic_rate(points[::-1]))

    def test_it_rejects_degenerate_input(self):
        with self.assertRaises(ValueError):
            fit_algebraic_rate([(0.1, 1.0), (0.05, 0.5)])

        with self.assertRaises(ValueError):
            fit_algebraic_rate([(0.1, 1.0), (0.1, 0.5), (0.1, 0.2)])

        with self.assertRaises(ValueError):
            fit_algebraic_rate([(0.1, 1.0), (0.05, -0.5), (0.025, 0.2)])

        with self.assertRaises(ValueError):
            fit_exponential_rate([(eps, eps) for eps in EPS_GRID], T=0.0)

    def test_it_floors_zero_residuals(self):
        fit = fit_algebraic_rate([(0.1, 1e-3), (0.05, 0.0), (0.025, 1e-5)])

        self.assertTrue(np.isfinite(fit.slope))
        self.assertTrue(0.0 <= fit.r_squared <= 1.0)

    def test_local_orders_run_from_large_to_small_eps(self):
        points = [(eps, eps**2 + 10 * eps**4) for eps in EPS_GRID]

        orders = local_orders(points)

        self.assertEqual(len(orders), len(EPS_GRID) - 1)
        self.assertTrue(np.all(np.diff(orders) < 0))
        self.assertAlmostEqual(orders[-1], 2.0, delta=0.05)


class SweepCellTests(SimpleTestCase):
    def test_fittable_cells(self):
        self.assertTrue(SweepCell(eps=0.1, T=1.0, ramp="poly:2", n=2, balance_residual=1e-3).fittable)
        self.assertFalse(SweepCell(eps=0.1, T=1.0, ramp="poly:2", n=2, balance_residual=0.0).fittable)

        failed = SweepCell(eps=0.1, T=1.0, ramp="poly:2", n=2, error="builtins.ValueError")
        self.assertTrue(failed.failed)
        self.assertFalse(failed.fittable)

    def test_default_series_order(self):
        self.assertEqual(default_series_order(make_poly_ramp(3), 0.01, 1.0), 3)
        self.assertEqual(default_series_order(make_exp_ramp(), 0.1, 1.0), 2)
        self.assertEqual(default_series_order(make_exp_ramp(), 0.0125, 1.0), 4)


class TrajectoryDiagnosticsTests(SimpleTestCase):
    def nudged_trajectory(self, eps, ramp=None):
        ramp = ramp or make_poly_ramp(2)
        integration = IntegrationConfig(step=default_step(eps), store_trajectory=True)
        cfg = base_config(eps=eps, ramp=ramp, max_iter=8, integration=integration)

        return run_nudging(toy_system(), cfg).last_forward

    def test_remainder_scales_along_the_nudged_trajectory(self):
        ramp = make_poly_ramp(2)
        eps = np.array(EPS_GRID)
        trajectories = [self.nudged_trajectory(e, ramp) for e in eps]

        for n in (1, 2):
            sups = [
                remainder_sup(toy_system(), ramp, 1.0, n, e, trajectory, stride=max(1, len(trajectory.times) // 20))
                for e, trajectory in zip(eps, trajectories)
            ]
            self.assertAlmostEqual(log_log_slope(eps, sups), n, delta=0.4, msg=f"n={n}")

    def test_fast_energy_starts_at_zero(self):
        trajectory = self.nudged_trajectory(0.05)

        energy = fast_energy_trace(toy_system(), make_poly_ramp(2), 1.0, 2, 0.05, trajectory)

        self.assertEqual(energy.shape, (len(trajectory.times),))
        self.assertTrue(np.all(energy >= 0))
        self.assertLessEqual(energy[0], 1e-20)


class SweepTests(SimpleTestCase):
    def test_free_system_leaves_nothing_to_fit(self):
        result = sweep(free_system(), base_config(), [0.1, 0.05, 0.025], [make_poly_ramp(2)], kappa=10)

        self.assertEqual(len(result.cells), 3)
        self.assertTrue(all(cell.balance_residual == 0.0 for cell in result.cells))
        self.assertTrue(result.fit_skipped)
        self.assertIsNone(result.fit)

    def test_polynomial_ramp_converges_algebraically(self):
        result = sweep(toy_system(), base_config(), list(EPS_GRID), [make_poly_ramp(2)])

        self.assertEqual([cell.eps for cell in result.cells], list(EPS_GRID))
        self.assertFalse(any(cell.failed for cell in result.cells))
        self.assertGreaterEqual(result.fit.slope, 1.7)
        for cell in result.cells:
            self.assertLessEqual(cell.plateau_residual, 1e-3)
            self.assertLessEqual(cell.plateau_residual, cell.balance_residual)

    def test_exponential_ramp_converges_faster_than_any_power_shown(self):
        result = sweep(toy_system(), base_config(ramp=make_exp_ramp()), list(EPS_GRID), [make_exp_ramp()])

        self.assertEqual(result.fit.model, RateModel.EXPONENTIAL)
        self.assertGreater(result.fit.rate, 0.0)
        self.assertGreaterEqual(result.fit.r_squared, 0.9)

        orders = local_orders([(cell.eps, cell.balance_residual) for cell in result.cells])
        self.assertEqual(len(orders), len(EPS_GRID) - 1)
        self.assertTrue(np.all(np.diff(orders) > 0), msg=f"local orders {orders}")
        for cell in result.cells:
            self.assertLessEqual(cell.plateau_residual, cell.balance_residual)

    def test_reruns_are_identical(self):
        first = sweep(toy_system(), base_config(max_iter=6), [0.1, 0.05, 0.025], [make_poly_ramp(2)], kappa=10)
        second = sweep(toy_system(), base_config(max_iter=6), [0.1, 0.05, 0.025], [make_poly_ramp(2)], kappa=10)

        self.assertEqual(first.cells, second.cells)
        self.assertEqual(first.fit, second.fit)

    def test_it_keeps_one_fit_per_ramp(self):
        ramps = [make_poly_ramp(1), make_poly_ramp(2)]

        result = sweep(toy_system(), base_config(max_iter=6), [0.1, 0.05, 0.025], ramps, kappa=10)

        self.assertEqual(list(result.fits), ["poly:1", "poly:2"])
        self.assertEqual([cell.ramp for cell in result.cells], ["poly:1"] * 3 + ["poly:2"] * 3)

    def test_failed_cells_are_recorded(self):
        result = sweep(toy_system(), base_config(max_iter=2), [0.1, 0.05, 0.025], [make_poly_ramp(2)], n_for_residual=9)

        self.assertTrue(all(cell.failed for cell in result.cells))
        self.assertEqual(result.cells[0].error, "optimal_balance.exceptions.SeriesOrderError")
        self.assertTrue(result.fit_skipped)

    def test_it_validates_the_grid(self):
        with self.assertRaises(ValueError):
            sweep(toy_system(), base_config(), [], [make_poly_ramp(2)])

        with self.assertRaises(ValueError):
            sweep(toy_system(), base_config(), [0.1], [make_poly_ramp(2), make_exp_ramp()])

        with self.assertRaises(ValueError):
            sweep(toy_system(), base_config(), [2.0], [make_poly_ramp(2)])
