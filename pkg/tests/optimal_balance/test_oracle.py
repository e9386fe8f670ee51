import numpy as np
from django.test import SimpleTestCase

from optimal_balance.exceptions import ResonanceError
from optimal_balance.integrate import default_step
from optimal_balance.integrate import solve_fixed_step
from optimal_balance.integrate import time_grid
from optimal_balance.model import OscillatorSpec
from optimal_balance.model import oscillator_field
from optimal_balance.oracle import oscillator_balanced_pT
from optimal_balance.oracle import oscillator_exact_slow
from optimal_balance.oracle import oscillator_ibp_remainder
from optimal_balance.oracle import oscillator_integrated_pT
from optimal_balance.oracle import oscillator_nudge
from optimal_balance.ramp import RampKind
from optimal_balance.ramp import RampSpec
from optimal_balance.ramp import make_exp_ramp
from optimal_balance.ramp import make_poly_ramp
from tests.optimal_balance.utils import EPS_GRID
from tests.optimal_balance.utils import log_log_slope

SINGLE_MODE = OscillatorSpec(modes=((1, 1 + 0j),))
NO_MODES = OscillatorSpec(modes=())
SWITCHED_OFF = RampSpec(kind=RampKind.POLYNOMIAL, order=0, coefficients=(0.0,))
ALWAYS_ON = RampSpec(kind=RampKind.POLYNOMIAL, order=0, coefficients=(1.0,))


def slow_manifold_distance(ramp, eps, theta_star=0.0):
    balanced = oscillator_balanced_pT(SINGLE_MODE, ramp, eps, 1.0, theta_star)

    return abs(balanced - oscillator_exact_slow(SINGLE_MODE, eps, theta_star))


class ExactSlowTests(SimpleTestCase):
    def test_single_mode_value(self):
        self.assertAlmostEqual(oscillator_exact_slow(SINGLE_MODE, 0.1, 0.0), 1j / 9, delta=1e-15)

    def test_it_vanishes_without_modes(self):
        self.assertEqual(oscillator_exact_slow(NO_MODES, 0.1, 1.3), 0j)

    def test_it_vanishes_as_eps_shrinks(self):
        osc = OscillatorSpec.inverse_square()

        self.assertLess(abs(oscillator_exact_slow(osc, 1e-6, 0.4)), 1e-5)

    def test_it_guards_resonances(self):
        with self.assertRaises(ResonanceError):
            oscillator_exact_slow(OscillatorSpec.inverse_square(), 0.5, 0.0)


    def test_unramped_motion_stays_on_it(self):
        eps, theta_0 = 0.1, 0.3
        start = np.array([theta_0, oscillator_exact_slow(SINGLE_MODE, eps, theta_0) / eps], dtype=complex)
        grid = time_grid(1.0, default_step(eps, kappa=80))

        _, states = solve_fixed_step(oscillator_field(SINGLE_MODE, ALWAYS_ON, eps, 1.0), start, grid, store=True)

        for theta, p in states:
            self.assertAlmostEqual(eps * p, oscillator_exact_slow(SINGLE_MODE, eps, theta.real), delta=1e-8)


class BalancedValueTests(SimpleTestCase):
    def test_it_vanishes_without_forcing(self):
        self.assertEqual(oscillator_balanced_pT(SINGLE_MODE, SWITCHED_OFF, 0.1, 1.0, 0.0), 0j)
        self.assertEqual(oscillator_balanced_pT(NO_MODES, make_poly_ramp(2), 0.1, 1.0, 0.0), 0j)

    def test_quadrature_is_self_consistent(self):
        osc = OscillatorSpec.inverse_square()

        for eps in EPS_GRID:
            single = oscillator_balanced_pT(osc, make_poly_ramp(2), eps, 1.0, 0.7)
            double = oscillator_balanced_pT(osc, make_poly_ramp(2), eps, 1.0, 0.7, multiplier=2)
            self.assertLessEqual(abs(single - double), 1e-10)

    def test_it_matches_runge_kutta(self):
        osc = OscillatorSpec.inverse_square()

        quadrature = oscillator_balanced_pT(osc, make_poly_ramp(2), 0.1, 1.0, 0.3)
        integrated = oscillator_integrated_pT(osc, make_poly_ramp(2), 0.1, 1.0, 0.3, kappa=80)

        self.assertLessEqual(abs(quadrature - integrated), 1e-8)

    def test_integration_by_parts_identity(self):
        for ramp in (make_poly_ramp(1), make_poly_ramp(2), make_exp_ramp()):
            for eps in (0.1, 0.025):
                with self.subTest(ramp=ramp.label, eps=eps):
                    balanced = oscillator_balanced_pT(SINGLE_MODE, ramp, eps, 1.0, 0.2)
                    slow = oscillator_exact_slow(SINGLE_MODE, eps, 0.2)
                    remainder = oscillator_ibp_remainder(SINGLE_MODE, ramp, eps, 1.0, 0.2)
                    self.assertLessEqual(abs(balanced - slow - remainder), 1e-8)

    def test_distance_to_the_slow_manifold_follows_the_ramp_order(self):
        eps = np.array(EPS_GRID)

        for n in (1, 2):
            errors = [slow_manifold_distance(make_poly_ramp(n), e) for e in eps]
            self.assertGreaterEqual(log_log_slope(eps, errors), n + 1 - 0.3, msg=f"poly:{n}")

    def test_exponential_ramp_beats_every_algebraic_rate_shown(self):
        coarse, fine = 0.1, 0.00625
        ratio = slow_manifold_distance(make_exp_ramp(), fine) / slow_manifold_distance(make_exp_ramp(), coarse)

        self.assertLess(ratio, (fine / coarse) ** 3)

    def test_it_rejects_bad_scales(self):
        with self.assertRaises(ValueError):
            oscillator_balanced_pT(SINGLE_MODE, make_poly_ramp(1), 0.0, 1.0, 0.0)


class OscillatorNudgingTests(SimpleTestCase):
    def test_it_converges_in_one_cycle(self):
        osc = OscillatorSpec.inverse_square()
        ramp = make_poly_ramp(2)

        result = oscillator_nudge(osc, ramp, 0.1, 1.0, 0.3, p0=0.5 - 0.2j, kappa=200)

        self.assertTrue(result.converged)
        self.assertEqual(result.cycles, 2)
        p1, p2 = result.iterates[1][0], result.iterates[2][0]
        self.assertLessEqual(abs(p2 - p1), 1e-10)
        self.assertLessEqual(abs(p1 - oscillator_balanced_pT(osc, ramp, 0.1, 1.0, 0.3)), 1e-8)

    def test_it_turns_around_at_the_shifted_angle(self):
        result = oscillator_nudge(SINGLE_MODE, make_poly_ramp(1), 0.1, 1.0, 0.3, max_iter=1)

        self.assertAlmostEqual(result.turnaround, 0.3 - 1.0, delta=1e-12)

    def test_no_forcing_gives_zero(self):
        result = oscillator_nudge(NO_MODES, make_poly_ramp(1), 0.1, 1.0, 0.0, p0=1.0)

        self.assertEqual(result.iterates[1][0], 0j)
