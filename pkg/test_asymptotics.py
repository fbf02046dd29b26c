#!/usr/bin/env python
"""
Tests for the power-law fit, the l0 estimate, the integral identity and the
conserved quantity at beta = -1
"""

import os
import sys
import unittest

import numpy as np
import numpy.testing as npt

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from errors import DomainError, InsufficientData, ParameterError  # noqa: E402
from ode import (OdeState, Params, Trajectory, exact_solution,  # noqa: E402
                 integrate)
from asymptotics import (asymptotic_report, energy_drift,  # noqa: E402
                         estimate_l0, fit_power_law, identity_residual,
                         is_non_increasing, window_sensitivity)


def _power_law(t, c=3.0, p=0.4):
    f = c * t**p
    return Trajectory.from_samples(t, f, p * f / t, p * (p - 1) * f / t**2)


class TestPowerLaw(unittest.TestCase):

    def test_exact_fit(self):
        fit = fit_power_law(_power_law(np.geomspace(1.0, 100.0, 50)))
        npt.assert_allclose([fit.c_hat, fit.p_hat], [3.0, 0.4], rtol=1e-10)
        self.assertLess(fit.rms_log_error, 1e-12)

    def test_explicit_window(self):
        trajectory = _power_law(np.geomspace(1.0, 100.0, 50))
        fit = fit_power_law(trajectory, (1.0, 10.0))
        npt.assert_allclose(fit.p_hat, 0.4)
        with self.assertRaises(DomainError):
            fit_power_law(trajectory, (0.5, 10.0))
        with self.assertRaises(DomainError):
            fit_power_law(trajectory, (10.0, 10.0))

    def test_too_few_samples(self):
        with self.assertRaises(InsufficientData):
            fit_power_law(_power_law(np.geomspace(1.0, 100.0, 10)))

    def test_sensitivity(self):
        rows = window_sensitivity(_power_law(np.geomspace(1.0, 1e4, 400)))
        self.assertEqual(len(rows), 5)
        npt.assert_allclose([p for _, _, p in rows], 0.4)


class TestL0(unittest.TestCase):

    def test_sqrt_growth(self):
        # f = sqrt(2 (1 + t)) has f f' = 1
        t = np.linspace(0.0, 100.0, 101)
        f = np.sqrt(2 * (1 + t))
        estimate = estimate_l0(Trajectory.from_samples(t, f, 1 / f,
                                                       -1 / f**3), -1.0)
        npt.assert_allclose(estimate.curve, 1.0)
        self.assertEqual(estimate.branch, 1)

    def test_negative_branch(self):
        # psi = f' (-f)^-beta on the mirrored curve
        t = np.linspace(1.0, 100.0, 100)
        trajectory = _power_law(t)
        mirrored = Trajectory.from_samples(t, -trajectory.f, -trajectory.fp,
                                           -trajectory.fpp)
        plus = estimate_l0(trajectory, -0.5)
        minus = estimate_l0(mirrored, -0.5)
        self.assertEqual(minus.branch, -1)
        npt.assert_allclose(minus.curve, -plus.curve)

    def test_sign_change(self):
        t = np.linspace(0.0, 4.0, 9)
        trajectory = Trajectory.from_samples(t, t - 2, np.ones_like(t),
                                             np.zeros_like(t))
        with self.assertRaises(DomainError):
            estimate_l0(trajectory, -1.0, t_from=0.0)

    def test_non_increasing(self):
        self.assertTrue(is_non_increasing(np.array([3.0, 2.0, 2.0, 1.0])))
        self.assertFalse(is_non_increasing(np.array([3.0, 2.0, 2.5])))
        self.assertTrue(is_non_increasing(np.array([1.0, 1.0 + 1e-11]),
                                          atol=0.0, rtol=1e-10))


class TestIdentity(unittest.TestCase):

    def test_bounded_solution(self):
        # the truncated identity equals the boundary term at t_end
        beta = -0.5
        trajectory = integrate(exact_solution(1.0, beta),
                               Params(beta=beta, t_max=50.0),
                               dense=True)
        end = trajectory.final
        boundary = end.f**(-beta - 1) * end.fpp + end.f**(-beta) * end.fp
        values = identity_residual(trajectory, beta, [10.0, 20.0, 40.0])
        npt.assert_allclose(values, boundary, atol=2e-5)

    def test_s_outside(self):
        trajectory = _power_law(np.geomspace(1.0, 100.0, 50))
        with self.assertRaises(DomainError):
            identity_residual(trajectory, -0.5, [200.0])


class TestEnergy(unittest.TestCase):

    def test_only_beta_minus_one(self):
        trajectory = _power_law(np.geomspace(1.0, 100.0, 50))
        with self.assertRaises(ParameterError):
            energy_drift(trajectory, -0.5)


class TestReport(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        # f'' + f f' = 1 along the run: f ~ sqrt(2 t)
        cls.trajectory = integrate(OdeState(0.0, 0.0, 1.0, 1.0),
                                   Params(beta=-1.0, t_max=2e3), dense=True)
        cls.report = asymptotic_report(cls.trajectory, -1.0)

    def test_exponent(self):
        self.assertEqual(self.report.p_theory, 0.5)
        npt.assert_allclose(self.report.p_hat, 0.5, rtol=0.02)

    def test_prefactor(self):
        npt.assert_allclose(self.report.l0_hat, 1.0, rtol=1e-3)
        npt.assert_allclose(self.report.c_hat, self.report.c_from_l0,
                            rtol=0.05)
        npt.assert_allclose(self.report.c_hat, np.sqrt(2.0), rtol=0.05)

    def test_energy(self):
        e0 = self.report.energy_e0
        npt.assert_allclose(e0, 1.0)
        self.assertLessEqual(self.report.energy_drift, 1e-7 * (1 + abs(e0)))

    def test_identity(self):
        self.assertLessEqual(self.report.identity_stddev,
                             0.01 * abs(self.report.l0_hat))

    def test_phi_monotone(self):
        self.assertTrue(self.report.phi_monotone)
        self.assertGreater(self.report.t1, 0.0)

    def test_to_dict(self):
        report = self.report.to_dict()
        self.assertIn("energy_drift", report)
        self.assertEqual(report["window"][1], self.trajectory.t_end)

    def test_beta_too_large(self):
        with self.assertRaises(ParameterError):
            asymptotic_report(self.trajectory, 1.0)


class TestPowerLawRuns(unittest.TestCase):
    """ runs started on f = t^p, p = 1/(1 - beta), at t = 1 """

    STARTS = {-0.5: OdeState(1.0, 1.0, 2.0 / 3, -2.0 / 9),
              -2.0: OdeState(1.0, 1.0, 1.0 / 3, -2.0 / 9)}

    def _report(self, beta):
        trajectory = integrate(self.STARTS[beta],
                               Params(beta=beta, t_max=1e3), dense=True)
        return asymptotic_report(trajectory, beta)

    def test_reports(self):
        for beta in self.STARTS:
            with self.subTest(beta=beta):
                report = self._report(beta)
                npt.assert_allclose(report.p_hat, 1.0 / (1.0 - beta),
                                    rtol=0.02)
                npt.assert_allclose(report.c_hat, report.c_from_l0,
                                    rtol=0.05)
                self.assertLessEqual(report.identity_stddev,
                                     0.01 * abs(report.l0_hat))
                self.assertTrue(report.phi_monotone)
                self.assertIsNone(report.energy_drift)


if __name__ == '__main__':
    unittest.main()
