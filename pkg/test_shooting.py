#!/usr/bin/env python
"""
Tests for the trajectory classifier, the shooting driver and the sweep
"""

import os
import sys
import unittest

import numpy as np
import numpy.testing as npt

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from errors import BracketNotFound, DomainError, ParameterError  # noqa: E402
from ode import (Params, Termination, Trajectory,  # noqa: E402
                 trajectory_from_exact)
from shooting import (BoundaryCondition, DecisiveStop, Family,  # noqa: E402
                      ScanGrid, SolutionTag, Thresholds, bounded_scan,
                      classify, shoot, sign_structure_report, sweep)


def _sqrt_growth(sign=1.0):
    """ f = sqrt(2 (1 + t)), a settled t^(1/2) growth up to t = 1e4 """
    t = np.linspace(0.0, 1e4, 4001)
    f = np.sqrt(2 * (1 + t))
    return Trajectory.from_samples(t, sign * f, sign / f, -sign / f**3)


class TestClassify(unittest.TestCase):

    def test_constant(self):
        trajectory = Trajectory.from_samples([0.0, 1.0, 2.0], [5, 5, 5],
                                             [0, 0, 0], [0, 0, 0])
        cls = classify(trajectory)
        self.assertEqual(cls.tag, SolutionTag.INDETERMINATE)
        self.assertTrue(cls.constant)

    def test_bounded(self):
        trajectory = trajectory_from_exact(-1.0, 0.0,
                                           np.geomspace(1.0, 1e4, 400))
        self.assertEqual(classify(trajectory).tag,
                         SolutionTag.BOUNDED_DECAYING)

    def test_blow_up(self):
        trajectory = Trajectory.from_samples([0.0, 1.0], [0.0, -1e8],
                                             [1.0, -1e16], [-1.0, -1e24],
                                             Termination.F_CAP_HIT)
        self.assertEqual(classify(trajectory).tag,
                         SolutionTag.FINITE_TIME_BLOW_UP)

    def test_unbounded_positive(self):
        cls = classify(_sqrt_growth())
        self.assertEqual(cls.tag, SolutionTag.UNBOUNDED_POSITIVE)
        npt.assert_allclose(cls.evidence.f_end, np.sqrt(2 * 10001.0))

    def test_unbounded_negative(self):
        self.assertEqual(classify(_sqrt_growth(-1.0)).tag,
                         SolutionTag.UNBOUNDED_NEGATIVE)

    def test_unsettled_growth(self):
        # nearly linear growth, log slope past the sublinear range
        t = np.linspace(0.0, 1e4, 2001)
        root = np.sqrt(1 + t)
        trajectory = Trajectory.from_samples(t, t + 10 * root, 1 + 5 / root,
                                             -2.5 / root**3)
        self.assertEqual(classify(trajectory).tag, SolutionTag.INDETERMINATE)

    def test_event_stop(self):
        trajectory = Trajectory.from_samples([0.0, 1.0], [0.0, 1.0],
                                             [1.0, 0.0], [-1.0, -1.0],
                                             Termination.EVENT_STOP)
        self.assertEqual(classify(trajectory).tag, SolutionTag.INDETERMINATE)

    def test_runaway(self):
        accelerating = Trajectory.from_samples([0.0, 1.0], [0.0, -2.0],
                                               [1.0, -3.0], [-1.0, -2.0],
                                               Termination.RUNAWAY)
        self.assertEqual(classify(accelerating).tag,
                         SolutionTag.FINITE_TIME_BLOW_UP)
        for fpp_end in (1.0, -1.0):
            rising = Trajectory.from_samples([0.0, 1.0], [0.0, 2.0],
                                             [1.0, 2.0], [1.0, fpp_end],
                                             Termination.RUNAWAY)
            self.assertEqual(classify(rising).tag, SolutionTag.INDETERMINATE)

    def test_settled(self):
        growth = _sqrt_growth()
        settled = Trajectory(growth.t, growth.y, Termination.SETTLED)
        self.assertEqual(classify(settled).tag,
                         SolutionTag.UNBOUNDED_POSITIVE)

    def test_parse(self):
        self.assertEqual(SolutionTag.parse("unbounded"),
                         SolutionTag.UNBOUNDED_POSITIVE)
        self.assertEqual(SolutionTag.parse("boundeddecaying"),
                         SolutionTag.BOUNDED_DECAYING)
        with self.assertRaises(DomainError):
            SolutionTag.parse("periodic")


class TestDecisiveStop(unittest.TestCase):

    def test_runaway_rules(self):
        stop = DecisiveStop(-1.0, Thresholds())
        self.assertTrue(stop.runaway(1.0, -0.1, -0.5))
        self.assertFalse(stop.runaway(1.0, -0.1, 0.5))
        self.assertFalse(stop.runaway(1.0, 0.1, 0.5))
        stop = DecisiveStop(0.5, Thresholds())
        self.assertTrue(stop.runaway(1.0, 0.1, 0.5))
        # f' + f''/f bounds the limit of f' from below
        self.assertTrue(stop.runaway(2.0, 0.5, -0.2))
        self.assertFalse(stop.runaway(2.0, 0.5, -2.0))
        self.assertFalse(stop.runaway(1.0, -0.1, -0.5))

    def test_call(self):
        stop = DecisiveStop(-1.0, Thresholds())
        self.assertEqual(stop([0.0, 1.0], [[0.0, 1.0, -1.0],
                                           [-1.0, -1.0, -1.0]]),
                         Termination.RUNAWAY)
        # small |f| is never checked for a settled tail
        self.assertIsNone(stop([0.0, 1.0], [[0.0, 1.0, 1.0],
                                            [1.0, 1.0, -0.5]]))
        growth = _sqrt_growth()
        self.assertEqual(stop(list(growth.t), list(growth.y)),
                         Termination.SETTLED)

    def test_check_ratio(self):
        growth = _sqrt_growth()
        stop = DecisiveStop(-1.0, Thresholds(), check_ratio=100.0)
        self.assertIsNone(stop(list(growth.t[:41]), list(growth.y[:41])))
        # settled by t = 5000, the next check waits for t = 1e4
        self.assertIsNone(stop(list(growth.t[:2001]),
                               list(growth.y[:2001])))
        self.assertEqual(stop(list(growth.t), list(growth.y)),
                         Termination.SETTLED)


class TestSignStructure(unittest.TestCase):

    def test_exact(self):
        trajectory = trajectory_from_exact(-2.0, 0.0, np.linspace(1, 5, 50))
        report = sign_structure_report(trajectory, -2.0)
        self.assertTrue(report.persists)
        self.assertIsNone(report.negative_from)
        self.assertEqual(report.t1, 1.0)

    def test_violation(self):
        trajectory = Trajectory.from_samples([0, 1, 2, 3], [1, 2, 3, 4],
                                             [1, 1, 1, 1], [-1, -1, 0.5, -1])
        report = sign_structure_report(trajectory, -1.0)
        self.assertFalse(report.persists)
        self.assertEqual(report.negative_from, 0.0)
        self.assertEqual(report.persist_violation, (2.0, 0.5))

    def test_constant(self):
        trajectory = Trajectory.from_samples([0.0, 1.0], [2, 2], [0, 0],
                                             [0, 0])
        self.assertTrue(sign_structure_report(trajectory, -1.0).constant)


class TestShoot(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.bc = BoundaryCondition(Family.PRESCRIBED_TEMPERATURE, 0.0)
        cls.result = shoot(cls.bc, -1.0, Params(beta=-1.0))

    def test_converged(self):
        result = self.result
        self.assertEqual(result.class_at_value.tag,
                         SolutionTag.UNBOUNDED_POSITIVE)
        # f' + f^2/2 = 1 + f''(0) t: unbounded only for f''(0) > 0
        self.assertGreater(result.value, 0.0)
        lo, hi = result.bracket
        self.assertLessEqual(lo, result.value)
        self.assertLessEqual(result.value, hi)
        self.assertLessEqual(hi - lo, 1e-12 * max(1.0, abs(result.value)))
        self.assertIn(result.trajectory.termination,
                      (Termination.HORIZON_REACHED, Termination.SETTLED))
        self.assertIsNotNone(result.trajectory.dense)

    def test_deterministic(self):
        again = shoot(self.bc, -1.0, Params(beta=-1.0))
        self.assertEqual(again.value, self.result.value)
        self.assertEqual(again.bracket, self.result.bracket)
        self.assertEqual(again.iterations, self.result.iterations)
        self.assertEqual(again.class_at_value.tag,
                         self.result.class_at_value.tag)
        self.assertEqual(again.residual_bc, self.result.residual_bc)
        npt.assert_array_equal(again.trajectory.y, self.result.trajectory.y)

    def test_sign_pattern(self):
        report = sign_structure_report(self.result.trajectory, -1.0)
        self.assertTrue(report.persists)
        self.assertIsNotNone(report.t1)

    def test_report(self):
        report = self.result.to_dict()
        self.assertEqual(report["family"], "temperature")
        self.assertEqual(report["class"], "UnboundedPositive")
        self.assertEqual(report["value"], self.result.value)

    def test_flux_has_no_solution(self):
        # f'' + f f' = -1 for all t: every run blows up
        with self.assertRaises(BracketNotFound) as ctx:
            shoot(BoundaryCondition(Family.PRESCRIBED_FLUX, 0.0), -1.0,
                  Params(beta=-1.0), grid=ScanGrid(points=16))
        tags = {tag for _, tag in ctx.exception.scan}
        self.assertEqual(tags, {SolutionTag.FINITE_TIME_BLOW_UP})

    def test_no_unbounded_target(self):
        with self.assertRaises(ParameterError) as ctx:
            shoot(self.bc, 0.5, Params(beta=0.5))
        self.assertIn("always bounded", str(ctx.exception))

    def test_zero_wall_value_at_beta_minus_two(self):
        # f(0) = 0, f'(0) = 1 at beta = -2: no free value keeps f growing
        with self.assertRaises(BracketNotFound):
            shoot(self.bc, -2.0, Params(beta=-2.0), grid=ScanGrid(points=16))

    def test_grid_horizon(self):
        grid = ScanGrid(horizon=50.0)
        self.assertEqual(grid.widened().horizon, 50.0)
        self.assertEqual(ScanGrid().horizon, 300.0)


class TestBounded(unittest.TestCase):

    def test_bounded_scan(self):
        bc = BoundaryCondition(Family.PRESCRIBED_TEMPERATURE, 0.0)
        for beta in (0.0, 0.5, 1.0):
            table = bounded_scan(bc, beta, Params(beta=beta))
            self.assertEqual(len(table), 20)
            self.assertFalse([v for v, tag in table if tag.unbounded])


class TestSweep(unittest.TestCase):

    def test_errors_recorded_in_order(self):
        cells = sweep(Family.PRESCRIBED_TEMPERATURE, [0.0, 1.0], [0.5, 0.0],
                      Params(beta=0.0), threads=2)
        npt.assert_equal([(c.a, c.beta) for c in cells],
                         [(0.0, 0.5), (0.0, 0.0), (1.0, 0.5), (1.0, 0.0)])
        for cell in cells:
            self.assertIsNone(cell.result)
            self.assertTrue(cell.error.startswith("ParameterError"))
            self.assertIn("error", cell.to_dict())

    def test_converged_cells(self):
        cells = sweep(Family.PRESCRIBED_TEMPERATURE, [0.0, 0.5, 1.0],
                      [-1.0], Params(beta=-1.0), threads=3)
        npt.assert_equal([(c.a, c.beta) for c in cells],
                         [(0.0, -1.0), (0.5, -1.0), (1.0, -1.0)])
        for cell in cells:
            self.assertIsNone(cell.error)
            self.assertEqual(cell.result.class_at_value.tag,
                             SolutionTag.UNBOUNDED_POSITIVE)
            self.assertEqual(cell.to_dict()["a"], cell.a)

    def test_empty(self):
        self.assertEqual(sweep(Family.PRESCRIBED_FLUX, [], [-1.0],
                               Params(beta=-1.0)), [])


if __name__ == '__main__':
    unittest.main()
