#!/usr/bin/env python
"""
Tests for the blow-up plane: equilibria, center manifold and the mapping of
trajectories onto (s, u, v)
"""

import os
import sys
import unittest

import numpy as np
import numpy.testing as npt

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from errors import DomainError, InsufficientData  # noqa: E402
from ode import (OdeState, Params, Trajectory, exact_solution,  # noqa: E402
                 integrate)
from blowup import (EquilibriumClass, PhaseState,  # noqa: E402
                    center_manifold_coeff, classify_equilibrium,
                    eigenvalues, equilibria, integrate_planar, jacobian,
                    nontrivial_equilibrium, planar_rhs, reduced_flow_check,
                    to_blowup, transform_consistency, vector_field_grid)
from shooting import sign_structure_report  # noqa: E402


class TestEquilibria(unittest.TestCase):

    def test_origin(self):
        for beta in (-2.0, -1.0, 0.0, 0.5):
            origin = equilibria(beta)[0]
            self.assertEqual(origin.point, (0.0, 0.0))
            self.assertEqual(list(origin.eigenvalues), [0.0, -1.0])
            self.assertEqual(origin.classification,
                             EquilibriumClass.SADDLE_NODE)

    def test_nontrivial(self):
        origin, point = equilibria(-1.0)
        npt.assert_allclose(point.point, (-0.5, 0.5))
        npt.assert_allclose(point.jacobian, [[2.0, 1.0], [-0.5, 0.5]])
        npt.assert_allclose([z.real for z in point.eigenvalues], [1.5, 1.0])
        self.assertEqual(point.classification, EquilibriumClass.UNSTABLE_NODE)
        self.assertLess(point.residual, 1e-14)

    def test_field_vanishes(self):
        for beta in (-2.0, -1.0, -0.5, 0.5, 1.0, 3.0):
            for report in equilibria(beta):
                npt.assert_allclose(planar_rhs(report.point, beta), 0.0,
                                    atol=1e-14)

    def test_degenerate_beta(self):
        self.assertEqual(len(equilibria(2.0)), 1)
        self.assertEqual(nontrivial_equilibrium(2.0), (0.0, 0.0))

    def test_exact_solution_image(self):
        # the closed-form solution maps onto the nontrivial equilibrium
        beta = -2.0
        state = exact_solution(3.0, beta)
        u, v = nontrivial_equilibrium(beta)
        npt.assert_allclose([state.fp / state.f**2, state.fpp / state.f**3],
                            [u, v])

    def test_classification(self):
        self.assertEqual(classify_equilibrium(((-1.0, 0.0), (0.0, -2.0))),
                         EquilibriumClass.STABLE_NODE)
        self.assertEqual(classify_equilibrium(((1.0, 0.0), (0.0, -2.0))),
                         EquilibriumClass.SADDLE)
        self.assertEqual(classify_equilibrium(((-1.0, 2.0), (-2.0, -1.0))),
                         EquilibriumClass.FOCUS)
        self.assertEqual(classify_equilibrium(((0.0, 1.0), (-1.0, 0.0))),
                         EquilibriumClass.DEGENERATE)
        lams = eigenvalues(((-1.0, 2.0), (-2.0, -1.0)))
        npt.assert_allclose([lams[0].imag, lams[1].imag], [2.0, -2.0])

    def test_jacobian(self):
        npt.assert_allclose(jacobian((0.0, 0.0), 0.5),
                            [[0.0, 1.0], [0.0, -1.0]])


class TestCenterManifold(unittest.TestCase):

    def test_coefficients(self):
        manifold = center_manifold_coeff(-1.0)
        self.assertEqual(manifold.a2, -1.0)
        self.assertEqual(manifold.a3, -3.0)
        self.assertEqual(manifold.flow_coeff, -3.0)
        self.assertEqual(center_manifold_coeff(0.5).a3, 0.0)

    def test_invariance(self):
        # the field is tangent to the manifold up to O(u^4)
        beta = -1.0
        manifold = center_manifold_coeff(beta)
        for u in (1e-2, 1e-3):
            v = manifold.a2 * u**2 + manifold.a3 * u**3
            du, dv = planar_rhs((u, v), beta)
            slope = 2 * manifold.a2 * u + 3 * manifold.a3 * u**2
            self.assertLess(abs(dv - slope * du), 50 * u**4)

    def test_reduced_flow(self):
        self.assertLess(reduced_flow_check(-1.0, Params(beta=-1.0)), 0.05)
        with self.assertRaises(DomainError):
            reduced_flow_check(2.0, Params(beta=2.0))

    def test_planar_orbit(self):
        curve = integrate_planar(PhaseState(0.0, 1e-2, -1e-4), -1.0,
                                 Params(beta=-1.0), s_max=100.0)
        self.assertEqual(curve[-1].s, 100.0)
        self.assertLess(abs(curve[-1].u), 1e-2)


class TestTransform(unittest.TestCase):

    def test_exact_solution(self):
        beta = -1.0
        params = Params(beta=beta, t_max=50.0, rtol=1e-13, atol=1e-15)
        trajectory = integrate(exact_solution(1.0, beta), params, dense=True)
        phase = to_blowup(trajectory)
        u, v = nontrivial_equilibrium(beta)
        npt.assert_allclose([p.u for p in phase], u, rtol=1e-9)
        npt.assert_allclose([p.v for p in phase], v, rtol=1e-9)
        # s = int f dt = 2 log t for f = 2/t
        npt.assert_allclose(phase[-1].s, 2 * np.log(50.0), rtol=1e-10)
        self.assertLess(transform_consistency(trajectory, beta), 1e-5)

    def test_unbounded_tail(self):
        trajectory = integrate(OdeState(0.0, 0.0, 1.0, 1.0),
                               Params(beta=-1.0, t_max=1e3), dense=True)
        signs = sign_structure_report(trajectory, -1.0)
        self.assertIsNotNone(signs.t1)
        tail = trajectory.since(signs.t1)
        self.assertLess(transform_consistency(tail, -1.0), 1e-5)

    def test_tau_index(self):
        t = np.linspace(1.0, 3.0, 5)
        trajectory = Trajectory.from_samples(t, np.ones(5), np.zeros(5),
                                             np.zeros(5))
        phase = to_blowup(trajectory, tau_index=2)
        npt.assert_allclose([p.s for p in phase], t - 2.0)

    def test_sign_change(self):
        t = np.linspace(0.0, 2.0, 5)
        trajectory = Trajectory.from_samples(t, t - 1, np.ones(5),
                                             np.zeros(5))
        with self.assertRaises(DomainError):
            to_blowup(trajectory)

    def test_too_short(self):
        trajectory = Trajectory.from_samples([1.0, 2.0], [1.0, 1.0],
                                             [0.0, 0.0], [0.0, 0.0])
        with self.assertRaises(InsufficientData):
            transform_consistency(trajectory, -1.0)

    def test_vector_field(self):
        rows = vector_field_grid(-1.0, n=5)
        self.assertEqual(len(rows), 25)
        u, v, du, dv = rows[7]
        npt.assert_allclose((du, dv), planar_rhs((u, v), -1.0))


if __name__ == '__main__':
    unittest.main()
