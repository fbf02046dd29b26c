#!/usr/bin/env python
#
# Copyright (C) 2024 bl-lab contributors
#
# This file is part of bl-lab, a numerical laboratory for similarity
# boundary-layer equations.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#

"""
Blow-up coordinates s = int f dt, u = f'/f^2, v = f''/f^3 turning the
equation into the planar system

    du/ds = v - 2 u^2
    dv/ds = -v + beta u^2 - 3 u v

with its equilibria, their linearization and the center manifold of the
saddle-node at the origin.
"""

import cmath
import math
import logging
from enum import Enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from errors import DomainError, InsufficientData, IntegrationFailure
from ode import DormandPrince, Termination, central_derivative


logger = logging.getLogger(__name__)

ZERO_EIGENVALUE = 1e-10


@dataclass(frozen=True)
class PhaseState:
    """ A point of the planar system at blow-up time s """

    s: float
    u: float
    v: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.s, self.u, self.v)):
            raise DomainError(f"non-finite phase state {self}")


class EquilibriumClass(Enum):
    """ Linear classification of an equilibrium """
    SADDLE_NODE = "SaddleNode"
    STABLE_NODE = "StableNode"
    UNSTABLE_NODE = "UnstableNode"
    SADDLE = "Saddle"
    FOCUS = "Focus"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class EquilibriumReport:
    """ Equilibrium, Jacobian, eigenvalues and classification """

    point: tuple
    jacobian: tuple
    eigenvalues: tuple
    classification: EquilibriumClass
    residual: float

    def to_dict(self):
        """ JSON-ready equilibrium """
        return {"u": self.point[0],
                "v": self.point[1],
                "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
                "class": self.classification.value}


def planar_rhs(state, beta):
    """ Returns (du/ds, dv/ds) at (u, v) """
    u, v = state
    return v - 2 * u * u, -v + beta * u * u - 3 * u * v


def jacobian(point, beta):
    """ Jacobian of the planar system """
    u, v = point
    return ((-4 * u, 1.0), (2 * beta * u - 3 * v, -1 - 3 * u))


def eigenvalues(jac):
    """ Roots of l^2 - tr l + det from the 2x2 closed form """
    (a, b), (c, d) = jac
    tr, det = a + d, a * d - b * c
    disc = tr * tr - 4 * det
    if disc >= 0:
        root = math.sqrt(disc)
        big = 0.5 * (tr + math.copysign(root, tr))
        small = det / big if big != 0 else 0.0
        pair = sorted([big, small], reverse=True)
        return complex(pair[0]), complex(pair[1])
    root = cmath.sqrt(disc)
    return 0.5 * (tr + root), 0.5 * (tr - root)


def _char_residual(jac, lam):
    (a, b), (c, d) = jac
    return abs((a - lam) * (d - lam) - b * c)


def classify_equilibrium(jac):
    """ Linear type of an equilibrium out of its Jacobian """
    lams = eigenvalues(jac)
    zero = ZERO_EIGENVALUE * max(1.0, float(np.linalg.norm(np.array(jac))))
    zeros = [abs(lam) <= zero for lam in lams]
    if all(zeros):
        return EquilibriumClass.DEGENERATE
    if any(zeros):
        return EquilibriumClass.SADDLE_NODE
    if abs(lams[0].imag) > zero:
        if abs(lams[0].real) <= zero:
            return EquilibriumClass.DEGENERATE
        return EquilibriumClass.FOCUS
    re0, re1 = lams[0].real, lams[1].real
    if re0 > 0 and re1 > 0:
        return EquilibriumClass.UNSTABLE_NODE
    if re0 < 0 and re1 < 0:
        return EquilibriumClass.STABLE_NODE
    return EquilibriumClass.SADDLE


def _report(point, beta):
    jac = jacobian(point, beta)
    lams = eigenvalues(jac)
    return EquilibriumReport(point=point, jacobian=jac, eigenvalues=lams,
                             classification=classify_equilibrium(jac),
                             residual=max(_char_residual(jac, lam)
                                          for lam in lams))


def nontrivial_equilibrium(beta):
    """ ((beta-2)/6, (beta-2)^2/18), image of the closed-form solution """
    u = (beta - 2) / 6
    return u, 2 * u * u


def equilibria(beta):
    """ The origin and, unless beta = 2, the nontrivial equilibrium """
    reports = [_report((0.0, 0.0), beta)]
    if beta != 2:
        reports.append(_report(nontrivial_equilibrium(beta), beta))
    return reports


@dataclass(frozen=True)
class CenterManifold:
    """ v = a2 u^2 + a3 u^3 + ..., reduced flow du/ds = flow u^2 + ... """

    a2: float
    a3: float
    flow_coeff: float
    flow_cubic: float


def center_manifold_coeff(beta):
    """
    Matching powers of u after substituting v = a2 u^2 + a3 u^3 in both
    equations: u^2 gives a2 = beta, u^3 gives a3 = beta (1 - 2 beta); the
    reduced flow is du/ds = (beta - 2) u^2 + a3 u^3.
    """
    a2 = beta
    a3 = -3 * a2 - 2 * a2 * (a2 - 2)
    return CenterManifold(a2=a2, a3=a3, flow_coeff=a2 - 2, flow_cubic=a3)


def integrate_planar(initial, beta, params, s_max=None):
    """
    Integrates the planar system from `initial` up to s_max (initial.s +
    params.t_max by default) with the same tolerances as the f-equation.
    """
    s_max = initial.s + params.t_max if s_max is None else s_max
    if not s_max > initial.s:
        raise DomainError(f"s_max={s_max} must exceed s={initial.s}")

    def fun(y):
        return np.array(planar_rhs(y, beta))

    stepper = DormandPrince(fun, params.rtol, params.atol, params.step_min)
    ss, ys, _, termination = stepper.run(
        initial.s, (initial.u, initial.v), s_max,
        cap=lambda y: max(abs(y[0]), abs(y[1])) >= params.f_cap)
    if termination == Termination.STEP_COLLAPSE or len(ss) < 2:
        raise IntegrationFailure(f"planar step size collapsed at "
                                 f"s={ss[-1]}",
                                 samples=[PhaseState(s, y[0], y[1])
                                          for s, y in zip(ss, ys)])
    logger.debug("planar run beta=%s from (%s, %s): %s at s=%s", beta,
                 initial.u, initial.v, termination.value, ss[-1])
    return [PhaseState(float(s), float(y[0]), float(y[1]))
            for s, y in zip(ss, ys)]


def reduced_flow_check(beta, params, delta=1e-3, s_span=None):
    """
    Starts on the quadratic center manifold (delta, beta delta^2) and returns
    the largest relative gap between u(s) and the reduced flow
    u = delta / (1 - (beta - 2) delta s).
    """
    if beta >= 2:
        raise DomainError("the reduced flow only decays for beta < 2")
    s_span = s_span or 10.0 / delta
    curve = integrate_planar(PhaseState(0.0, delta, beta * delta**2), beta,
                             params, s_max=s_span)
    worst = 0.0
    for point in curve:
        reduced = delta / (1 - (beta - 2) * delta * point.s)
        worst = max(worst, abs(point.u - reduced) / abs(reduced))
    return worst


def _blowup_time(trajectory, tau_index):
    if trajectory.dense is not None:
        pieces = trajectory.step_integrals()[:, 0]
        s = np.concatenate([[0.0], np.cumsum(pieces)])
    else:
        s = cumulative_trapezoid(trajectory.f, trajectory.t, initial=0.0)
    return s - s[tau_index]


def to_blowup(trajectory, tau_index=0):
    """
    Maps every sample to (s, u, v); s is measured from the sample at
    tau_index. f must keep a constant nonzero sign.
    """
    f = trajectory.f
    if not (np.all(f > 0) or np.all(f < 0)):
        raise DomainError("f vanishes or changes sign on the trajectory")
    if not 0 <= tau_index < len(trajectory):
        raise DomainError(f"tau_index {tau_index} out of range")
    s = _blowup_time(trajectory, tau_index)
    u = trajectory.fp / f**2
    v = trajectory.fpp / f**3
    return [PhaseState(float(a), float(b), float(c))
            for a, b, c in zip(s, u, v)]


def transform_consistency(trajectory, beta):
    """
    Max over interior samples of the gap between d(u, v)/ds, by non-uniform
    central differences on the transformed curve, and the planar field.
    Five point differences from 5 samples on, three point ones below.
    """
    if len(trajectory) < 3:
        raise InsufficientData("finite differences need at least 3 samples")
    phase = to_blowup(trajectory)
    s = np.array([p.s for p in phase])
    u = np.array([p.u for p in phase])
    v = np.array([p.v for p in phase])
    if not np.all(np.diff(s) != 0):
        raise DomainError("blow-up time is not strictly monotone")
    if len(s) >= 5:
        inner = slice(2, -2)
        du, dv = central_derivative(s, u), central_derivative(s, v)
    else:
        inner = slice(1, -1)
        du, dv = np.gradient(u, s)[inner], np.gradient(v, s)[inner]
    fu, fv = planar_rhs((u[inner], v[inner]), beta)
    gap = np.maximum(np.abs(du - fu), np.abs(dv - fv))
    return float(np.max(gap))


def vector_field_grid(beta, u_range=(-1.0, 1.0), v_range=(-1.0, 1.0), n=21):
    """ rows (u, v, du, dv) on a regular grid, for external plotting """
    rows = []
    for u in np.linspace(u_range[0], u_range[1], n):
        for v in np.linspace(v_range[0], v_range[1], n):
            du, dv = planar_rhs((float(u), float(v)), beta)
            rows.append((float(u), float(v), du, dv))
    return rows

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
