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
Boundary conditions at t = 0, classification of computed trajectories and
shooting on the free initial value for solutions with f'(inf) = 0.
"""

import os
import logging
from enum import Enum
from dataclasses import dataclass
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from config import Config
from errors import (LabError, ParameterError, BracketNotFound,
                    ConvergenceError, DomainError)
from ode import OdeState, Termination, Trajectory, integrate


logger = logging.getLogger(__name__)

BISECTION_CAP = 200
BISECTION_RTOL = 1e-12


class Family(Enum):
    """ Boundary-condition families at t = 0 """
    PRESCRIBED_TEMPERATURE = "temperature"
    PRESCRIBED_FLUX = "flux"


@dataclass(frozen=True)
class BoundaryCondition:
    """
    f(0) = a, f'(0) = 1 with f''(0) free (prescribed temperature), or
    f(0) = a, f''(0) = -1 with f'(0) free (prescribed flux)
    """

    family: Family
    a: float = 0.0

    @property
    def free(self):
        """ name of the unknown derivative at 0 """
        if self.family == Family.PRESCRIBED_TEMPERATURE:
            return "fpp"
        return "fp"

    def initial_state(self, value):
        """ the state at t = 0 for a value of the free unknown """
        if self.family == Family.PRESCRIBED_TEMPERATURE:
            return OdeState(0.0, self.a, 1.0, value)
        return OdeState(0.0, self.a, value, -1.0)


class SolutionTag(Enum):
    """ Operational classes of a computed trajectory """
    BOUNDED_DECAYING = "BoundedDecaying"
    UNBOUNDED_POSITIVE = "UnboundedPositive"
    UNBOUNDED_NEGATIVE = "UnboundedNegative"
    FINITE_TIME_BLOW_UP = "FiniteTimeBlowUp"
    INDETERMINATE = "Indeterminate"

    @property
    def unbounded(self):
        """ True for both unbounded classes """
        return self in (SolutionTag.UNBOUNDED_POSITIVE,
                        SolutionTag.UNBOUNDED_NEGATIVE)

    @staticmethod
    def parse(name):
        """ accepts either the class name or a short alias """
        aliases = {"unbounded": SolutionTag.UNBOUNDED_POSITIVE,
                   "positive": SolutionTag.UNBOUNDED_POSITIVE,
                   "negative": SolutionTag.UNBOUNDED_NEGATIVE,
                   "bounded": SolutionTag.BOUNDED_DECAYING,
                   "blowup": SolutionTag.FINITE_TIME_BLOW_UP}
        if name.lower() in aliases:
            return aliases[name.lower()]
        for tag in SolutionTag:
            if tag.value.lower() == name.lower():
                return tag
        raise DomainError(f"unknown solution class '{name}'")


@dataclass(frozen=True)
class Thresholds:
    """ Operational version of f'(inf) = 0 and of (un)boundedness """

    m_bound: float = 1e3
    eps_slope: float = 1e-6
    tail_fraction: float = 0.25
    # unbounded runs: |f(t_end)| >= m_grow and a settled log-slope t f'/f
    m_grow: float = 5.0
    settle_tol: float = 2e-3
    max_log_slope: float = 0.95

    @staticmethod
    def from_config(section="classify"):
        """ thresholds from the [classify] section """
        cfg = Config.get(section)
        return Thresholds(
            m_bound=cfg.getfloat("m_bound", "BL_M_BOUND", 1e3),
            eps_slope=cfg.getfloat("eps_slope", "BL_EPS_SLOPE", 1e-6),
            tail_fraction=cfg.getfloat("tail_fraction", None, 0.25),
            m_grow=cfg.getfloat("m_grow", None, 5.0),
            settle_tol=cfg.getfloat("settle_tol", None, 2e-3),
            max_log_slope=cfg.getfloat("max_log_slope", None, 0.95))


@dataclass(frozen=True)
class Evidence:
    """ Final sample and termination backing a classification """

    t_end: float
    f_end: float
    fp_end: float
    fpp_end: float
    termination: Termination


@dataclass(frozen=True)
class SolutionClass:
    """ Class of a trajectory; constant solutions are flagged apart """

    tag: SolutionTag
    evidence: Evidence
    constant: bool = False


def _is_constant(trajectory):
    return bool(np.ptp(trajectory.f) == 0.0 and
                not np.any(trajectory.fp) and not np.any(trajectory.fpp))


def _tail_start(trajectory, thresholds):
    n = len(trajectory)
    return min(n - 3, int(n * (1.0 - thresholds.tail_fraction))) \
        if n >= 3 else 0


def log_slope(trajectory, index):
    """ t f'/f at a sample, the local exponent of a power law """
    return trajectory.t[index] * trajectory.fp[index] / trajectory.f[index]


def _unbounded_tag(trajectory, thresholds):
    f_end = trajectory.f[-1]
    if abs(f_end) < thresholds.m_grow:
        return None
    sign = np.sign(f_end)
    start = _tail_start(trajectory, thresholds)
    f, fp, fpp = (trajectory.f[start:], trajectory.fp[start:],
                  trajectory.fpp[start:])
    # growing away from zero with a decaying slope
    if not (np.all(sign * f > 0) and np.all(sign * fp > 0) and
            np.all(sign * fpp < 0)):
        return None
    if np.any(np.diff(np.abs(fp)) > 0):
        return None
    t_end = trajectory.t[-1]
    if trajectory.t[0] > 0.25 * t_end:
        return None
    early = int(np.searchsorted(trajectory.t, 0.25 * t_end))
    if sign * trajectory.f[early] <= 0:
        return None
    slope_end = log_slope(trajectory, -1)
    slope_early = log_slope(trajectory, early)
    if not 0.0 < slope_end < thresholds.max_log_slope:
        return None
    if abs(slope_end - slope_early) > thresholds.settle_tol * slope_end:
        return None
    if sign > 0:
        return SolutionTag.UNBOUNDED_POSITIVE
    return SolutionTag.UNBOUNDED_NEGATIVE


def classify(trajectory, thresholds=None):
    """
    Classifies a trajectory. Constant solutions and every run matching no
    rule come out Indeterminate; this never raises.
    """
    thresholds = thresholds or Thresholds()
    final = trajectory.final
    evidence = Evidence(final.t, final.f, final.fp, final.fpp,
                        trajectory.termination)
    if _is_constant(trajectory):
        return SolutionClass(SolutionTag.INDETERMINATE, evidence,
                             constant=True)
    if trajectory.termination in (Termination.F_CAP_HIT,
                                  Termination.STEP_COLLAPSE):
        return SolutionClass(SolutionTag.FINITE_TIME_BLOW_UP, evidence)
    if trajectory.termination == Termination.RUNAWAY:
        # a falling run with f'' < 0 accelerates into a blow-up, a rising
        # one (beta >= 0) can grow linearly
        if final.fp < 0 and final.fpp < 0:
            return SolutionClass(SolutionTag.FINITE_TIME_BLOW_UP, evidence)
        return SolutionClass(SolutionTag.INDETERMINATE, evidence)
    if trajectory.termination == Termination.SETTLED:
        tag = _unbounded_tag(trajectory, thresholds)
        if tag:
            return SolutionClass(tag, evidence)
    if trajectory.termination == Termination.HORIZON_REACHED:
        if np.max(np.abs(trajectory.f)) <= thresholds.m_bound and \
                abs(final.fp) <= thresholds.eps_slope:
            return SolutionClass(SolutionTag.BOUNDED_DECAYING, evidence)
        tag = _unbounded_tag(trajectory, thresholds)
        if tag:
            return SolutionClass(tag, evidence)
    logger.debug("no rule fired at t=%s (f=%s, f'=%s)", final.t, final.f,
                 final.fp)
    return SolutionClass(SolutionTag.INDETERMINATE, evidence)


class DecisiveStop():
    """
    Stop condition for integrate() ending a run once its class is decided.

    Runaway: f' moved away from zero for good. For beta <= 0 a negative
    f'' stays negative, for beta >= 0 a positive f'' stays positive, so
    f' f'' > 0 with |f'| >= eps_slope never comes back. For beta >= 0 and
    f, f' > 0 > f'' the slope is also bounded below by f' + f''/f.

    Settled: the tail already passes the unbounded test; checked whenever
    t grew by `check_ratio` since the last check.
    """

    def __init__(self, beta, thresholds, check_ratio=1.05):
        self.beta = beta
        self.thresholds = thresholds
        self.check_ratio = check_ratio
        self._next_check = None

    def runaway(self, f, fp, fpp):
        """ True when f'(inf) = 0 is out of reach from (f, f', f'') """
        eps = self.thresholds.eps_slope
        if self.beta <= 0 and fp <= -eps and fpp < 0:
            return True
        if self.beta >= 0 and fp >= eps and fpp > 0:
            return True
        return self.beta >= 0 and f > 0 and fp > 0 and fpp <= 0 and \
            fp + fpp / f >= eps

    def __call__(self, ts, ys):
        t = ts[-1]
        f, fp, fpp = ys[-1]
        if self.runaway(f, fp, fpp):
            return Termination.RUNAWAY
        if abs(f) < self.thresholds.m_grow:
            return None
        if self._next_check is not None and t < self._next_check:
            return None
        self._next_check = t * self.check_ratio
        trajectory = Trajectory(np.array(ts), np.array(ys))
        if _unbounded_tag(trajectory, self.thresholds):
            return Termination.SETTLED
        return None


@dataclass(frozen=True, eq=False)
class ShootingResult:
    """ Converged free parameter for a boundary-condition family """

    bc: BoundaryCondition
    beta: float
    bracket: tuple
    value: float
    class_at_value: SolutionClass
    iterations: int
    residual_bc: float
    trajectory: object = None

    def to_dict(self):
        """ JSON-ready report """
        ev = self.class_at_value.evidence
        return {"family": self.bc.family.value,
                "a": self.bc.a,
                "beta": self.beta,
                "bracket": [self.bracket[0], self.bracket[1]],
                "value": self.value,
                "class": self.class_at_value.tag.value,
                "t_end": ev.t_end,
                "f_end": ev.f_end,
                "fp_end": ev.fp_end,
                "iterations": self.iterations,
                "residual_bc": self.residual_bc}


@dataclass(frozen=True)
class ScanGrid:
    """ Candidates for the free unknown when looking for a bracket """

    lo: float = -10.0
    hi: float = 10.0
    points: int = 64
    floor: float = 1e-3
    # scan and bisection runs stop here; the converged value runs to t_max
    horizon: float = 300.0

    @staticmethod
    def from_config(section="shoot"):
        """ scan range from the [shoot] section """
        cfg = Config.get(section)
        return ScanGrid(lo=cfg.getfloat("scan_lo", None, -10.0),
                        hi=cfg.getfloat("scan_hi", None, 10.0),
                        points=cfg.getint("scan_points", None, 64),
                        floor=cfg.getfloat("scan_floor", None, 1e-3),
                        horizon=cfg.getfloat("horizon", "BL_SHOOT_HORIZON",
                                             300.0))

    def candidates(self):
        """ logarithmically spaced magnitudes on both sides of zero """
        if not self.lo < self.hi:
            raise DomainError(f"empty scan range [{self.lo}, {self.hi}]")
        top = max(abs(self.lo), abs(self.hi))
        mags = np.geomspace(min(self.floor, top), top,
                            max(2, self.points // 2))
        values = np.concatenate([-mags[::-1], mags])
        return [float(v) for v in values if self.lo <= v <= self.hi]

    def widened(self):
        """ the refined grid tried once when no bracket turns up """
        return ScanGrid(10 * self.lo, 10 * self.hi, 2 * self.points,
                        self.floor / 10, self.horizon)


def _run(bc, value, params, thresholds, dense=False):
    trajectory = integrate(bc.initial_state(value), params, dense=dense,
                           stop=DecisiveStop(params.beta, thresholds))
    return trajectory, classify(trajectory, thresholds)


def _scan(bc, params, target, thresholds, grid):
    table = []
    for value in grid.candidates():
        _, cls = _run(bc, value, params, thresholds)
        table.append((value, cls.tag))
    brackets = []
    for (v0, tag0), (v1, tag1) in zip(table, table[1:]):
        if (tag0 == target) != (tag1 == target):
            inside, outside = (v0, v1) if tag0 == target else (v1, v0)
            brackets.append((inside, outside))
    return table, brackets


def shoot(bc, beta, params, target=SolutionTag.UNBOUNDED_POSITIVE,
          thresholds=None, grid=None):
    """
    Scans the free unknown for a change of classification into `target`,
    then bisects the bracket with the smallest |free parameter| down to a
    relative width of 1e-12. Scan and bisection runs stop at grid.horizon;
    the returned value, the bracket end that classifies as `target`, is run
    again up to params.t_max with dense output.
    """
    if target.unbounded and beta >= 0:
        raise ParameterError(f"beta={beta} >= 0: solutions with f'(inf) = 0 "
                             "are always bounded, there is no unbounded "
                             "solution to shoot for")
    thresholds = thresholds or Thresholds()
    grid = grid or ScanGrid()
    params = params.with_overrides(beta=beta)
    short = params.with_overrides(t_max=min(params.t_max, grid.horizon))

    table, brackets = _scan(bc, short, target, thresholds, grid)
    if not brackets:
        logger.info("no bracket in [%s, %s], widening the scan",
                    grid.lo, grid.hi)
        grid = grid.widened()
        table, brackets = _scan(bc, short, target, thresholds, grid)
    if not brackets:
        summary = ", ".join(f"{v:.4g}:{tag.value}" for v, tag in table)
        raise BracketNotFound(f"{bc.family.value} a={bc.a} beta={beta}: "
                              f"no {target.value} bracket ({summary})",
                              scan=table)

    inside, outside = min(brackets,
                          key=lambda b: (min(abs(b[0]), abs(b[1])), b[0]))
    logger.debug("bracket [%s, %s] for %s", inside, outside, target.value)
    iterations = 0
    while abs(inside - outside) > BISECTION_RTOL * max(1.0, abs(inside)):
        if iterations >= BISECTION_CAP:
            raise ConvergenceError(f"bisection did not converge in "
                                   f"{BISECTION_CAP} iterations "
                                   f"(bracket [{inside}, {outside}])")
        mid = 0.5 * (inside + outside)
        if mid in (inside, outside):
            break
        _, cls = _run(bc, mid, short, thresholds)
        if cls.tag == target:
            inside = mid
        else:
            outside = mid
        iterations += 1

    trajectory, cls = _run(bc, inside, params, thresholds, dense=True)
    if cls.tag != target:
        logger.warning("%s=%r classifies %s past the scan horizon",
                       bc.free, inside, cls.tag.value)
    result = ShootingResult(bc=bc, beta=beta,
                            bracket=(min(inside, outside),
                                     max(inside, outside)),
                            value=inside, class_at_value=cls,
                            iterations=iterations,
                            residual_bc=abs(cls.evidence.fp_end),
                            trajectory=trajectory)
    logger.info("%s a=%s beta=%s: %s=%r (%s) after %d iterations",
                bc.family.value, bc.a, beta, bc.free, inside,
                cls.tag.value, iterations)
    return result


def bounded_scan(bc, beta, params, points=20, lo=-10.0, hi=10.0,
                 thresholds=None):
    """
    Classifies a uniform scan of the free unknown; for beta >= 0 none of the
    entries may come out unbounded.
    """
    thresholds = thresholds or Thresholds()
    params = params.with_overrides(beta=beta)
    table = []
    for value in np.linspace(lo, hi, points):
        _, cls = _run(bc, float(value), params, thresholds)
        table.append((float(value), cls.tag))
    return table


@dataclass(frozen=True)
class SignReport:
    """ Sign persistence of f'' and eventual sign pattern of f', f'', f''' """

    constant: bool
    negative_from: float = None
    persists: bool = True
    persist_violation: tuple = None
    t1: float = None
    t1_index: int = None
    pattern_violation: tuple = None


def sign_structure_report(trajectory, beta, atol=1e-12):
    """
    (a) once f'' <= -atol it must stay strictly negative; (b) the first sample
    t1 from which f'' f' < 0 and f''' f'' < 0 hold through the end, or the
    last sample violating it.
    """
    if _is_constant(trajectory):
        return SignReport(constant=True)
    t, fp, fpp = trajectory.t, trajectory.fp, trajectory.fpp
    fppp = trajectory.fppp(beta)

    first, holds, violation = None, True, None
    hits = np.nonzero(fpp <= -atol)[0]
    if len(hits):
        k = int(hits[0])
        first = float(t[k])
        bad = np.nonzero(fpp[k + 1:] >= 0)[0]
        if len(bad):
            j = k + 1 + int(bad[0])
            holds, violation = False, (float(t[j]), float(fpp[j]))

    ok = (fpp * fp < 0) & (fppp * fpp < 0)
    if not ok[-1]:
        return SignReport(False, first, holds, violation,
                          pattern_violation=(float(t[-1]), float(fp[-1]),
                                            float(fpp[-1]), float(fppp[-1])))
    bad = np.nonzero(~ok)[0]
    index = int(bad[-1]) + 1 if len(bad) else 0
    return SignReport(False, first, holds, violation, float(t[index]), index)


@dataclass(frozen=True)
class SweepCell:
    """ One (a, beta) cell of a sweep """

    a: float
    beta: float
    result: ShootingResult = None
    error: str = None

    def to_dict(self):
        """ JSON-ready cell, the shooting report or the recorded error """
        if self.result:
            return self.result.to_dict()
        return {"a": self.a, "beta": self.beta, "error": self.error}


def sweep_threads():
    """ parallelism of the sweep, capped by BL_LAB_THREADS """
    threads = Config.get("lab").getint("threads", "BL_LAB_THREADS",
                                       os.cpu_count() or 1)
    return max(1, threads)


def _sweep_cell(job):
    family, a, beta, params, target, thresholds, grid = job
    try:
        return SweepCell(a, beta, shoot(BoundaryCondition(family, a), beta,
                                        params, target, thresholds, grid))
    except LabError as e:
        logger.warning("sweep cell a=%s beta=%s: %s", a, beta, e)
        return SweepCell(a, beta, error=f"{type(e).__name__}: {e}")


def sweep(family, a_values, beta_values, params,
          target=SolutionTag.UNBOUNDED_POSITIVE, thresholds=None,
          grid=None, threads=None):
    """
    Runs shoot() on every (a, beta) cell; per-cell errors are recorded and
    never abort the sweep. Cells run in worker processes and come back in
    grid order.
    """
    thresholds = thresholds or Thresholds()
    grid = grid or ScanGrid()
    jobs = [(family, float(a), float(b), params, target, thresholds, grid)
            for a in a_values for b in beta_values]
    if not jobs:
        return []
    workers = min(threads or sweep_threads(), len(jobs))
    if workers == 1:
        return [_sweep_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, jobs))

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
