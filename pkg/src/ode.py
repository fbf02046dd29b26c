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
Core of the boundary-layer equation f''' + f f'' - beta f'^2 = 0: the right
hand side, an adaptive Dormand-Prince 5(4) integrator with dense output and
sign-change events, and the closed-form solution 6/((2-beta)(t-tau)).
"""

import math
import logging
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from dataclasses import dataclass, field, replace

import numpy as np

from config import Config
from errors import (ConfigError, DomainError, DegenerateParameter,
                    InsufficientData, IntegrationFailure)


logger = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau, kept exact and rounded once per working dtype
_A = (
    (),
    ("1/5",),
    ("3/40", "9/40"),
    ("44/45", "-56/15", "32/9"),
    ("19372/6561", "-25360/2187", "64448/6561", "-212/729"),
    ("9017/3168", "-355/33", "46732/5247", "49/176", "-5103/18656"),
)
_B = ("35/384", "0", "500/1113", "125/192", "-2187/6784", "11/84")
# difference between the 5th and the embedded 4th order weights (7 stages)
_E = ("-71/57600", "0", "71/16695", "-71/1920", "17253/339200", "-22/525",
      "1/40")
# 4th order continuous extension, y(t + x h) = y + h K^T P [x, x^2, x^3, x^4]
_P = np.array([
    [1.0, -8048581381/2820520608, 8663915743/2820520608,
     -12715105075/11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200/32700410799, -68118460800/10900136933,
     87487479700/32700410799],
    [0.0, -1754552775/470086768, 14199869525/1410260304,
     -10690763975/1880347072],
    [0.0, 127303824393/49829197408, -318862633887/49829197408,
     701980252875/199316789632],
    [0.0, -282668133/205662961, 2019193451/616988883,
     -1453857185/822651844],
    [0.0, 40617522/29380423, -110615467/29380423, 69997945/29380423],
])
# interpolant weights: value and slope at the step midpoint, step integral
_MID_VALUE = np.array([1/2, 1/4, 1/8, 1/16])
_MID_SLOPE = np.array([1.0, 1.0, 3/4, 1/2])
_INTEGRAL = np.array([1/2, 1/3, 1/4, 1/5])

# PI step size controller
SAFETY = 0.9
PI_ALPHA = 0.7 / 5
PI_BETA = 0.4 / 5
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

COMPONENTS = ("f", "fp", "fpp")


@dataclass(frozen=True)
class Tableau:
    """ Dormand-Prince coefficients rounded to one floating point type """

    a: tuple
    b: np.ndarray
    e: np.ndarray


@lru_cache(maxsize=None)
def _tableau(dtype):
    def cast(row):
        values = [Fraction(x) for x in row]
        return np.array([dtype.type(q.numerator) / dtype.type(q.denominator)
                         for q in values], dtype=dtype)
    return Tableau(a=tuple(cast(row) for row in _A), b=cast(_B), e=cast(_E))


@dataclass(frozen=True)
class Params:
    """ The model parameter beta and the tolerances governing a run """

    beta: float
    rtol: float = 1e-10
    atol: float = 1e-12
    t_max: float = 1e4
    f_cap: float = 1e8
    # relative: a step is collapsed when h < step_min * max(1, |t|)
    step_min: float = 1e-13

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise ConfigError(f"beta must be finite, got {self.beta}")
        if not math.isfinite(self.t_max):
            raise ConfigError(f"t_max must be finite, got {self.t_max}")
        for name in ("rtol", "atol", "f_cap", "step_min"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, "
                                  f"got {value}")

    def with_overrides(self, **overrides):
        """ returns a copy with the non-None overrides applied """
        return replace(self, **{k: v for k, v in overrides.items()
                                if v is not None})

    @staticmethod
    def from_config(beta, section="integrator"):
        """ builds the parameters out of the [integrator] section """
        cfg = Config.get(section)
        return Params(beta=beta,
                      rtol=cfg.getfloat("rtol", "BL_RTOL", 1e-10),
                      atol=cfg.getfloat("atol", "BL_ATOL", 1e-12),
                      t_max=cfg.getfloat("t_max", "BL_T_MAX", 1e4),
                      f_cap=cfg.getfloat("f_cap", "BL_F_CAP", 1e8),
                      step_min=cfg.getfloat("step_min", "BL_STEP_MIN",
                                            1e-13))


@dataclass(frozen=True)
class OdeState:
    """ A sample (t, f, f', f''); f''' is always derived from the equation """

    t: float
    f: float
    fp: float
    fpp: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.t, self.f, self.fp,
                                              self.fpp)):
            raise DomainError(f"non-finite state {self}")

    def as_array(self):
        """ returns (f, f', f'') as an array """
        return np.array([self.f, self.fp, self.fpp], dtype=float)

    @staticmethod
    def from_array(t, y):
        """ builds a state out of t and a (f, f', f'') vector """
        return OdeState(float(t), float(y[0]), float(y[1]), float(y[2]))


class Termination(Enum):
    """ Reason an integration stopped """
    HORIZON_REACHED = "HorizonReached"
    F_CAP_HIT = "FCapHit"
    STEP_COLLAPSE = "StepCollapse"
    EVENT_STOP = "EventStop"
    # stops requested by the classifier once the outcome is decided
    RUNAWAY = "Runaway"
    SETTLED = "Settled"


@dataclass(frozen=True)
class EventSpec:
    """ Which sign changes to record, and whether the first one stops """

    kinds: tuple = ()
    terminal: bool = False

    def __post_init__(self):
        unknown = [k for k in self.kinds if k not in COMPONENTS]
        if unknown:
            raise DomainError(f"unknown event kinds {unknown}")


def _dense_value(y_old, h, q, x):
    """ the continuous extension of one step at t_old + x h """
    return y_old + h * (q @ np.array([x, x**2, x**3, x**4]))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Samples of (t, f, f', f''). `dense`, when kept, holds the interpolant
    coefficients of every step as one (n-1, 3, 4) array.
    """

    t: np.ndarray
    y: np.ndarray
    termination: Termination = Termination.HORIZON_REACHED
    event_log: tuple = ()
    dense: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        if t.ndim != 1 or len(t) != len(y):
            raise DomainError("time and state samples do not match")
        if len(t) < 2:
            raise InsufficientData("a trajectory needs at least 2 samples")
        if not np.all(np.diff(t) > 0):
            raise DomainError("trajectory samples are not strictly "
                              "increasing in t")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise DomainError("trajectory holds non-finite samples")
        if self.dense is not None:
            dense = np.asarray(self.dense, dtype=float)
            if dense.shape != (len(t) - 1, 3, 4):
                raise DomainError(f"dense output of shape {dense.shape} for "
                                  f"{len(t)} samples")
            object.__setattr__(self, "dense", dense)

    @staticmethod
    def from_samples(t, f, fp, fpp, termination=Termination.HORIZON_REACHED,
                     event_log=()):
        """ builds a trajectory without dense output out of arrays """
        return Trajectory(np.asarray(t, dtype=float),
                          np.column_stack([f, fp, fpp]).astype(float),
                          termination, tuple(event_log))

    def __len__(self):
        return len(self.t)

    @property
    def f(self):
        """ samples of f """
        return self.y[:, 0]

    @property
    def fp(self):
        """ samples of f' """
        return self.y[:, 1]

    @property
    def fpp(self):
        """ samples of f'' """
        return self.y[:, 2]

    def fppp(self, beta):
        """ f''' recomputed from the equation at every sample """
        return beta * self.fp**2 - self.f * self.fpp

    @property
    def samples(self):
        """ the samples as a list of states """
        return [OdeState.from_array(t, y) for t, y in zip(self.t, self.y)]

    @property
    def final(self):
        """ the last sample """
        return OdeState.from_array(self.t[-1], self.y[-1])

    @property
    def t_end(self):
        """ time of the last sample """
        return float(self.t[-1])

    @property
    def steps(self):
        """ step lengths """
        return np.diff(self.t)

    def state_at(self, t):
        """ (f, f', f'') at time t, from dense output when available """
        if not self.t[0] <= t <= self.t[-1]:
            raise DomainError(f"t={t} outside [{self.t[0]}, {self.t[-1]}]")
        if self.dense is not None:
            i = int(np.searchsorted(self.t, t, side="right")) - 1
            i = min(max(i, 0), len(self.t) - 2)
            h = self.t[i + 1] - self.t[i]
            return _dense_value(self.y[i], h, self.dense[i],
                                (t - self.t[i]) / h)
        return np.array([np.interp(t, self.t, self.y[:, i])
                         for i in range(3)])

    def step_integrals(self):
        """ integral of the interpolant over every step, shape (n-1, 3) """
        if self.dense is None:
            raise InsufficientData("the trajectory kept no dense output")
        h = self.steps[:, None]
        return h * (self.y[:-1] + h * (self.dense @ _INTEGRAL))

    def since(self, t_from):
        """ the part of the trajectory starting at the first sample >= t_from """
        index = int(np.searchsorted(self.t, t_from, side="left"))
        if index > len(self.t) - 2:
            raise InsufficientData(f"fewer than 2 samples after t={t_from}")
        dense = None if self.dense is None else self.dense[index:]
        events = tuple(e for e in self.event_log if e[0] >= self.t[index])
        return Trajectory(self.t[index:], self.y[index:], self.termination,
                          events, dense)


def _field(y, beta):
    """ the first order system (f, f', f'')' """
    return np.array([y[1], y[2], beta * y[1] * y[1] - y[0] * y[2]])


def rhs(state, beta):
    """ Returns f''' = beta f'^2 - f f'' """
    if not math.isfinite(beta):
        raise DomainError(f"non-finite beta {beta}")
    if not all(math.isfinite(x) for x in (state.f, state.fp, state.fpp)):
        raise DomainError(f"non-finite state {state}")
    return beta * state.fp**2 - state.f * state.fpp


def exact_solution(t, beta, tau=0.0):
    """
    The closed-form solution f(t) = 6/((2-beta)(t-tau)) with its derivatives.
    It is bounded, convex and satisfies f'(inf) = 0 on every [t0, inf) with
    t0 > tau.
    """
    if beta == 2:
        raise DegenerateParameter("no closed-form solution for beta = 2")
    if not t > tau:
        raise DomainError(f"exact solution needs t > tau (t={t}, tau={tau})")
    k = 6.0 / (2.0 - beta)
    x = t - tau
    return OdeState(t, k / x, -k / x**2, 2 * k / x**3)


def trajectory_from_exact(beta, tau, t_grid):
    """ samples the closed-form solution on a grid """
    states = [exact_solution(float(t), beta, tau) for t in t_grid]
    return Trajectory.from_samples([s.t for s in states],
                                   [s.f for s in states],
                                   [s.fp for s in states],
                                   [s.fpp for s in states])


class DormandPrince():
    """
    Adaptive (or fixed step) Dormand-Prince 5(4) stepper for y' = fun(y),
    in double or any wider numpy floating point type
    """

    def __init__(self, fun, rtol, atol, step_min, fixed_step=None,
                 dtype=float):
        self.fun = fun
        self.rtol = rtol
        self.atol = atol
        self.step_min = step_min
        self.fixed_step = fixed_step
        self.dtype = np.dtype(dtype)
        self.tableau = _tableau(self.dtype)
        self.rejected = 0
        self._err_old = 1e-4

    def step(self, t, y, k1, h):
        """ one trial step; returns (y_new, stages, error vector) """
        tab = self.tableau
        k = np.empty((7, len(y)), dtype=y.dtype)
        k[0] = k1
        for i in range(1, 6):
            k[i] = self.fun(y + h * (tab.a[i] @ k[:i]))
        y_new = y + h * (tab.b @ k[:6])
        k[6] = self.fun(y_new)
        return y_new, k, h * (tab.e @ k)

    def initial_step(self, y, f0, order=5):
        """ starting step size from the local scale of the solution """
        if self.fixed_step:
            return self.fixed_step
        scale = self.atol + self.rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale)**2))
        d1 = np.sqrt(np.mean((f0 / scale)**2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        f1 = self.fun(y + h0 * f0)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale)**2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2))**(1 / order)
        return float(min(100 * h0, h1))

    def accept(self, y, y_new, err_vec):
        """
        returns (accepted, factor) where factor rescales the step size;
        fixed step mode accepts every step
        """
        if self.fixed_step:
            return True, 1.0
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(over="ignore", invalid="ignore"):
            err = float(np.max(np.abs(err_vec) / scale))
        if not (math.isfinite(err) and np.all(np.isfinite(y_new))):
            self.rejected += 1
            return False, MIN_FACTOR
        if err > 1.0:
            self.rejected += 1
            return False, max(MIN_FACTOR, SAFETY * err**-PI_ALPHA)
        if err == 0.0:
            factor = MAX_FACTOR
        else:
            factor = SAFETY * err**-PI_ALPHA * self._err_old**PI_BETA
        self._err_old = max(err, 1e-4)
        return True, min(MAX_FACTOR, max(MIN_FACTOR, factor))

    def run(self, t0, y0, t_end, cap=None, on_step=None, keep_stages=False):
        """
        Advances from t0 to t_end. `cap(y)` returns True when the state left
        the admissible region; `on_step(ts, ys, stages)` sees the samples
        so far and returns a Termination to stop after the step.
        Returns (times, states, stages, termination); stages holds the
        (7, dim) stage matrix of every step when keep_stages is set.
        """
        t, y = t0, np.array(y0, dtype=self.dtype)
        k1 = self.fun(y)
        h = self.initial_step(y, k1)
        ts, ys, stages = [t], [y], []
        termination = Termination.HORIZON_REACHED
        with np.errstate(over="ignore", invalid="ignore"):
            while t < t_end:
                h_min = self.step_min * max(1.0, abs(t))
                if h < h_min:
                    termination = Termination.STEP_COLLAPSE
                    break
                last = t + h >= t_end - h_min
                if last:
                    h = t_end - t
                y_new, k, err_vec = self.step(t, y, k1, h)
                accepted, factor = self.accept(y, y_new, err_vec)
                if not accepted:
                    h *= factor
                    continue
                t = t_end if last else t + h
                y, k1 = y_new, k[6]
                ts.append(t)
                ys.append(y)
                if keep_stages:
                    stages.append(k)
                stop = on_step(ts, ys, k) if on_step is not None else None
                if cap is not None and cap(y):
                    termination = Termination.F_CAP_HIT
                    break
                if stop is not None:
                    termination = stop
                    break
                h *= factor
        logger.debug("integration stopped at t=%s after %d steps "
                     "(%d rejected): %s", t, len(ts) - 1, self.rejected,
                     termination.value)
        return ts, ys, stages, termination


def _locate_sign_change(t_old, h, y_old, q, index, rtol, atol):
    """ bisection on the interpolant for a zero of component `index` """
    def value(t):
        return _dense_value(y_old, h, q, (t - t_old) / h)[index]

    lo, hi = t_old, t_old + h
    v_lo, v_hi = y_old[index], value(hi)
    bound = atol + rtol * max(abs(v_lo), abs(v_hi))
    for _ in range(200):
        if hi - lo <= rtol * max(1.0, abs(hi)) and \
                min(abs(v_lo), abs(v_hi)) <= bound:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        v_mid = value(mid)
        if v_mid == 0.0:
            return mid
        if math.copysign(1.0, v_mid) == math.copysign(1.0, v_lo):
            lo, v_lo = mid, v_mid
        else:
            hi, v_hi = mid, v_mid
    return lo if abs(v_lo) < abs(v_hi) else hi


def integrate(initial, params, events=None, fixed_step=None, dense=False,
              stop=None):
    """
    Integrates the equation from `initial` up to params.t_max. Stops early
    when |f| >= f_cap, when the step size collapses (finite-time blow-up), at
    the first requested sign change if events.terminal is set, or when
    `stop(ts, ys)` returns a Termination. The interpolant of every step is
    kept only with dense=True.
    """
    events = events or EventSpec()
    if not params.t_max > initial.t:
        raise DomainError(f"t_max={params.t_max} must exceed the initial "
                          f"time {initial.t}")
    beta = params.beta
    indexes = [COMPONENTS.index(kind) for kind in events.kinds]
    event_log = []

    def on_step(ts, ys, k):
        y_old, y_new = ys[-2], ys[-1]
        found = []
        for i in indexes:
            old, new = y_old[i], y_new[i]
            if old * new < 0 or (new == 0.0 and old != 0.0):
                t_e = _locate_sign_change(ts[-2], ts[-1] - ts[-2], y_old,
                                          k.T @ _P, i, params.rtol,
                                          params.atol)
                found.append((t_e, COMPONENTS[i]))
        found.sort()
        event_log.extend(found)
        if found and events.terminal:
            return Termination.EVENT_STOP
        return stop(ts, ys) if stop is not None else None

    stepper = DormandPrince(lambda y: _field(y, beta), params.rtol,
                            params.atol, params.step_min, fixed_step)
    ts, ys, stages, termination = stepper.run(
        initial.t, initial.as_array(), params.t_max,
        cap=lambda y: abs(y[0]) >= params.f_cap, on_step=on_step,
        keep_stages=dense)
    if len(ts) < 2:
        raise IntegrationFailure(f"step size collapsed at t={initial.t} "
                                 "before any progress", samples=[initial])
    coefficients = np.einsum("nsi,sj->nij", np.array(stages), _P) \
        if dense else None
    trajectory = Trajectory(np.array(ts), np.array(ys), termination,
                            tuple(event_log), coefficients)
    logger.debug("beta=%s from %s: %s at t=%s, f=%s", beta, initial,
                 termination.value, trajectory.t_end, trajectory.final.f)
    return trajectory


def central_derivative(x, y):
    """
    Derivative at x[2:-2] of the quartic through five consecutive samples;
    fourth order on non-uniform grids.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 5:
        raise InsufficientData("five point differences need 5 samples")
    # offsets of the five nodes from the centre one, shape (n-4, 5)
    d = np.stack([x[j:n - 4 + j] - x[2:n - 2] for j in range(5)], axis=1)
    values = np.stack([y[j:n - 4 + j] for j in range(5)], axis=1)
    weights = np.empty_like(d)
    for j in range(5):
        others = [m for m in range(5) if m != j]
        if j == 2:
            weights[:, j] = -sum(1.0 / d[:, m] for m in others)
            continue
        numerator = np.prod([-d[:, m] for m in others if m != 2], axis=0)
        denominator = np.prod([d[:, j] - d[:, m] for m in others], axis=0)
        weights[:, j] = numerator / denominator
    return np.sum(weights * values, axis=1)


def residual(trajectory, beta):
    """
    Max over interior points of |f''' + f f'' - beta f'^2| where f''' comes
    from differentiating the computed f'' (never from the equation itself).
    With dense output the check runs at the midpoint of every step, otherwise
    on samples with 4th order finite differences.
    """
    if len(trajectory) < 3:
        raise InsufficientData("residual needs at least 3 samples")
    if trajectory.dense is not None:
        h = trajectory.steps[:, None]
        mid = trajectory.y[:-1] + h * (trajectory.dense @ _MID_VALUE)
        fppp = (trajectory.dense @ _MID_SLOPE)[:, 2]
        f, fp, fpp = mid[:, 0], mid[:, 1], mid[:, 2]
        return float(np.max(np.abs(fppp + f * fpp - beta * fp * fp)))
    t, y = trajectory.t, trajectory.y
    if len(trajectory) >= 5:
        fppp, inner = central_derivative(t, y[:, 2]), slice(2, -2)
    else:
        fppp, inner = np.gradient(y[:, 2], t)[1:-1], slice(1, -1)
    f, fp, fpp = y[inner, 0], y[inner, 1], y[inner, 2]
    return float(np.max(np.abs(fppp + f * fpp - beta * fp * fp)))


def observed_order(beta, steps=(0.01, 0.005, 0.0025), t0=1.0, t1=2.0,
                   tau=0.0, dtype=np.longdouble):
    """
    Convergence order of the fixed step integrator against the closed-form
    solution: log2 of the error ratio for every halving of the step. Larger
    steps are still dominated by the h^6 term on this solution, and the
    smaller ones need the wider `dtype` to stay above round-off.
    """
    dtype = np.dtype(dtype)
    if np.finfo(dtype).eps >= np.finfo(float).eps:
        logger.warning("%s is no wider than double, the smallest steps may "
                       "reach round-off", dtype.name)
    one = dtype.type(1)
    b = one * beta
    k = 6 * one / (2 - b)

    def exact(t):
        x = one * t - one * tau
        return np.array([k / x, -k / x**2, 2 * k / x**3], dtype=dtype)

    errors = []
    for h in steps:
        stepper = DormandPrince(lambda y: _field(y, b), 1.0, 1.0, 1e-13,
                                fixed_step=one * h, dtype=dtype)
        _, ys, _, _ = stepper.run(one * t0, exact(t0), one * t1)
        errors.append(float(np.max(np.abs(ys[-1] - exact(t1)))))
    orders = [math.log(e0 / e1) / math.log(h0 / h1)
              for e0, e1, h0, h1 in zip(errors, errors[1:], steps, steps[1:])]
    logger.info("fixed step errors %s, observed orders %s", errors, orders)
    return orders

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
