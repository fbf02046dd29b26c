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
Asymptotics of unbounded solutions: |f(t)| ~ c t^(1/(1-beta)), the limit l0
of f' |f|^(-beta), the integral identity linking l0 to any s past t1, and
the conserved quantity f'' + f f' at beta = -1.
"""

import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from errors import DomainError, InsufficientData, ParameterError
from shooting import sign_structure_report


logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 8
WINDOW_FRACTION = 0.25


@dataclass(frozen=True)
class PowerLawFit:
    """ log |f| = log c + p log t over a window """

    c_hat: float
    p_hat: float
    rms_log_error: float
    samples: int


def _window(trajectory, window):
    if window is None:
        window = (WINDOW_FRACTION * trajectory.t_end, trajectory.t_end)
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise DomainError(f"empty window [{t_lo}, {t_hi}]")
    if t_lo < trajectory.t[0] or t_hi > trajectory.t[-1]:
        raise DomainError(f"window [{t_lo}, {t_hi}] outside the trajectory "
                          f"span [{trajectory.t[0]}, {trajectory.t[-1]}]")
    return t_lo, t_hi


def fit_power_law(trajectory, window=None):
    """
    Least-squares line through (log t, log |f|) on the window samples,
    [t_end/4, t_end] by default.
    """
    t_lo, t_hi = _window(trajectory, window)
    mask = (trajectory.t >= t_lo) & (trajectory.t <= t_hi)
    t, f = trajectory.t[mask], trajectory.f[mask]
    if len(t) < MIN_FIT_SAMPLES:
        raise InsufficientData(f"{len(t)} samples in [{t_lo}, {t_hi}], "
                               f"need {MIN_FIT_SAMPLES}")
    if np.any(f == 0) or t[0] <= 0:
        raise DomainError("f vanishes (or t <= 0) inside the fit window")
    x, y = np.log(t), np.log(np.abs(f))
    p_hat, log_c = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (log_c + p_hat * x))**2)))
    return PowerLawFit(float(math.exp(log_c)), float(p_hat), rms, len(t))


def window_sensitivity(trajectory, windows=None):
    """
    Exponents fitted over several windows, including truncated horizons, so
    the dependence on the window and on t_max can be reported.
    """
    t_end = trajectory.t_end
    if windows is None:
        windows = [(t_end / 8, t_end), (t_end / 4, t_end), (t_end / 2, t_end),
                   (t_end / 8, t_end / 2), (t_end / 16, t_end / 4)]
    rows = []
    for lo, hi in windows:
        try:
            fit = fit_power_law(trajectory, (lo, hi))
            rows.append((lo, hi, fit.p_hat))
        except DomainError as e:
            logger.debug("window [%s, %s] skipped: %s", lo, hi, e)
    return rows


@dataclass(frozen=True, eq=False)
class L0Estimate:
    """ phi = f' f^-beta (f > 0) or psi = f' (-f)^-beta (f < 0) on a tail """

    l0_hat: float
    t: np.ndarray
    curve: np.ndarray
    branch: int


def _branch(f):
    if np.all(f > 0):
        return 1
    if np.all(f < 0):
        return -1
    raise DomainError("f changes sign (or vanishes) on the evaluation tail")


def estimate_l0(trajectory, beta, t_from=None):
    """
    Evaluates phi (or psi on the negative branch) at every sample past
    t_from (t_end/4 by default); its last value estimates l0.
    """
    if t_from is None:
        t_from = WINDOW_FRACTION * trajectory.t_end
    mask = trajectory.t >= t_from
    if not np.any(mask):
        raise InsufficientData(f"no sample after t={t_from}")
    f, fp = trajectory.f[mask], trajectory.fp[mask]
    branch = _branch(f)
    curve = fp * (branch * f)**(-beta)
    return L0Estimate(float(curve[-1]), trajectory.t[mask], curve, branch)


def is_non_increasing(curve, atol=1e-12, rtol=0.0):
    """ True when no sample exceeds its predecessor by more than the slack """
    slack = atol + rtol * np.abs(curve[:-1])
    return bool(np.all(np.diff(curve) <= slack))


def _identity_terms(t, y, beta, branch):
    """ the boundary terms and the integrand of the identity """
    f, fp, fpp = y[..., 0], y[..., 1], y[..., 2]
    g = branch * f
    if branch > 0:
        boundary = g**(-beta - 1) * fpp + g**(-beta) * fp
    else:
        boundary = g**(-beta) * fp - g**(-beta - 1) * fpp
    integrand = g**(-beta - 2) * fp * fpp
    return boundary, integrand


def identity_residual(trajectory, beta, s_values):
    """
    For every s returns
      f^(-b-1) f''(s) + f^(-b) f'(s) - (b+1) int_s^t_end f^(-b-2) f' f'' dr
    (mirrored with powers of -f when f < 0). Every value should match the
    same l0.
    """
    start, end = trajectory.t[0], trajectory.t[-1]
    branch = _branch(trajectory.f)
    _, integrand = _identity_terms(trajectory.t, trajectory.y, beta, branch)
    # int_t^t_end on the samples
    tail = cumulative_trapezoid(integrand, trajectory.t, initial=0.0)
    tail = tail[-1] - tail
    values = []
    for s in s_values:
        if not start <= s <= end:
            raise DomainError(f"s={s} outside [{start}, {end}]")
        y_s = trajectory.state_at(s)
        boundary, g_s = _identity_terms(s, y_s, beta, branch)
        k = int(np.searchsorted(trajectory.t, s, side="left"))
        # trapezoid from s to the next sample, then the tabulated tail
        integral = tail[k] + 0.5 * (g_s + integrand[k]) * (trajectory.t[k] - s)
        values.append(float(boundary - (beta + 1) * integral))
    return values


def integral_remainder(trajectory, beta):
    """
    Estimate of the neglected part int_t_end^inf of the identity integral,
    extrapolating the integrand as a power of t from the last two samples.
    """
    branch = _branch(trajectory.f[-2:])
    _, g = _identity_terms(trajectory.t[-2:], trajectory.y[-2:], beta, branch)
    if g[-1] == 0:
        return 0.0
    if g[-2] == 0 or np.sign(g[-2]) != np.sign(g[-1]):
        return math.inf
    t0, t1 = trajectory.t[-2:]
    q = -math.log(abs(g[-1] / g[-2])) / math.log(t1 / t0)
    if q <= 1:
        return math.inf
    return float(abs(g[-1]) * t1 / (q - 1))


def energy_drift(trajectory, beta):
    """
    E = f'' + f f' is conserved when beta = -1 (dE/dt = (beta+1) f'^2).
    Returns (max |E(t) - E0|, E0).
    """
    if beta != -1:
        raise ParameterError(f"f'' + f f' is only conserved for beta = -1, "
                             f"got {beta}")
    energy = trajectory.fpp + trajectory.f * trajectory.fp
    e0 = float(energy[0])
    return float(np.max(np.abs(energy - e0))), e0


@dataclass(frozen=True, eq=False)
class AsymptoticFit:
    """ Fitted and predicted asymptotics of an unbounded run """

    beta: float
    p_hat: float
    c_hat: float
    p_theory: float
    l0_hat: float
    c_from_l0: float
    window: tuple
    rms_log_error: float
    t1: float
    phi_monotone: bool
    identity_values: list = field(default_factory=list)
    identity_stddev: float = 0.0
    integral_remainder: float = 0.0
    energy_drift: float = None
    energy_e0: float = None
    sensitivity: list = field(default_factory=list)

    def to_dict(self):
        """ JSON-ready report """
        report = {"beta": self.beta,
                  "p_hat": self.p_hat,
                  "p_theory": self.p_theory,
                  "c_hat": self.c_hat,
                  "l0_hat": self.l0_hat,
                  "c_from_l0": self.c_from_l0,
                  "window": [self.window[0], self.window[1]],
                  "rms_log_error": self.rms_log_error,
                  "identity_stddev": self.identity_stddev,
                  "t1": self.t1,
                  "phi_monotone": self.phi_monotone,
                  "integral_remainder": self.integral_remainder,
                  "window_sensitivity": [list(row)
                                         for row in self.sensitivity]}
        if self.energy_drift is not None:
            report["energy_drift"] = self.energy_drift
            report["energy_e0"] = self.energy_e0
        return report


def asymptotic_report(trajectory, beta, window_fraction=WINDOW_FRACTION,
                      s_count=5, rtol=1e-10, atol=1e-12):
    """
    Composes the exponent fit, the l0 estimate and the identity check on an
    unbounded run. t1 is the first sample past which the sign pattern
    f'' f' < 0, f''' f'' < 0 holds through the end.
    """
    if beta >= 1:
        raise ParameterError(f"no growth exponent 1/(1-beta) for beta={beta}")
    signs = sign_structure_report(trajectory, beta, atol)
    if signs.t1 is None:
        raise DomainError("the sign pattern never settles: not an unbounded "
                          f"run (violation {signs.pattern_violation})")
    t_end = trajectory.t_end
    t1 = signs.t1
    tail = trajectory.since(t1)
    _branch(tail.f)

    window = (max(t1, window_fraction * t_end), t_end)
    fit = fit_power_law(trajectory, window)
    l0 = estimate_l0(tail, beta, t1)
    monotone = is_non_increasing(l0.curve, atol, rtol)

    s_lo = max(t1, 1e-3 * t_end)
    s_values = np.geomspace(s_lo, 0.5 * t_end, s_count) if s_lo > 0 else \
        np.linspace(s_lo, 0.5 * t_end, s_count)
    identity = identity_residual(tail, beta, s_values)

    p_theory = 1.0 / (1.0 - beta)
    c_from_l0 = (abs(l0.l0_hat) * (1.0 - beta))**p_theory
    drift, e0 = energy_drift(trajectory, beta) if beta == -1 else (None, None)
    report = AsymptoticFit(beta=beta, p_hat=fit.p_hat, c_hat=fit.c_hat,
                           p_theory=p_theory, l0_hat=l0.l0_hat,
                           c_from_l0=c_from_l0, window=window,
                           rms_log_error=fit.rms_log_error, t1=t1,
                           phi_monotone=monotone,
                           identity_values=identity,
                           identity_stddev=float(np.std(identity)),
                           integral_remainder=integral_remainder(tail, beta),
                           energy_drift=drift, energy_e0=e0,
                           sensitivity=window_sensitivity(trajectory))
    logger.info("beta=%s: p_hat=%.6g (theory %.6g), c_hat=%.6g, "
                "c from l0=%.6g", beta, report.p_hat, p_theory, report.c_hat,
                c_from_l0)
    spread = [p for _, _, p in report.sensitivity]
    if spread and max(spread) - min(spread) > 0.02 * abs(p_theory):
        logger.warning("fitted exponent moves with the window: %s",
                       report.sensitivity)
    return report

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
