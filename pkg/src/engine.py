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
Runs the laboratory commands: integrate, shoot, sweep, fit, phase and the
verify suite. Every command writes its artifacts under the output directory
and returns the process exit status.
"""

import os
import logging
from dataclasses import dataclass, field

from config import Config
from errors import LabError, ConfigError
from ode import Params, OdeState, exact_solution, integrate, residual
from shooting import (BoundaryCondition, Family, SolutionTag, Thresholds,
                      ScanGrid, shoot, sweep, sign_structure_report)
from asymptotics import asymptotic_report
from blowup import (equilibria, to_blowup, vector_field_grid,
                    center_manifold_coeff)
import utils
import verify


logger = logging.getLogger(__name__)

COMMANDS = ("integrate", "shoot", "sweep", "fit", "phase", "verify")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    """ A single command and everything it needs """

    command: str
    beta: float = None
    family: str = "temperature"
    a: float = 0.0
    target: str = "UnboundedPositive"
    # initial state overrides for integrate
    exact: bool = False
    tau: float = 0.0
    t0: float = 0.0
    f0: float = None
    fp0: float = None
    fpp0: float = None
    # integrator overrides
    rtol: float = None
    atol: float = None
    t_max: float = None
    f_cap: float = None
    # sweep grid
    a_values: list = field(default_factory=list)
    beta_values: list = field(default_factory=list)
    threads: int = None
    # inputs and outputs
    trajectory_in: str = None
    out: str = None
    out_dir: str = None
    quick: bool = False

    def validate(self):
        """ raises ConfigError when a required field is missing """
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'")
        needs_beta = self.command in ("integrate", "shoot", "fit", "phase")
        if needs_beta and self.beta is None:
            raise ConfigError(f"{self.command} needs --beta")
        if self.command == "integrate" and not self.exact and \
                None in (self.f0, self.fp0, self.fpp0):
            raise ConfigError("integrate needs --exact or all of "
                              "--f0/--fp0/--fpp0")
        if self.command == "sweep" and not self.beta_values:
            logger.info("sweep with an empty beta range")
        try:
            Family(self.family)
        except ValueError as e:
            raise ConfigError(f"unknown family '{self.family}'") from e
        try:
            SolutionTag.parse(self.target)
        except LabError as e:
            raise ConfigError(str(e)) from e
        out_dir = self.output_dir()
        os.makedirs(out_dir, exist_ok=True)
        if not os.access(out_dir, os.W_OK):
            raise ConfigError(f"output directory {out_dir} is not writable")

    def output_dir(self):
        """ where the artifacts go """
        return self.out_dir or Config.lab("out_dir", "BL_LAB_OUT", ".")

    def path(self, name):
        """ artifact path inside the output directory """
        return os.path.join(self.output_dir(), name)

    def params(self, beta=None):
        """ integrator parameters: config file, then command line """
        beta = self.beta if beta is None else beta
        return Params.from_config(beta if beta is not None else 0.0) \
            .with_overrides(rtol=self.rtol, atol=self.atol,
                            t_max=self.t_max, f_cap=self.f_cap)

    def bc(self):
        """ boundary condition of the shooting commands """
        return BoundaryCondition(Family(self.family), self.a)


def run_integrate(cfg):
    """ integrate from an exact or explicit initial state """
    params = cfg.params()
    if cfg.exact:
        initial = exact_solution(cfg.t0, cfg.beta, cfg.tau)
    else:
        initial = OdeState(cfg.t0, cfg.f0, cfg.fp0, cfg.fpp0)
    trajectory = integrate(initial, params, dense=True)
    out = cfg.out or cfg.path("trajectory.csv")
    utils.write_trajectory_csv(trajectory, out)
    logger.info("integrated to t=%s (%s), %d samples, residual %.3g",
                trajectory.t_end, trajectory.termination.value,
                len(trajectory), residual(trajectory, cfg.beta))
    if cfg.exact:
        reference = exact_solution(trajectory.t_end, cfg.beta, cfg.tau)
        logger.info("deviation from the closed form at t=%s: %.3g",
                    trajectory.t_end, abs(trajectory.final.f - reference.f))
    return EXIT_OK


def _shoot(cfg):
    return shoot(cfg.bc(), cfg.beta, cfg.params(),
                 SolutionTag.parse(cfg.target), Thresholds.from_config(),
                 ScanGrid.from_config())


def run_shoot(cfg):
    """ locate the free parameter and report it """
    result = _shoot(cfg)
    utils.write_report_json(result, cfg.out or cfg.path("shoot.json"))
    utils.write_trajectory_csv(result.trajectory,
                               cfg.path("shoot-trajectory.csv"))
    return EXIT_OK


def run_sweep(cfg):
    """ shoot over the (a, beta) grid """
    cells = sweep(Family(cfg.family), cfg.a_values, cfg.beta_values,
                  cfg.params(), SolutionTag.parse(cfg.target),
                  Thresholds.from_config(), ScanGrid.from_config(),
                  cfg.threads)
    utils.write_report_json(cells, cfg.out or cfg.path("sweep.json"))
    rows = []
    for cell in cells:
        if cell.result:
            rows.append((cell.a, cell.beta, cell.result.value,
                         cell.result.class_at_value.tag.value))
        else:
            rows.append((cell.a, cell.beta, "", "error"))
    utils.write_rows(cfg.path("sweep.csv"), ["a", "beta", "value", "class"],
                     rows)
    return EXIT_OK


def run_fit(cfg):
    """ asymptotic report of a stored or freshly shot trajectory """
    if cfg.trajectory_in:
        trajectory = utils.read_trajectory_csv(cfg.trajectory_in)
    else:
        trajectory = _shoot(cfg).trajectory
    section = Config.get("asymptotics")
    params = cfg.params()
    report = asymptotic_report(
        trajectory, cfg.beta,
        window_fraction=section.getfloat("window_fraction", None, 0.25),
        s_count=section.getint("s_count", None, 5),
        rtol=params.rtol, atol=params.atol)
    utils.write_report_json(report, cfg.out or cfg.path("fit.json"))
    return EXIT_OK


def run_phase(cfg):
    """ equilibria, vector field and, given a trajectory, its image """
    reports = equilibria(cfg.beta)
    manifold = center_manifold_coeff(cfg.beta)
    utils.write_report_json({"beta": cfg.beta,
                             "points": [r.to_dict() for r in reports],
                             "center_manifold": {
                                 "a2": manifold.a2,
                                 "a3": manifold.a3,
                                 "flow_coeff": manifold.flow_coeff}},
                            cfg.out or cfg.path("equilibria.json"))
    utils.write_field_csv(vector_field_grid(cfg.beta),
                          cfg.path("vector-field.csv"))
    if cfg.trajectory_in:
        trajectory = utils.read_trajectory_csv(cfg.trajectory_in)
        signs = sign_structure_report(trajectory, cfg.beta)
        if signs.t1 is not None and trajectory.t[signs.t1_index] > 0:
            trajectory = trajectory.since(signs.t1)
        utils.write_phase_csv(to_blowup(trajectory), cfg.path("phase.csv"))
    return EXIT_OK


def run_verify(cfg):
    """ the acceptance suite; failure of any check fails the command """
    results = verify.run_suite(quick=cfg.quick, params=cfg.params(-1.0))
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    utils.write_report_json([r.to_dict() for r in results],
                            cfg.out or cfg.path("verify.json"))
    return EXIT_FAILURE if failed else EXIT_OK


HANDLERS = {
    "integrate": run_integrate,
    "shoot": run_shoot,
    "sweep": run_sweep,
    "fit": run_fit,
    "phase": run_phase,
    "verify": run_verify,
}


def run(cfg):
    """ dispatches a command and maps errors on the exit status """
    try:
        cfg.validate()
        return HANDLERS[cfg.command](cfg)
    except ConfigError as e:
        logger.error("invalid configuration: %s", e)
        return EXIT_CONFIG
    except LabError as e:
        logger.error("%s failed: %s: %s", cfg.command, type(e).__name__, e)
        return EXIT_FAILURE
    except OSError as e:
        logger.exception("%s failed writing artifacts: %s", cfg.command, e)
        return EXIT_FAILURE

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
