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

""" Main module that parses the command line and runs a lab command """

import sys
import logging
import argparse
from config import Config
from errors import ConfigError
from version import __version__


def _floats(value):
    """ comma separated list of floats """
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad list of numbers: {value}") \
            from e


def _integrator_args(sub):
    sub.add_argument('--rtol', type=float, default=None,
                     help='relative tolerance of the integrator')
    sub.add_argument('--atol', type=float, default=None,
                     help='absolute tolerance of the integrator')
    sub.add_argument('--t-end', dest='t_max', type=float, default=None,
                     help='integration horizon')
    sub.add_argument('--f-cap', type=float, default=None,
                     help='|f| at which a run is stopped as a blow-up')


def _shoot_args(sub):
    sub.add_argument('--family', choices=['temperature', 'flux'],
                     default='temperature',
                     help='boundary-condition family at t = 0')
    sub.add_argument('-a', type=float, default=0.0,
                     help='value of f(0)')
    sub.add_argument('--target', default='UnboundedPositive',
                     help='solution class to shoot for')


parser = argparse.ArgumentParser(description='Boundary-layer ODE laboratory',
                                 prog=sys.argv[0],
                                 epilog='\n')
# Argument used to print the current version
parser.add_argument('-v', '--version',
                    action='version',
                    default=None,
                    version=f'bl-lab {__version__}')
parser.add_argument('-c', '--config',
                    metavar='[CONFIG]',
                    type=str,
                    default=None,
                    help='specify a configuration file')
parser.add_argument('-d', '--debug',
                    action='store_true',
                    help='verbose logging')
# options shared by every command
common = argparse.ArgumentParser(add_help=False)
common.add_argument('--out-dir', default=None,
                    help='directory of the artifacts')
common.add_argument('--out', default=None,
                    help='path of the main artifact')

commands = parser.add_subparsers(dest='command', required=True)

integrate = commands.add_parser('integrate', parents=[common],
                               help='integrate one trajectory')
integrate.add_argument('--beta', type=float, required=True)
integrate.add_argument('--exact', action='store_true',
                       help='start on the closed-form solution at --t0')
integrate.add_argument('--tau', type=float, default=0.0,
                       help='pole of the closed-form solution')
integrate.add_argument('--t0', type=float, default=0.0)
integrate.add_argument('--f0', type=float, default=None)
integrate.add_argument('--fp0', type=float, default=None)
integrate.add_argument('--fpp0', type=float, default=None)
_integrator_args(integrate)

shoot = commands.add_parser('shoot', parents=[common],
                           help='locate the free unknown at t = 0')
shoot.add_argument('--beta', type=float, required=True)
_shoot_args(shoot)
_integrator_args(shoot)

sweep = commands.add_parser('sweep', parents=[common],
                           help='shoot over an (a, beta) grid')
sweep.add_argument('--a-values', type=_floats, default=[0.0])
sweep.add_argument('--beta-values', type=_floats, required=True)
sweep.add_argument('--threads', type=int, default=None)
_shoot_args(sweep)
_integrator_args(sweep)

fit = commands.add_parser('fit', parents=[common],
                         help='asymptotic report of an unbounded run')
fit.add_argument('--beta', type=float, required=True)
fit.add_argument('--trajectory', dest='trajectory_in', default=None,
                 help='trajectory CSV; shoots a fresh one otherwise')
_shoot_args(fit)
_integrator_args(fit)

phase = commands.add_parser('phase', parents=[common],
                           help='blow-up plane analysis')
phase.add_argument('--beta', type=float, required=True)
phase.add_argument('--trajectory', dest='trajectory_in', default=None,
                   help='trajectory CSV to map on the plane')

check = commands.add_parser('verify', parents=[common],
                           help='run the acceptance suite')
check.add_argument('--quick', action='store_true',
                   help='only the beta = -1 runs')
_integrator_args(check)


def config_from_args(args):
    """ builds the RunConfig out of the parsed command line """
    from engine import RunConfig
    known = RunConfig.__dataclass_fields__
    values = {k: v for k, v in vars(args).items() if k in known}
    return RunConfig(**values)


if __name__ == '__main__':
    parsed_args = parser.parse_args()

    logging.basicConfig(
        level=logging.DEBUG if parsed_args.debug else logging.INFO,
        format='%(asctime)s - tid: %(thread)d - %(levelname)s - %(message)s',
    )

    try:
        Config.init(parsed_args.config)
    except ConfigError as e:
        logging.error("invalid configuration: %s", e)
        sys.exit(2)

    from engine import run
    sys.exit(run(config_from_args(parsed_args)))

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
