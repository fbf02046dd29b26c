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
Exceptions raised by the laboratory
"""


class LabError(Exception):
    """ Base class of every error raised by the laboratory """


class DomainError(LabError, ValueError):
    """ An operation was called outside of its domain """


class DegenerateParameter(DomainError):
    """ The parameter makes the requested quantity meaningless """


class ParameterError(DomainError):
    """ The operation is not defined for the given beta """


class InsufficientData(DomainError):
    """ Not enough samples to evaluate the requested quantity """


class IntegrationFailure(LabError):
    """ The integrator could not make progress """

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples or []


class BracketNotFound(LabError):
    """ No change of classification was found in the scan range """

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan or []


class ConvergenceError(LabError):
    """ Bisection did not converge within the iteration cap """


class ArtifactError(LabError):
    """ A CSV/JSON artifact could not be parsed """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(LabError):
    """ Invalid run configuration or numerical parameters """

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
