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
Helpers reading and writing the laboratory artifacts: trajectory CSV,
phase CSV and JSON reports. Every file is written atomically.
"""

import os
import csv
import json
import logging
import tempfile
from contextlib import contextmanager

import numpy as np

from errors import ArtifactError, DomainError
from ode import Termination, Trajectory


logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ["t", "f", "fp", "fpp"]
PHASE_HEADER = ["s", "u", "v"]
FIELD_HEADER = ["u", "v", "du", "dv"]


def fmt(value):
    """ full double precision, 17 significant digits """
    return format(float(value), ".17g")


@contextmanager
def atomic_open(path):
    """ yields a text file that replaces `path` only when fully written """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s", path)


def write_rows(path, header, rows):
    """ writes a plain CSV with LF line endings """
    with atomic_open(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) if isinstance(x, (float, np.floating))
                             else x for x in row])


def write_trajectory_csv(trajectory, path):
    """ t,f,fp,fpp samples; events and termination as comment lines """
    with atomic_open(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for t, (f, fp, fpp) in zip(trajectory.t, trajectory.y):
            writer.writerow([fmt(t), fmt(f), fmt(fp), fmt(fpp)])
        for t, kind in trajectory.event_log:
            handle.write(f"# event,{kind},{fmt(t)}\n")
        handle.write(f"# termination,{trajectory.termination.value}\n")


def read_trajectory_csv(path):
    """ reads back a trajectory written by write_trajectory_csv """
    rows, events = [], []
    termination = Termination.HORIZON_REACHED
    with open(path, newline="") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0].strip().split(",") != TRAJECTORY_HEADER:
        raise ArtifactError(f"expected header {','.join(TRAJECTORY_HEADER)}",
                            line=1)
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].strip().split(",")
            try:
                if parts[0] == "event" and len(parts) == 3:
                    events.append((float(parts[2]), parts[1]))
                elif parts[0] == "termination" and len(parts) == 2:
                    termination = Termination(parts[1])
                else:
                    raise ValueError(line)
            except ValueError as e:
                raise ArtifactError(f"malformed comment '{line}'",
                                    line=number) from e
            continue
        fields = line.split(",")
        if len(fields) != len(TRAJECTORY_HEADER):
            raise ArtifactError(f"expected {len(TRAJECTORY_HEADER)} fields, "
                                f"got {len(fields)}", line=number)
        try:
            rows.append([float(x) for x in fields])
        except ValueError as e:
            raise ArtifactError(f"not a number in '{line}'",
                                line=number) from e
    data = np.array(rows, dtype=float).reshape(-1, 4)
    try:
        return Trajectory(data[:, 0], data[:, 1:], termination, tuple(events))
    except DomainError as e:
        raise ArtifactError(f"invalid trajectory: {e}") from e


def write_phase_csv(phase, path):
    """ s,u,v samples of a blow-up curve """
    write_rows(path, PHASE_HEADER, [(p.s, p.u, p.v) for p in phase])


def write_field_csv(rows, path):
    """ u,v,du,dv vector field grid """
    write_rows(path, FIELD_HEADER, rows)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_report_json(report, path):
    """ JSON with sorted keys; `report` is a dict, a list or has to_dict() """
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    elif isinstance(report, (list, tuple)):
        report = [r.to_dict() if hasattr(r, "to_dict") else r
                  for r in report]
    with atomic_open(path) as handle:
        json.dump(_plain(report), handle, sort_keys=True, indent=2)
        handle.write("\n")

# vim: tabstop=8 expandtab shiftwidth=4 softtabstop=4
