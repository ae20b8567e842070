#    This file is part of holonome.
#
#    holonome is free software: you can redistribute it and/or modify it
#    under the terms of the GNU General Public License as published by the
#    Free Software Foundation, either version 3 of the License, or (at your
#    option) any later version.
#
#    holonome is distributed in the hope that it will be useful, but WITHOUT
#    ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or
#    FITNESS FOR A PARTICULAR PURPOSE.  See the GNU General Public License for
#    more details.
#
#    You should have received a copy of the GNU General Public License along
#    with holonome.  If not, see <http://www.gnu.org/licenses/>.

"""
Misc utility routines used by multiple files that don't belong anywhere else
"""

import math
import os.path
import sys
from string import hexdigits
from subprocess import PIPE, Popen

import numpy

TWO_PI = 2.0 * math.pi


def get_program_path():
    # normally, we're in ./holonome_core/util.py and want ./
    return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _git(command):
    p = Popen(command, stdout=PIPE, stderr=PIPE, shell=True, cwd=get_program_path())
    p.stderr.close()
    return p.stdout.readlines()[0].decode('utf-8').strip()


def findGitHash():
    try:
        line = _git('git rev-parse HEAD')
        if line and len(line) == 40 and all(c in hexdigits for c in line):
            return line
    except Exception:
        pass
    try:
        from . import holonome_version
        return holonome_version.HASH
    except Exception:
        return "unknown"


def findGitVersion():
    try:
        line = _git('git describe --tags --match "v*.*.*"')
        if line.startswith('v'):
            line = line[1:]
        # turn 0.1.0-50-somehash into 0.1.50
        parts = line.replace('-', '.').split('.')
        if len(parts) == 5:
            del parts[4]
            del parts[2]
        elif len(parts) != 3:
            raise ValueError(line)
        return '.'.join(parts)
    except Exception:
        try:
            from . import holonome_version
            return holonome_version.VERSION
        except Exception:
            from . import __version__
            return __version__


def periodic_delta(a, b, periodic):
    """b - a per coordinate, with periodic coordinates taken the short way
    round, in [-pi, pi)
    """
    d = numpy.asarray(b, dtype=float) - numpy.asarray(a, dtype=float)
    for i, per in enumerate(periodic):
        if per:
            d[i] = (d[i] + math.pi) % TWO_PI - math.pi
    return d


def periodic_distance(a, b, periodic):
    return float(numpy.linalg.norm(periodic_delta(a, b, periodic)))


def segment_distance(x, a, b, periodic):
    """Distance from x to the segment from a to b, measured in the chart
    around a
    """
    d = periodic_delta(a, b, periodic)
    v = periodic_delta(a, x, periodic)
    dd = d.dot(d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, v.dot(d) / dd))
    return float(numpy.linalg.norm(v - t * d))


def wrap_periodic(q, periodic):
    """Periodic coordinates mapped into [0, 2pi)"""
    q = numpy.array(q, dtype=float)
    for i, per in enumerate(periodic):
        if per:
            q[i] = q[i] % TWO_PI
            if q[i] >= TWO_PI:
                q[i] = 0.0
    return q


def nice_exit(ret=0):
    """Drop-in replacement for sys.exit, the single exit point of the
    command line
    """
    sys.exit(ret)
