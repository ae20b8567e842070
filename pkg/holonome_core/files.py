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

"""Writing artifacts: CSV tables, JSON records and their run manifests.

Data files never contain timestamps and are written with a fixed float
format, so running the same command twice produces identical bytes.

"""

import csv
import errno
import json
import logging
import os
import os.path

import numpy


class FileReplacer(object):
    """Context manager for files that are to be written out, possibly over
    an existing file.

    The value returned into the context is a temporary filename next to the
    destination; on a clean exit it is renamed over the destination. If an
    error is raised inside the context the temporary file is removed and the
    destination is left untouched.

    Example:

    with FileReplacer("out.csv") as tmpname:
        with open(tmpname, 'w') as f:
            f.write(data)
    """
    def __init__(self, destname):
        self.destname = destname
        self.tmpname = destname + ".tmp"

    def __enter__(self):
        parent = os.path.dirname(os.path.abspath(self.destname))
        if not os.path.isdir(parent):
            os.makedirs(parent)
        return self.tmpname

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type:
            try:
                os.remove(self.tmpname)
            except OSError:
                logging.warning("An error was raised, so I was doing some cleanup first, "
                                "but I couldn't remove '%s'!", self.tmpname)
            return
        try:
            os.replace(self.tmpname, self.destname)
        except OSError as e:
            # two processes may race on the same temporary file
            if e.errno != errno.ENOENT:
                raise


def format_float(x):
    """Shortest string that reads back as the same double. Integers stay
    integers and None is an empty cell.
    """
    if x is None:
        return ""
    if isinstance(x, (int, numpy.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def to_plain(obj):
    """Convert numpy scalars and arrays (recursively) to plain Python so
    json can write them.

    """
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, numpy.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (numpy.bool_, bool)):
        return bool(obj)
    if isinstance(obj, numpy.integer):
        return int(obj)
    if isinstance(obj, (numpy.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_json(obj):
    return json.dumps(to_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    with FileReplacer(path) as tmpname:
        with open(tmpname, "w", encoding="utf-8") as f:
            f.write(dumps_json(obj))
    logging.info("Wrote %s", path)


def write_csv(path, header, rows):
    """rows are sequences of numbers; header is a sequence of column names"""
    with FileReplacer(path) as tmpname:
        with open(tmpname, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) for v in row])
    logging.info("Wrote %s", path)


def manifest_path(path):
    return path + ".manifest.json"


class RunManifest(object):
    """Everything needed to reproduce an artifact: the command, the model
    and its parameters, seeds, tolerances and the tool version. Wall time is
    kept here and never in the artifact itself.

    """
    __slots__ = ['command', 'model', 'params', 'seeds', 'tolerances', 'version', 'wall_time']

    def __init__(self, command, model=None, params=None, seeds=None, tolerances=None,
                 version=None, wall_time=None):
        self.command = command
        self.model = model
        self.params = params or {}
        self.seeds = seeds or []
        self.tolerances = tolerances or {}
        self.version = version
        self.wall_time = wall_time

    def as_dict(self):
        return {name: getattr(self, name) for name in self.__slots__}

    def write(self, artifact_path):
        write_json(manifest_path(artifact_path), self.as_dict())
