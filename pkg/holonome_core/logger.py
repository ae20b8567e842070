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

import logging
import os
import sys

# foreground is 30 + color, background 40 + color
BLACK, RED, GREEN, YELLOW, BLUE, MAGENTA, CYAN, WHITE = range(8)

RESET_SEQ = "\033[0m"
COLOR_SEQ = "\033[1;%dm"

COLORIZE = {
    'DEBUG': CYAN,
}
HIGHLIGHT = {
    'CRITICAL': RED,
    'ERROR': RED,
    'WARNING': YELLOW,
}


class HighlightingFormatter(logging.Formatter):
    """Base class of the holonome formatters. Lines carry a timestamp and a
    one-letter level marker (none for INFO); verbose lines also carry the
    source location and the process id, which tells pool workers apart.
    """
    datefmt = "%Y-%m-%d %H:%M:%S"

    def __init__(self, verbose=False):
        if verbose:
            fmtstr = '%(fileandlineno)-22s %(pid)s %(asctime)s %(levelname)-8s %(message)s'
        else:
            fmtstr = '%(asctime)s %(shortlevelname)-1s%(message)s'
        super(HighlightingFormatter, self).__init__(fmtstr, self.datefmt)

    def format(self, record):
        record.shortlevelname = '' if record.levelname == 'INFO' else record.levelname[0] + ' '
        record.pid = os.getpid()
        record.fileandlineno = "%s:%s" % (record.filename, record.lineno)
        return self.highlight(record)

    def highlight(self, record):
        """Return the formatted line with any special effects applied.
        Override this in subclasses.
        """
        return logging.Formatter.format(self, record)


class DumbFormatter(HighlightingFormatter):
    """For pipes and log files: a line of stars above every warning and
    error
    """
    def highlight(self, record):
        line = logging.Formatter.format(self, record)
        if record.levelname in HIGHLIGHT:
            return "*" * min(79, len(line)) + "\n" + line
        return line


class ANSIColorFormatter(HighlightingFormatter):
    """Colors the level name of debug lines and the whole of warning and
    error lines
    """
    def highlight(self, record):
        if record.levelname in COLORIZE:
            # padded again, the escape sequence counts towards the width
            record.levelname = (COLOR_SEQ % (30 + COLORIZE[record.levelname]) +
                                "%-8s" % record.levelname + RESET_SEQ)
            return logging.Formatter.format(self, record)
        line = logging.Formatter.format(self, record)
        if record.levelname in HIGHLIGHT:
            return COLOR_SEQ % (40 + HIGHLIGHT[record.levelname]) + line + RESET_SEQ
        return line


def configure(loglevel=logging.INFO, verbose=False, simple=False, stream=None):
    """Configure the root logger.

    simple forces plain output; otherwise a terminal gets colors. May be
    called more than once: later calls only replace the formatter and the
    level of the handler installed by the first.

    """
    logger = logging.getLogger()
    outstream = stream or sys.stdout

    if simple or not hasattr(outstream, "isatty") or not outstream.isatty():
        formatter = DumbFormatter(verbose)
    else:
        formatter = ANSIColorFormatter(verbose)

    if not hasattr(logger, 'holonomeHandler'):
        # remembered so a second call finds our handler again
        logger.holonomeHandler = logging.StreamHandler(outstream)
        logger.addHandler(logger.holonomeHandler)
    elif stream is not None:
        logger.holonomeHandler.setStream(stream)
    logger.holonomeHandler.setFormatter(formatter)
    logger.setLevel(loglevel)

    # numpy and scipy warnings go through the warnings module
    logging.captureWarnings(True)
