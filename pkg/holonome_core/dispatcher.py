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

"""Running independent work items (multistart seeds, continuation seeds)
serially or on a pool of worker processes.

A worker is any object with two methods:

    iterate_work_items()  yields the work items, in the order results are wanted
    do_work(item)         computes and returns the result for one item

Results always come back in the order of iterate_work_items(), so the merge
is deterministic whatever the number of processes.

"""

import logging
import multiprocessing
import os

from .observer import Observer


class Dispatcher(object):
    """Runs every work item in this process, in order"""

    def run_all(self, worker, observer=None):
        items = list(worker.iterate_work_items())
        observer = observer or Observer()
        observer.start(len(items))
        results = []
        for result in self.dispatch(worker, items):
            results.append(result)
            observer.add(1)
        observer.finish()
        return results

    def dispatch(self, worker, items):
        """Yield worker.do_work(item) for each item, in order"""
        for item in items:
            yield worker.do_work(item)

    def close(self):
        """Release any processes the dispatcher holds"""
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


# the worker object of a pool process, installed by _init_process
_process_worker = None


def _init_process(worker):
    global _process_worker
    _process_worker = worker


def _do_work(item):
    return _process_worker.do_work(item)


class MultiprocessingDispatcher(Dispatcher):
    """A Dispatcher that spreads the work items over worker processes. Each
    process receives one pickled copy of the worker.
    """
    def __init__(self, local_procs=-1):
        """local_procs is the number of worker processes; negative means
        one per CPU
        """
        super(MultiprocessingDispatcher, self).__init__()
        if local_procs < 0:
            local_procs = multiprocessing.cpu_count()
        self.local_procs = local_procs
        self.pool = None

    def dispatch(self, worker, items):
        self.close()
        self.pool = multiprocessing.Pool(self.local_procs, initializer=_init_process,
                                         initargs=(worker,))
        chunksize = max(1, len(items) // (4 * self.local_procs))
        for result in self.pool.imap(_do_work, items, chunksize):
            yield result

    def close(self):
        if self.pool is not None:
            self.pool.close()
            self.pool.join()
            self.pool = None


def get_dispatcher(threads=None):
    """The dispatcher for the requested number of processes. threads
    defaults to $HOLONOME_THREADS, then to the CPU count; 1 means serial.
    """
    if threads is None:
        env = os.environ.get("HOLONOME_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                logging.warning("Ignoring HOLONOME_THREADS=%r, not an integer", env)
    if threads is None:
        threads = multiprocessing.cpu_count()
    if threads <= 1:
        return Dispatcher()
    logging.debug("Using %d worker processes", threads)
    return MultiprocessingDispatcher(threads)
