"""
Timing class for measuring performance on the fly.

Adapted from the timing utilities of the Atomic Simulation Environment
(ASE) https://wiki.fysik.dtu.dk/ase/, Copyright (C) 2003 CAMP, distributed
under the GNU Lesser General Public License version 2.1 or later.

The table is written to a ``logging`` logger instead of a stream, and the
wall clock is exposed so that training runs can store it in their reports.
"""

import time
import logging
import functools

logger = logging.getLogger(__name__)


class Timer:
    """Timer object.

    Use like this::

        timer = Timer()
        timer.start('epoch')
        # do something
        timer.stop()

    or::

        with timer('epoch'):
            # do something

    Timers nest; the summary distinguishes inclusive and exclusive time.
    """

    def __init__(self, print_levels=1000, clock=time.perf_counter):
        self.timers = {}
        self.clock = clock
        self.t0 = clock()
        self.running = []
        self.print_levels = print_levels

    def start(self, name):
        names = tuple(self.running + [name])
        self.timers[names] = self.timers.get(names, 0.0) - self.clock()
        self.running.append(name)

    def stop(self, name=None):
        if name is None:
            name = self.running[-1]
        names = tuple(self.running)
        running = self.running.pop()
        if name != running:
            raise RuntimeError('Must stop timers by stack order.  '
                               'Requested stopping of %s but topmost is %s'
                               % (name, running))
        self.timers[names] += self.clock()
        return names

    def __call__(self, name):
        self.start(name)
        return self

    def __enter__(self):
        pass

    def __exit__(self, *args):
        self.stop()

    def get_time(self, *names):
        return self.timers[names]

    def elapsed(self):
        """ Wall clock since construction, in seconds. """
        return self.clock() - self.t0

    def rows(self):
        """ (name path, inclusive, exclusive) for every finished timer. """
        inclusive = dict(self.timers)
        exclusive = dict(self.timers)
        for names, t in self.timers.items():
            if len(names) > 1 and names[:-1] in exclusive:
                exclusive[names[:-1]] -= t
        return [(names, inclusive[names], exclusive[names])
                for names in sorted(self.timers)]

    def write(self, log=logger, level=logging.DEBUG):
        if self.running or not self.timers:
            return

        tot = self.elapsed()
        n = max([len(names[-1]) + len(names) for names in self.timers]) + 1
        log.log(level, '%-*s    incl.     excl.', n, 'Timing:')
        for names, tinc, texc in self.rows():
            level_idx = len(names)
            if level_idx > self.print_levels:
                continue
            name = (level_idx - 1) * ' ' + names[-1] + ':'
            log.log(level, '%-*s%9.3f %9.3f %5.1f%%',
                    n, name, tinc, texc, 100. * texc / tot if tot > 0 else 0.)
        log.log(level, '%-*s%9.3f', n + 10, 'Total:', tot)

    def add(self, timer):
        for name, t in timer.timers.items():
            self.timers[name] = self.timers.get(name, 0.0) + t


class timer:
    """Decorator for timing a method call.

    Example::

        class Trainer:
            def __init__(self):
                self.timer = Timer()

            @timer('epoch')
            def run_epoch(self, epoch):
                ...

    """
    def __init__(self, name):
        self.name = name

    def __call__(self, method):
        @functools.wraps(method)
        def new_method(slf, *args, **kwargs):
            slf.timer.start(self.name)
            try:
                return method(slf, *args, **kwargs)
            finally:
                slf.timer.stop(self.name)
        return new_method
