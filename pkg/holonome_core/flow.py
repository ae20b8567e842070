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

"""Time integration with conservation monitors.

Two explicit Runge-Kutta schemes are available, both written down as Butcher
tableaux (see docs/integrators.rst):

* rk4: the classical fixed-step scheme
* rk45: the Dormand-Prince 5(4) embedded pair with step rejection

The extension flow is not symplectic, so no geometric integrator is offered.
Monitors are evaluated at accepted steps only.

"""

import logging
import math
from collections import OrderedDict

import numpy

from . import geometry
from . import mechsys
from .errors import NumericError
from .files import write_csv


class IntegratorError(NumericError):
    pass


class StepUnderflowError(IntegratorError):
    pass


class NonFiniteError(IntegratorError):
    pass


class MaxStepsError(IntegratorError):
    pass


class IntegratorOptions(object):
    __slots__ = ['method', 'dt', 'rel_tol', 'abs_tol', 't_end', 'max_steps']

    def __init__(self, t_end, method='rk45', dt=1e-3, rel_tol=1e-9, abs_tol=1e-12,
                 max_steps=1000000):
        if method not in INTEGRATORS:
            raise ValueError("unknown integrator %r" % method)
        if not (t_end > 0 and dt > 0 and rel_tol > 0 and abs_tol > 0):
            raise ValueError("t_end, dt and tolerances must be positive")
        if max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        self.method = method
        self.dt = dt
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.t_end = t_end
        self.max_steps = max_steps

    @classmethod
    def from_tolerances(cls, t_end, tolerances, **overrides):
        """Build options from a validated tolerance dict (config_parser.get_tolerances)"""
        kwargs = dict(method=tolerances['method'], dt=tolerances['dt'],
                      rel_tol=tolerances['rel_tol'], abs_tol=tolerances['abs_tol'],
                      max_steps=tolerances['max_steps'])
        kwargs.update(overrides)
        return cls(t_end, **kwargs)

    def __repr__(self):
        return "IntegratorOptions(%s)" % ", ".join("%s=%r" % (k, getattr(self, k))
                                                   for k in self.__slots__)


class Trajectory(object):
    """Samples of a flow at accepted steps.

    kind is "phase" for states (q, p) and "configuration" for states q.
    converged is set by the descent flows when they stop early at a
    critical point.

    """
    def __init__(self, times, states, monitors, kind="phase", converged=False):
        self.times = numpy.array(times, dtype=float)
        self.states = numpy.array(states, dtype=float)
        self.monitors = list(monitors)
        self.kind = kind
        self.converged = converged
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    def __len__(self):
        return len(self.times)

    def monitor(self, name):
        """The named monitor over all samples, as an array"""
        return numpy.array([m[name] for m in self.monitors])

    @property
    def final_state(self):
        return self.states[-1]

    def __repr__(self):
        return "<Trajectory %s, %d samples, t=[%g, %g]>" % (
            self.kind, len(self), self.times[0], self.times[-1])


##############################################################################
# Schemes

class _ExplicitRungeKutta(object):
    """An explicit Runge-Kutta scheme given by its tableau.

    BT[i] holds the coefficients a_{i+1,0..i} for stage i+1, eval_stages
    the nodes c_i, B the propagating weights and TR (adaptive schemes only)
    the difference of the two weight rows, which estimates the local error.

    """
    s = 0
    order = 0
    is_adaptive = False
    eval_stages = ()
    BT = {}
    B = ()
    TR = ()

    def stages(self, field, t, x, h, k0=None):
        k = [field(x) if k0 is None else k0]
        for i in range(1, self.s):
            xi = x + h * sum(a * kj for a, kj in zip(self.BT[i - 1], k) if a)
            k.append(field(xi))
        x_new = x + h * sum(b * kj for b, kj in zip(self.B, k) if b)
        return x_new, k

    def error(self, k, h):
        return h * sum(c * kj for c, kj in zip(self.TR, k) if c)


class RK4(_ExplicitRungeKutta):
    s = 4
    order = 4
    eval_stages = (0.0, 1 / 2, 1 / 2, 1.0)
    BT = {
        0: [1 / 2],
        1: [0.0, 1 / 2],
        2: [0.0, 0.0, 1.0],
    }
    B = (1 / 6, 1 / 3, 1 / 3, 1 / 6)


class DormandPrince54(_ExplicitRungeKutta):
    """Dormand-Prince 5(4). Seven stages with the first-same-as-last
    property; the fifth order solution is propagated.

    """
    s = 7
    order = 5
    is_adaptive = True
    eval_stages = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
    BT = {
        0: [1 / 5],
        1: [3 / 40, 9 / 40],
        2: [44 / 45, -56 / 15, 32 / 9],
        3: [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
        4: [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
        5: [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    }
    B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
    TR = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


INTEGRATORS = {'rk4': RK4, 'rk45': DormandPrince54}


##############################################################################
# Driver

def _checked(field):
    def f(x):
        v = numpy.asarray(field(x), dtype=float)
        if not numpy.all(numpy.isfinite(v)):
            raise NonFiniteError("vector field is not finite at %s" % (list(x),))
        return v
    return f


def _initial_step(f0, x0, opts):
    scale = opts.abs_tol + opts.rel_tol * numpy.abs(x0)
    d0 = numpy.sqrt(numpy.mean((x0 / scale) ** 2))
    d1 = numpy.sqrt(numpy.mean((f0 / scale) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    return min(h, opts.t_end)


def integrate(field, x0, opts, monitor=None, stop=None, objective=None, kind="phase"):
    """Integrate xdot = field(x) from x0 over [0, opts.t_end].

    monitor(x) returns a dict of named diagnostics recorded at every
    accepted step. stop(t, x) may end the run early (the trajectory is then
    marked converged). When objective is given, steps that raise it are
    rejected and retried at half the step; a fixed-step run keeps the
    reduced step from then on.

    """
    scheme = INTEGRATORS[opts.method]()
    f = _checked(field)
    x = numpy.array(x0, dtype=float)
    if not numpy.all(numpy.isfinite(x)):
        raise NonFiniteError("initial state is not finite")
    monitor = monitor or (lambda _: {})

    t = 0.0
    times = [t]
    states = [x.copy()]
    monitors = [monitor(x)]
    if stop is not None and stop(t, x):
        return Trajectory(times, states, monitors, kind, converged=True)

    t_scale = max(1.0, abs(opts.t_end))
    k0 = f(x)
    h = opts.dt if not scheme.is_adaptive else _initial_step(k0, x, opts)
    obj = objective(x) if objective is not None else None
    steps = 0
    while t < opts.t_end:
        steps += 1
        if steps > opts.max_steps:
            raise MaxStepsError("exceeded %d steps at t=%g" % (opts.max_steps, t))
        h = min(h, opts.t_end - t)
        if h < 1e-14 * t_scale and t + h < opts.t_end:
            raise StepUnderflowError("step size underflow (h=%g) at t=%g" % (h, t))

        x_new, k = scheme.stages(f, t, x, h, k0)
        if scheme.is_adaptive:
            scale = opts.abs_tol + opts.rel_tol * numpy.maximum(numpy.abs(x), numpy.abs(x_new))
            err = numpy.sqrt(numpy.mean((scheme.error(k, h) / scale) ** 2))
            if not math.isfinite(err):
                raise NonFiniteError("error estimate is not finite at t=%g" % t)
            if err > 1.0:
                h *= max(0.2, 0.9 * err ** (-1.0 / scheme.order))
                continue
        if objective is not None:
            obj_new = objective(x_new)
            if obj_new > obj + 1e-12 * (1.0 + abs(obj)):
                h *= 0.5
                continue
            obj = obj_new
        if scheme.is_adaptive:
            h_next = h * min(5.0, max(0.2, 0.9 * (err if err > 0 else 1e-10) **
                                      (-1.0 / scheme.order)))
            k0 = k[-1]
        else:
            h_next = h
            k0 = None
        if not numpy.all(numpy.isfinite(x_new)):
            raise NonFiniteError("state is not finite at t=%g" % (t + h))

        t = opts.t_end if opts.t_end - (t + h) < 1e-14 * t_scale else t + h
        x = x_new
        if k0 is None:
            k0 = f(x)
        times.append(t)
        states.append(x.copy())
        monitors.append(monitor(x))
        h = h_next
        if stop is not None and stop(t, x):
            logging.debug("flow converged at t=%g after %d steps", t, steps)
            return Trajectory(times, states, monitors, kind, converged=True)

    logging.debug("integrated to t=%g in %d steps (%d samples)", t, steps, len(times))
    return Trajectory(times, states, monitors, kind)


##############################################################################
# The flows of a mechanical system

def extension_monitors(sys):
    def monitor(x):
        q, p = sys.split(x)
        j = sys.jet(q)
        f = mechsys.constraint_values(sys, x)
        m = OrderedDict()
        m['H'] = mechsys.hamiltonian(sys, x)
        m['L'] = float(f.dot(f))
        m['horiz_residual'] = float(numpy.linalg.norm(j.rho_bar.dot(j.g_inv).dot(p)))
        for i, v in enumerate(f):
            m['f_%d' % (i + 1)] = float(v)
        return m
    return monitor


def extension_flow(sys, x0, opts):
    """Integrate the extension vector field from the phase point x0"""
    if isinstance(x0, mechsys.PhasePoint):
        x0 = x0.state()
    return integrate(lambda x: mechsys.extension_field(sys, x), x0, opts,
                     monitor=extension_monitors(sys))


def descent_flow_q(sys, q0, opts, threshold=1e-10):
    """qdot = -rho g^-1 dU, the gradient-like flow of U on Q. Stops early
    once |rho^T dU| < threshold.

    """
    def field(q):
        j = sys.jet(q)
        return -j.rho.dot(j.g_inv).dot(j.dU)

    def residual(q):
        j = sys.jet(q)
        return float(numpy.linalg.norm(j.rho.T.dot(j.dU)))

    def monitor(q):
        return OrderedDict([('U', sys.jet(q).U), ('residual', residual(q))])

    return integrate(field, sys.check_q(q0), opts, monitor=monitor,
                     stop=lambda t, q: residual(q) < threshold,
                     objective=lambda q: sys.jet(q).U, kind="configuration")


def _phase_descent(sys, x):
    n = sys.n
    asm = mechsys.assemble(sys, x)
    dq, dp = mechsys.hamiltonian_gradient(sys, x)
    grad = numpy.concatenate((dq, dp))
    triple = geometry.compatible_triple(geometry.symplectic_matrix(n), asm.piV,
                                        numpy.eye(2 * n))
    return -asm.piV.dot(numpy.linalg.solve(triple.g_K, grad))


def gradient_like_flow_phase(sys, x0, opts, threshold=1e-10):
    """xdot = -pi_V grad H in the metric g_K of the compatible triple built
    from pi_V and the chart's Euclidean metric. H decreases along it.

    """
    if isinstance(x0, mechsys.PhasePoint):
        x0 = x0.state()
    return integrate(lambda x: _phase_descent(sys, x), x0, opts,
                     monitor=lambda x: OrderedDict([('H', mechsys.hamiltonian(sys, x))]),
                     stop=lambda t, x: numpy.linalg.norm(_phase_descent(sys, x)) < threshold,
                     objective=lambda x: mechsys.hamiltonian(sys, x))


##############################################################################
# Export

def csv_header(trajectory, n=None):
    dim = trajectory.states.shape[1]
    if trajectory.kind == "configuration":
        n = n or dim
        return (["t"] + ["q_%d" % (i + 1) for i in range(n)] +
                [k for k in trajectory.monitors[0]])
    n = n or dim // 2
    return (["t"] + ["q_%d" % (i + 1) for i in range(n)] + ["p_%d" % (i + 1) for i in range(n)] +
            [k for k in trajectory.monitors[0]])


def export_csv(trajectory, path):
    """Phase trajectories: t, q_1..q_n, p_1..p_n, H, L, horiz_residual,
    f_1..f_{n-k}. Configuration trajectories: t, q_1..q_n, U, residual.

    """
    header = csv_header(trajectory)
    rows = ([t] + list(x) + list(m.values())
            for t, x, m in zip(trajectory.times, trajectory.states, trajectory.monitors))
    write_csv(path, header, rows)
