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

"""The smoke suite behind `holonome.py check`.

Each group takes a system, a list of sample phase points and the tolerance
dict, logs what it measured and returns True on success. Groups that only
report (flag, frobenius) fail only when their computation fails.

"""

import logging
from collections import OrderedDict

import numpy

from . import flow, geometry, mechsys

SAMPLE_SEED = 20240101
SAMPLES = 3


def sample_points(sys, count=SAMPLES, seed=SAMPLE_SEED):
    """Phase points with q uniform in the model bounds and p on the
    physical leaf
    """
    rng = numpy.random.default_rng(seed)
    points = []
    for _ in range(count):
        q = rng.uniform(sys.lower, sys.upper)
        p = rng.normal(size=sys.n)
        points.append(mechsys.physical_leaf_project(sys, mechsys.PhasePoint(q, p)).state())
    return points


def check_projectors(sys, points, tol):
    worst = 0.0
    for x in points:
        q, _ = sys.split(x)
        j = sys.jet(q)
        g = numpy.linalg.inv(j.g_inv)
        worst = max(worst,
                    numpy.max(numpy.abs(j.rho.dot(j.rho) - j.rho)),
                    numpy.max(numpy.abs(g.dot(j.rho) - g.dot(j.rho).T)),
                    numpy.max(numpy.abs(j.rho + j.rho_bar - numpy.eye(sys.n))))
    logging.info("projectors: idempotence and g-symmetry defect %.3g", worst)
    return worst <= 1e-9


def check_omega_skew(sys, points, tol):
    omega = geometry.symplectic_matrix(sys.n)
    worst = 0.0
    for x in points:
        piv = mechsys.assemble(sys, x).piV
        worst = max(worst, numpy.max(numpy.abs(piv.dot(piv) - piv)),
                    numpy.max(numpy.abs(omega.dot(piv) - piv.T.dot(omega))))
    logging.info("pi_V: idempotence and omega-skewness defect %.3g", worst)
    return worst <= 1e-9


def check_flag(sys, points, tol):
    for x in points:
        q, _ = sys.split(x)
        report = geometry.flag(mechsys.horizontal_fields(sys), q, tol['max_depth'])
        logging.info("flag of W at q=%s: ranks %s, degree %d%s, bracket generating: %s",
                     list(q), report.ranks, report.degree,
                     " (lower bound)" if report.lower_bound else "", report.chow)
    return True


def check_frobenius(sys, points, tol):
    field = mechsys.phase_projector_field(sys)
    for x in points:
        defect = geometry.frobenius_defect(field, x, differentiable=False)
        logging.info("Frobenius defect of V at %s: %.3g", list(x), defect)
    return True


def check_conservation(sys, points, tol, t_end=1.0):
    opts = flow.IntegratorOptions.from_tolerances(t_end, tol)
    worst = 0.0
    for x in points:
        traj = flow.extension_flow(sys, x, opts)
        h = traj.monitor('H')
        drift = float(numpy.max(numpy.abs(h - h[0])))
        for name in traj.monitors[0]:
            if name.startswith('f_'):
                f = traj.monitor(name)
                drift = max(drift, float(numpy.max(numpy.abs(f - f[0]))))
        worst = max(worst, drift)
    logging.info("conservation of H and f over t=[0, %g]: drift %.3g", t_end, worst)
    return worst <= 1e-6


def check_bracket(sys, points, tol):
    """{H, H}_V = 0, and df/dt = {H, f}_V for f = H and the f_I"""
    omega_inv = numpy.linalg.inv(geometry.symplectic_matrix(sys.n))
    worst = 0.0

    def h(y):
        return mechsys.hamiltonian(sys, y)

    observables = [h] + [
        (lambda i: lambda y: mechsys.constraint_values(sys, y)[i])(i)
        for i in range(sys.n - sys.k)]
    for x in points:
        piv = mechsys.assemble(sys, x).piV
        v = mechsys.extension_field(sys, x)
        worst = max(worst, abs(geometry.bracket_from_gradients(
            geometry.scalar_gradient(h, x), geometry.scalar_gradient(h, x), piv, omega_inv)))
        grad_h = geometry.scalar_gradient(h, x)
        for f in observables:
            grad_f = geometry.scalar_gradient(f, x)
            rate = grad_f.dot(v)
            bracket = geometry.bracket_from_gradients(grad_h, grad_f, piv, omega_inv)
            worst = max(worst, abs(rate - bracket) / (1.0 + abs(rate)))
    logging.info("v-bracket identities: defect %.3g", worst)
    return worst <= 1e-5


CHECKS = OrderedDict([
    ("projectors", check_projectors),
    ("omega_skew", check_omega_skew),
    ("flag", check_flag),
    ("frobenius", check_frobenius),
    ("conservation", check_conservation),
    ("bracket", check_bracket),
])


def run_all(sys, tol, points=None):
    """Run every group; returns name -> passed, in order"""
    points = sample_points(sys) if points is None else points
    results = OrderedDict()
    for name, check in CHECKS.items():
        ok = check(sys, points, tol)
        logging.log(logging.INFO if ok else logging.ERROR, "%-12s %s", name,
                    "PASS" if ok else "FAIL")
        results[name] = ok
    return results
