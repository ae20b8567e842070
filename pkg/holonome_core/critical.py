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

"""Equilibria and the critical manifold C_Q = {q : rho^T(q) dU(q) = 0}.

The pieces, from the bottom up:

* critical_residual / residual_jacobian: the defining map and its derivative
* newton_refine: damped Gauss-Newton onto C_Q with a rank-k pseudo-inverse
* find_U_critical_points: multistart Newton on dU over a grid
* continue_component: predictor-corrector continuation of a 1-dimensional
  component along the kernel of the Jacobian
* trace_critical_manifold: all of the above, plus the merge of touching
  components and a coverage check

Index convention: the index of a generic point is the number of unstable
directions of the descent flow qdot = -rho g^-1 dU transverse to C_Q, i.e.
the number of eigenvalues with negative real part of J g^-1 restricted to
the range of J.

"""

import itertools
import logging
from collections import OrderedDict

import networkx
import numpy

from . import util
from .dispatcher import Dispatcher
from .errors import NumericError, OffManifoldError
from .geometry import RANK_THRESHOLD
from .observer import LoggingObserver, Observer


class NoConvergenceError(NumericError):
    def __init__(self, message, residual=None):
        super(NoConvergenceError, self).__init__(message)
        self.residual = residual


class DivergenceError(NoConvergenceError):
    pass


class DegeneratePotentialError(NumericError):
    pass


class IndexUndefinedError(NumericError):
    pass


class ContinuationLimitError(NumericError):
    def __init__(self, message, component=None):
        super(ContinuationLimitError, self).__init__(message)
        self.component = component


class CriticalPoint(object):
    """A refined point of C_Q with its Jacobian diagnostics"""
    __slots__ = ['q', 'residual', 'jac', 'kernel_dim', 'generic', 'index', 'sigma_ratio']

    def __init__(self, q, residual, jac, kernel_dim, generic, index, sigma_ratio):
        self.q = q
        self.residual = residual
        self.jac = jac
        self.kernel_dim = kernel_dim
        self.generic = generic
        self.index = index
        self.sigma_ratio = sigma_ratio

    def __repr__(self):
        return "CriticalPoint(q=%s, residual=%.3g, index=%r)" % (
            list(self.q), self.residual, self.index)


class CriticalComponent(object):
    """A connected piece of C_Q.

    points are ordered along the curve for continued 1-dimensional
    components; cloud marks an unordered set. boundary is set when the
    continuation stopped at a non-generic point or an index change.

    """
    __slots__ = ['points', 'index', 'closed', 'arc_length', 'boundary', 'cloud']

    def __init__(self, points, index, closed=False, arc_length=0.0, boundary=False,
                 cloud=False):
        self.points = points
        self.index = index
        self.closed = closed
        self.arc_length = arc_length
        self.boundary = boundary
        self.cloud = cloud

    def __len__(self):
        return len(self.points)

    def coordinates(self):
        return numpy.array([p.q for p in self.points])

    def __repr__(self):
        return "<CriticalComponent %d points, index %r, %s>" % (
            len(self.points), self.index, "closed" if self.closed else "open")


##############################################################################
# The defining map

def critical_residual(sys, q):
    """rho^T(q) dU(q); zero exactly on C_Q"""
    j = sys.jet(q)
    return j.rho.T.dot(j.dU)


def residual_jacobian(sys, q):
    """D(rho^T dU) = rho^T D^2U + sum_i dU_i d(rho_i.)"""
    j = sys.jet(q)
    return j.rho.T.dot(j.d2U) + numpy.einsum('i,ijk->jk', j.dU, j.drho)


def _truncated_pinv_step(jac, r, max_rank, threshold=RANK_THRESHOLD):
    u, s, vt = numpy.linalg.svd(jac)
    if s[0] == 0.0:
        return numpy.zeros(jac.shape[1])
    keep = min(max_rank, int(numpy.sum(s > threshold * s[0])))
    coeffs = u[:, :keep].T.dot(r) / s[:keep]
    return -vt[:keep].T.dot(coeffs)


def _gauss_newton(func, q0, tol, max_iter, max_rank, what):
    """Damped Gauss-Newton on func(q) -> (residual vector, Jacobian)"""
    q = numpy.array(q0, dtype=float)
    r, jac = func(q)
    norm = numpy.linalg.norm(r)
    growth = 0
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise NoConvergenceError("%s did not converge in %d iterations (residual %.3g)"
                                     % (what, max_iter, norm), norm)
        it += 1
        dq = _truncated_pinv_step(jac, r, max_rank)
        lam = 1.0
        for _ in range(21):
            q_try = q + lam * dq
            r_try, jac_try = func(q_try)
            norm_try = numpy.linalg.norm(r_try)
            if norm_try < norm:
                break
            lam *= 0.5
        else:
            # no decrease along the step; take it whole and watch for growth
            q_try = q + dq
            r_try, jac_try = func(q_try)
            norm_try = numpy.linalg.norm(r_try)
        growth = growth + 1 if norm_try > 2.0 * norm else 0
        if growth >= 5:
            raise DivergenceError("%s diverged (residual %.3g)" % (what, norm_try), norm_try)
        q, r, jac, norm = q_try, r_try, jac_try, norm_try
    return q, norm, it


def _check_point(sys, q):
    sys.check_q(q)
    return numpy.array(q, dtype=float)


def point_from_q(sys, q, rank_threshold=RANK_THRESHOLD):
    """Jacobian diagnostics at q: kernel dimension, genericity, index"""
    q = _check_point(sys, q)
    jac = residual_jacobian(sys, q)
    s = numpy.linalg.svd(jac, compute_uv=False)
    rank = 0 if s[0] == 0.0 else int(numpy.sum(s > rank_threshold * s[0]))
    k = sys.k
    generic = rank == k
    sigma_ratio = float(s[k - 1] / s[0]) if s[0] > 0.0 and k >= 1 else 0.0
    cp = CriticalPoint(q, float(numpy.linalg.norm(critical_residual(sys, q))), jac,
                       sys.n - rank, generic, None, sigma_ratio)
    if generic:
        cp.index = component_index(sys, cp)
    return cp


def newton_refine(sys, q0, newton_tol=1e-12, max_iter=50, rank_threshold=RANK_THRESHOLD):
    """Refine q0 onto C_Q. The correction is the minimum-norm Gauss-Newton
    step, so it moves transversally to the component.

    """
    q0 = _check_point(sys, q0)

    def func(q):
        return critical_residual(sys, q), residual_jacobian(sys, q)

    q, norm, it = _gauss_newton(func, q0, newton_tol, max_iter, sys.k, "Newton refinement")
    logging.debug("refined onto C_Q in %d iterations, residual %.3g", it, norm)
    return point_from_q(sys, sys.wrap(q), rank_threshold)


def component_index(sys, cp):
    if not cp.generic:
        raise IndexUndefinedError("index undefined: the point %s is not generic (kernel "
                                  "dimension %d, expected %d)"
                                  % (list(cp.q), cp.kernel_dim, sys.n - sys.k))
    g_inv = sys.jet(cp.q).g_inv
    u, s, vt = numpy.linalg.svd(cp.jac)
    ur = u[:, :sys.k]
    restricted = ur.T.dot(cp.jac).dot(g_inv).dot(ur)
    return int(numpy.sum(numpy.linalg.eigvals(restricted).real < 0.0))


def nongenericity_indicator(sys, cp, membership_tol=1e-8):
    """(True when rank D(rho^T dU) < k, sigma_k / sigma_max)"""
    if not isinstance(cp, CriticalPoint):
        cp = point_from_q(sys, cp)
    if cp.residual > membership_tol:
        raise OffManifoldError("point is not on the critical manifold (residual %.3g)"
                               % cp.residual, cp.residual)
    return not cp.generic, cp.sigma_ratio


def critical_bundle_fibre(sys, q, membership_tol=1e-8):
    """Basis covectors of the fibre (W*_q)^perp of the critical bundle over
    q: the orthonormalized constraint 1-forms.

    """
    from .mechsys import extension_field

    q = _check_point(sys, q)
    residual = float(numpy.linalg.norm(critical_residual(sys, q)))
    if residual > membership_tol:
        raise OffManifoldError("q=%s is not on the critical manifold (residual %.3g)"
                               % (list(q), residual), residual)
    e = sys.jet(q).E
    basis = [e[:, i].copy() for i in range(e.shape[1])]
    for p in basis:
        v = extension_field(sys, numpy.concatenate((q, p)))
        if numpy.linalg.norm(v) > 1e-9 * max(1.0, numpy.linalg.norm(p)):
            logging.warning("extension field does not vanish on the fibre at q=%s (%.3g)",
                            list(q), numpy.linalg.norm(v))
    return basis


##############################################################################
# Multistart

def _grid_axes(sys, grid_per_dim):
    axes = []
    for lo, hi, per in zip(sys.lower, sys.upper, sys.periodic):
        axes.append(numpy.linspace(lo, hi, grid_per_dim, endpoint=not per))
    return axes


class MultistartWorker(object):
    """Newton on dU from every grid point. Results are refined points or
    None for seeds that did not converge.
    """
    def __init__(self, sys, grid_per_dim, newton_tol=1e-12, max_iter=50):
        self.sys = sys
        self.grid_per_dim = grid_per_dim
        self.newton_tol = newton_tol
        self.max_iter = max_iter

    def iterate_work_items(self):
        return itertools.product(*_grid_axes(self.sys, self.grid_per_dim))

    def do_work(self, seed):
        sys = self.sys

        def func(q):
            j = sys.jet(q)
            return j.dU, j.d2U

        try:
            q, _, _ = _gauss_newton(func, seed, self.newton_tol, self.max_iter, sys.n,
                                    "critical point search")
        except NoConvergenceError as e:
            logging.debug("seed %s did not converge: %s", list(seed), e)
            return None
        return sys.wrap(q)


def find_U_critical_points(sys, grid_per_dim=6, newton_tol=1e-12, max_iter=50, dedup_tol=1e-6,
                           dispatcher=None, observer=None, rank_threshold=RANK_THRESHOLD):
    """Zeros of dU from multistart Newton over a uniform grid, deduplicated
    with the periodic-aware distance and sorted lexicographically.

    """
    if grid_per_dim < 2:
        raise ValueError("grid_per_dim must be at least 2")
    worker = MultistartWorker(sys, grid_per_dim, newton_tol, max_iter)

    flat = True
    for seed in worker.iterate_work_items():
        j = sys.jet(numpy.array(seed))
        if numpy.linalg.norm(j.dU) > newton_tol or numpy.max(numpy.abs(j.d2U)) > newton_tol:
            flat = False
            break
    if flat:
        raise DegeneratePotentialError("potential is degenerate: dU and D^2U vanish on the "
                                       "whole search grid")

    dispatcher = dispatcher or Dispatcher()
    found = []
    for q in dispatcher.run_all(worker, observer or Observer()):
        if q is None:
            continue
        if all(util.periodic_distance(q, other, sys.periodic) > dedup_tol for other in found):
            found.append(q)
    found.sort(key=tuple)

    points = []
    for q in found:
        cp = point_from_q(sys, q, rank_threshold)
        hess_rank = numpy.linalg.matrix_rank(sys.jet(q).d2U)
        if hess_rank < sys.n:
            logging.warning("critical point %s of U is not Morse (Hessian rank %d)",
                            list(q), hess_rank)
        points.append(cp)
    logging.info("Found %d critical points of U", len(points))
    return points


##############################################################################
# Continuation

def _kernel_vector(cp):
    return numpy.linalg.svd(cp.jac)[2][-1]


def _orient(v, reference=None):
    if reference is not None:
        return v if v.dot(reference) >= 0.0 else -v
    for c in v:
        if abs(c) > 1e-12:
            return v if c > 0 else -v
    return v


def _arc_length(sys, points, closed):
    total = sum(util.periodic_distance(a.q, b.q, sys.periodic)
                for a, b in zip(points, points[1:]))
    if closed and len(points) > 1:
        total += util.periodic_distance(points[-1].q, points[0].q, sys.periodic)
    return total


def _march(sys, seed, tangent, step, max_points, count, newton_tol, max_iter, observer):
    """Walk from seed along tangent. Returns (points after seed, closed,
    boundary)."""
    points = []
    prev = seed
    while True:
        pred = prev.q + step * tangent
        try:
            cp = newton_refine(sys, pred, newton_tol, max_iter)
        except NoConvergenceError as e:
            logging.warning("continuation stopped: corrector failed near %s (%s)",
                            list(pred), e)
            return points, False, True
        if not cp.generic:
            logging.warning("continuation reached a non-generic point at %s (kernel "
                            "dimension %d); stopping", list(cp.q), cp.kernel_dim)
            return points, False, True
        if cp.index != seed.index:
            logging.warning("index changes from %d to %d at %s; splitting the component "
                            "there", seed.index, cp.index, list(cp.q))
            return points, False, True
        if util.periodic_distance(prev.q, cp.q, sys.periodic) > 2.0 * step:
            logging.warning("continuation jumped from %s to %s; stopping",
                            list(prev.q), list(cp.q))
            return points, False, True

        if count + len(points) >= 10:
            if util.segment_distance(seed.q, prev.q, cp.q, sys.periodic) < 0.5 * step:
                if util.periodic_distance(cp.q, seed.q, sys.periodic) >= 0.5 * step:
                    points.append(cp)
                return points, True, False
        points.append(cp)
        observer.add(1)
        if count + len(points) > max_points:
            raise ContinuationLimitError("component exceeds %d points" % max_points,
                                         CriticalComponent([seed] + points, seed.index))

        new_tangent = _orient(_kernel_vector(cp), tangent)
        tangent = new_tangent
        prev = cp


def continue_component(sys, seed, step=1e-2, max_points=100000, orientation=None,
                       newton_tol=1e-12, max_iter=50, observer=None):
    """Trace the component of C_Q through a generic seed point.

    The predictor steps along the unit kernel vector of the Jacobian, keeping
    its orientation from point to point; the corrector is newton_refine. An
    open arc is traced in both directions from the seed.

    """
    if not isinstance(seed, CriticalPoint):
        seed = newton_refine(sys, seed, newton_tol, max_iter)
    if not seed.generic:
        raise IndexUndefinedError("cannot continue from the non-generic point %s"
                                  % list(seed.q))
    dim = sys.n - sys.k
    if dim == 0:
        return CriticalComponent([seed], seed.index, closed=True)
    if dim > 1:
        logging.warning("the component through %s has dimension %d; only 1-dimensional "
                        "components are continued", list(seed.q), dim)
        return CriticalComponent([seed], seed.index, cloud=True)

    observer = observer or Observer()
    tangent = _orient(_kernel_vector(seed),
                      None if orientation is None else numpy.asarray(orientation, dtype=float))
    forward, closed, boundary = _march(sys, seed, tangent, step, max_points, 1, newton_tol,
                                       max_iter, observer)
    points = [seed] + forward
    if not closed:
        backward, _, back_boundary = _march(sys, seed, -tangent, step, max_points,
                                            len(points), newton_tol, max_iter, observer)
        points = backward[::-1] + points
        boundary = boundary or back_boundary
    return CriticalComponent(points, seed.index, closed, _arc_length(sys, points, closed),
                             boundary)


def distance_to_component(sys, q, component):
    """Distance from q to the polyline through the component's points"""
    pts = component.points
    if len(pts) == 1 or component.cloud:
        return min(util.periodic_distance(q, p.q, sys.periodic) for p in pts)
    pairs = list(zip(pts, pts[1:]))
    if component.closed:
        pairs.append((pts[-1], pts[0]))
    return min(util.segment_distance(q, a.q, b.q, sys.periodic) for a, b in pairs)


def _insert_point(sys, component, cp):
    """Put cp into the component next to its nearest segment"""
    pts = component.points
    if len(pts) == 1 or component.cloud:
        pts.append(cp)
        return
    n_seg = len(pts) if component.closed else len(pts) - 1
    best = min(range(n_seg), key=lambda i: util.segment_distance(
        cp.q, pts[i].q, pts[(i + 1) % len(pts)].q, sys.periodic))
    pts.insert(best + 1, cp)


def _merge(sys, components, step):
    graph = networkx.Graph()
    graph.add_nodes_from(range(len(components)))
    for a, b in itertools.combinations(range(len(components)), 2):
        if any(distance_to_component(sys, p.q, components[b]) <= step
               for p in components[a].points):
            graph.add_edge(a, b)
    merged = []
    for group in sorted(sorted(g) for g in networkx.connected_components(graph)):
        primary = components[group[0]]
        for other in group[1:]:
            logging.debug("merging touching components %d and %d", group[0], other)
            for p in components[other].points:
                if distance_to_component(sys, p.q, primary) > 0.5 * step:
                    primary.points.append(p)
                    primary.cloud = True
            primary.closed = primary.closed or components[other].closed
        merged.append(primary)
    return merged


class ContinuationWorker(object):
    """continue_component from each seed"""
    def __init__(self, sys, seeds, step=1e-2, max_points=100000, newton_tol=1e-12,
                 max_iter=50):
        self.sys = sys
        self.seeds = [numpy.asarray(s, dtype=float) for s in seeds]
        self.step = step
        self.max_points = max_points
        self.newton_tol = newton_tol
        self.max_iter = max_iter

    def iterate_work_items(self):
        return iter(self.seeds)

    def do_work(self, seed):
        return continue_component(self.sys, seed, self.step, self.max_points, None,
                                  self.newton_tol, self.max_iter)


def continue_from_seeds(sys, seeds, step=1e-2, max_points=100000, newton_tol=1e-12,
                        max_iter=50, dispatcher=None):
    """Components through the given seeds, one work item per seed, with
    components that touch merged. Order follows the sorted seeds.
    """
    seeds = sorted((numpy.asarray(s, dtype=float) for s in seeds), key=tuple)
    dispatcher = dispatcher or Dispatcher()
    components = dispatcher.run_all(
        ContinuationWorker(sys, seeds, step, max_points, newton_tol, max_iter),
        LoggingObserver("seeds"))
    return _merge(sys, components, step)


def trace_critical_manifold(sys, grid_per_dim=6, step=1e-2, max_points=100000,
                            newton_tol=1e-12, max_iter=50, membership_tol=1e-8,
                            dispatcher=None):
    """Critical points of U, the components of C_Q through them, and the
    check that every critical point of U lies on a component.

    Returns (components, critical points of U).

    """
    u_points = find_U_critical_points(sys, grid_per_dim, newton_tol, max_iter,
                                      dispatcher=dispatcher,
                                      observer=LoggingObserver("seeds"))
    components = []
    observer = LoggingObserver("points").start(None)
    for cp in u_points:
        if not cp.generic:
            logging.warning("critical point %s of U is not a generic point of C_Q; it is "
                            "not used as a seed", list(cp.q))
            continue
        near = [c for c in components if distance_to_component(sys, cp.q, c) <= step]
        if near:
            continue
        components.append(continue_component(sys, cp, step, max_points, None, newton_tol,
                                             max_iter, observer))
    observer.finish()
    components = _merge(sys, components, step)

    for cp in u_points:
        dists = [distance_to_component(sys, cp.q, c) for c in components]
        if not dists or min(dists) > step:
            logging.warning("critical point %s of U lies on no traced component", list(cp.q))
            continue
        target = components[int(numpy.argmin(dists))]
        if min(dists) > membership_tol:
            _insert_point(sys, target, cp)
    for c in components:
        c.arc_length = _arc_length(sys, c.points, c.closed)
    components.sort(key=lambda c: tuple(c.points[0].q))
    logging.info("Traced %d components of the critical manifold", len(components))
    return components, u_points


##############################################################################
# Records

def point_to_record(sys, cp):
    j = sys.jet(cp.q)
    return OrderedDict([
        ("q", list(cp.q)),
        ("U", j.U),
        ("grad_U_norm", float(numpy.linalg.norm(j.dU))),
        ("residual", cp.residual),
        ("kernel_dim", cp.kernel_dim),
        ("generic", cp.generic),
        ("index", cp.index),
        ("sigma_ratio", cp.sigma_ratio),
    ])


def component_to_record(sys, component, component_id):
    return OrderedDict([
        ("model", sys.name),
        ("params", dict(sorted(sys.params.items()))),
        ("component_id", component_id),
        ("index", component.index),
        ("closed", component.closed),
        ("ordered", not component.cloud),
        ("arc_length", component.arc_length),
        ("points", [list(p.q) for p in component.points]),
        ("residuals", [p.residual for p in component.points]),
    ])


def components_csv_rows(sys, components):
    """Header and rows of the flat CSV: component_id, point_id, index,
    q_1..q_n, residual
    """
    header = (["component_id", "point_id", "index"] +
              ["q_%d" % (i + 1) for i in range(sys.n)] + ["residual"])
    rows = []
    for cid, c in enumerate(components):
        for pid, p in enumerate(c.points):
            rows.append([cid, pid, c.index] + list(p.q) + [p.residual])
    return header, rows
