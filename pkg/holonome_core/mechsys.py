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

"""Constrained mechanical systems and their extension to phase space.

A MechSystem is the data (Q, g, U, W): a coordinate chart with n coordinates,
a metric g, a potential U and a rank k distribution W cut out by n-k
constraint 1-forms zeta. Everything else in holonome asks this module for
pointwise quantities:

* the configuration-space jet at q (g^-1, the orthonormalized coframe E,
  the projector rho onto W, derivatives of all three, and U up to second
  order), built once per point and kept in an LRU cache;
* the extension of the constrained dynamics to T*Q: the constraint functions
  f = E^T g^-1 p, the skew matrix T, the phase projector pi_V and the
  extension vector field.

Phase points are either PhasePoint objects or flat vectors (q, p) of length 2n.

"""

import logging
import math
from collections import namedtuple

import numpy

from . import expr
from . import geometry
from . import util
from .cache import LRUCache
from .config_parser import ModelParser
from .errors import DimensionMismatch, NumericError
from .settingsValidators import ValidationException


class MetricError(NumericError):
    """The metric is not symmetric positive definite at a point"""
    def __init__(self, message, point=None):
        super(MetricError, self).__init__(message)
        self.point = point


class StateDimensionError(DimensionMismatch):
    pass


ConfigurationJet = namedtuple("ConfigurationJet", (
    "q", "g", "g_inv", "dg_inv", "E", "dE", "rho", "rho_bar", "drho", "U", "dU", "d2U"))

ExtensionAssembly = namedtuple("ExtensionAssembly", ("E", "F", "T", "rho", "rho_bar", "piV"))

HolderResiduals = namedtuple("HolderResiduals", ("velocity", "momentum", "leaf"))


class PhasePoint(object):
    """A point (q, p) of T*Q"""
    __slots__ = ['q', 'p']

    def __init__(self, q, p):
        self.q = numpy.array(q, dtype=float)
        self.p = numpy.array(p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise StateDimensionError("q and p must be vectors of the same length "
                                      "(got %d and %d)" % (self.q.size, self.p.size))
        if not (numpy.all(numpy.isfinite(self.q)) and numpy.all(numpy.isfinite(self.p))):
            raise StateDimensionError("phase point has non-finite entries")

    @classmethod
    def from_state(cls, x):
        x = numpy.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])

    def state(self):
        return numpy.concatenate((self.q, self.p))

    def __repr__(self):
        return "PhasePoint(q=%r, p=%r)" % (list(self.q), list(self.p))


class MechSystem(object):
    """An immutable description of (Q, g, U, W). Build one with
    load_system() or load_system_file().

    """
    def __init__(self, name, coord_names, periodic, g_exprs, U_expr, zeta_exprs, params,
                 unconstrained=False, lower=None, upper=None, source=None):
        self.name = name
        self.coord_names = tuple(coord_names)
        self.periodic = tuple(bool(b) for b in periodic)
        self.g_exprs = g_exprs
        self.U_expr = U_expr
        self.zeta_exprs = zeta_exprs
        self.params = dict(params)
        self.unconstrained = unconstrained
        self.source = source
        self.lower, self.upper = self._bounds(lower, upper)
        self._jets = LRUCache(size=64)

    def _bounds(self, lower, upper):
        default_lower = [0.0 if per else -math.pi for per in self.periodic]
        default_upper = [util.TWO_PI if per else math.pi for per in self.periodic]
        lower = numpy.array(lower if lower is not None else default_lower, dtype=float)
        upper = numpy.array(upper if upper is not None else default_upper, dtype=float)
        if numpy.any(upper <= lower):
            raise ValidationException("[model] every upper bound must exceed its lower bound")
        return lower, upper

    @property
    def n(self):
        return len(self.coord_names)

    @property
    def k(self):
        """rank of W"""
        return self.n - len(self.zeta_exprs)

    def __repr__(self):
        return "<MechSystem %s n=%d k=%d>" % (self.name, self.n, self.k)

    def check_q(self, q):
        q = numpy.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise StateDimensionError("expected %d coordinates, got %d" % (self.n, q.size))
        return q

    def split(self, x):
        """(q, p) arrays from a PhasePoint or a flat state vector"""
        if isinstance(x, PhasePoint):
            q, p = x.q, x.p
        else:
            x = numpy.asarray(x, dtype=float)
            if x.shape != (2 * self.n,):
                raise StateDimensionError("expected a phase point of length %d, got %d"
                                          % (2 * self.n, x.size))
            q, p = x[:self.n], x[self.n:]
        if q.shape != (self.n,) or p.shape != (self.n,):
            raise StateDimensionError("expected q and p of length %d" % self.n)
        return q, p

    def wrap(self, q):
        """Store periodic coordinates in [0, 2pi)"""
        return util.wrap_periodic(q, self.periodic)

    def phase_point(self, q, p):
        return PhasePoint(self.wrap(self.check_q(q)), self.check_q(p))

    ##########################################################################
    # configuration-space evaluation

    def metric(self, q):
        """g(q), checked to be symmetric positive definite"""
        q = self.check_q(q)
        n = self.n
        g = numpy.array([[self.g_exprs[i][j].eval(q, self.params) for j in range(n)]
                         for i in range(n)])
        self._check_metric(g, q)
        return g

    def _check_metric(self, g, q):
        scale = max(1.0, numpy.max(numpy.abs(g)))
        if numpy.max(numpy.abs(g - g.T)) > 1e-12 * scale:
            raise MetricError("metric is not symmetric at q=%s" % _fmt(q), q)
        try:
            numpy.linalg.cholesky(g)
        except numpy.linalg.LinAlgError:
            raise MetricError("metric is not positive definite at q=%s" % _fmt(q), q)

    def potential(self, q):
        return self.U_expr.eval(self.check_q(q), self.params)

    def jet(self, q):
        """The ConfigurationJet at q, from the cache when possible"""
        q = self.check_q(q)
        return self._jets.get_or_build(q.tobytes(), lambda: self._build_jet(q.copy()))

    def _build_jet(self, q):
        n = self.n
        params = self.params
        g = numpy.empty((n, n))
        dg = numpy.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                g[i, j], dg[i, j, :] = expr.value_and_grad(self.g_exprs[i][j], q, params)
        self._check_metric(g, q)
        g = 0.5 * (g + g.T)
        g_inv = numpy.linalg.inv(g)
        g_inv = 0.5 * (g_inv + g_inv.T)
        dg_inv = -numpy.einsum('ij,jlk,lm->imk', g_inv, dg, g_inv)

        m = len(self.zeta_exprs)
        z = numpy.empty((n, m))
        dz = numpy.empty((n, m, n))
        for a, row in enumerate(self.zeta_exprs):
            for i, e in enumerate(row):
                z[i, a], dz[i, a, :] = expr.value_and_grad(e, q, params)
        e_mat, de = geometry.orthonormalize_coframe_jet(z, dz, g_inv, dg_inv, q)
        pair = geometry.projectors_from_coframe(e_mat, g_inv)
        drho = geometry.projector_derivative(e_mat, de, g_inv, dg_inv) if m else \
            numpy.zeros((n, n, n))

        u, du, d2u = expr.value_grad_hessian(self.U_expr, q, params)
        return ConfigurationJet(q, g, g_inv, dg_inv, e_mat, de, pair.rho, pair.rho_bar, drho,
                                u, du, d2u)

    def projectors(self, q):
        j = self.jet(q)
        return geometry.ProjectorPair(j.rho, j.rho_bar, j.g_inv)


def _fmt(q):
    return "(" + ", ".join("%.6g" % v for v in q) + ")"


##############################################################################
# Loading

def build_system(config, source=None):
    """Bind a validated model config (see settingsDefinition) into a
    MechSystem, checking that the parts fit together.

    """
    model = config['model']
    coords = model['coordinates']
    n = len(coords)
    params = config['params']

    periodic = model.get('periodic')
    if periodic is None:
        periodic = [False] * n
    if len(periodic) != n:
        raise DimensionMismatch("[model] periodic has %d entries for %d coordinates"
                                % (len(periodic), n))
    for key in ('lower', 'upper'):
        if key in model and len(model[key]) != n:
            raise DimensionMismatch("[model] %s has %d entries for %d coordinates"
                                    % (key, len(model[key]), n))

    for name in params:
        if name in coords:
            raise ValidationException("parameter %r shadows a coordinate" % name)

    g_texts = config['metric']['g']
    if len(g_texts) != n * n:
        raise DimensionMismatch("[metric] g has %d entries, expected %d for %d coordinates"
                                % (len(g_texts), n * n, n))
    names = list(params)
    g_exprs = [[expr.parse(g_texts[i * n + j], coords, names) for j in range(n)]
               for i in range(n)]
    u_expr = expr.parse(config['potential']['U'], coords, names)

    rows = (config.get('constraints') or {}).get('zeta') or []
    if model['unconstrained'] and rows:
        raise ValidationException("'unconstrained = true' cannot be combined with "
                                  "[constraints] rows")
    if not model['unconstrained'] and not rows:
        raise ValidationException("at least one constraint required (set 'unconstrained = "
                                  "true' in [model] for a free system)")
    for r, row in enumerate(rows):
        if len(row) != n:
            raise DimensionMismatch("[constraints] row %d has %d entries for %d coordinates"
                                    % (r + 1, len(row), n))
    if len(rows) >= n:
        raise DimensionMismatch("%d constraints on %d coordinates leave no admissible "
                                "velocities" % (len(rows), n))
    zeta_exprs = [[expr.parse(t, coords, names) for t in row] for row in rows]

    system = MechSystem(model['name'], coords, periodic, g_exprs, u_expr, zeta_exprs, params,
                        unconstrained=model['unconstrained'], lower=model.get('lower'),
                        upper=model.get('upper'), source=source)
    logging.debug("Loaded %r from %s", system, source or "text")
    return system


def load_system(config_text, source=None):
    """Parse and bind a model given as text"""
    parser = ModelParser()
    parser.parse_string(config_text, source=source or "<string>")
    return build_system(parser.get_validated_config(), source=source)


def load_system_file(path):
    parser = ModelParser()
    parser.parse(path)
    return build_system(parser.get_validated_config(), source=path)


##############################################################################
# Phase-space quantities

def hamiltonian(sys, x):
    """H = 1/2 p^T g^-1 p + U"""
    q, p = sys.split(x)
    j = sys.jet(q)
    return 0.5 * p.dot(j.g_inv).dot(p) + j.U


def hamiltonian_gradient(sys, x):
    """(dH/dq, dH/dp)"""
    q, p = sys.split(x)
    j = sys.jet(q)
    dq = 0.5 * numpy.einsum('i,ijk,j->k', p, j.dg_inv, p) + j.dU
    return dq, j.g_inv.dot(p)


def constraint_values(sys, x):
    """f_I = g*(p, zeta_I) for the orthonormalized 1-forms"""
    q, p = sys.split(x)
    j = sys.jet(q)
    return j.E.T.dot(j.g_inv).dot(p)


def lyapunov(sys, x):
    f = constraint_values(sys, x)
    return float(f.dot(f))


def _constraint_jacobian(j, p):
    # F[j, K] = d f_K / d q^j with p held fixed
    return (numpy.einsum('ikj,il,l->jk', j.dE, j.g_inv, p) +
            numpy.einsum('ik,ilj,l->jk', j.E, j.dg_inv, p))


def assemble(sys, x):
    """The ExtensionAssembly at x: E, F, T = E F^T rho - rho^T F E^T and
    pi_V = [[rho, 0], [-T, rho^T]].

    """
    q, p = sys.split(x)
    n = sys.n
    j = sys.jet(q)
    if sys.unconstrained:
        zero = numpy.zeros((n, n))
        return ExtensionAssembly(j.E, numpy.zeros((n, 0)), zero, numpy.eye(n), zero,
                                 numpy.eye(2 * n))
    f_jac = _constraint_jacobian(j, p)
    a = j.E.dot(f_jac.T).dot(j.rho)
    t = a - a.T
    piv = numpy.block([[j.rho, numpy.zeros((n, n))], [-t, j.rho.T]])
    return ExtensionAssembly(j.E, f_jac, t, j.rho, j.rho_bar, piv)


def extension_field(sys, x):
    """(qdot, pdot) = (rho dH/dp, -rho^T dH/dq - T dH/dp)"""
    q, p = sys.split(x)
    dq, dp = hamiltonian_gradient(sys, x)
    if sys.unconstrained:
        return numpy.concatenate((dp, -dq))
    asm = assemble(sys, x)
    return numpy.concatenate((asm.rho.dot(dp), -asm.rho.T.dot(dq) - asm.T.dot(dp)))


def physical_leaf_project(sys, x):
    """p' = rho^T p, the nearest point of the physical leaf over the same q"""
    q, p = sys.split(x)
    j = sys.jet(q)
    return sys.phase_point(q, j.rho.T.dot(p))


def holder_residuals(sys, trajectory):
    """Maxima over the samples of |qdot - rho dH/dp|, |rho^T (pdot + dH/dq)|
    and |rho_bar dH/dp|, with qdot and pdot taken from the extension field.

    trajectory is a flow.Trajectory or any sequence of phase states.

    """
    states = getattr(trajectory, 'states', trajectory)
    n = sys.n
    worst = [0.0, 0.0, 0.0]
    for x in states:
        q, p = sys.split(x)
        j = sys.jet(q)
        v = extension_field(sys, x)
        dq, dp = hamiltonian_gradient(sys, x)
        residuals = (numpy.linalg.norm(v[:n] - j.rho.dot(dp)),
                     numpy.linalg.norm(j.rho.T.dot(v[n:] + dq)),
                     numpy.linalg.norm(j.rho_bar.dot(dp)))
        worst = [max(w, r) for w, r in zip(worst, residuals)]
    return HolderResiduals(*worst)


def phase_projector_field(sys):
    """pi_V as a projector field on T*Q. The field is a black box to the
    dual-number machinery; pass differentiable=False to geometry helpers.

    """
    def pi_v(x):
        return assemble(sys, x).piV
    return pi_v


def horizontal_fields(sys):
    """Vector fields on Q spanning W: the columns of rho. They are dependent
    (n fields for rank k); geometry.flag prunes them.

    """
    def column(i):
        return geometry.VectorField(lambda q: sys.jet(q).rho[:, i], differentiable=False,
                                    name="rho_%d" % (i + 1))
    return [column(i) for i in range(sys.n)]
