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

"""Pointwise differential geometry on a coordinate chart.

Conventions used throughout holonome:

* A vector field is a callable q -> coefficient vector. A projector field is
  a callable q -> square matrix. A scalar field is a callable q -> number.
  Callables that compute with the functions of holonome_core.expr accept
  DualValue coordinates and are differentiated exactly; anything else falls
  back to central differences with h = 1e-6*(1+|q|).

* The symplectic form is represented by the chart matrix Omega through
  omega(X, Y) = Y^T Omega X. With Omega = [[0, I], [-I, 0]] the Hamiltonian
  field of f is X_f = -Omega^{-1} grad f = (d_p f, -d_q f).

"""

import logging
from collections import namedtuple

import numpy
import scipy.linalg

from . import expr
from .errors import NumericError

# relative singular value threshold for every rank decision
RANK_THRESHOLD = 1e-9

FD_STEP = 1e-6


class CoframeRankError(NumericError):
    pass


class SquareRootError(NumericError):
    pass


class CompatibilityError(NumericError):
    """The inputs to compatible_triple cannot produce a compatible triple"""


ProjectorPair = namedtuple("ProjectorPair", ("rho", "rho_bar", "g_inv"))
CompatibleTriple = namedtuple("CompatibleTriple", ("g_K", "J", "omega"))
FlagReport = namedtuple("FlagReport", ("ranks", "degree", "chow", "lower_bound"))
FlagReport.__new__.__defaults__ = (False,)


def symplectic_matrix(n):
    """The standard chart matrix [[0, I], [-I, 0]] on R^{2n}"""
    eye = numpy.eye(n)
    zero = numpy.zeros((n, n))
    return numpy.block([[zero, eye], [-eye, zero]])


def numerical_rank(m, threshold=RANK_THRESHOLD):
    m = numpy.atleast_2d(numpy.asarray(m, dtype=float))
    if m.size == 0:
        return 0
    sv = numpy.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(numpy.sum(sv > threshold * sv[0]))


##############################################################################
# Configuration-space projectors

def _check_gram(gram, q):
    sv = numpy.linalg.svd(gram, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_THRESHOLD * sv[0]:
        raise CoframeRankError("constraint 1-forms are linearly dependent at q=%s "
                               "(Gram singular values %s)" % (_fmt(q), sv))


def _fmt(q):
    if q is None:
        return "?"
    return "(" + ", ".join("%.6g" % v for v in q) + ")"


def orthonormalize_coframe(zetas, g_inv, q=None):
    """Gram-Schmidt the constraint 1-forms in the cometric g_inv.

    zetas is a sequence of coefficient rows (one per 1-form). Returns E, an
    n x (n-k) matrix whose columns are the orthonormalized 1-forms, so that
    E^T g_inv E = I. The Gram-Schmidt recursion is carried out through the
    Cholesky factor of the Gram matrix, which gives the same triangular
    change of basis.

    """
    g_inv = numpy.asarray(g_inv, dtype=float)
    n = g_inv.shape[0]
    if len(zetas) == 0:
        return numpy.zeros((n, 0))
    z = numpy.array(zetas, dtype=float).T
    gram = z.T.dot(g_inv).dot(z)
    _check_gram(gram, q)
    chol = numpy.linalg.cholesky(gram)
    return scipy.linalg.solve_triangular(chol, z.T, lower=True).T


def orthonormalize_coframe_jet(z, dz, g_inv, dg_inv, q=None):
    """orthonormalize_coframe together with its q-derivative.

    z is n x m (columns are 1-forms), dz is n x m x n with dz[..., k] the
    derivative along q^k, and likewise dg_inv. Returns (E, dE).

    """
    n, m = z.shape
    if m == 0:
        return numpy.zeros((n, 0)), numpy.zeros((n, 0, n))
    gram = z.T.dot(g_inv).dot(z)
    _check_gram(gram, q)
    dgram = (numpy.einsum('iak,ij,jb->abk', dz, g_inv, z) +
             numpy.einsum('ia,ijk,jb->abk', z, dg_inv, z) +
             numpy.einsum('ia,ij,jbk->abk', z, g_inv, dz))

    chol = numpy.linalg.cholesky(gram)
    chol_inv = scipy.linalg.solve_triangular(chol, numpy.eye(m), lower=True)
    e = z.dot(chol_inv.T)

    de = numpy.empty((n, m, n))
    for k in range(n):
        x = chol_inv.dot(dgram[:, :, k]).dot(chol_inv.T)
        phi = numpy.tril(x)
        phi[numpy.diag_indices(m)] *= 0.5
        dchol = chol.dot(phi)
        dchol_inv_t = -chol_inv.T.dot(dchol.T).dot(chol_inv.T)
        de[:, :, k] = dz[:, :, k].dot(chol_inv.T) + z.dot(dchol_inv_t)
    return e, de


def projectors_from_coframe(e, g_inv):
    """rho_bar = g^-1 E E^T projects onto the g-complement of W; rho = I - rho_bar"""
    g_inv = numpy.asarray(g_inv, dtype=float)
    n = g_inv.shape[0]
    rho_bar = g_inv.dot(e).dot(e.T) if e.shape[1] else numpy.zeros((n, n))
    return ProjectorPair(numpy.eye(n) - rho_bar, rho_bar, g_inv)


def projector_derivative(e, de, g_inv, dg_inv):
    """q-derivative of rho, shaped n x n x n with the direction last"""
    drho_bar = (numpy.einsum('ijk,jl,ml->imk', dg_inv, e, e) +
                numpy.einsum('ij,jlk,ml->imk', g_inv, de, e) +
                numpy.einsum('ij,jl,mlk->imk', g_inv, e, de))
    return -drho_bar


##############################################################################
# Compatible almost-Kaehler triple

def matrix_sqrt_spd(m):
    """The SPD square root of a symmetric positive definite matrix, by
    symmetric eigendecomposition.

    """
    m = numpy.asarray(m, dtype=float)
    scale = numpy.linalg.norm(m)
    if scale == 0.0 or numpy.linalg.norm(m - m.T) > 1e-9 * scale:
        raise SquareRootError("matrix is not symmetric positive definite")
    w, v = numpy.linalg.eigh(0.5 * (m + m.T))
    if w[0] <= 1e-14 * w[-1] or w[0] <= 0.0:
        raise SquareRootError("matrix is not positive definite (smallest eigenvalue %r)" % w[0])
    a = (v * numpy.sqrt(w)).dot(v.T)
    return 0.5 * (a + a.T)


def is_omega_skew(pi, omega, tol=1e-9):
    """True when omega(pi X, Y) = omega(X, pi Y) for all X, Y"""
    lhs = omega.dot(pi)
    return numpy.max(numpy.abs(lhs - pi.T.dot(omega))) <= tol * max(1.0, numpy.max(numpy.abs(lhs)))


def compatible_triple(omega, pi, g_prime):
    """Build (g_K, J, omega) compatible with omega in which pi is both
    g_K-symmetric and J-linear.

    g~ = pi^T g' pi + pib^T g' pib makes pi g~-symmetric; K solves
    omega(X, Y) = g~(K X, Y); A is the g~-positive root of -K^2; then
    J = K A^-1 and g_K = g~ A.

    """
    omega = numpy.asarray(omega, dtype=float)
    pi = numpy.asarray(pi, dtype=float)
    g_prime = numpy.asarray(g_prime, dtype=float)
    dim = omega.shape[0]
    if numerical_rank(omega) != dim:
        raise CompatibilityError("symplectic matrix is degenerate")
    if not is_omega_skew(pi, omega):
        raise CompatibilityError("projector is not omega-skew-orthogonal")

    pi_bar = numpy.eye(dim) - pi
    g_tilde = pi.T.dot(g_prime).dot(pi) + pi_bar.T.dot(g_prime).dot(pi_bar)
    g_tilde = 0.5 * (g_tilde + g_tilde.T)
    k = numpy.linalg.solve(g_tilde, omega)

    # work in a g~-orthonormal frame, where K is skew and -K^2 symmetric
    try:
        c = numpy.linalg.cholesky(g_tilde)
    except numpy.linalg.LinAlgError:
        raise SquareRootError("projected metric is not positive definite")
    c_inv_t = scipy.linalg.solve_triangular(c, numpy.eye(dim), lower=True).T
    k_frame = c.T.dot(k).dot(c_inv_t)
    a_frame = matrix_sqrt_spd(-k_frame.dot(k_frame))
    a = c_inv_t.dot(a_frame).dot(c.T)

    j = k.dot(numpy.linalg.inv(a))
    g = g_tilde.dot(a)
    return CompatibleTriple(0.5 * (g + g.T), j, omega)


##############################################################################
# Vector fields

class VectorField(object):
    """A vector field on the chart, given as an evaluation callback.

    differentiable=False marks a black box: its Jacobian is always taken by
    central differences.

    """
    def __init__(self, func, differentiable=True, name=None):
        self.func = func
        self.differentiable = differentiable
        self.name = name or getattr(func, '__name__', 'field')

    def __call__(self, q):
        return self.func(q)

    def __repr__(self):
        return "<VectorField %s>" % self.name


def as_field(f):
    if isinstance(f, VectorField):
        return f
    return VectorField(f)


def _is_plain(q):
    return not any(isinstance(v, expr.DualValue) for v in q)


def _to_array(values):
    values = list(values)
    if all(not isinstance(v, expr.DualValue) for v in values):
        return numpy.array(values, dtype=float)
    out = numpy.empty(len(values), dtype=object)
    out[:] = values
    return out


def _dual_jacobian(func, q):
    n = len(q)
    tag = expr.new_tag()
    out = numpy.asarray(func(expr.DualValue.seed(q, tag)), dtype=object)
    rows = [expr.partials_of(v, tag, n) for v in out.ravel()]
    if all(isinstance(r, numpy.ndarray) and r.dtype != object for r in rows):
        return numpy.array(rows, dtype=float).reshape(out.shape + (n,))
    jac = numpy.empty((len(rows), n), dtype=object)
    for i, r in enumerate(rows):
        jac[i, :] = list(r)
    return jac.reshape(out.shape + (n,))


def _fd_jacobian(func, q):
    q = numpy.asarray(q, dtype=float)
    cols = []
    for k in range(len(q)):
        h = FD_STEP * (1.0 + abs(q[k]))
        qp = q.copy()
        qm = q.copy()
        qp[k] += h
        qm[k] -= h
        cols.append((numpy.asarray(func(qp), dtype=float) -
                     numpy.asarray(func(qm), dtype=float)) / (2.0 * h))
    return numpy.stack(cols, axis=-1)


def jacobian(func, q, differentiable=True):
    """Derivative of a vector- or matrix-valued callable at q, with the
    direction as the last axis.

    """
    if differentiable:
        try:
            return _dual_jacobian(func, q)
        except (TypeError, ValueError, AttributeError):
            if not _is_plain(q):
                raise
            logging.debug("falling back to finite differences for %r", func)
    return _fd_jacobian(func, q)


def field_jacobian(field, q):
    field = as_field(field)
    return jacobian(field, q, field.differentiable)


def _bracket(x_field, y_field, q):
    x = _to_array(x_field(q))
    y = _to_array(y_field(q))
    dx = field_jacobian(x_field, q)
    dy = field_jacobian(y_field, q)
    return dy.dot(x) - dx.dot(y)


def lie_bracket(x_field, y_field, q):
    """[X,Y]^i = X^j d_j Y^i - Y^j d_j X^i at q"""
    x_field = as_field(x_field)
    y_field = as_field(y_field)
    return numpy.array([expr.real_part(v) for v in _bracket(x_field, y_field, q)])


def bracket_field(x_field, y_field):
    """[X,Y] as a vector field of its own, so that it can be bracketed again"""
    x_field = as_field(x_field)
    y_field = as_field(y_field)
    return VectorField(lambda q: _bracket(x_field, y_field, q),
                       differentiable=x_field.differentiable and y_field.differentiable,
                       name="[%s,%s]" % (x_field.name, y_field.name))


def _prune(fields, q):
    """Keep the fields whose values at q raise the rank, in order"""
    kept = []
    rows = []
    rank = 0
    for f in fields:
        v = numpy.array([expr.real_part(c) for c in f(q)])
        trial = numpy.array(rows + [v])
        r = numerical_rank(trial)
        if r > rank:
            kept.append(f)
            rows.append(v)
            rank = r
    return kept, rank


def flag(spanning_fields, q, max_depth=8):
    """Ranks of the flag V_0 c V_1 c ... at q, where
    V_i = V_{i-1} + [V_0, V_{i-1}].

    """
    level0 = [as_field(f) for f in spanning_fields]
    ambient = len(q)
    generators, rank = _prune(level0, q)
    if rank < len(level0):
        logging.debug("spanning fields are dependent at q=%s (rank %d of %d)",
                      _fmt(q), rank, len(level0))
    ranks = [rank]
    for depth in range(1, max_depth + 1):
        if ranks[-1] == ambient:
            break
        candidates = list(generators)
        for a in level0:
            for b in generators:
                candidates.append(bracket_field(a, b))
        generators, rank = _prune(candidates, q)
        if rank == ranks[-1]:
            break
        ranks.append(rank)
    else:
        if ranks[-1] < ambient:
            logging.warning("flag did not stabilize within %d brackets; the reported "
                            "degree %d is a lower bound", max_depth, max_depth)
            return FlagReport(ranks, max_depth, False, True)
    return FlagReport(ranks, len(ranks) - 1, ranks[-1] == ambient, False)


def frobenius_defect(pi_field, q, differentiable=True):
    """max |Lambda^k_ij| of the Frobenius tensor of the distribution that
    pi_field projects onto. Zero exactly when it is integrable at q.

    """
    p = numpy.array([[expr.real_part(c) for c in row] for row in pi_field(q)], dtype=float)
    dp = jacobian(pi_field, q, differentiable)
    dp = numpy.vectorize(expr.real_part, otypes=[float])(dp) if dp.dtype == object else dp
    # dp[k, s, r] = d_r pi^k_s
    lam = (numpy.einsum('ri,sj,ksr->kij', p, p, dp) -
           numpy.einsum('ri,sj,krs->kij', p, p, dp))
    return float(numpy.max(numpy.abs(lam))) if lam.size else 0.0


##############################################################################
# Brackets of functions

def scalar_gradient(f, x):
    """Gradient of a scalar field, exact when f computes with expr functions"""
    n = len(x)
    try:
        tag = expr.new_tag()
        out = f(expr.DualValue.seed(x, tag))
        return numpy.array([expr.real_part(v) for v in expr.partials_of(out, tag, n)])
    except (TypeError, ValueError, AttributeError):
        return _fd_jacobian(lambda y: numpy.atleast_1d(f(y)), x)[0]


def hamiltonian_vector_field(grad_f, omega_inv):
    """X_f = -Omega^-1 grad f"""
    return -numpy.asarray(omega_inv).dot(grad_f)


def bracket_from_gradients(grad_f, grad_g, pi, omega_inv):
    """{f,g}_V = omega(pi X_f, pi X_g) from the two gradients"""
    omega = numpy.linalg.inv(omega_inv)
    xf = pi.dot(hamiltonian_vector_field(grad_f, omega_inv))
    xg = pi.dot(hamiltonian_vector_field(grad_g, omega_inv))
    return float(xg.dot(omega).dot(xf))


def v_bracket(f, g, pi, omega_inv, x):
    """The generalized Dirac bracket {f,g}_V at the phase point x.

    pi may be the projector matrix at x or a projector field. With pi = I
    this is the Poisson bracket; {H, f}_V is the rate of change of f along
    the projected Hamiltonian flow.

    """
    x = numpy.asarray(x, dtype=float)
    if callable(pi):
        pi = numpy.asarray(pi(x), dtype=float)
    if f is g:
        return 0.0
    return bracket_from_gradients(scalar_gradient(f, x), scalar_gradient(g, x),
                                  numpy.asarray(pi, dtype=float), omega_inv)
