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

"""Stability of the extension at its equilibria (q_c, 0).

The linearization there has the block form

    [[ 0,                        rho g^-1 rho^T ],
     [ -rho^T D^2U rho - R,      0              ]]

with R_jk = dU_i rho_rj rho_sk d_s rho_ir. Its spectrum decides between
asymptotic stability, instability and critical stability; in the critical
case the eigenfrequencies are scanned for small divisors, the sums
w_l + w_i1 + ... + w_ir over the signed frequency set that come close to
zero.

"""

import itertools
import logging
from collections import OrderedDict

import numpy

from . import critical, geometry, mechsys
from .dispatcher import Dispatcher
from .errors import NumericError, OffManifoldError
from .observer import Observer

ASYMPTOTICALLY_STABLE = "asymptotically_stable"
UNSTABLE = "unstable"
CRITICALLY_STABLE = "critically_stable"
DEGENERATE = "degenerate"

# |A|^r above this is refused by the sumset enumerations
ENUMERATION_CAP = 10 ** 7


class LinearizationMismatch(NumericError):
    def __init__(self, message, analytic, numeric):
        super(LinearizationMismatch, self).__init__(message)
        self.analytic = analytic
        self.numeric = numeric

    @property
    def deviation(self):
        return float(numpy.max(numpy.abs(self.analytic - self.numeric)))


class EnumerationCapError(NumericError):
    pass


class NotCriticallyStableError(NumericError):
    pass


class ResonanceFinding(object):
    """One tuple (l; i_1..i_r) of signed frequency indices and its divisor.

    Indices are 1-based signed mode numbers: +m stands for w_m, -m for -w_m.
    structural is set when the indices cancel in +m/-m pairs, which makes
    the divisor vanish whatever the frequencies are.

    """
    __slots__ = ['r', 'tuple', 'divisor', 'resonant', 'structural']

    def __init__(self, r, tuple_, divisor, resonant, structural):
        self.r = r
        self.tuple = tuple_
        self.divisor = divisor
        self.resonant = resonant
        self.structural = structural

    def as_dict(self):
        return OrderedDict([("r", self.r), ("tuple", list(self.tuple)),
                            ("divisor", self.divisor), ("resonant", self.resonant),
                            ("structural", self.structural)])

    def __repr__(self):
        return "ResonanceFinding(r=%d, tuple=%r, divisor=%.6g%s)" % (
            self.r, self.tuple, self.divisor, ", resonant" if self.resonant else "")


class StabilityReport(object):
    __slots__ = ['point', 'matrix', 'spectrum', 'classification', 'frequencies', 'resonances',
                 'index', 'r_max', 'linearization']

    def __init__(self, point, matrix, spectrum, classification, frequencies, resonances,
                 index=None, r_max=0, linearization=None):
        self.point = point
        self.matrix = matrix
        self.spectrum = spectrum
        self.classification = classification
        self.frequencies = frequencies
        self.resonances = resonances
        self.index = index
        self.r_max = r_max
        self.linearization = linearization or OrderedDict([("source", "analytic")])

    @property
    def index_zero(self):
        return self.index == 0

    @property
    def no_resonance(self):
        return not any(f.resonant and not f.structural for f in self.resonances)

    def hypotheses_hold(self):
        """Whether the point has index 0 and no resonance up to r_max"""
        return (self.classification == CRITICALLY_STABLE and self.index_zero and
                self.no_resonance)

    def as_dict(self):
        return OrderedDict([
            ("point", OrderedDict([("q", list(self.point.q)), ("p", list(self.point.p))])),
            ("spectrum", [[z.real, z.imag] for z in self.spectrum]),
            ("classification", self.classification),
            ("frequencies", list(self.frequencies)),
            ("index", self.index),
            ("resonances", [f.as_dict() for f in self.resonances]),
            ("conjecture_hypotheses", OrderedDict([
                ("index_zero", self.index_zero),
                ("no_resonance_to_r", self.r_max if self.no_resonance else None),
                ("satisfied", self.hypotheses_hold()),
            ])),
            ("linearization", self.linearization),
        ])

    def __repr__(self):
        return "<StabilityReport %s at q=%s>" % (self.classification, list(self.point.q))


##############################################################################
# Linearization

def _check_critical(sys, q_c, membership_tol):
    sys.check_q(q_c)
    q_c = numpy.array(q_c, dtype=float)
    residual = float(numpy.linalg.norm(critical.critical_residual(sys, q_c)))
    if residual > membership_tol:
        raise OffManifoldError("(q, 0) with q=%s is not on the critical bundle (residual %.3g)"
                               % (list(q_c), residual), residual)
    return q_c


def analytic_linearization(sys, q_c):
    j = sys.jet(q_c)
    n = sys.n
    r = j.rho.T.dot(numpy.einsum('i,irs->rs', j.dU, j.drho)).dot(j.rho)
    upper = j.rho.dot(j.g_inv).dot(j.rho.T)
    lower = -j.rho.T.dot(j.d2U).dot(j.rho) - r
    zero = numpy.zeros((n, n))
    return numpy.block([[zero, upper], [lower, zero]])


def numeric_linearization(sys, q_c):
    """Central-difference Jacobian of the extension field at (q_c, 0)"""
    x = numpy.concatenate((q_c, numpy.zeros(sys.n)))
    return geometry.jacobian(lambda y: mechsys.extension_field(sys, y), x,
                             differentiable=False)


def motion_projector(sys, q_c):
    """diag(rho, rho^T) at q_c. The analytic linearization is the Jacobian of
    the extension restricted to the range of this projector; along rho_bar
    in q the field also carries -D(rho^T dU) rho_bar, which is not part of it.
    """
    j = sys.jet(q_c)
    zero = numpy.zeros((sys.n, sys.n))
    return numpy.block([[j.rho, zero], [zero, j.rho.T]])


def linearize_extension(sys, q_c, tol=1e-5, membership_tol=1e-8):
    """The 2n x 2n linearization of the extension at (q_c, 0), cross-checked
    entrywise against the finite-difference Jacobian times motion_projector().
    """
    q_c = _check_critical(sys, q_c, membership_tol)
    analytic = analytic_linearization(sys, q_c)
    numeric = numeric_linearization(sys, q_c).dot(motion_projector(sys, q_c))
    deviation = float(numpy.max(numpy.abs(analytic - numeric)))
    if deviation > tol:
        raise LinearizationMismatch("analytic and finite-difference linearizations differ "
                                    "by %.3g at q=%s" % (deviation, list(q_c)),
                                    analytic, numeric)
    logging.debug("linearization at %s checked, deviation %.3g", list(q_c), deviation)
    return analytic


def generalized_hessian(sys, x):
    """K_rs = d_s (pi_V^T dH)_r at the phase point x. On the critical bundle
    pi_V^T K = K.
    """
    x = numpy.asarray(x, dtype=float)

    def projected_gradient(y):
        dq, dp = mechsys.hamiltonian_gradient(sys, y)
        return mechsys.assemble(sys, y).piV.T.dot(numpy.concatenate((dq, dp)))

    return geometry.jacobian(projected_gradient, x, differentiable=False)


def spectrum_of(matrix):
    """Eigenvalues in a fixed order: by real part, then imaginary part"""
    eig = numpy.linalg.eigvals(matrix)
    return sorted(eig, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


##############################################################################
# Classification

def _on_axis(z, tol):
    return abs(z.real) <= tol * (1.0 + abs(z))


def classify(spectrum, tol=1e-8, zero_tol=1e-6, expected_zeros=None):
    """One of unstable, asymptotically_stable, critically_stable, degenerate.

    Eigenvalues with modulus below zero_tol are zero modes. expected_zeros
    is the number of zero modes the critical bundle accounts for; more than
    that makes the point degenerate.

    """
    spectrum = [complex(z) for z in spectrum]
    nonzero = [z for z in spectrum if abs(z) > zero_tol]
    zeros = len(spectrum) - len(nonzero)
    if any(z.real > tol * (1.0 + abs(z)) for z in nonzero):
        return UNSTABLE
    if expected_zeros is not None and zeros > expected_zeros:
        return DEGENERATE
    if nonzero and all(z.real < -tol * (1.0 + abs(z)) for z in nonzero):
        return ASYMPTOTICALLY_STABLE
    if nonzero and all(_on_axis(z, tol) for z in nonzero):
        return CRITICALLY_STABLE
    return DEGENERATE


def frequencies(spectrum, tol=1e-8, zero_tol=1e-6):
    """Sorted eigenfrequencies: |Im z| of each conjugate pair on the
    imaginary axis, with multiplicity. Zero modes are dropped.
    """
    freqs = []
    for z in spectrum:
        z = complex(z)
        if abs(z) <= zero_tol:
            continue
        if not _on_axis(z, tol):
            raise NotCriticallyStableError("eigenvalue %r is off the imaginary axis; "
                                           "frequencies are undefined" % z)
        if z.imag > 0.0:
            freqs.append(z.imag)
    return sorted(freqs)


##############################################################################
# Small divisors

def _check_cap(size, r):
    if size ** r > ENUMERATION_CAP:
        raise EnumerationCapError("enumerating %d^%d sums exceeds the cap of %d"
                                  % (size, r, ENUMERATION_CAP))


def sumset_distance(signed_freqs, r):
    """d(A_r, -A) = min |a_1 + ... + a_r + b| over a_m, b in A"""
    if r < 1:
        raise ValueError("r must be at least 1")
    a = numpy.asarray(signed_freqs, dtype=float)
    if a.size == 0:
        return float('inf')
    _check_cap(a.size, r)
    sums = numpy.unique(a)
    for _ in range(r - 1):
        sums = numpy.unique(numpy.add.outer(sums, a).ravel())
    targets = numpy.sort(-a)
    pos = numpy.searchsorted(targets, sums)
    below = targets[numpy.clip(pos - 1, 0, targets.size - 1)]
    above = targets[numpy.clip(pos, 0, targets.size - 1)]
    return float(numpy.min(numpy.minimum(numpy.abs(sums - below), numpy.abs(sums - above))))


def signed_frequencies(freqs):
    """(labels, values) of the signed set {+w_m, -w_m}, labels +m / -m"""
    labels = []
    values = []
    for m, w in enumerate(freqs, 1):
        labels.extend((m, -m))
        values.extend((w, -w))
    return labels, values


def _is_structural(labels):
    remaining = {}
    for lab in labels:
        remaining[abs(lab)] = remaining.get(abs(lab), 0) + (1 if lab > 0 else -1)
    return all(v == 0 for v in remaining.values())


def resonance_scan(freqs, r_max, resonance_tol=1e-6):
    """Divisors w_l + w_i1 + ... + w_ir over the signed frequency set for
    r = 1..r_max.

    Every resonant tuple (|divisor| < resonance_tol) is reported, with the
    tuples made only of +m/-m pairs marked structural. For each r without a
    non-structural resonance, the non-structural tuple with the smallest
    divisor is reported as well. Tuples with all indices equal are skipped,
    and the i's are taken without regard to order.

    """
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    labels, values = signed_frequencies(freqs)
    if not labels:
        return []
    _check_cap(len(labels), r_max)
    findings = []
    for r in range(1, r_max + 1):
        closest = None
        found_nonstructural = False
        for l_pos in range(len(labels)):
            for combo in itertools.combinations_with_replacement(range(len(labels)), r):
                if all(c == l_pos for c in combo):
                    continue
                tup = (labels[l_pos],) + tuple(labels[c] for c in combo)
                divisor = values[l_pos] + sum(values[c] for c in combo)
                structural = _is_structural(tup)
                resonant = abs(divisor) < resonance_tol
                if resonant:
                    findings.append(ResonanceFinding(r, tup, divisor, True, structural))
                    found_nonstructural = found_nonstructural or not structural
                elif not structural and (closest is None or abs(divisor) < abs(closest[1])):
                    closest = (tup, divisor)
        if not found_nonstructural and closest is not None:
            findings.append(ResonanceFinding(r, closest[0], closest[1], False, False))
    findings.sort(key=lambda f: (abs(f.divisor), f.r, f.tuple))
    for f in findings:
        if f.resonant and not f.structural:
            logging.info("resonance at r=%d: tuple %s, divisor %.3g", f.r, f.tuple, f.divisor)
    return findings


def i_integral(l, idx_tuple, t, amplitudes, freqs, resonance_tol=1e-6):
    """I_{l;i_1..i_r}(t) = int_0^t w_l A_l prod A_i exp(-i s D) ds with the
    divisor D = w_l + sum w_i.

    Indices are 0-based positions into amplitudes and freqs, which both run
    over the signed frequency set. Below resonance_tol the linear branch
    -t w_l A_l prod A_i is returned.

    """
    amplitudes = numpy.asarray(amplitudes, dtype=complex)
    freqs = numpy.asarray(freqs, dtype=float)
    w_l = freqs[l]
    product = amplitudes[l] * numpy.prod([amplitudes[i] for i in idx_tuple])
    divisor = w_l + sum(freqs[i] for i in idx_tuple)
    if abs(divisor) < resonance_tol:
        return complex(-t * w_l * product)
    return complex(1j * w_l * product / divisor * (numpy.exp(-1j * t * divisor) - 1.0))


##############################################################################
# Reports

def stability_report(sys, q_c, r_max=3, tolerances=None):
    """Linearization, spectrum, classification, frequencies, resonance scan
    and component index at the equilibrium (q_c, 0).

    tolerances is a dict as returned by config_parser.get_tolerances().

    """
    tol = dict(classify_tol=1e-8, zero_tol=1e-6, resonance_tol=1e-6, linearization_tol=1e-5,
               membership_tol=1e-8, rank_threshold=geometry.RANK_THRESHOLD)
    tol.update(tolerances or {})
    q_c = _check_critical(sys, q_c, tol['membership_tol'])

    linearization = OrderedDict([("source", "analytic")])
    try:
        matrix = linearize_extension(sys, q_c, tol['linearization_tol'], tol['membership_tol'])
    except LinearizationMismatch as e:
        logging.warning("%s; using the finite-difference matrix", e)
        matrix = e.numeric
        linearization = OrderedDict([("source", "finite-difference"),
                                     ("deviation", e.deviation)])

    spectrum = spectrum_of(matrix)
    classification = classify(spectrum, tol['classify_tol'], tol['zero_tol'],
                              2 * (sys.n - sys.k))
    freqs = []
    resonances = []
    if classification == CRITICALLY_STABLE:
        freqs = frequencies(spectrum, tol['classify_tol'], tol['zero_tol'])
        resonances = resonance_scan(freqs, r_max, tol['resonance_tol'])

    point = critical.point_from_q(sys, q_c, tol['rank_threshold'])
    if point.index is None:
        logging.warning("the point %s is not generic; its index is undefined", list(q_c))
    report = StabilityReport(mechsys.PhasePoint(q_c, numpy.zeros(sys.n)), matrix, spectrum,
                             classification, freqs, resonances, point.index, r_max,
                             linearization)
    logging.info("q=%s: %s, frequencies %s", list(q_c), classification,
                 ", ".join("%.6g" % w for w in freqs) or "none")
    return report


class StabilityWorker(object):
    def __init__(self, sys, points, r_max=3, tolerances=None):
        self.sys = sys
        self.points = [numpy.asarray(q, dtype=float) for q in points]
        self.r_max = r_max
        self.tolerances = tolerances

    def iterate_work_items(self):
        return iter(self.points)

    def do_work(self, q_c):
        return stability_report(self.sys, q_c, self.r_max, self.tolerances)


def stability_reports(sys, points, r_max=3, tolerances=None, dispatcher=None, observer=None):
    """stability_report for every point, in order"""
    dispatcher = dispatcher or Dispatcher()
    return dispatcher.run_all(StabilityWorker(sys, points, r_max, tolerances),
                              observer or Observer())
