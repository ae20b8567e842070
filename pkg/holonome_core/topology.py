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

"""Morse-Bott bookkeeping for the components of the critical manifold.

Given the Betti numbers and index of every component and the Betti numbers
of the configuration manifold M, check

    sum_i lambda^mu_i P_i(lambda) - P_M(lambda) = (1 + lambda) Q(lambda)

for some Q with non-negative integer coefficients, together with the Morse
inequalities and the Euler characteristic identity it implies. Betti
numbers are inputs; nothing here computes homology. All arithmetic is on
Python integers.

"""

import json
import logging
from collections import OrderedDict

from . import settingsDefinition
from .settingsValidators import ValidationException, make_configDictValidator


class PolyZ(object):
    """A polynomial with integer coefficients, lowest degree first. Trailing
    zeros are dropped, so the zero polynomial has no coefficients.
    """
    __slots__ = ['coeffs']

    def __init__(self, coeffs=()):
        coeffs = [int(c) for c in coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    @classmethod
    def monomial(cls, degree, coeff=1):
        return cls([0] * degree + [coeff])

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, int):
            other = PolyZ([other])
        return isinstance(other, PolyZ) and self.coeffs == other.coeffs

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.coeffs)

    def __getitem__(self, p):
        return self.coeffs[p] if 0 <= p < len(self.coeffs) else 0

    def __add__(self, other):
        size = max(len(self.coeffs), len(other.coeffs))
        return PolyZ([self[i] + other[i] for i in range(size)])

    def __neg__(self):
        return PolyZ([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return PolyZ([c * other for c in self.coeffs])
        out = [0] * max(0, len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolyZ(out)

    __rmul__ = __mul__

    def __call__(self, x):
        value = 0
        for c in reversed(self.coeffs):
            value = value * x + c
        return value

    def divide_by_one_plus(self):
        """(quotient, remainder) of the division by (1 + lambda), by
        synthetic division at the root -1
        """
        c = self.coeffs
        if len(c) <= 1:
            return PolyZ(), (c[0] if c else 0)
        q = [0] * (len(c) - 1)
        q[-1] = c[-1]
        for i in range(len(c) - 2, 0, -1):
            q[i - 1] = c[i] - q[i]
        return PolyZ(q), c[0] - q[0]

    def __repr__(self):
        return "PolyZ(%r)" % (list(self.coeffs),)

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for p, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if p == 0 else ("L" if p == 1 else "L^%d" % p)
            if mono and abs(c) == 1:
                coeff = "-" if c < 0 else ""
            else:
                coeff = str(c) + ("*" if mono else "")
            terms.append(coeff + mono)
        return " + ".join(terms).replace("+ -", "- ")


class ComponentTopology(object):
    __slots__ = ['label', 'betti', 'index']

    def __init__(self, label, betti, index):
        if index < 0:
            raise ValidationException("component %s: index must be non-negative" % label)
        if any(b < 0 for b in betti):
            raise ValidationException("component %s: Betti numbers must be non-negative"
                                      % label)
        self.label = label
        self.betti = [int(b) for b in betti]
        self.index = int(index)

    @property
    def poincare(self):
        return PolyZ(self.betti)

    @property
    def euler(self):
        return sum((-1) ** p * b for p, b in enumerate(self.betti))

    def __repr__(self):
        return "ComponentTopology(%r, %r, %d)" % (self.label, self.betti, self.index)


class Violation(object):
    """Why the identity fails: a non-zero remainder after dividing by
    (1 + lambda), or a quotient with negative coefficients.
    """
    __slots__ = ['reason', 'difference', 'quotient', 'remainder']

    def __init__(self, reason, difference, quotient, remainder):
        self.reason = reason
        self.difference = difference
        self.quotient = quotient
        self.remainder = remainder

    def as_dict(self):
        return OrderedDict([("reason", self.reason),
                            ("difference", list(self.difference.coeffs)),
                            ("quotient", list(self.quotient.coeffs)),
                            ("remainder", self.remainder)])

    def __repr__(self):
        return "<Violation: %s>" % self.reason


def shifted_sum(components):
    total = PolyZ()
    for c in components:
        total = total + PolyZ.monomial(c.index) * c.poincare
    return total


def q_polynomial(components, ambient_betti):
    """Q with shifted_sum - P_M = (1 + lambda) Q, or a Violation"""
    difference = shifted_sum(components) - PolyZ(ambient_betti)
    quotient, remainder = difference.divide_by_one_plus()
    if remainder != 0:
        return Violation("division by (1 + L) leaves remainder %d" % remainder,
                         difference, quotient, remainder)
    negative = [p for p, c in enumerate(quotient.coeffs) if c < 0]
    if negative:
        return Violation("Q = %s has negative coefficients at degree %s"
                         % (quotient, ", ".join(str(p) for p in negative)),
                         difference, quotient, remainder)
    return quotient


def morse_inequalities(components, ambient_betti):
    """[sum_i b_{p - mu_i}(C_i) >= b_p(M) for p = 0, 1, ...]"""
    lhs = shifted_sum(components)
    top = max(lhs.degree, len(ambient_betti) - 1)
    return [lhs[p] >= (ambient_betti[p] if p < len(ambient_betti) else 0)
            for p in range(top + 1)]


def euler_check(components, ambient_betti):
    """(holds, sum_i (-1)^mu_i chi(C_i), chi(M))"""
    lhs = sum((-1) ** c.index * c.euler for c in components)
    rhs = sum((-1) ** p * b for p, b in enumerate(ambient_betti))
    return lhs == rhs, lhs, rhs


def load_report(path):
    """(components, ambient_betti) from a topology JSON file"""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise ValidationException("Cannot read the topology report %s: %s" % (path, e))
    return parse_report(data)


def parse_report(data):
    if not isinstance(data, dict) or not all(isinstance(c, dict)
                                             for c in data.get("components", [])):
        raise ValidationException("A topology report is an object with 'ambient_betti' and "
                                  "a list of 'components' objects.")
    validated = make_configDictValidator(settingsDefinition.get_topology_definition(),
                                         where="topology")(data)
    components = [ComponentTopology(c["label"], c["betti"], c["index"])
                  for c in validated["components"]]
    return components, validated["ambient_betti"]


def verdict(components, ambient_betti):
    """The verdict document: Q or the violation, the Morse inequalities and
    the Euler check.
    """
    q = q_polynomial(components, ambient_betti)
    holds = isinstance(q, PolyZ)
    inequalities = morse_inequalities(components, ambient_betti)
    euler_ok, euler_lhs, euler_rhs = euler_check(components, ambient_betti)
    if holds:
        logging.info("identity holds, Q = %s", q)
    else:
        logging.warning("identity violated: %s", q.reason)

    out = OrderedDict()
    out["identity_holds"] = holds
    out["verdict"] = ("identity holds, Q = %s" % q) if holds else ("violation: %s" % q.reason)
    out["Q"] = list(q.coeffs) if holds else None
    out["violation"] = None if holds else q.as_dict()
    out["shifted_sum"] = list(shifted_sum(components).coeffs)
    out["ambient"] = list(PolyZ(ambient_betti).coeffs)
    out["morse_inequalities"] = inequalities
    out["euler"] = OrderedDict([("holds", euler_ok), ("components", euler_lhs),
                                ("ambient", euler_rhs)])
    return out
