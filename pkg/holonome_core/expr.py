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

"""Scalar-field expressions.

Metric entries, potentials and constraint coefficients are written in model
files as small infix formulas such as ``c1*(1-cos(x1))``. This module parses
them into an immutable tree and evaluates that tree on plain floats or on
DualValue numbers, which gives exact first and second derivatives.

Grammar, loosest binding first::

    expression := term (('+' | '-') term)*
    term       := unary (('*' | '/') unary)*
    unary      := ('-' | '+') unary | power
    power      := atom ('^' unary)?          right associative
    atom       := number | name | name '(' expression ')' | '(' expression ')'

``**`` is accepted as a synonym for ``^``. ``pi`` is a built-in constant.

"""

import itertools
import math
import re

import numpy

from .errors import ConfigError, NumericError

FUNCTION_NAMES = ('sin', 'cos', 'tan', 'exp', 'log', 'sqrt', 'abs')
CONSTANTS = {'pi': math.pi}


class ExpressionSyntaxError(ConfigError):
    def __init__(self, message, offset, text=None):
        super(ExpressionSyntaxError, self).__init__("%s at offset %d" % (message, offset))
        self.offset = offset
        self.text = text


class UnknownIdentifier(ConfigError):
    def __init__(self, name):
        super(UnknownIdentifier, self).__init__("unknown identifier %r" % name)
        self.name = name


class DomainError(NumericError):
    pass


##############################################################################
# Dual numbers

# Every differentiation pass draws a fresh tag. A DualValue only mixes its
# partials with another DualValue of the same tag; anything with a lower tag
# is a constant as far as it is concerned. That keeps nested passes (second
# derivatives, brackets of brackets) from confusing their perturbations.
_tags = itertools.count(1)


def new_tag():
    return next(_tags)


class DualValue(object):
    """A number carrying first order partials with respect to one set of
    seeded variables.

    value may itself be a DualValue of a lower tag, which is how second
    derivatives are taken.

    """
    __slots__ = ['value', 'partials', 'tag']

    # keep numpy from broadcasting over us; arrays of DualValue are fine
    __array_ufunc__ = None

    def __init__(self, value, partials, tag=0):
        self.value = value
        self.partials = partials
        self.tag = tag

    @classmethod
    def seed(cls, point, tag=None):
        """Return one DualValue per entry of point, each with a unit partial
        in its own slot.

        """
        if tag is None:
            tag = new_tag()
        n = len(point)
        eye = numpy.eye(n)
        return [cls(point[i], eye[i].copy(), tag) for i in range(n)]

    def __repr__(self):
        return "DualValue(%r, %r, tag=%d)" % (self.value, self.partials, self.tag)

    def _outranked_by(self, other):
        return isinstance(other, DualValue) and other.tag > self.tag

    def _same(self, other):
        return isinstance(other, DualValue) and other.tag == self.tag

    def __add__(self, other):
        if isinstance(other, numpy.ndarray):
            return NotImplemented
        if self._outranked_by(other):
            return other.__radd__(self)
        if self._same(other):
            return DualValue(self.value + other.value, self.partials + other.partials, self.tag)
        return DualValue(self.value + other, self.partials, self.tag)

    def __radd__(self, other):
        return DualValue(other + self.value, self.partials, self.tag)

    def __sub__(self, other):
        if isinstance(other, numpy.ndarray):
            return NotImplemented
        if self._outranked_by(other):
            return other.__rsub__(self)
        if self._same(other):
            return DualValue(self.value - other.value, self.partials - other.partials, self.tag)
        return DualValue(self.value - other, self.partials, self.tag)

    def __rsub__(self, other):
        return DualValue(other - self.value, -self.partials, self.tag)

    def __mul__(self, other):
        if isinstance(other, numpy.ndarray):
            return NotImplemented
        if self._outranked_by(other):
            return other.__rmul__(self)
        if self._same(other):
            return DualValue(self.value * other.value,
                             _scale(self.partials, other.value) +
                             _scale(other.partials, self.value), self.tag)
        return DualValue(self.value * other, _scale(self.partials, other), self.tag)

    def __rmul__(self, other):
        return DualValue(other * self.value, _scale(self.partials, other), self.tag)

    def __truediv__(self, other):
        if isinstance(other, numpy.ndarray):
            return NotImplemented
        if self._outranked_by(other):
            return other.__rtruediv__(self)
        if self._same(other):
            _check_divisor(other.value)
            quotient = self.value / other.value
            return DualValue(quotient,
                             _scale(self.partials - _scale(other.partials, quotient),
                                    1.0 / other.value), self.tag)
        _check_divisor(other)
        return DualValue(self.value / other, _scale(self.partials, 1.0 / other), self.tag)

    def __rtruediv__(self, other):
        _check_divisor(self.value)
        quotient = other / self.value
        return DualValue(quotient, _scale(self.partials, -quotient / self.value), self.tag)

    def __neg__(self):
        return DualValue(-self.value, -self.partials, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)


def _scale(partials, factor):
    """partials * factor, where factor may be a lower-tag DualValue"""
    if isinstance(factor, DualValue):
        out = numpy.empty(len(partials), dtype=object)
        for i, p in enumerate(partials):
            out[i] = factor * p
        return out
    return partials * factor


def real_part(x):
    """Strip every level of dual perturbation and return the plain float"""
    while isinstance(x, DualValue):
        x = x.value
    return float(x)


def partials_of(x, tag, n):
    """The partials of x with respect to the variables seeded under tag, as a
    length-n array (zeros when x does not depend on them).

    """
    if isinstance(x, DualValue):
        if x.tag == tag:
            return x.partials
        if x.tag > tag:
            # a higher pass wraps us; its value carries our perturbation
            return partials_of(x.value, tag, n)
    return numpy.zeros(n)


def value_of(x, tag):
    """x with the perturbation of the given tag removed"""
    if isinstance(x, DualValue):
        if x.tag == tag:
            return x.value
        if x.tag > tag:
            return DualValue(value_of(x.value, tag), x.partials, x.tag)
    return x


def _check_divisor(d):
    if real_part(d) == 0.0:
        raise DomainError("division by zero")


##############################################################################
# Elementary functions accepting floats or DualValues

def sin(x):
    if isinstance(x, DualValue):
        return DualValue(sin(x.value), _scale(x.partials, cos(x.value)), x.tag)
    return math.sin(x)


def cos(x):
    if isinstance(x, DualValue):
        return DualValue(cos(x.value), _scale(x.partials, -sin(x.value)), x.tag)
    return math.cos(x)


def tan(x):
    if isinstance(x, DualValue):
        c = cos(x.value)
        return DualValue(tan(x.value), _scale(x.partials, 1.0 / (c * c)), x.tag)
    if math.cos(x) == 0.0:
        raise DomainError("tan is undefined at %r" % x)
    return math.tan(x)


def exp(x):
    if isinstance(x, DualValue):
        e = exp(x.value)
        return DualValue(e, _scale(x.partials, e), x.tag)
    try:
        return math.exp(x)
    except OverflowError:
        raise DomainError("exp overflows at %r" % x)


def log(x):
    if real_part(x) <= 0.0:
        raise DomainError("log of non-positive value %r" % real_part(x))
    if isinstance(x, DualValue):
        return DualValue(log(x.value), _scale(x.partials, 1.0 / x.value), x.tag)
    return math.log(x)


def sqrt(x):
    r = real_part(x)
    if r < 0.0:
        raise DomainError("sqrt of negative value %r" % r)
    if isinstance(x, DualValue):
        if r == 0.0:
            raise DomainError("sqrt is not differentiable at 0")
        s = sqrt(x.value)
        return DualValue(s, _scale(x.partials, 0.5 / s), x.tag)
    return math.sqrt(x)


def fabs(x):
    if isinstance(x, DualValue):
        if real_part(x) < 0.0:
            return -x
        return x
    return abs(x)


def power(base, exponent):
    if isinstance(exponent, DualValue):
        # general case through exp(y log x)
        if isinstance(base, DualValue) or real_part(base) > 0.0:
            return exp(exponent * log(base))
        raise DomainError("non-positive base %r with a variable exponent" % real_part(base))
    if isinstance(base, DualValue):
        c = float(exponent)
        if c == 0.0:
            return 1.0
        if real_part(base) == 0.0 and c < 1.0:
            raise DomainError("0 raised to %r is not differentiable" % c)
        return DualValue(power(base.value, c),
                         _scale(base.partials, c * power(base.value, c - 1.0)), base.tag)
    base = float(base)
    exponent = float(exponent)
    if base < 0.0 and not exponent.is_integer():
        raise DomainError("negative base %r with non-integer exponent %r" % (base, exponent))
    if base == 0.0 and exponent < 0.0:
        raise DomainError("division by zero")
    try:
        return math.pow(base, exponent)
    except OverflowError:
        raise DomainError("%r ^ %r overflows" % (base, exponent))


FUNCTIONS = {
    'sin': sin,
    'cos': cos,
    'tan': tan,
    'exp': exp,
    'log': log,
    'sqrt': sqrt,
    'abs': fabs,
}


##############################################################################
# Tree

class Node(object):
    """Base of the expression tree. Nodes are immutable and compare
    structurally.

    """
    __slots__ = []
    _fields = ()

    def __eq__(self, other):
        return type(self) is type(other) and all(
            getattr(self, f) == getattr(other, f) for f in self._fields)

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((type(self).__name__,) + tuple(getattr(self, f) for f in self._fields))

    def __repr__(self):
        return "%s(%s)" % (type(self).__name__,
                           ", ".join(repr(getattr(self, f)) for f in self._fields))

    def __setattr__(self, name, value):
        if hasattr(self, name):
            raise AttributeError("expression nodes are immutable")
        object.__setattr__(self, name, value)


class Num(Node):
    __slots__ = ['value']
    _fields = ('value',)

    def __init__(self, value):
        object.__setattr__(self, 'value', float(value))

    def evaluate(self, q, params):
        return self.value

    def __str__(self):
        return repr(self.value)


class Var(Node):
    """A coordinate, bound to a slot of the coordinate vector"""
    __slots__ = ['name', 'index']
    _fields = ('name', 'index')

    def __init__(self, name, index):
        object.__setattr__(self, 'name', name)
        object.__setattr__(self, 'index', index)

    def evaluate(self, q, params):
        return q[self.index]

    def __str__(self):
        return self.name


class Param(Node):
    __slots__ = ['name']
    _fields = ('name',)

    def __init__(self, name):
        object.__setattr__(self, 'name', name)

    def evaluate(self, q, params):
        try:
            return params[self.name]
        except KeyError:
            raise UnknownIdentifier(self.name)

    def __str__(self):
        return self.name


class Neg(Node):
    __slots__ = ['operand']
    _fields = ('operand',)

    def __init__(self, operand):
        object.__setattr__(self, 'operand', operand)

    def evaluate(self, q, params):
        return -self.operand.evaluate(q, params)

    def __str__(self):
        return "(-%s)" % self.operand


class BinOp(Node):
    __slots__ = ['op', 'left', 'right']
    _fields = ('op', 'left', 'right')

    def __init__(self, op, left, right):
        object.__setattr__(self, 'op', op)
        object.__setattr__(self, 'left', left)
        object.__setattr__(self, 'right', right)

    def evaluate(self, q, params):
        a = self.left.evaluate(q, params)
        b = self.right.evaluate(q, params)
        op = self.op
        if op == '+':
            return a + b
        if op == '-':
            return a - b
        if op == '*':
            return a * b
        if op == '/':
            if not isinstance(a, DualValue) and not isinstance(b, DualValue):
                _check_divisor(b)
            return a / b
        return power(a, b)

    def __str__(self):
        return "(%s %s %s)" % (self.left, self.op, self.right)


class Call(Node):
    __slots__ = ['func', 'arg']
    _fields = ('func', 'arg')

    def __init__(self, func, arg):
        object.__setattr__(self, 'func', func)
        object.__setattr__(self, 'arg', arg)

    def evaluate(self, q, params):
        return FUNCTIONS[self.func](self.arg.evaluate(q, params))

    def __str__(self):
        return "%s(%s)" % (self.func, self.arg)


##############################################################################
# Parser

_token_pat = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
""", re.VERBOSE)

# left binding powers
_BINARY_LBP = {'+': 10, '-': 10, '*': 20, '/': 20, '^': 30}
_UNARY_BP = 25


class _Token(object):
    __slots__ = ['kind', 'text', 'offset']

    def __init__(self, kind, text, offset):
        self.kind = kind
        self.text = text
        self.offset = offset

    @property
    def lbp(self):
        if self.kind == 'op':
            return _BINARY_LBP.get(self.text, 0)
        return 0


def tokenize(text):
    pos = 0
    while pos < len(text):
        m = _token_pat.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError("unexpected character %r" % text[pos], pos, text)
        kind = m.lastgroup
        if kind != 'space':
            tok = m.group(kind)
            if tok == '**':
                tok = '^'
            yield _Token(kind, tok, pos)
        pos = m.end()
    yield _Token('end', '', len(text))


class _Parser(object):
    """Pratt parser over the token stream. nud handles a token in prefix
    position, led a token in infix position.

    """
    def __init__(self, text, coords, params):
        self.text = text
        self.coords = dict((name, i) for i, name in enumerate(coords))
        self.params = set(params)
        self._tokens = tokenize(text)
        self.token = next(self._tokens)

    def advance(self):
        t = self.token
        self.token = next(self._tokens)
        return t

    def error(self, message, token=None):
        token = token or self.token
        return ExpressionSyntaxError(message, token.offset, self.text)

    def expect(self, text):
        if self.token.kind != 'op' or self.token.text != text:
            if self.token.kind == 'end':
                raise self.error("expected %r before end of input" % text)
            raise self.error("expected %r, found %r" % (text, self.token.text))
        return self.advance()

    def expression(self, rbp=0):
        left = self.nud(self.advance())
        while rbp < self.token.lbp:
            left = self.led(self.advance(), left)
        return left

    def nud(self, t):
        if t.kind == 'number':
            return Num(float(t.text))
        if t.kind == 'name':
            if t.text in FUNCTION_NAMES:
                if not (self.token.kind == 'op' and self.token.text == '('):
                    raise self.error("function %r needs a parenthesized argument" % t.text,
                                     self.token)
                self.advance()
                arg = self.expression()
                self.expect(')')
                return Call(t.text, arg)
            return self.resolve(t)
        if t.kind == 'op':
            if t.text == '(':
                inner = self.expression()
                self.expect(')')
                return inner
            if t.text == '-':
                return Neg(self.expression(_UNARY_BP))
            if t.text == '+':
                return self.expression(_UNARY_BP)
            raise self.error("unexpected %r" % t.text, t)
        raise self.error("unexpected end of input", t)

    def led(self, t, left):
        if t.text == '^':
            # right associative: 2^3^2 is 2^(3^2)
            return BinOp('^', left, self.expression(_BINARY_LBP['^'] - 1))
        return BinOp(t.text, left, self.expression(_BINARY_LBP[t.text]))

    def resolve(self, t):
        name = t.text
        if name in self.coords:
            return Var(name, self.coords[name])
        if name in self.params:
            return Param(name)
        if name in CONSTANTS:
            return Num(CONSTANTS[name])
        raise UnknownIdentifier(name)

    def parse(self):
        if self.token.kind == 'end':
            raise self.error("empty expression")
        root = self.expression()
        if self.token.kind != 'end':
            raise self.error("unexpected %r" % self.token.text)
        return root


##############################################################################
# Public interface

class Expression(object):
    """A parsed scalar field on the coordinate chart.

    Expressions are immutable and evaluation keeps no state, so one instance
    may be evaluated from many threads at once.

    """
    def __init__(self, root, coords, params, text=None):
        self.root = root
        self.coords = tuple(coords)
        self.params = tuple(params)
        self.text = text if text is not None else str(root)

    def __str__(self):
        return str(self.root)

    def __repr__(self):
        return "Expression(%r)" % self.text

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.root)

    @property
    def n(self):
        return len(self.coords)

    def identifiers(self):
        """Names of the coordinates and parameters this expression reads"""
        found = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, (Var, Param)):
                found.add(node.name)
            for f in node._fields:
                child = getattr(node, f)
                if isinstance(child, Node):
                    stack.append(child)
        return found

    def raw(self, q, params):
        """Evaluate on whatever q holds (floats or DualValues), no checks"""
        return self.root.evaluate(q, params)

    def eval(self, q, params):
        return evaluate(self, q, params)


def parse(text, coords, params):
    """Parse text into an Expression over the given coordinate and
    parameter names.

    Raises ExpressionSyntaxError (with the byte offset) or UnknownIdentifier.

    """
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0, text)
    root = _Parser(text, coords, params).parse()
    return Expression(root, coords, params, text)


def _finite(x, e):
    if not math.isfinite(x):
        raise DomainError("%s evaluated to %r" % (e.text, x))
    return x


def evaluate(e, q, params):
    """Value of e at q as a float"""
    try:
        value = e.root.evaluate(q, params)
    except ZeroDivisionError:
        raise DomainError("division by zero in %s" % e.text)
    except OverflowError:
        raise DomainError("overflow in %s" % e.text)
    return _finite(float(value), e)


def value_and_grad(e, q, params):
    n = len(q)
    tag = new_tag()
    result = e.root.evaluate(DualValue.seed(q, tag), params)
    value = _finite(real_part(result), e)
    g = numpy.array(partials_of(result, tag, n), dtype=float)
    if not numpy.all(numpy.isfinite(g)):
        raise DomainError("gradient of %s is not finite" % e.text)
    return value, g


def grad(e, q, params):
    """Exact gradient of e at q by one forward dual pass"""
    return value_and_grad(e, q, params)[1]


def hessian(e, q, params):
    """Exact Hessian of e at q by two nested dual passes, symmetrized"""
    return value_grad_hessian(e, q, params)[2]


def value_grad_hessian(e, q, params):
    n = len(q)
    inner = new_tag()
    outer = new_tag()
    eye = numpy.eye(n)
    point = [DualValue(DualValue(q[i], eye[i].copy(), inner), eye[i].copy(), outer)
             for i in range(n)]
    result = e.root.evaluate(point, params)

    value = _finite(real_part(result), e)
    g = numpy.array([real_part(x) for x in partials_of(result, outer, n)], dtype=float)
    h = numpy.zeros((n, n))
    for j, dj in enumerate(partials_of(result, outer, n)):
        h[j, :] = [real_part(x) for x in partials_of(dj, inner, n)]
    h = 0.5 * (h + h.T)
    if not (numpy.all(numpy.isfinite(g)) and numpy.all(numpy.isfinite(h))):
        raise DomainError("derivatives of %s are not finite" % e.text)
    return value, g, h
