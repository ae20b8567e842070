import math
import random
import unittest

import numpy

from holonome_core import expr

U_TEXT = "c1*(1-cos(x1)) + c2*(1-cos(x2)) + cphi*(1-cos(phi))"
COORDS = ["x1", "x2", "phi"]
PARAMS = {"c1": 1.0, "c2": 1.0, "cphi": 2.0}


def random_expression(rng, coords, depth):
    """Text of a random smooth expression built from polynomials and trig"""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.6:
            return rng.choice(coords)
        return "%.3f" % rng.uniform(-2.0, 2.0)
    kind = rng.choice(["+", "-", "*", "call", "pow"])
    if kind == "call":
        func = rng.choice(["sin", "cos"])
        return "%s(%s)" % (func, random_expression(rng, coords, depth - 1))
    if kind == "pow":
        return "(%s)^2" % random_expression(rng, coords, depth - 1)
    return "(%s %s %s)" % (random_expression(rng, coords, depth - 1), kind,
                           random_expression(rng, coords, depth - 1))


def fd_gradient(e, q, params, h=1e-5):
    q = numpy.asarray(q, dtype=float)
    out = numpy.empty(len(q))
    for k in range(len(q)):
        step = numpy.zeros(len(q))
        step[k] = h
        out[k] = (expr.evaluate(e, q + step, params) -
                  expr.evaluate(e, q - step, params)) / (2 * h)
    return out


class ParseTest(unittest.TestCase):

    def test_potential(self):
        e = expr.parse(U_TEXT, COORDS, list(PARAMS))
        self.assertEqual(e.identifiers(), {"c1", "c2", "cphi", "x1", "x2", "phi"})
        self.assertEqual(e.n, 3)

    def test_single_variable(self):
        e = expr.parse("x1", COORDS, [])
        self.assertIsInstance(e.root, expr.Var)
        self.assertEqual(e.root.index, 0)

    def test_unbalanced(self):
        with self.assertRaises(expr.ExpressionSyntaxError) as cm:
            expr.parse("sin(phi", COORDS, [])
        self.assertEqual(cm.exception.offset, 7)

    def test_empty(self):
        self.assertRaises(expr.ExpressionSyntaxError, expr.parse, "  ", COORDS, [])

    def test_bad_character(self):
        with self.assertRaises(expr.ExpressionSyntaxError) as cm:
            expr.parse("x1 $ 2", COORDS, [])
        self.assertEqual(cm.exception.offset, 3)

    def test_unknown_identifier(self):
        with self.assertRaises(expr.UnknownIdentifier) as cm:
            expr.parse("x1 + y", COORDS, [])
        self.assertEqual(cm.exception.name, "y")

    def test_function_needs_argument(self):
        self.assertRaises(expr.ExpressionSyntaxError, expr.parse, "sin x1", COORDS, [])

    def test_print_reparse(self):
        rng = random.Random(7)
        for _ in range(50):
            text = random_expression(rng, COORDS, 5)
            e = expr.parse(text, COORDS, [])
            again = expr.parse(str(e), COORDS, [])
            self.assertEqual(e, again, text)
            self.assertEqual(expr.parse(str(again), COORDS, []), again)

    def test_immutable(self):
        e = expr.parse("x1 + 1", COORDS, [])
        with self.assertRaises(AttributeError):
            e.root.op = "-"


class EvalTest(unittest.TestCase):

    def setUp(self):
        self.u = expr.parse(U_TEXT, COORDS, list(PARAMS))

    def test_origin(self):
        self.assertEqual(expr.evaluate(self.u, [0, 0, 0], PARAMS), 0.0)

    def test_power(self):
        self.assertEqual(expr.evaluate(expr.parse("2^3", [], []), [], {}), 8.0)
        self.assertEqual(expr.evaluate(expr.parse("2**3", [], []), [], {}), 8.0)

    def test_right_associative(self):
        self.assertEqual(expr.evaluate(expr.parse("2^3^2", [], []), [], {}), 512.0)

    def test_unary_minus_binds_looser_than_power(self):
        self.assertEqual(expr.evaluate(expr.parse("-2^2", [], []), [], {}), -4.0)

    def test_precedence(self):
        self.assertEqual(expr.evaluate(expr.parse("1 + 2*3 - 4/2", [], []), [], {}), 5.0)

    def test_potential_value(self):
        self.assertAlmostEqual(expr.evaluate(self.u, [math.pi, 0, math.pi], PARAMS), 6.0)

    def test_constant_pi(self):
        self.assertEqual(expr.evaluate(expr.parse("pi", [], []), [], {}), math.pi)

    def test_domain_errors(self):
        for text in ("log(x1)", "sqrt(x1 - 1)", "1/x1", "log(-1)"):
            e = expr.parse(text, COORDS, [])
            self.assertRaises(expr.DomainError, expr.evaluate, e, [0.0, 0.0, 0.0], {})

    def test_missing_parameter(self):
        e = expr.parse("k*x1", COORDS, ["k"])
        self.assertRaises(expr.UnknownIdentifier, expr.evaluate, e, [1.0, 0.0, 0.0], {})


class DerivativeTest(unittest.TestCase):

    def setUp(self):
        self.u = expr.parse(U_TEXT, COORDS, list(PARAMS))

    def test_grad_examples(self):
        e = expr.parse("1-cos(x1)", ["x1"], [])
        numpy.testing.assert_allclose(expr.grad(e, [0.0], {}), [0.0], atol=1e-15)
        numpy.testing.assert_allclose(expr.grad(e, [math.pi / 2], {}), [1.0])
        numpy.testing.assert_allclose(expr.grad(self.u, [math.pi, math.pi / 2, 0.0], PARAMS),
                                      [0.0, 1.0, 0.0], atol=1e-15)

    def test_hessian_examples(self):
        e = expr.parse("1-cos(x1)", COORDS, [])
        h = expr.hessian(e, [0.0, 0.0, 0.0], {})
        self.assertEqual(h[0, 0], 1.0)
        lin = expr.parse("2*x1 - 3*x2 + phi", COORDS, [])
        numpy.testing.assert_array_equal(expr.hessian(lin, [0.3, 0.1, 2.0], {}),
                                         numpy.zeros((3, 3)))
        numpy.testing.assert_allclose(expr.hessian(self.u, [math.pi] * 3, PARAMS),
                                      numpy.diag([-1.0, -1.0, -2.0]), atol=1e-15)

    def test_leibniz(self):
        e = expr.parse("(x1^2 + sin(x2)) * exp(phi)", COORDS, [])
        q = [0.7, -0.4, 0.2]
        expected = [2 * q[0] * math.exp(q[2]), math.cos(q[1]) * math.exp(q[2]),
                    (q[0] ** 2 + math.sin(q[1])) * math.exp(q[2])]
        numpy.testing.assert_allclose(expr.grad(e, q, {}), expected, rtol=1e-15)

    def test_against_finite_differences(self):
        rng = random.Random(1234)
        nprng = numpy.random.default_rng(1234)
        for _ in range(200):
            text = random_expression(rng, COORDS, 6)
            e = expr.parse(text, COORDS, [])
            q = nprng.uniform(-1.0, 1.0, 3)
            g = expr.grad(e, q, {})
            numpy.testing.assert_allclose(g, fd_gradient(e, q, {}), rtol=1e-5,
                                          atol=1e-5 * (1 + numpy.max(numpy.abs(g))),
                                          err_msg=text)
            h = expr.hessian(e, q, {})
            fd_h = numpy.empty((3, 3))
            for k in range(3):
                step = numpy.zeros(3)
                step[k] = 1e-5
                fd_h[:, k] = (expr.grad(e, q + step, {}) - expr.grad(e, q - step, {})) / 2e-5
            numpy.testing.assert_allclose(h, fd_h, rtol=1e-5,
                                          atol=1e-5 * (1 + numpy.max(numpy.abs(h))),
                                          err_msg=text)

    def test_hessian_symmetric(self):
        e = expr.parse("sin(x1*x2) * cos(phi*x1) + x2^3*phi", COORDS, [])
        h = expr.hessian(e, [0.3, 1.1, -0.8], {})
        numpy.testing.assert_array_equal(h, h.T)

    def test_nested_duals_do_not_mix(self):
        # d/dx (x * d/dy (x*y)) = 2x
        outer = expr.new_tag()
        inner = expr.new_tag()
        x = expr.DualValue(2.0, numpy.array([1.0]), outer)
        y = expr.DualValue(3.0, numpy.array([1.0]), inner)
        dy = expr.partials_of(x * y, inner, 1)[0]
        result = x * dy
        self.assertEqual(expr.real_part(result), 4.0)
        self.assertEqual(expr.partials_of(result, outer, 1)[0], 4.0)

    def test_overflow_is_an_error(self):
        e = expr.parse("exp(x1)", ["x1"], [])
        self.assertRaises(expr.DomainError, expr.evaluate, e, [1e6], {})


if __name__ == "__main__":
    unittest.main()
