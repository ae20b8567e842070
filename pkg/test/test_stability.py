import json
import math
import unittest

import numpy
from scipy import integrate

from holonome_core import files, mechsys, stability
from holonome_core.errors import OffManifoldError

SKATE = "test/data/models/disc_skate.cfg"
FLAT_TORUS = "test/data/models/flat_torus.cfg"
OSCILLATOR = "test/data/models/harmonic_oscillator.cfg"
SADDLE = "test/data/models/saddle_plane.cfg"
COUPLED_SKATE = "test/data/models/coupled_skate.cfg"

SQRT2 = math.sqrt(2.0)


def coupled_skate_point(x2, phi, branch=0, a=0.5, c1=1.0):
    """The point of C_Q over (x2, phi) on one of the two x1 branches"""
    x1 = math.atan(-a * math.sin(x2) / c1) + branch * math.pi
    return numpy.array([x1, x2, phi])


def equilibria():
    """(model, q) pairs on C_Q"""
    cases = []
    for a in (0.0, math.pi):
        for b in (0.0, math.pi):
            for x2 in (0.4, 5.0):
                cases.append((SKATE, [a, x2, b]))
    for phi in (0.0, math.pi):
        for branch in (0, 1):
            for x2 in (0.3, 1.1, 2.0, 4.0):
                cases.append((COUPLED_SKATE, list(coupled_skate_point(x2, phi, branch))))
    for x in (-1.0, 0.3, 2.0):
        cases.append((SADDLE, [x, 0.0]))
    cases += [(FLAT_TORUS, [0.0, 0.0]), (FLAT_TORUS, [math.pi, 2.0]),
              (OSCILLATOR, [0.0, 0.0])]
    return cases


class LinearizationTest(unittest.TestCase):

    def test_analytic_matches_finite_differences(self):
        cases = equilibria()
        self.assertGreaterEqual(len(cases), 20)
        self.assertGreaterEqual(len(set(path for path, _ in cases)), 3)
        for path, q in cases:
            sys = mechsys.load_system_file(path)
            q = numpy.array(q)
            analytic = stability.analytic_linearization(sys, q)
            numeric = stability.numeric_linearization(sys, q).dot(
                stability.motion_projector(sys, q))
            numpy.testing.assert_allclose(analytic, numeric, atol=1e-5, err_msg=path)
            numpy.testing.assert_array_equal(stability.linearize_extension(sys, q), analytic)

    def test_full_jacobian_where_gradient_crosses_constraint(self):
        sys = mechsys.load_system_file(SADDLE)
        q = [0.3, 0.0]
        numeric = stability.numeric_linearization(sys, numpy.array(q))
        # dU = (y, x) leans on the constrained direction y
        numpy.testing.assert_allclose(numeric[2:, :2], [[0, -1], [0, 0]], atol=1e-6)
        m = stability.linearize_extension(sys, q)
        numpy.testing.assert_allclose(m[2:, :2], numpy.zeros((2, 2)), atol=1e-12)
        numpy.testing.assert_allclose(m[:2, 2:], [[1, 0], [0, 0]], atol=1e-12)

    def test_coupled_skate_uses_analytic_matrix(self):
        sys = mechsys.load_system_file(COUPLED_SKATE)
        q = coupled_skate_point(1.1, 0.0)
        numeric = stability.numeric_linearization(sys, q)
        # the x2 column of the lower block is the constrained direction here
        self.assertGreater(abs(numeric[3, 1]), 0.1)
        m = stability.linearize_extension(sys, q)
        # R couples x1 to phi through the rotating constraint
        self.assertGreater(abs(m[3, 2]), 0.1)
        report = stability.stability_report(sys, q)
        self.assertEqual(report.linearization["source"], "analytic")

    def test_skate_blocks(self):
        sys = mechsys.load_system_file(SKATE)
        m = stability.linearize_extension(sys, [math.pi, 1.3, math.pi])
        numpy.testing.assert_allclose(m[:3, 3:], numpy.diag([1.0, 0.0, 1.0]), atol=1e-12)
        numpy.testing.assert_array_equal(m[:3, :3], numpy.zeros((3, 3)))
        numpy.testing.assert_array_equal(m[3:, 3:], numpy.zeros((3, 3)))

    def test_oscillator(self):
        sys = mechsys.load_system_file(OSCILLATOR)
        m = stability.linearize_extension(sys, [0.0, 0.0])
        numpy.testing.assert_allclose(m, [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0],
                                          [0, -1, 0, 0]], atol=1e-12)

    def test_off_manifold(self):
        sys = mechsys.load_system_file(SKATE)
        with self.assertRaises(OffManifoldError) as cm:
            stability.linearize_extension(sys, [0.5, 0.0, 0.0])
        self.assertAlmostEqual(cm.exception.residual, math.sin(0.5))

    def test_mismatch(self):
        sys = mechsys.load_system_file(SKATE)
        with self.assertRaises(stability.LinearizationMismatch) as cm:
            stability.linearize_extension(sys, [0.0, 0.4, 0.0], tol=0.0)
        self.assertGreater(cm.exception.deviation, 0.0)
        self.assertEqual(cm.exception.numeric.shape, (6, 6))

    def test_generalized_hessian(self):
        sys = mechsys.load_system_file(SKATE)
        x = numpy.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        k = stability.generalized_hessian(sys, x)
        piv = mechsys.assemble(sys, x).piV
        numpy.testing.assert_allclose(piv.T.dot(k), k, atol=1e-6)


class ClassifyTest(unittest.TestCase):

    def test_critically_stable(self):
        spectrum = [0, 0, 1j, -1j, 1j * SQRT2, -1j * SQRT2]
        self.assertEqual(stability.classify(spectrum), stability.CRITICALLY_STABLE)
        self.assertEqual(stability.classify(spectrum, expected_zeros=2),
                         stability.CRITICALLY_STABLE)

    def test_unstable(self):
        self.assertEqual(stability.classify([0, 1, -1, 1j, -1j]), stability.UNSTABLE)

    def test_asymptotically_stable(self):
        self.assertEqual(stability.classify([-1, -2 + 1j, -2 - 1j]),
                         stability.ASYMPTOTICALLY_STABLE)

    def test_degenerate(self):
        self.assertEqual(stability.classify([0, 0]), stability.DEGENERATE)
        self.assertEqual(stability.classify([0, 0, 1j, -1j], expected_zeros=1),
                         stability.DEGENERATE)
        # a decaying mode next to an oscillating one
        self.assertEqual(stability.classify([-1, 1j, -1j]), stability.DEGENERATE)

    def test_relative_axis_tolerance(self):
        # |Re| <= tol * (1 + |z|)
        self.assertEqual(stability.classify([5e-6 + 1000j, 5e-6 - 1000j], tol=1e-8),
                         stability.CRITICALLY_STABLE)
        self.assertEqual(stability.classify([5e-6 + 1j, 5e-6 - 1j], tol=1e-8),
                         stability.UNSTABLE)

    def test_frequencies(self):
        self.assertEqual(stability.frequencies([0, 0, 1j, -1j, 1j * SQRT2, -1j * SQRT2]),
                         [1.0, SQRT2])
        self.assertEqual(stability.frequencies([2j, -2j, 2j, -2j]), [2.0, 2.0])
        self.assertEqual(stability.frequencies([0]), [])
        self.assertRaises(stability.NotCriticallyStableError, stability.frequencies,
                          [1.0, -1.0])


class SumsetTest(unittest.TestCase):

    def test_plus_minus_pair(self):
        self.assertEqual(stability.sumset_distance([1.0, -1.0], 1), 0.0)

    def test_irrational(self):
        d = stability.sumset_distance([1.0, -1.0, SQRT2, -SQRT2], 2)
        self.assertAlmostEqual(d, 2.0 - SQRT2, places=12)
        self.assertGreater(d, 0.5)

    def test_integer_ratio(self):
        self.assertEqual(stability.sumset_distance([1.0, -1.0, 2.0, -2.0], 2), 0.0)

    def test_against_brute_force(self):
        rng = numpy.random.default_rng(5)
        for _ in range(20):
            a = list(rng.uniform(-3, 3, 3))
            for r in (1, 2, 3):
                best = min(abs(sum(t) + b) for t in numpy.array(numpy.meshgrid(*[a] * r))
                           .reshape(r, -1).T for b in a)
                self.assertAlmostEqual(stability.sumset_distance(a, r), best, places=12)

    def test_empty(self):
        self.assertEqual(stability.sumset_distance([], 2), float('inf'))

    def test_errors(self):
        self.assertRaises(ValueError, stability.sumset_distance, [1.0], 0)
        self.assertRaises(stability.EnumerationCapError, stability.sumset_distance,
                          list(range(11)), 7)


class ResonanceScanTest(unittest.TestCase):

    def test_signed_frequencies(self):
        self.assertEqual(stability.signed_frequencies([1.0, 2.0]),
                         ([1, -1, 2, -2], [1.0, -1.0, 2.0, -2.0]))

    def test_irrational_ratio(self):
        findings = stability.resonance_scan([1.0, SQRT2], 5)
        for f in findings:
            if f.resonant:
                self.assertTrue(f.structural)
        closest = [f for f in findings if not f.structural]
        self.assertEqual(sorted(f.r for f in closest), [1, 2, 3, 4, 5])
        self.assertGreater(min(abs(f.divisor) for f in closest), 0.08)
        r2 = [f for f in closest if f.r == 2][0]
        self.assertAlmostEqual(abs(r2.divisor), 2.0 - SQRT2, places=12)

    def test_integer_ratio(self):
        findings = stability.resonance_scan([1.0, 2.0], 2)
        hits = [f for f in findings if f.resonant and not f.structural]
        self.assertTrue(hits)
        self.assertTrue(all(f.r == 2 for f in hits))
        self.assertIn((1, 1, -2), [f.tuple for f in hits])
        self.assertTrue(all(abs(f.divisor) < 1e-6 for f in hits))

    def test_single_pair(self):
        findings = stability.resonance_scan([1.0], 1)
        self.assertEqual(sorted(f.tuple for f in findings), [(-1, 1), (1, -1)])
        for f in findings:
            self.assertTrue(f.resonant)
            self.assertTrue(f.structural)

    def test_sorted_by_divisor(self):
        findings = stability.resonance_scan([1.0, SQRT2, 1.7], 3)
        divisors = [abs(f.divisor) for f in findings]
        self.assertEqual(divisors, sorted(divisors))

    def test_consistent_with_sumset_distance(self):
        for freqs in ([1.0, 2.0], [1.0, 3.0], [2.0, 3.0, 5.0]):
            _, signed = stability.signed_frequencies(freqs)
            for r in (1, 2, 3):
                if stability.sumset_distance(signed, r) == 0.0:
                    self.assertTrue(any(f.resonant for f in stability.resonance_scan(freqs, r)
                                        if f.r == r))

    def test_empty_and_errors(self):
        self.assertEqual(stability.resonance_scan([], 3), [])
        self.assertRaises(ValueError, stability.resonance_scan, [1.0], 0)
        self.assertRaises(stability.EnumerationCapError, stability.resonance_scan,
                          [float(i) for i in range(1, 12)], 6)

    def test_as_dict(self):
        f = stability.resonance_scan([1.0], 1)[0]
        self.assertEqual(list(f.as_dict().keys()),
                         ["r", "tuple", "divisor", "resonant", "structural"])


class IIntegralTest(unittest.TestCase):

    def test_resonant(self):
        value = stability.i_integral(0, (1,), 10.0, [1.0, 1.0], [1.0, -1.0])
        self.assertEqual(value, -10.0)

    def test_zero_time(self):
        self.assertEqual(stability.i_integral(0, (1,), 0.0, [1.0, 1.0], [1.0, 2.0]), 0.0)

    def test_against_quadrature(self):
        rng = numpy.random.default_rng(11)
        checked = 0
        while checked < 100:
            size = int(rng.integers(2, 6))
            freqs = rng.uniform(-3.0, 3.0, size)
            amps = rng.normal(size=size) + 1j * rng.normal(size=size)
            lead = int(rng.integers(size))
            idx = tuple(int(i) for i in rng.integers(size, size=int(rng.integers(1, 4))))
            divisor = freqs[lead] + sum(freqs[i] for i in idx)
            if abs(divisor) < 0.05:
                continue
            t = rng.uniform(0.0, 5.0)
            coeff = freqs[lead] * amps[lead] * numpy.prod([amps[i] for i in idx])

            def integrand(s, part):
                return part(coeff * numpy.exp(-1j * s * divisor))

            re = integrate.quad(integrand, 0.0, t, args=(numpy.real,), epsabs=1e-13,
                                epsrel=1e-13, limit=200)[0]
            im = integrate.quad(integrand, 0.0, t, args=(numpy.imag,), epsabs=1e-13,
                                epsrel=1e-13, limit=200)[0]
            value = stability.i_integral(lead, idx, t, amps, freqs)
            self.assertLessEqual(abs(value - complex(re, im)), 1e-8)
            checked += 1


class ReportTest(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.sys = mechsys.load_system_file(SKATE)
        cls.report = stability.stability_report(cls.sys, [0.0, 1.0, 0.0], r_max=3)

    def test_minimum_component(self):
        report = self.report
        self.assertEqual(report.classification, stability.CRITICALLY_STABLE)
        numpy.testing.assert_allclose(report.frequencies, [1.0, SQRT2], atol=1e-9)
        self.assertEqual(report.index, 0)
        self.assertTrue(report.no_resonance)
        self.assertTrue(report.hypotheses_hold())
        self.assertTrue(any(f.r == 1 and f.structural and f.resonant
                            for f in report.resonances))
        self.assertEqual(report.linearization["source"], "analytic")

    def test_spectrum(self):
        spectrum = self.report.spectrum
        self.assertEqual(len(spectrum), 6)
        self.assertEqual(sum(1 for z in spectrum if abs(z) < 1e-6), 2)
        for z in spectrum:
            self.assertLessEqual(min(abs(z.conjugate() - w) for w in spectrum), 1e-9)

    def test_frequencies_follow_parameters(self):
        with open(SKATE) as f:
            text = f.read()
        sys = mechsys.load_system(text.replace("c1 = 1", "c1 = 4"))
        report = stability.stability_report(sys, [0.0, 1.0, 0.0], r_max=2)
        numpy.testing.assert_allclose(report.frequencies, [SQRT2, 2.0], atol=1e-9)
        self.assertTrue(report.no_resonance)

    def test_rational_ratio_resonates(self):
        with open(SKATE) as f:
            text = f.read()
        sys = mechsys.load_system(text.replace("cphi = 2", "cphi = 4"))
        report = stability.stability_report(sys, [0.0, 1.0, 0.0], r_max=2)
        numpy.testing.assert_allclose(report.frequencies, [1.0, 2.0], atol=1e-9)
        self.assertFalse(report.no_resonance)
        self.assertFalse(report.hypotheses_hold())

    def test_saddle(self):
        report = stability.stability_report(self.sys, [math.pi, 1.0, math.pi])
        self.assertEqual(report.classification, stability.UNSTABLE)
        self.assertEqual(report.frequencies, [])
        self.assertEqual(report.resonances, [])
        self.assertEqual(report.index, 2)
        self.assertFalse(report.hypotheses_hold())

    def test_oscillator_is_resonant(self):
        sys = mechsys.load_system_file(OSCILLATOR)
        report = stability.stability_report(sys, [0.0, 0.0], r_max=1)
        self.assertEqual(report.classification, stability.CRITICALLY_STABLE)
        numpy.testing.assert_allclose(report.frequencies, [1.0, 1.0], atol=1e-12)
        self.assertFalse(report.no_resonance)

    def test_off_manifold(self):
        self.assertRaises(OffManifoldError, stability.stability_report, self.sys,
                          [0.5, 0.0, 0.0])

    def test_as_dict(self):
        d = self.report.as_dict()
        self.assertEqual(list(d.keys()), ["point", "spectrum", "classification", "frequencies",
                                          "index", "resonances", "conjecture_hypotheses",
                                          "linearization"])
        self.assertEqual(d["conjecture_hypotheses"]["no_resonance_to_r"], 3)
        self.assertTrue(d["conjecture_hypotheses"]["satisfied"])
        # serializable as is
        back = json.loads(files.dumps_json(d))
        self.assertEqual(back["classification"], "critically_stable")
        self.assertEqual(back["point"]["p"], [0.0, 0.0, 0.0])

    def test_reports_in_order(self):
        points = [[math.pi, 1.0, math.pi], [0.0, 1.0, 0.0]]
        reports = stability.stability_reports(self.sys, points, r_max=1)
        self.assertEqual([r.classification for r in reports],
                         [stability.UNSTABLE, stability.CRITICALLY_STABLE])


if __name__ == "__main__":
    unittest.main()
