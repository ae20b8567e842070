import math
import unittest

import numpy

from holonome_core import geometry, mechsys
from holonome_core.config_parser import MissingConfigException
from holonome_core.errors import ConfigError, DimensionMismatch
from holonome_core.settingsValidators import ValidationException

SKATE = "test/data/models/disc_skate.cfg"
OSCILLATOR = "test/data/models/harmonic_oscillator.cfg"


class LoadTest(unittest.TestCase):

    def test_disc_skate(self):
        sys = mechsys.load_system_file(SKATE)
        self.assertEqual(sys.name, "disc_skate")
        self.assertEqual(sys.n, 3)
        self.assertEqual(sys.k, 2)
        self.assertEqual(sys.coord_names, ("x1", "x2", "phi"))
        self.assertEqual(sys.periodic, (True, True, True))
        self.assertAlmostEqual(sys.params["r"], math.sqrt(2))

    def test_missing_file(self):
        self.assertRaises(MissingConfigException, mechsys.load_system_file,
                          "test/data/models/doesnotexist.cfg")

    def test_missing_constraints(self):
        with self.assertRaises(ValidationException) as cm:
            mechsys.load_system_file("test/data/models/missing_constraints.cfg")
        self.assertIn("at least one constraint required", str(cm.exception))

    def test_dimension_mismatch(self):
        self.assertRaises(DimensionMismatch, mechsys.load_system_file,
                          "test/data/models/dimension_mismatch.cfg")

    def test_unknown_parameter(self):
        text = ("[model]\nname = t\ncoordinates = x\nunconstrained = true\n"
                "[metric]\ng = 1\n[potential]\nU = k*x^2\n")
        self.assertRaises(ConfigError, mechsys.load_system, text)

    def test_parameter_shadows_coordinate(self):
        text = ("[model]\nname = t\ncoordinates = x\nunconstrained = true\n"
                "[metric]\ng = 1\n[potential]\nU = x^2\n[params]\nx = 1\n")
        self.assertRaises(ValidationException, mechsys.load_system, text)

    def test_not_spd(self):
        sys = mechsys.load_system_file("test/data/models/not_spd.cfg")
        self.assertRaises(mechsys.MetricError, sys.jet, [0.1, 0.2])

    def test_unconstrained(self):
        sys = mechsys.load_system_file(OSCILLATOR)
        self.assertTrue(sys.unconstrained)
        self.assertEqual(sys.k, sys.n)


class PhasePointTest(unittest.TestCase):

    def test_lengths(self):
        self.assertRaises(mechsys.StateDimensionError, mechsys.PhasePoint, [0, 0], [0])

    def test_not_finite(self):
        self.assertRaises(mechsys.StateDimensionError, mechsys.PhasePoint, [0, float('nan')],
                          [0, 0])

    def test_wrap(self):
        sys = mechsys.load_system_file(SKATE)
        x = sys.phase_point([7.0, -1.0, 2 * math.pi], [0.0, 0.0, 0.0])
        numpy.testing.assert_allclose(x.q, [7.0 - 2 * math.pi, 2 * math.pi - 1.0, 0.0],
                                      atol=1e-15)
        self.assertTrue(numpy.all((x.q >= 0) & (x.q < 2 * math.pi)))

    def test_state(self):
        x = mechsys.PhasePoint([1, 2], [3, 4])
        y = mechsys.PhasePoint.from_state(x.state())
        numpy.testing.assert_array_equal(y.q, [1, 2])
        numpy.testing.assert_array_equal(y.p, [3, 4])


class PhaseQuantitiesTest(unittest.TestCase):

    def setUp(self):
        self.sys = mechsys.load_system_file(SKATE)

    def test_hamiltonian(self):
        sys = self.sys
        self.assertAlmostEqual(mechsys.hamiltonian(sys, mechsys.PhasePoint([0.3, 0.2, 1.0],
                                                                            [0, 0, 0])),
                               sys.potential([0.3, 0.2, 1.0]))
        self.assertAlmostEqual(mechsys.hamiltonian(sys, mechsys.PhasePoint([0, 0, 0],
                                                                            [1, 0, 0])), 0.5)
        self.assertAlmostEqual(mechsys.hamiltonian(sys, mechsys.PhasePoint([math.pi] * 3,
                                                                            [0, 0, 0])), 8.0)

    def test_constraint_values(self):
        x = mechsys.PhasePoint([0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        numpy.testing.assert_allclose(mechsys.constraint_values(self.sys, x), [-1.0],
                                      atol=1e-15)
        self.assertAlmostEqual(mechsys.lyapunov(self.sys, x), 1.0)
        zero = mechsys.PhasePoint([0.3, 0.1, 0.2], [0.0, 0.0, 0.0])
        numpy.testing.assert_array_equal(mechsys.constraint_values(self.sys, zero), [0.0])

    def test_physical_leaf(self):
        x = mechsys.PhasePoint([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
        y = mechsys.physical_leaf_project(self.sys, x)
        numpy.testing.assert_allclose(y.p, [1.0, 0.0, 1.0], atol=1e-15)
        z = mechsys.physical_leaf_project(self.sys, y)
        numpy.testing.assert_allclose(z.p, y.p, atol=1e-15)

        rng = numpy.random.default_rng(2)
        for _ in range(20):
            x = mechsys.PhasePoint(rng.uniform(0, 2 * math.pi, 3), rng.normal(size=3))
            y = mechsys.physical_leaf_project(self.sys, x)
            self.assertLessEqual(numpy.max(numpy.abs(mechsys.constraint_values(self.sys, y))),
                                 1e-12)
            self.assertLessEqual(mechsys.lyapunov(self.sys, y), 1e-24)

    def test_physical_leaf_wraps_periodic(self):
        x = mechsys.PhasePoint([7.0, -1.0, 2 * math.pi], [1.0, 1.0, 1.0])
        y = mechsys.physical_leaf_project(self.sys, x)
        numpy.testing.assert_allclose(y.q, [7.0 - 2 * math.pi, 2 * math.pi - 1.0, 0.0],
                                      atol=1e-15)
        numpy.testing.assert_allclose(y.p, [1.0, 0.0, 1.0], atol=1e-15)

    def test_hamiltonian_gradient(self):
        x = numpy.array([0.3, 0.1, 0.2, 0.5, -0.4, 0.3])
        dq, dp = mechsys.hamiltonian_gradient(self.sys, x)
        grad = geometry.scalar_gradient(lambda y: mechsys.hamiltonian(self.sys, y), x)
        numpy.testing.assert_allclose(numpy.concatenate((dq, dp)), grad, atol=1e-8)


class AssemblyTest(unittest.TestCase):

    def setUp(self):
        self.sys = mechsys.load_system_file(SKATE)

    def test_rho_at_zero_heading(self):
        asm = mechsys.assemble(self.sys, numpy.array([0.4, 0.5, 0.0, 1.0, 2.0, 3.0]))
        numpy.testing.assert_allclose(asm.rho, numpy.diag([1.0, 0.0, 1.0]), atol=1e-15)

    def test_pi_v(self):
        rng = numpy.random.default_rng(17)
        omega = geometry.symplectic_matrix(3)
        for _ in range(100):
            x = numpy.concatenate((rng.uniform(0, 2 * math.pi, 3), rng.normal(size=3)))
            asm = mechsys.assemble(self.sys, x)
            piv = asm.piV
            numpy.testing.assert_allclose(piv.dot(piv), piv, atol=1e-9)
            self.assertTrue(geometry.is_omega_skew(piv, omega))
            numpy.testing.assert_allclose(piv[:3, :3], asm.rho)
            numpy.testing.assert_allclose(piv[:3, 3:], numpy.zeros((3, 3)))
            numpy.testing.assert_allclose(piv[3:, :3], -asm.T)
            numpy.testing.assert_allclose(piv[3:, 3:], asm.rho.T)

    def test_constraint_jacobian(self):
        x = numpy.array([0.3, 0.1, 0.8, 0.5, -0.4, 0.3])
        asm = mechsys.assemble(self.sys, x)

        def f_of_q(q):
            return mechsys.constraint_values(self.sys, numpy.concatenate((q, x[3:])))

        fd = geometry.jacobian(f_of_q, x[:3], differentiable=False)
        numpy.testing.assert_allclose(asm.F.T, fd, atol=1e-6)

    def test_unconstrained(self):
        sys = mechsys.load_system_file(OSCILLATOR)
        x = numpy.array([0.5, -0.2, 0.1, 0.7])
        asm = mechsys.assemble(sys, x)
        numpy.testing.assert_array_equal(asm.rho, numpy.eye(2))
        numpy.testing.assert_array_equal(asm.T, numpy.zeros((2, 2)))
        numpy.testing.assert_array_equal(asm.piV, numpy.eye(4))
        numpy.testing.assert_allclose(mechsys.extension_field(sys, x), [0.1, 0.7, -0.5, 0.2])


class ExtensionFieldTest(unittest.TestCase):

    def setUp(self):
        self.sys = mechsys.load_system_file(SKATE)

    def test_equilibrium(self):
        v = mechsys.extension_field(self.sys, mechsys.PhasePoint([math.pi] * 3, [0, 0, 0]))
        numpy.testing.assert_allclose(v, numpy.zeros(6), atol=1e-15)

    def test_critical_bundle(self):
        q = numpy.array([0.0, 1.0, 0.0])
        p = self.sys.jet(q).E[:, 0]
        v = mechsys.extension_field(self.sys, numpy.concatenate((q, 2.5 * p)))
        numpy.testing.assert_allclose(v, numpy.zeros(6), atol=1e-12)

    def test_horizontal_velocity(self):
        x = mechsys.physical_leaf_project(
            self.sys, mechsys.PhasePoint([0.3, 0.1, 0.2], [0.4, 1.0, -0.5]))
        v = mechsys.extension_field(self.sys, x)
        rho_bar = self.sys.jet(x.q).rho_bar
        numpy.testing.assert_allclose(rho_bar.dot(v[:3]), numpy.zeros(3), atol=1e-12)

    def test_holder_residuals(self):
        eq = [numpy.concatenate(([math.pi] * 3, [0.0, 0.0, 0.0]))]
        self.assertLessEqual(max(mechsys.holder_residuals(self.sys, eq)), 1e-12)

        off_leaf = [numpy.array([0.3, 0.1, 0.2, 0.0, 1.0, 0.0])]
        res = mechsys.holder_residuals(self.sys, off_leaf)
        self.assertLessEqual(res.velocity, 1e-12)
        j = self.sys.jet(off_leaf[0][:3])
        self.assertAlmostEqual(res.leaf, numpy.linalg.norm(j.rho_bar.dot(j.g_inv).dot(
            off_leaf[0][3:])))
        self.assertGreater(res.leaf, 0.1)

    def test_horizontal_fields_flag(self):
        report = geometry.flag(mechsys.horizontal_fields(self.sys), numpy.array([0.3, 0.1, 0.7]))
        self.assertEqual(report.ranks, [2, 3])
        self.assertEqual(report.degree, 1)
        self.assertTrue(report.chow)

    def test_frobenius(self):
        x = numpy.array([0.3, 0.1, 0.7, 0.2, 0.4, -0.1])
        field = mechsys.phase_projector_field(self.sys)
        self.assertGreater(geometry.frobenius_defect(field, x, differentiable=False), 1e-4)

    def test_flat_torus_integrable(self):
        sys = mechsys.load_system_file("test/data/models/flat_torus.cfg")
        x = numpy.array([0.3, 0.1, 0.2, 0.4])
        field = mechsys.phase_projector_field(sys)
        self.assertLessEqual(geometry.frobenius_defect(field, x, differentiable=False), 1e-8)


if __name__ == "__main__":
    unittest.main()
