import numpy as np
import pytest

from actm.validation import (
    Check,
    check_axial_bar,
    check_cantilever,
    elastica_tip,
    format_report,
    negative_stiffness_fraction,
    shallow_arch,
    validate_fem,
)
from actm.fem import ForceDeflectionCurve

# Published elastica tip deflections (Mattiasson 1981) for P L^2 / EI.
ELASTICA_TABLE = {1.0: (0.05643, 0.30172), 2.0: (0.16064, 0.49346), 5.0: (0.38763, 0.71379), 10.0: (0.55500, 0.81061)}


class TestElasticaOracle:
    @pytest.mark.parametrize("load", sorted(ELASTICA_TABLE))
    def test_reference_values(self, load):
        dx, dy = elastica_tip(load)
        ref_dx, ref_dy = ELASTICA_TABLE[load]
        assert -dx == pytest.approx(ref_dx, abs=2e-5)
        assert dy == pytest.approx(ref_dy, abs=2e-5)

    def test_small_load_linear(self):
        assert elastica_tip(1e-4)[1] == pytest.approx(1e-4 / 3, rel=1e-4)


class TestChecks:
    def test_check_arithmetic(self):
        c = Check("x", 1.01, 1.0, 0.02)
        assert c.error == pytest.approx(0.01) and c.passed
        assert not Check("x", 1.1, 1.0, 0.02).passed
        assert Check("x", 1e-9, 0.0, 1e-6).passed

    def test_axial_bar(self):
        assert check_axial_bar().passed

    def test_cantilever(self):
        assert check_cantilever().passed

    def test_suite_default_passes(self):
        checks = validate_fem(40)
        assert all(c.passed for c in checks), format_report(checks)

    def test_suite_coarse_mesh_fails(self):
        checks = {c.name: c for c in validate_fem(2)}
        assert not checks["mesh convergence 2->4"].passed

    def test_report_format(self):
        text = format_report([Check("a", 1.0, 1.0, 0.1)])
        assert text.splitlines() == ["check,value,reference,rel_error,tolerance,passed", "a,1.0,1.0,0.000e+00,0.1,true"]


class TestNegativeStiffnessFraction:
    def test_snap_through_profile(self):
        chords = np.linspace(1.0, 0.5, 11)
        resisting = np.array([0, 4, 6, 5, 3, 1, -1, -2, -1, 2, 6], float)
        curve = ForceDeflectionCurve(chords, -resisting, np.zeros(11), np.ones(11, bool))
        assert negative_stiffness_fraction(curve) == pytest.approx(0.5)

    def test_shallow_arch_geometry(self):
        d = shallow_arch()
        assert d.key_points[2, 1] == pytest.approx(0.002)
        np.testing.assert_allclose(d.key_points[[0, -1], 1], 0.0)
