from fractions import Fraction

import numpy as np
import pytest

from qharm.axial_algebras import (
    AnalyticGenerator,
    AxialElement,
    AxisDescriptor,
    algebra_mul,
    build_planar,
    build_radial,
    element_from_json,
    exact_planar_frame,
    planar_frame,
    validate_axial,
)
from qharm.ensembles import make_rng, random_generator
from qharm.errors import AxisError, DegreeCapError
from qharm.fields import Domain, evaluate, make_poly, max_abs, poly_field, poly_quaternion, poly_vector
from qharm.harmonic_analysis import classify, residual
from qharm.vector_calculus import convergence_rate

E1 = (1, 0, 0)
E3 = (0, 0, 1)


def parts(p):
    """(scalar, vector) polynomials of an element's field."""
    return p.field.scalar.poly, tuple(c.poly for c in p.field.vector)


def same_field(p, q):
    return parts(p) == parts(q)


@pytest.fixture(scope="module")
def far_ball():
    return Domain.ball((0, 0, 2), 0.5, h=0.05)


class TestAnalyticGenerator:
    def test_trailing_zeros(self):
        gen = AnalyticGenerator.from_coeffs([1, 0, 0])
        assert gen.degree == 0
        assert gen.coeffs == ((Fraction(1), Fraction(0)),)

    def test_mixed_coefficients(self):
        gen = AnalyticGenerator.from_coeffs([1j, [Fraction(1, 2), -1], 3])
        assert gen.coeffs[0] == (0, 1)
        assert gen.coeffs[1] == (Fraction(1, 2), -1)
        assert gen(2.0) == pytest.approx(1j + (0.5 - 1j) * 2 + 12)

    def test_product(self):
        z = AnalyticGenerator.monomial(1)
        assert z * z == AnalyticGenerator.monomial(2)
        assert (z * AnalyticGenerator(())).is_zero

    def test_degree_cap(self):
        with pytest.raises(DegreeCapError):
            AnalyticGenerator.from_coeffs([0, 0, 0, 1], degree_cap=2)

    def test_bad_pair(self):
        with pytest.raises(ValueError):
            AnalyticGenerator.from_coeffs([[1, 2, 3]])


class TestFrames:
    @pytest.mark.parametrize(
        "omega, a, b",
        [
            ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
            ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
            ((0, 1, 0), (1, 0, 0), (0, 0, -1)),
        ],
    )
    def test_coordinate_axes(self, omega, a, b):
        fa, fb, fw = planar_frame(omega)
        np.testing.assert_allclose(fa, a, atol=1e-15)
        np.testing.assert_allclose(fb, b, atol=1e-15)
        # right handed
        np.testing.assert_allclose(np.cross(fa, fb), fw, atol=1e-15)

    def test_exact_frame_is_rational(self):
        a, b, w = exact_planar_frame((0.6, 0.8, 0))
        assert all(c.is_rational for c in a + b + w)
        assert sum(x * y for x, y in zip(a, w)) == 0

    def test_irrational_frame(self):
        s = 2 ** -0.5
        with pytest.raises(AxisError):
            build_planar((s, s, 0), [0, 1])
        d = Domain.box((-1, -1, -1), (1, 1, 1), h=0.25)
        assert build_planar((s, s, 0), [0, 1], d, backend="grid").backend == "grid"

    def test_non_unit_axis(self):
        with pytest.raises(AxisError, match="not unit"):
            AxisDescriptor.planar((1, 1, 0))

    def test_descriptor_json(self):
        axis = AxisDescriptor.radial((0, 0, 0))
        assert AxisDescriptor.from_json(axis.to_json()).same_as(axis)
        with pytest.raises(AxisError):
            AxisDescriptor.from_json({"kind": "helical"})


class TestPlanar:
    def test_z(self):
        p = build_planar(E3, [0, 1])
        assert parts(p) == (make_poly("x1"), (make_poly(0), make_poly(0), make_poly("x2")))

    def test_z_squared(self):
        p = build_planar(E3, [0, 0, 1])
        assert parts(p) == (make_poly("x1**2 - x2**2"), (make_poly(0), make_poly(0), make_poly("2*x1*x2")))

    def test_unit(self):
        p = build_planar(E3, [1])
        assert p.field.scalar.poly == make_poly(1)
        assert p.field.vector.is_zero

    def test_e1_axis(self):
        q = build_planar(E1, [0, 1])
        assert parts(q) == (make_poly("x2"), (make_poly("x3"), make_poly(0), make_poly(0)))

    def test_pure_harmonic(self):
        p = build_planar(E3, [0, 0, 0, 1])
        assert classify(p.field).classification == "pure_harmonic"
        report = validate_axial(p)
        assert report.passed and report.pure
        assert all(v == 0.0 for v in report.residuals.values())

    def test_invalid_element(self):
        field = poly_quaternion("x1", (0, 0, "x1"))
        fake = AxialElement(
            AxisDescriptor.planar(E3),
            AnalyticGenerator.monomial(1),
            field,
            poly_field("x1"),
            poly_field("x1"),
            poly_vector(E3),
            poly_field("x3"),
        )
        report = validate_axial(fake)
        assert not report.passed
        assert "epsilon" in report.failures()
        assert "cauchy_riemann" in report.failures()
        assert residual(field).components[1].poly == make_poly(1)

    def test_from_json(self):
        p = element_from_json({"kind": "planar", "omega": [0, 0, 1], "coeffs": [[0, 0], [1, 0]]}, None, "polynomial")
        assert same_field(p, build_planar(E3, [0, 1]))

    def test_degree_cap(self):
        gen = AnalyticGenerator.monomial(3)
        with pytest.raises(DegreeCapError, match="cap 2"):
            build_planar(E3, gen, degree_cap=2)
        with pytest.raises(DegreeCapError, match="cap 2"):
            element_from_json({"kind": "planar", "omega": [0, 0, 1], "coeffs": [0, 0, 0, 1]}, None, "polynomial", 2)
        assert build_planar(E3, gen, degree_cap=3).generator.degree == 3


class TestAlgebraMul:
    def test_z_times_z(self):
        z = build_planar(E3, [0, 1])
        assert same_field(algebra_mul(z, z), build_planar(E3, [0, 0, 1]))

    def test_unit(self):
        p = build_planar(E3, [1, [0, 2], 3])
        assert same_field(algebra_mul(p, build_planar(E3, [1])), p)

    @pytest.mark.parametrize("seed", range(5))
    def test_homomorphism(self, seed):
        rng = make_rng(seed)
        f, g = random_generator(rng), random_generator(rng)
        p, q = build_planar(E1, f), build_planar(E1, g)
        pq = algebra_mul(p, q)
        assert same_field(pq, build_planar(E1, f * g))
        # commutative and closed
        assert same_field(pq, algebra_mul(q, p))
        assert validate_axial(pq).passed

    def test_product_matches_pointwise_product(self):
        p = build_planar(E3, [0, 1, 1])
        q = build_planar(E3, [[0, 1], 2])
        direct = p.field * q.field
        pq = algebra_mul(p, q).field
        assert direct.scalar.poly == pq.scalar.poly
        assert all(a.poly == b.poly for a, b in zip(direct.vector, pq.vector))

    def test_axis_mismatch(self):
        with pytest.raises(AxisError, match="mismatch"):
            algebra_mul(build_planar(E3, [0, 1]), build_planar(E1, [0, 1]))

    def test_degree_cap(self):
        p = build_planar(E3, [0, 0, 1])
        with pytest.raises(DegreeCapError):
            algebra_mul(p, p, degree_cap=3)


class TestRadial:
    def test_pole_inside(self, far_ball):
        with pytest.raises(AxisError, match="inside"):
            build_radial((0, 0, 2), [0, 1], far_ball)

    def test_pole_too_close(self):
        d = Domain.ball((0, 0, 0), 1.0, h=0.1)
        with pytest.raises(AxisError):
            build_radial((0, 0, 1.1), [0, 1], d)

    def test_constant_generator_is_curl_free(self, far_ball):
        p = build_radial((0, 0, 0), [[1, 1]], far_ball)
        assert evaluate(p.field, (0.0, 0.0, 2.0)).as_tuple() == pytest.approx((1.0, 0.0, 0.0, 1.0))
        assert max_abs(residual(p.field)) < 1e-2

    def test_constant_along_rays(self, far_ball):
        p = build_radial((0, 0, 0), [1, [0, 1], [2, 0]], far_ball)
        near, far = (0.2, 0.0, 1.6), (0.25, 0.0, 2.0)
        assert evaluate(p.phi, near) == pytest.approx(evaluate(p.phi, far), abs=1e-12)
        assert evaluate(p.psi, near) == pytest.approx(evaluate(p.psi, far), abs=1e-12)

    def test_harmonic_not_pure(self, far_ball):
        p = build_radial((0, 0, 0), [0, 1], far_ball)
        report = validate_axial(p)
        assert report.passed, report.failures()
        assert not report.pure
        assert "div_im" in report.residuals
        assert classify(p.field).classification == "harmonic"

    def test_second_order_convergence(self, far_ball):
        fine = far_ball.with_spacing(0.025)
        coarse_p = build_radial((0, 0, 0), [0, 1], far_ball)
        fine_p = build_radial((0, 0, 0), [0, 1], fine)
        result = convergence_rate(residual(coarse_p.field), residual(fine_p.field))
        assert 3.0 <= result.ratio <= 5.0

    def test_product_stays_in_algebra(self, far_ball):
        p = build_radial((0, 0, 0), [0, 1], far_ball)
        pq = algebra_mul(p, p)
        assert pq.generator == AnalyticGenerator.monomial(2)
        assert validate_axial(pq).passed
