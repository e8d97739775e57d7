from fractions import Fraction

import numpy as np
import pytest

from qharm.errors import (
    BackendMismatchError,
    DegreeCapError,
    DomainError,
    PointOutsideDomainError,
    PreconditionError,
)
from qharm.fields import (
    Domain,
    constant_quaternion,
    evaluate,
    evaluate_many,
    grid_field,
    make_poly,
    max_abs,
    poly_field,
    poly_from_json,
    poly_quaternion,
    poly_to_json,
    pointwise_product,
    sample,
    sup_norm,
    sup_norm_report,
)
from qharm.quaternion_core import Quaternion


@pytest.fixture
def unit_box():
    return Domain.box((-1, -1, -1), (1, 1, 1), h=0.1)


@pytest.fixture
def unit_ball():
    return Domain.ball((0, 0, 0), 1.0, h=0.1)


class TestDomain:
    def test_box_lattice(self):
        d = Domain.box((0, 0, 0), (1, 1, 1), h=0.25)
        lat = d.lattice
        assert lat.shape == (5, 5, 5)
        assert lat.node_count == 125
        assert int(lat.boundary.sum()) == 125 - 27
        assert int(lat.interior(margin=2).sum()) == 1

    def test_ball_boundary_is_subset_of_mask(self, unit_ball):
        lat = unit_ball.lattice
        assert not np.any(lat.boundary & ~lat.mask)
        assert lat.boundary.any()
        r = np.linalg.norm(lat.nodes(), axis=-1)
        assert r.max() <= 1.0 + 1e-12

    def test_index_of(self):
        d = Domain.box((0, 0, 0), (1, 1, 1), h=0.25)
        assert d.lattice.index_of((0.5, 0.25, 1.0)) == (2, 1, 4)
        assert d.lattice.index_of((0.1, 0, 0)) is None

    @pytest.mark.parametrize(
        "make",
        [
            lambda: Domain.box((0, 0, 0), (1, 0, 1), h=0.1),
            lambda: Domain.ball((0, 0, 0), -1.0, h=0.1),
            lambda: Domain.ball((0, 0, 0), 1.0, h=0.0),
            lambda: Domain.from_json({"shape": "torus", "h": 0.1}),
            lambda: Domain.from_json({"shape": "ball", "radius": 1.0, "h": 0.1}),
        ],
    )
    def test_invalid(self, make):
        with pytest.raises(DomainError):
            make()

    def test_json_round_trip(self, unit_ball):
        assert Domain.from_json(unit_ball.to_json()) == unit_ball

    def test_distance_and_contains(self, unit_ball):
        assert unit_ball.distance_to((0, 0, 3)) == pytest.approx(2.0)
        assert unit_ball.distance_to((0.5, 0, 0)) == 0.0
        assert unit_ball.contains((0, 1, 0))
        assert not unit_ball.contains((0, 1.01, 0))


class TestPolynomials:
    def test_degree_cap(self):
        with pytest.raises(DegreeCapError):
            make_poly("x1**17")
        assert make_poly("x1**4", degree_cap=4).total_degree() == 4

    def test_json_terms(self):
        poly = poly_from_json([{"coef": "1/2", "powers": [2, 0, 0]}, {"coef": -3, "powers": [0, 1, 1]}])
        assert poly == make_poly("x1**2/2 - 3*x2*x3")
        assert poly_to_json(poly) == [
            {"coef": "-3", "powers": [0, 1, 1]},
            {"coef": "1/2", "powers": [2, 0, 0]},
        ]

    def test_cancelling_terms_give_zero(self):
        poly = poly_from_json([{"coef": 1, "powers": [1, 0, 0]}, {"coef": -1, "powers": [1, 0, 0]}])
        assert poly.is_zero

    def test_negative_powers(self):
        with pytest.raises(ValueError):
            poly_from_json([{"coef": 1, "powers": [-1, 0, 0]}])


class TestEvaluate:
    def test_polynomial_exact(self):
        assert evaluate(poly_field("x1**2"), (3, 0, 0)) == 9
        assert evaluate(poly_field("x1*x2"), (Fraction(1, 2), Fraction(2, 3), 0)) == Fraction(1, 3)

    def test_polynomial_float_point(self):
        assert evaluate(poly_field("x1**2"), (0.5, 0.0, 0.0)) == pytest.approx(0.25)

    def test_grid_at_node(self, unit_box):
        g = sample(poly_field("x1**2", unit_box), unit_box)
        assert evaluate(g, (0.3, 0.2, -0.1)) == pytest.approx(0.09, abs=1e-14)

    def test_grid_midpoint_is_average(self, unit_box):
        g = sample(poly_field("x1", unit_box), unit_box)
        assert evaluate(g, (0.05, 0.0, 0.0)) == pytest.approx(0.05, abs=1e-14)

    def test_outside_domain(self, unit_ball):
        with pytest.raises(PointOutsideDomainError) as info:
            evaluate(poly_field("x1", unit_ball), (2, 0, 0))
        assert info.value.point == (2, 0, 0)

    def test_quaternion_field(self):
        p = poly_quaternion("x1", (0, 0, "x2"))
        assert evaluate(p, (Fraction(1, 2), 2, 0)) == Quaternion(Fraction(1, 2), (0, 0, 2))

    def test_many_matches_single(self, unit_box):
        p = poly_quaternion("x1*x2", ("x3", 1, "x1**2"), unit_box)
        pts = [(0.1, 0.2, 0.3), (-0.5, 0.5, 0.25)]
        many = evaluate_many(p, pts)
        assert many.shape == (2, 4)
        for row, x in zip(many, pts):
            assert tuple(row) == pytest.approx(evaluate(p, x).as_tuple())


class TestProduct:
    def test_unit(self):
        p = poly_quaternion("x1", (0, 0, "x2"))
        one = constant_quaternion(Quaternion(1, (0, 0, 0)), "polynomial")
        r = pointwise_product(p, one)
        assert r.scalar.poly == p.scalar.poly
        assert all(a.poly == b.poly for a, b in zip(r.vector, p.vector))

    def test_square_of_z(self):
        p = poly_quaternion("x1", (0, 0, "x2"))
        r = p * p
        assert r.scalar.poly == make_poly("x1**2 - x2**2")
        assert r.vector[2].poly == make_poly("2*x1*x2")
        assert r.vector[0].is_zero and r.vector[1].is_zero

    def test_orthogonal_imaginary_parts(self):
        p = poly_quaternion(0, ("x1", 0, 0))
        q = poly_quaternion(0, (0, "x2", 0))
        r = pointwise_product(p, q)
        assert r.scalar.is_zero
        assert r.vector[2].poly == make_poly("x1*x2")

    def test_backend_mismatch(self, unit_box):
        p = poly_quaternion("x1", (0, 0, 0), unit_box)
        with pytest.raises(BackendMismatchError):
            pointwise_product(p, sample(p, unit_box))

    def test_domain_mismatch(self, unit_box, unit_ball):
        with pytest.raises(BackendMismatchError):
            poly_field("x1", unit_box) + poly_field("x2", unit_ball)

    def test_modulus_squared(self):
        p = poly_quaternion("x1", (0, 0, "x2"))
        assert p.modulus_squared().poly == make_poly("x1**2 + x2**2")


class TestSupNorm:
    def test_constant(self, unit_ball):
        one = constant_quaternion(Quaternion(1, (0, 0, 0)), "polynomial", unit_ball)
        assert sup_norm(one) == pytest.approx(1.0)

    def test_linear_on_ball(self, unit_ball):
        p = poly_quaternion("x1", (0, 0, 0), unit_ball)
        report = sup_norm_report(p)
        assert report.value == pytest.approx(1.0, abs=1e-9)
        assert abs(report.argmax[0]) == pytest.approx(1.0, abs=1e-9)
        assert report.spacing == 0.05

    def test_planar_z_on_ball(self, unit_ball):
        p = poly_quaternion("x1", (0, 0, "x2"), unit_ball)
        assert sup_norm(p) == pytest.approx(1.0, abs=1e-9)

    def test_sampled_corner_maximum(self):
        d = Domain.box((-1, -1, -1), (1, 1, 1), h=0.5)
        g = sample(poly_quaternion("x1**2 + x2**2", (0, 0, 0), d), d)
        report = sup_norm_report(g)
        assert report.value == pytest.approx(2.0)
        assert report.node_count == 125

    def test_needs_domain(self):
        with pytest.raises(PreconditionError):
            sup_norm(poly_quaternion("x1", (0, 0, 0)))

    def test_domain_argument(self, unit_ball):
        assert sup_norm(poly_quaternion("x2", (0, 0, 0)), domain=unit_ball) == pytest.approx(1.0, abs=1e-9)


class TestSample:
    def test_zero(self, unit_box):
        g = sample(poly_field(0, unit_box), unit_box)
        assert g.backend == "grid"
        assert not np.any(g.values)

    def test_node_coordinates(self, unit_box):
        g = sample(poly_field("x3", unit_box), unit_box)
        nodes = unit_box.lattice.nodes()
        np.testing.assert_allclose(g.node_values(), nodes[:, 2])

    def test_grid_values_are_read_only(self, unit_box):
        g = grid_field(np.zeros(unit_box.lattice.shape), unit_box)
        with pytest.raises(ValueError):
            g.values[0, 0, 0] = 1.0

    def test_resample_other_lattice(self, unit_box, unit_ball):
        g = sample(poly_field("x1", unit_box), unit_box)
        with pytest.raises(BackendMismatchError):
            sample(g, unit_ball)


def test_max_abs_polynomial_is_largest_coefficient():
    assert max_abs(poly_field("3*x1 - 1/2")) == 3.0
    assert max_abs(poly_field(0)) == 0.0


def test_max_abs_grid_ignores_boundary_layer():
    d = Domain.box((0, 0, 0), (1, 1, 1), h=0.25)
    g = sample(poly_field("x1", d), d)
    # only the center node is at distance >= 2h
    assert max_abs(g, margin=2) == pytest.approx(0.5)
