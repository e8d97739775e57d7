"""
Seeded random ensembles of fields, generators and axial elements.

Every draw goes through ``numpy.random.Generator(PCG64(seed))`` so a seed
fixes the ensemble on any platform. Polynomial coefficients are small
rationals ``p/q`` with ``|p| <= 5`` and ``q in 1..4``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import sympy

from .axial_algebras import AnalyticGenerator, AxialElement, build_planar
from .fields import (
    GENS,
    Domain,
    QuaternionField,
    ScalarField,
    VectorField,
    make_poly,
    sample,
)
from .hspectrum import h_action
from .quaternion_core import Quaternion
from .vector_calculus import grad

COORDINATE_AXES = (
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (-1, 0, 0), (0, -1, 0), (0, 0, -1),
)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_rational(rng: np.random.Generator, num: int = 5, den: int = 4) -> Fraction:
    return Fraction(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def _monomials(degree: int) -> list[tuple]:
    return [m for m in itertools.product(range(degree + 1), repeat=3) if sum(m) <= degree]


def random_poly(
    rng: np.random.Generator,
    degree: int = 3,
    domain: Domain | None = None,
    density: float = 0.5,
) -> ScalarField:
    """Random exact polynomial of total degree <= ``degree``."""
    rep = {}
    for m in _monomials(degree):
        if rng.random() < density:
            c = random_rational(rng)
            if c != 0:
                rep[m] = sympy.Rational(c.numerator, c.denominator)
    if not rep:
        return ScalarField("polynomial", domain, poly=make_poly(0))
    poly = sympy.Poly.from_dict(rep, *GENS, domain="QQ")
    return ScalarField("polynomial", domain, poly=make_poly(poly))


def random_vector(rng: np.random.Generator, degree: int = 3, domain: Domain | None = None) -> VectorField:
    return VectorField(tuple(random_poly(rng, degree, domain) for _ in range(3)))


def random_quaternion_field(
    rng: np.random.Generator, degree: int = 3, domain: Domain | None = None
) -> QuaternionField:
    return QuaternionField(random_poly(rng, degree, domain), random_vector(rng, degree, domain))


def random_quaternion(rng: np.random.Generator, exact: bool = False) -> Quaternion:
    if exact:
        return Quaternion(random_rational(rng), tuple(random_rational(rng) for _ in range(3)))
    re, a, b, c = rng.normal(size=4)
    return Quaternion(float(re), (float(a), float(b), float(c)))


def random_generator(rng: np.random.Generator, degree: int = 3) -> AnalyticGenerator:
    """Random complex polynomial with rational coefficients, degree <= ``degree``."""
    coeffs = [(random_rational(rng), random_rational(rng)) for _ in range(degree + 1)]
    return AnalyticGenerator(tuple(coeffs))


def dominant_generator(rng: np.random.Generator) -> AnalyticGenerator:
    """
    ``c0 + c1 z + c2 z^2`` with ``|c1| >= 1`` and ``|c2| <= 1/4``.

    On the unit ball ``|f'| >= 1/2``, so ``Δ|p|^2 = 4|f'|^2`` stays positive.
    """
    c0 = (random_rational(rng), random_rational(rng))
    sign = 1 if rng.random() < 0.5 else -1
    c1 = (sign * Fraction(int(rng.integers(4, 9)), 4), Fraction(int(rng.integers(-4, 5)), 4))
    c2 = (Fraction(int(rng.integers(-1, 2)), 8), Fraction(int(rng.integers(-1, 2)), 8))
    return AnalyticGenerator((c0, c1, c2))


def random_unit_vector(rng: np.random.Generator) -> tuple:
    v = rng.normal(size=3)
    while np.linalg.norm(v) < 1e-3:
        v = rng.normal(size=3)
    return tuple(float(c) for c in v / np.linalg.norm(v))


def random_axis(rng: np.random.Generator) -> tuple:
    """Signed coordinate axis; these have rational planar frames."""
    return COORDINATE_AXES[int(rng.integers(0, len(COORDINATE_AXES)))]


def random_planar(
    rng: np.random.Generator,
    domain: Domain | None = None,
    backend: str = "polynomial",
    degree: int = 3,
    omega=None,
) -> AxialElement:
    omega = random_axis(rng) if omega is None else omega
    return build_planar(omega, random_generator(rng, degree), domain, backend)


def subharmonic_ensemble(
    rng: np.random.Generator,
    count: int,
    domain: Domain,
    backend: str = "grid",
) -> list[AxialElement]:
    """
    Planar elements with dominant linear generators.

    Grid elements use random unit axes; polynomial elements use signed
    coordinate axes so their frames stay rational.
    """
    out = []
    for _ in range(count):
        gen = dominant_generator(rng)
        if backend == "grid":
            out.append(build_planar(random_unit_vector(rng), gen, domain, "grid"))
        else:
            out.append(build_planar(random_axis(rng), gen, domain, "polynomial"))
    return out


def random_pure(rng: np.random.Generator, domain: Domain | None = None, degree: int = 3) -> QuaternionField:
    """A pure harmonic field: ``a p`` for a planar element p and constant a."""
    p = random_planar(rng, domain, "polynomial", degree)
    return h_action(random_quaternion(rng, exact=True), p.field)


def random_harmonic(rng: np.random.Generator, domain: Domain | None = None, degree: int = 3) -> QuaternionField:
    """
    A harmonic field that is generically not pure: a pure field plus
    ``{0, ∇g}`` (``rot ∇g = 0``, ``div ∇g = Δg``).
    """
    p = random_pure(rng, domain, degree)
    g = random_poly(rng, degree, domain)
    zero = ScalarField("polynomial", domain, poly=make_poly(0))
    return p + QuaternionField(zero, grad(g))


def random_interior_points(
    rng: np.random.Generator, d: Domain, count: int, margin: float = 0.0
) -> list[tuple]:
    """
    Uniform points of d at distance >= margin from its boundary, by
    rejection from the bounding box.
    """
    if d.shape == "box":
        lo = np.asarray(d.lo) + margin
        hi = np.asarray(d.hi) - margin
    else:
        lo = np.asarray(d.center) - d.radius
        hi = np.asarray(d.center) + d.radius
    pts = []
    while len(pts) < count:
        x = lo + (hi - lo) * rng.random(3)
        if d.shape == "ball" and np.linalg.norm(x - np.asarray(d.center)) > d.radius - margin:
            continue
        pts.append(tuple(float(c) for c in x))
    return pts


def sampled(p: AxialElement, d: Domain) -> QuaternionField:
    """Grid version of a polynomial element's field on the lattice of d."""
    return sample(p.field, d)
