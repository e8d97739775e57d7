"""
Commutative axial algebras of harmonic quaternion fields in R^3.

An axial element is ``p = {φ, ψ e}`` where e is a unit geodesic field and
``φ + iψ`` is an analytic function of a complex coordinate transverse to e.
Two families are built here:

- planar: e is a constant unit vector ω, the coordinate is
  ``z = x.a + i x.b`` for a right-handed frame ``(a, b, ω)``. Elements are
  pure harmonic and live on both backends.
- radial: e is the unit field ``(x - O) / |x - O|`` from a pole O outside the
  domain, the coordinate is the stereographic chart ζ of the direction of
  ``x - O``. Elements are harmonic but not pure (``div Im p = 2ψ/r``) and live
  on the grid backend only.

Elements of one algebra multiply like their generators:
``build(f) * build(g) = build(f * g)``.

Example:
    >>> p = build_planar((0, 0, 1), AnalyticGenerator.from_coeffs([0, 1]))
    >>> p.field  # {x1, x2 e3}
"""

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import AxisError, DegreeCapError
from .fields import (
    GENS,
    Domain,
    QuaternionField,
    ScalarField,
    VectorField,
    constant_field,
    constant_vector,
    grid_field,
    make_poly,
    max_abs,
    to_rational,
)
from .vector_calculus import dirderiv, div, dot, grad, laplacian, rot, tolerance_for, wedge

logger = logging.getLogger(__name__)

AXIS_TOL = 1e-12
# min of 1 + n.d over the lattice before the stereographic chart counts as singular
CHART_FLOOR = 1e-6


# ---------------------------------------------------------------- generators


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


@dataclass(frozen=True)
class AnalyticGenerator:
    """
    Complex polynomial ``f(z) = sum c_k z^k``.

    Coefficients are stored exactly as ``(re, im)`` Fraction pairs, lowest
    degree first, with trailing zeros stripped.
    """

    coeffs: tuple = ()

    def __post_init__(self):
        cs = [(_exact(re), _exact(im)) for re, im in self.coeffs]
        while cs and cs[-1] == (0, 0):
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_coeffs(cls, coeffs, degree_cap: int | None = None) -> AnalyticGenerator:
        """
        Build from numbers, complex numbers or ``[re, im]`` pairs.

        Raises:
            DegreeCapError: if the degree exceeds ``degree_cap``.
        """
        pairs = []
        for c in coeffs:
            if isinstance(c, complex):
                pairs.append((c.real, c.imag))
            elif isinstance(c, (list, tuple)):
                if len(c) != 2:
                    raise ValueError(f"Coefficient pair must have 2 entries, got {c}.")
                pairs.append(tuple(c))
            else:
                pairs.append((c, 0))
        gen = cls(tuple(pairs))
        cap = DEFAULT_TOLERANCES.degree_cap if degree_cap is None else degree_cap
        if gen.degree > cap:
            raise DegreeCapError(f"Generator degree {gen.degree} exceeds cap {cap}.")
        return gen

    @classmethod
    def monomial(cls, k: int) -> AnalyticGenerator:
        return cls(tuple([(0, 0)] * k + [(1, 0)]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __mul__(self, other: AnalyticGenerator) -> AnalyticGenerator:
        if self.is_zero or other.is_zero:
            return AnalyticGenerator(())
        out = [(Fraction(0), Fraction(0))] * (self.degree + other.degree + 1)
        for i, (a, b) in enumerate(self.coeffs):
            for j, (c, d) in enumerate(other.coeffs):
                re, im = out[i + j]
                out[i + j] = (re + a * c - b * d, im + a * d + b * c)
        return AnalyticGenerator(tuple(out))

    def complex_coeffs(self) -> list[complex]:
        return [complex(float(re), float(im)) for re, im in self.coeffs]

    def __call__(self, z):
        """Float evaluation at a complex scalar or array."""
        cs = self.complex_coeffs()
        if not cs:
            return np.zeros_like(np.asarray(z, dtype=complex))
        return np.polyval(cs[::-1], z)

    def split(self, x, y) -> tuple:
        """
        ``(Re f(x + iy), Im f(x + iy))`` by Horner's rule on real parts.

        Works on anything with ``+``, ``-``, ``*`` and scaling by Fractions:
        exact polynomials or numpy arrays.
        """
        re = x * 0
        im = x * 0
        for c_re, c_im in reversed(self.coeffs):
            re, im = re * x - im * y, re * y + im * x
            re = re + _lift(c_re, x)
            im = im + _lift(c_im, x)
        return re, im

    def to_json(self) -> list:
        return [[_num(re), _num(im)] for re, im in self.coeffs]


def _lift(c: Fraction, like):
    if isinstance(like, sympy.Poly):
        return sympy.Rational(c.numerator, c.denominator)
    return float(c)


def _num(c: Fraction):
    return int(c) if c.denominator == 1 else float(c)


# ---------------------------------------------------------------- axes


def planar_frame(omega) -> tuple:
    """
    Right-handed orthonormal frame ``(a, b, ω)``.

    ``b = normalize(ω x k)`` for the first standard basis vector k with
    ``|ω x k| > 1/2``, then ``a = b x ω``. For ω = e3 this gives
    ``(e1, e2)``; for ω = e1 it gives ``(e2, e3)``.
    """
    w = np.asarray(omega, dtype=float)
    for k in np.eye(3):
        c = np.cross(w, k)
        n = np.linalg.norm(c)
        if n > 0.5:
            b = c / n
            a = np.cross(b, w)
            return a, b, w
    raise AxisError(f"Axis {tuple(omega)} is not a unit vector.")


def exact_planar_frame(omega) -> tuple:
    """
    The same frame with rational components.

    Raises:
        AxisError: if ω is not exactly unit after rational snapping, or the
            frame is irrational.
    """
    w = [sympy.Rational(_snap(c)) for c in omega]
    if sum(c * c for c in w) != 1:
        raise AxisError(f"Axis {tuple(omega)} is not exactly unit in rationals.")
    wv = sympy.Matrix(w)
    for i in range(3):
        k = sympy.Matrix([1 if j == i else 0 for j in range(3)])
        c = wv.cross(k)
        n2 = c.dot(c)
        if n2 > sympy.Rational(1, 4):
            n = sympy.sqrt(n2)
            if not n.is_rational:
                raise AxisError(f"Axis {tuple(omega)} has no rational frame; use the grid backend.")
            b = c / n
            a = b.cross(wv)
            return tuple(a), tuple(b), tuple(wv)
    raise AxisError(f"Axis {tuple(omega)} is not a unit vector.")


def _snap(c) -> Fraction:
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c)).limit_denominator(10**6)
    return _exact(c)


@dataclass(frozen=True)
class AxisDescriptor:
    """
    Planar axis ``ω`` (unit) or radial pole ``O``.

    Use ``AxisDescriptor.planar`` / ``AxisDescriptor.radial``.
    """

    kind: typing.Literal["planar", "radial"]
    omega: tuple | None = None
    pole: tuple | None = None

    @classmethod
    def planar(cls, omega) -> AxisDescriptor:
        """
        Raises:
            AxisError: if ``| |ω| - 1 | > 1e-12``.
        """
        w = tuple(omega)
        if len(w) != 3:
            raise AxisError("Axis must have 3 components.")
        norm = math.sqrt(sum(float(c) ** 2 for c in w))
        if abs(norm - 1) > AXIS_TOL:
            raise AxisError(f"Axis {w} is not unit (|ω| = {norm}).")
        return cls("planar", omega=w)

    @classmethod
    def radial(cls, pole) -> AxisDescriptor:
        o = tuple(float(c) for c in pole)
        if len(o) != 3:
            raise AxisError("Pole must have 3 components.")
        return cls("radial", pole=o)

    @classmethod
    def from_json(cls, data: dict) -> AxisDescriptor:
        match data.get("kind"):
            case "planar" if "omega" in data:
                return cls.planar(data["omega"])
            case "radial" if "pole" in data:
                return cls.radial(data["pole"])
            case "planar" | "radial" as kind:
                key = "omega" if kind == "planar" else "pole"
                raise AxisError(f"A {kind} axis needs '{key}'.")
            case other:
                raise AxisError(f"Unknown axis kind '{other}'.")

    def to_json(self) -> dict:
        if self.kind == "planar":
            return {"kind": "planar", "omega": [float(c) for c in self.omega]}
        return {"kind": "radial", "pole": list(self.pole)}

    def same_as(self, other: AxisDescriptor) -> bool:
        if self.kind != other.kind:
            return False
        mine = self.omega if self.kind == "planar" else self.pole
        theirs = other.omega if other.kind == "planar" else other.pole
        return bool(np.allclose(np.asarray(mine, dtype=float), np.asarray(theirs, dtype=float), rtol=0, atol=AXIS_TOL))


# ---------------------------------------------------------------- elements


@dataclass(frozen=True, eq=False)
class AxialElement:
    """
    An element ``p = {φ, ψ e}`` of one axial algebra with its construction data.

    Attributes:
        axis: the axis descriptor.
        generator: the analytic generator f with ``φ + iψ = f``.
        field: the realized QuaternionField.
        phi, psi: the scalar CR pair.
        e: the unit axis field.
        tau: the distance function with ``e = ∇τ`` (``x.ω`` or ``|x - O|``).
    """

    axis: AxisDescriptor
    generator: AnalyticGenerator
    field: QuaternionField
    phi: ScalarField
    psi: ScalarField
    e: VectorField
    tau: ScalarField

    @property
    def backend(self) -> str:
        return self.field.backend

    @property
    def domain(self) -> Domain | None:
        return self.field.domain

    def to_json(self) -> dict:
        return {
            "axis": self.axis.to_json(),
            "coeffs": self.generator.to_json(),
            "backend": self.backend,
        }


def _as_generator(f, degree_cap: int | None = None) -> AnalyticGenerator:
    gen = f if isinstance(f, AnalyticGenerator) else AnalyticGenerator.from_coeffs(f, degree_cap)
    cap = DEFAULT_TOLERANCES.degree_cap if degree_cap is None else degree_cap
    if gen.degree > cap:
        raise DegreeCapError(f"Generator degree {gen.degree} exceeds cap {cap}.")
    return gen


def build_planar(
    omega,
    f,
    d: Domain | None = None,
    backend: typing.Literal["polynomial", "grid"] = "polynomial",
    degree_cap: int | None = None,
) -> AxialElement:
    """
    Element of the planar algebra ``A_ω(Ω)``.

    Args:
        omega: unit axis.
        f: AnalyticGenerator or coefficient list.
        d: domain; required for the grid backend.
        backend: ``"polynomial"`` (exact, needs a rational frame) or ``"grid"``.
        degree_cap: maximum generator degree, default ``Tolerances.degree_cap``.

    Returns:
        AxialElement: ``p = {Re f(z), Im f(z) ω}`` with ``z = x.a + i x.b``.

    Raises:
        AxisError: non-unit ω, or an irrational frame on the exact backend.
        DegreeCapError: if the generator degree exceeds the cap.

    Example:
        >>> build_planar((0, 0, 1), [0, 0, 1]).field  # {x1**2 - x2**2, 2 x1 x2 e3}
    """
    axis = AxisDescriptor.planar(omega)
    gen = _as_generator(f, degree_cap)
    cap = DEFAULT_TOLERANCES.degree_cap if degree_cap is None else degree_cap
    if backend == "polynomial":
        a, b, w = exact_planar_frame(axis.omega)
        x = make_poly(sum(ai * g for ai, g in zip(a, GENS)))
        y = make_poly(sum(bi * g for bi, g in zip(b, GENS)))
        re, im = gen.split(x, y)
        phi = ScalarField("polynomial", d, poly=make_poly(re, cap))
        psi = ScalarField("polynomial", d, poly=make_poly(im, cap))
        e = constant_vector(w, "polynomial", d)
        tau = ScalarField("polynomial", d, poly=make_poly(sum(wi * g for wi, g in zip(w, GENS))))
    elif backend == "grid":
        if d is None:
            raise ValueError("Grid backend needs a domain.")
        a, b, w = planar_frame(axis.omega)
        coords = d.lattice.coords
        re, im = gen.split(coords @ a, coords @ b)
        phi = grid_field(re, d)
        psi = grid_field(im, d)
        e = constant_vector(tuple(w), "grid", d)
        tau = grid_field(coords @ w, d)
    else:
        raise ValueError(f"Unknown backend '{backend}'.")
    field = QuaternionField(phi, e * psi)
    logger.debug(f"[Axial] planar element omega={axis.omega} deg={gen.degree} on {backend}")
    return AxialElement(axis, gen, field, phi, psi, e, tau)


def radial_chart(pole, d: Domain) -> tuple:
    """
    Frame ``(a, b, c)`` of the stereographic chart for a pole and a domain.

    c points from the pole to the domain centroid; the chart projects from
    ``-c`` so the domain's directions stay away from the chart singularity.
    """
    c = d.centroid - np.asarray(pole, dtype=float)
    norm = np.linalg.norm(c)
    if norm == 0:
        raise AxisError("Pole coincides with the domain centre.")
    a, b, c = planar_frame(c / norm)
    return a, b, c


def build_radial(pole, f, d: Domain, degree_cap: int | None = None) -> AxialElement:
    """
    Element of the radial algebra ``A_e(Ω)``, ``e = (x - O) / |x - O|``.

    Realized on the grid backend: with ``n`` the unit direction from O and the
    chart frame ``(a, b, c)``, ``ζ = (n.a + i n.b) / (1 + n.c)``,
    ``φ + iψ = f(ζ)`` and ``p = {φ, ψ n}``.

    Raises:
        AxisError: the pole lies within 2h of the closed domain or on the
            lattice, or the chart is singular on the lattice.
        DegreeCapError: if the generator degree exceeds ``degree_cap``.
    """
    axis = AxisDescriptor.radial(pole)
    gen = _as_generator(f, degree_cap)
    o = np.asarray(axis.pole)
    dist = d.distance_to(o)
    if dist < 2 * d.h:
        raise AxisError(f"Pole {axis.pole} is inside or within 2h of {d.describe()} (distance {dist:.3g}).")
    a, b, c = radial_chart(o, d)
    rel = d.lattice.coords - o
    r = np.linalg.norm(rel, axis=-1)
    if r.min() < d.h / 2:
        raise AxisError(f"Pole {axis.pole} lies on the lattice of {d.describe()}.")
    n = rel / r[..., None]
    denom = 1 + n @ c
    if denom.min() <= CHART_FLOOR:
        raise AxisError(f"Stereographic chart is singular on {d.describe()}.")
    re, im = gen.split((n @ a) / denom, (n @ b) / denom)
    phi = grid_field(re, d)
    psi = grid_field(im, d)
    e = VectorField(tuple(grid_field(n[..., i], d) for i in range(3)))
    tau = grid_field(r, d)
    logger.debug(f"[Axial] radial element pole={axis.pole} deg={gen.degree} on {d.describe()}")
    return AxialElement(axis, gen, QuaternionField(phi, e * psi), phi, psi, e, tau)


def rebuild(
    axis: AxisDescriptor, f, d: Domain | None, backend: str, degree_cap: int | None = None
) -> AxialElement:
    """Build an element of the algebra named by ``axis`` with generator f."""
    if axis.kind == "planar":
        return build_planar(axis.omega, f, d, backend, degree_cap)
    return build_radial(axis.pole, f, d, degree_cap)


def algebra_mul(p: AxialElement, q: AxialElement, degree_cap: int | None = None) -> AxialElement:
    """
    Product inside one axial algebra:
    ``{φλ - ψμ, (φμ + ψλ) e}`` for ``p = {φ, ψe}``, ``q = {λ, μe}``.

    The generator of the result is ``f * g``.

    Raises:
        AxisError: if p and q belong to different algebras.
        DegreeCapError: if ``deg f + deg g`` exceeds the cap.
    """
    if not p.axis.same_as(q.axis):
        raise AxisError(f"Axis mismatch: {p.axis.to_json()} vs {q.axis.to_json()}.")
    if p.backend != q.backend or p.domain != q.domain:
        raise AxisError("Factors live on different backends or domains.")
    cap = DEFAULT_TOLERANCES.degree_cap if degree_cap is None else degree_cap
    gen = p.generator * q.generator
    if gen.degree > cap:
        raise DegreeCapError(f"Product generator degree {gen.degree} exceeds cap {cap}.")
    phi = p.phi * q.phi - p.psi * q.psi
    psi = p.phi * q.psi + p.psi * q.phi
    field = QuaternionField(phi, p.e * psi)
    return AxialElement(p.axis, gen, field, phi, psi, p.e, p.tau)


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class AxialReport:
    kind: str
    residuals: dict
    tol: float
    pure: bool
    backend: str

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def failures(self) -> list[str]:
        return sorted(k for k, v in self.residuals.items() if v > self.tol)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "residuals": dict(self.residuals),
            "tol": self.tol,
            "pure": self.pure,
            "backend": self.backend,
            "pass": self.passed,
        }


def _axial_residual_fields(p: AxialElement) -> dict:
    e, phi, psi, tau = p.e, p.phi, p.psi, p.tau
    fields = {
        "grad_e_phi": dot(e, grad(phi)),
        "grad_e_psi": dot(e, grad(psi)),
        "grad_e_e": dirderiv(e, e),
        "frobenius": dot(e, rot(e)),
        "laplace_phi": laplacian(phi),
        "laplace_psi": laplacian(psi),
        "cauchy_riemann": grad(psi) - wedge(grad(tau), grad(phi)),
        "epsilon": grad(p.field.scalar) - rot(p.field.vector),
    }
    if p.axis.kind == "planar":
        fields["laplace_tau"] = laplacian(tau)
    else:
        inv_r = grid_field(1.0 / tau.values, tau.domain)
        fields["laplace_tau"] = laplacian(tau) - inv_r * 2
        fields["div_im"] = div(p.field.vector) - psi * inv_r * 2
    return fields


def validate_axial(p: AxialElement, tol: float | None = None, tolerances: Tolerances | None = None) -> AxialReport:
    """
    Check the structural equations of an axial element.

    Residuals: ``∇_e φ``, ``∇_e ψ``, ``∇_e e``, ``e.rot e``, ``Δφ``, ``Δψ``,
    ``∇ψ - ∇τ∧∇φ``, ``ε(p)`` and ``Δτ`` (0 planar, ``2/r`` radial). Radial
    elements also check ``div Im p = 2ψ/r``. ``pure`` reports whether
    ``div Im p`` vanishes within tol.

    Args:
        p: element to check; its fields need not come from a builder.
        tol: explicit tolerance, default as in ``harmonic_analysis.classify``.
    """
    if tol is None:
        tol, _ = tolerance_for([p.phi, p.psi, p.e, p.tau], tolerances)
    residuals = {name: max_abs(f) for name, f in _axial_residual_fields(p).items()}
    pure = max_abs(div(p.field.vector)) <= tol
    report = AxialReport(p.axis.kind, residuals, tol, pure, p.backend)
    if report.passed:
        logger.debug(f"[Axial] {p.axis.kind} element valid (tol {tol:.1e})")
    else:
        logger.warning(f"[Axial] {p.axis.kind} element fails: {report.failures()}")
    return report


def element_from_json(
    data: dict, d: Domain | None, backend: str, degree_cap: int | None = None
) -> AxialElement:
    """Build from ``{"kind", "omega" | "pole", "coeffs": [[re, im], ...]}``."""
    axis = AxisDescriptor.from_json(data)
    gen = AnalyticGenerator.from_coeffs(data.get("coeffs", []), degree_cap)
    return rebuild(axis, gen, d, backend, degree_cap)
