"""
Harmonicity of quaternion fields.

For ``p = {α, u}`` the harmonic residual is ``ε(p) = ∇α - rot u``. A field is
harmonic when ``ε(p) = 0`` and pure harmonic when additionally
``div u = 0``. This module classifies fields, assembles the product-residual
formulas for ``ε(pq)`` and ``div Im(pq)``, and checks subharmonicity of
``|p|^2`` and the maximum-modulus principle on grid fields.
"""

from __future__ import annotations

import logging
import typing
from dataclasses import dataclass

import numpy as np

from .axial_algebras import AxialElement, validate_axial
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import BackendMismatchError, PreconditionError
from .fields import QuaternionField, ScalarField, VectorField, max_abs, pointwise_product
from .vector_calculus import dirderiv, div, dot, grad, laplacian, rot, tolerance_for, wedge

logger = logging.getLogger(__name__)

Classification = typing.Literal["not_harmonic", "harmonic", "pure_harmonic"]


def residual(p: QuaternionField) -> VectorField:
    """
    ``ε(p) = grad(α) - rot(u)``.

    Example:
        >>> residual(poly_quaternion("x1", (0, 0, "x2"))).is_zero
        True
    """
    return grad(p.scalar) - rot(p.vector)


@dataclass(frozen=True)
class ResidualReport:
    epsilon_max: float
    div_max: float
    classification: Classification
    tol: float
    backend: str
    domain: dict | None = None
    scale: float = 0.0

    @property
    def is_harmonic(self) -> bool:
        return self.classification != "not_harmonic"

    @property
    def is_pure(self) -> bool:
        return self.classification == "pure_harmonic"

    def to_json(self) -> dict:
        return {
            "epsilon_max": self.epsilon_max,
            "div_max": self.div_max,
            "class": self.classification,
            "tol": self.tol,
            "backend": self.backend,
            "domain": self.domain,
        }


def classify(p: QuaternionField, tol: float | None = None, tolerances: Tolerances | None = None) -> ResidualReport:
    """
    Classify p as not harmonic, harmonic or pure harmonic.

    Args:
        p: field to classify.
        tol: explicit tolerance; by default ``tolerances.polynomial`` on the
            exact backend and ``C * h**2 * S + floor`` on the grid.
        tolerances: defaults for the automatic tolerance.

    Raises:
        ValueError: if tol is negative.
    """
    if tol is None:
        tol, scale = tolerance_for([p.scalar, p.vector], tolerances)
    else:
        if tol < 0:
            raise ValueError("tol must be non-negative.")
        scale = 0.0
    eps = max_abs(residual(p))
    dv = max_abs(div(p.vector))
    if eps <= tol and dv <= tol:
        cls = "pure_harmonic"
    elif eps <= tol:
        cls = "harmonic"
    else:
        cls = "not_harmonic"
    domain = p.domain.to_json() if p.domain is not None else None
    logger.debug(f"[Harmonic] classify: eps={eps:.3e} div={dv:.3e} tol={tol:.1e} -> {cls}")
    return ResidualReport(eps, dv, cls, tol, p.backend, domain, scale)


def in_imaginary_subspace(p: QuaternionField, tol: float | None = None) -> bool:
    """Membership in ``Q̇(Ω) ∩ I(Ω)``: pure harmonic with zero scalar part."""
    report = classify(p, tol)
    return report.is_pure and max_abs(p.scalar, margin=0) <= report.tol


def direct_product_residual(p: QuaternionField, q: QuaternionField) -> tuple[VectorField, ScalarField]:
    """``(ε(pq), div Im(pq))`` computed from the pointwise product."""
    pq = pointwise_product(p, q)
    return residual(pq), div(pq.vector)


def residual_product_general(p: QuaternionField, q: QuaternionField) -> tuple[VectorField, ScalarField]:
    """
    Right-hand sides of the general product-residual formulas, for
    ``p = {α, u}``, ``q = {β, v}``:

    - ``ε(pq) = βε(p) + αε(q) + v∧ε(p) + u∧ε(q) + (div u)v - (div v)u - 2∇_v u``
    - ``div Im(pq) = α div v + β div u + u.ε(q) + v.ε(p) + 2v.rot u``
    """
    if p.backend != q.backend:
        raise BackendMismatchError(f"Backend mismatch: {p.backend} vs {q.backend}.")
    a, u = p.scalar, p.vector
    b, v = q.scalar, q.vector
    ep, eq = residual(p), residual(q)
    eps = (
        ep * b + eq * a + wedge(v, ep) + wedge(u, eq)
        + v * div(u) - u * div(v) - dirderiv(v, u) * 2
    )
    dv = div(v) * a + div(u) * b + dot(u, eq) + dot(v, ep) + dot(v, rot(u)) * 2
    return eps, dv


def residual_product_harmonic(p: QuaternionField, q: QuaternionField) -> tuple[VectorField, ScalarField]:
    """
    Reduced forms for harmonic factors (``ε(p) = ε(q) = 0``):

    - ``ε(pq) = (div u)v - (div v)u - 2∇_v u``
    - ``div Im(pq) = α div v + β div u + 2v.rot u``

    No precondition check; callers compare against ``residual_product_general``.
    """
    a, u = p.scalar, p.vector
    b, v = q.scalar, q.vector
    eps = v * div(u) - u * div(v) - dirderiv(v, u) * 2
    dv = div(v) * a + div(u) * b + dot(v, rot(u)) * 2
    return eps, dv


def residual_product_pure(
    p: QuaternionField, q: QuaternionField, tol: float | None = None
) -> tuple[VectorField, ScalarField]:
    """
    Pure-harmonic forms: ``ε(pq) = -2∇_v u`` and ``div Im(pq) = 2v.rot u``.

    Raises:
        PreconditionError: naming the argument that is not pure harmonic.
    """
    for name, f in (("p", p), ("q", q)):
        report = classify(f, tol)
        if not report.is_pure:
            raise PreconditionError(
                f"Argument '{name}' is {report.classification}, not pure_harmonic "
                f"(eps={report.epsilon_max:.3e}, div={report.div_max:.3e}).",
                argument=name,
            )
    u, v = p.vector, q.vector
    return dirderiv(v, u) * -2, dot(v, rot(u)) * 2


def subharmonic_rhs(p: QuaternionField) -> ScalarField:
    """``2(|∇φ|^2 + |rot h|^2)`` for ``p = {φ, h}``."""
    g = grad(p.scalar)
    r = rot(p.vector)
    return (g.dot(g) + r.dot(r)) * 2


def modulus_squared_laplacian(p, tol: float | None = None) -> ScalarField:
    """
    ``Δ|p|^2`` for a validated axial element.

    Args:
        p: an ``AxialElement``; validated before the Laplacian is taken.
        tol: validation tolerance.

    Raises:
        PreconditionError: if p is not an axial element or fails axial
            validation.
    """
    field = _validated_field(p, tol)
    return laplacian(field.modulus_squared())


def _validated_field(p, tol) -> QuaternionField:
    if not isinstance(p, AxialElement):
        raise PreconditionError(
            f"Expected an axial element, got {type(p).__name__}.", argument="p"
        )
    report = validate_axial(p, tol)
    if not report.passed:
        raise PreconditionError(
            f"Element fails axial validation: {report.failures()}.", argument="p"
        )
    return p.field


@dataclass(frozen=True)
class SubharmonicityReport:
    min_laplacian: float | None
    max_mismatch: float
    tol: float
    floor: float
    backend: str

    @property
    def passed(self) -> bool:
        bounded = self.min_laplacian is None or self.min_laplacian >= -self.floor
        return bounded and self.max_mismatch <= self.tol

    def to_json(self) -> dict:
        return {
            "min_laplacian": self.min_laplacian,
            "max_mismatch": self.max_mismatch,
            "tol": self.tol,
            "floor": self.floor,
            "backend": self.backend,
            "pass": self.passed,
        }


def _interior_min(f: ScalarField) -> float | None:
    if f.backend == "polynomial":
        if f.domain is None:
            return None
        vals = f.node_values()
        sel = f.domain.lattice.interior()[f.domain.lattice.mask]
        return float(vals[sel].min()) if np.any(sel) else None
    sel = f.domain.lattice.interior()
    return float(f.values[sel].min()) if np.any(sel) else None


def subharmonicity_report(
    p, tol: float | None = None, tolerances: Tolerances | None = None
) -> SubharmonicityReport:
    """
    Check ``Δ|p|^2 >= 0`` and ``Δ|p|^2 = 2(|∇φ|^2 + |rot h|^2)``.

    On the polynomial backend the identity is checked exactly; on the grid the
    mismatch is compared against ``C * h**2 * S + floor`` with S taken over
    ``|p|^2``.
    """
    tolerances = tolerances or DEFAULT_TOLERANCES
    field = _validated_field(p, tol)
    lap = laplacian(field.modulus_squared())
    mismatch = max_abs(lap - subharmonic_rhs(field))
    check_tol, _ = tolerance_for([field.modulus_squared()], tolerances)
    report = SubharmonicityReport(
        _interior_min(lap), mismatch, check_tol, tolerances.subharmonic_floor, field.backend
    )
    logger.debug(f"[Harmonic] subharmonicity: {report.to_json()}")
    return report


@dataclass(frozen=True)
class MaxModulusReport:
    m_int: float
    m_bd: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.m_int <= self.m_bd + self.tol

    def to_json(self) -> dict:
        return {"m_int": self.m_int, "m_bd": self.m_bd, "tol": self.tol, "pass": self.passed}


def max_modulus_check(p: QuaternionField, tol: float | None = None, tolerances: Tolerances | None = None) -> MaxModulusReport:
    """
    Discrete maximum-modulus principle: ``M_int <= M_bd + tol``.

    Args:
        p: grid field.
        tol: slack; defaults to ``max_principle_slack * h``.

    Raises:
        PreconditionError: if p is not on the grid backend.
    """
    if p.backend != "grid":
        raise PreconditionError("max_modulus_check needs a grid field.", argument="p")
    tolerances = tolerances or DEFAULT_TOLERANCES
    lattice = p.domain.lattice
    if tol is None:
        tol = tolerances.max_principle_slack * lattice.h
    mods = np.sqrt(p.modulus_squared().values)
    interior = lattice.mask & ~lattice.boundary
    m_int = float(mods[interior].max()) if np.any(interior) else 0.0
    m_bd = float(mods[lattice.boundary].max()) if np.any(lattice.boundary) else 0.0
    report = MaxModulusReport(m_int, m_bd, tol)
    if not report.passed:
        logger.warning(f"[Harmonic] max principle fails: M_int={m_int:.6f} > M_bd={m_bd:.6f} + {tol:.1e}")
    return report
