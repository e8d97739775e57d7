"""
Flat-R^3 vector calculus on both field backends.

Polynomial fields are differentiated exactly. Grid fields use
``numpy.gradient`` with centered second-order differences at interior nodes
and second-order one-sided differences on the lattice faces, so every node
gets a derivative. Ball lattices carry ghost layers, which means every ball
node is differentiated with the centered stencil.

Grid residuals are measured over interior nodes at distance >= 2h from the
boundary (see ``fields.max_abs``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .fields import GENS, ScalarField, VectorField, grid_field, make_poly, max_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiffOperatorConfig:
    stencil: str = "centered-second-order"
    boundary_scheme: str = "one-sided-second-order"

    def edge_order(self, n: int) -> int:
        # numpy needs 3 nodes per axis for the second-order edge scheme
        return 2 if n >= 3 else 1


DIFF_CONFIG = DiffOperatorConfig()


def partial(f: ScalarField, axis: int) -> ScalarField:
    """``∂f/∂x_axis`` (axis 0, 1 or 2)."""
    if f.backend == "polynomial":
        return ScalarField("polynomial", f.domain, poly=make_poly(f.poly.diff(GENS[axis])))
    lattice = f.domain.lattice
    n = lattice.shape[axis]
    if n < 2:
        return grid_field(np.zeros(lattice.shape), f.domain)
    vals = np.gradient(f.values, lattice.h, axis=axis, edge_order=DIFF_CONFIG.edge_order(n))
    return grid_field(vals, f.domain)


def grad(f: ScalarField) -> VectorField:
    """
    Example:
        >>> grad(poly_field("x1*x2"))  # (x2, x1, 0)
    """
    return VectorField(tuple(partial(f, i) for i in range(3)))


def div(u: VectorField) -> ScalarField:
    return partial(u[0], 0) + partial(u[1], 1) + partial(u[2], 2)


def rot(u: VectorField) -> VectorField:
    """Right-handed curl ``(∂2u3 - ∂3u2, ∂3u1 - ∂1u3, ∂1u2 - ∂2u1)``."""
    return VectorField((
        partial(u[2], 1) - partial(u[1], 2),
        partial(u[0], 2) - partial(u[2], 0),
        partial(u[1], 0) - partial(u[0], 1),
    ))


def laplacian(f: ScalarField) -> ScalarField:
    """``div grad f``; the grid backend composes the two first-order stencils."""
    return div(grad(f))


def dirderiv(v: VectorField, u: VectorField) -> VectorField:
    """Covariant derivative ``∇_v u``: component i is ``v . grad(u_i)``."""
    return VectorField(tuple(v.dot(grad(c)) for c in u))


def dot(u: VectorField, v: VectorField) -> ScalarField:
    return u.dot(v)


def wedge(u: VectorField, v: VectorField) -> VectorField:
    return u.cross(v)


def second_difference_scale(*items) -> float:
    """
    ``S``: max absolute second difference divided by h^2, over every grid
    component and axis of the given fields. Polynomial fields contribute 0.
    """
    scale = 0.0
    for item in items:
        comps = list(item) if isinstance(item, VectorField) else [item]
        for c in comps:
            if c.backend != "grid":
                continue
            h = c.domain.lattice.h
            for axis in range(3):
                if c.values.shape[axis] < 3:
                    continue
                d2 = np.abs(np.diff(c.values, n=2, axis=axis))
                scale = max(scale, float(d2.max()) / (h * h))
    return scale


def tolerance_for(items, tolerances: Tolerances | None = None) -> tuple[float, float]:
    """
    Classification tolerance for fields derived from ``items``.

    Returns:
        (tol, S): ``tolerances.polynomial`` with S = 0 on the exact backend,
        ``C * h**2 * S + floor`` on the grid backend.
    """
    tolerances = tolerances or DEFAULT_TOLERANCES
    items = list(items)
    grids = [it for it in items if it.backend == "grid"]
    if not grids:
        return tolerances.polynomial, 0.0
    scale = second_difference_scale(*grids)
    return tolerances.grid(grids[0].domain.h, scale), scale


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class IdentityReport:
    backend: str
    results: tuple
    scale: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> IdentityResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def residuals(self) -> dict:
        return {r.name: r.max_residual for r in self.results}

    def to_json(self) -> dict:
        return {
            "backend": self.backend,
            "scale": self.scale,
            "pass": self.passed,
            "identities": [r.to_json() for r in self.results],
        }


F1_NAMES = (
    "grad_product",
    "grad_dot",
    "rot_scaled",
    "rot_wedge",
    "div_wedge",
    "div_scaled",
)


def f1_residuals(u: VectorField, v: VectorField, a: ScalarField, b: ScalarField) -> dict:
    """The six vector-analysis identities as ``lhs - rhs`` fields."""
    return {
        "grad_product": grad(a * b) - (grad(a) * b + grad(b) * a),
        "grad_dot": grad(dot(u, v)) - (
            dirderiv(v, u) + dirderiv(u, v) + wedge(v, rot(u)) + wedge(u, rot(v))
        ),
        "rot_scaled": rot(v * a) - (wedge(grad(a), v) + rot(v) * a),
        "rot_wedge": rot(wedge(u, v)) - (
            dirderiv(v, u) - dirderiv(u, v) - v * div(u) + u * div(v)
        ),
        "div_wedge": div(wedge(u, v)) - (dot(v, rot(u)) - dot(u, rot(v))),
        "div_scaled": div(v * a) - (dot(grad(a), v) + div(v) * a),
    }


def identity_battery_F1(
    u: VectorField,
    v: VectorField,
    a: ScalarField,
    b: ScalarField,
    tolerances: Tolerances | None = None,
) -> IdentityReport:
    """
    Evaluate the six product-rule identities of flat vector analysis:

    - ``∇(ab) = b∇a + a∇b``
    - ``∇(u.v) = ∇_v u + ∇_u v + v∧rot u + u∧rot v``
    - ``rot(av) = ∇a∧v + a rot v``
    - ``rot(u∧v) = ∇_v u - ∇_u v - (div u)v + (div v)u``
    - ``div(u∧v) = v.rot u - u.rot v``
    - ``div(av) = ∇a.v + a div v``

    Returns:
        IdentityReport: per-identity max residual. Polynomial residuals are
        exactly 0 when the identity holds; grid residuals are compared against
        ``C * h**2 * S + floor``, with S taken over the inputs and their
        pairwise products.
    """
    residuals = f1_residuals(u, v, a, b)
    tol, scale = tolerance_for([u, v, a, b, a * b, dot(u, v), v * a, wedge(u, v)], tolerances)
    results = tuple(IdentityResult(name, max_abs(residuals[name]), tol) for name in F1_NAMES)
    report = IdentityReport(a.backend, results, scale)
    logger.debug(f"[VecCalc] F1 battery on {a.backend}: {report.residuals()}")
    return report


def null_identities(u: VectorField, f: ScalarField) -> dict:
    """Residual sizes of ``rot grad f`` and ``div rot u``."""
    return {"rot_grad": max_abs(rot(grad(f))), "div_rot": max_abs(div(rot(u)))}


@dataclass(frozen=True)
class ConvergenceResult:
    coarse: float
    fine: float

    @property
    def ratio(self) -> float:
        if self.fine == 0:
            return float("inf") if self.coarse > 0 else 1.0
        return self.coarse / self.fine

    def second_order(self, low: float = 3.0, high: float = 5.0, floor: float = 1e-9) -> bool:
        """True if the residual shrinks by a factor in [low, high], or both are below floor."""
        if self.coarse <= floor and self.fine <= floor:
            return True
        return low <= self.ratio <= high

    def to_json(self) -> dict:
        ratio = self.ratio
        return {
            "coarse": self.coarse,
            "fine": self.fine,
            "ratio": ratio if np.isfinite(ratio) else None,
            "second_order": self.second_order(),
        }


def convergence_rate(coarse, fine, margin: float = 2.0) -> ConvergenceResult:
    """
    Compare one residual at spacing h and h/2.

    Both residuals are measured over the same region: nodes at distance
    >= ``margin * h_coarse`` from the boundary.
    """
    hc = coarse.domain.h
    hf = fine.domain.h
    return ConvergenceResult(max_abs(coarse, margin), max_abs(fine, margin * hc / hf))
