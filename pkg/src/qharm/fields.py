"""
Scalar, vector and quaternion fields on a bounded domain in R^3.

Two backends share one interface:

- ``polynomial``: exact multivariate polynomials in x1, x2, x3 with rational
  coefficients (``sympy.Poly`` over ``QQ``). Identities checked on this
  backend have exactly zero residual.
- ``grid``: node values on a uniform lattice covering a ``Domain``. Boxes use
  exactly their own nodes; balls use the bounding cube padded by two ghost
  layers so that every ball node gets a centered stencil. Value arrays have
  the full lattice shape and the domain nodes are ``lattice.mask``.

Example:
    >>> d = Domain.ball((0, 0, 0), 1.0, h=0.1)
    >>> f = poly_field("x1**2", d)
    >>> evaluate(f, (Fraction(1, 2), 0, 0))
    Fraction(1, 4)
    >>> g = sample(f, d)
    >>> round(evaluate(g, (0.5, 0.0, 0.0)), 12)
    0.25
"""

from __future__ import annotations

import itertools
import logging
import math
import typing
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property, lru_cache
from numbers import Real

import numpy as np
import sympy

from .errors import (
    BackendMismatchError,
    DegreeCapError,
    DomainError,
    PointOutsideDomainError,
    PreconditionError,
)
from .config import DEGREE_CAP
from .quaternion_core import Quaternion

logger = logging.getLogger(__name__)

X1, X2, X3 = sympy.symbols("x1 x2 x3")
GENS = (X1, X2, X3)

H_EVAL = 0.05
# ball lattices carry this many ghost layers beyond the bounding cube
GHOST_LAYERS = 2

Backend = typing.Literal["polynomial", "grid"]


# ---------------------------------------------------------------- domain


@dataclass(frozen=True, eq=False)
class Lattice:
    """
    Uniform lattice ``origin + h * index`` with the domain/boundary masks.

    Attributes:
        origin: coordinates of node (0, 0, 0).
        h: spacing.
        shape: nodes per axis.
        mask: True on domain nodes.
        boundary: True on boundary nodes (a subset of mask).
        distance: distance of each node to the domain boundary Γ, negative
            outside the domain.
    """

    origin: tuple
    h: float
    shape: tuple
    mask: np.ndarray = dc_field(repr=False)
    boundary: np.ndarray = dc_field(repr=False)
    distance: np.ndarray = dc_field(repr=False)

    @cached_property
    def axes(self) -> tuple:
        return tuple(self.origin[i] + self.h * np.arange(self.shape[i]) for i in range(3))

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``lattice.shape + (3,)``."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids, axis=-1)

    @property
    def node_count(self) -> int:
        return int(self.mask.sum())

    def nodes(self) -> np.ndarray:
        """Domain node coordinates in row-major order, shape ``(N, 3)``."""
        return self.coords[self.mask]

    def interior(self, margin: float = 2.0) -> np.ndarray:
        """Mask of domain nodes at distance >= ``margin * h`` from the boundary."""
        return self.mask & (self.distance >= margin * self.h * (1 - 1e-9))

    def index_of(self, x) -> tuple | None:
        """Lattice index of a node at ``x``, or None if x is not a node."""
        t = (np.asarray(x, dtype=float) - np.asarray(self.origin)) / self.h
        r = np.round(t)
        if np.any(np.abs(t - r) > 1e-9) or np.any(r < 0) or np.any(r >= np.asarray(self.shape)):
            return None
        return tuple(int(v) for v in r)


@dataclass(frozen=True)
class Domain:
    """
    Bounded domain: an axis-aligned box or a closed ball, with grid spacing.

    Use ``Domain.box`` / ``Domain.ball`` / ``Domain.from_json`` rather than
    the raw constructor.

    Raises:
        DomainError: if the interior is empty or h is not positive.
    """

    shape: typing.Literal["box", "ball"]
    h: float
    lo: tuple | None = None
    hi: tuple | None = None
    center: tuple | None = None
    radius: float | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"Grid spacing must be positive, got {self.h}.")
        match self.shape:
            case "box":
                if self.lo is None or self.hi is None or len(self.lo) != 3 or len(self.hi) != 3:
                    raise DomainError("Box domain needs 3-component lo and hi.")
                if any(b <= a for a, b in zip(self.lo, self.hi)):
                    raise DomainError(f"Box has empty interior: lo={self.lo}, hi={self.hi}.")
            case "ball":
                if self.center is None or len(self.center) != 3:
                    raise DomainError("Ball domain needs a 3-component center.")
                if self.radius is None or not self.radius > 0:
                    raise DomainError(f"Ball radius must be positive, got {self.radius}.")
            case _:
                raise DomainError(f"Unknown domain shape '{self.shape}'.")

    @classmethod
    def box(cls, lo, hi, h: float) -> Domain:
        return cls("box", float(h), lo=tuple(float(a) for a in lo), hi=tuple(float(b) for b in hi))

    @classmethod
    def ball(cls, center, radius: float, h: float) -> Domain:
        return cls("ball", float(h), center=tuple(float(c) for c in center), radius=float(radius))

    @classmethod
    def from_json(cls, data: dict) -> Domain:
        """
        Build from ``{"shape": "box", "lo": [..], "hi": [..], "h": n}`` or
        ``{"shape": "ball", "center": [..], "radius": n, "h": n}``.
        """
        try:
            match data.get("shape"):
                case "box":
                    return cls.box(data["lo"], data["hi"], data["h"])
                case "ball":
                    return cls.ball(data["center"], data["radius"], data["h"])
                case other:
                    raise DomainError(f"Unknown domain shape '{other}'.")
        except KeyError as e:
            raise DomainError(f"Domain is missing key {e}.") from e
        except DomainError:
            raise
        except (TypeError, ValueError) as e:
            raise DomainError(f"Invalid domain {data}: {e}") from e

    def to_json(self) -> dict:
        if self.shape == "box":
            return {"shape": "box", "lo": list(self.lo), "hi": list(self.hi), "h": self.h}
        return {"shape": "ball", "center": list(self.center), "radius": self.radius, "h": self.h}

    def describe(self) -> str:
        if self.shape == "box":
            return f"box {self.lo}-{self.hi} (h={self.h})"
        return f"ball c={self.center} R={self.radius} (h={self.h})"

    def with_spacing(self, h: float) -> Domain:
        return Domain(self.shape, float(h), self.lo, self.hi, self.center, self.radius)

    @property
    def centroid(self) -> np.ndarray:
        if self.shape == "box":
            return (np.asarray(self.lo) + np.asarray(self.hi)) / 2
        return np.asarray(self.center, dtype=float)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray([float(c) for c in x])
        if self.shape == "box":
            return bool(np.all(x >= np.asarray(self.lo) - tol) and np.all(x <= np.asarray(self.hi) + tol))
        return float(np.linalg.norm(x - np.asarray(self.center))) <= self.radius + tol

    def distance_to(self, x) -> float:
        """Euclidean distance from x to the closed domain (0 inside)."""
        x = np.asarray([float(c) for c in x])
        if self.shape == "box":
            return float(np.linalg.norm(np.maximum(np.asarray(self.lo) - x, x - np.asarray(self.hi)).clip(min=0)))
        return max(0.0, float(np.linalg.norm(x - np.asarray(self.center))) - self.radius)

    @cached_property
    def lattice(self) -> Lattice:
        h = self.h
        if self.shape == "box":
            lo, hi = np.asarray(self.lo), np.asarray(self.hi)
            n = tuple(int(math.floor((b - a) / h + 1e-9)) + 1 for a, b in zip(lo, hi))
            origin = tuple(lo)
            idx = np.meshgrid(*(np.arange(k) for k in n), indexing="ij")
            mask = np.ones(n, dtype=bool)
            # distance in index units to the nearest lattice face
            dist = np.minimum.reduce(
                [np.minimum(idx[i], n[i] - 1 - idx[i]) for i in range(3)]
            ).astype(float) * h
            boundary = dist == 0
        else:
            k = int(math.ceil(self.radius / h - 1e-9)) + GHOST_LAYERS
            n = (2 * k + 1,) * 3
            origin = tuple(c - k * h for c in self.center)
            axes = [origin[i] + h * np.arange(n[i]) for i in range(3)]
            grids = np.meshgrid(*axes, indexing="ij")
            r = np.sqrt(sum((grids[i] - self.center[i]) ** 2 for i in range(3)))
            dist = self.radius - r
            mask = dist >= -1e-12 * self.radius
            boundary = mask & (dist < h * (1 - 1e-12))
        for arr in (mask, boundary, dist):
            arr.setflags(write=False)
        logger.debug(f"[Fields] lattice for {self.describe()}: shape={n}, nodes={int(mask.sum())}")
        return Lattice(origin, h, n, mask, boundary, dist)


# ---------------------------------------------------------------- polynomials


def to_rational(x) -> sympy.Rational:
    """Exact rational for ints, Fractions, ``"p/q"`` strings and floats."""
    if isinstance(x, sympy.Rational):
        return x
    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    if isinstance(x, str):
        return sympy.Rational(x)
    if isinstance(x, (int, np.integer)):
        return sympy.Integer(int(x))
    if isinstance(x, (float, np.floating)):
        return sympy.Rational(float(x))
    raise TypeError(f"Cannot convert {type(x).__name__} to an exact rational.")


def make_poly(expr, degree_cap: int = DEGREE_CAP) -> sympy.Poly:
    """
    Canonical ``Poly`` over ``QQ`` in x1, x2, x3.

    Args:
        expr: a sympy expression, a string, a number or an existing Poly.
        degree_cap: maximum total degree.

    Raises:
        DegreeCapError: if the total degree exceeds ``degree_cap``.
    """
    if isinstance(expr, sympy.Poly):
        poly = expr if expr.gens == GENS and expr.domain == sympy.QQ else sympy.Poly(expr.as_expr(), *GENS, domain="QQ")
    else:
        if isinstance(expr, str):
            expr = sympy.sympify(expr, locals={"x1": X1, "x2": X2, "x3": X3})
        elif isinstance(expr, (Fraction, float, int)):
            expr = to_rational(expr)
        poly = sympy.Poly(expr, *GENS, domain="QQ")
    if not poly.is_zero and poly.total_degree() > degree_cap:
        raise DegreeCapError(f"Polynomial degree {poly.total_degree()} exceeds cap {degree_cap}.")
    return poly


def poly_from_json(terms: list[dict], degree_cap: int = DEGREE_CAP) -> sympy.Poly:
    """Parse ``[{"coef": "p/q", "powers": [i, j, k]}, ...]``."""
    rep = {}
    for term in terms:
        powers = tuple(int(k) for k in term["powers"])
        if len(powers) != 3 or any(k < 0 for k in powers):
            raise ValueError(f"Invalid monomial powers {term['powers']}.")
        rep[powers] = rep.get(powers, sympy.Integer(0)) + to_rational(term["coef"])
    rep = {k: v for k, v in rep.items() if v != 0}
    if not rep:
        return make_poly(0, degree_cap)
    return make_poly(sympy.Poly.from_dict(rep, *GENS, domain="QQ"), degree_cap)


def poly_to_json(poly: sympy.Poly) -> list[dict]:
    return [
        {"coef": str(sympy.Rational(c)), "powers": list(m)}
        for m, c in sorted(poly.terms())
        if c != 0
    ]


@lru_cache(maxsize=4096)
def _poly_callable(poly: sympy.Poly):
    fn = sympy.lambdify(GENS, poly.as_expr(), "numpy")

    def call(x1, x2, x3):
        x1 = np.asarray(x1, dtype=float)
        return np.asarray(fn(x1, x2, x3), dtype=float) + np.zeros_like(x1)

    return call


def _is_exact_point(x) -> bool:
    return all(isinstance(c, (int, Fraction, sympy.Rational, np.integer)) for c in x)


# ---------------------------------------------------------------- fields


def _same_domain(a: Domain | None, b: Domain | None, backend: str) -> Domain | None:
    if a is None or b is None:
        if backend == "grid":
            raise BackendMismatchError("Grid fields need a domain.")
        return a if b is None else b
    if a != b:
        raise BackendMismatchError(f"Domain mismatch: {a.describe()} vs {b.describe()}.")
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    A function Ω -> R on one backend.

    Exactly one of ``poly`` (polynomial backend) or ``values`` (grid backend)
    is set. Prefer the ``poly_field`` / ``grid_field`` constructors.
    """

    backend: Backend
    domain: Domain | None = None
    poly: sympy.Poly | None = None
    values: np.ndarray | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        match self.backend:
            case "polynomial":
                if self.poly is None:
                    raise ValueError("Polynomial field needs a polynomial.")
            case "grid":
                if self.domain is None or self.values is None:
                    raise ValueError("Grid field needs a domain and values.")
                if self.values.shape != self.domain.lattice.shape:
                    raise ValueError(
                        f"Grid values shape {self.values.shape} does not match lattice {self.domain.lattice.shape}."
                    )
                if self.values.flags.writeable:
                    vals = np.array(self.values, dtype=float)
                    vals.setflags(write=False)
                    object.__setattr__(self, "values", vals)
            case _:
                raise ValueError(f"Unknown backend '{self.backend}'.")

    def _combine(self, other: ScalarField, op) -> ScalarField:
        if not isinstance(other, ScalarField):
            raise TypeError(f"Cannot combine ScalarField with {type(other).__name__}.")
        if self.backend != other.backend:
            raise BackendMismatchError(f"Backend mismatch: {self.backend} vs {other.backend}.")
        domain = _same_domain(self.domain, other.domain, self.backend)
        if self.backend == "polynomial":
            return ScalarField("polynomial", domain, poly=make_poly(op(self.poly, other.poly)))
        return ScalarField("grid", domain, values=op(self.values, other.values))

    def _scale(self, c) -> ScalarField:
        if self.backend == "polynomial":
            return ScalarField("polynomial", self.domain, poly=make_poly(self.poly * to_rational(c)))
        return ScalarField("grid", self.domain, values=self.values * float(c))

    def __add__(self, other):
        if isinstance(other, Real):
            return self + constant_like(other, self)
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Real):
            return self - constant_like(other, self)
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Real, Fraction)):
            return self._scale(other)
        if isinstance(other, VectorField):
            return other * self
        return self._combine(other, lambda a, b: a * b)

    def __rmul__(self, other):
        if isinstance(other, (Real, Fraction)):
            return self._scale(other)
        return NotImplemented

    def __neg__(self):
        return self._scale(-1)

    @property
    def is_zero(self) -> bool:
        if self.backend == "polynomial":
            return self.poly.is_zero
        return not np.any(self.values)

    def node_values(self) -> np.ndarray:
        """Values at the domain nodes (row-major), shape ``(N,)``."""
        if self.backend == "grid":
            return self.values[self.domain.lattice.mask]
        if self.domain is None:
            raise PreconditionError("Polynomial field without a domain has no nodes.", argument="f")
        return self.on_lattice(self.domain)[self.domain.lattice.mask]

    def on_lattice(self, domain: Domain) -> np.ndarray:
        """Float values on the full lattice of ``domain``."""
        if self.backend == "grid":
            if domain != self.domain:
                raise BackendMismatchError("Grid field can only be read on its own lattice.")
            return np.asarray(self.values)
        c = domain.lattice.coords
        return _poly_callable(self.poly)(c[..., 0], c[..., 1], c[..., 2])

    def __repr__(self):
        if self.backend == "polynomial":
            return f"ScalarField(polynomial, {self.poly.as_expr()})"
        return f"ScalarField(grid, {self.domain.describe()})"


@dataclass(frozen=True, eq=False)
class VectorField:
    """Three ScalarField components sharing one backend and one domain."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != 3 or not all(isinstance(c, ScalarField) for c in comps):
            raise ValueError("VectorField needs exactly three ScalarField components.")
        backends = {c.backend for c in comps}
        if len(backends) != 1:
            raise BackendMismatchError(f"Components on mixed backends {sorted(backends)}.")
        domains = {c.domain for c in comps if c.domain is not None}
        if len(domains) > 1:
            raise BackendMismatchError("Components on different domains.")
        if domains:
            # polynomial components without a domain inherit the shared one
            d = domains.pop()
            comps = tuple(c if c.domain is not None else ScalarField(c.backend, d, c.poly, c.values) for c in comps)
        object.__setattr__(self, "components", comps)

    @property
    def backend(self) -> Backend:
        return self.components[0].backend

    @property
    def domain(self) -> Domain | None:
        return self.components[0].domain

    def __getitem__(self, i: int) -> ScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: VectorField) -> VectorField:
        return VectorField(tuple(a - b for a, b in zip(self, other)))

    def __neg__(self) -> VectorField:
        return VectorField(tuple(-a for a in self))

    def __mul__(self, other) -> VectorField:
        """Scale by a number or (pointwise) by a ScalarField."""
        if isinstance(other, (Real, Fraction, ScalarField)):
            return VectorField(tuple(a * other for a in self))
        return NotImplemented

    def __rmul__(self, other) -> VectorField:
        if isinstance(other, (Real, Fraction)):
            return self * other
        return NotImplemented

    def dot(self, other: VectorField) -> ScalarField:
        return self[0] * other[0] + self[1] * other[1] + self[2] * other[2]

    def cross(self, other: VectorField) -> VectorField:
        u, v = self, other
        return VectorField((
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ))

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self)

    def node_values(self) -> np.ndarray:
        return np.stack([c.node_values() for c in self], axis=-1)

    def __repr__(self):
        return f"VectorField({', '.join(repr(c) for c in self)})"


@dataclass(frozen=True, eq=False)
class QuaternionField:
    """A pair ``{scalar, vector}``: a candidate element of C(Ω)."""

    scalar: ScalarField
    vector: VectorField

    def __post_init__(self):
        if self.scalar.backend != self.vector.backend:
            raise BackendMismatchError("Scalar and vector parts on different backends.")
        domain = _same_domain(self.scalar.domain, self.vector.domain, self.scalar.backend)
        if domain is not None and self.scalar.domain is None:
            object.__setattr__(self, "scalar", ScalarField(self.scalar.backend, domain, self.scalar.poly))
        if domain is not None and self.vector.domain is None:
            object.__setattr__(
                self, "vector", VectorField(tuple(ScalarField(c.backend, domain, c.poly) for c in self.vector))
            )

    @property
    def backend(self) -> Backend:
        return self.scalar.backend

    @property
    def domain(self) -> Domain | None:
        return self.scalar.domain if self.scalar.domain is not None else self.vector.domain

    def __add__(self, other: QuaternionField) -> QuaternionField:
        return QuaternionField(self.scalar + other.scalar, self.vector + other.vector)

    def __sub__(self, other: QuaternionField) -> QuaternionField:
        return QuaternionField(self.scalar - other.scalar, self.vector - other.vector)

    def __neg__(self) -> QuaternionField:
        return QuaternionField(-self.scalar, -self.vector)

    def __mul__(self, other):
        if isinstance(other, QuaternionField):
            return pointwise_product(self, other)
        if isinstance(other, (Real, Fraction)):
            return QuaternionField(self.scalar * other, self.vector * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Real, Fraction)):
            return self * other
        return NotImplemented

    def modulus_squared(self) -> ScalarField:
        return self.scalar * self.scalar + self.vector.dot(self.vector)

    @property
    def is_zero(self) -> bool:
        return self.scalar.is_zero and self.vector.is_zero

    def node_values(self) -> np.ndarray:
        """Domain node values, shape ``(N, 4)`` laid out as (re, i, j, k)."""
        return np.column_stack([self.scalar.node_values(), self.vector.node_values()])

    def __repr__(self):
        return f"QuaternionField({self.scalar!r}, {self.vector!r})"


# ---------------------------------------------------------------- constructors


def poly_field(expr, domain: Domain | None = None, degree_cap: int = DEGREE_CAP) -> ScalarField:
    return ScalarField("polynomial", domain, poly=make_poly(expr, degree_cap))


def poly_vector(exprs, domain: Domain | None = None) -> VectorField:
    return VectorField(tuple(poly_field(e, domain) for e in exprs))


def poly_quaternion(scalar, vector, domain: Domain | None = None) -> QuaternionField:
    """
    Example:
        >>> p = poly_quaternion("x1", (0, 0, "x2"))
    """
    return QuaternionField(poly_field(scalar, domain), poly_vector(vector, domain))


def grid_field(values, domain: Domain) -> ScalarField:
    return ScalarField("grid", domain, values=np.asarray(values, dtype=float))


def grid_vector(values, domain: Domain) -> VectorField:
    """``values`` has shape ``lattice.shape + (3,)`` or is a 3-sequence of arrays."""
    arr = np.asarray(values, dtype=float)
    if arr.shape == domain.lattice.shape + (3,):
        return VectorField(tuple(grid_field(arr[..., i], domain) for i in range(3)))
    return VectorField(tuple(grid_field(v, domain) for v in values))


def constant_field(c, backend: Backend, domain: Domain | None = None) -> ScalarField:
    if backend == "polynomial":
        return poly_field(to_rational(c), domain)
    return grid_field(np.full(domain.lattice.shape, float(c)), domain)


def constant_like(c, like: ScalarField) -> ScalarField:
    return constant_field(c, like.backend, like.domain)


def constant_vector(v, backend: Backend, domain: Domain | None = None) -> VectorField:
    return VectorField(tuple(constant_field(c, backend, domain) for c in v))


def constant_quaternion(a: Quaternion, backend: Backend, domain: Domain | None = None) -> QuaternionField:
    """The constant field ``x -> a``."""
    return QuaternionField(constant_field(a.re, backend, domain), constant_vector(a.im, backend, domain))


def zero_vector(like: ScalarField) -> VectorField:
    return constant_vector((0, 0, 0), like.backend, like.domain)


def imaginary_part(p: QuaternionField) -> QuaternionField:
    """``{0, Im p}``."""
    return QuaternionField(constant_like(0, p.scalar), p.vector)


# ---------------------------------------------------------------- operations


def _check_point(f_domain: Domain | None, backend: str, x):
    if f_domain is None:
        return
    tol = f_domain.h / 2 if backend == "grid" else 1e-12 * max(1.0, f_domain.h)
    if not f_domain.contains(x, tol):
        raise PointOutsideDomainError(x, f_domain)


def _trilinear(values: np.ndarray, lattice: Lattice, pts: np.ndarray) -> np.ndarray:
    t = (pts - np.asarray(lattice.origin)) / lattice.h
    snapped = np.round(t)
    t = np.where(np.abs(t - snapped) < 1e-9, snapped, t)
    i0, w = [], []
    for ax in range(3):
        n = lattice.shape[ax]
        if n == 1:
            i0.append(np.zeros(len(pts), dtype=int))
            w.append(np.zeros(len(pts)))
            continue
        lo = np.clip(np.floor(t[:, ax]).astype(int), 0, n - 2)
        i0.append(lo)
        w.append(np.clip(t[:, ax] - lo, 0.0, 1.0))
    out = np.zeros(len(pts))
    for corner in itertools.product((0, 1), repeat=3):
        weight = np.ones(len(pts))
        idx = []
        for ax, c in enumerate(corner):
            weight = weight * (w[ax] if c else 1.0 - w[ax])
            idx.append(np.minimum(i0[ax] + c, lattice.shape[ax] - 1))
        nz = weight != 0
        if np.any(nz):
            out[nz] += weight[nz] * values[idx[0][nz], idx[1][nz], idx[2][nz]]
    return out


def _evaluate_scalar(f: ScalarField, x):
    _check_point(f.domain, f.backend, x)
    if f.backend == "polynomial":
        if _is_exact_point(x):
            val = f.poly.eval(dict(zip(GENS, (to_rational(c) for c in x))))
            val = sympy.Rational(val)
            return Fraction(int(val.p), int(val.q))
        return float(_poly_callable(f.poly)(*(float(c) for c in x)))
    pts = np.asarray([[float(c) for c in x]])
    return float(_trilinear(f.values, f.domain.lattice, pts)[0])


def evaluate(f, x):
    """
    Evaluate a field at a point of the closed domain.

    Polynomial fields evaluate exactly (returning a ``Fraction`` when every
    coordinate is exact, a float otherwise); grid fields interpolate
    trilinearly among the 8 enclosing nodes.

    Args:
        f: ScalarField, VectorField or QuaternionField.
        x: point as a 3-sequence.

    Returns:
        real, 3-tuple, or Quaternion respectively.

    Raises:
        PointOutsideDomainError: if x is outside the domain (tolerance h/2
            on the grid backend).
    """
    if isinstance(f, ScalarField):
        return _evaluate_scalar(f, x)
    if isinstance(f, VectorField):
        return tuple(_evaluate_scalar(c, x) for c in f)
    if isinstance(f, QuaternionField):
        return Quaternion(_evaluate_scalar(f.scalar, x), tuple(_evaluate_scalar(c, x) for c in f.vector))
    raise TypeError(f"Cannot evaluate {type(f).__name__}.")


def evaluate_many(f, points) -> np.ndarray:
    """
    Float evaluation at many points; shape ``(N,)``, ``(N, 3)`` or ``(N, 4)``.

    Points are not domain-checked; callers pass domain nodes.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(f, QuaternionField):
        return np.column_stack([evaluate_many(f.scalar, pts), evaluate_many(f.vector, pts)])
    if isinstance(f, VectorField):
        return np.column_stack([evaluate_many(c, pts) for c in f])
    if f.backend == "polynomial":
        return _poly_callable(f.poly)(pts[:, 0], pts[:, 1], pts[:, 2])
    return _trilinear(f.values, f.domain.lattice, pts)


def pointwise_product(p: QuaternionField, q: QuaternionField) -> QuaternionField:
    """
    ``(pq)(x) = p(x) q(x)``: ``{ab - u.v, a v + b u + u x v}``.

    Raises:
        BackendMismatchError: if p and q differ in backend or domain.
    """
    if p.backend != q.backend:
        raise BackendMismatchError(f"Backend mismatch: {p.backend} vs {q.backend}.")
    a, u = p.scalar, p.vector
    b, v = q.scalar, q.vector
    return QuaternionField(a * b - u.dot(v), v * a + u * b + u.cross(v))


@dataclass(frozen=True)
class SupNormReport:
    value: float
    argmax: tuple
    spacing: float
    node_count: int
    backend: str

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "argmax": list(self.argmax),
            "spacing": self.spacing,
            "node_count": self.node_count,
            "backend": self.backend,
        }


def sup_norm_report(
    p: QuaternionField, h_eval: float | None = None, domain: Domain | None = None
) -> SupNormReport:
    """
    ``sup |p(x)|`` over the domain nodes, with the lattice it was taken on.

    Grid fields use their own nodes. Polynomial fields are sampled on the
    domain's lattice with spacing ``h_eval`` (default ``H_EVAL``).

    A polynomial field without a domain of its own is sampled on ``domain``.

    Raises:
        PreconditionError: for a polynomial field with no domain.
    """
    domain = p.domain or domain
    if domain is None:
        raise PreconditionError("sup_norm of a polynomial field needs a domain.", argument="p")
    if p.backend == "polynomial":
        domain = domain.with_spacing(h_eval or H_EVAL)
        nodes = domain.lattice.nodes()
        vals = evaluate_many(p, nodes)
    else:
        nodes = domain.lattice.nodes()
        vals = p.node_values()
    if len(nodes) == 0:
        return SupNormReport(0.0, (), domain.h, 0, p.backend)
    mods = np.linalg.norm(vals, axis=-1)
    k = int(np.argmax(mods))
    return SupNormReport(float(mods[k]), tuple(float(c) for c in nodes[k]), domain.h, len(nodes), p.backend)


def sup_norm(p: QuaternionField, h_eval: float | None = None, domain: Domain | None = None) -> float:
    """``sup_{x in Ω} |p(x)|``; see ``sup_norm_report``."""
    return sup_norm_report(p, h_eval, domain).value


def sample(f, d: Domain):
    """
    Sample a polynomial field on the lattice of ``d``.

    Node values equal the exact polynomial evaluation (rounded to float).
    Grid fields on the same domain are returned unchanged.
    """
    if isinstance(f, QuaternionField):
        return QuaternionField(sample(f.scalar, d), sample(f.vector, d))
    if isinstance(f, VectorField):
        return VectorField(tuple(sample(c, d) for c in f))
    if f.backend == "grid":
        if f.domain != d:
            raise BackendMismatchError("Resampling a grid field onto another lattice is not supported.")
        return f
    return grid_field(f.on_lattice(d), d)


def max_abs(f, margin: float = 2.0) -> float:
    """
    Size of a residual field.

    Polynomial backend: the largest absolute coefficient, so the result is
    exactly 0 iff the field is identically zero. Grid backend: the largest
    absolute node value over domain nodes at distance >= ``margin * h`` from
    the boundary.
    """
    if isinstance(f, QuaternionField):
        return max(max_abs(f.scalar, margin), max_abs(f.vector, margin))
    if isinstance(f, VectorField):
        return max(max_abs(c, margin) for c in f)
    if f.backend == "polynomial":
        coeffs = f.poly.coeffs()
        return float(max(abs(c) for c in coeffs)) if not f.poly.is_zero else 0.0
    sel = f.domain.lattice.interior(margin)
    if not np.any(sel):
        return 0.0
    return float(np.max(np.abs(f.values[sel])))
