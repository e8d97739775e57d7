"""
Geometric quaternion arithmetic.

A geometric quaternion is a pair ``{re, im}`` of a real scalar and a 3-vector
in a fixed right-handed orthonormal frame e1, e2, e3. The identification
``{a, A e1 + B e2 + C e3} <-> a + A i + B j + C k`` is hard-coded, so the
product below reproduces the table ``ij = k, jk = i, ki = j``.

Components may be ``int``, ``fractions.Fraction`` or ``float``: the exact
variant is what the polynomial backend uses to check identities with zero
residual; the float variant is what grid fields land in.

Example:
    >>> i = Quaternion(0, (1, 0, 0))
    >>> j = Quaternion(0, (0, 1, 0))
    >>> qmul(i, j)
    Quaternion(re=0, im=(0, 0, 1))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

Scalar = int | Fraction | float


def _cross(u, v) -> tuple:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


@dataclass(frozen=True)
class Quaternion:
    """
    Pointwise value type: a scalar ``re`` and a 3-vector ``im``.

    Args:
        re: real part.
        im: imaginary part as a 3-sequence; stored as a tuple.
    """

    re: Scalar = 0
    im: tuple = (0, 0, 0)

    def __post_init__(self):
        im = tuple(self.im)
        if len(im) != 3:
            raise ValueError(f"Imaginary part must have 3 components, got {len(im)}.")
        object.__setattr__(self, "im", im)

    @classmethod
    def real(cls, value: Scalar) -> Quaternion:
        return cls(value, (0, 0, 0))

    @classmethod
    def from_array(cls, arr) -> Quaternion:
        """Build from a length-4 sequence ``(re, i, j, k)``."""
        re, a, b, c = (float(x) for x in arr)
        return cls(re, (a, b, c))

    def as_tuple(self) -> tuple:
        return (self.re, *self.im)

    def is_exact(self) -> bool:
        return all(isinstance(x, (int, Fraction)) for x in self.as_tuple())

    def __add__(self, other: Quaternion) -> Quaternion:
        if not isinstance(other, Quaternion):
            return NotImplemented
        return Quaternion(self.re + other.re, tuple(a + b for a, b in zip(self.im, other.im)))

    def __sub__(self, other: Quaternion) -> Quaternion:
        if not isinstance(other, Quaternion):
            return NotImplemented
        return Quaternion(self.re - other.re, tuple(a - b for a, b in zip(self.im, other.im)))

    def __neg__(self) -> Quaternion:
        return Quaternion(-self.re, tuple(-a for a in self.im))

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return qmul(self, other)
        if isinstance(other, Real):
            return Quaternion(self.re * other, tuple(a * other for a in self.im))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Real):
            return self.__mul__(other)
        return NotImplemented

    def to_json(self) -> dict:
        return {"re": _json_number(self.re), "im": [_json_number(a) for a in self.im]}

    @classmethod
    def from_json(cls, data: dict) -> Quaternion:
        return cls(data["re"], tuple(data["im"]))


def _json_number(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


def qmul(p: Quaternion, q: Quaternion) -> Quaternion:
    """
    Quaternion product ``{ab - u.v, a v + b u + u x v}`` for ``p = {a, u}``,
    ``q = {b, v}``.

    Example:
        >>> qmul(Quaternion(2, (0, 0, 0)), Quaternion(3, (1, 1, 1)))
        Quaternion(re=6, im=(2, 2, 2))
    """
    u, v = p.im, q.im
    w = _cross(u, v)
    return Quaternion(
        p.re * q.re - _dot(u, v),
        tuple(p.re * v[i] + q.re * u[i] + w[i] for i in range(3)),
    )


def conj(q: Quaternion) -> Quaternion:
    return Quaternion(q.re, tuple(-a for a in q.im))


def modulus_squared(q: Quaternion) -> Scalar:
    """``|q|^2``, exact for exact components."""
    return q.re * q.re + _dot(q.im, q.im)


def modulus(q: Quaternion) -> float:
    return math.sqrt(modulus_squared(q))


def inverse(q: Quaternion) -> Quaternion:
    """
    Multiplicative inverse ``conj(q) / |q|^2``.

    Raises:
        ZeroDivisionError: if q is zero.
    """
    n2 = modulus_squared(q)
    if n2 == 0:
        raise ZeroDivisionError("Zero quaternion has no inverse.")
    if isinstance(n2, int):
        n2 = Fraction(n2)
    c = conj(q)
    return Quaternion(c.re / n2, tuple(a / n2 for a in c.im))


def commutes(p: Quaternion, q: Quaternion, tol: float = 0.0) -> bool:
    """
    True iff ``|Im p x Im q| <= tol``.

    Two quaternions commute exactly when their imaginary parts are linearly
    dependent; real quaternions commute with everything.

    Raises:
        ValueError: if tol is negative.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative.")
    w = _cross(p.im, q.im)
    if tol == 0:
        return all(c == 0 for c in w)
    return math.sqrt(_dot(w, w)) <= tol


def is_imaginary(q: Quaternion) -> bool:
    return q.re == 0


def to_complex(q: Quaternion, e) -> complex:
    """
    Read a member of the commutative subalgebra ``A_e = {phi, psi e}`` as
    ``phi + psi i``.

    Raises:
        ValueError: if ``Im q`` is not parallel to ``e``.
    """
    if not commutes(q, Quaternion(0, tuple(e)), tol=1e-12 * max(1.0, modulus(q))):
        raise ValueError("Quaternion is not in the subalgebra of the given axis.")
    return complex(float(q.re), float(_dot(q.im, e)))


def from_complex(w: complex, e) -> Quaternion:
    return Quaternion(w.real, tuple(w.imag * c for c in e))


# Batched kernels over (..., 4) arrays laid out as (re, i, j, k).

def qmul_array(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorized ``qmul`` over the last axis of two broadcastable arrays."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a, u = p[..., 0], p[..., 1:]
    b, v = q[..., 0], q[..., 1:]
    out = np.empty(np.broadcast_shapes(p.shape, q.shape), dtype=float)
    out[..., 0] = a * b - np.sum(u * v, axis=-1)
    out[..., 1:] = a[..., None] * v + b[..., None] * u + np.cross(u, v)
    return out


def conj_array(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] *= -1.0
    return out


def modulus_array(q: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)
