"""
Quaternion functionals on pure harmonic fields and point recovery.

A Dirac functional ``θ_m`` evaluates a field at a point m of the closed
domain. It has unit norm and is multiplicative on every axial algebra, and a
panel of three planar algebras with orthonormal axes reads back the
coordinates of m. Functionals are handled extensionally: anything with an
``apply(p) -> Quaternion`` method can be tested, which is how the scan
rejects convex mixtures of Dirac functionals.

Example:
    >>> panel = GeneratorPanel.standard()
    >>> theta = DiracFunctional((0.3, -0.2, 0.5))
    >>> recover_point(panel.read(theta), panel).point  # (0.3, -0.2, 0.5) up to rounding
"""

from __future__ import annotations

import logging
import typing
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .axial_algebras import AnalyticGenerator, AxialElement, algebra_mul, build_planar, planar_frame
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import AxisError, InconsistentFunctionalError, PointOutsideDomainError, PreconditionError
from .fields import (
    Domain,
    QuaternionField,
    constant_quaternion,
    evaluate,
    evaluate_many,
    pointwise_product,
    sup_norm,
)
from .quaternion_core import Quaternion, modulus, qmul

logger = logging.getLogger(__name__)

NORM_TOL = 1e-12


class Functional(typing.Protocol):
    def apply(self, p: QuaternionField) -> Quaternion: ...

    def describe(self) -> str: ...


@dataclass(frozen=True)
class DiracFunctional:
    """
    ``θ_m(p) = p(m)``.

    Args:
        point: m, a 3-vector.
        domain: if given, m must lie in its closure.

    Raises:
        PointOutsideDomainError: if m is outside ``domain``.
    """

    point: tuple
    domain: Domain | None = None

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(self.point))
        if self.domain is not None and not self.domain.contains(self.point, 1e-12):
            raise PointOutsideDomainError(self.point, self.domain)

    def apply(self, p: QuaternionField) -> Quaternion:
        return evaluate(p, self.point)

    @property
    def support(self) -> list[tuple]:
        return [self.point]

    def describe(self) -> str:
        return f"dirac{tuple(float(c) for c in self.point)}"


@dataclass(frozen=True)
class MixtureFunctional:
    """
    Convex combination ``sum w_k θ_{m_k}``.

    Unit-norm and H-linear, but not multiplicative unless all points agree.
    """

    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in m) for m in self.points)
        ws = tuple(float(w) for w in self.weights)
        if not pts or len(pts) != len(ws):
            raise ValueError("Mixture needs one weight per point.")
        if any(w < 0 for w in ws) or abs(sum(ws) - 1) > 1e-12:
            raise ValueError("Mixture weights must be non-negative and sum to 1.")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def average(cls, m1, m2) -> MixtureFunctional:
        return cls((m1, m2), (0.5, 0.5))

    @classmethod
    def from_json(cls, data: dict) -> MixtureFunctional:
        points = data["points"]
        weights = data.get("weights") or [1 / len(points)] * len(points)
        return cls(tuple(points), tuple(weights))

    def apply(self, p: QuaternionField) -> Quaternion:
        total = Quaternion(0.0, (0.0, 0.0, 0.0))
        for m, w in zip(self.points, self.weights):
            total = total + evaluate(p, m) * w
        return total

    @property
    def support(self) -> list[tuple]:
        return list(self.points)

    def describe(self) -> str:
        return f"mixture{list(self.points)}"


def apply(theta: Functional, p: QuaternionField) -> Quaternion:
    """``θ(p)``; for a Dirac functional this is ``evaluate(p, m)``."""
    return theta.apply(p)


def h_action(a: Quaternion, p: QuaternionField) -> QuaternionField:
    """
    Left multiplication by the constant field ``x -> a``.

    Pure harmonic fields stay pure harmonic: ``ε(ap) = -2∇_h a`` vanishes for
    constant a.
    """
    return pointwise_product(constant_quaternion(a, p.backend, p.domain), p)


def unit_field(backend: str = "polynomial", domain: Domain | None = None) -> QuaternionField:
    return constant_quaternion(Quaternion(1, (0, 0, 0)), backend, domain)


def _is_unit(p: QuaternionField) -> bool:
    if not p.vector.is_zero:
        return False
    if p.backend == "polynomial":
        return p.scalar.poly.is_one
    return bool(np.all(p.scalar.values == 1.0))


def functional_norm(
    theta: Functional,
    probe_set: Sequence[QuaternionField],
    sups: Sequence[float] | None = None,
    h_eval: float | None = None,
) -> float:
    """
    ``max_p |θ(p)| / sup|p|`` over the probe set.

    The sup of each probe is its lattice sup norm, raised to ``|p(m)|`` for
    the points m the functional is supported on, so the evaluation inequality
    holds exactly and Dirac functionals report 1.

    Args:
        theta: functional to measure.
        probe_set: nonempty list containing the unit field ``{1, 0}``.
        sups: precomputed lattice sup norms, one per probe.

    Raises:
        PreconditionError: empty probe set, or no unit probe.
    """
    if not probe_set:
        raise PreconditionError("Probe set is empty.", argument="probe_set")
    if not any(_is_unit(p) for p in probe_set):
        raise PreconditionError("Probe set must contain the unit field {1, 0}.", argument="probe_set")
    if sups is None:
        sups = [sup_norm(p, h_eval) if p.domain is not None else 0.0 for p in probe_set]
    support = getattr(theta, "support", [])
    best = 0.0
    for p, s in zip(probe_set, sups):
        s = max([s] + [modulus(evaluate(p, m)) for m in support])
        if s == 0:
            continue
        best = max(best, modulus(theta.apply(p)) / s)
    return best


@dataclass(frozen=True)
class MultiplicativityReport:
    residuals: tuple
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_json(self) -> dict:
        return {"residuals": list(self.residuals), "max_residual": self.max_residual, "tol": self.tol, "pass": self.passed}


def multiplicativity_check(
    theta: Functional,
    algebra_samples: Sequence[tuple],
    tol: float | None = None,
    products: Sequence[AxialElement] | None = None,
) -> MultiplicativityReport:
    """
    ``|θ(yz) - θ(y)θ(z)|`` for each same-axis pair ``(y, z)``.

    Args:
        theta: functional under test.
        algebra_samples: pairs of AxialElements sharing an axis.
        tol: acceptance threshold, default ``Tolerances.multiplicative``.
        products: precomputed ``algebra_mul(y, z)``, one per pair.

    Raises:
        AxisError: if a pair mixes axes.
    """
    tol = DEFAULT_TOLERANCES.multiplicative if tol is None else tol
    residuals = []
    for k, (y, z) in enumerate(algebra_samples):
        if not y.axis.same_as(z.axis):
            raise AxisError(f"Pair {k} mixes axes {y.axis.to_json()} and {z.axis.to_json()}.")
        yz = products[k] if products is not None else algebra_mul(y, z)
        diff = theta.apply(yz.field) - qmul(theta.apply(y.field), theta.apply(z.field))
        residuals.append(float(modulus(diff)))
    return MultiplicativityReport(tuple(residuals), tol)


# ---------------------------------------------------------------- panel


@dataclass(frozen=True, eq=False)
class GeneratorPanel:
    """
    Three planar elements ``f(z) = z`` on orthonormal axes, plus their
    squares for multiplicative readings.
    """

    elements: tuple
    squares: tuple
    frames: tuple = field(repr=False)

    @classmethod
    def from_axes(
        cls,
        axes,
        d: Domain | None = None,
        backend: typing.Literal["polynomial", "grid"] = "polynomial",
    ) -> GeneratorPanel:
        """
        Raises:
            AxisError: unless the three axes are orthonormal within 1e-12.
        """
        axes = [tuple(w) for w in axes]
        gram = np.asarray(axes, dtype=float) @ np.asarray(axes, dtype=float).T
        if len(axes) != 3 or not np.allclose(gram, np.eye(3), rtol=0, atol=1e-12):
            raise AxisError("Panel axes must be three orthonormal vectors.")
        z = AnalyticGenerator.monomial(1)
        elements = tuple(build_planar(w, z, d, backend) for w in axes)
        squares = tuple(algebra_mul(p, p) for p in elements)
        frames = tuple(planar_frame(w) for w in axes)
        return cls(elements, squares, frames)

    @classmethod
    def standard(cls, d: Domain | None = None, backend: str = "polynomial") -> GeneratorPanel:
        return cls.from_axes(np.eye(3).tolist(), d, backend)

    @property
    def axes(self) -> list[tuple]:
        return [p.axis.omega for p in self.elements]

    def read(self, theta: Functional) -> dict[int, Quaternion]:
        """Readings ``θ(p_i)`` keyed by panel index."""
        return {i: theta.apply(p.field) for i, p in enumerate(self.elements)}

    def read_squares(self, theta: Functional) -> dict[int, Quaternion]:
        return {i: theta.apply(p.field) for i, p in enumerate(self.squares)}


@dataclass(frozen=True)
class RecoveryResult:
    point: tuple
    inconsistency: float

    def to_json(self) -> dict:
        return {"point": list(self.point), "inconsistency": self.inconsistency}


def _index(key, panel: GeneratorPanel) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    for i, w in enumerate(panel.axes):
        if np.allclose(np.asarray(key, dtype=float), np.asarray(w, dtype=float), rtol=0, atol=1e-12):
            return i
    raise AxisError(f"Reading for axis {key} is not on the panel.")


def reconcile_point(
    values: Mapping,
    panel: GeneratorPanel,
    square_values: Mapping | None = None,
) -> RecoveryResult:
    """
    Least-squares point from panel readings, with the largest inconsistency.

    Each reading ``{φ, ψω}`` of the element with frame ``(a, b, ω)`` gives
    ``a.m = φ`` and ``b.m = ψ``. Inconsistency covers the residuals of the
    6x3 system, any part of ``Im`` off the axis, and, when square readings
    are given, the defect ``|θ(p^2) - θ(p)^2|``.
    """
    readings = {_index(k, panel): v for k, v in values.items()}
    if set(readings) != {0, 1, 2}:
        raise PreconditionError("Need one reading per panel element.", argument="values")
    rows, rhs, leaks = [], [], []
    for i in range(3):
        a, b, w = panel.frames[i]
        q = readings[i]
        im = np.asarray([float(c) for c in q.im])
        psi = float(im @ w)
        leaks.append(float(np.linalg.norm(im - psi * w)))
        rows += [a, b]
        rhs += [float(q.re), psi]
    A = np.asarray(rows)
    y = np.asarray(rhs)
    m, *_ = np.linalg.lstsq(A, y, rcond=None)
    inconsistency = max([float(np.max(np.abs(A @ m - y)))] + leaks)
    if square_values:
        for k, s in square_values.items():
            i = _index(k, panel)
            q = readings[i]
            defect = Quaternion.from_array(s.as_tuple()) - qmul(
                Quaternion.from_array(q.as_tuple()), Quaternion.from_array(q.as_tuple())
            )
            inconsistency = max(inconsistency, modulus(defect))
    return RecoveryResult(tuple(float(c) for c in m), inconsistency)


def recover_point(
    values: Mapping,
    panel: GeneratorPanel,
    square_values: Mapping | None = None,
    tol: float | None = None,
) -> RecoveryResult:
    """
    Recover m from ``θ_m(p_i)`` for the three panel elements.

    Args:
        values: readings keyed by panel index or by axis vector.
        panel: the generator panel.
        square_values: optional readings on the squared elements; linear
            readings cannot tell a mixture of Dirac functionals from the Dirac
            functional at its barycentre, the squares can.
        tol: max inconsistency, default ``Tolerances.recover``.

    Raises:
        InconsistentFunctionalError: if no single point explains the readings.
    """
    tol = DEFAULT_TOLERANCES.recover if tol is None else tol
    result = reconcile_point(values, panel, square_values)
    if result.inconsistency > tol:
        logger.warning(f"[HSpectrum] readings inconsistent by {result.inconsistency:.3e}")
        raise InconsistentFunctionalError(result.inconsistency, tol, result.point)
    return result


# ---------------------------------------------------------------- scan


@dataclass(frozen=True)
class ScanRow:
    functional: str
    node: tuple | None
    passed: bool
    norm: float
    max_mult_residual: float
    recovered_point: tuple
    inconsistency: float

    def to_json(self) -> dict:
        return {
            "functional": self.functional,
            "node": list(self.node) if self.node is not None else None,
            "passed": self.passed,
            "norm": self.norm,
            "max_mult_residual": self.max_mult_residual,
            "recovered_point": list(self.recovered_point),
            "inconsistency": self.inconsistency,
        }


@dataclass(frozen=True)
class ScanReport:
    rows: tuple

    def points(self) -> list[tuple]:
        """Nodes of the Dirac functionals that passed."""
        return [r.node for r in self.rows if r.passed and r.node is not None]

    def rejected(self) -> list[ScanRow]:
        return [r for r in self.rows if not r.passed]

    def max_recovery_error(self) -> float:
        errs = [
            float(np.max(np.abs(np.asarray(r.recovered_point) - np.asarray(r.node))))
            for r in self.rows
            if r.passed and r.node is not None
        ]
        return max(errs, default=0.0)

    def to_json(self) -> list:
        return [r.to_json() for r in self.rows]


class SpectrumScanner:
    """
    Tests functionals against a panel, caching the panel products and the
    probe sup norms across functionals.
    """

    def __init__(
        self,
        panel: GeneratorPanel,
        probes: Sequence[QuaternionField] | None = None,
        tolerances: Tolerances | None = None,
        domain: Domain | None = None,
    ):
        self.panel = panel
        self.tolerances = tolerances or DEFAULT_TOLERANCES
        first = panel.elements[0]
        self.probes = list(probes) if probes is not None else (
            [unit_field(first.backend, first.domain)] + [p.field for p in panel.elements]
        )
        domain = domain or first.domain
        self.sups = [
            sup_norm(p, self.tolerances.h_eval, domain) if (p.domain or domain) is not None else 0.0
            for p in self.probes
        ]
        self.pairs = [(p, p) for p in panel.elements]

    def test(self, theta: Functional) -> ScanRow:
        norm = functional_norm(theta, self.probes, self.sups)
        mult = multiplicativity_check(theta, self.pairs, self.tolerances.multiplicative, self.panel.squares)
        rec = reconcile_point(self.panel.read(theta), self.panel, self.panel.read_squares(theta))
        passed = abs(norm - 1) <= NORM_TOL and mult.passed
        node = theta.point if isinstance(theta, DiracFunctional) else None
        if not passed:
            logger.warning(
                f"[HSpectrum] rejected {theta.describe()}: norm={norm:.6f} mult={mult.max_residual:.3e}"
            )
        return ScanRow(
            theta.describe(),
            tuple(float(c) for c in node) if node is not None else None,
            passed,
            norm,
            mult.max_residual,
            rec.point,
            rec.inconsistency,
        )


def spectrum_scan(
    panel: GeneratorPanel,
    d: Domain,
    tol: float | None = None,
    functionals: Sequence[Functional] = (),
    nodes=None,
    workers: int = 1,
    tolerances: Tolerances | None = None,
) -> ScanReport:
    """
    Test the Dirac functional of every domain node, plus injected
    functionals, for unit norm and multiplicativity on the panel algebras.

    Args:
        panel: generator panel.
        d: domain whose lattice nodes are scanned.
        tol: multiplicativity threshold override.
        functionals: extra functionals to test (e.g. Dirac mixtures).
        nodes: explicit node list instead of every lattice node.
        workers: thread count; rows keep node order.

    Returns:
        ScanReport: one row per functional. ``points()`` is the accepted set.
    """
    tolerances = tolerances or DEFAULT_TOLERANCES
    if tol is not None:
        tolerances = Tolerances(**{**tolerances.to_json(), "multiplicative": tol})
    scanner = SpectrumScanner(panel, tolerances=tolerances, domain=d)
    pts = d.lattice.nodes() if nodes is None else np.asarray(nodes, dtype=float).reshape(-1, 3)
    thetas = [DiracFunctional(tuple(float(c) for c in m)) for m in pts] + list(functionals)
    logger.info(f"[HSpectrum] scanning {len(thetas)} functionals on {d.describe()} with {workers} worker(s)")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(scanner.test, thetas))
    else:
        rows = tuple(scanner.test(t) for t in thetas)
    return ScanReport(rows)


@dataclass(frozen=True)
class TotalityResult:
    max_modulus: float
    argmax: tuple | None

    @property
    def distinguished(self) -> bool:
        return self.max_modulus > 0

    def to_json(self) -> dict:
        return {"max_modulus": self.max_modulus, "argmax": list(self.argmax) if self.argmax else None}


def totality_check(p: QuaternionField, d: Domain) -> TotalityResult:
    """Largest ``|θ_m(p)|`` over the lattice nodes of d; > 0 for nonzero p."""
    nodes = d.lattice.nodes()
    if len(nodes) == 0:
        return TotalityResult(0.0, None)
    mods = np.linalg.norm(evaluate_many(p, nodes), axis=-1)
    k = int(np.argmax(mods))
    return TotalityResult(float(mods[k]), tuple(float(c) for c in nodes[k]))
