"""
The four CLI batteries as plain functions.

Each battery takes a ``RunConfig`` and returns a report dict with a top-level
``"pass"`` flag; the CLI turns that into the exit code. Reports carry no
timing or host data so a fixed seed gives byte-identical output.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .axial_algebras import (
    AxialElement,
    algebra_mul,
    build_planar,
    element_from_json,
    validate_axial,
)
from .config import RunConfig, Tolerances, load_tolerances
from .ensembles import (
    make_rng,
    random_harmonic,
    random_interior_points,
    random_poly,
    random_pure,
    random_quaternion_field,
    random_vector,
    subharmonic_ensemble,
)
from .errors import AxisError, ConfigError, DegreeCapError
from .fields import (
    Domain,
    QuaternionField,
    ScalarField,
    VectorField,
    constant_quaternion,
    max_abs,
    poly_vector,
    pointwise_product,
    sample,
)
from .harmonic_analysis import (
    classify,
    direct_product_residual,
    max_modulus_check,
    residual,
    residual_product_general,
    residual_product_harmonic,
    residual_product_pure,
    subharmonicity_report,
)
from .hspectrum import (
    DiracFunctional,
    GeneratorPanel,
    MixtureFunctional,
    multiplicativity_check,
    reconcile_point,
    spectrum_scan,
)
from .json_io import write_field_csv
from .quaternion_core import Quaternion
from .vector_calculus import F1_NAMES, convergence_rate, div, f1_residuals, identity_battery_F1

logger = logging.getLogger(__name__)


def _pmap(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _param(params: dict, name: str, default, kind=int):
    try:
        return kind(params.get(name, default))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"params.{name} must be {kind.__name__}, got {params.get(name)!r}.") from e


def _points_param(values) -> list[tuple]:
    try:
        points = [tuple(float(c) for c in m) for m in values]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"params.points must be a list of 3-vectors: {e}") from e
    if any(len(m) != 3 for m in points):
        raise ConfigError("params.points must be a list of 3-vectors.")
    return points


def _element_entries(params: dict) -> list[dict]:
    entries = params.get("elements", [])
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"params.elements[{k}] must be an object, got {entry!r}.")
        key = {"planar": "omega", "radial": "pole"}.get(entry.get("kind"))
        if key is None or key not in entry:
            raise ConfigError(f"params.elements[{k}] needs kind 'planar' with 'omega' or 'radial' with 'pole'.")
    return entries


def _product_pairs(params: dict, count: int) -> list[tuple[int, int]]:
    pairs = []
    for pair in params.get("products", []):
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(k, int) and 0 <= k < count for k in pair)
        ):
            raise ConfigError(f"params.products entry {pair!r} must be two element indices below {count}.")
        pairs.append(tuple(pair))
    return pairs


# ---------------------------------------------------------------- identities


def _product_rows(pairs, tol: float) -> dict:
    """Max residual of the general, harmonic and pure product formulas."""
    general = []
    for p, q in pairs:
        eps, dv = direct_product_residual(p, q)
        eps_rhs, dv_rhs = residual_product_general(p, q)
        general.append(max(max_abs(eps - eps_rhs), max_abs(dv - dv_rhs)))
    return {"max_residual": max(general, default=0.0), "tolerance": tol, "pass": max(general, default=0.0) <= tol}


def _reduction_rows(harmonic_pairs, pure_pairs, tol: float) -> dict:
    to_harmonic = []
    for p, q in harmonic_pairs:
        eps_g, dv_g = residual_product_general(p, q)
        eps_h, dv_h = residual_product_harmonic(p, q)
        to_harmonic.append(max(max_abs(eps_g - eps_h), max_abs(dv_g - dv_h)))
    to_pure = []
    for p, q in pure_pairs:
        eps_h, dv_h = residual_product_harmonic(p, q)
        eps_p, dv_p = residual_product_pure(p, q)
        to_pure.append(max(max_abs(eps_h - eps_p), max_abs(dv_h - dv_p)))
    out = {
        "general_to_harmonic": max(to_harmonic, default=0.0),
        "harmonic_to_pure": max(to_pure, default=0.0),
        "tolerance": tol,
    }
    out["pass"] = out["general_to_harmonic"] <= tol and out["harmonic_to_pure"] <= tol
    return out


def mixed_axis_counterexample() -> dict:
    """``ε(pq)`` for ``p = build(e3, z^2)``, ``q = build(e1, z)``; expected ``-4 x2 x3 e3``."""
    p = build_planar((0, 0, 1), [0, 0, 1])
    q = build_planar((1, 0, 0), [0, 1])
    eps = residual(pointwise_product(p.field, q.field))
    expected = poly_vector((0, 0, "-4*x2*x3"))
    mismatch = max_abs(eps - expected)
    return {
        "epsilon": [str(c.poly.as_expr()) for c in eps],
        "mismatch": mismatch,
        "harmonic": classify(pointwise_product(p.field, q.field)).is_harmonic,
        "pass": mismatch == 0,
    }


def _f1_tuple(rng, domain: Domain | None):
    return random_vector(rng, 3, domain), random_vector(rng, 3, domain), random_poly(rng, 3, domain), random_poly(rng, 3, domain)


def verify_identities(cfg: RunConfig) -> dict:
    """
    Polynomial backend: the six product rules and the product-residual
    formulas over a seeded ensemble, plus the reduction chain and the
    mixed-axis counterexample; all residuals must be exactly zero.

    Grid backend: the same product rules on seeded cubic fields sampled at h
    and h/2; each residual must shrink by a factor in [3, 5].
    """
    tolerances = load_tolerances(cfg)
    params = cfg.params
    domain = Domain.from_json(cfg.domain)
    rng = make_rng(cfg.seed)
    if cfg.backend == "grid":
        return _verify_identities_grid(cfg, domain, rng, tolerances)

    count = _param(params, "count", 200)
    pairs_count = _param(params, "pairs", 50)
    tuples = [_f1_tuple(rng, None) for _ in range(count)]
    reports = _pmap(lambda t: identity_battery_F1(*t, tolerances=tolerances), tuples, cfg.threads)
    f1 = {
        name: {
            "max_residual": max((r[name].max_residual for r in reports), default=0.0),
            "tolerance": tolerances.polynomial,
        }
        for name in F1_NAMES
    }
    for row in f1.values():
        row["pass"] = row["max_residual"] <= row["tolerance"]

    product_pairs = [(random_quaternion_field(rng), random_quaternion_field(rng)) for _ in range(count)]
    harmonic_pairs = [(random_harmonic(rng), random_harmonic(rng)) for _ in range(pairs_count)]
    pure_pairs = [(random_pure(rng), random_pure(rng)) for _ in range(pairs_count)]

    report = {
        "command": "verify-identities",
        "backend": "polynomial",
        "seed": cfg.seed,
        "count": count,
        "f1": f1,
        "product": _product_rows(product_pairs, tolerances.polynomial),
        "reduction": _reduction_rows(harmonic_pairs, pure_pairs, tolerances.polynomial),
        "counterexample": mixed_axis_counterexample(),
    }
    report["pass"] = (
        all(row["pass"] for row in f1.values())
        and report["product"]["pass"]
        and report["reduction"]["pass"]
        and report["counterexample"]["pass"]
    )
    logger.info(f"[VecCalc] verify-identities (polynomial, {count} tuples): pass={report['pass']}")
    return report


def _verify_identities_grid(cfg: RunConfig, domain: Domain, rng, tolerances: Tolerances) -> dict:
    count = _param(cfg.params, "count", 3)
    fine = domain.with_spacing(domain.h / 2)
    rows = {name: [] for name in F1_NAMES}
    for _ in range(count):
        u, v, a, b = _f1_tuple(rng, None)
        coarse_res = f1_residuals(*(sample(f, domain) for f in (u, v, a, b)))
        fine_res = f1_residuals(*(sample(f, fine) for f in (u, v, a, b)))
        for name in F1_NAMES:
            rows[name].append(convergence_rate(coarse_res[name], fine_res[name]))
    f1 = {}
    for name, results in rows.items():
        f1[name] = {
            "runs": [r.to_json() for r in results],
            "pass": all(r.second_order(floor=tolerances.grid_floor) for r in results),
        }
    report = {
        "command": "verify-identities",
        "backend": "grid",
        "seed": cfg.seed,
        "count": count,
        "h": [domain.h, fine.h],
        "f1": f1,
    }
    report["pass"] = all(row["pass"] for row in f1.values())
    logger.info(f"[VecCalc] verify-identities (grid, {count} tuples): pass={report['pass']}")
    return report


# ---------------------------------------------------------------- algebras


def _radial_convergence(entry: dict, domain: Domain, degree_cap: int) -> dict:
    """ε and ``div Im p - 2ψ/r`` of a radial element at h and h/2."""
    fine = domain.with_spacing(domain.h / 2)
    runs = []
    for d in (domain, fine):
        p = element_from_json(entry, d, "grid", degree_cap)
        inv_r = ScalarField("grid", d, values=1.0 / p.tau.values)
        runs.append((residual(p.field), div(p.field.vector) - p.psi * inv_r * 2))
    eps = convergence_rate(runs[0][0], runs[1][0])
    dv = convergence_rate(runs[0][1], runs[1][1])
    return {"epsilon": eps.to_json(), "div_im": dv.to_json(), "pass": eps.second_order() and dv.second_order()}


def build_algebra(cfg: RunConfig) -> dict:
    """
    Build the configured elements, validate each, and check every requested
    product.

    ``params``:
        elements: list of ``{"kind", "omega" | "pole", "coeffs"}``.
        products: index pairs; same-axis pairs must close in the algebra,
            mixed-axis pairs are reported with their measured residual.
        convergence: also run radial elements at h/2.
        dump_csv: directory for grid field dumps.
    """
    tolerances = load_tolerances(cfg)
    params = cfg.params
    domain = Domain.from_json(cfg.domain)
    entries = _element_entries(params)
    elements: list[AxialElement] = []
    rows = []
    for entry in entries:
        backend = "grid" if entry.get("kind") == "radial" else cfg.backend
        try:
            p = element_from_json(entry, domain, backend, tolerances.degree_cap)
        except (AxisError, DegreeCapError) as e:
            logger.warning(f"[Axial] element rejected: {e}")
            rows.append({"element": entry, "error": str(e), "pass": False})
            elements.append(None)
            continue
        elements.append(p)
        report = validate_axial(p, tolerances=tolerances)
        cls = classify(p.field, tolerances=tolerances)
        expected = "pure_harmonic" if p.axis.kind == "planar" else "harmonic"
        row = {
            "element": entry,
            "validation": report.to_json(),
            "class": cls.classification,
            "pass": report.passed and cls.classification == expected,
        }
        if p.axis.kind == "radial" and params.get("convergence", False):
            row["convergence"] = _radial_convergence(entry, domain, tolerances.degree_cap)
            row["pass"] = row["pass"] and row["convergence"]["pass"]
        rows.append(row)

    products = []
    for i, j in _product_pairs(params, len(entries)):
        p, q = elements[i], elements[j]
        if p is None or q is None:
            products.append({"pair": [i, j], "error": "factor was rejected", "pass": False})
            continue
        if p.axis.same_as(q.axis):
            try:
                pq = algebra_mul(p, q, tolerances.degree_cap)
            except DegreeCapError as e:
                logger.warning(f"[Axial] product {i}*{j} rejected: {e}")
                products.append({"pair": [i, j], "same_axis": True, "error": str(e), "pass": False})
                continue
            direct = pointwise_product(p.field, q.field)
            mismatch = max_abs(pq.field - direct, margin=0)
            cls = classify(pq.field, tolerances=tolerances)
            ok = cls.classification == classify(p.field, tolerances=tolerances).classification
            tol = tolerances.polynomial if pq.backend == "polynomial" else tolerances.grid_floor
            products.append({
                "pair": [i, j],
                "same_axis": True,
                "mismatch": mismatch,
                "class": cls.classification,
                "pass": ok and mismatch <= tol,
            })
        else:
            cls = classify(pointwise_product(p.field, q.field), tolerances=tolerances)
            products.append({
                "pair": [i, j],
                "same_axis": False,
                "epsilon_max": cls.epsilon_max,
                "class": cls.classification,
                "pass": True,
            })

    dump = params.get("dump_csv")
    if dump:
        os.makedirs(dump, exist_ok=True)
        for k, p in enumerate(elements):
            if p is None:
                continue
            f = p.field if p.backend == "grid" else sample(p.field, domain)
            write_field_csv(os.path.join(dump, f"element_{k}_scalar.csv"), f.scalar)
            write_field_csv(os.path.join(dump, f"element_{k}_vector.csv"), f.vector)

    report = {
        "command": "build-algebra",
        "backend": cfg.backend,
        "domain": domain.to_json(),
        "elements": rows,
        "products": products,
    }
    report["pass"] = all(r["pass"] for r in rows) and all(r["pass"] for r in products)
    logger.info(f"[Axial] build-algebra: {len(rows)} elements, {len(products)} products, pass={report['pass']}")
    return report


# ---------------------------------------------------------------- max principle


def _constant_field(domain: Domain, c: float) -> QuaternionField:
    return constant_quaternion(Quaternion(c, (0, 0, 0)), "grid", domain)


def _bump_field(domain: Domain) -> QuaternionField:
    x = domain.lattice.coords - domain.centroid
    r2 = np.sum(x * x, axis=-1)
    scale = (domain.radius if domain.shape == "ball" else float(np.max(np.abs(x)))) ** 2
    zero = ScalarField("grid", domain, values=np.zeros(domain.lattice.shape))
    return QuaternionField(ScalarField("grid", domain, values=1 - r2 / scale), VectorField((zero, zero, zero)))


def max_principle(cfg: RunConfig) -> dict:
    """
    Maximum-modulus principle and subharmonicity of ``|p|^2`` over a seeded
    planar ensemble, plus fixtures: a constant field (``M_int = M_bd``) and
    the non-harmonic bump ``{1 - |x - c|^2 / R^2, 0}`` (expected to fail).

    With the polynomial backend the ensemble is built exactly on coordinate
    axes, its subharmonicity identity is checked exactly, and the fields are
    sampled onto the grid for the max principle.
    """
    tolerances = load_tolerances(cfg)
    params = cfg.params
    domain = Domain.from_json(cfg.domain)
    rng = make_rng(cfg.seed)
    count = _param(params, "count", 50)
    ensemble = subharmonic_ensemble(rng, count, domain, cfg.backend)

    def run(p: AxialElement) -> dict:
        grid = p.field if p.backend == "grid" else sample(p.field, domain)
        mm = max_modulus_check(grid, tolerances=tolerances)
        sub = subharmonicity_report(p, tolerances=tolerances)
        return {
            "axis": p.axis.to_json(),
            "coeffs": p.generator.to_json(),
            "max_principle": mm.to_json(),
            "subharmonic": sub.to_json(),
            "pass": mm.passed and sub.passed,
        }

    rows = _pmap(run, ensemble, cfg.threads)
    fixtures = []
    if params.get("constant", True):
        mm = max_modulus_check(_constant_field(domain, _param(params, "constant_value", 2.0, float)), tolerances=tolerances)
        fixtures.append({"name": "constant", "expected": "pass", "report": mm.to_json(), "pass": mm.passed})
    if params.get("bump", True):
        mm = max_modulus_check(_bump_field(domain), tolerances=tolerances)
        fixtures.append({"name": "bump", "expected": "fail", "report": mm.to_json(), "pass": not mm.passed})
    report = {
        "command": "max-principle",
        "backend": cfg.backend,
        "seed": cfg.seed,
        "domain": domain.to_json(),
        "elements": rows,
        "fixtures": fixtures,
    }
    report["pass"] = all(r["pass"] for r in rows) and all(f["pass"] for f in fixtures)
    logger.info(f"[Harmonic] max-principle: {count} elements, pass={report['pass']}")
    return report


# ---------------------------------------------------------------- recovery


def recover(cfg: RunConfig) -> dict:
    """
    Round-trip seeded interior points through the standard panel, test
    adversarial Dirac mixtures, and optionally scan every lattice node.

    ``params``:
        count: number of random points (default 100).
        points: explicit point list, replaces the random draw.
        adversarial: list of ``{"points": [...], "weights": [...]}``.
        scan: run ``spectrum_scan`` over the domain lattice.
    """
    tolerances = load_tolerances(cfg)
    params = cfg.params
    domain = Domain.from_json(cfg.domain)
    rng = make_rng(cfg.seed)
    panel = GeneratorPanel.standard(domain, "polynomial")
    if "points" in params:
        points = _points_param(params["points"])
    else:
        points = random_interior_points(rng, domain, _param(params, "count", 100))

    def run(m) -> dict:
        theta = DiracFunctional(m, domain)
        rec = reconcile_point(panel.read(theta), panel, panel.read_squares(theta))
        err = float(np.max(np.abs(np.asarray(rec.point) - np.asarray(m))))
        return {
            "point": list(m),
            "recovered": list(rec.point),
            "error": err,
            "inconsistency": rec.inconsistency,
            "pass": err <= tolerances.recover and rec.inconsistency <= tolerances.recover,
        }

    rows = _pmap(run, points, cfg.threads)

    adversarial = []
    for k, entry in enumerate(params.get("adversarial", [])):
        try:
            theta = MixtureFunctional.from_json(entry)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"params.adversarial[{k}] is not a valid mixture: {e}") from e
        mult = multiplicativity_check(theta, [(p, p) for p in panel.elements], tolerances.multiplicative, panel.squares)
        rec = reconcile_point(panel.read(theta), panel, panel.read_squares(theta))
        flagged = rec.inconsistency > tolerances.recover or not mult.passed
        if flagged:
            logger.warning(f"[HSpectrum] {theta.describe()} is not a spectrum point")
        adversarial.append({
            "functional": theta.describe(),
            "max_mult_residual": mult.max_residual,
            "inconsistency": rec.inconsistency,
            "flagged": flagged,
            "warning": "not a spectrum point" if flagged else None,
            "pass": flagged,
        })

    report = {
        "command": "recover",
        "seed": cfg.seed,
        "domain": domain.to_json(),
        "points": rows,
        "max_error": max((r["error"] for r in rows), default=0.0),
        "adversarial": adversarial,
    }
    if params.get("scan", False):
        scan = spectrum_scan(panel, domain, workers=cfg.threads, tolerances=tolerances)
        report["scan"] = {
            "nodes": domain.lattice.node_count,
            "accepted": len(scan.points()),
            "max_recovery_error": scan.max_recovery_error(),
            "rejected": [r.to_json() for r in scan.rejected()],
            "pass": len(scan.points()) == domain.lattice.node_count and scan.max_recovery_error() <= tolerances.recover,
        }
    report["pass"] = (
        all(r["pass"] for r in rows)
        and all(a["pass"] for a in adversarial)
        and report.get("scan", {}).get("pass", True)
    )
    logger.info(f"[HSpectrum] recover: {len(rows)} points, max error {report['max_error']:.3e}")
    return report


BATTERIES = {
    "verify-identities": verify_identities,
    "build-algebra": build_algebra,
    "max-principle": max_principle,
    "recover": recover,
}


def run_battery(cfg: RunConfig) -> dict:
    return BATTERIES[cfg.command](cfg)
