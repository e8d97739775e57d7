import csv
import json

import numpy as np


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def read_json(file_path) -> dict | list:
    with open(file_path, "r", encoding="utf-8") as f:
        return json.load(f)


def dumps_report(data: dict | list) -> str:
    """Serialize a report; keys are sorted so seeded runs are byte-identical."""
    return json.dumps(data, ensure_ascii=False, indent=4, sort_keys=True, default=_default)


def write_json(file_path, data: dict | list):
    with open(file_path, "w", encoding="utf-8") as f:
        f.write(dumps_report(data))
        f.write("\n")


def write_field_csv(file_path, f):
    """
    Dump a grid ScalarField or VectorField over its domain nodes.

    Columns are ``x1,x2,x3,value,boundary`` or ``x1,x2,x3,v1,v2,v3,boundary``,
    rows in row-major node order.
    """
    lattice = f.domain.lattice
    nodes = lattice.nodes()
    vals = np.atleast_2d(f.node_values().T).T
    flags = lattice.boundary[lattice.mask].astype(int)
    header = ["x1", "x2", "x3"] + (["value"] if vals.shape[1] == 1 else ["v1", "v2", "v3"]) + ["boundary"]
    with open(file_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for x, v, b in zip(nodes, vals, flags):
            writer.writerow([repr(float(c)) for c in x] + [repr(float(c)) for c in v] + [int(b)])
