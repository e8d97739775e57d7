"""
Run configuration: a JSON file, layered with ``key.path=value`` overrides and
environment variables.

Sources are merged in priority order, later ones winning:

1. the JSON config file,
2. command line overrides (``tolerances.grid_factor=20``),
3. environment: ``QHARM_SEED`` overrides the seed, ``QHARM_THREADS`` caps the
   worker count.

Example:
    # run.json: {"command": "recover", "domain": {...}, "seed": 1}
    cfg = load_run_config("run.json", ["params.count=10"])
    tol = load_tolerances(cfg)
"""

from __future__ import annotations

import json
import logging
import os
import typing
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .json_io import read_json

logger = logging.getLogger(__name__)

COMMANDS = ("verify-identities", "build-algebra", "max-principle", "recover")
BACKENDS = ("polynomial", "grid")

ENV_THREADS = "QHARM_THREADS"
ENV_SEED = "QHARM_SEED"

# hard ceiling of polynomial degrees; configs may only lower it
DEGREE_CAP = 16


@dataclass(frozen=True)
class Tolerances:
    """
    Numerical tolerances shared by every battery.

    Attributes:
        polynomial: classification tolerance on the exact backend.
        grid_factor: C in the grid tolerance ``C * h**2 * S + grid_floor``.
        grid_floor: absolute floor added to every grid tolerance.
        h_eval: lattice spacing used to take sup norms of polynomial fields.
        degree_cap: maximum total degree of polynomial fields.
        max_principle_slack: slack of the max principle check, in units of h.
        subharmonic_floor: lower bound accepted for the grid Laplacian of |p|^2.
        recover: max inconsistency accepted by point recovery.
        multiplicative: max multiplicativity residual accepted for a functional.
    """

    polynomial: float = 1e-10
    grid_factor: float = 10.0
    grid_floor: float = 1e-9
    h_eval: float = 0.05
    degree_cap: int = DEGREE_CAP
    max_principle_slack: float = 10.0
    subharmonic_floor: float = 1e-8
    recover: float = 1e-12
    multiplicative: float = 1e-9

    def grid(self, h: float, scale: float) -> float:
        """Grid tolerance for spacing h and second-difference scale S."""
        return self.grid_factor * h * h * scale + self.grid_floor

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class RunConfig:
    command: str
    domain: dict
    backend: typing.Literal["polynomial", "grid"] = "polynomial"
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    params: dict = field(default_factory=dict)
    threads: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def deep_set(dct: dict, key: str, value, separator: str = "."):
    """
    Set ``value`` at a dotted key path, creating intermediate dicts.

    Raises:
        ConfigError: if the path runs through a non-dict value.
    """
    keys = key.split(separator)
    for k in keys[:-1]:
        if k not in dct:
            dct[k] = {}
        elif not isinstance(dct[k], dict):
            raise ConfigError(f"Cannot set '{key}': '{k}' is not a mapping.")
        dct = dct[k]
    dct[keys[-1]] = value


def parse_overrides(args: typing.Iterable[str]) -> dict:
    """
    Parse ``key.path=value`` strings into a flat dict.

    Values are read as JSON when possible (``3``, ``true``, ``[1, 2]``) and
    kept as plain strings otherwise.
    """
    parsed = {}
    for arg in args:
        if "=" not in arg:
            raise ConfigError(f"Malformed override '{arg}', expected key=value.")
        key, raw = arg.split("=", 1)
        if not key:
            raise ConfigError(f"Malformed override '{arg}', empty key.")
        try:
            parsed[key] = json.loads(raw)
        except json.JSONDecodeError:
            parsed[key] = raw
    return parsed


def deep_overwrite_with_flatten_dict(target: dict, source: dict):
    for k, v in source.items():
        deep_set(target, k, v)


def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got '{raw}'.") from e


def load_run_config(
    path: str | os.PathLike,
    overrides: typing.Iterable[str] = (),
    command: str | None = None,
) -> RunConfig:
    """
    Load and validate a run configuration.

    Args:
        path: JSON config file.
        overrides: ``key.path=value`` strings applied after the file.
        command: command name from the CLI; fills in or must match the
            file's ``command``.

    Returns:
        RunConfig: validated configuration.

    Raises:
        ConfigError: missing file, invalid JSON, unknown command or backend,
            malformed override.
    """
    if not os.path.exists(path):
        raise ConfigError(f"Config file '{path}' does not exist.")
    try:
        data = read_json(path)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in '{path}': {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config '{path}' must hold a JSON object.")

    deep_overwrite_with_flatten_dict(data, parse_overrides(overrides))
    if command is not None:
        if data.get("command", command) != command:
            raise ConfigError(f"Config is for '{data['command']}', not '{command}'.")
        data["command"] = command

    seed = _env_int(ENV_SEED)
    if seed is not None:
        logger.debug(f"[CLI] seed overridden by {ENV_SEED}={seed}")
        data["seed"] = seed

    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}.")
    if data.get("command") not in COMMANDS:
        raise ConfigError(f"Unknown command '{data.get('command')}'; expected one of {', '.join(COMMANDS)}.")
    if "domain" not in data or not isinstance(data["domain"], dict):
        raise ConfigError("Config needs a 'domain' object.")
    if data.get("backend", "polynomial") not in BACKENDS:
        raise ConfigError(f"Unknown backend '{data['backend']}'.")
    if not isinstance(data.get("seed", 0), int) or not 0 <= data.get("seed", 0) < 2**64:
        raise ConfigError("seed must be an integer in [0, 2**64).")

    cfg = RunConfig(**data)
    if not isinstance(cfg.threads, int) or cfg.threads < 0:
        raise ConfigError("threads must be a non-negative integer (0 = one per CPU).")
    workers = cfg.threads or os.cpu_count() or 1
    cap = _env_int(ENV_THREADS)
    if cap is not None:
        workers = min(workers, max(1, cap))
    cfg.threads = workers
    return cfg


def load_tolerances(config: RunConfig | dict | None = None) -> Tolerances:
    """
    Merge tolerance overrides onto the defaults.

    Raises:
        ConfigError: on an unknown tolerance name, a negative value, or a
            ``degree_cap`` outside ``[1, DEGREE_CAP]``.
    """
    overrides = config.tolerances if isinstance(config, RunConfig) else (config or {})
    known = {f.name: f for f in fields(Tolerances)}
    values = {}
    for name, value in overrides.items():
        if name not in known:
            raise ConfigError(f"Unknown tolerance '{name}'.")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
            raise ConfigError(f"Tolerance '{name}' must be a non-negative number.")
        values[name] = int(value) if name == "degree_cap" else float(value)
    if not 1 <= values.get("degree_cap", DEGREE_CAP) <= DEGREE_CAP:
        raise ConfigError(f"degree_cap must be between 1 and {DEGREE_CAP}.")
    return Tolerances(**values)


DEFAULT_TOLERANCES = Tolerances()
