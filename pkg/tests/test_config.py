import json

import pytest

from qharm.config import (
    DEFAULT_TOLERANCES,
    RunConfig,
    Tolerances,
    deep_set,
    load_run_config,
    load_tolerances,
    parse_overrides,
)
from qharm.errors import ConfigError

BALL = {"shape": "ball", "center": [0, 0, 0], "radius": 1, "h": 0.1}


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("QHARM_SEED", raising=False)
    monkeypatch.delenv("QHARM_THREADS", raising=False)


def test_deep_set_creates_intermediate_dicts():
    d = {}
    deep_set(d, "params.scan.enabled", True)
    assert d == {"params": {"scan": {"enabled": True}}}


def test_deep_set_through_scalar():
    with pytest.raises(ConfigError):
        deep_set({"seed": 1}, "seed.value", 2)


def test_parse_overrides():
    parsed = parse_overrides(["seed=3", "params.points=[[0, 0, 0]]", "backend=grid", "params.scan=true"])
    assert parsed == {"seed": 3, "params.points": [[0, 0, 0]], "backend": "grid", "params.scan": True}


@pytest.mark.parametrize("bad", ["seed", "=3"])
def test_parse_overrides_malformed(bad):
    with pytest.raises(ConfigError, match="Malformed"):
        parse_overrides([bad])


def test_load_minimal(write_config):
    cfg = load_run_config(write_config({"command": "recover", "domain": BALL}))
    assert isinstance(cfg, RunConfig)
    assert cfg.backend == "polynomial"
    assert cfg.seed == 0
    assert cfg.threads >= 1


def test_command_from_cli(write_config):
    cfg = load_run_config(write_config({"domain": BALL}), command="max-principle")
    assert cfg.command == "max-principle"


def test_command_mismatch(write_config):
    with pytest.raises(ConfigError, match="not 'recover'"):
        load_run_config(write_config({"command": "build-algebra", "domain": BALL}), command="recover")


def test_overrides_win(write_config):
    path = write_config({"command": "recover", "domain": BALL, "seed": 1, "params": {"count": 5}})
    cfg = load_run_config(path, ["seed=9", "params.count=7", "domain.h=0.2"])
    assert cfg.seed == 9
    assert cfg.params == {"count": 7}
    assert cfg.domain["h"] == 0.2


def test_env_seed(write_config, monkeypatch):
    monkeypatch.setenv("QHARM_SEED", "42")
    cfg = load_run_config(write_config({"command": "recover", "domain": BALL, "seed": 1}))
    assert cfg.seed == 42


def test_env_threads_caps_workers(write_config, monkeypatch):
    monkeypatch.setenv("QHARM_THREADS", "2")
    cfg = load_run_config(write_config({"command": "recover", "domain": BALL, "threads": 8}))
    assert cfg.threads == 2


@pytest.mark.parametrize(
    "data, message",
    [
        ("{not json", "Invalid JSON"),
        ("[1, 2]", "JSON object"),
        ({"command": "recover"}, "domain"),
        ({"command": "plot", "domain": BALL}, "Unknown command"),
        ({"command": "recover", "domain": BALL, "backend": "mesh"}, "Unknown backend"),
        ({"command": "recover", "domain": BALL, "colour": "red"}, "Unknown config keys"),
        ({"command": "recover", "domain": BALL, "seed": -1}, "seed"),
        ({"command": "recover", "domain": BALL, "threads": -2}, "threads"),
    ],
)
def test_invalid_configs(write_config, data, message):
    with pytest.raises(ConfigError, match=message):
        load_run_config(write_config(data))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_run_config(str(tmp_path / "nope.json"))


class TestTolerances:
    def test_defaults(self):
        assert load_tolerances() == DEFAULT_TOLERANCES
        assert DEFAULT_TOLERANCES.recover == 1e-12

    def test_grid_tolerance(self):
        assert Tolerances().grid(0.1, 2.0) == pytest.approx(10 * 0.01 * 2 + 1e-9)

    def test_overrides(self):
        tol = load_tolerances({"grid_factor": 20, "degree_cap": 8.0})
        assert tol.grid_factor == 20.0
        assert tol.degree_cap == 8

    def test_from_run_config(self, write_config):
        cfg = load_run_config(write_config({"command": "recover", "domain": BALL, "tolerances": {"recover": 1e-10}}))
        assert load_tolerances(cfg).recover == 1e-10

    @pytest.mark.parametrize(
        "bad",
        [{"slack": 1.0}, {"polynomial": -1.0}, {"recover": "small"}, {"degree_cap": 0}, {"degree_cap": 17}],
    )
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            load_tolerances(bad)
