import json

import pytest

from qharm.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main, parse_args

BALL = {"shape": "ball", "center": [0, 0, 0], "radius": 1, "h": 0.25}


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("QHARM_SEED", raising=False)
    monkeypatch.setenv("QHARM_THREADS", "1")


@pytest.fixture
def config(tmp_path):
    def _write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


def test_parser():
    args = parse_args(["recover", "--config", "run.json", "-vv", "seed=3", "--out", "r.json", "backend=grid"])
    assert args.command == "recover"
    assert args.verbose == 2
    assert args.overrides == ["seed=3", "backend=grid"]
    assert args.out == "r.json"


def test_unknown_command():
    with pytest.raises(SystemExit) as info:
        main(["plot", "--config", "run.json"])
    assert info.value.code == 2


def test_recover_writes_report(config, tmp_path):
    path = config({"command": "recover", "domain": BALL, "seed": 1, "params": {"count": 10}})
    out = tmp_path / "report.json"
    assert main(["recover", "--config", path, "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["pass"] is True
    assert len(report["points"]) == 10


def test_report_to_stdout(config, capsys):
    path = config({"command": "recover", "domain": BALL, "params": {"points": []}})
    assert main(["recover", "--config", path]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["points"] == []


def test_out_from_config(config, tmp_path):
    out = tmp_path / "from_config.json"
    path = config({"command": "recover", "domain": BALL, "out": str(out), "params": {"points": [[0, 0, 0]]}})
    assert main(["recover", "--config", path]) == EXIT_OK
    assert out.exists()


def test_failed_check_exits_1(config, tmp_path):
    params = {"elements": [{"kind": "radial", "pole": [0, 0, 0], "coeffs": [[0, 0], [1, 0]]}]}
    path = config({"command": "build-algebra", "domain": BALL, "params": params})
    assert main(["build-algebra", "--config", path, "--out", str(tmp_path / "r.json")]) == EXIT_FAILED


def test_verify_identities_polynomial(config, tmp_path):
    path = config({"command": "verify-identities", "domain": BALL, "seed": 1, "params": {"count": 3, "pairs": 2}})
    assert main(["verify-identities", "--config", path, "--out", str(tmp_path / "r.json")]) == EXIT_OK


@pytest.mark.parametrize(
    "data",
    [
        "{ malformed",
        {"command": "recover"},
        {"command": "recover", "domain": {"shape": "torus", "h": 0.1}},
        {"command": "recover", "domain": BALL, "backend": "mesh"},
    ],
)
def test_config_errors_exit_2(config, capsys, data):
    assert main(["recover", "--config", config(data)]) == EXIT_CONFIG
    assert "qharm:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "command, data",
    [
        ("recover", {"domain": dict(BALL, radius="big")}),
        ("recover", {"domain": BALL, "params": {"count": "many"}}),
        ("recover", {"domain": BALL, "params": {"points": [[0, 0]]}}),
        ("recover", {"domain": BALL, "params": {"points": [], "adversarial": [{"weights": [1]}]}}),
        ("build-algebra", {"domain": BALL, "params": {"elements": [{"kind": "planar"}]}}),
        ("build-algebra", {"domain": BALL, "params": {"elements": [], "products": [[0, 1]]}}),
    ],
)
def test_bad_params_exit_2(config, capsys, command, data):
    assert main([command, "--config", config(data)]) == EXIT_CONFIG
    assert "qharm: invalid configuration" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["recover", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert "does not exist" in capsys.readouterr().err


def test_overrides_reach_the_run(config, tmp_path):
    path = config({"command": "recover", "domain": BALL, "params": {"count": 50}})
    out = tmp_path / "r.json"
    assert main(["recover", "--config", path, "--out", str(out), "params.count=4"]) == EXIT_OK
    assert len(json.loads(out.read_text(encoding="utf-8"))["points"]) == 4


def test_env_seed_changes_points(config, tmp_path, monkeypatch):
    path = config({"command": "recover", "domain": BALL, "seed": 1, "params": {"count": 3}})
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    main(["recover", "--config", path, "--out", str(first)])
    monkeypatch.setenv("QHARM_SEED", "2")
    main(["recover", "--config", path, "--out", str(second)])
    a = json.loads(first.read_text(encoding="utf-8"))
    b = json.loads(second.read_text(encoding="utf-8"))
    assert a["seed"] == 1 and b["seed"] == 2
    assert a["points"] != b["points"]


@pytest.mark.parametrize(
    "command, params",
    [
        ("recover", {"count": 5}),
        ("max-principle", {"count": 2}),
        ("verify-identities", {"count": 2, "pairs": 2}),
    ],
)
def test_reports_are_byte_identical(config, tmp_path, command, params):
    path = config({"command": command, "domain": BALL, "seed": 7, "params": params})
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    main([command, "--config", path, "--out", str(first)])
    main([command, "--config", path, "--out", str(second)])
    assert first.read_bytes() == second.read_bytes()
