import csv
import json

import pytest

from semiflow_lab import cli, config
from semiflow_lab.errors import ConfigError


def write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_reference_scenario_loads():
    sc = config.reference()
    assert sc.numerics["N"] == 64 and sc.numerics["eps"] == 0.1
    assert sc.seed == 0
    assert sc.echo()["observable"]["margin"] == 0.25


@pytest.mark.parametrize("data, field, text", [
    ({"model": {"name": "geometric", "branches": 40}, "numerics": {"delta": 0.05, "eps": 0.1}},
     "numerics.delta", "delta > eps"),
    ({"numerics": {"eta": 1.0}}, "numerics.eta", "Hölder exponent"),
    ({"observable": {"margin": 0.0}}, "observable.margin", "support margin"),
    ({"roof": {"name": "affine", "offset": 1.9, "slope": 1.0}}, "roof", "infimum"),
    ({"numerics": {"h_u": 0.3}}, "numerics.h_u", "1/h_u"),
    ({"seed": -1}, "seed", "64-bit"),
    ({"invert": {"b_max": 20}}, "invert.b_max", "50"),
    ({"numerics": {"colour": 1}}, "numerics.colour", "unknown field"),
])
def test_invalid_scenarios_name_the_field(data, field, text):
    with pytest.raises(ConfigError) as err:
        config.validate(data)
    assert err.value.field == field
    assert text in str(err.value)


def test_distinct_messages():
    msgs = set()
    for data in ({"numerics": {"eta": 0.0}}, {"observable": {"margin": 1.5}},
                 {"roof": {"name": "constant", "value": 1.5}}):
        with pytest.raises(ConfigError) as err:
            config.validate(data)
        msgs.add(str(err.value))
    assert len(msgs) == 3


def test_zero_weight_allowed_for_finite_partition():
    sc = config.validate({"numerics": {"delta": 0.0}})
    assert sc.numerics["eps"] == 0.1


def test_seed_override():
    assert config.reference().with_seed(7).seed == 7


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(ConfigError, match="invalid JSON"):
        config.load(path)


def test_exit_code_config_error(tmp_path, capsys):
    path = write(tmp_path, {"numerics": {"eta": 2}})
    assert cli.main(["validate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "numerics.eta" in capsys.readouterr().err


def test_validate_passes_and_writes_report(tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["validate", "--config", str(config.reference_path()), "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "overall: PASS"
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] is True
    assert "timings" not in rep
    assert (out / "timings.json").exists()


def test_check_failure_exit_code(tmp_path):
    data = {"roof": {"name": "constant", "value": 2.0},
            "observable": {"profile": "one", "flow_profile": "bump_derivative", "mean_zero": False}}
    path = write(tmp_path, data)
    assert cli.main(["decay", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    failed = {c["name"] for c in rep["checks"] if not c["pass"]}
    assert "decay_persists" in failed


def test_decay_and_probe_csv_headers(tmp_path):
    ref = str(config.reference_path())
    for cmd in ("decay", "probe-dolgopyat"):
        assert cli.main([cmd, "--config", ref, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "decay.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "sup_part", "holder_part", "deriv_sup_part", "deriv_holder_part", "total_norm"]
    assert len(rows) == 42
    # 17 significant digits round-trip exactly
    assert all(repr(float(x)) == repr(float(f"{float(x):.17g}")) for x in rows[5])
    with open(tmp_path / "probe.csv") as fh:
        assert next(csv.reader(fh)) == ["b", "n", "max_ratio"]


def test_report_is_byte_stable(tmp_path):
    ref = str(config.reference_path())
    outs = []
    for i, jobs in enumerate((1, 2)):
        out = tmp_path / f"run{i}"
        cli.main(["probe-dolgopyat", "--config", ref, "--out", str(out), "--jobs", str(jobs)])
        outs.append(((out / "report.json").read_bytes(), (out / "probe.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_seed_changes_probe_samples(tmp_path):
    ref = str(config.reference_path())
    cli.main(["probe-dolgopyat", "--config", ref, "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["probe-dolgopyat", "--config", ref, "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "probe.csv").read_bytes() != (tmp_path / "b" / "probe.csv").read_bytes()


def test_jobs_environment_override(monkeypatch):
    monkeypatch.setenv(cli.JOBS_ENV, "3")
    assert cli.resolve_jobs(1) == 3
    monkeypatch.setenv(cli.JOBS_ENV, "many")
    with pytest.raises(ConfigError):
        cli.resolve_jobs(1)
    monkeypatch.delenv(cli.JOBS_ENV)
    assert cli.resolve_jobs(None) == 1


def test_unknown_command_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as err:
        cli.main(["bogus", "--config", "x", "--out", str(tmp_path)])
    assert err.value.code == 2
