import json

import pytest

from wetsim.cli import RunConfig, execute, run
from wetsim.cli.config_file import build_run_config, load_run_config, parse_key_values, parse_overrides
from wetsim.cli.models import Command, StaticKeys
from wetsim.cli.verify import CriterionContext, exponential_martingale, integration_by_parts
from wetsim.exceptions import ConfigurationException, UnknownConfigKeyException
from wetsim.utils.utility import config_digest

REFERENCE_KEYS = {"model": "reference", "reference_kind": "meander", "steps": 20, "replicas": 16}


def reference_config(out_dir, threads=1) -> RunConfig:
    return RunConfig(command="sample-static", seed=7, out_dir=str(out_dir), threads=threads, chunks=4,
                     parameters=REFERENCE_KEYS)


def test_parse_key_values():
    text = "# run\ncommand = verify\n\nseed = 3  # trailing comment\nseed = 4\n"
    assert parse_key_values(text) == {"command": "verify", "seed": "4"}


def test_malformed_line_is_reported():
    with pytest.raises(ConfigurationException) as error:
        parse_key_values("command = verify\njust some words\n")
    assert "line 2" in error.value.detail


def test_malformed_override():
    assert parse_overrides(["eta=0.1", " n = 4 "]) == {"eta": "0.1", "n": "4"}
    with pytest.raises(ConfigurationException):
        parse_overrides(["eta"])


def test_flags_take_priority():
    config = build_run_config({"command": "verify", "seed": "1"}, {"seed": "2"}, {"seed": 3, "threads": None})
    assert config.command == Command.VERIFY
    assert config.seed == 3
    assert config.parameters == {}


def test_command_is_required():
    with pytest.raises(ConfigurationException):
        build_run_config({"seed": "1"}, {})
    with pytest.raises(ConfigurationException):
        build_run_config({"command": "sample-static", "seed": "-1"}, {})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationException):
        load_run_config(str(tmp_path / "absent.cfg"))


def test_unknown_key_is_named():
    config = RunConfig(command="simulate-continuum", parameters={"gamma_typo": "1"})
    with pytest.raises(UnknownConfigKeyException) as error:
        config.keys()
    assert error.value.key == "gamma_typo"
    assert error.value.exit_code == 2


def test_keys_fill_defaults_and_split_lists():
    keys = RunConfig(command="verify", parameters={"criteria": "2, 9", "scale": "0.5"}).keys()
    assert keys.criteria == [2, 9]
    assert keys.scale == 0.5
    assert isinstance(RunConfig(command="sample-static").keys(), StaticKeys)


def test_resolved_config_ignores_threads_and_out_dir(tmp_path):
    single = reference_config(tmp_path / "a", threads=1).resolved()
    multi = reference_config(tmp_path / "b", threads=8).resolved()
    assert single == multi
    assert "threads" not in single
    assert config_digest(single) == config_digest(multi)


def test_execute_writes_digest_named_artifacts(tmp_path):
    config = reference_config(tmp_path)
    digest = config_digest(config.resolved())
    summary = execute(config)
    assert summary["kind"] == "meander"
    reference = tmp_path / f"sample-static-{digest}-reference.csv"
    manifest = tmp_path / f"sample-static-{digest}-manifest.json"
    assert reference.read_text(encoding="utf-8").startswith(f"# digest={digest}\n")
    content = json.loads(manifest.read_text(encoding="utf-8"))
    assert content["digest"] == digest
    assert content["artifacts"] == [reference.name]
    assert content["config"]["seed"] == 7


def test_reruns_are_byte_identical_across_threads(tmp_path):
    arguments = ["--command", "sample-static", "--seed", "11", "--set", "n=3", "--set", "chains=6",
                 "--set", "kept=5"]
    assert run(arguments + ["--threads", "1", "--out", str(tmp_path / "one")]) == 0
    assert run(arguments + ["--threads", "3", "--out", str(tmp_path / "three")]) == 0
    one = {path.name: path.read_bytes() for path in (tmp_path / "one").iterdir()}
    three = {path.name: path.read_bytes() for path in (tmp_path / "three").iterdir()}
    assert len(one) == 2
    assert one == three


def test_config_file_run(tmp_path):
    config_path = tmp_path / "run.cfg"
    config_path.write_text(
        "command = simulate-continuum\nseed = 5\nlaw = squared\neta = 0.2\nsteps = 50\nreplicas = 40\n",
        encoding="utf-8",
    )
    assert run(["--config", str(config_path), "--out", str(tmp_path / "out")]) == 0
    assert any(path.suffix == ".csv" for path in (tmp_path / "out").iterdir())


def test_verify_determinism_criterion(tmp_path):
    out_dir = tmp_path / "verify"
    assert run(["--command", "verify", "--seed", "1", "--set", "criteria=9", "--set", "scale=0.01",
                "--out", str(out_dir)]) == 0
    verdicts = next(out_dir.glob("verify-*-verdicts.json"))
    records = json.loads(verdicts.read_text(encoding="utf-8"))["records"]
    assert [record["test_id"] for record in records] == ["9-determinism-threads"]
    assert records[0]["pass"] is True


@pytest.mark.parametrize("arguments", [
    ["--command", "simulate-continuum", "--set", "gamma_typo=1"],
    ["--command", "sample-static", "--set", "n=-1"],
    ["--command", "sample-static", "--set", "model=ising"],
    ["--command", "verify", "--set", "criteria=12"],
    ["--command", "verify", "--set", "broken"],
    ["--seed", "3"],
])
def test_configuration_errors_exit_with_two(tmp_path, arguments):
    assert run(arguments + ["--out", str(tmp_path)]) == 2


def test_unknown_command_is_rejected_by_the_parser():
    with pytest.raises(SystemExit):
        run(["--command", "simulate-everything"])


def test_martingale_criterion_reports_both_weight_forms():
    ctx = CriterionContext(RunConfig(command="verify", seed=5), 0.01)
    records = exponential_martingale(ctx)
    assert [record.test_id for record in records] == ["3-martingale-a=0.2-eta=0.5", "3-martingale-a=1-eta=0.25"]
    assert all(record.passed for record in records)
    assert all("occupation form" in record.detail for record in records)


@pytest.mark.slow
def test_integration_by_parts_criterion_checks_the_first_site():
    ctx = CriterionContext(RunConfig(command="verify", seed=5), 0.01)
    monte_carlo = integration_by_parts(ctx)[-1]
    assert monte_carlo.test_id == "5-ibpf-monte-carlo-n=8"
    assert monte_carlo.detail.startswith("h=e1, a=0.4:")
    assert monte_carlo.passed
