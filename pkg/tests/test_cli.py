import json
import os

import pytest
import yaml

from cli import LyapunovCLI
from config_generator import EXAMPLE_MODELS, default_config, generate_default_config, variants
from core.config import SCHEMA_VERSION, load_config

from conftest import curie_weiss_spec


def write_config(tmp_path, name="config.yaml", **sections):
    document = {"schema_version": "1", "model": curie_weiss_spec(2.0), **sections}
    path = tmp_path / name
    path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
    return str(path)


def run(config, out, command, *flags):
    return LyapunovCLI().run([command, "--config", config, "--out", str(out), *flags])


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_fixed_points_command(tmp_path):
    out = tmp_path / "out"
    assert run(write_config(tmp_path), out, "fixed-points", "--seed", "7") == 0
    report = read_json(out / "fixed-points.report.json")
    assert [p["classification"] for p in report["fixed_points"]] == ["Stable", "Unstable", "Stable"]
    manifest = read_json(out / "fixed-points.manifest.json")
    assert manifest["status"] == 0 and manifest["seed"] == 7 and manifest["error"] is None
    assert manifest["artifacts"] == {"report.json": str(out / "fixed-points.report.json")}
    assert os.path.exists(out / "run.log")


def test_zero_candidate_is_a_solution(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, subsolution={"candidate": {"kind": "zero"}})
    assert run(config, out, "check-subsolution") == 0
    report = read_json(out / "check-subsolution.report.json")
    assert report["verdict"] == "Solution"
    assert report["grid_size"] >= 200
    with open(out / "check-subsolution.values.csv", encoding="utf-8") as f:
        assert f.readline().strip() == "r_1,r_2,H"


def test_model_potential_is_a_solution_with_fd_gradients(tmp_path):
    out = tmp_path / "out"
    assert run(write_config(tmp_path), out, "check-subsolution", "--tolerance-profile", "fd") == 0
    report = read_json(out / "check-subsolution.report.json")
    assert report["verdict"] == "Solution" and report["tolerance"] == 1e-4


def test_duality_without_samples_is_an_error(tmp_path):
    out = tmp_path / "out"
    assert run(write_config(tmp_path, duality={"samples": 0}), out, "duality") == 1
    manifest = read_json(out / "duality.manifest.json")
    assert manifest["status"] == 1
    assert manifest["error"].startswith("InvalidParameters")


def test_verdict_failures_exit_with_two(tmp_path):
    descent = {"starts": 2, "t_end": 5.0, "probe_samples": 50,
               "candidate": {"kind": "relative_entropy", "pi_star": [0.5, 0.5]}}
    config = write_config(tmp_path, descent=descent)
    assert run(config, tmp_path / "descent", "descent", "--seed", "1") == 2

    three_state = {"variant": "ThreeStateB", "a1": 1.0, "a2": 1.0, "b2": 1.0, "b3": 1.0,
                   "kappa": 1.0, "c": [0.0, 1.0, 0.0]}
    path = tmp_path / "curl.yaml"
    path.write_text(yaml.safe_dump({"model": three_state}), encoding="utf-8")
    assert run(str(path), tmp_path / "curl", "potential-test") == 2
    report = read_json(tmp_path / "curl" / "potential-test.report.json")
    assert report["passed"] is False


@pytest.mark.parametrize("document", [
    {"model": {"variant": "GibbsAffine", "V": [0.0], "W": [[0.0]], "beta": 1.0}},
    {"model": {"variant": "Unknown"}},
    {"model": curie_weiss_spec(1.0), "unexpected": 1},
    {"model": curie_weiss_spec(1.0), "schema_version": "2"},
    {"model": curie_weiss_spec(1.0), "ode": {"dt": -1.0}},
])
def test_invalid_configurations(tmp_path, capsys, document):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    assert run(str(path), tmp_path / "out", "simulate-ode") == 1
    assert "Error" in capsys.readouterr().out


def test_missing_configuration_file(tmp_path):
    assert run(str(tmp_path / "missing.yaml"), tmp_path / "out", "fixed-points") == 1


def test_bad_expression_is_an_error(tmp_path):
    model = {"variant": "NonLocallyGibbs", "a1": "0.3 + open(r1)", "a2": "0.4", "psi": "0.5"}
    path = tmp_path / "expr.yaml"
    path.write_text(yaml.safe_dump({"model": model}), encoding="utf-8")
    assert run(str(path), tmp_path / "out", "stationary") == 1


def test_schema_command(tmp_path):
    assert LyapunovCLI().run(["schema", "--out", str(tmp_path)]) == 0
    schema = read_json(tmp_path / "schema.json")
    assert schema["$comment"] == f"schema_version {SCHEMA_VERSION}"
    assert "model" in schema["properties"]


def test_reruns_are_byte_identical(tmp_path):
    config = write_config(tmp_path, finite_n={"n": 30, "t": 0.5, "initial": {"kind": "point", "q": [0.9, 0.1]}},
                          particles={"n": 60, "replicas": 6, "t_end": 0.5, "threshold": 1.0})
    for command, kinds in [("finite-n", ["summary.json", "distribution.csv", "free_energy.csv"]),
                           ("particles", ["summary.json", "deviations.csv", "path.csv"])]:
        assert run(config, tmp_path / "a", command, "--jobs", "1", "--seed", "3") == 0
        assert run(config, tmp_path / "b", command, "--jobs", "3", "--seed", "3") == 0
        for kind in kinds:
            first = (tmp_path / "a" / f"{command}.{kind}").read_bytes()
            second = (tmp_path / "b" / f"{command}.{kind}").read_bytes()
            assert first == second, kind


def test_seed_changes_particle_paths(tmp_path):
    config = write_config(tmp_path, particles={"n": 60, "replicas": 2, "t_end": 0.5})
    assert run(config, tmp_path / "a", "particles", "--seed", "1") in (0, 2)
    assert run(config, tmp_path / "b", "particles", "--seed", "2") in (0, 2)
    assert (tmp_path / "a" / "particles.path.csv").read_bytes() != (tmp_path / "b" / "particles.path.csv").read_bytes()


@pytest.mark.parametrize("variant", variants())
def test_generated_configurations_validate(tmp_path, variant):
    path = tmp_path / f"{variant}.yaml"
    generate_default_config(str(path), variant)
    config = load_config(str(path))
    assert config.model.variant == variant
    assert default_config(variant)["model"] == EXAMPLE_MODELS[variant]


def test_shipped_configuration_validates():
    config = load_config(os.path.join(os.path.dirname(__file__), os.pardir, "config.yaml"))
    assert config.model.variant == "GibbsAffine"
