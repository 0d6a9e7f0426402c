import csv
import json
import os

import pytest
import yaml

from ptbloch.cli import build_experiment_config, load_experiment_config, parse_arguments
from ptbloch.config import DEFAULT_TOL, EXIT_CODE
from ptbloch.errors import ConfigError
from ptbloch.main import main


def write_config(tmp_path, name, data):
    path = tmp_path / f"{name}.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def run(command, config, out):
    return main([command, "--config", config, "--out", str(out), "--jobs", "1"])


FREE_SMALL = dict(name="free_small", potential=dict(coefficients={}),
                  grid=dict(re=[0.1, 0.9], im=[0.0, 0.0], points=5))


class TestParseArguments:

    def test_no_arguments(self):
        with pytest.raises(SystemExit) as info:
            parse_arguments([])
        assert info.value.code == EXIT_CODE.CONFIG_ERROR

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            parse_arguments(["spectrogram"])
        assert info.value.code == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as info:
            main(["discriminant", "--colour", "blue"])
        assert info.value.code == 2

    def test_version(self):
        with pytest.raises(SystemExit) as info:
            parse_arguments(["--version"])
        assert info.value.code == 0

    def test_universal_arguments(self):
        args = parse_arguments(["locus", "-c", "locus_pt", "-o", "/tmp/x", "-j", "3", "--tol", "1e-8"])
        assert args.program == "locus"
        assert (args.config, args.out, args.jobs, args.tol) == ("locus_pt", "/tmp/x", 3, 1e-8)


class TestBuildExperimentConfig:

    def test_defaults(self):
        config = build_experiment_config("discriminant")
        assert config.tol == DEFAULT_TOL
        assert config.potential.is_free
        assert config.grid.energies().size == 401
        assert config.resonances == []
        assert config.window is None

    @pytest.mark.parametrize("file_config, key", [
        (dict(colour="blue"), "colour"),
        (dict(grid=dict(points=0)), "grid.points[0]"),
        (dict(grid=dict(re=[1.0])), "grid.re"),
        (dict(tolerances=dict(tol=-1.0)), "tolerances.tol"),
        (dict(tolerances=dict(atol=1e-3)), "tolerances.atol"),
        (dict(potential=dict(coefficients={"one": 0.1})), "potential"),
        (dict(window=[0.0, 1.0, 0.0]), "window"),
        (dict(resonances=[1, 0]), "resonances[1]"),
        (dict(resonances=3), "resonances"),
        (dict(dubrovin=dict(sheets=[2])), "dubrovin.sheets"),
        (dict(dubrovin=dict(reconstruct="yes")), "dubrovin.reconstruct"),
        (dict(locus=dict(starts=["abc"])), "locus.starts[0]"),
        (dict(jobs=0), "jobs"),
    ])
    def test_errors_name_the_key(self, file_config, key):
        with pytest.raises(ConfigError) as info:
            build_experiment_config("resonance", file_config)
        assert info.value.key == key
        assert str(info.value).startswith(key)

    def test_tolerances_are_normalized(self):
        config = build_experiment_config("resonance", dict(tolerances=dict(tol="1e-9", root_tol=1)))
        assert config.tol == 1e-9
        assert config.raw["tolerances"]["tol"] == 1e-9
        assert isinstance(config.raw["tolerances"]["root_tol"], float)

    def test_overrides_win(self):
        config = build_experiment_config("resonance", dict(jobs=4, out="a"), dict(jobs=2, out=None))
        assert config.jobs == 2
        assert config.out == "a"

    def test_previous_output_is_unwrapped(self):
        output = dict(command="resonance", version="0", results=[],
                      config=dict(resonances=[1], potential=dict(coefficients={"1": 0.2, "-1": -0.05})))
        config = build_experiment_config("resonance", output)
        assert config.resonances == [1]
        assert config.potential.coefficient(-1) == -0.05

    def test_complex_start_points(self):
        config = build_experiment_config("locus", dict(locus=dict(starts=[0.3, [0.25, 0.05], "0.2+0.1i",
                                                                         {"re": 0.1, "im": -0.2}])))
        assert config.locus_starts == [0.3, 0.25 + 0.05j, 0.2 + 0.1j, 0.1 - 0.2j]

    def test_shipped_configs_are_valid(self):
        for name in ("divisor_cos", "divisor_pt", "double_point", "dubrovin_genus1", "free_discriminant",
                     "gap_resonance", "locus_pt", "transversal_band"):
            args = parse_arguments(["resonance", "--config", name])
            assert load_experiment_config(args).name == name


class TestMain:

    def test_discriminant_run(self, tmp_path):
        config = write_config(tmp_path, "free_small", FREE_SMALL)
        out = tmp_path / "results"
        assert run("discriminant", config, out) == EXIT_CODE.SUCCESS

        result_dir = out / "discriminant"
        for filename in ("discriminant.csv", "discriminant.json", "discriminant.svg"):
            assert (result_dir / filename).is_file()
        with open(result_dir / "discriminant.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 5
        assert list(rows[0]) == ["re_E", "im_E", "re_delta", "im_delta", "det_defect"]

        payload = json.loads((result_dir / "discriminant.json").read_text())
        assert payload["command"] == "discriminant"
        assert payload["config"]["name"] == "free_small"
        assert payload["results"]["points"] == 5
        assert payload["results"]["max_free_deviation"] < 1e-6
        assert payload["results"]["in_spectrum"] == 5
        assert any(name.endswith("_metadata.json") for name in os.listdir(result_dir))

    def test_rerun_from_output_is_identical(self, tmp_path):
        config = write_config(tmp_path, "free_small", FREE_SMALL)
        out = tmp_path / "results"
        assert run("discriminant", config, out) == EXIT_CODE.SUCCESS
        result_dir = out / "discriminant"
        first_json = (result_dir / "discriminant.json").read_bytes()
        first_csv = (result_dir / "discriminant.csv").read_bytes()

        saved = tmp_path / "first.json"
        saved.write_bytes(first_json)
        assert run("discriminant", str(saved), out) == EXIT_CODE.SUCCESS
        assert (result_dir / "discriminant.json").read_bytes() == first_json
        assert (result_dir / "discriminant.csv").read_bytes() == first_csv

    def test_malformed_config(self, tmp_path):
        assert run("resonance", "malformed", tmp_path) == EXIT_CODE.CONFIG_ERROR

    def test_missing_config(self, tmp_path):
        assert run("resonance", str(tmp_path / "absent.yaml"), tmp_path) == EXIT_CODE.CONFIG_ERROR

    def test_collision_is_a_numerical_failure(self, tmp_path):
        assert run("dubrovin", "dubrovin_collision", tmp_path) == EXIT_CODE.NUMERICAL_FAILURE
        metadata = [name for name in os.listdir(tmp_path / "dubrovin") if name.endswith("_metadata.json")]
        assert metadata
        data = json.loads((tmp_path / "dubrovin" / metadata[0]).read_text())
        assert data["exit_code"] == EXIT_CODE.NUMERICAL_FAILURE

    def test_no_resonances(self, tmp_path):
        config = write_config(tmp_path, "empty", dict(name="empty", resonances=[]))
        assert run("resonance", config, tmp_path) == EXIT_CODE.SUCCESS
        payload = json.loads((tmp_path / "resonance" / "resonance.json").read_text())
        assert payload["results"] == []

    def test_short_dubrovin_run(self, tmp_path):
        config = write_config(tmp_path, "genus1", dict(name="genus1", dubrovin=dict(
            branch_points=[0.0, 1.0, 2.0], gammas=[1.5], sheets=[1], x_span=[0.0, 1.0], samples=10)))
        assert run("dubrovin", config, tmp_path) == EXIT_CODE.SUCCESS
        payload = json.loads((tmp_path / "dubrovin" / "dubrovin.json").read_text())
        assert payload["results"]["samples"] == 11
        assert payload["results"]["max_sheet_defect"] < 1e-8
        assert "reconstruction" not in payload["results"]

    def test_wrong_number_of_divisor_points(self, tmp_path):
        config = write_config(tmp_path, "genus1", dict(dubrovin=dict(branch_points=[0.0, 1.0, 2.0],
                                                                     gammas=[1.2, 1.7])))
        assert run("dubrovin", config, tmp_path) == EXIT_CODE.CONFIG_ERROR
