import csv
import json
import logging

from functools import partial

import numpy as np
import pytest

from ptbloch.errors import ConfigError
from ptbloch.ptb_logging import VERBOSE, custom_levels, get_logger
from ptbloch.reporting import print_summary, write_csv_file, write_json_file
from ptbloch.rules import CheckState, Issue, ResultVerifier, bound_issue
from ptbloch.utils import (PTBJsonEncoder, complex_from_json, flatten_nested_dict, parallel_map,
                           read_config_from_file, update_nested_dict)


class TestNestedDicts:

    def test_update_keeps_order_and_merges(self):
        original = dict(a=1, b=dict(c=2, d=3), e=4)
        updated = update_nested_dict(original, dict(b=dict(d=5), f=6))
        assert updated == dict(a=1, b=dict(c=2, d=5), e=4, f=6)
        assert list(updated) == ["a", "b", "e", "f"]
        assert original["b"]["d"] == 3

    def test_flatten(self):
        assert flatten_nested_dict({'a': 1, 'b': {'c': 2, 'd': {'e': 3}}}) == {'a': 1, 'b.c': 2, 'b.d.e': 3}


class TestComplexJson:

    @pytest.mark.parametrize("value, expected", [
        (0.5, 0.5),
        (3, 3),
        ([0.25, -0.1], 0.25 - 0.1j),
        ({"re": 1.0, "im": 2.0}, 1 + 2j),
        ({"im": 2.0}, 2j),
        ("0.2 - 0.1i", 0.2 - 0.1j),
    ])
    def test_parse(self, value, expected):
        assert complex_from_json(value) == expected

    @pytest.mark.parametrize("value", [None, True, [1.0, 2.0, 3.0], "abc"])
    def test_rejects(self, value):
        with pytest.raises(ValueError):
            complex_from_json(value)

    def test_encoder(self):
        data = dict(z=0.25 + 0.1j, v=np.array([1.0, 2.0]), n=np.int64(3), f=np.float64(0.5), s=CheckState.PASSED)
        decoded = json.loads(json.dumps(data, cls=PTBJsonEncoder))
        assert decoded == dict(z={"re": 0.25, "im": 0.1}, v=[1.0, 2.0], n=3, f=0.5, s="passed")
        assert complex_from_json(decoded["z"]) == 0.25 + 0.1j


class TestReadConfig:

    def test_shipped_name(self):
        assert read_config_from_file("gap_resonance")["name"] == "gap_resonance"

    def test_json_exponents_are_numbers(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{"tolerances": {"tol": 1e-10}}')
        assert read_config_from_file(str(path))["tolerances"]["tol"] == 1e-10

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert read_config_from_file(str(path)) == {}

    @pytest.mark.parametrize("text", ["- 1\n- 2\n", "a: [1, 2\n"])
    def test_invalid_files(self, tmp_path, text):
        path = tmp_path / "bad.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError) as info:
            read_config_from_file(str(path))
        assert info.value.key == "config"

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            read_config_from_file("no_such_experiment")


class TestLogging:

    def test_custom_levels(self):
        assert set(custom_levels) == {"RESULT", "STATUS", "VERBOSE", "RIDICULOUS"}
        for name, level in custom_levels.items():
            assert logging.getLevelName(level) == name
            assert callable(getattr(logging.Logger, name.lower()))
        assert not hasattr(logging.Logger, "verboser")

    def test_verbose_sits_between_info_and_debug(self, caplog):
        logger = get_logger("test_levels")
        with caplog.at_level(VERBOSE, logger="ptbloch"):
            logger.verbose("shown")
            logger.ridiculous("hidden")
        assert [record.levelname for record in caplog.records] == ["VERBOSE"]


class TestParallelMap:

    def test_serial_and_pool_agree(self):
        square = partial(pow, exp=2)
        items = list(range(6))
        assert parallel_map(square, items, jobs=1) == parallel_map(square, items, jobs=2) == [i * i for i in items]


class TestReporting:

    def test_csv_keeps_full_precision(self, tmp_path):
        path = write_csv_file([dict(x=0.1 + 0.2, y=dict(a=1)), dict(x=1.0, z="k")], str(tmp_path / "out" / "t.csv"))
        with open(path) as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == ["x", "y.a", "z"]
        assert float(rows[0]["x"]) == 0.1 + 0.2
        assert rows[1]["z"] == "k"

    def test_json_round_trip(self, tmp_path):
        path = write_json_file(dict(a=1 + 2j), str(tmp_path / "r.json"))
        assert json.loads((tmp_path / "r.json").read_text()) == dict(a={"re": 1.0, "im": 2.0})
        assert path.endswith("r.json")

    def test_summary_lists_failed_issues(self, capsys):
        issues = {"n=1": [Issue(validation=CheckState.WARNING, message="mismatch too large"),
                          Issue(validation=CheckState.PASSED, message="all good")]}
        print_summary("resonance results", {"n=1": dict(mismatch=0.01, numeric=[0.25 + 0.1j])}, issues=issues,
                      outputs=["a.csv"], state=CheckState.WARNING)
        out = capsys.readouterr().out
        assert "Overall: WARNING" in out
        assert "mismatch too large" in out and "all good" not in out
        assert "0.25+0.1i" in out
        assert "a.csv" in out


class TestRules:

    def test_bound_issue(self):
        assert bound_issue("x", 1e-4, 1e-3, "small").validation == CheckState.PASSED
        assert bound_issue("x", 1e-2, 1e-3, "small").validation == CheckState.WARNING
        failed = bound_issue("x", 1e-2, 1e-3, "small", failing_state=CheckState.FAILED)
        assert failed.validation == CheckState.FAILED and failed.severity == "error"
        assert bound_issue("x", float("nan"), 1e-3, "small").validation == CheckState.WARNING

    def test_issue_string(self):
        issue = Issue(validation=CheckState.FAILED, message="bad", parameter="p", expected=1, actual=2)
        assert str(issue) == "[FAILED] bad (Parameter: p, Expected: 1, Actual: 2)"

    def test_unknown_report_type(self):
        with pytest.raises(ValueError):
            ResultVerifier(object(), logging.getLogger("ptbloch.test"))
