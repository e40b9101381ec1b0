"""Tests for the command-line entry point"""

import io
import json

import pytest

from app.cli import EXIT_INPUT_ERROR, EXIT_NEGATIVE, EXIT_OK, _parse_args, load_json, main, run
from app.services.exceptions import MalformedInput

CHAIN = '{"edges": [["a", "b"], ["b", "c"]]}'
SHORTCUT = '{"edges": [["a", "b", "1"], ["b", "c", "2"], ["a", "c", "5"]]}'


@pytest.fixture
def invoke(command_service):
    """Run the CLI on argv and return (exit code, parsed JSON output)"""

    def _invoke(*argv):
        out = io.StringIO()
        code = run(_parse_args(list(argv)), service=command_service, out=out)
        return code, json.loads(out.getvalue())

    return _invoke


class TestLoadJson:
    """Test cases for reading JSON arguments"""

    def test_inline_object(self):
        assert load_json(' {"a": "1/2"}') == {"a": "1/2"}

    def test_inline_array(self):
        assert load_json("[1, 2]") == [1, 2]

    def test_file(self, tmp_path):
        path = tmp_path / "mu.json"
        path.write_text('{"a": 1}', encoding="utf-8")

        assert load_json(str(path)) == {"a": 1}

    def test_missing_file(self, tmp_path):
        with pytest.raises(MalformedInput) as exc_info:
            load_json(str(tmp_path / "absent.json"))

        assert exc_info.value.error_code == "INPUT_NOT_FOUND"

    def test_malformed_inline(self):
        with pytest.raises(MalformedInput) as exc_info:
            load_json('{"a": 1')

        assert exc_info.value.error_code == "MALFORMED_JSON"
        assert exc_info.value.details["source"] == "inline"
        assert exc_info.value.details["line"] == 1

    def test_malformed_file_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "a": 1,\n  "b": \n}', encoding="utf-8")

        with pytest.raises(MalformedInput) as exc_info:
            load_json(str(path))

        assert exc_info.value.details["source"] == str(path)
        assert exc_info.value.details["line"] == 4


class TestRun:
    """Test cases for exit codes and output"""

    def test_dominance_holds(self, invoke):
        # Execute
        code, output = invoke("dominance", CHAIN, '{"a": 1}', '{"c": 1}')

        # Assert
        assert code == EXIT_OK
        assert output == {
            "dominates": True,
            "certificate": {"kind": "flow", "flow": [["a", "b", "1"], ["b", "c", "1"]]},
        }

    def test_dominance_fails_with_exit_two(self, invoke):
        code, output = invoke("dominance", CHAIN, '{"c": 1}', '{"a": 1}', "--method", "chain")

        assert code == EXIT_NEGATIVE
        assert output["certificate"] == {"kind": "up-set", "up_set": ["b", "c"], "excess": "1"}

    def test_measures_from_files(self, invoke, tmp_path):
        # Setup
        mu1, mu2 = tmp_path / "mu1.json", tmp_path / "mu2.json"
        mu1.write_text('{"a": "0.5", "b": "0.5"}', encoding="utf-8")
        mu2.write_text('{"b": "1/2", "c": "1/2"}', encoding="utf-8")

        # Execute
        code, output = invoke("dominance", CHAIN, str(mu1), str(mu2))

        # Assert
        assert code == EXIT_OK
        assert output["certificate"]["flow"] == [["a", "b", "1/2"], ["b", "c", "1/2"]]

    def test_order_pairs_poset(self, invoke):
        code, output = invoke("dominance", '{"pairs": [["a", "b"]]}', '{"a": 1}', '{"b": 1}', "--method", "oracle")

        assert code == EXIT_OK
        assert output["dominates"] is True

    def test_malformed_json_exits_one(self, invoke):
        # Execute
        code, output = invoke("dominance", CHAIN, '{"a": 1', '{"c": 1}')

        # Assert
        assert code == EXIT_INPUT_ERROR
        assert output["error"]["code"] == "MALFORMED_JSON"
        assert output["error"]["details"]["line"] == 1

    def test_schema_violation_exits_one(self, invoke):
        code, output = invoke("dominance", CHAIN, '{"a": -1, "b": 2}', '{"c": 1}')

        assert code == EXIT_INPUT_ERROR
        assert output["error"]["code"] == "VALIDATION_ERROR"
        assert any(field.startswith("mu1") for field in output["error"]["details"])

    def test_service_input_error_exits_one(self, invoke):
        code, output = invoke("dominance", CHAIN, '{"a": "1/2"}', '{"c": 1}')

        assert code == EXIT_INPUT_ERROR
        assert output["error"]["code"] == "VALIDATION_ERROR"
        assert output["error"]["details"] == {"total": "1/2"}

    def test_infeasible_exits_two(self, invoke):
        code, output = invoke("wasserstein", SHORTCUT, '{"c": 1}', '{"a": 1}')

        assert code == EXIT_NEGATIVE
        assert output["error"]["code"] == "INFEASIBLE"

    def test_wasserstein_exact_and_float(self, invoke):
        # Execute
        _, exact = invoke("wasserstein", SHORTCUT, '{"a": 1}', '{"b": "1/2", "c": "1/2"}')
        _, approx = invoke("wasserstein", "--float", SHORTCUT, '{"a": 1}', '{"b": "1/2", "c": "1/2"}')

        # Assert
        assert exact["optimal_value"] == "2"
        assert approx["optimal_value"] == 2.0
        assert approx["optimal_coupling"]["pairs"] == [["a", "b", 0.5], ["a", "c", 0.5]]

    def test_couple(self, invoke):
        code, output = invoke("couple", '{"edges": [["a", "b", "1/2"], ["b", "c", "1/2"]]}', '{"a": "1/2", "b": "1/2"}')

        assert code == EXIT_OK
        assert output["pairs"] == [["a", "c", "1/2"], ["b", "b", "1/2"]]

    def test_decompose_stabilized(self, invoke):
        code, output = invoke("decompose", '{"edges": [["a", "b", "1"], ["b", "c", "1"]]}', "--stabilize")

        assert code == EXIT_OK
        assert output["paths"]["paths"] == [{"vertices": ["a", "b", "c"], "weight": "1"}]

    def test_holley_on_boolean_lattice(self, invoke):
        uniform = '{"00": "1/4", "01": "1/4", "10": "1/4", "11": "1/4"}'
        tilted = '{"00": "1/9", "01": "2/9", "10": "2/9", "11": "4/9"}'

        assert invoke("holley", "2", uniform, tilted)[0] == EXIT_OK
        assert invoke("holley", "2", tilted, uniform)[0] == EXIT_NEGATIVE

    def test_lattice_probe(self, invoke):
        code, output = invoke("lattice", "2", '{"00": 1}', '{"11": 1}', "--budget", "3", "--seed", "4")

        assert code == EXIT_OK
        assert output["probe_costs"] == ["2", "2", "2"]
        assert output["all_optimal"] is True
        assert output["seed"] == 4

    def test_truncate_tree_edge(self, invoke):
        params = '{"mu1": {"support": {"1": 1}}, "mu2": {"support": {"2": "1/2", "3": "1/2"}}}'

        code, output = invoke("truncate", "binary-tree", params, "--level", "1", "--report", "tree-edge", "--edge", "1", "2")

        assert code == EXIT_OK
        assert output["value"] == "1/2"
        assert output["exact"] is True

    def test_truncate_tail_weight_without_prefix(self, invoke):
        params = '{"mu1": {"support": {"0": 1}}, "mu2": {"support": {"1": 1}}}'

        code, output = invoke("truncate", "z-chain", params, "--level", "0", "--tail-weight", "1/2")

        assert code == EXIT_OK
        assert output["ghost_out"] == "1"
        assert output["tail_weight"] == "1/2"

    def test_truncate_prefix_exceeding_tail_weight(self, invoke):
        # Setup
        params = '{"mu1": {"support": {"0": 1}}, "mu2": {"support": {"2": 1}}}'
        prefix = '{"paths": [{"vertices": ["0", "1", "2"], "weight": "1"}]}'

        # Execute
        code, output = invoke(
            "truncate", "z-chain", params, "--level", "1", "--prefix", prefix, "--tail-weight", "1/2"
        )

        # Assert
        assert code == EXIT_INPUT_ERROR
        assert output["error"]["code"] == "FLUX_BOUND_EXCEEDED"

    def test_verify_bundle(self, invoke):
        # Setup
        bundle = json.dumps({
            "flow": {"edges": [["a", "b", "1/2"], ["b", "c", "1/2"]]},
            "mu1": {"a": "1/2", "b": "1/2"},
            "mu2": {"b": "1/2", "c": "1/2"},
        })

        # Execute
        code, output = invoke("verify", bundle, "--kind", "flow")

        # Assert
        assert code == EXIT_OK
        assert output["ok"] is True

    def test_verify_bundle_must_be_object(self, invoke):
        code, output = invoke("verify", "[1, 2]", "--kind", "flow")

        assert code == EXIT_INPUT_ERROR
        assert output["error"]["code"] == "MALFORMED_JSON"


class TestMain:
    """Test cases for argument parsing and the entry point"""

    def test_missing_arguments(self):
        with pytest.raises(SystemExit):
            _parse_args(["dominance", CHAIN])

    def test_unknown_method(self):
        with pytest.raises(SystemExit):
            _parse_args(["couple", "{}", "{}", "--method", "greedy"])

    def test_main_prints_to_stdout(self, capsys, monkeypatch):
        monkeypatch.setattr("app.cli.setup_logging", lambda: None)

        code = main(["decompose", '{"edges": [["a", "b", "1"]]}'])

        captured = capsys.readouterr()
        assert code == EXIT_OK
        assert json.loads(captured.out) == {"paths": [{"vertices": ["a", "b"], "weight": "1"}]}
