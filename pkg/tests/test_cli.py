import json
import logging

import pandas as pd
import pytest

from oscholder.cli.main import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    build_parser,
    configure_logging,
    main,
    parse_params,
    run_main,
)
from oscholder.errors import ScenarioSpecError
from oscholder.grid.grid_function import load_grid_function
from oscholder.scenarios import runner


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Quita los handlers que ``main`` deja en el logger del paquete."""
    yield
    package = logging.getLogger("oscholder")
    for handler in list(package.handlers):
        package.removeHandler(handler)
        handler.close()
    package.setLevel(logging.NOTSET)


LATTICE = json.dumps({"generator": "lattice", "L": 1, "r": 0.0625, "h": 0.00390625})
SMOOTH = json.dumps({"generator": "random", "n": 32, "h": 0.03125, "d": 2, "seed": 3, "smooth": 2})


class TestParser:
    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_input_options_are_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["osc", "--input", "a.json", "--generator", "{}",
                                       "--r", "1", "--output", "b.json"])

    def test_parse_params(self):
        params = parse_params(["r=0.5", "refine=true", "mode=open", "deltas=[0.1, 0.2]"])
        assert params == {"r": 0.5, "refine": True, "mode": "open", "deltas": [0.1, 0.2]}
        assert parse_params(None) == {}
        with pytest.raises(ScenarioSpecError):
            parse_params(["radius"])


class TestCommands:
    def test_osc(self, tmp_path):
        out = tmp_path / "osc.json"
        code = main(["osc", "--generator", LATTICE, "--r", "0.0625", "--output", str(out)])
        assert code == EXIT_OK
        g = load_grid_function(out)
        assert g.sup() == 1.0
        assert g.inf() == 0.0

    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--generator", LATTICE, "--osc-r", "0.0625", "--output", str(out),
                     "--threads", "2"])
        assert code == EXIT_OK
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["delta", "I", "I_over_delta_alpha"]

    def test_sweep_to_stdout(self, capsys):
        code = main(["sweep", "--generator", LATTICE, "--deltas", "0.03125", "0.0625"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        # log records may precede the table on stdout
        start = lines.index("delta,I,I_over_delta_alpha")
        assert len(lines[start + 1:]) == 2

    def test_seminorm_reference(self):
        args = ["seminorm", "--generator", LATTICE, "--osc-r", "0.0625"]
        assert main(args + ["--reference", "16"]) == EXIT_OK
        assert main(args + ["--reference", "1000"]) == EXIT_CHECK_FAILED

    def test_verify(self, tmp_path):
        code = main(["verify", "sandwich", "--generator", LATTICE, "--param", "r=0.0625",
                     "--quiet", "--output-dir", str(tmp_path)])
        assert code == EXIT_OK
        assert (tmp_path / "sandwich.json").exists()

    def test_verify_hypothesis_error(self):
        args = ["verify", "density", "--generator", SMOOTH, "--param", "r=0.25",
                "--param", "delta=0.0625", "--quiet"]
        assert main(args) == EXIT_CHECK_FAILED
        assert main(args + ["--expect", "hypothesis-error"]) == EXIT_OK

    def test_verify_with_target_and_set(self):
        code = main([
            "verify", "thm2", "--quiet",
            "--target", '{"sites": [[0, 0]]}',
            "--set", '{"shape": "annulus", "params": {"center": [0, 0], "inner": 1, "outer": 1.2}}',
            "--param", "delta=0.5", "--param", "n=20000",
        ])
        assert code == EXIT_OK

    def test_verify_without_input(self):
        assert main(["verify", "thm1", "--param", "r=1", "--quiet"]) == EXIT_CONFIG_ERROR

    def test_example(self, tmp_path):
        code = main(["example", "disconnected", "--h", "0.0625", "--quiet", "--output-dir", str(tmp_path)])
        assert code == EXIT_OK
        assert json.loads((tmp_path / "summary.json").read_text())["verdict"] is True

    def test_run_and_shortcut(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "name": "cli", "input": json.loads(LATTICE), "params": {"r": 0.0625},
            "checks": ["sandwich"],
        }))
        assert main(["run", str(path), "--quiet"]) == EXIT_OK
        assert run_main([str(path), "--quiet"]) == EXIT_OK


class TestExitCodes:
    def test_missing_scenario(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json"), "--quiet"]) == EXIT_CONFIG_ERROR

    def test_invalid_scenario(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "bad", "checks": ["spiral"]}')
        assert main(["run", str(path), "--quiet"]) == EXIT_CONFIG_ERROR

    def test_missing_config(self, tmp_path):
        code = main(["run", "x.json", "--config", str(tmp_path / "absent.yaml")])
        assert code == EXIT_CONFIG_ERROR

    def test_bad_thread_variable(self, monkeypatch, tmp_path):
        monkeypatch.setenv("OSC_THREADS", "lots")
        assert main(["run", str(tmp_path / "x.json")]) == EXIT_CONFIG_ERROR

    def test_missing_grid_file(self, tmp_path):
        code = main(["osc", "--input", str(tmp_path / "absent.json"), "--r", "1",
                     "--output", str(tmp_path / "o.json")])
        assert code == EXIT_CONFIG_ERROR

    def test_internal_error_is_a_failure(self, monkeypatch):
        def broken(ctx, spec, params):
            raise ValueError("operands could not be broadcast together")

        monkeypatch.setitem(runner._RUNNERS, "sandwich", broken)
        code = main(["verify", "sandwich", "--generator", LATTICE, "--param", "r=0.0625", "--quiet"])
        assert code == EXIT_CHECK_FAILED

    @pytest.mark.parametrize("param", ["r=wide", "mode=ajar"])
    def test_bad_parameter_is_config_error(self, param):
        code = main(["verify", "sandwich", "--generator", LATTICE, "--param", "r=0.0625",
                     "--param", param, "--quiet"])
        assert code == EXIT_CONFIG_ERROR

    def test_library_domain_error_is_config_error(self, tmp_path):
        code = main(["osc", "--generator", LATTICE, "--r", "-1", "--output", str(tmp_path / "o.json")])
        assert code == EXIT_CONFIG_ERROR

    def test_shipped_config(self, config_dir, tmp_path):
        code = main(["verify", "sandwich", "--generator", LATTICE, "--param", "r=0.0625", "--quiet",
                     "--config", str(config_dir / "harness" / "fast.yaml")])
        assert code == EXIT_OK


class TestLogging:
    def test_configures_package_logger_once(self, tmp_path):
        configure_logging(logging.DEBUG, str(tmp_path / "first.log"))
        package = configure_logging(logging.WARNING)
        assert package.name == "oscholder"
        assert package.level == logging.WARNING
        assert len(package.handlers) == 1
        assert logging.getLogger("oscholder.scenarios.runner").getEffectiveLevel() == logging.WARNING

    def test_log_file_format(self, tmp_path):
        log = tmp_path / "run.log"
        code = main(["verify", "sandwich", "--generator", LATTICE, "--param", "r=0.0625", "--quiet",
                     "--log-level", "INFO", "--log-file", str(log)])
        assert code == EXIT_OK
        lines = log.read_text(encoding="utf-8").splitlines()
        assert any("[INFO] oscholder.scenarios.runner: " in line for line in lines)
        assert not any(" - oscholder" in line for line in lines)
