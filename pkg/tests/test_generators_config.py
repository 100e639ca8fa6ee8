import json
import math

import numpy as np
import pytest
import yaml

from oscholder.data.config import HarnessConfig, load_harness_config, log_level
from oscholder.data.generators import (
    GENERATORS,
    constant_input,
    disconnected_2d_input,
    disconnected_input,
    generate_input,
    lattice_input,
    random_input,
)
from oscholder.errors import ScenarioFileNotFoundError, ScenarioSpecError
from oscholder.grid.grid_function import save_grid_function
from oscholder.quality.report import CheckReport, save_report, to_jsonable, write_csv
from oscholder.utils.execution import THREADS_ENV_VAR, ordered_map, resolve_threads
from oscholder.utils.streams import philox_generator
from oscholder.utils.summation import stable_sum


class TestGenerators:
    def test_lattice_marks_multiples_of_4r(self):
        g = lattice_input(1.0, 1.0 / 16, 1.0 / 256)
        assert g.shape == (257,)
        np.testing.assert_array_equal(np.nonzero(g.values)[0], [0, 64, 128, 192, 256])

    def test_lattice_2d(self):
        g = lattice_input(1.0, 0.125, 1.0 / 32, d=2)
        assert g.shape == (33, 33)
        assert g.values.sum() == 9.0

    def test_lattice_rounds_to_nearest_cell(self):
        # 4r = 0.3 is not a multiple of h = 0.1 in floating point
        g = lattice_input(0.9, 0.075, 0.1)
        np.testing.assert_array_equal(np.nonzero(g.values)[0], [0, 3, 6, 9])

    def test_lattice_requires_multiple_of_h(self):
        with pytest.raises(ScenarioSpecError, match="multiple"):
            lattice_input(1.0, 0.1, 0.3)

    def test_disconnected(self):
        g = disconnected_input(4.0, 1.0 / 16)
        assert g.shape == (161,)
        assert g.masked_count == 33 + 33 + 1
        assert g.values[g.mask].sum() == 1.0
        assert g.values[80] == 1.0
        assert g.origin == (-5.0,)

    def test_disconnected_needs_separation(self):
        with pytest.raises(ScenarioSpecError):
            disconnected_input(1.5, 0.5)

    def test_disconnected_2d(self):
        g = disconnected_2d_input(3.0, 0.5)
        assert g.shape == (17, 5)
        assert g.mask[:, 2].all()
        assert not g.mask[8, 0]
        assert g.values[8, 2] == 1.0
        assert g.values[g.mask].sum() == 1.0

    def test_random_is_seeded(self):
        a = random_input(20, 0.1, d=2, seed=4)
        b = random_input(20, 0.1, d=2, seed=4)
        c = random_input(20, 0.1, d=2, seed=5)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert 0.0 <= a.inf() and a.sup() < 1.0

    def test_random_smooth_and_disk(self):
        g = random_input(21, 0.1, d=2, seed=1, smooth=2.0, domain="disk")
        assert g.mask[10, 10]
        assert not g.mask[0, 0]
        assert g.sup() - g.inf() < 1.0

    def test_random_unknown_domain(self):
        with pytest.raises(ScenarioSpecError):
            random_input(5, 1.0, domain="torus")

    def test_random_disk_without_cells(self):
        # with n = 2 every cell centre lies outside the inscribed disk
        with pytest.raises(ScenarioSpecError, match="masks every cell"):
            random_input(2, 1.0, d=2, domain="disk")
        assert random_input(2, 1.0, d=1, domain="disk").masked_count == 2

    def test_constant(self):
        g = constant_input(2.5, 4, 0.5, d=2, origin=-1.0)
        assert g.shape == (4, 4)
        assert g.origin == (-1.0, -1.0)
        assert g.inf() == g.sup() == 2.5

    def test_generate_dispatch(self):
        g = generate_input({"generator": "lattice", "r": 0.25, "h": 0.125, "L": 2.0})
        assert g.values.sum() == 3.0
        assert set(GENERATORS) == {"constant", "lattice", "disconnected", "disconnected-2d",
                                   "random", "file"}

    @pytest.mark.parametrize(
        "spec",
        [{}, {"generator": "spiral"}, {"generator": "lattice", "h": 0.1}, ["lattice"]],
    )
    def test_generate_errors(self, spec):
        with pytest.raises(ScenarioSpecError):
            generate_input(spec)

    @pytest.mark.parametrize(
        "spec, message",
        [
            ({"generator": "random", "n": "many", "h": 0.1}, "invalid 'n'"),
            ({"generator": "lattice", "r": [0.25], "h": 0.125}, "invalid 'r'"),
            ({"generator": "disconnected", "N": 4}, "needs parameter 'h'"),
        ],
    )
    def test_generate_parameter_types(self, spec, message):
        with pytest.raises(ScenarioSpecError, match=message):
            generate_input(spec)

    def test_file_generator(self, tmp_path, ramp_1d):
        save_grid_function(ramp_1d, tmp_path / "ramp.json")
        g = generate_input({"generator": "file", "path": "ramp.json"}, base_dir=tmp_path)
        np.testing.assert_array_equal(g.values, ramp_1d.values)
        with pytest.raises(ScenarioFileNotFoundError):
            generate_input({"generator": "file", "path": "absent.json"}, base_dir=tmp_path)


class TestHarnessConfig:
    def _write(self, tmp_path, payload):
        path = tmp_path / "harness.yaml"
        path.write_text(yaml.safe_dump(payload) if payload is not None else "")
        return path

    def test_defaults_from_empty_file(self, tmp_path):
        config = load_harness_config(self._write(tmp_path, None))
        assert config == HarnessConfig()
        assert config.sweep.ratio == 2.0 ** 0.25
        assert config.execution.threads is None
        assert log_level(config) == 20

    def test_overrides(self, tmp_path):
        config = load_harness_config(self._write(tmp_path, {
            "measure": {"c": 2.0},
            "morphology": {"kernel": "naive"},
            "sampling": {"chunk_size": 1024},
            "execution": {"threads": 3},
            "logging": {"level": "debug"},
        }))
        assert config.measure.c == 2.0
        assert config.morphology_kwargs()["kernel"] == "naive"
        assert config.sampling.chunk_size == 1024
        assert config.execution.threads == 3
        assert config.logging.level == "DEBUG"

    @pytest.mark.parametrize(
        "payload",
        [
            {"measure": {"c": 0}},
            {"morphology": {"kernel": "fft"}},
            {"sweep": {"ratio": 1.0}},
            {"execution": {"threads": 0}},
            {"logging": {"level": "LOUD"}},
            {"sampling": [1]},
        ],
    )
    def test_invalid_values(self, tmp_path, payload):
        with pytest.raises(ValueError):
            load_harness_config(self._write(tmp_path, payload))

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("measure: [unclosed")
        with pytest.raises(ValueError, match="Invalid YAML"):
            load_harness_config(path)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_harness_config(tmp_path / "absent.yaml")

    def test_shipped_configs_load(self, config_dir):
        for name in ("default.yaml", "fast.yaml"):
            load_harness_config(config_dir / "harness" / name)


class TestExecution:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        assert resolve_threads(5, 2) == 5

    def test_environment_beats_config(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        assert resolve_threads(None, 2) == 3

    def test_config_then_cpu_count(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert resolve_threads(None, 2) == 2
        assert resolve_threads() >= 1

    def test_invalid(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        with pytest.raises(ValueError):
            resolve_threads()
        with pytest.raises(ValueError):
            resolve_threads(0)

    def test_ordered_map_keeps_order(self):
        assert ordered_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


class TestStreams:
    def test_same_block_same_numbers(self):
        a = philox_generator(3, 1, 2).random(8)
        b = philox_generator(3, 1, 2).random(8)
        np.testing.assert_array_equal(a, b)

    def test_blocks_and_streams_differ(self):
        base = philox_generator(3, 1, 2).random(8)
        assert not np.array_equal(base, philox_generator(3, 1, 3).random(8))
        assert not np.array_equal(base, philox_generator(3, 2, 2).random(8))
        assert not np.array_equal(base, philox_generator(4, 1, 2).random(8))

    @pytest.mark.parametrize("args", [(-1, 0, 0), (2**64, 0, 0), (0, -1, 0), (0, 0, -1)])
    def test_ranges(self, args):
        with pytest.raises(ValueError):
            philox_generator(*args)


class TestSummation:
    def test_correctly_rounded(self):
        values = np.array([1e16, 1.0, -1e16, 1.0])
        assert stable_sum(values) == 2.0

    def test_empty(self):
        assert stable_sum(np.array([])) == 0.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=500) * 10.0 ** rng.integers(-8, 8, size=500)
        assert stable_sum(values) == stable_sum(rng.permutation(values))


class TestReports:
    def test_lower_and_upper_bounds(self):
        report = CheckReport(check="demo")
        report.set_measurement(1.0, 3.0, 0.1)
        assert report.slack == 2.0
        assert report.sigma == 0.1
        assert report.verdict

    def test_require_records_error(self):
        report = CheckReport(check="demo")
        assert not report.require(False, "bad")
        assert report.errors == ["bad"]
        assert not report.verdict

    def test_jsonable(self):
        payload = to_jsonable({"a": np.float64(math.inf), "b": np.array([1, 2]), "c": np.bool_(True),
                               "d": float("nan"), 3: (np.int64(4),)})
        assert payload == {"a": "inf", "b": [1, 2], "c": True, "d": "nan", "3": [4]}

    def test_save_report_is_deterministic(self, tmp_path):
        report = CheckReport(check="demo", inputs={"z": 1, "a": np.float64(0.5)})
        report.add_warning("careful")
        first = save_report(report, tmp_path).read_text()
        second = save_report(report, tmp_path, name="again").read_text()
        assert first == second
        data = json.loads(first)
        assert list(data) == sorted(data)
        assert data["warnings"] == ["careful"]

    def test_write_csv_full_precision(self, tmp_path):
        import pandas as pd

        path = write_csv(pd.DataFrame({"x": [1.0 / 3.0]}), tmp_path / "t.csv")
        assert float(path.read_text().splitlines()[1]) == 1.0 / 3.0
