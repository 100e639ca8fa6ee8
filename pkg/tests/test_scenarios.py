import json

import pytest

from oscholder.errors import InvalidParameterError, ScenarioFileNotFoundError, ScenarioSpecError
from oscholder.scenarios import runner
from oscholder.scenarios.examples import example_scenario
from oscholder.scenarios.runner import run_scenario
from oscholder.scenarios.scenario_parser import CHECKS, load_scenario, parse_scenario

LATTICE_INPUT = {"generator": "lattice", "d": 1, "L": 1, "r": 0.0625, "h": 0.00390625}
SMOOTH_INPUT = {"generator": "random", "n": 32, "h": 0.03125, "d": 2, "seed": 3, "smooth": 2}
ORIGIN = {"sites": [[0, 0]]}
COLLAR_ANNULUS = {"shape": "annulus", "params": {"center": [0, 0], "inner": 0.6, "outer": 1.04}}


def scenario(**fields):
    spec = {"name": "test", "seed": 0}
    spec.update(fields)
    return parse_scenario(spec)


class TestParser:
    def test_string_and_mapping_checks(self):
        sc = scenario(input=LATTICE_INPUT, params={"r": 0.0625},
                      checks=["thm1", {"check": "sandwich", "expect": "fail", "params": {"delta": 0.01}}])
        assert [c.check for c in sc.checks] == ["thm1", "sandwich"]
        assert sc.checks[1].expect == "fail"
        assert sc.check_params(sc.checks[1]) == {"r": 0.0625, "delta": 0.01}

    def test_duplicate_ids_are_numbered(self):
        sc = scenario(input=LATTICE_INPUT, checks=["sandwich", "sandwich", {"check": "sandwich", "id": "s"}])
        assert [c.id for c in sc.checks] == ["sandwich", "sandwich-2", "s"]

    @pytest.mark.parametrize(
        "fields, message",
        [
            ({"checks": []}, "non-empty"),
            ({"checks": ["spiral"]}, "Unknown check"),
            ({"checks": [{"params": {}}]}, "'check' field"),
            ({"checks": [{"check": "thm1", "expect": "maybe"}], "input": LATTICE_INPUT}, "expectation"),
            ({"checks": ["thm1"]}, "need an 'input'"),
            ({"checks": ["contraction"]}, "need a 'target'"),
            ({"checks": ["thm2"], "target": ORIGIN}, "need a 'set'"),
            ({"checks": ["thm1"], "input": LATTICE_INPUT, "subject": "gradient"}, "subject"),
            ({"checks": ["thm1"], "input": LATTICE_INPUT, "seed": -1}, "seed"),
            ({"checks": ["thm1"], "input": LATTICE_INPUT, "params": [1]}, "must be an object"),
            ({"checks": [{"check": "thm1", "params": 3}], "input": LATTICE_INPUT}, "must be an object"),
        ],
    )
    def test_invalid(self, fields, message):
        with pytest.raises(ScenarioSpecError, match=message):
            scenario(**fields)

    def test_missing_name(self):
        with pytest.raises(ScenarioSpecError, match="name"):
            parse_scenario({"checks": ["thm1"], "input": LATTICE_INPUT})

    def test_load_errors(self, tmp_path):
        with pytest.raises(ScenarioFileNotFoundError):
            load_scenario(tmp_path / "absent.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ScenarioSpecError, match="Invalid JSON"):
            load_scenario(bad)

    def test_shipped_scenarios_parse(self, config_dir):
        paths = sorted((config_dir / "scenarios").glob("*.json"))
        assert paths
        for path in paths:
            sc = load_scenario(path)
            assert sc.base_dir == path.parent
            assert all(c.check in CHECKS for c in sc.checks)


class TestRunner:
    def test_lattice_example(self, tmp_output):
        sc = example_scenario("lattice", r=0.0625, h=0.00390625)
        result = run_scenario(sc, output_dir=tmp_output)
        assert result.passed, [o.message for o in result.outcomes]
        assert [o.status for o in result.outcomes] == ["pass"] * 4

        for name in ("seminorm.json", "seminorm.csv", "thm1.json", "thm1.csv", "sandwich.json",
                     "open-closed.json", "summary.json", "metadata.json"):
            assert (tmp_output / name).exists(), name
        summary = json.loads((tmp_output / "summary.json").read_text())
        assert summary["verdict"] is True
        assert [c["id"] for c in summary["checks"]] == ["seminorm", "thm1", "sandwich", "open-closed"]
        metadata = json.loads((tmp_output / "metadata.json").read_text())
        assert metadata["scenario"] == "lattice-1d"
        assert "numpy" in metadata["versions"]

    def test_disconnected_example(self):
        result = run_scenario(example_scenario("disconnected", h=0.0625))
        assert result.passed, [o.message for o in result.outcomes]
        assert result.output_dir is None

    def test_reports_do_not_depend_on_threads(self, tmp_path):
        spec = {"name": "threads", "input": LATTICE_INPUT, "subject": "oscillation",
                "params": {"r": 0.0625}, "checks": ["sweep"]}
        run_scenario(parse_scenario(spec), output_dir=tmp_path / "one", threads=1)
        run_scenario(parse_scenario(spec), output_dir=tmp_path / "four", threads=4)
        for name in ("sweep.json", "sweep.csv"):
            assert (tmp_path / "one" / name).read_text() == (tmp_path / "four" / name).read_text()

    def test_declared_hypothesis_error(self):
        sc = scenario(input=SMOOTH_INPUT, checks=[
            {"check": "density", "expect": "hypothesis-error", "params": {"r": 0.25, "delta": 0.0625}},
        ])
        result = run_scenario(sc)
        assert result.passed
        assert result.outcomes[0].status == "hypothesis-error"

    def test_undeclared_hypothesis_error_fails(self):
        sc = scenario(input=SMOOTH_INPUT, checks=[
            {"check": "density", "params": {"r": 0.25, "delta": 0.0625}},
        ])
        result = run_scenario(sc)
        assert not result.passed
        assert "outside lemma hypothesis" in result.outcomes[0].message

    def test_expected_failure_matches(self):
        sc = scenario(input=LATTICE_INPUT, subject="oscillation", params={"r": 0.0625}, checks=[
            {"check": "seminorm", "expect": "fail", "params": {"reference": 1000, "rtol": 0.1}},
        ])
        result = run_scenario(sc)
        assert result.outcomes[0].status == "fail"
        assert result.passed

    def test_annulus_ratio(self):
        sc = scenario(checks=[{"check": "annulus-ratio", "params": {"d": 3, "R": 2, "delta": 1}}])
        outcome = run_scenario(sc).outcomes[0]
        assert outcome.status == "pass"
        ratios = outcome.report.details["ratios"]
        assert ratios == sorted(ratios, reverse=True)
        assert outcome.report.details["limit"] == pytest.approx(0.25)

    def test_approach_checks(self):
        sc = scenario(
            target={"random": {"n": 8, "d": 2, "seed": 5, "low": -1, "high": 1}},
            params={"box": {"lo": [-3, -3], "hi": [3, 3]}},
            checks=[
                {"check": "contraction", "params": {"delta": 0.1, "n_pairs": 2000}},
                {"check": "diameter", "params": {"delta": 0.1, "n_sets": 20}},
                {"check": "derivative", "params": {"r": 0.5, "n_configs": 20}},
            ],
        )
        result = run_scenario(sc)
        assert result.passed, [o.message for o in result.outcomes]

    def test_set_checks(self):
        sc = scenario(
            target=ORIGIN,
            set=COLLAR_ANNULUS,
            params={"r": 1, "delta": 0.05},
            checks=[
                {"check": "lemma3", "params": {"n": 50_000, "n_class": 2000}},
                {"check": "k-decomposition", "params": {"n_points": 200, "n_kmax": 1000}},
                {"check": "lemma3", "id": "lemma3-outside", "expect": "hypothesis-error",
                 "params": {"delta": 0.25, "n": 1000}},
            ],
        )
        result = run_scenario(sc)
        assert result.passed, [o.message for o in result.outcomes]
        details = result.outcomes[1].report.details
        assert details["K"] == 9
        assert details["label_errors"] == 0

    def test_thm2(self):
        sc = scenario(
            target=ORIGIN,
            set={"shape": "annulus", "params": {"center": [0, 0], "inner": 1, "outer": 1.2,
                                                "inner_closed": False}},
            checks=[{"check": "thm2", "params": {"delta": 0.5, "n": 100_000}}],
        )
        outcome = run_scenario(sc).outcomes[0]
        assert outcome.status == "pass", outcome.message
        assert outcome.report.measured == pytest.approx(0.24 / 0.44, abs=0.03)

    def test_missing_parameter(self):
        sc = scenario(input=LATTICE_INPUT, checks=["thm1"])
        with pytest.raises(ScenarioSpecError, match="needs parameter 'r'"):
            run_scenario(sc)

    def test_invalid_parameter_type(self):
        sc = scenario(input=LATTICE_INPUT, checks=[{"check": "sandwich", "params": {"r": "wide"}}])
        with pytest.raises(ScenarioSpecError, match="Invalid parameters"):
            run_scenario(sc)

    @pytest.mark.parametrize(
        "check, message",
        [
            ({"check": "sandwich", "params": {"r": 0.0625, "mode": "ajar"}}, "'mode'"),
            ({"check": "sweep", "params": {"curve": {"r": 0.0625}}}, "needs parameter 'L'"),
            ({"check": "sweep", "params": {"curve": [1, 0.0625]}}, "must be a mapping"),
            ({"check": "sweep", "params": {"sweep": {"deltas": ["a", "b"]}}}, "'deltas'"),
        ],
    )
    def test_invalid_nested_parameters(self, check, message):
        sc = scenario(input=LATTICE_INPUT, checks=[check])
        with pytest.raises(ScenarioSpecError, match=message):
            run_scenario(sc)

    def test_invalid_tolerance_override(self):
        sc = scenario(input=LATTICE_INPUT, params={"r": 0.0625}, tolerances={"hull_rtol": "tight"},
                      checks=["sandwich"])
        with pytest.raises(ScenarioSpecError, match="hull_rtol"):
            run_scenario(sc)

    def test_internal_error_is_not_a_spec_error(self, monkeypatch):
        def broken(ctx, spec, params):
            raise ValueError("operands could not be broadcast together")

        monkeypatch.setitem(runner._RUNNERS, "sandwich", broken)
        sc = scenario(input=LATTICE_INPUT, params={"r": 0.0625}, checks=["sandwich"])
        with pytest.raises(ValueError, match="broadcast") as info:
            run_scenario(sc)
        assert not isinstance(info.value, ScenarioSpecError)

    def test_library_domain_error_is_typed(self):
        # r < 0 converts fine and is rejected by thm1_check itself
        sc = scenario(input=LATTICE_INPUT, checks=[{"check": "thm1", "params": {"r": -1}}])
        with pytest.raises(InvalidParameterError):
            run_scenario(sc)

    def test_refinement_needs_known_generator(self):
        sc = scenario(input=SMOOTH_INPUT, params={"r": 0.125},
                      checks=[{"check": "open-closed", "params": {"refine": True}}])
        with pytest.raises(ScenarioSpecError, match="Refinement"):
            run_scenario(sc)

    def test_oscillation_subject_needs_radius(self):
        sc = scenario(input=LATTICE_INPUT, subject="oscillation", checks=["sweep"])
        with pytest.raises(ScenarioSpecError, match="params.r"):
            run_scenario(sc)

    def test_relative_output_dir(self, tmp_path):
        spec = {"name": "rel", "input": LATTICE_INPUT, "params": {"r": 0.0625},
                "checks": ["sandwich"], "output_dir": "out"}
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(spec))
        run_scenario(load_scenario(path))
        assert (tmp_path / "out" / "sandwich.json").exists()


class TestKMaxConsistency:
    @pytest.mark.parametrize("m", [2, 4, 25])
    @pytest.mark.parametrize("shift", [-1e-10, -1e-13, 0.0, 1e-13, 1e-10])
    def test_near_integer_ratios(self, m, shift):
        delta = 0.01
        r = (2 * m + 1) * delta * (1.0 + shift)
        assert runner.kmax_agrees(r, delta)
        assert runner.k_max(r, delta) in (m, m - 1)

    @pytest.mark.parametrize("offset", [-2, 1])
    def test_rejects_off_by_more_than_rounding(self, monkeypatch, offset):
        r, delta = 9 * 0.01, 0.01
        honest = runner.k_max(r, delta)
        monkeypatch.setattr(runner, "k_max", lambda r, delta: honest + offset)
        assert not runner.kmax_agrees(r, delta)

    def test_random_pairs_agree(self):
        n, mismatches = runner._kmax_consistency(5000, seed=7)
        assert (n, mismatches) == (5000, 0)


SHIPPED = ["annulus-sweep", "coarea-annulus", "coarea-square", "contraction",
           "density-outside-hypothesis", "disconnected", "disconnected-n8", "lattice-1d", "lemma3-annulus",
           "random-battery-2d", "thm2-annulus"]


DECOMPOSITION_CASES = [
    pytest.param(ORIGIN, COLLAR_ANNULUS, 1.0, 0.05, id="collar-annulus"),
    pytest.param(ORIGIN, {"shape": "annulus", "params": {"center": [0, 0], "inner": 0.3, "outer": 1.5}},
                 1.0, 0.15, id="wide-annulus"),
    pytest.param({"sites": [[0, 0], [3, 0]]}, {"shape": "box", "params": {"lo": [0.5, -0.5], "hi": [1.5, 0.5]}},
                 1.0, 0.1, id="two-sites-box"),
    pytest.param({"sites": [[0, 0, 0]]},
                 {"shape": "annulus", "params": {"center": [0, 0, 0], "inner": 1.2, "outer": 2.0}},
                 1.4, 0.1, id="shell-3d"),
    pytest.param({"random": {"n": 8, "d": 2, "seed": 5, "low": -1, "high": 1}},
                 {"shape": "ball", "params": {"center": [3, 3], "radius": 0.5}}, 2.0, 0.2, id="far-ball"),
]


@pytest.mark.slow
class TestAcceptanceBattery:
    @pytest.mark.parametrize("name", SHIPPED)
    def test_scenario_passes(self, config_dir, tmp_path, name):
        result = run_scenario(load_scenario(config_dir / "scenarios" / f"{name}.json"),
                              output_dir=tmp_path, threads=2)
        assert result.passed, [(o.id, o.message) for o in result.outcomes]

    def test_undeclared_hypothesis_error(self, config_dir, tmp_path):
        result = run_scenario(load_scenario(config_dir / "scenarios" / "density-undeclared.json"),
                              output_dir=tmp_path)
        assert not result.passed

    # 5 configurations x 2000 points, each with 10⁴ random (r, δ) pairs for k_max
    @pytest.mark.parametrize("target, set_spec, r, delta", DECOMPOSITION_CASES)
    def test_decomposition(self, target, set_spec, r, delta):
        sc = scenario(target=target, set=set_spec, params={"r": r, "delta": delta},
                      checks=[{"check": "k-decomposition", "params": {"n_points": 2000, "n_kmax": 10_000}}])
        outcome = run_scenario(sc).outcomes[0]
        assert outcome.status == "pass", outcome.message
        details = outcome.report.details
        assert details["kmax_mismatches"] == details["trail_errors"] == details["label_errors"] == 0
