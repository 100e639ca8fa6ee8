from oscholder.scenarios.examples import EXAMPLES, example_scenario
from oscholder.scenarios.runner import CheckOutcome, ScenarioResult, run_scenario, write_outputs
from oscholder.scenarios.scenario_parser import (
    CHECKS,
    CheckSpec,
    Scenario,
    load_scenario,
    parse_scenario,
)

__all__ = [
    "CHECKS",
    "CheckOutcome",
    "CheckSpec",
    "EXAMPLES",
    "Scenario",
    "ScenarioResult",
    "example_scenario",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "write_outputs",
]
