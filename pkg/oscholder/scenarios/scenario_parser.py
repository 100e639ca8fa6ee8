"""
Parser for scenario specification files.

A scenario names an input grid function (or a target set and a set A for
the continuous checks), shared parameters and an ordered list of checks.

Expected JSON format::

    {
      "name": "lattice-1d",
      "input": {"generator": "lattice", "d": 1, "L": 1, "r": 0.015625, "h": 0.0009765625},
      "subject": "oscillation",          // optional: "input" (default) | "oscillation"
      "target": {"sites": [[0, 0]]},     // optional TargetSet spec
      "set": {"shape": "annulus", ...},  // optional SetSpec
      "params": {"r": 0.015625, "alpha": 1, "mode": "open"},
      "checks": ["sweep", {"check": "thm1", "expect": "pass", "params": {...}}],
      "tolerances": {"sigma": 3},        // optional overrides of the harness config
      "seed": 0,
      "output_dir": "results/lattice-1d" // optional
    }
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from oscholder.errors import ScenarioFileNotFoundError, ScenarioSpecError

logger = logging.getLogger(__name__)

Expectation = Literal["pass", "fail", "hypothesis-error"]
EXPECTATIONS = ("pass", "fail", "hypothesis-error")
SUBJECTS = ("input", "oscillation")

# checks evaluated on grid functions
GRID_CHECKS = ("sweep", "seminorm", "thm1", "sandwich", "density", "continuity", "open-closed")
# checks that only need a target set
TARGET_CHECKS = ("contraction", "derivative", "diameter")
# checks that need a target set and a set A
SET_CHECKS = ("k-decomposition", "lemma3", "thm2", "coarea", "coarea-slices")
CHECKS = GRID_CHECKS + TARGET_CHECKS + SET_CHECKS + ("annulus-ratio",)


@dataclass
class CheckSpec:
    """One entry of the check list."""

    check: str
    id: str
    expect: Expectation = "pass"
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Scenario:
    """Represents a parsed scenario specification."""

    name: str
    checks: List[CheckSpec]
    input: Optional[Dict[str, Any]] = None
    subject: str = "input"
    target: Optional[Dict[str, Any]] = None
    set: Optional[Dict[str, Any]] = None
    params: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output_dir: Optional[str] = None
    description: str = ""

    # Source file for logging and relative paths
    source_file: Optional[str] = None
    base_dir: Optional[Path] = None

    def check_params(self, spec: CheckSpec) -> Dict[str, Any]:
        """Scenario parameters overridden by the check's own parameters."""
        merged = dict(self.params)
        merged.update(spec.params)
        return merged


def _parse_check(raw: Any, index: int, source: str) -> CheckSpec:
    if isinstance(raw, str):
        raw = {"check": raw}
    if not isinstance(raw, Mapping) or "check" not in raw:
        raise ScenarioSpecError(f"Check #{index + 1} in {source} needs a 'check' field")
    name = raw["check"]
    if name not in CHECKS:
        raise ScenarioSpecError(f"Unknown check '{name}' in {source}. Must be one of {CHECKS}")
    expect = raw.get("expect", "pass")
    if expect not in EXPECTATIONS:
        raise ScenarioSpecError(
            f"Invalid expectation '{expect}' for check '{name}' in {source}. Must be one of {EXPECTATIONS}"
        )
    params = raw.get("params", {})
    if not isinstance(params, Mapping):
        raise ScenarioSpecError(f"'params' of check '{name}' in {source} must be an object")
    return CheckSpec(name, str(raw.get("id", name)), expect, dict(params))


def _unique_ids(checks: List[CheckSpec]) -> None:
    seen: Dict[str, int] = {}
    for spec in checks:
        count = seen.get(spec.id, 0) + 1
        seen[spec.id] = count
        if count > 1:
            spec.id = f"{spec.id}-{count}"


def parse_scenario(
    spec: Mapping[str, Any], base_dir: Optional[Path] = None, source: str = "<scenario>"
) -> Scenario:
    """
    Validate a scenario mapping.

    Raises
    ------
    ScenarioSpecError
        Missing fields, unknown checks or expectations, or a check whose
        inputs (grid function, target set, set A) are not provided.
    """
    if not isinstance(spec, Mapping):
        raise ScenarioSpecError(f"Scenario in {source} must be a JSON object")
    if "name" not in spec:
        raise ScenarioSpecError(f"Missing 'name' field in {source}")
    raw_checks = spec.get("checks")
    if not isinstance(raw_checks, list) or not raw_checks:
        raise ScenarioSpecError(f"'checks' must be a non-empty list in {source}")
    checks = [_parse_check(raw, i, source) for i, raw in enumerate(raw_checks)]
    _unique_ids(checks)

    subject = spec.get("subject", "input")
    if subject not in SUBJECTS:
        raise ScenarioSpecError(f"Invalid subject '{subject}' in {source}. Must be one of {SUBJECTS}")

    for mapping_field in ("input", "target", "set", "params", "tolerances"):
        value = spec.get(mapping_field)
        if value is not None and not isinstance(value, Mapping):
            raise ScenarioSpecError(f"'{mapping_field}' must be an object in {source}")

    names = {c.check for c in checks}
    if names & set(GRID_CHECKS) and spec.get("input") is None:
        raise ScenarioSpecError(f"Grid checks {sorted(names & set(GRID_CHECKS))} need an 'input' in {source}")
    if names & set(TARGET_CHECKS + SET_CHECKS) and spec.get("target") is None:
        raise ScenarioSpecError(f"Checks {sorted(names & set(TARGET_CHECKS + SET_CHECKS))} need a 'target' in {source}")
    if names & set(SET_CHECKS) and spec.get("set") is None:
        raise ScenarioSpecError(f"Checks {sorted(names & set(SET_CHECKS))} need a 'set' in {source}")

    seed = spec.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ScenarioSpecError(f"'seed' must be a nonnegative integer in {source}, got {seed!r}")

    return Scenario(
        name=str(spec["name"]),
        checks=checks,
        input=dict(spec["input"]) if spec.get("input") is not None else None,
        subject=subject,
        target=dict(spec["target"]) if spec.get("target") is not None else None,
        set=dict(spec["set"]) if spec.get("set") is not None else None,
        params=dict(spec.get("params") or {}),
        tolerances=dict(spec.get("tolerances") or {}),
        seed=seed,
        output_dir=spec.get("output_dir"),
        description=str(spec.get("description", "")),
        source_file=source,
        base_dir=base_dir,
    )


def load_scenario(path: str | Path) -> Scenario:
    """
    Parse a scenario specification file.

    Raises
    ------
    ScenarioFileNotFoundError
        If the file doesn't exist.
    ScenarioSpecError
        If the file is not valid JSON or the scenario is invalid.
    """
    path = Path(path).expanduser().resolve()
    if not path.exists():
        raise ScenarioFileNotFoundError(f"Scenario file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            spec = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioSpecError(f"Invalid JSON in {path}: {e}")
    scenario = parse_scenario(spec, path.parent, str(path))
    logger.debug(f"Loaded scenario '{scenario.name}' with {len(scenario.checks)} checks from {path}")
    return scenario
