"""
Built-in scenarios for the two optimality examples.

``lattice``
    f is the indicator of D ∩ 4rℤ^d on D = [0, L]; g = osc_r f is 1 on
    windows of width 2r around the lattice points, so I(δ) ≈ L·min(1, δ/r)
    and the seminorm of g is about L/r^α, attained near δ = r.

``disconnected``
    D = [−N−1, −N+1] ∪ {0} ∪ [N−1, N+1] and f the indicator of {0}; with
    r = N the seminorm of osc_r f stays near μ(D) = 4 for every N.
"""

from __future__ import annotations

from typing import Any, Callable, Dict

from oscholder.scenarios.scenario_parser import Scenario, parse_scenario


def lattice_spec(L: float = 1.0, r: float = 1.0 / 64, h: float = 1.0 / 1024, alpha: float = 1.0) -> Dict[str, Any]:
    return {
        "name": "lattice-1d",
        "description": "Lattice indicator: I(δ) ≈ min(1, δ/r)·L and seminorm ≈ L/r^α near δ = r",
        "input": {"generator": "lattice", "d": 1, "L": L, "r": r, "h": h},
        "subject": "oscillation",
        "params": {"r": r, "alpha": alpha, "mode": "open"},
        "checks": [
            {
                "check": "seminorm",
                "params": {
                    "reference": L / r**alpha,
                    "rtol": 0.15,
                    "argmax_reference": r,
                    "argmax_factor": 2.0,
                    "curve": {"L": L, "r": r, "rtol": 0.1, "min_delta": 8 * h},
                },
            },
            "thm1",
            {"check": "sandwich", "params": {"delta": r / 4}},
            {"check": "open-closed", "params": {"refine": True, "halving_rtol": 0.25}},
        ],
    }


def disconnected_spec(N: float = 4.0, h: float = 1.0 / 64) -> Dict[str, Any]:
    return {
        "name": f"disconnected-N{N:g}",
        "description": "Three-component domain: seminorm of osc_N f stays near μ(D) = 4 for any N",
        "input": {"generator": "disconnected", "N": N, "h": h},
        "subject": "oscillation",
        "params": {"r": N, "mode": "open"},
        "checks": [
            {"check": "seminorm", "id": "seminorm-alpha-0.5",
             "params": {"alpha": 0.5, "reference": 4.0, "rtol": 0.15}},
            {"check": "seminorm", "id": "seminorm-alpha-1",
             "params": {"alpha": 1.0, "reference": 4.0, "rtol": 0.15}},
            {"check": "thm1", "id": "thm1-alpha-1", "params": {"alpha": 1.0}},
        ],
    }


EXAMPLES: Dict[str, Callable[..., Dict[str, Any]]] = {
    "lattice": lattice_spec,
    "disconnected": disconnected_spec,
}


def example_scenario(name: str, **overrides: Any) -> Scenario:
    """Parse the built-in scenario ``name`` with keyword overrides of its builder."""
    if name not in EXAMPLES:
        raise KeyError(f"Unknown example '{name}'. Must be one of {tuple(EXAMPLES)}")
    spec = EXAMPLES[name](**{k: v for k, v in overrides.items() if v is not None})
    return parse_scenario(spec, source=f"<example:{name}>")
