"""
main.py

CLI del arnés de verificación oscholder.

Subcomandos:
    osc        Calcula osc_r f de una función de rejilla y la guarda.
    sweep      Barrido I(δ) = ∫ osc_δ g dμ, escrito como CSV.
    seminorm   Estimación de la seminorma de Hölder generalizada.
    verify     Ejecuta una única comprobación sobre una entrada.
    example    Escenarios incorporados (lattice, disconnected).
    run        Ejecuta un fichero de escenario.

Uso:
    oscholder run config/scenarios/lattice-1d.json --output-dir results/lattice
    oscholder verify thm1 --generator '{"generator": "random", "n": 256, "h": 0.004}' \\
                          --param r=0.03125 --param alpha=1
    oscholder example disconnected --N 8 --threads 4

Códigos de salida: 0 todo correcto, 1 fallo de alguna comprobación,
2 error de configuración, 130 interrupción por el usuario.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from oscholder.data.config import HarnessConfig, load_harness_config, log_level
from oscholder.data.generators import generate_input
from oscholder.errors import (
    GridFormatError,
    OscHolderError,
    OutsideHypothesisError,
    ScenarioFileNotFoundError,
    ScenarioSpecError,
)
from oscholder.grid.grid_function import GridFunction, save_grid_function
from oscholder.morphology.operators import oscillation
from oscholder.scenarios.examples import EXAMPLES, example_scenario
from oscholder.scenarios.runner import ScenarioResult, run_scenario
from oscholder.scenarios.scenario_parser import Scenario, load_scenario, parse_scenario
from oscholder.seminorm.sweep import SweepGrid, osc_integral_sweep, save_sweep_csv
from oscholder.utils.execution import resolve_threads

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_INTERRUPTED = 130

VERIFY_CHECKS = (
    "thm1", "thm2", "sandwich", "density", "continuity", "contraction",
    "derivative", "lemma3", "coarea", "open-closed",
)


PACKAGE_LOGGER = "oscholder"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
LOG_DATEFMT = "%H:%M:%S"


def configure_logging(level: int = logging.INFO, log_file: Optional[str] = None) -> logging.Logger:
    """
    Configura el logger del paquete ``oscholder``.

    Cada llamada sustituye los handlers anteriores, así que ejecutar ``main``
    varias veces en el mismo proceso no duplica líneas. Los mensajes salen
    por la salida estándar y, con ``log_file``, también a fichero.

    Parameters
    ----------
    level : int
        Nivel de logging (DEBUG, INFO, WARNING, ERROR).
    log_file : str, optional
        Ruta a fichero de log; se sobrescribe en cada ejecución.

    Returns
    -------
    logging.Logger
        El logger del paquete ya configurado.
    """
    package = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(package.handlers):
        package.removeHandler(handler)
        handler.close()

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode="w", encoding="utf-8"))
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT)
    for handler in handlers:
        handler.setFormatter(formatter)
        package.addHandler(handler)
    package.setLevel(level)
    return package


def print_header(title: str) -> None:
    print()
    print("=" * 80)
    print(title)
    print("=" * 80)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _json_arg(raw: str, name: str) -> Any:
    """Parse ``raw`` as inline JSON or as the path of a JSON file."""
    path = Path(raw).expanduser()
    try:
        is_file = path.suffix == ".json" or path.exists()
    except OSError:
        # inline JSON longer than a file name
        is_file = False
    if is_file:
        if not path.exists():
            raise ScenarioFileNotFoundError(f"{name} file not found: {path}")
        with path.open("r", encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as e:
                raise ScenarioSpecError(f"Invalid JSON in {path}: {e}")
    try:
        return json.loads(raw)
    except json.JSONDecodeError as e:
        raise ScenarioSpecError(f"--{name} is neither a JSON file nor inline JSON: {e}")


def _param_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_params(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    """``["r=0.5", "refine=true"]`` → ``{"r": 0.5, "refine": True}``."""
    params: Dict[str, Any] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ScenarioSpecError(f"--param expects key=value, got '{item}'")
        params[key.strip()] = _param_value(value.strip())
    return params


def _input_spec(args: argparse.Namespace) -> Optional[Dict[str, Any]]:
    if getattr(args, "generator", None):
        return _json_arg(args.generator, "generator")
    if getattr(args, "input", None):
        return {"generator": "file", "path": str(Path(args.input).expanduser().resolve())}
    return None


def _load_input(args: argparse.Namespace, config: HarnessConfig) -> GridFunction:
    spec = _input_spec(args)
    if spec is None:
        raise ScenarioSpecError("Provide an input with --input <grid header> or --generator <JSON>")
    return generate_input(spec)


def _sweep_from_args(args: argparse.Namespace, g: GridFunction, config: HarnessConfig) -> SweepGrid:
    if args.deltas:
        return SweepGrid.from_values(args.deltas)
    cfg = config.sweep
    delta_min_cells = cfg.delta_min_cells if args.delta_min is None else args.delta_min / g.spacing
    return SweepGrid.default_for(
        g,
        delta_min_cells,
        args.ratio or cfg.ratio,
        args.delta_max if args.delta_max is not None else cfg.delta_max,
        config.morphology.tie_rtol,
        config.tolerances.hull_rtol,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_osc(args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    g = _load_input(args, config)
    osc = oscillation(g, args.r, args.mode, **config.morphology_kwargs())
    path = save_grid_function(osc, args.output)
    print_header("OSCILLATION")
    print(f"  r={args.r:g} mode={args.mode} shape={g.shape}")
    print(f"  max={osc.sup():.6g} min={osc.inf():.6g}")
    print(f"  Written to {path}")
    return EXIT_OK


def _subject(args: argparse.Namespace, config: HarnessConfig) -> GridFunction:
    g = _load_input(args, config)
    if args.osc_r is not None:
        g = oscillation(g, args.osc_r, args.osc_mode, **config.morphology_kwargs())
    return g


def cmd_sweep(args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    g = _subject(args, config)
    report = osc_integral_sweep(
        g, args.mode, _sweep_from_args(args, g, config), args.alpha, None, threads,
        **config.morphology_kwargs(),
    )
    if args.output:
        save_sweep_csv(report, args.output)
    else:
        print(report.to_frame().to_csv(index=False, float_format="%.17g"), end="")
    return EXIT_OK


def cmd_seminorm(args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    g = _subject(args, config)
    report = osc_integral_sweep(
        g, args.mode, _sweep_from_args(args, g, config), args.alpha, None, threads,
        **config.morphology_kwargs(),
    )
    if args.output:
        save_sweep_csv(report, args.output)

    print_header("GENERALIZED HÖLDER SEMINORM")
    print(f"  α={args.alpha:g} mode={args.mode} sweep size={len(report.records)}")
    print(f"  Estimate:     {report.estimate:.6g}")
    print(f"  Argmax δ:     {report.argmax_delta:.6g}")
    print(f"  Monotone I(δ): {report.is_monotone()}")
    for warning in report.warnings:
        print(f"  Warning: {warning}")

    if args.reference is not None:
        error = abs(report.estimate - args.reference) / abs(args.reference)
        ok = error <= args.rtol
        print(f"  Reference:    {args.reference:.6g} (relative error {error:.2%}, {'PASS' if ok else 'FAIL'})")
        print("=" * 80)
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    print("=" * 80)
    return EXIT_OK


def _finish(result: ScenarioResult) -> int:
    print_header(f"SCENARIO '{result.name}': {'PASSED' if result.passed else 'FAILED'}")
    for outcome in result.outcomes:
        mark = "ok" if outcome.matched else "MISMATCH"
        print(f"  {outcome.id:<32} {outcome.status:<18} expected {outcome.expect:<18} {mark}")
    if result.output_dir is not None:
        print(f"  Reports: {result.output_dir}")
    print("=" * 80)
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def _run(scenario: Scenario, args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    result = run_scenario(
        scenario,
        config,
        output_dir=args.output_dir,
        threads=threads,
        config_path=Path(args.config) if args.config else None,
        verbose=not args.quiet,
    )
    return _finish(result)


def cmd_verify(args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    spec: Dict[str, Any] = {
        "name": f"verify-{args.check}",
        "checks": [{"check": args.check, "expect": args.expect, "params": parse_params(args.param)}],
        "seed": args.seed,
    }
    input_spec = _input_spec(args)
    if input_spec is not None:
        spec["input"] = input_spec
    if args.target:
        spec["target"] = _json_arg(args.target, "target")
    if args.set:
        spec["set"] = _json_arg(args.set, "set")
    return _run(parse_scenario(spec, Path.cwd(), "<command line>"), args, config, threads)


def cmd_example(args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    overrides: Dict[str, Any] = {"h": args.h}
    if args.name == "lattice":
        overrides["alpha"] = args.alpha
    else:
        overrides["N"] = args.N
    return _run(example_scenario(args.name, **overrides), args, config, threads)


def cmd_run(args: argparse.Namespace, config: HarnessConfig, threads: int) -> int:
    return _run(load_scenario(args.scenario), args, config, threads)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Path to the harness YAML configuration")
    common.add_argument("--threads", type=int, default=None,
                        help="Worker threads (overrides OSC_THREADS and execution.threads)")
    common.add_argument("--log-level", type=str, default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Override logging level from config")
    common.add_argument("--log-file", type=str, default=None, help="Also write the log to this file")
    return common


def _add_input_args(parser: argparse.ArgumentParser, required: bool = False) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--input", type=str, help="Grid-function header JSON")
    group.add_argument("--generator", type=str, help="Generator spec as inline JSON or a JSON file")


def _add_sweep_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=1.0, help="Hölder exponent in (0, 1]")
    parser.add_argument("--mode", choices=["open", "closed"], default="open", help="Ball mode of the sweep")
    parser.add_argument("--osc-r", type=float, default=None, help="Apply osc_r to the input first")
    parser.add_argument("--osc-mode", choices=["open", "closed"], default="open")
    parser.add_argument("--deltas", type=float, nargs="+", default=None, help="Explicit δ values")
    parser.add_argument("--delta-min", type=float, default=None)
    parser.add_argument("--delta-max", type=float, default=None)
    parser.add_argument("--ratio", type=float, default=None, help="Geometric ratio of the δ grid")
    parser.add_argument("--output", type=str, default=None, help="CSV file for delta,I,I_over_delta_alpha")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output-dir", type=str, default=None, help="Directory for JSON/CSV reports")
    parser.add_argument("--quiet", action="store_true", help="Do not print the per-check reports")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="oscholder",
        description="Oscillation operators, generalized Hölder seminorm and approach-map checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  oscholder run config/scenarios/thm2-annulus.json --output-dir results/thm2
  oscholder example lattice --threads 4
  oscholder seminorm --generator '{"generator": "lattice", "r": 0.015625, "h": 0.0009765625}' \\
      --osc-r 0.015625 --reference 64
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("osc", parents=[common], help="Compute osc_r f and save it as a grid function")
    _add_input_args(p, required=True)
    p.add_argument("--r", type=float, required=True, help="Oscillation radius")
    p.add_argument("--mode", choices=["open", "closed"], default="open")
    p.add_argument("--output", type=str, required=True, help="Header path of the written grid function")
    p.set_defaults(func=cmd_osc)

    p = sub.add_parser("sweep", parents=[common], help="Write the I(δ) sweep as CSV")
    _add_input_args(p, required=True)
    _add_sweep_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("seminorm", parents=[common], help="Estimate the generalized Hölder seminorm")
    _add_input_args(p, required=True)
    _add_sweep_args(p)
    p.add_argument("--reference", type=float, default=None, help="Expected value; exit 1 when off by more than --rtol")
    p.add_argument("--rtol", type=float, default=0.15)
    p.set_defaults(func=cmd_seminorm)

    p = sub.add_parser("verify", parents=[common], help="Run a single check")
    p.add_argument("check", choices=VERIFY_CHECKS)
    _add_input_args(p)
    p.add_argument("--target", type=str, default=None, help="Target set H as inline JSON or a JSON file")
    p.add_argument("--set", type=str, default=None, help="Set A as inline JSON or a JSON file")
    p.add_argument("--param", action="append", default=None, metavar="KEY=VALUE",
                   help="Check parameter; values are parsed as JSON when possible")
    p.add_argument("--expect", choices=["pass", "fail", "hypothesis-error"], default="pass")
    p.add_argument("--seed", type=int, default=0)
    _add_run_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example", parents=[common], help="Run a built-in optimality example")
    p.add_argument("name", choices=sorted(EXAMPLES))
    p.add_argument("--N", type=float, default=None, help="Half distance of the disconnected pieces")
    p.add_argument("--alpha", type=float, default=None, help="Hölder exponent of the lattice example")
    p.add_argument("--h", type=float, default=None, help="Grid spacing")
    _add_run_args(p)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("run", parents=[common], help="Run a scenario file")
    p.add_argument("scenario", type=str, help="Scenario JSON file")
    _add_run_args(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)

    try:
        config = load_harness_config(args.config) if args.config else HarnessConfig()
        level = getattr(logging, args.log_level) if args.log_level else log_level(config)
        configure_logging(level, args.log_file or config.logging.log_file)
        if args.config:
            logger.info(f"Loaded configuration from {args.config}")
        threads = resolve_threads(args.threads, config.execution.threads)
        logger.debug(f"Using {threads} thread(s)")
    except (FileNotFoundError, ValueError) as e:
        configure_logging(logging.INFO)
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR

    try:
        return args.func(args, config, threads)
    except (ScenarioFileNotFoundError, FileNotFoundError) as e:
        logger.error(f"File not found: {e}")
        return EXIT_CONFIG_ERROR
    except (ScenarioSpecError, GridFormatError) as e:
        logger.error(f"Scenario specification error: {e}")
        return EXIT_CONFIG_ERROR
    except OutsideHypothesisError as e:
        logger.error(f"Hypothesis violation: {e}")
        return EXIT_CHECK_FAILED
    except OscHolderError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_CONFIG_ERROR
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_CHECK_FAILED


def run_main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of ``oscholder-run``: shortcut for ``oscholder run``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    return main(["run", *argv])


if __name__ == "__main__":
    sys.exit(main())
