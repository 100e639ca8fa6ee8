#!/usr/bin/env python3
"""
Ejecuta la batería de aceptación: todos los escenarios de
``config/scenarios`` con la configuración indicada.

Cada escenario debe pasar, salvo ``density-undeclared``, que repite la
entrada de ``density-outside-hypothesis`` sin declarar la expectativa y por
tanto debe fallar. El script termina con código 0 cuando todos los
escenarios se comportan como se espera y con 1 en caso contrario.

Uso::

    python scripts/run_acceptance_battery.py --output-root results/ --threads 4
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

# Añadir directorio raíz al path para poder importar 'oscholder'
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.append(str(PROJECT_ROOT))

from oscholder.cli.main import EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_OK, configure_logging
from oscholder.data.config import HarnessConfig, load_harness_config
from oscholder.errors import OscHolderError
from oscholder.scenarios import load_scenario, run_scenario
from oscholder.utils.execution import resolve_threads

# bajo el logger del paquete para compartir handlers y formato
logger = logging.getLogger("oscholder.battery")

EXPECTED_TO_FAIL = {"density-undeclared"}


def main() -> int:
    parser = argparse.ArgumentParser(description="Run every acceptance scenario")
    parser.add_argument("--scenarios", type=str, default=str(PROJECT_ROOT / "config" / "scenarios"),
                        help="Directory of scenario JSON files")
    parser.add_argument("--output-root", type=str, default=None,
                        help="Write each scenario's reports to <output-root>/<scenario>")
    parser.add_argument("--config", type=str, default=None, help="Harness YAML configuration")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--log-level", type=str, default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    args = parser.parse_args()

    configure_logging(getattr(logging, args.log_level))
    try:
        config = load_harness_config(args.config) if args.config else HarnessConfig()
        threads = resolve_threads(args.threads, config.execution.threads)
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR

    config_path = Path(args.config) if args.config else None
    paths = sorted(Path(args.scenarios).glob("*.json"))
    if not paths:
        logger.error(f"No scenarios found in {args.scenarios}")
        return EXIT_CONFIG_ERROR

    print("=" * 80)
    print(f"ACCEPTANCE BATTERY ({len(paths)} scenarios, {threads} thread(s))")
    print("=" * 80)

    rows = []
    for path in paths:
        try:
            scenario = load_scenario(path)
            output_dir = Path(args.output_root) / scenario.name if args.output_root else None
            result = run_scenario(scenario, config, output_dir, threads, config_path)
            passed = result.passed
            note = "; ".join(o.message for o in result.outcomes if not o.matched)
        except OscHolderError as e:
            passed, note = False, str(e)
        expected = path.stem not in EXPECTED_TO_FAIL
        ok = passed == expected
        rows.append((path.stem, passed, ok))
        status = "PASS" if passed else "FAIL"
        mark = "✓" if ok else "✗"
        print(f"  {mark} {path.stem:<32} {status}")
        if not ok and note:
            print(f"      {note}")

    good = sum(1 for _, _, ok in rows if ok)
    print("=" * 80)
    print(f"  As expected: {good}/{len(rows)}")
    print("=" * 80)
    return EXIT_OK if good == len(rows) else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
