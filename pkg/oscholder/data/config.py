"""
config.py

Dataclasses de configuración del arnés de verificación y carga desde un
fichero YAML. Cada campo tiene el mismo valor por defecto que el argumento
correspondiente de la librería, de modo que una sección ausente equivale a
no configurar nada.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from oscholder.approach.target import DEFAULT_TIE_RTOL as APPROACH_TIE_RTOL
from oscholder.grid.hull import DEFAULT_HULL_RTOL
from oscholder.measure.sampling import DEFAULT_CHUNK_SIZE, DEFAULT_MAX_RETRIES
from oscholder.morphology.stencil import DEFAULT_MAX_OFFSETS, DEFAULT_TIE_RTOL

KERNELS = ("auto", "naive")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class MeasureConfig:
    """Constante c de μ = c·Leb."""

    c: float = 1.0


@dataclass
class MorphologyConfig:
    """Parámetros de las plantillas de bola y del núcleo de extremos."""

    max_offsets: int = DEFAULT_MAX_OFFSETS
    tie_rtol: float = DEFAULT_TIE_RTOL
    kernel: str = "auto"


@dataclass
class SweepConfig:
    """Rejilla geométrica de δ por defecto."""

    delta_min_cells: float = 2.0
    ratio: float = 2.0 ** 0.25
    # None = diámetro del dominio
    delta_max: Optional[float] = None


@dataclass
class TolerancesConfig:
    thm1_rtol: float = 1e-9
    stat_multiplier: float = 3.0
    open_closed_rtol: float = 0.02
    sigma: float = 3.0
    contraction_atol: float = 1e-9
    hull_rtol: float = DEFAULT_HULL_RTOL
    coarea_rtol: float = 0.01


@dataclass
class DensityConfig:
    """Familia de intervalos de la comprobación de densidad."""

    n_uniform: int = 50
    n_random: int = 50
    seed: int = 0


@dataclass
class ApproachConfig:
    tie_rtol: float = APPROACH_TIE_RTOL
    curvature_factor: float = 10.0


@dataclass
class SamplingConfig:
    """Monte Carlo por bloques Philox."""

    chunk_size: int = DEFAULT_CHUNK_SIZE
    max_retries: int = DEFAULT_MAX_RETRIES
    r_samples: int = 10_000


@dataclass
class ExecutionConfig:
    # None = núcleos disponibles
    threads: Optional[int] = None


@dataclass
class LoggingConfig:
    level: str = "INFO"
    log_file: Optional[str] = None


@dataclass
class HarnessConfig:
    """Configuración completa del arnés."""

    measure: MeasureConfig = field(default_factory=MeasureConfig)
    morphology: MorphologyConfig = field(default_factory=MorphologyConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tolerances: TolerancesConfig = field(default_factory=TolerancesConfig)
    density: DensityConfig = field(default_factory=DensityConfig)
    approach: ApproachConfig = field(default_factory=ApproachConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def morphology_kwargs(self) -> Dict[str, Any]:
        """Keyword arguments shared by every grid-function operation."""
        return {
            "kernel": self.morphology.kernel,
            "max_offsets": self.morphology.max_offsets,
            "tie_rtol": self.morphology.tie_rtol,
        }


def _load_yaml(path: Path) -> Dict[str, Any]:
    """Carga un fichero YAML y devuelve su contenido como diccionario."""
    with path.open("r", encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}


def _section(raw: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ValueError(f"Section '{name}' must be a mapping, got {type(value).__name__}")
    return value


def _positive(value: Any, name: str) -> float:
    if value is None or float(value) <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def load_harness_config(config_path: str | Path) -> HarnessConfig:
    """
    Carga la configuración del arnés desde un fichero YAML.

    Parameters
    ----------
    config_path : str | Path
        Ruta al fichero YAML (por ejemplo, config/harness/default.yaml).

    Returns
    -------
    HarnessConfig
        Configuración con los valores por defecto en las claves ausentes.

    Raises
    ------
    FileNotFoundError
        Si el fichero no existe.
    ValueError
        Si el YAML es inválido o algún valor está fuera de rango.
    """
    path = Path(config_path).expanduser().resolve()

    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    try:
        raw: Dict[str, Any] = _load_yaml(path)
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid YAML in {path}: {e}")
    if not isinstance(raw, dict):
        raise ValueError(f"Top level of {path} must be a mapping")

    measure_raw = _section(raw, "measure")
    measure = MeasureConfig(c=_positive(measure_raw.get("c", 1.0), "measure.c"))

    morph_raw = _section(raw, "morphology")
    morphology = MorphologyConfig(
        max_offsets=int(_positive(morph_raw.get("max_offsets", DEFAULT_MAX_OFFSETS), "morphology.max_offsets")),
        tie_rtol=float(morph_raw.get("tie_rtol", DEFAULT_TIE_RTOL)),
        kernel=morph_raw.get("kernel", "auto"),
    )
    if morphology.kernel not in KERNELS:
        raise ValueError(f"morphology.kernel must be one of {KERNELS}, got '{morphology.kernel}'")

    sweep_raw = _section(raw, "sweep")
    sweep = SweepConfig(
        delta_min_cells=float(_positive(sweep_raw.get("delta_min_cells", 2.0), "sweep.delta_min_cells")),
        ratio=float(sweep_raw.get("ratio", 2.0 ** 0.25)),
        delta_max=sweep_raw.get("delta_max"),
    )
    if sweep.ratio <= 1:
        raise ValueError(f"sweep.ratio must be > 1, got {sweep.ratio}")

    tol_raw = _section(raw, "tolerances")
    tolerances = TolerancesConfig(
        thm1_rtol=float(tol_raw.get("thm1_rtol", 1e-9)),
        stat_multiplier=float(tol_raw.get("stat_multiplier", 3.0)),
        open_closed_rtol=float(tol_raw.get("open_closed_rtol", 0.02)),
        sigma=float(tol_raw.get("sigma", 3.0)),
        contraction_atol=float(tol_raw.get("contraction_atol", 1e-9)),
        hull_rtol=float(tol_raw.get("hull_rtol", DEFAULT_HULL_RTOL)),
        coarea_rtol=float(tol_raw.get("coarea_rtol", 0.01)),
    )

    density_raw = _section(raw, "density")
    density = DensityConfig(
        n_uniform=int(density_raw.get("n_uniform", 50)),
        n_random=int(density_raw.get("n_random", 50)),
        seed=int(density_raw.get("seed", 0)),
    )

    approach_raw = _section(raw, "approach")
    approach = ApproachConfig(
        tie_rtol=float(approach_raw.get("tie_rtol", APPROACH_TIE_RTOL)),
        curvature_factor=float(approach_raw.get("curvature_factor", 10.0)),
    )

    sampling_raw = _section(raw, "sampling")
    sampling = SamplingConfig(
        chunk_size=int(_positive(sampling_raw.get("chunk_size", DEFAULT_CHUNK_SIZE), "sampling.chunk_size")),
        max_retries=int(sampling_raw.get("max_retries", DEFAULT_MAX_RETRIES)),
        r_samples=int(_positive(sampling_raw.get("r_samples", 10_000), "sampling.r_samples")),
    )

    exec_raw = _section(raw, "execution")
    threads = exec_raw.get("threads")
    if threads is not None:
        threads = int(_positive(threads, "execution.threads"))
    execution = ExecutionConfig(threads=threads)

    log_raw = _section(raw, "logging")
    logging_cfg = LoggingConfig(
        level=str(log_raw.get("level", "INFO")).upper(),
        log_file=log_raw.get("log_file"),
    )
    if logging_cfg.level not in LOG_LEVELS:
        raise ValueError(f"logging.level must be one of {LOG_LEVELS}, got '{logging_cfg.level}'")

    return HarnessConfig(
        measure=measure,
        morphology=morphology,
        sweep=sweep,
        tolerances=tolerances,
        density=density,
        approach=approach,
        sampling=sampling,
        execution=execution,
        logging=logging_cfg,
    )


def log_level(config: HarnessConfig) -> int:
    return getattr(logging, config.logging.level)
