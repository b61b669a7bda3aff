"""Experiment orchestration: configs, runners, and report emission."""

from .config import (  # noqa: F401
    FlatSmallPConfig,
    LabConfig,
    PInftyConfig,
    RevolutionConfig,
    RunSettings,
    SphereInstabilityConfig,
    WeakstarConfig,
    load_config,
)
from .report import Check, ExperimentReport, emit_report, emit_summary  # noqa: F401
from .runners import (  # noqa: F401
    EXPERIMENTS,
    run_all,
    run_flat_smallp,
    run_pinfty,
    run_revolution,
    run_sphere_instability,
    run_weakstar,
)
