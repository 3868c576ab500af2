"""Experiment harness: JSON configs, a seeded runner, CSV/SVG output and the verify suites."""

from .config import ExperimentConfig, load_config, parse_config
from .runner import CSV_HEADER, CsvRow, read_csv, rows_to_csv, run_experiment, write_outputs
from .svg import emit_svg, render_svg

__all__ = [
    "CSV_HEADER", "CsvRow", "ExperimentConfig", "emit_svg", "load_config", "parse_config", "read_csv",
    "render_svg", "rows_to_csv", "run_experiment", "write_outputs",
]
