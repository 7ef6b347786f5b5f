"""Command-line interface, data ingestion and reports."""

from diffusion_el.cli.commands import cmd_bandwidth, cmd_fit, cmd_simulate, cmd_study, cmd_test
from diffusion_el.cli.io import ingest_series, write_path
from diffusion_el.cli.report import TestReport, format_reports, write_outputs

__all__ = [
    "TestReport",
    "cmd_bandwidth",
    "cmd_fit",
    "cmd_simulate",
    "cmd_study",
    "cmd_test",
    "format_reports",
    "ingest_series",
    "write_outputs",
    "write_path",
]
