"""Bundled example tables.

Two CSV fixtures ship with the package: a single-stratum table of 6758
individuals cross-classified by a binary exposure and outcome, and the
same population split into ten age-by-sex categories.  They drive the
tests, the demo scripts, and make the command line usable out of the box.
Both describe the same population, so their grand totals agree; tests
rely on that cross-check.
"""

from __future__ import annotations

from importlib import resources

from .model import StratifiedTable
from .tables import loads_table

__all__ = ["marginal_table", "stratified_table", "fixture_path"]


def _read(name: str) -> str:
    return (resources.files("maxent_effects") / "data" / name).read_text(
        encoding="utf-8"
    )


def fixture_path(name: str):
    """Filesystem path of a bundled CSV (for CLI round-trip tests)."""
    return resources.files("maxent_effects") / "data" / name


def marginal_table() -> StratifiedTable:
    """The pooled single-category table (N = 6758)."""
    return loads_table(_read("table2.csv"))


def stratified_table() -> StratifiedTable:
    """The ten age-by-sex categories of the same population."""
    return loads_table(_read("table1.csv"))
