"""Regression guard: the reference comparison run is frozen byte-for-byte.

The golden files were generated once from this implementation; they pin the
simulator's behavior, not any externally reported numbers.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from catalyst_auction.sim import compare_variants, scenario_from_doc, write_comparison_outputs

GOLDEN = Path(__file__).parent / "golden"


def reference_report():
    doc = json.loads(
        resources.files("catalyst_auction")
        .joinpath("data/default_scenario.json")
        .read_text(encoding="utf-8")
    )
    return compare_variants(scenario_from_doc(doc), list(range(1, 21)))


def test_reference_run_matches_golden(tmp_path):
    write_comparison_outputs(reference_report(), tmp_path)
    for name in ("comparison_summary.csv", "comparison_mean_curves.csv"):
        produced = (tmp_path / name.replace("comparison_", "")).read_bytes()
        assert produced == (GOLDEN / name).read_bytes(), f"{name} drifted"
