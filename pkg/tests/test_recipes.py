import json

import pytest

from nonscat.recipes import RECIPES, cosxy_relation_error, cosxy_orbit, run_recipe, sweep_coverage


@pytest.mark.parametrize("name", sorted(RECIPES))
def test_recipe_fast_mode_passes(name, tmp_path):
    rep = run_recipe(name, tmp_path, fast=True)
    failed = [c.to_dict() for c in rep.checks if not c.passed]
    assert rep.checks
    assert rep.passed, failed
    assert (tmp_path / "report.json").exists()
    data = json.loads((tmp_path / "report.json").read_text())
    assert "wall_time" not in json.dumps(data)
    assert data["topic"]


def test_coverage_metric():
    assert sweep_coverage([0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0]) <= 0.25 + 1e-12


def test_orbit_relation_report():
    err = cosxy_relation_error(cosxy_orbit(0.5), 0.5)
    assert err["literal_samples"] <= err["samples"]
    assert err["bounded"] < 1e-6
