from __future__ import annotations

import importlib.util

import pytest

from clozefix.config import ConfigError

from conftest import ROOT

spec = importlib.util.spec_from_file_location("sweep", ROOT / "scripts" / "sweep.py")
sweep = importlib.util.module_from_spec(spec)
spec.loader.exec_module(sweep)


def test_shipped_sweep_configs_parse():
    sizes = {}
    for path in sorted((ROOT / "scripts" / "configs").glob("*.toml")):
        base, points, bugs = sweep.grid(path)
        assert base["samples"] == 1000 and len(bugs) >= 5
        sizes[path.stem] = len(points)
    assert sizes == {"mask_rate": 5, "prompt": 12, "strategy": 3}


def test_grid_is_a_product(tmp_path):
    cfg = tmp_path / "s.toml"
    cfg.write_text('[sweep]\nmask_rate = [0.3, 0.5]\nstrategy = ["ast", "line"]\nbugs = ["fixtures/bugs/axis_span.toml"]\n')
    _, points, bugs = sweep.grid(cfg)
    assert points == [{"mask_rate": 0.3, "strategy": "ast"}, {"mask_rate": 0.3, "strategy": "line"},
                      {"mask_rate": 0.5, "strategy": "ast"}, {"mask_rate": 0.5, "strategy": "line"}]
    assert [b.stem for b in bugs] == ["axis_span"]


def test_bad_sweep_field(tmp_path):
    cfg = tmp_path / "s.toml"
    cfg.write_text("[sweep]\nmask_rat = [0.3]\n")
    with pytest.raises(ConfigError, match="unknown field 'mask_rat'"):
        sweep.grid(cfg)
    cfg.write_text('[sweep]\nmask_rate = ["high"]\n')
    with pytest.raises(ConfigError, match="mask_rate"):
        sweep.grid(cfg)


def test_sweep_runs_one_point(tmp_path):
    cfg = tmp_path / "s.toml"
    cfg.write_text('[run]\nsamples = 200\nvariants = ["base", "ki"]\niterations = 2\n'
                   '[sweep]\nmask_rate = [0.5]\nbugs = ["fixtures/bugs/series_max_item.toml"]\n')
    out = tmp_path / "r.json"
    assert sweep.main([str(cfg), "--out", str(out), "--csv", str(tmp_path / "r.csv")]) == 0
    assert "series_max_item" in (tmp_path / "r.csv").read_text()
