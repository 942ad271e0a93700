from __future__ import annotations

import pytest

from clozefix.config import RunConfig, ConfigError, load_bug, load_run_config, resolve_run_config, resolve_with_file

from conftest import BUGS, SHOP_JAVA, write_tree


def test_defaults():
    c = RunConfig()
    assert (c.mask_rate, c.iterations, c.top_n, c.samples, c.validate_top, c.context_limit) == (0.5, 10, 5, 5000, 1000, 512)
    assert c.variants == ("base", "ki", "ro", "prompted-base")


def test_flag_beats_file_beats_default(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("[run]\nsamples = 300\nseed = 4\n")
    c = resolve_with_file(cfg, {"samples": 50, "seed": None})
    assert c.samples == 50 and c.seed == 4 and c.validate_top == 1000


def test_ints_widen_to_floats(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("time_limit = 60\n")
    assert resolve_with_file(cfg).time_limit == 60.0


def test_unknown_field_reports_line(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("samples = 10\n\nsamplez = 3\n")
    with pytest.raises(ConfigError, match=r"run\.toml:3: unknown field 'samplez'"):
        load_run_config(cfg)


def test_wrong_type_reports_line(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('seed = 1\nsamples = "many"\n')
    with pytest.raises(ConfigError, match=r"run\.toml:2: field 'samples' expects int"):
        load_run_config(cfg)


def test_invalid_value_in_file_reports_line(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("seed = 1\nmask_rate = 1.5\n")
    with pytest.raises(ConfigError, match=r"run\.toml:2: field mask_rate"):
        resolve_with_file(cfg)


def test_other_tables_are_ignored(tmp_path):
    cfg = tmp_path / "sweep.toml"
    cfg.write_text("samples = 20\n[sweep]\nmask_rate = [0.3, 0.5]\n")
    assert load_run_config(cfg) == {"samples": 20}


@pytest.mark.parametrize("bad", [{"mask_rate": 0.0}, {"top_p": 0}, {"stop": "never"}, {"variants": ("gpt",)},
                                 {"backend": "cloud"}, {"samples": 0}, {"strategy": "tree"}])
def test_value_checks(bad):
    with pytest.raises(ConfigError):
        resolve_run_config(None, bad)


def test_to_dict_roundtrips():
    c = RunConfig(variants=("ki",), variant_backends={"ki": "remote"}, remote_url="http://x")
    assert RunConfig(**{**c.to_dict(), "variants": tuple(c.to_dict()["variants"])}) == c
    assert c.backend_for("ki") == "remote" and c.backend_for("base") == "reference"


def test_load_fixture_bugs():
    for path in sorted(BUGS.glob("*.toml")):
        spec = load_bug(path)
        assert spec.bug_id == path.stem
        assert spec.project_root.is_dir() and spec.plant_line
        assert spec.include == ("src/**/*.hpp",)


def test_bug_errors(tmp_path):
    write_tree(tmp_path / "p", {"src/Shop.java": SHOP_JAVA})
    bug = tmp_path / "bug.toml"
    bug.write_text('project_root = "p"\nfile = "src/Shop.java"\ntest_command = "true"\n')
    with pytest.raises(ConfigError, match="missing required field 'buggy_line_no'"):
        load_bug(bug)
    bug.write_text('project_root = "p"\nfile = "src/Shop.java"\nbuggy_line_no = "3"\ntest_command = "true"\n')
    with pytest.raises(ConfigError, match=r"bug\.toml:3: field 'buggy_line_no'"):
        load_bug(bug)
    bug.write_text('project_root = "missing"\nfile = "src/Shop.java"\nbuggy_line_no = 3\ntest_command = "true"\n')
    with pytest.raises(ConfigError, match="not a directory"):
        load_bug(bug)
    bug.write_text('project_root = "p"\nfile = "src/Shop.java"\nbuggy_line_no = 3\ntest_command = "true"\n'
                   'expected_fix_file = "fix.txt"\n')
    with pytest.raises(ConfigError, match=r"bug\.toml:5"):
        load_bug(bug)
    (tmp_path / "fix.txt").write_text("import java.util.Map;\n")
    assert load_bug(bug).expected_fix == "import java.util.Map;"


def test_malformed_toml(tmp_path):
    bad = tmp_path / "x.toml"
    bad.write_text("samples = = 3\n")
    with pytest.raises(ConfigError, match="x.toml"):
        load_run_config(bad)
