from __future__ import annotations

from pathlib import Path

import pytest

from clozefix.validation import (
    COMPILE_ERROR,
    PLAUSIBLE,
    TEST_FAIL,
    BugSpec,
    ConfigurationError,
    StaleWorkdir,
    Workdir,
    WorkdirPool,
    apply_patch,
    checkout,
    file_digest,
    revert,
    tree_digest,
    validate,
)

from conftest import write_tree

CALC = "def add(a, b):\n    return a - b\n\n\ndef twice(x):\n    return add(x, x)\n"
CHECK = "import sys\nsys.path.insert(0, 'src')\nfrom calc import add\nassert add(2, 3) == 5\n"


@pytest.fixture
def calc(tmp_path: Path) -> BugSpec:
    root = write_tree(tmp_path / "calc", {"src/calc.py": CALC, "check.py": CHECK})
    return BugSpec(
        project_root=root,
        file="src/calc.py",
        buggy_line_no=2,
        compile_command="python3 -m py_compile src/calc.py",
        test_command="python3 check.py",
        timeout_seconds=30,
    )


def test_classification(calc):
    with WorkdirPool(calc, 1) as pool:
        assert pool.run_one(["    return a + b"]).classification == PLAUSIBLE
        assert pool.run_one(["    return a - b"]).classification == TEST_FAIL
        assert pool.run_one(["    return (a + b"]).classification == COMPILE_ERROR


def test_apply_then_revert_restores_bytes(calc, tmp_path):
    wd = Workdir.create(calc.project_root, tmp_path / "w")
    before = tree_digest(wd.path)
    target = wd.path / calc.file
    original = calc.source()
    text = apply_patch(wd, calc, ["    return a + b"], original)
    assert file_digest(target) != file_digest(calc.project_root / calc.file)
    assert target.read_text().splitlines()[1] == "    return a + b"
    revert(wd, calc, text)
    assert tree_digest(wd.path) == before


def test_insert_adds_exactly_one_line(calc, tmp_path):
    wd = Workdir.create(calc.project_root, tmp_path / "w")
    original = calc.source()
    apply_patch(wd, calc, ["    a = int(a)", "    return a - b"], original)
    after = (wd.path / calc.file).read_text().splitlines()
    assert len(after) == len(CALC.splitlines()) + 1
    assert after[1:3] == ["    a = int(a)", "    return a - b"]


def test_stale_workdir_is_refused(calc, tmp_path):
    wd = Workdir.create(calc.project_root, tmp_path / "w")
    (wd.path / calc.file).write_text("changed\n" + CALC)
    with pytest.raises(StaleWorkdir):
        apply_patch(wd, calc, ["x"], calc.source())


def test_validation_never_touches_the_project(calc):
    before = tree_digest(calc.project_root)
    with WorkdirPool(calc, 2) as pool:
        pool.run_many([["    return a + b"], ["    return (a"], ["    return b"]])
    assert tree_digest(calc.project_root) == before


def test_run_many_keeps_batch_order(calc):
    batch = [["    return (a"], ["    return a + b"], ["    return b"]]
    with WorkdirPool(calc, 2) as pool:
        got = [o.classification for o in pool.run_many(batch)]
    assert got == [COMPILE_ERROR, PLAUSIBLE, TEST_FAIL]


def test_artifacts_are_scrubbed_between_runs(calc):
    spec = BugSpec(**{**calc.__dict__, "test_command": "test ! -e leftover && touch leftover && python3 check.py"})
    with WorkdirPool(spec, 1) as pool:
        assert pool.run_one(["    return a + b"]).classification == PLAUSIBLE
        assert pool.run_one(["    return a + b"]).classification == PLAUSIBLE


def test_incremental_keeps_build_outputs(calc):
    spec = BugSpec(**{**calc.__dict__, "incremental": True,
                      "test_command": "test ! -e leftover && touch leftover && python3 check.py"})
    with WorkdirPool(spec, 1) as pool:
        assert pool.run_one(["    return a + b"]).classification == PLAUSIBLE
        assert pool.run_one(["    return a + b"]).classification == TEST_FAIL


def test_timeout_is_a_test_failure(calc):
    spec = BugSpec(**{**calc.__dict__, "compile_command": None, "test_command": "sleep 5", "timeout_seconds": 0.5})
    with WorkdirPool(spec, 1) as pool:
        out = pool.run_one(["    return a + b"])
    assert out.classification == TEST_FAIL and out.timed_out and out.duration < 4


@pytest.mark.parametrize("command", ["no-such-command-xyz", "./check.py"])
def test_unrunnable_commands_are_configuration_errors(calc, command):
    spec = BugSpec(**{**calc.__dict__, "test_command": command})
    with pytest.raises(ConfigurationError):
        validate(spec.project_root, spec)


def test_environment_is_filtered(calc, monkeypatch):
    monkeypatch.setenv("CLOZEFIX_SECRET", "1")
    spec = BugSpec(**{**calc.__dict__, "compile_command": None, "test_command": 'test -z "$CLOZEFIX_SECRET"'})
    assert validate(spec.project_root, spec).classification == PLAUSIBLE


def test_log_excerpt_hides_workdir(calc):
    spec = BugSpec(**{**calc.__dict__, "compile_command": None, "test_command": "pwd; exit 1"})
    out = validate(spec.project_root, spec)
    assert out.exit_code == 1 and "<workdir>" in out.log_excerpt and str(spec.project_root) not in out.log_excerpt


def test_checkout_plants_the_bug(calc, tmp_path):
    spec = BugSpec(**{**calc.__dict__, "plant_line": "    return a * b"})
    planted = checkout(spec, tmp_path / "co")
    assert planted.source().line(2) == "    return a * b"
    assert planted.expected_fix == "    return a - b"
    assert planted.source_root == calc.project_root
    assert calc.source().line(2) == "    return a - b"


def test_spec_checks():
    with pytest.raises(ConfigurationError):
        BugSpec(Path("."), "x", 0, "true")
    with pytest.raises(ConfigurationError):
        BugSpec(Path("/nonexistent"), "x", 1, "true").source()
