from __future__ import annotations

import shutil
import textwrap
from pathlib import Path

import pytest

from clozefix.corpus import ingest

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
TOYPLOT = FIXTURES / "toyplot"
BUGS = FIXTURES / "bugs"
TOY_INCLUDE = ("src/**/*.hpp",)
TOY_EXCLUDE = ("test/**", "build/**")

requires_gxx = pytest.mark.skipif(shutil.which("g++") is None, reason="needs g++ for the fixture project")

SHOP_JAVA = textwrap.dedent(
    """\
    package demo;

    import java.util.List;

    public class Shop {
        private int count;
        private String label;

        public Shop(String label) {
            this.label = label;
        }

        public int getCount() {
            return count;
        }

        public String describe(int extra) {
            int total = count + extra;
            String text = label + total;
            return text.trim();
        }
    }
    """
)


def write_tree(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    return root


@pytest.fixture
def shop_project(tmp_path: Path) -> Path:
    return write_tree(tmp_path / "shop", {"src/demo/Shop.java": SHOP_JAVA})


@pytest.fixture(scope="session")
def toy_corpus():
    return ingest(TOYPLOT, TOY_INCLUDE, TOY_EXCLUDE)


# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
