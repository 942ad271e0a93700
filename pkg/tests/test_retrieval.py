from __future__ import annotations

import random
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clozefix.corpus import SourceFile, build_corpus
from clozefix.lexer import IDENTIFIER, keywords_for, tokenize
from clozefix.retrieval import (
    RankedIdentifier,
    RetrievalError,
    build_prompts,
    candidate_lines,
    edit_distance,
    extract_ids,
    find_accessible_ids,
    find_type_info,
    levenshtein_ratio,
    normalize,
    prompt_text,
    rank_identifiers,
    rank_lines,
    retrieve,
    simple_filter,
)


def dp_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def corpus_of(files: dict[str, str]):
    return build_corpus("/x", [SourceFile.from_text(k, textwrap.dedent(v)) for k, v in files.items()])


GRAPH = """\
    import java.util.List;

    public class Graph {
        private int count;
        private Node root;

        public Plot getParent() {
            return null;
        }

        public int size(int extra) {
            int before = count;
            int total = before + extra;
            int later = total * 2;
            return later;
        }

        public String label(int k) {
            return "x";
        }

        public int label(String s) {
            return 1;
        }
    }

    class Helper {
        public int secretHelperMethod() {
            return 3;
        }
    }
    """


def test_ratio_examples():
    assert levenshtein_ratio("abc", "abc") == 1.0
    assert levenshtein_ratio("abc", "") == 0.0
    assert levenshtein_ratio("", "") == 1.0
    assert levenshtein_ratio("kitten", "sitting") == pytest.approx(4 / 7)
    assert levenshtein_ratio("  a   b ", "a b") == 1.0


text = st.text(alphabet=st.sampled_from(list("ab c\tdé")), max_size=40)


@settings(max_examples=400, deadline=None)
@given(text, text)
def test_ratio_properties(a, b):
    r = levenshtein_ratio(a, b)
    assert r == levenshtein_ratio(b, a)
    assert 0.0 <= r <= 1.0
    assert (r == 1.0) == (normalize(a) == normalize(b))


@settings(max_examples=400, deadline=None)
@given(st.text(max_size=70), st.text(max_size=70))
def test_bit_parallel_matches_dp(a, b):
    assert edit_distance(a, b) == dp_distance(a, b)


def test_rank_lines_examples():
    ranked = rank_lines("x = foo(y);", [(1, "int a;"), (2, "x = foo(y);"), (3, "x = bar(y);")])
    assert ranked[0].line_no == 2 and ranked[0].similarity == 1.0
    empties = rank_lines("x = 1;", [(5, "  "), (3, ""), (4, "\t")])
    assert [r.line_no for r in empties] == [3, 4, 5] and all(r.similarity == 0 for r in empties)


def test_donor_line_with_shared_stem_ranks_first():
    buggy = "JSDocInfo overridingInfo = null;"
    lines = [(1, "int count = list.size();"), (2, "overridingInfo = node.getJSDocInfo();"), (3, "return result;")]
    ranked = rank_lines(buggy, lines)
    assert ranked[0].line_no == 2
    oracle = sorted(lines, key=lambda x: -(1 - dp_distance(buggy, x[1]) / max(len(buggy), len(x[1]))))
    assert [r.line_no for r in ranked] == [n for n, _ in oracle]


def test_extract_ids_examples():
    assert extract_ids("overridingInfo = node.getJSDocInfo();") == [
        ("overridingInfo", "variable"), ("node", "variable"), ("getJSDocInfo", "method"),
    ]
    assert extract_ids("return 42;") == []
    assert extract_ids("a.b.c()") == [("a", "variable"), ("b", "variable"), ("c", "method")]
    assert extract_ids("x = x + y(x);") == [("x", "variable"), ("y", "method")]


def test_simple_filter_examples():
    ids = [("length", "variable"), ("node", "variable"), ("getJSDocInfo", "method")]
    assert simple_filter(ids) == [("getJSDocInfo", "method")]
    assert simple_filter([]) == []
    ids = [("i", "variable"), ("idx", "variable"), ("computeFoldConstant", "method")]
    assert simple_filter(ids) == [("computeFoldConstant", "method")]
    assert simple_filter([("frequentName", "variable")], frequent={"frequentName"}) == []


def test_accessibility_rules():
    corpus = corpus_of({"Graph.java": GRAPH})
    # buggy line: `int total = before + extra;` (line 13)
    names = find_accessible_ids(corpus, "Graph.java", 13)
    assert {"count", "root", "getParent", "size", "extra", "before"} <= names
    assert "later" not in names  # declared below the buggy line
    assert "secretHelperMethod" not in names  # another class, no receiver


def test_outside_function_is_an_error():
    corpus = corpus_of({"Graph.java": GRAPH})
    with pytest.raises(RetrievalError):
        find_accessible_ids(corpus, "Graph.java", 4)


def test_type_info_examples():
    corpus = corpus_of({"Graph.java": GRAPH})
    info = find_type_info(corpus, ["getParent", "count", "label"])
    assert info["getParent"].type == "Plot" and info["getParent"].kind == "method"
    assert info["count"].type == "int"
    assert info["label"].type == "String" and info["label"].ambiguous
    assert "nothing" not in find_type_info(corpus, ["nothing"])


def ident(name, kind="method", type_info="Plot", rank=1):
    return RankedIdentifier(name, kind, type_info, 0.5, ("F.java", 1), rank)


def test_prompt_rendering():
    [p] = build_prompts([ident("getParent")], 5)
    assert p.text == "/* use (Plot) getParent() in the next line */"
    assert prompt_text(ident("count", "variable", "int").render()) == "/* use (int) count in the next line */"
    assert ident("getParent", type_info=None).render() == "getParent()"
    assert ident("getParent").render(with_type=False) == "getParent()"


def test_prompt_cardinality_and_combined_mode():
    ids = [ident(f"name{k}", rank=k + 1) for k in range(3)]
    assert len(build_prompts(ids, 5)) == 3
    assert build_prompts([], 5) == []
    [combined] = build_prompts(ids[:2], 5, combined=True)
    assert combined.text == "/* use (Plot) name0(), (Plot) name1() in the next line */"
    assert [r.name for r in combined.identifiers] == ["name0", "name1"]
    with pytest.raises(ValueError):
        build_prompts(ids, 0)


def test_retrieval_on_fixture_finds_needed_identifier(toy_corpus):
    ranked, prompts = retrieve(toy_corpus, "src/XYPlot.hpp", 148)
    assert ranked[0].name == "getDataAreaWidth"
    assert prompts[0].text == "/* use (double) getDataAreaWidth() in the next line */"
    assert len(prompts) == 5


def test_ranked_identifiers_are_sound(toy_corpus):
    rng = random.Random(0)
    files = [f.relative_path for f in toy_corpus.files]
    checked = 0
    for rel in rng.sample(files, 6):
        lines = [n for fn in toy_corpus.functions_in(rel) for n in range(fn.body_line + 1, fn.end_line)]
        for line_no in rng.sample(lines, min(3, len(lines))):
            ranked = rank_identifiers(toy_corpus, rel, line_no)
            access = find_accessible_ids(toy_corpus, rel, line_no)
            sims = [r.similarity for r in ranked]
            assert sims == sorted(sims, reverse=True)
            for r in ranked:
                donor = toy_corpus.file(r.donor[0]).line(r.donor[1])
                ids = [t.text for t in tokenize(donor, keywords_for(r.donor[0])) if t.kind == IDENTIFIER]
                assert r.name in ids and r.name in access
                checked += 1
    assert checked > 0


def test_project_scope_is_a_superset(toy_corpus):
    file_pool = set(candidate_lines(toy_corpus, "src/Chart.hpp", "file"))
    project_pool = set(candidate_lines(toy_corpus, "src/Chart.hpp", "project"))
    assert file_pool < project_pool
    with pytest.raises(RetrievalError):
        candidate_lines(toy_corpus, "src/Chart.hpp", "galaxy")
