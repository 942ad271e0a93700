from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from clozefix.lexer import (
    COMMENT,
    CPP_KEYWORDS,
    IDENTIFIER,
    KEYWORD,
    LITERAL,
    OPERATOR,
    PUNCTUATION,
    code_tokens,
    join_tokens,
    keywords_for,
    tokenize,
)
import re

_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")


def kinds(src):
    return [(t.text, t.kind) for t in code_tokens(tokenize(src))]


def test_simple_declaration():
    assert kinds("int x = 0;") == [
        ("int", KEYWORD),
        ("x", IDENTIFIER),
        ("=", OPERATOR),
        ("0", LITERAL),
        (";", PUNCTUATION),
    ]


def test_empty_source():
    assert tokenize("") == []


def test_call_candidates():
    toks = {t.text: t for t in tokenize("a.foo(b)")}
    assert toks["foo"].call_candidate
    assert not toks["a"].call_candidate
    assert not toks["b"].call_candidate


def test_call_candidate_skips_whitespace_and_comments():
    toks = {t.text: t for t in tokenize("foo /* x */ (1)")}
    assert toks["foo"].call_candidate


def test_comments_and_strings_are_single_tokens():
    src = 'x = "a // b"; // tail\n/* block\n comment */ y'
    code = [t for t in tokenize(src) if t.kind in (COMMENT, LITERAL)]
    assert [t.text for t in code] == ['"a // b"', "// tail", "/* block\n comment */"]


def test_unterminated_literal_and_comment_are_flagged():
    toks = tokenize('s = "open\nnext')
    lit = [t for t in toks if t.kind == LITERAL][0]
    assert lit.text == '"open' and lit.unterminated
    com = tokenize("a /* never closed")[-1]
    assert com.kind == COMMENT and com.unterminated and com.text == "/* never closed"


def test_longest_operator_match():
    assert [t for t, _ in kinds("a >>>= b; c <= d && e->f :: g")] == [
        "a", ">>>=", "b", ";", "c", "<=", "d", "&&", "e", "->", "f", "::", "g",
    ]


def test_line_and_column():
    toks = code_tokens(tokenize("a\n  bb c"))
    assert [(t.text, t.line, t.col) for t in toks] == [("a", 1, 0), ("bb", 2, 2), ("c", 2, 5)]


def test_keyword_set_follows_extension():
    assert keywords_for("x/Foo.hpp") is CPP_KEYWORDS
    assert kinds("auto x = nullptr;")[0] == ("auto", IDENTIFIER)
    assert code_tokens(tokenize("auto x", CPP_KEYWORDS))[0].kind == KEYWORD


def test_join_tokens_spacing():
    assert join_tokens(["return", "a", ".", "foo", "(", "b", ",", "4", ")", ";"]) == "return a.foo(b, 4);"
    assert join_tokens(["if", "(", "i", "<", "n", ")", "{"]) == "if (i < n) {"
    assert join_tokens(["i", "++", ";"]) == "i++;"


source_text = st.text(
    alphabet=st.sampled_from(list("abcXYZ_$019 \t\n\r.,;:(){}[]<>=!&|+-*/%^~?@#\\\"'")),
    max_size=200,
)


@settings(max_examples=300, deadline=None)
@given(source_text)
def test_lossless_roundtrip(src):
    assert "".join(t.text for t in tokenize(src)) == src


@settings(max_examples=200, deadline=None)
@given(source_text)
def test_identifier_tokens_are_well_formed(src):
    for t in tokenize(src):
        if t.kind == IDENTIFIER:
            assert _IDENT.match(t.text)
            assert t.text not in keywords_for("")
