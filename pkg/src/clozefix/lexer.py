"""Lightweight lexer for Java-like and C-family source code.

The lexer is lossless: concatenating ``token.text`` for every token returned by
:func:`tokenize` reproduces the input exactly, whitespace included.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

IDENTIFIER = "identifier"
KEYWORD = "keyword"
LITERAL = "literal"
OPERATOR = "operator"
PUNCTUATION = "punctuation"
COMMENT = "comment"
WHITESPACE = "whitespace"

JAVA_KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while
    """.split()
)

CPP_KEYWORDS = frozenset(
    """
    alignas alignof asm auto bool break case catch char char16_t char32_t class
    const constexpr const_cast continue decltype default delete do double
    dynamic_cast else enum explicit export extern float for friend goto if
    inline int long mutable namespace new noexcept operator private protected
    public register reinterpret_cast return short signed sizeof static
    static_assert static_cast struct switch template this thread_local throw
    try typedef typeid typename union unsigned using virtual void volatile
    wchar_t while override final
    """.split()
)

# Literal words are lexed as literals, never as identifiers or keywords.
LITERAL_WORDS = frozenset({"true", "false", "null", "nullptr", "NULL"})

PRIMITIVE_TYPES = frozenset(
    "boolean bool byte char short int long float double void unsigned signed auto".split()
)

_WORD = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER = re.compile(
    r"0[xX][0-9a-fA-F_]+[lLuU]*"
    r"|0[bB][01_]+[lLuU]*"
    r"|(?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d+)?[fFdDlLuU]*"
)
_SPACE = re.compile(r"\s+")

# Longest match first.
_OPERATORS = sorted(
    """
    >>>= <<= >>= >>> ... -> :: ++ -- && || == != <= >= += -= *= /= %= &= |= ^=
    << >> + - * / % = < > ! ~ & | ^ ? :
    """.split(),
    key=len,
    reverse=True,
)
_PUNCT = frozenset("(){}[];,.@#\\")

CONDITION_KEYWORDS = frozenset({"if", "while", "for", "switch", "catch", "synchronized"})


@dataclass(frozen=True)
class Token:
    text: str
    kind: str
    line: int
    col: int
    call_candidate: bool = False
    unterminated: bool = False

    @property
    def is_code(self) -> bool:
        return self.kind not in (WHITESPACE, COMMENT)


def keywords_for(path: str) -> frozenset[str]:
    """Pick a keyword set from a file extension; Java is the default."""
    lowered = path.lower()
    if lowered.endswith((".c", ".h", ".cc", ".cpp", ".cxx", ".hpp", ".hh", ".hxx")):
        return CPP_KEYWORDS
    return JAVA_KEYWORDS


def _scan_string(source: str, start: int, quote: str) -> tuple[int, bool]:
    """Return (end, terminated) for a quoted literal starting at ``start``."""
    i = start + 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\\":
            i += 2
            continue
        if ch == quote:
            return i + 1, True
        if ch == "\n":
            return i, False
        i += 1
    return n, False


def tokenize(source: str, keywords: Iterable[str] = JAVA_KEYWORDS) -> list[Token]:
    keywords = keywords if isinstance(keywords, frozenset) else frozenset(keywords)
    tokens: list[Token] = []
    i = 0
    n = len(source)
    line = 1
    line_start = 0

    def emit(text: str, kind: str, unterminated: bool = False) -> None:
        tokens.append(Token(text, kind, line, i - line_start, unterminated=unterminated))

    while i < n:
        ch = source[i]
        kind: str
        end: int
        unterminated = False
        if ch.isspace():
            end = _SPACE.match(source, i).end()
            kind = WHITESPACE
        elif source.startswith("//", i):
            nl = source.find("\n", i)
            end = n if nl < 0 else nl
            kind = COMMENT
        elif source.startswith("/*", i):
            close = source.find("*/", i + 2)
            if close < 0:
                end, unterminated = n, True
            else:
                end = close + 2
            kind = COMMENT
        elif ch == '"' or ch == "'":
            end, ok = _scan_string(source, i, ch)
            unterminated = not ok
            kind = LITERAL
        elif ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            end = _NUMBER.match(source, i).end()
            kind = LITERAL
        elif m := _WORD.match(source, i):
            end = m.end()
            word = m.group()
            if word in LITERAL_WORDS:
                kind = LITERAL
            elif word in keywords:
                kind = KEYWORD
            else:
                kind = IDENTIFIER
        elif ch in _PUNCT and not source.startswith("...", i):
            end = i + 1
            kind = PUNCTUATION
        else:
            for op in _OPERATORS:
                if source.startswith(op, i):
                    end = i + len(op)
                    kind = PUNCTUATION if op == "..." else OPERATOR
                    break
            else:
                end = i + 1
                kind = PUNCTUATION
        text = source[i:end]
        emit(text, kind, unterminated)
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = i + text.rfind("\n") + 1
        i = end
    return _mark_calls(tokens)


def _mark_calls(tokens: list[Token]) -> list[Token]:
    out = list(tokens)
    for idx, tok in enumerate(tokens):
        if tok.kind != IDENTIFIER:
            continue
        j = idx + 1
        while j < len(tokens) and not tokens[j].is_code:
            j += 1
        if j < len(tokens) and tokens[j].text == "(":
            out[idx] = Token(tok.text, tok.kind, tok.line, tok.col, True, tok.unterminated)
    return out


def code_tokens(tokens: Iterable[Token]) -> list[Token]:
    return [t for t in tokens if t.is_code]


def is_code_text(text: str) -> bool:
    """Classify a bare token text (as stored in dataset files)."""
    return bool(text) and not text.isspace() and not text.startswith(("//", "/*"))


def is_word(text: str) -> bool:
    return bool(text) and (text[0].isalnum() or text[0] in "_$\"'")


_NO_SPACE_BEFORE = frozenset({")", "]", ";", ",", ".", "::", "->"})
_NO_SPACE_AFTER = frozenset({"(", "[", ".", "!", "~", "::", "->", "@"})


def join_tokens(texts: Iterable[str]) -> str:
    """Render code tokens as a single line using conventional spacing."""
    out: list[str] = []
    prev = ""
    for text in texts:
        if out and needs_space(prev, text):
            out.append(" ")
        out.append(text)
        prev = text
    return "".join(out)


def needs_space(left: str, right: str) -> bool:
    if not left or not right:
        return False
    if right in _NO_SPACE_BEFORE or left in _NO_SPACE_AFTER:
        return False
    if right == "(":
        # Calls hug their parenthesis; control keywords do not.
        return left in CONDITION_KEYWORDS or left in ("return", "=", "&&", "||") or not is_word(left)
    if right == "[":
        return not is_word(left) and left not in (")", "]")
    if right in ("++", "--"):
        return not (is_word(left) or left in (")", "]"))
    if left in ("++", "--"):
        return not is_word(right)
    return True
