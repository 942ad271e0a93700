"""Repair templates: turn a buggy line into a single-span cloze input and back.

Every template resolves to a character range ``[start, end)`` of the line (the
masked region). ``apply`` replaces that range with ``<SPAN>``; ``splice`` puts a
fill back into it. Insert templates mask nothing and add a fresh line instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .lexer import (
    OPERATOR,
    JAVA_KEYWORDS,
    Token,
    tokenize,
)

SPAN = "<SPAN>"
DEFAULT_CONTEXT_LIMIT = 512
PARTIAL_CAP = 10

COMPLETE, PARTIAL, TEMPLATE = "complete", "partial", "template"
REPLACE_LINE = "replace_line"
INSERT_BEFORE = "insert_before"
INSERT_AFTER = "insert_after"
KEEP_PREFIX = "keep_prefix"
KEEP_SUFFIX = "keep_suffix"
METHOD_NAME = "method_name"
METHOD_ARGS = "method_args"
BOOL_EXPR_OR_OP = "bool_expr_or_op"

FAMILY_OF = {
    REPLACE_LINE: COMPLETE,
    INSERT_BEFORE: COMPLETE,
    INSERT_AFTER: COMPLETE,
    KEEP_PREFIX: PARTIAL,
    KEEP_SUFFIX: PARTIAL,
    METHOD_NAME: TEMPLATE,
    METHOD_ARGS: TEMPLATE,
    BOOL_EXPR_OR_OP: TEMPLATE,
}
INSERTS = (INSERT_BEFORE, INSERT_AFTER)

BOOL_OPERATORS = frozenset({"==", "!=", "<", ">", "<=", ">=", "&&", "||"})
_COND_KEYWORDS = ("if", "while")


class TemplateError(ValueError):
    pass


class ContextOverflow(ValueError):
    pass


@dataclass(frozen=True)
class RepairTemplate:
    variant: str
    param: int = 0
    mode: str = ""  # bool_expr_or_op sub-mode: "expr" or "op"

    @property
    def family(self) -> str:
        return FAMILY_OF[self.variant]

    @property
    def id(self) -> str:
        if self.variant in (KEEP_PREFIX, KEEP_SUFFIX):
            return f"{self.family}/{self.variant}({self.param})"
        if self.family == TEMPLATE:
            return f"{self.family}/{self.variant}#{self.param}"
        return f"{self.family}/{self.variant}"

    @classmethod
    def parse(cls, template_id: str, mode: str = "") -> "RepairTemplate":
        _, _, rest = template_id.partition("/")
        if "(" in rest:
            variant, _, num = rest.partition("(")
            return cls(variant, int(num.rstrip(")")))
        if "#" in rest:
            variant, _, num = rest.partition("#")
            return cls(variant, int(num), mode)
        if rest not in FAMILY_OF:
            raise TemplateError(f"unknown template id {template_id!r}")
        return cls(rest)


@dataclass(frozen=True)
class LineContext:
    """Code tokens of the file surrounding the buggy line (nearest last/first)."""

    before: tuple[str, ...] = ()
    after: tuple[str, ...] = ()


@dataclass(frozen=True)
class MaskedRepairInput:
    template: str
    context_before: tuple[str, ...]
    context_after: tuple[str, ...]
    masked_line: tuple[str, ...]
    buggy_line_no: int
    target: str = ""
    text: str = ""
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def span_index(self) -> int:
        return self.masked_line.index(SPAN)

    @property
    def left(self) -> tuple[str, ...]:
        return self.context_before + self.masked_line[: self.span_index]

    @property
    def right(self) -> tuple[str, ...]:
        return self.masked_line[self.span_index + 1 :] + self.context_after

    def token_count(self) -> int:
        return len(self.context_before) + len(self.masked_line) + len(self.context_after)


@dataclass(frozen=True)
class _Line:
    text: str
    tokens: tuple[Token, ...]  # code tokens only
    starts: tuple[int, ...]

    def end(self, i: int) -> int:
        return self.starts[i] + len(self.tokens[i].text)

    @property
    def content(self) -> tuple[int, int]:
        if not self.tokens:
            return 0, 0
        return self.starts[0], self.end(len(self.tokens) - 1)

    def match_paren(self, i: int) -> int | None:
        depth = 0
        for j in range(i, len(self.tokens)):
            t = self.tokens[j].text
            if t == "(":
                depth += 1
            elif t == ")":
                depth -= 1
                if depth == 0:
                    return j
        return None


def _analyse(line: str | Sequence[Token], keywords=JAVA_KEYWORDS) -> _Line:
    text = line if isinstance(line, str) else "".join(t.text for t in line)
    code, starts, pos = [], [], 0
    for tok in tokenize(text, keywords):
        if tok.is_code:
            code.append(tok)
            starts.append(pos)
        pos += len(tok.text)
    return _Line(text, tuple(code), tuple(starts))


def _call_sites(ln: _Line) -> list[int]:
    return [i for i, t in enumerate(ln.tokens) if t.call_candidate]


def _bool_sites(ln: _Line) -> list[tuple[str, int, int]]:
    """(mode, first_token, last_token) for every boolean site, left to right."""
    sites: list[tuple[str, int, int]] = []
    toks = ln.tokens
    for i, t in enumerate(toks):
        if t.text in _COND_KEYWORDS and i + 1 < len(toks) and toks[i + 1].text == "(":
            close = ln.match_paren(i + 1)
            if close is not None and close > i + 2:
                sites.append(("expr", i + 2, close - 1))
        elif t.text == "?" and t.kind == OPERATOR:
            j, depth = i - 1, 0
            while j >= 0:
                tj = toks[j].text
                if tj in (")", "]"):
                    depth += 1
                elif tj in ("(", "["):
                    if depth == 0:
                        break
                    depth -= 1
                elif depth == 0 and tj in ("=", "return", ",", ":", "?"):
                    break
                j -= 1
            if j + 1 <= i - 1:
                sites.append(("expr", j + 1, i - 1))
    for i, t in enumerate(toks):
        if t.text in BOOL_OPERATORS and t.kind == OPERATOR:
            sites.append(("op", i, i))
    return sites


def enumerate_applicable(line: str | Sequence[Token], keywords=JAVA_KEYWORDS) -> list[RepairTemplate]:
    ln = _analyse(line, keywords)
    n = len(ln.tokens)
    if n == 0:
        return []
    out = [RepairTemplate(REPLACE_LINE), RepairTemplate(INSERT_BEFORE), RepairTemplate(INSERT_AFTER)]
    if n >= 2:
        cap = min(PARTIAL_CAP, n - 1)
        out.extend(RepairTemplate(KEEP_PREFIX, p) for p in range(1, cap + 1))
        out.extend(RepairTemplate(KEEP_SUFFIX, s) for s in range(1, cap + 1))
    for k, i in enumerate(_call_sites(ln)):
        out.append(RepairTemplate(METHOD_NAME, k))
        if i + 1 < n and ln.match_paren(i + 1) is not None:
            out.append(RepairTemplate(METHOD_ARGS, k))
    for k, (mode, _, _) in enumerate(_bool_sites(ln)):
        out.append(RepairTemplate(BOOL_EXPR_OR_OP, k, mode))
    return out


def masked_range(template: RepairTemplate, line: str | Sequence[Token], keywords=JAVA_KEYWORDS) -> tuple[int, int]:
    """Character range of ``line`` replaced by the span (empty for inserts)."""
    ln = _analyse(line, keywords)
    n = len(ln.tokens)
    v = template.variant
    if n == 0:
        raise TemplateError(f"{template.id}: line has no code tokens")
    if v in INSERTS:
        return 0, 0
    if v == REPLACE_LINE:
        return ln.content
    if v == KEEP_PREFIX:
        if not 1 <= template.param < n:
            raise TemplateError(f"{template.id}: cut point outside the line")
        return ln.starts[template.param], ln.content[1]
    if v == KEEP_SUFFIX:
        if not 1 <= template.param < n:
            raise TemplateError(f"{template.id}: cut point outside the line")
        return ln.content[0], ln.end(n - template.param - 1)
    if v in (METHOD_NAME, METHOD_ARGS):
        sites = _call_sites(ln)
        if template.param >= len(sites):
            raise TemplateError(f"{template.id}: no call site #{template.param} on this line")
        i = sites[template.param]
        if v == METHOD_NAME:
            return ln.starts[i], ln.end(i)
        close = ln.match_paren(i + 1) if i + 1 < n else None
        if close is None:
            raise TemplateError(f"{template.id}: call arguments not closed on this line")
        return ln.end(i + 1), ln.starts[close]
    if v == BOOL_EXPR_OR_OP:
        sites = _bool_sites(ln)
        if template.param >= len(sites):
            raise TemplateError(f"{template.id}: no boolean site #{template.param} on this line")
        _, a, b = sites[template.param]
        return ln.starts[a], ln.end(b)
    raise TemplateError(f"unknown template variant {v!r}")


def _code_texts(text: str, keywords=JAVA_KEYWORDS) -> tuple[str, ...]:
    return tuple(t.text for t in tokenize(text, keywords) if t.is_code)


def _window(before: Sequence[str], after: Sequence[str], budget: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if budget < 0:
        raise ContextOverflow("masked line and prompt exceed the context limit")
    half = budget // 2
    nb = min(len(before), half)
    na = min(len(after), budget - nb)
    nb = min(len(before), budget - na)
    return tuple(before[len(before) - nb :]) if nb else (), tuple(after[:na])


def apply(
    template: RepairTemplate,
    line: str | Sequence[Token],
    context: LineContext | None = None,
    *,
    buggy_line_no: int = 0,
    limit: int = DEFAULT_CONTEXT_LIMIT,
    reserved: int = 0,
    keywords=JAVA_KEYWORDS,
) -> MaskedRepairInput:
    text = line if isinstance(line, str) else "".join(t.text for t in line)
    context = context or LineContext()
    if template.variant not in INSERTS:
        applicable = {t.id for t in enumerate_applicable(text, keywords)}
        if template.id not in applicable:
            raise TemplateError(f"template {template.variant} ({template.id}) does not apply to {text.strip()!r}")
    start, end = masked_range(template, text, keywords)
    before, after = tuple(context.before), tuple(context.after)
    if template.variant == INSERT_BEFORE:
        masked = (SPAN,)
        after = _code_texts(text, keywords) + after
        rendered = SPAN
    elif template.variant == INSERT_AFTER:
        masked = (SPAN,)
        before = before + _code_texts(text, keywords)
        rendered = SPAN
    else:
        masked = _code_texts(text[:start], keywords) + (SPAN,) + _code_texts(text[end:], keywords)
        rendered = (text[:start] + SPAN + text[end:]).strip()
    before, after = _window(before, after, limit - len(masked) - reserved)
    meta = {"mode": template.mode} if template.mode else {}
    return MaskedRepairInput(
        template=template.id,
        context_before=before,
        context_after=after,
        masked_line=masked,
        buggy_line_no=buggy_line_no,
        target=text[start:end],
        text=rendered,
        metadata=meta,
    )


def _wordchar(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def _joined(left: str, fill: str, right: str) -> str:
    if fill and left and _wordchar(left[-1]) and _wordchar(fill[0]):
        fill = " " + fill
    if fill and right and _wordchar(fill[-1]) and _wordchar(right[0]):
        fill = fill + " "
    return left + fill + right


def splice(candidate_text: str, template: RepairTemplate, original_line: str, keywords=JAVA_KEYWORDS) -> list[str]:
    """Rebuild the patched line(s) from a span fill."""
    if template.variant in INSERTS:
        if not candidate_text:
            return [original_line]
        indent = original_line[: len(original_line) - len(original_line.lstrip())]
        new = indent + candidate_text
        return [new, original_line] if template.variant == INSERT_BEFORE else [original_line, new]
    start, end = masked_range(template, original_line, keywords)
    return [_joined(original_line[:start], candidate_text, original_line[end:])]


def target_of(masked: MaskedRepairInput) -> str:
    return masked.target
