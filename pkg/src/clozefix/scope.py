"""Declaration-site scanning without a real parser.

Good enough to answer two questions for prompting: which names are in scope
at a line, and what type (or return type) a name was declared with. Rules are
deliberately simple; a false inclusion only costs a wasted prompt.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .corpus import MODIFIERS, FunctionUnit, ProjectCorpus, SourceFile
from .lexer import IDENTIFIER, PRIMITIVE_TYPES, Token

VARIABLE = "variable"
METHOD = "method"

_CLASS_KEYWORDS = frozenset({"class", "interface", "enum", "struct"})
_ACCESS_LABELS = frozenset({"public", "private", "protected"})
_TYPE_PUNCT = frozenset({".", "::", "[", "]", "*", "&", "?", "...", "<", ">", ">>", ","})
_DECL_FOLLOW = frozenset({"=", ";", ",", ":", ")", "["})
_STMT_START = frozenset({"{", "}", ";", "(", ":"})


@dataclass(frozen=True)
class Decl:
    name: str
    kind: str
    type: str
    file: str
    line: int
    owner: str = ""  # enclosing class, or function key for locals/params


@dataclass
class ClassDecl:
    name: str
    file: str
    start_line: int
    end_line: int
    bases: list[str] = field(default_factory=list)
    members: list[Decl] = field(default_factory=list)

    def contains(self, line: int) -> bool:
        return self.start_line <= line <= self.end_line


@dataclass
class FileScope:
    file: str
    imports: list[str]
    classes: list[ClassDecl]
    params: dict[str, list[Decl]]  # function key -> params
    locals: dict[str, list[Decl]]  # function key -> locals


def _code(tokens: Sequence[Token]) -> list[Token]:
    return [t for t in tokens if t.is_code]


def _match(code: Sequence[Token], i: int, open_: str, close: str) -> int:
    depth = 0
    for j in range(i, len(code)):
        if code[j].text == open_:
            depth += 1
        elif code[j].text == close:
            depth -= 1
            if depth == 0:
                return j
    return len(code) - 1


def _type_text(toks: Sequence[Token]) -> str:
    """Render a type from its tokens, dropping modifiers and annotations."""
    text = ""
    skip_next = False
    for t in toks:
        if skip_next:
            skip_next = False
            continue
        if t.text == "@":
            skip_next = True
            continue
        if t.text in MODIFIERS or t.text in ("const", "final", "mutable", "typename"):
            continue
        if text and _wordish(text[-1]) and _wordish(t.text[0]):
            text += " "
        text += t.text + (" " if t.text == "," else "")
    return text


def _wordish(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def _angle_depth(toks: Sequence[Token]) -> int:
    return sum(t.text == "<" for t in toks) - sum(t.text == ">" for t in toks) - 2 * sum(t.text == ">>" for t in toks)


def _is_type_token(t: Token) -> bool:
    return t.kind == IDENTIFIER or t.text in PRIMITIVE_TYPES or t.text in _TYPE_PUNCT


def _split_top(toks: Sequence[Token], sep: str = ",") -> list[list[Token]]:
    parts: list[list[Token]] = [[]]
    depth = 0
    for t in toks:
        if t.text in ("(", "[", "{", "<"):
            depth += 1
        elif t.text in (")", "]", "}", ">"):
            depth -= 1
        elif t.text == ">>":
            depth -= 2
        if t.text == sep and depth == 0:
            parts.append([])
        else:
            parts[-1].append(t)
    return [p for p in parts if p]


def _declarator(toks: Sequence[Token]) -> tuple[str, str] | None:
    """(type, name) from ``[modifiers] Type name`` or None."""
    toks = [t for t in toks if t.text not in MODIFIERS and t.text not in ("final", "const")]
    # drop annotations
    clean: list[Token] = []
    skip = False
    for t in toks:
        if skip:
            skip = False
            continue
        if t.text == "@":
            skip = True
            continue
        clean.append(t)
    while clean and clean[-1].text in ("[", "]"):
        clean.pop()
    if len(clean) < 2 or clean[-1].kind != IDENTIFIER:
        return None
    type_toks = clean[:-1]
    if not all(_is_type_token(t) for t in type_toks):
        return None
    if type_toks[0].kind != IDENTIFIER and type_toks[0].text not in PRIMITIVE_TYPES:
        return None
    return _type_text(type_toks), clean[-1].text


def _params(fn: FunctionUnit) -> list[Decl]:
    code = _code(fn.tokens)
    for i, t in enumerate(code):
        if t.text == fn.name and i + 1 < len(code) and code[i + 1].text == "(":
            close = _match(code, i + 1, "(", ")")
            out = []
            for part in _split_top(code[i + 2 : close]):
                head = _split_top(part, "=")[0] if part else part
                d = _declarator(head)
                if d:
                    out.append(Decl(d[1], VARIABLE, d[0], fn.file, part[-1].line, fn.key))
            return out
    return []


def _locals(fn: FunctionUnit) -> list[Decl]:
    code = _code(fn.tokens)
    try:
        body = next(i for i, t in enumerate(code) if t.text == "{" and t.line >= fn.body_line)
    except StopIteration:
        return []
    out: list[Decl] = []
    n = len(code)
    i = body + 1
    while i < n:
        prev = code[i - 1].text
        t = code[i]
        if prev in _STMT_START and (t.kind == IDENTIFIER or t.text in PRIMITIVE_TYPES or t.text in ("final", "const")):
            j = i
            angle = 0
            while j < n:
                tj = code[j].text
                if tj == "<":
                    angle += 1
                elif tj == ">":
                    angle -= 1
                elif tj == ">>":
                    angle -= 2
                elif angle <= 0 and tj in _DECL_FOLLOW and j > i:
                    if not (tj == "[" and j + 1 < n and code[j + 1].text == "]"):
                        break
                if not (_is_type_token(code[j]) or tj in ("final", "const")):
                    break
                j += 1
            if j < n and j - i >= 2 and code[j].text in _DECL_FOLLOW and code[j - 1].kind == IDENTIFIER:
                d = _declarator(code[i:j])
                if d and not (code[j].text == ")" and prev != "("):
                    out.append(Decl(d[1], VARIABLE, d[0], fn.file, code[j - 1].line, fn.key))
                    # further declarators: `int a = 1, b;`
                    k, depth = j, 0
                    while k < n and not (depth == 0 and code[k].text in (";", ")")):
                        tk = code[k].text
                        if tk in ("(", "[", "{"):
                            depth += 1
                        elif tk in (")", "]", "}"):
                            depth -= 1
                        elif depth == 0 and tk == "," and k + 1 < n and code[k + 1].kind == IDENTIFIER:
                            if k + 2 < n and code[k + 2].text in ("=", ",", ";"):
                                out.append(Decl(code[k + 1].text, VARIABLE, d[0], fn.file, code[k + 1].line, fn.key))
                        k += 1
            i = max(i + 1, j)
            continue
        i += 1
    return out


def _imports(code: Sequence[Token]) -> list[str]:
    out = []
    for i, t in enumerate(code):
        if t.text == "import" and (i == 0 or code[i - 1].text in (";", "}")):
            j = i + 1
            names = []
            while j < len(code) and code[j].text != ";":
                names.append(code[j].text)
                j += 1
            if names and names[-1] != "*":
                out.append(names[-1])
    return out


def _members(cls: ClassDecl, code: Sequence[Token], open_: int, close: int, kind_kw: str) -> None:
    i = open_ + 1
    stmt: list[Token] = []
    if kind_kw == "enum":
        while i < close and code[i].text not in (";", "}"):
            t = code[i]
            if t.kind == IDENTIFIER and code[i - 1].text in ("{", ",") and code[i + 1].text in (",", ";", "(", "}"):
                cls.members.append(Decl(t.text, VARIABLE, cls.name, cls.file, t.line, cls.name))
            if t.text in ("(", "{"):
                i = _match(code, i, t.text, ")" if t.text == "(" else "}")
            i += 1
        i += 1
    while i < close:
        t = code[i]
        if t.text in _ACCESS_LABELS and i + 1 < close and code[i + 1].text == ":":
            i += 2
            continue
        if t.text in _CLASS_KEYWORDS:
            # nested type: skip its body, it is scanned separately
            j = i
            while j < close and code[j].text not in ("{", ";"):
                j += 1
            i = _match(code, j, "{", "}") + 1 if j < close and code[j].text == "{" else j + 1
            stmt = []
            continue
        if t.text == "(" and stmt:
            name_tok = stmt[-1]
            end = _match(code, i, "(", ")")
            k = end + 1
            while k < close and code[k].text not in ("{", ";"):
                k += 1
            if name_tok.kind == IDENTIFIER and name_tok.text != cls.name:
                d = _declarator(stmt)
                if d:
                    cls.members.append(Decl(d[1], METHOD, d[0], cls.file, name_tok.line, cls.name))
            i = _match(code, k, "{", "}") + 1 if k < close and code[k].text == "{" else k + 1
            stmt = []
            continue
        if t.text == "," and _angle_depth(stmt) > 0:
            stmt.append(t)
            i += 1
            continue
        if t.text in ("=", ";", ","):
            d = _declarator(stmt)
            if d:
                cls.members.append(Decl(d[1], VARIABLE, d[0], cls.file, stmt[-1].line, cls.name))
            # walk to the end of the statement, picking up `int a, b;` declarators
            j, depth = i, 0
            while j < close and not (depth == 0 and code[j].text == ";"):
                tj = code[j].text
                if tj in ("(", "[", "{"):
                    depth += 1
                elif tj in (")", "]", "}"):
                    depth -= 1
                elif d and depth == 0 and tj == "," and code[j + 1].kind == IDENTIFIER:
                    nxt = code[j + 1]
                    cls.members.append(Decl(nxt.text, VARIABLE, d[0], cls.file, nxt.line, cls.name))
                j += 1
            i = j + 1
            stmt = []
            continue
        if t.text == "{":
            # initializer block or unrecognised body
            i = _match(code, i, "{", "}") + 1
            stmt = []
            continue
        if t.text == "}":
            stmt = []
            i += 1
            continue
        stmt.append(t)
        i += 1


def _classes(source: SourceFile, code: Sequence[Token]) -> list[ClassDecl]:
    out = []
    for i, t in enumerate(code):
        if t.text not in _CLASS_KEYWORDS or i + 1 >= len(code) or code[i + 1].kind != IDENTIFIER:
            continue
        if i and code[i - 1].text in (".", "::"):
            continue
        j = i + 2
        bases = []
        while j < len(code) and code[j].text not in ("{", ";"):
            if code[j].kind == IDENTIFIER and code[j - 1].text in ("extends", "implements", ":", ",", "public", "private", "protected", "virtual"):
                bases.append(code[j].text)
            j += 1
        if j >= len(code) or code[j].text != "{":
            continue
        close = _match(code, j, "{", "}")
        cls = ClassDecl(code[i + 1].text, source.relative_path, t.line, code[close].line, bases)
        _members(cls, code, j, close, t.text)
        out.append(cls)
    return out


def analyse_file(source: SourceFile, functions: Sequence[FunctionUnit]) -> FileScope:
    code = _code(source.tokens)
    return FileScope(
        file=source.relative_path,
        imports=_imports(code),
        classes=_classes(source, code),
        params={fn.key: _params(fn) for fn in functions},
        locals={fn.key: _locals(fn) for fn in functions},
    )


class ScopeIndex:
    """Per-corpus declaration tables."""

    def __init__(self, corpus: ProjectCorpus):
        self.corpus = corpus
        self.files: dict[str, FileScope] = {}
        for f in corpus.files:
            self.files[f.relative_path] = analyse_file(f, corpus.functions_in(f.relative_path))
        self.classes: dict[str, list[ClassDecl]] = {}
        for fs in self.files.values():
            for c in fs.classes:
                self.classes.setdefault(c.name, []).append(c)

    def enclosing_classes(self, file: str, line: int) -> list[ClassDecl]:
        hits = [c for c in self.files[file].classes if c.contains(line)]
        return sorted(hits, key=lambda c: c.start_line)

    def class_members(self, name: str, seen: set[str] | None = None) -> list[Decl]:
        """Members of a class and its in-corpus ancestors."""
        seen = set() if seen is None else seen
        if name in seen:
            return []
        seen.add(name)
        out: list[Decl] = []
        for cls in self.classes.get(name, ()):
            out.extend(cls.members)
            for base in cls.bases:
                out.extend(self.class_members(base, seen))
        return out

    def visible_decls(self, file: str, line: int) -> list[Decl]:
        """Declarations in scope at ``line``, nearest scope first."""
        fn = self.corpus.function_at(file, line)
        fs = self.files[file]
        out: list[Decl] = []
        if fn is not None:
            out.extend(d for d in fs.locals.get(fn.key, ()) if d.line < line)
            out.extend(fs.params.get(fn.key, ()))
        for cls in reversed(self.enclosing_classes(file, line)):
            out.extend(self.class_members(cls.name))
        return out

    def all_decls(self) -> list[Decl]:
        out: list[Decl] = []
        for fs in self.files.values():
            for cls in fs.classes:
                out.extend(cls.members)
            for decls in fs.params.values():
                out.extend(decls)
            for decls in fs.locals.values():
                out.extend(decls)
        return sorted(out, key=lambda d: (d.file, d.line))


@lru_cache(maxsize=8)
def scope_index(corpus: ProjectCorpus) -> ScopeIndex:
    return ScopeIndex(corpus)


def base_type(type_text: str) -> str:
    """Strip generics, arrays and pointers: ``List<Foo>[]`` -> ``List``."""
    head = type_text.split("<", 1)[0]
    for ch in "[]*& ":
        head = head.replace(ch, "")
    return head.split(".")[-1].split("::")[-1]
