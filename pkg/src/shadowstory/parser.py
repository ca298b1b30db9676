"""Recursive-descent parser for the Xapi pidgin.

Grammar::

    program   := {directive | statement}
    statement := clause ["//" clause] ("." | "?" | "!")
    clause    := part "/" vphrase ["/" part]
    part      := simple ["--" word "--" part]
    simple    := ["the"|"a"|"an"] word {word} | STRING | "I" | "text" STRING
    vphrase   := ["wh"] word {word} ["in" ["scene"] STRING]
    directive := "$" word {STRING | word}          (ends at newline)
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class XapiSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{line}:{col}: {message}")


class PartForm(str, enum.Enum):
    DEFINITE = "DEFINITE"
    INDEFINITE = "INDEFINITE"
    PROPER = "PROPER"
    PRONOUN_I = "PRONOUN_I"
    REL_CHAIN = "REL_CHAIN"
    TEXT_LITERAL = "TEXT_LITERAL"


@dataclass(frozen=True)
class PartRef:
    form: PartForm
    words: tuple[str, ...] = ()
    article: str | None = None
    name: str | None = None
    head: "PartRef | None" = None
    relation: str | None = None
    tail: "PartRef | None" = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VerbPhrase:
    words: tuple[str, ...]
    wh: bool = False
    scene: str | None = None


@dataclass(frozen=True)
class Statement:
    subject: PartRef
    verb: VerbPhrase
    obj: PartRef | None = None
    quoted: "Statement | None" = None
    terminator: str = "."
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def has_wh(self) -> bool:
        return self.verb.wh or (self.quoted is not None and self.quoted.has_wh())


@dataclass(frozen=True)
class Directive:
    name: str
    args: tuple[str, ...]
    quoted: tuple[bool, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<dslash>//)
  | (?P<slash>/)
  | (?P<ddash>--)
  | (?P<term>[.?!])
  | (?P<dollar>\$)
  | (?P<word>[^\s/"#.?!$]+)
  | (?P<bad>")
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:  # pragma: no cover - every char matches some branch
            raise XapiSyntaxError("unexpected character", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        text = m.group(0)
        if kind == "bad":
            raise XapiSyntaxError("unterminated string", line, col)
        if kind == "nl":
            tokens.append(Token("nl", text, line, col))
            line += 1
            line_start = m.end()
        elif kind == "word" and text.startswith("--"):
            raise XapiSyntaxError(f"unexpected {text!r}", line, col)
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


ARTICLES = {"the": "the", "The": "the", "a": "a", "A": "a", "an": "a", "An": "a"}


class _Parser:
    def __init__(self, src: str) -> None:
        self.toks = tokenize(src)
        self.i = 0

    def peek(self, skip_nl: bool = True) -> Token:
        j = self.i
        while skip_nl and self.toks[j].kind == "nl":
            j += 1
        return self.toks[j]

    def next(self, skip_nl: bool = True) -> Token:
        while skip_nl and self.toks[self.i].kind == "nl":
            self.i += 1
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            got = tok.text or "end of input"
            raise XapiSyntaxError(f"expected {what}, got {got!r}", tok.line, tok.col)
        return tok

    def program(self) -> list[Statement | Directive]:
        out: list[Statement | Directive] = []
        while self.peek().kind != "eof":
            if self.peek().kind == "dollar":
                out.append(self.directive())
            else:
                out.append(self.statement())
        return out

    def directive(self) -> Directive:
        dollar = self.next()
        name = self.next(skip_nl=False)
        if name.kind != "word":
            raise XapiSyntaxError("expected directive name after '$'", name.line, name.col)
        args, quoted = [], []
        while self.peek(skip_nl=False).kind in ("word", "string"):
            tok = self.next(skip_nl=False)
            if tok.kind == "string":
                args.append(_unquote(tok.text))
                quoted.append(True)
            else:
                args.append(tok.text)
                quoted.append(False)
        end = self.peek(skip_nl=False)
        if end.kind not in ("nl", "eof"):
            raise XapiSyntaxError(f"unexpected {end.text!r} in directive", end.line, end.col)
        return Directive(name.text, tuple(args), tuple(quoted), dollar.line, dollar.col)

    def statement(self) -> Statement:
        start = self.peek()
        subject, verb, obj = self.clause()
        quoted = None
        if self.peek().kind == "dslash":
            self.next()
            q_start = self.peek()
            qs, qv, qo = self.clause()
            quoted = (qs, qv, qo, q_start)
        term = self.next()
        if term.kind != "term":
            if quoted is not None and term.kind == "eof":
                raise XapiSyntaxError("unterminated quote clause", start.line, start.col)
            raise XapiSyntaxError(
                f"expected '.', '?' or '!', got {term.text or 'end of input'!r}", term.line, term.col
            )
        inner = None
        if quoted is not None:
            qs, qv, qo, q_start = quoted
            inner = Statement(qs, qv, qo, None, term.text, q_start.line, q_start.col)
        st = Statement(subject, verb, obj, inner, term.text, start.line, start.col)
        if (term.text == "?") != st.has_wh():
            msg = "'?' requires a wh-marker" if term.text == "?" else "wh-question must end with '?'"
            raise XapiSyntaxError(msg, term.line, term.col)
        return st

    def clause(self) -> tuple[PartRef, VerbPhrase, PartRef | None]:
        subject = self.part()
        self.expect("slash", "'/'")
        verb = self.vphrase()
        obj = None
        if self.peek().kind == "slash":
            self.next()
            obj = self.part()
        return subject, verb, obj

    def vphrase(self) -> VerbPhrase:
        tok = self.peek()
        wh = False
        if tok.kind == "word" and tok.text == "wh":
            self.next()
            wh = True
        words = []
        scene = None
        while self.peek().kind == "word":
            w = self.next()
            if w.text == "in" and words:
                nxt = self.peek()
                if nxt.kind == "word" and nxt.text == "scene":
                    self.next()
                    nxt = self.peek()
                if nxt.kind == "string":
                    scene = _unquote(self.next().text)
                    break
                raise XapiSyntaxError("expected scene name after 'in'", nxt.line, nxt.col)
            words.append(w.text)
        if not words:
            t = self.peek()
            raise XapiSyntaxError("expected a verb", t.line, t.col)
        return VerbPhrase(tuple(words), wh, scene)

    def part(self) -> PartRef:
        head = self.simple_part()
        if self.peek().kind == "ddash":
            self.next()
            rel = self.expect("word", "relation word")
            self.expect("ddash", "'--'")
            tail = self.part()
            return PartRef(PartForm.REL_CHAIN, head=head, relation=rel.text, tail=tail,
                           line=head.line, col=head.col)
        return head

    def simple_part(self) -> PartRef:
        tok = self.next()
        if tok.kind == "string":
            return PartRef(PartForm.PROPER, name=_unquote(tok.text), line=tok.line, col=tok.col)
        if tok.kind != "word":
            raise XapiSyntaxError(
                f"expected a part, got {tok.text or 'end of input'!r}", tok.line, tok.col
            )
        if tok.text == "text" and self.peek().kind == "string":
            lit = self.next()
            return PartRef(PartForm.TEXT_LITERAL, name=_unquote(lit.text), line=tok.line, col=tok.col)
        article = ARTICLES.get(tok.text)
        words = [] if article else [tok.text]
        while self.peek().kind == "word":
            words.append(self.next().text)
        if not words:
            raise XapiSyntaxError(f"article {tok.text!r} without a noun", tok.line, tok.col)
        if article is None and words == ["I"]:
            return PartRef(PartForm.PRONOUN_I, line=tok.line, col=tok.col)
        if article == "a":
            return PartRef(PartForm.INDEFINITE, tuple(words), "a", line=tok.line, col=tok.col)
        return PartRef(PartForm.DEFINITE, tuple(words), article, line=tok.line, col=tok.col)


def _unquote(text: str) -> str:
    return text[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def parse_program(src: str) -> list[Statement | Directive]:
    return _Parser(src).program()


def unparse_part(p: PartRef) -> str:
    if p.form == PartForm.PROPER:
        return _quote(p.name)
    if p.form == PartForm.PRONOUN_I:
        return "I"
    if p.form == PartForm.TEXT_LITERAL:
        return "text " + _quote(p.name)
    if p.form == PartForm.REL_CHAIN:
        return f"{unparse_part(p.head)} -- {p.relation} -- {unparse_part(p.tail)}"
    words = " ".join(p.words)
    return f"{p.article} {words}" if p.article else words


def _unparse_clause(st: Statement) -> str:
    v = st.verb
    verb = ("wh " if v.wh else "") + " ".join(v.words)
    if v.scene is not None:
        verb += f" in scene {_quote(v.scene)}"
    out = f"{unparse_part(st.subject)} / {verb}"
    if st.obj is not None:
        out += f" / {unparse_part(st.obj)}"
    return out


def unparse(item: Statement | Directive) -> str:
    if isinstance(item, Directive):
        args = [(_quote(a) if q else a) for a, q in zip(item.args, item.quoted)]
        return " ".join(["$" + item.name, *args])
    text = _unparse_clause(item)
    if item.quoted is not None:
        text += " // " + _unparse_clause(item.quoted)
    return text + item.terminator
