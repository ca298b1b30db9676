"""Domain library: concept/verb database, dictionary, metaverbs and impacts.

File format, one statement per ``.``-terminated clause, ``#`` comments::

    concept wolf.
    verb eats.
    overlap wolf dog 0.5.
    word "wolf" -> wolf.
    word "sees good" -> sees+good-manner:0.5.
    metaverb is-a.
    verb eats impact consume-object 1.0.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .model import CONCEPT, VERB, ConceptBase, ModelError, Overlay, overlay_merge


class DomainError(Exception):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnknownWordError(DomainError):
    def __init__(self, word: str) -> None:
        self.word = word
        super().__init__(f"unknown word {word!r}")


class ImpactEffect(str, enum.Enum):
    CONSUME_OBJECT = "consume-object"
    CONSUME_SUBJECT = "consume-subject"
    PUSH_OUT_BOOST = "push-out-boost"


@dataclass(frozen=True)
class Impact:
    effect: ImpactEffect
    magnitude: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.magnitude <= 1.0:
            raise DomainError(f"impact magnitude {self.magnitude} outside [0,1]")


# verb atoms the engine gives side effects to
KNOWN_METAVERBS = ("is-a", "says", "asks", "changes-into")
QUOTE_METAVERBS = ("says", "asks")


@dataclass
class DomainLibrary:
    base: ConceptBase = field(default_factory=ConceptBase)
    dictionary: dict[str, tuple[str, Overlay]] = field(default_factory=dict)
    metaverbs: set[str] = field(default_factory=set)
    impacts: dict[str, list[Impact]] = field(default_factory=dict)

    def lookup_word(self, word: str) -> tuple[str, Overlay]:
        try:
            return self.dictionary[word]
        except KeyError:
            raise UnknownWordError(word) from None

    def lookup_phrase(self, words: list[str]) -> tuple[str, Overlay]:
        """Look up a multiword phrase, merging word overlays.

        A phrase spelled as a single dictionary entry wins over the
        word-by-word reading.
        """
        joined = " ".join(words)
        if joined in self.dictionary:
            return self.dictionary[joined]
        kind, acc = self.lookup_word(words[0])
        for w in words[1:]:
            k, ov = self.lookup_word(w)
            if k != kind:
                raise DomainError(f"phrase {joined!r} mixes {kind} and {k} words")
            acc = overlay_merge(acc, ov)
        return kind, acc

    def impacts_of(self, verb: Overlay) -> list[Impact]:
        out: list[Impact] = []
        for atom in verb.weights:
            out.extend(self.impacts.get(atom, ()))
        return out

    def is_metaverb(self, verb: Overlay, name: str) -> bool:
        return name in self.metaverbs and name in verb

    def quote_verb(self, verb: Overlay) -> bool:
        return any(self.is_metaverb(verb, m) for m in QUOTE_METAVERBS)

    def serialize(self) -> str:
        """Canonical text form; ``load_domain(lib.serialize())`` reproduces ``lib``."""
        lines = []
        for atom, kind in sorted(self.base.kinds.items()):
            if kind == VERB and atom in self.impacts:
                for imp in self.impacts[atom]:
                    lines.append(f"verb {atom} impact {imp.effect.value} {imp.magnitude!r}.")
            else:
                lines.append(f"{kind} {atom}.")
        for a, b, w in self.base.overlap_items():
            lines.append(f"overlap {a} {b} {w!r}.")
        for m in sorted(self.metaverbs):
            lines.append(f"metaverb {m}.")
        for word, (_kind, ov) in sorted(self.dictionary.items()):
            parts = "+".join(a if w == 1.0 else f"{a}:{w!r}" for a, w in ov.items())
            lines.append(f'word "{word}" -> {parts}.')
        return "\n".join(lines) + ("\n" if lines else "")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DomainLibrary):
            return NotImplemented
        return (
            self.base.kinds == other.base.kinds
            and self.base.overlap_items() == other.base.overlap_items()
            and self.dictionary == other.dictionary
            and self.metaverbs == other.metaverbs
            and self.impacts == other.impacts
        )


_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|->|[^\s"]+')


def _statements(source: str):
    """Yield (line, tokens) for each ``.``-terminated statement."""
    current: list[str] = []
    start_line = None
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = _strip_comment_outside_quotes(raw)
        for m in _TOKEN.finditer(line):
            tok = m.group(0)
            if start_line is None:
                start_line = lineno
            if not tok.startswith('"') and tok.endswith("."):
                body = tok[:-1]
                if body:
                    current.append(body)
                yield start_line, current
                current, start_line = [], None
            else:
                current.append(tok)
    if current:
        raise DomainError("statement not terminated by '.'", start_line)


def _strip_comment_outside_quotes(line: str) -> str:
    inside = False
    for i, ch in enumerate(line):
        if ch == '"':
            inside = not inside
        elif ch == "#" and not inside:
            return line[:i]
    return line


def _weight(text: str, line: int) -> float:
    try:
        w = float(text)
    except ValueError:
        raise DomainError(f"expected a number, got {text!r}", line) from None
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"weight {w} outside [0,1]", line)
    return w


def load_domain(source: str) -> DomainLibrary:
    lib = DomainLibrary()
    base = lib.base
    pending_words: list[tuple[int, str, list[str]]] = []
    pending_overlaps: list[tuple[int, str, str, float]] = []
    pending_meta: list[tuple[int, str]] = []

    for line, toks in _statements(source):
        head, args = toks[0], toks[1:]
        try:
            if head == "concept" and len(args) == 1:
                base.declare(args[0], CONCEPT)
            elif head == "verb" and len(args) == 1:
                base.declare(args[0], VERB)
            elif head == "verb" and len(args) == 4 and args[1] == "impact":
                atom = args[0]
                if atom not in base.kinds:
                    base.declare(atom, VERB)
                elif base.kinds[atom] != VERB:
                    raise DomainError(f"{atom!r} is not a verb", line)
                try:
                    effect = ImpactEffect(args[2])
                except ValueError:
                    raise DomainError(f"unknown impact effect {args[2]!r}", line) from None
                lib.impacts.setdefault(atom, []).append(Impact(effect, _weight(args[3], line)))
            elif head == "overlap" and len(args) == 3:
                pending_overlaps.append((line, args[0], args[1], _weight(args[2], line)))
            elif head == "word" and len(args) == 3 and args[1] == "->":
                if not (args[0].startswith('"') and args[0].endswith('"')):
                    raise DomainError("word must be a quoted string", line)
                pending_words.append((line, args[0][1:-1], args[2].split("+")))
            elif head == "metaverb" and len(args) == 1:
                pending_meta.append((line, args[0]))
            else:
                raise DomainError(f"unrecognized statement {' '.join(toks)!r}", line)
        except ModelError as exc:
            raise DomainError(str(exc), line) from None

    for line, a, b, w in pending_overlaps:
        for atom in (a, b):
            if atom not in base.kinds:
                raise DomainError(f"unknown atom {atom!r} in overlap", line)
        try:
            base.set_overlap(a, b, w)
        except ModelError as exc:
            raise DomainError(str(exc), line) from None

    for line, atom in pending_meta:
        if base.kinds.get(atom) != VERB:
            raise DomainError(f"metaverb {atom!r} is not a declared verb", line)
        if atom in lib.metaverbs:
            raise DomainError(f"duplicate metaverb {atom!r}", line)
        lib.metaverbs.add(atom)

    for line, word, specs in pending_words:
        if word in lib.dictionary:
            raise DomainError(f"duplicate word {word!r}", line)
        weights: dict[str, float] = {}
        for spec in specs:
            atom, _, w = spec.partition(":")
            if atom not in base.kinds:
                raise DomainError(f"unknown atom {atom!r} for word {word!r}", line)
            weights[atom] = _weight(w, line) if w else 1.0
        kinds = {base.kinds[a] for a in weights}
        if len(kinds) != 1:
            raise DomainError(f"word {word!r} mixes concept and verb atoms", line)
        kind = kinds.pop()
        lib.dictionary[word] = (kind, Overlay(kind, weights))
    return lib


def lookup_word(lib: DomainLibrary, word: str) -> tuple[str, Overlay]:
    return lib.lookup_word(word)
