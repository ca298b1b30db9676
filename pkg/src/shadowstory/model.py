"""Concepts, overlays, instances, verb instances, scenes and relations.

Everything an agent knows about an entity is an :class:`Overlay`: a weighted
set of concept (or verb) atoms.  Overlays are compared through the explicit
overlap table of a :class:`ConceptBase`; there is no hierarchy and overlap is
never computed transitively.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

CONCEPT = "concept"
VERB = "verb"


class ModelError(Exception):
    """Raised on violations of the core model invariants."""


class KindMismatchError(ModelError):
    pass


def is_name_atom(atom: str) -> bool:
    """Proper names and text literals are concept atoms spelled with quotes."""
    return atom.startswith('"')


class ConceptBase:
    """Declared atoms plus a symmetric sparse overlap table."""

    def __init__(self) -> None:
        self.kinds: dict[str, str] = {}
        self._overlap: dict[frozenset[str], float] = {}

    def declare(self, atom: str, kind: str) -> None:
        if kind not in (CONCEPT, VERB):
            raise ModelError(f"unknown atom kind {kind!r}")
        if atom in self.kinds:
            raise ModelError(f"duplicate atom {atom!r}")
        self.kinds[atom] = kind

    def kind_of(self, atom: str) -> str:
        if is_name_atom(atom):
            return CONCEPT
        try:
            return self.kinds[atom]
        except KeyError:
            raise ModelError(f"undeclared atom {atom!r}") from None

    def set_overlap(self, a: str, b: str, weight: float) -> None:
        if a == b:
            raise ModelError(f"self overlap of {a!r} is fixed at 1")
        if not 0.0 <= weight <= 1.0:
            raise ModelError(f"overlap weight {weight} outside [0,1]")
        if self.kind_of(a) != self.kind_of(b):
            raise KindMismatchError(f"overlap between {a!r} and {b!r} mixes kinds")
        self._overlap[frozenset((a, b))] = weight

    def overlap(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        return self._overlap.get(frozenset((a, b)), 0.0)

    def overlap_items(self) -> list[tuple[str, str, float]]:
        out = []
        for pair, w in self._overlap.items():
            a, b = sorted(pair)
            out.append((a, b, w))
        return sorted(out)


class Overlay:
    """Immutable weighted set of same-kind atoms.  Zero weights are dropped."""

    __slots__ = ("kind", "_weights", "_hash")

    def __init__(self, kind: str, weights: Mapping[str, float] | None = None) -> None:
        if kind not in (CONCEPT, VERB):
            raise ModelError(f"unknown overlay kind {kind!r}")
        clean = {}
        for atom, w in (weights or {}).items():
            if w < 0 or w > 1 or math.isnan(w):
                raise ModelError(f"overlay weight {w} for {atom!r} outside [0,1]")
            if w > 0:
                clean[atom] = float(w)
        self.kind = kind
        self._weights = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def concept(cls, *atoms: str) -> "Overlay":
        return cls(CONCEPT, {a: 1.0 for a in atoms})

    @classmethod
    def verb(cls, *atoms: str) -> "Overlay":
        return cls(VERB, {a: 1.0 for a in atoms})

    @property
    def weights(self) -> Mapping[str, float]:
        return self._weights

    def items(self):
        return self._weights.items()

    def get(self, atom: str, default: float = 0.0) -> float:
        return self._weights.get(atom, default)

    def __contains__(self, atom: str) -> bool:
        return atom in self._weights

    def __len__(self) -> int:
        return len(self._weights)

    def __bool__(self) -> bool:
        return bool(self._weights)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Overlay)
            and self.kind == other.kind
            and self._weights == other._weights
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.kind, tuple(self._weights.items())))
        return self._hash

    def dominates(self, other: "Overlay") -> bool:
        """True when every atom of ``other`` is present here with >= weight."""
        return all(self.get(a) >= w for a, w in other.items())

    def to_json(self) -> dict:
        return {"kind": self.kind, "weights": dict(self._weights)}

    @classmethod
    def from_json(cls, data: Mapping) -> "Overlay":
        return cls(data["kind"], data["weights"])

    def __repr__(self) -> str:
        body = ", ".join(f"{a}:{w:g}" for a, w in self._weights.items())
        return f"{self.kind}{{{body}}}"


def overlay_merge(a: Overlay, b: Overlay) -> Overlay:
    if a.kind != b.kind:
        raise KindMismatchError(f"cannot merge {a.kind} overlay with {b.kind} overlay")
    merged = dict(a.weights)
    for atom, w in b.items():
        merged[atom] = min(1.0, merged.get(atom, 0.0) + w)
    return Overlay(a.kind, merged)


def _cross(a: Overlay, b: Overlay, base: ConceptBase, sa: float = 1.0, sb: float = 1.0) -> float:
    total = 0.0
    for x, wx in a.items():
        for y, wy in b.items():
            ov = base.overlap(x, y)
            if ov:
                total += (wx / sa) * (wy / sb) * ov
    return total


def overlay_similarity(a: Overlay, b: Overlay, base: ConceptBase) -> float:
    """Overlap-weighted cosine of two same-kind overlays, in [0, 1]."""
    if a.kind != b.kind:
        raise KindMismatchError(f"cannot compare {a.kind} overlay with {b.kind} overlay")
    if not a or not b:
        return 0.0
    # cosine is scale free; rescaling keeps tiny weights from underflowing
    sa = max(a.weights.values())
    sb = max(b.weights.values())
    norm = math.sqrt(_cross(a, a, base, sa, sa) * _cross(b, b, base, sb, sb))
    if norm == 0.0:
        return 0.0
    return min(1.0, max(0.0, _cross(a, b, base, sa, sb) / norm))


def attribute_match(attributes: Overlay, query: Overlay, base: ConceptBase) -> float:
    """How well ``attributes`` cover every atom of ``query``.

    The weakest query atom decides: each query atom is covered by the
    overlap-weighted mass of the attributes, and the minimum is returned.
    """
    if query.kind != CONCEPT or attributes.kind != CONCEPT:
        raise KindMismatchError("attribute_match needs concept overlays")
    if not query:
        return 0.0
    score = 1.0
    for x in query.weights:
        cover = sum(w * base.overlap(y, x) for y, w in attributes.items())
        score = min(score, cover)
    return min(1.0, max(0.0, score))


class VIKind(str, enum.Enum):
    SVO = "SVO"
    SV = "SV"
    S_ISA_ADJ = "S_ISA_ADJ"
    ACTION_IS_ADVERB = "ACTION_IS_ADVERB"
    QUOTE = "QUOTE"


class RelationKind(str, enum.Enum):
    IDENTITY_SOMATIC = "IDENTITY_SOMATIC"
    IDENTITY_FICTIONAL = "IDENTITY_FICTIONAL"
    NON_IDENTITY = "NON_IDENTITY"
    SCENE_SUCCESSION = "SCENE_SUCCESSION"


IDENTITY_KINDS = (RelationKind.IDENTITY_SOMATIC, RelationKind.IDENTITY_FICTIONAL)


@dataclass
class Instance:
    id: str
    scene: str
    attributes: Overlay
    created_at: float = 0.0

    def __post_init__(self) -> None:
        if self.attributes.kind != CONCEPT:
            raise KindMismatchError("instance attributes must be a concept overlay")
        object.__setattr__(self, "_scene_locked", True)

    def __setattr__(self, name, value):
        if name == "scene" and getattr(self, "_scene_locked", False):
            raise ModelError(f"scene of instance {self.id} is immutable")
        object.__setattr__(self, name, value)

    def add_attributes(self, extra: Overlay) -> None:
        # grow-only: merge never lowers a weight or drops an atom
        self.attributes = overlay_merge(self.attributes, extra)


@dataclass(frozen=True)
class VerbInstance:
    """An event or relation record.

    ``obj`` holds an instance id (SVO), an adjective/adverb overlay
    (S_ISA_ADJ, ACTION_IS_ADVERB) or the quoted VI id (QUOTE).  For
    ACTION_IS_ADVERB the subject is the id of the qualified action VI.
    """

    id: str
    kind: VIKind
    verb: Overlay
    subject: str
    scene: str
    obj: str | Overlay | None = None
    quote_scene: str | None = None
    created_at: float = 0.0
    seq: int = -1
    is_relation: bool = False
    wh: bool = False

    def __post_init__(self) -> None:
        if self.verb.kind != VERB:
            raise KindMismatchError("VI verb must be a verb overlay")
        k = self.kind
        if k in (VIKind.SVO, VIKind.QUOTE):
            ok = isinstance(self.obj, str)
        elif k in (VIKind.S_ISA_ADJ, VIKind.ACTION_IS_ADVERB):
            ok = isinstance(self.obj, Overlay)
        else:
            ok = self.obj is None
        if not ok:
            raise ModelError(f"{k.value} VI {self.id} has an ill-formed object slot")
        if (k == VIKind.QUOTE) != (self.quote_scene is not None):
            raise ModelError(f"VI {self.id}: quote_scene is required for QUOTE and only QUOTE")

    def instance_parts(self) -> tuple[str, ...]:
        """Instance ids filling the subject/object slots, in slot order."""
        if self.kind == VIKind.ACTION_IS_ADVERB:
            return ()
        if self.kind == VIKind.SVO:
            return (self.subject, self.obj)
        return (self.subject,)

    def to_json(self) -> dict:
        obj = self.obj.to_json() if isinstance(self.obj, Overlay) else self.obj
        return {
            "id": self.id,
            "kind": self.kind.value,
            "verb": self.verb.to_json(),
            "subject": self.subject,
            "scene": self.scene,
            "obj": obj,
            "quote_scene": self.quote_scene,
            "created_at": self.created_at,
            "seq": self.seq,
            "is_relation": self.is_relation,
            "wh": self.wh,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "VerbInstance":
        obj = d["obj"]
        if isinstance(obj, dict):
            obj = Overlay.from_json(obj)
        return cls(
            id=d["id"],
            kind=VIKind(d["kind"]),
            verb=Overlay.from_json(d["verb"]),
            subject=d["subject"],
            scene=d["scene"],
            obj=obj,
            quote_scene=d["quote_scene"],
            created_at=d["created_at"],
            seq=d["seq"],
            is_relation=d["is_relation"],
            wh=d["wh"],
        )


@dataclass(frozen=True)
class Relation:
    kind: RelationKind
    src: str
    dst: str


@dataclass
class Scene:
    id: str
    label: str
    members: set[str] = field(default_factory=set)
    relations: set[Relation] = field(default_factory=set)


class RelationGraph:
    """Identity, non-identity and scene-succession relations."""

    def __init__(self) -> None:
        self.relations: list[Relation] = []
        self._seen: set[Relation] = set()
        self._identity: dict[str, list[str]] = {}
        self._non_identity: dict[str, list[str]] = {}
        self._succ: dict[str, list[str]] = {}

    def _add(self, rel: Relation) -> bool:
        if rel in self._seen:
            return False
        self._seen.add(rel)
        self.relations.append(rel)
        return True

    def add_identity(self, kind: RelationKind, a: str, b: str) -> None:
        if kind not in IDENTITY_KINDS:
            raise ModelError(f"{kind} is not an identity kind")
        if a == b:
            raise ModelError("identity relation needs two distinct instances")
        if self._add(Relation(kind, a, b)) and b not in self._identity.get(a, ()):
            self._identity.setdefault(a, []).append(b)
            self._identity.setdefault(b, []).append(a)

    def add_non_identity(self, a: str, b: str) -> None:
        if a == b:
            raise ModelError("an instance cannot be non-identical to itself")
        x, y = sorted((a, b))
        if self._add(Relation(RelationKind.NON_IDENTITY, x, y)):
            self._non_identity.setdefault(a, []).append(b)
            self._non_identity.setdefault(b, []).append(a)

    def add_scene_succession(self, a: str, b: str) -> None:
        if a == b or b in self.successors_closure(a) or a in self.successors_closure(b):
            raise ModelError(f"scene succession {a} -> {b} would create a cycle")
        if self._add(Relation(RelationKind.SCENE_SUCCESSION, a, b)):
            self._succ.setdefault(a, []).append(b)

    def successors_closure(self, scene: str) -> set[str]:
        out: set[str] = set()
        stack = [scene]
        while stack:
            for nxt in self._succ.get(stack.pop(), ()):
                if nxt not in out:
                    out.add(nxt)
                    stack.append(nxt)
        return out

    def same_story_line(self, s1: str, s2: str) -> bool:
        return s1 == s2 or s2 in self.successors_closure(s1) or s1 in self.successors_closure(s2)

    def identical(self, inst: str) -> list[str]:
        return list(self._identity.get(inst, ()))

    def non_identical(self, inst: str) -> list[str]:
        return list(self._non_identity.get(inst, ()))

    def of_kind(self, kind: RelationKind) -> Iterable[Relation]:
        return (r for r in self.relations if r.kind == kind)
