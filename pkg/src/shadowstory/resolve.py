"""Resolve parsed statements against the focus into instances and VIs.

Resolution is staged: nothing in the world is touched until the caller
applies the returned :class:`Resolution`, so a failing statement leaves the
engine exactly as it was.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .domain import DomainError, DomainLibrary, UnknownWordError
from .model import (
    CONCEPT,
    VERB,
    Instance,
    Overlay,
    RelationKind,
    VerbInstance,
    VIKind,
    attribute_match,
    overlay_merge,
)
from .parser import PartForm, PartRef, Statement


class ResolutionError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass
class Resolution:
    instances: list[Instance] = field(default_factory=list)
    scenes: list[tuple[str, str]] = field(default_factory=list)
    relations: list[tuple[RelationKind, str, str]] = field(default_factory=list)
    vis: list[VerbInstance] = field(default_factory=list)
    attribute_additions: dict[str, Overlay] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)
    scene_seq: dict[str, int] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)


class Resolver:
    """Stages the effects of one statement against a world snapshot.

    ``world`` must provide ``focus``, ``lib``, ``relations``, ``labels``
    (scene label -> id), ``counters``, ``scene_seq``, ``theta_ref`` and
    ``current_scene``.
    """

    def __init__(self, world) -> None:
        self.world = world
        self.lib: DomainLibrary = world.lib
        self.res = Resolution(
            counters=dict(world.counters),
            scene_seq=dict(world.scene_seq),
            labels=dict(world.labels),
        )
        self._new: dict[str, Instance] = {}
        self._links: list[tuple[str, str]] = []

    # ---- ids and scratch state ----------------------------------------------

    def _next(self, prefix: str) -> str:
        n = self.res.counters.get(prefix, 0) + 1
        self.res.counters[prefix] = n
        return f"{prefix}{n}"

    def _scene_for_label(self, label: str) -> str:
        sid = self.res.labels.get(label)
        if sid is None:
            sid = self._next("s")
            self.res.labels[label] = sid
            self.res.scenes.append((sid, label))
        return sid

    def _create(self, scene: str, attrs: Overlay) -> Instance:
        inst = Instance(self._next("i"), scene, attrs, self.world.focus.clock)
        self._new[inst.id] = inst
        self.res.instances.append(inst)
        return inst

    def _candidates(self, scene: str) -> list[tuple[Instance, float]]:
        focus = self.world.focus
        out = [(inst, focus.instance_weights[inst.id]) for inst in focus.instances()
               if inst.scene == scene]
        out += [(inst, 1.0) for inst in self._new.values() if inst.scene == scene]
        return out

    def _attrs(self, inst: Instance) -> Overlay:
        extra = self.res.attribute_additions.get(inst.id)
        if extra is None:
            return inst.attributes
        return overlay_merge(inst.attributes, extra)

    def _identical(self, inst_id: str) -> set[str]:
        out = set(self.world.relations.identical(inst_id))
        for kind, a, b in self.res.relations:
            if kind in (RelationKind.IDENTITY_FICTIONAL, RelationKind.IDENTITY_SOMATIC):
                if a == inst_id:
                    out.add(b)
                elif b == inst_id:
                    out.add(a)
        return out

    def _concept(self, words: tuple[str, ...], ref: PartRef) -> Overlay:
        try:
            kind, ov = self.lib.lookup_phrase(list(words))
        except UnknownWordError as exc:
            raise ResolutionError(f"unknown word {exc.word!r}", ref.line, ref.col) from None
        except DomainError as exc:
            raise ResolutionError(str(exc), ref.line, ref.col) from None
        if kind != CONCEPT:
            raise ResolutionError(f"{' '.join(words)!r} is not a noun/adjective", ref.line, ref.col)
        return ov

    def _best(self, scene: str, query: Overlay, restrict: set[str] | None = None):
        theta = self.world.theta_ref
        best, best_key = None, None
        for inst, w in self._candidates(scene):
            if restrict is not None and inst.id not in restrict:
                continue
            score = attribute_match(self._attrs(inst), query, self.lib.base) * w
            if score < theta:
                continue
            key = (score, inst.created_at, int(inst.id[1:]))
            if best_key is None or key > best_key:
                best, best_key = inst, key
        return best

    # ---- parts ------------------------------------------------------------

    def part(self, ref: PartRef, scene: str, speaker: Instance | None,
             outer_scene: str | None) -> Instance:
        form = ref.form
        if form == PartForm.INDEFINITE:
            return self._create(scene, self._concept(ref.words, ref))
        if form == PartForm.TEXT_LITERAL:
            return self._create(scene, Overlay.concept(f'"text:{ref.name}"'))
        if form == PartForm.PRONOUN_I:
            if speaker is None:
                return self._named("Me", scene, outer_scene, ref)
            linked = self._identical(speaker.id)
            for inst, _w in self._candidates(scene):
                if inst.id in linked:
                    return inst
            me = self._create(scene, self._attrs(speaker))
            self.res.relations.append((RelationKind.IDENTITY_FICTIONAL, speaker.id, me.id))
            return me
        if form == PartForm.PROPER:
            if ref.name.lower() == "you":
                raise ResolutionError("the pronoun 'you' is not supported", ref.line, ref.col)
            return self._named(ref.name, scene, outer_scene, ref)
        if form == PartForm.REL_CHAIN:
            return self._chain(ref, scene, speaker, outer_scene)
        # DEFINITE
        if ref.words in (("you",), ("You",)):
            raise ResolutionError("the pronoun 'you' is not supported", ref.line, ref.col)
        query = self._concept(ref.words, ref)
        found = self._best(scene, query)
        if found is not None:
            return found
        if ref.article is None:
            return self._create(scene, query)
        if outer_scene is not None:
            return self._project(query, scene, outer_scene)
        raise ResolutionError(f"cannot resolve 'the {' '.join(ref.words)}'", ref.line, ref.col)

    def _named(self, name: str, scene: str, outer_scene: str | None, ref: PartRef) -> Instance:
        query = Overlay.concept(f'"{name}"')
        found = self._best(scene, query)
        if found is not None:
            return found
        if outer_scene is not None:
            return self._project(query, scene, outer_scene)
        return self._create(scene, query)

    def _project(self, query: Overlay, scene: str, outer_scene: str) -> Instance:
        """Create the quote-scene counterpart of an instance of the inquit scene."""
        outer = self._best(outer_scene, query)
        if outer is None:
            return self._create(scene, query)
        inst = self._create(scene, self._attrs(outer))
        self.res.relations.append((RelationKind.IDENTITY_FICTIONAL, outer.id, inst.id))
        return inst

    def _chain(self, ref: PartRef, scene: str, speaker, outer_scene) -> Instance:
        tail = self.part(ref.tail, scene, speaker, outer_scene)
        rel_verb = self._verb((ref.relation,), ref)
        head_ref = ref.head
        existing = self._related_to(tail.id, rel_verb)
        if head_ref.form in (PartForm.DEFINITE, PartForm.PROPER) and existing:
            query = (self._concept(head_ref.words, head_ref) if head_ref.form == PartForm.DEFINITE
                     else Overlay.concept(f'"{head_ref.name}"'))
            found = self._best(scene, query, restrict=existing)
            if found is not None:
                return found
        if head_ref.form == PartForm.DEFINITE:
            # a chain head names a part of the tail, so a miss creates it
            head = self._create(scene, self._concept(head_ref.words, head_ref))
        else:
            head = self.part(head_ref, scene, speaker, outer_scene)
        self._emit(VIKind.SVO, rel_verb, head.id, scene, obj=tail.id, relation=True)
        return head

    def _related_to(self, tail: str, verb: Overlay) -> set[str]:
        out = set()
        for vi in list(self.world.focus.relation_vis()) + self.res.vis:
            if vi.kind == VIKind.SVO and vi.obj == tail and vi.verb == verb:
                out.add(vi.subject)
        return out

    # ---- verbs and VIs ------------------------------------------------------

    def _verb(self, words: tuple[str, ...], ref) -> Overlay:
        try:
            kind, ov = self.lib.lookup_phrase(list(words))
        except UnknownWordError as exc:
            raise ResolutionError(f"unknown word {exc.word!r}", ref.line, ref.col) from None
        except DomainError as exc:
            raise ResolutionError(str(exc), ref.line, ref.col) from None
        if kind != VERB:
            raise ResolutionError(f"{' '.join(words)!r} is not a verb", ref.line, ref.col)
        return ov

    def _emit(self, kind: VIKind, verb: Overlay, subject: str, scene: str, *,
              obj=None, quote_scene=None, relation=False, wh=False) -> VerbInstance:
        seq = -1
        if not relation:
            seq = self.res.scene_seq.get(scene, 0)
            self.res.scene_seq[scene] = seq + 1
        vi = VerbInstance(
            id=self._next("v"), kind=kind, verb=verb, subject=subject, scene=scene,
            obj=obj, quote_scene=quote_scene, created_at=self.world.focus.clock,
            seq=seq, is_relation=relation, wh=wh,
        )
        self.res.vis.append(vi)
        return vi

    def clause(self, st: Statement, scene: str, speaker: Instance | None = None,
               outer_scene: str | None = None) -> VerbInstance:
        verb = self._verb(st.verb.words, st)
        lib = self.lib
        is_quote = lib.quote_verb(verb)
        if is_quote != (st.quoted is not None):
            msg = ("quote verb without a quoted clause" if is_quote
                   else "quoted clause needs a quote verb (says/asks)")
            raise ResolutionError(msg, st.line, st.col)
        if st.verb.scene is not None and not is_quote:
            raise ResolutionError("only quote verbs take a scene designator", st.line, st.col)

        subject = self.part(st.subject, scene, speaker, outer_scene)

        if is_quote:
            if st.verb.scene is None:
                raise ResolutionError("quote without a quote scene", st.line, st.col)
            if st.obj is not None:
                raise ResolutionError("a quote statement takes no object", st.line, st.col)
            qscene = self._scene_for_label(st.verb.scene)
            inner = self.clause(st.quoted, qscene, speaker=subject, outer_scene=scene)
            return self._emit(VIKind.QUOTE, verb, subject.id, scene, obj=inner.id,
                              quote_scene=qscene, wh=st.quoted.has_wh())

        if lib.is_metaverb(verb, "is-a"):
            if st.obj is None:
                raise ResolutionError("is-a needs an object", st.line, st.col)
            if st.obj.form in (PartForm.DEFINITE, PartForm.INDEFINITE):
                adj = self._concept(st.obj.words, st.obj)
            elif st.obj.form == PartForm.PROPER:
                adj = Overlay.concept(f'"{st.obj.name}"')
            else:
                raise ResolutionError("is-a object must be an adjective or name", st.line, st.col)
            if not st.verb.wh:
                prev = self.res.attribute_additions.get(subject.id)
                self.res.attribute_additions[subject.id] = (
                    adj if prev is None else overlay_merge(prev, adj))
            return self._emit(VIKind.S_ISA_ADJ, verb, subject.id, scene, obj=adj,
                              relation=True, wh=st.verb.wh)

        if st.obj is None:
            return self._emit(VIKind.SV, verb, subject.id, scene, wh=st.verb.wh)
        obj = self.part(st.obj, scene, speaker, outer_scene)
        vi = self._emit(VIKind.SVO, verb, subject.id, scene, obj=obj.id, wh=st.verb.wh)
        if lib.is_metaverb(verb, "changes-into"):
            self.res.relations.append((RelationKind.IDENTITY_SOMATIC, subject.id, obj.id))
        return vi


def resolve_statement(st: Statement, world) -> Resolution:
    scene = world.current_scene
    if scene is None:
        raise ResolutionError("no current scene; use $new-scene first", st.line, st.col)
    r = Resolver(world)
    r.clause(st, scene)
    return r.res
