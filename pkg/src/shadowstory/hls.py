"""Headless shadows: extrapolating shadows into VI templates.

Pipeline: every focus VI and each memory VI in its shadow (the root) yields
shadow VI relatives (SVRs) along the memory links; each SVR is interpreted
into concrete templates over focus instances (SVRIs) by reverse shadowing;
compatible SVRIs are clustered into headless shadows whose support is scored
per purpose.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .memory import LinkKind, MemoryStore
from .model import ConceptBase, Overlay, VerbInstance, VIKind


class Purpose(str, enum.Enum):
    CONTINUATION = "CONTINUATION"
    MISSING_ACTION = "MISSING_ACTION"


DEFAULT_COEFFICIENTS = {
    Purpose.CONTINUATION: {
        LinkKind.SUCCESSOR: 1.0,
        LinkKind.CONTEXT_IMPLICATION: 0.5,
        LinkKind.ELABORATION: 0.5,
        LinkKind.ANSWER: 1.0,
        LinkKind.PREDECESSOR: -0.5,
        LinkKind.IN_SHADOW: -1.0,
        LinkKind.QUESTION: 0.0,
        LinkKind.SUMMARY: 0.0,
        LinkKind.CONTEXT: 0.0,
    },
    Purpose.MISSING_ACTION: {
        LinkKind.PREDECESSOR: 1.0,
        LinkKind.CONTEXT_IMPLICATION: 0.25,
        LinkKind.IN_SHADOW: -1.0,
        LinkKind.SUCCESSOR: -0.5,
        LinkKind.ELABORATION: 0.0,
        LinkKind.ANSWER: 0.0,
        LinkKind.QUESTION: 0.0,
        LinkKind.SUMMARY: 0.0,
        LinkKind.CONTEXT: 0.0,
    },
}

SVR_KINDS = (
    LinkKind.PREDECESSOR,
    LinkKind.SUCCESSOR,
    LinkKind.SUMMARY,
    LinkKind.ELABORATION,
    LinkKind.ANSWER,
    LinkKind.QUESTION,
    LinkKind.CONTEXT,
    LinkKind.CONTEXT_IMPLICATION,
)


@dataclass
class HLSParams:
    theta_svr: float = 0.02
    theta_verb: float = 0.8
    theta_new: float = 0.5
    theta_match: float = 0.6
    nu: float = 0.1
    max_interpretations: int = 8
    coefficients: dict = field(
        default_factory=lambda: {p: dict(c) for p, c in DEFAULT_COEFFICIENTS.items()}
    )


@dataclass(frozen=True)
class Binding:
    """A template part: an existing focus instance or a NEW one with attributes."""

    focus: str | None = None
    new: Overlay | None = None

    def key(self) -> str:
        return self.focus if self.focus is not None else f"NEW{self.new!r}"

    def to_json(self):
        if self.focus is not None:
            return {"focus": self.focus}
        return {"new": self.new.to_json()}


@dataclass(frozen=True)
class Template:
    kind: VIKind
    verb: Overlay
    subject: Binding
    obj: Binding | Overlay | None = None
    quote_scene: str | None = None

    def key(self) -> str:
        obj = self.obj.key() if isinstance(self.obj, Binding) else repr(self.obj)
        return f"{self.kind.value}|{self.verb!r}|{self.subject.key()}|{obj}|{self.quote_scene}"

    def bindings(self) -> tuple[Binding, ...]:
        if isinstance(self.obj, Binding):
            return (self.subject, self.obj)
        return (self.subject,)

    def to_json(self) -> dict:
        obj = self.obj
        if isinstance(obj, Binding):
            obj = obj.to_json()
        elif isinstance(obj, Overlay):
            obj = {"adjective": obj.to_json()}
        return {
            "kind": self.kind.value,
            "verb": self.verb.to_json(),
            "subject": self.subject.to_json(),
            "obj": obj,
            "quote_scene": self.quote_scene,
        }


@dataclass(frozen=True)
class SVR:
    focus_vi: str
    vi_root: str
    vi_source: str
    type: LinkKind
    strength: float

    def to_json(self) -> dict:
        return {
            "focus_vi": self.focus_vi,
            "vi_root": self.vi_root,
            "vi_source": self.vi_source,
            "type": self.type.value,
            "strength": self.strength,
        }


@dataclass(frozen=True)
class SVRI:
    svr: SVR
    template: Template
    weight: float

    def to_json(self) -> dict:
        return {"svr": self.svr.to_json(), "template": self.template.to_json(),
                "weight": self.weight}


@dataclass
class HeadlessShadow:
    template: Template
    svris: list[SVRI] = field(default_factory=list)
    support: dict[Purpose, float] = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict, repr=False)

    def source_contributions(self) -> dict[str, float]:
        """Net continuation contribution of each memory VI behind this HLS."""
        coefs = self.coefficients.get(Purpose.CONTINUATION, DEFAULT_COEFFICIENTS[Purpose.CONTINUATION])
        out: dict[str, float] = {}
        for s in self.svris:
            out[s.svr.vi_source] = out.get(s.svr.vi_source, 0.0) + s.weight * coefs[s.svr.type]
        return out

    def to_json(self) -> dict:
        return {
            "template": self.template.to_json(),
            "support": {p.value: v for p, v in sorted(self.support.items())},
            "svris": [s.to_json() for s in self.svris],
        }


def _weighted_verb(members: list[tuple[Overlay, float]]) -> Overlay:
    total = sum(w for _v, w in members)
    acc: dict[str, float] = {}
    for verb, w in members:
        for atom, a in verb.items():
            acc[atom] = acc.get(atom, 0.0) + a * w / total
    return Overlay(members[0][0].kind, {a: min(1.0, x) for a, x in acc.items()})


class HLSEngine:
    def __init__(self, memory: MemoryStore, shadows, focus, base: ConceptBase,
                 params: HLSParams | None = None) -> None:
        self.memory = memory
        self.shadows = shadows
        self.focus = focus
        self.base = base
        self.params = params or HLSParams()
        self._cache: list[HeadlessShadow] | None = None

    def invalidate(self) -> None:
        self._cache = None

    def _sim(self, a: Overlay, b: Overlay) -> float:
        return self.shadows._sim(a, b) if a.kind == b.kind else 0.0

    # ---- SVRs ---------------------------------------------------------------

    def compute_svrs(self) -> list[SVR]:
        out: list[SVR] = []
        fld = self.shadows.vi
        theta = self.params.theta_svr
        mem = self.memory
        for r, head in enumerate(fld.heads):
            row = fld.W[r, : fld.ncols]
            cols = np.flatnonzero(row >= theta)
            order = sorted(cols, key=lambda c: (-row[c], c))
            for c in order:
                w = float(row[c])
                root = mem.vis[c].id
                out.append(SVR(head, root, root, LinkKind.IN_SHADOW, w))
                for kind in SVR_KINDS:
                    for src, strength in mem.neighbors(root, kind):
                        out.append(SVR(head, root, src, kind, w * strength))
        return out

    # ---- SVRIs --------------------------------------------------------------

    def _slot_candidates(self, src_inst: str, root: VerbInstance,
                         f: VerbInstance) -> list[tuple[Binding, float]]:
        root_parts = root.instance_parts()
        f_parts = f.instance_parts()
        for j, rp in enumerate(root_parts):
            if rp == src_inst and j < len(f_parts) and f_parts[j] in self.focus.instance_weights:
                return [(Binding(focus=f_parts[j]), 1.0)]
        if src_inst in self.focus.instance_weights:
            return [(Binding(focus=src_inst), 1.0)]
        cands = [
            (Binding(focus=h), w)
            for h, w in self.shadows.reverse_shadow(src_inst)
            if self.focus.items[h].scene == f.scene
        ]
        attrs = (self.memory.instance(src_inst).attributes
                 if src_inst in self.memory.inst_col else Overlay.concept())
        if self.params.nu > 0:
            cands.append((Binding(new=attrs), self.params.nu))
        total = sum(w for _b, w in cands)
        if total <= 0:
            return []
        cands = [(b, w / total) for b, w in cands]
        cands.sort(key=lambda bw: (-bw[1], bw[0].key()))
        return cands

    def interpret_svr(self, svr: SVR) -> list[SVRI]:
        mem = self.memory
        source = mem.vi(svr.vi_source)
        root = mem.vi(svr.vi_root)
        f = self.focus.items.get(svr.focus_vi)
        if f is None or source.kind == VIKind.ACTION_IS_ADVERB:
            return []
        slots = [self._slot_candidates(p, root, f) for p in source.instance_parts()]
        if any(not s for s in slots):
            return []
        quote_scene = None
        if source.kind == VIKind.QUOTE:
            if (root.kind == VIKind.QUOTE and f.kind == VIKind.QUOTE
                    and root.quote_scene == source.quote_scene):
                quote_scene = f.quote_scene
        combos = []
        for combo in itertools.product(*slots):
            weight = svr.strength
            for _b, w in combo:
                weight *= w
            if weight <= 0:
                continue
            subject = combo[0][0]
            if source.kind == VIKind.SVO:
                obj = combo[1][0]
                if subject.focus is not None and subject.focus == obj.focus:
                    continue
            elif source.kind == VIKind.S_ISA_ADJ:
                obj = source.obj
            else:
                obj = None
            t = Template(source.kind, source.verb, subject, obj, quote_scene)
            combos.append(SVRI(svr, t, min(1.0, weight)))
        combos.sort(key=lambda s: (-s.weight, s.template.key()))
        return combos[: self.params.max_interpretations]

    # ---- clustering and scoring -------------------------------------------

    def _compatible(self, a: Template, b: Template, verb_threshold: float) -> bool:
        if a.kind != b.kind or a.quote_scene != b.quote_scene:
            return False
        for x, y in zip(a.bindings(), b.bindings()):
            if x.focus != y.focus:
                return False
            if x.focus is None and self._sim(x.new, y.new) < self.params.theta_new:
                return False
        if isinstance(a.obj, Overlay) and isinstance(b.obj, Overlay):
            if a.obj != b.obj and self._sim(a.obj, b.obj) < self.params.theta_new:
                return False
        return self._sim(a.verb, b.verb) >= verb_threshold

    def cluster_into_hls(self, svris: list[SVRI]) -> list[HeadlessShadow]:
        ordered = sorted(svris, key=lambda s: (-s.weight, s.template.key()))
        out: list[HeadlessShadow] = []
        members: list[list[tuple[Overlay, float]]] = []
        for s in ordered:
            for h, mem in zip(out, members):
                if self._compatible(h.template, s.template, self.params.theta_verb):
                    h.svris.append(s)
                    mem.append((s.template.verb, s.weight))
                    t = h.template
                    h.template = Template(t.kind, _weighted_verb(mem), t.subject, t.obj,
                                          t.quote_scene)
                    break
            else:
                out.append(HeadlessShadow(s.template, [s], coefficients=self.params.coefficients))
                members.append([(s.template.verb, s.weight)])
        for h in out:
            for purpose in Purpose:
                h.support[purpose] = self.score_hls(h, purpose)
        return out

    def score_hls(self, hls: HeadlessShadow, purpose: Purpose) -> float:
        coefs = self.params.coefficients[purpose]
        total = sum(s.weight * coefs[s.svr.type] for s in hls.svris)
        return max(0.0, total)

    # ---- queries ----------------------------------------------------------

    def headless_shadows(self) -> list[HeadlessShadow]:
        if self._cache is None:
            svris: list[SVRI] = []
            for svr in self.compute_svrs():
                svris.extend(self.interpret_svr(svr))
            self._cache = self.cluster_into_hls(svris)
        return self._cache

    def ranked(self, purpose: Purpose) -> list[HeadlessShadow]:
        pool = [h for h in self.headless_shadows() if h.support[purpose] > 0]
        pool.sort(key=lambda h: (-h.support[purpose], h.template.key()))
        return pool

    def predict(self, purpose: Purpose, k: int) -> list[tuple[Template, float]]:
        return [(h.template, h.support[purpose]) for h in self.ranked(purpose)[:k]]

    def match_incoming(self, vi: VerbInstance, fresh: set[str] = frozenset()
                       ) -> tuple[HeadlessShadow | None, float]:
        """Best continuation HLS predicting ``vi``; ``fresh`` are instances the
        statement itself created, which may fill NEW template parts."""
        parts = vi.instance_parts()
        best, best_key = None, None
        for h in self.ranked(Purpose.CONTINUATION):
            t = h.template
            if t.kind != vi.kind or len(t.bindings()) != len(parts):
                continue
            if t.quote_scene is not None and t.quote_scene != vi.quote_scene:
                continue
            ok = True
            for b, p in zip(t.bindings(), parts):
                if b.focus is not None:
                    ok = b.focus == p
                else:
                    ok = (p in fresh and p in self.focus.items
                          and self._sim(b.new, self.focus.items[p].attributes)
                          >= self.params.theta_new)
                if not ok:
                    break
            if not ok:
                continue
            if isinstance(t.obj, Overlay) and self._sim(t.obj, vi.obj) < self.params.theta_new:
                continue
            if self._sim(t.verb, vi.verb) < self.params.theta_match:
                continue
            key = (-h.support[Purpose.CONTINUATION], t.key())
            if best_key is None or key < best_key:
                best, best_key = h, key
        if best is None:
            return None, 0.0
        return best, best.support[Purpose.CONTINUATION]

    def supports(self) -> dict[str, float]:
        return {h.template.key(): h.support[Purpose.CONTINUATION] + h.support[Purpose.MISSING_ACTION]
                for h in self.headless_shadows()}

    def dump(self) -> dict:
        hls = self.headless_shadows()
        return {
            "svrs": [s.to_json() for s in self.compute_svrs()],
            "hls": [h.to_json() for h in hls],
        }


def surprise(shadows_before: dict[str, np.ndarray], shadows_after: dict[str, np.ndarray],
             hls_before: dict[str, float], hls_after: dict[str, float]) -> float:
    """Absolute volume of change in shadow participations and HLS supports.

    Shadow rows are keyed by head; a row present on one side only counts
    with its full mass.  Rows may differ in length when memory grew.
    """
    total = 0.0
    for head in sorted(set(shadows_before) | set(shadows_after)):
        a = shadows_before.get(head)
        b = shadows_after.get(head)
        if a is None:
            total += float(np.abs(b).sum())
        elif b is None:
            total += float(np.abs(a).sum())
        else:
            n = max(len(a), len(b))
            pa = np.zeros(n)
            pb = np.zeros(n)
            pa[: len(a)] = a
            pb[: len(b)] = b
            total += float(np.abs(pb - pa).sum())
    for key in sorted(set(hls_before) | set(hls_after)):
        total += abs(hls_after.get(key, 0.0) - hls_before.get(key, 0.0))
    return total
