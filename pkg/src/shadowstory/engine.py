"""The story engine: one session of focus, memory, shadows and HLSs."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainLibrary
from .focus import Focus, FocusParams
from .hls import HLSEngine, HLSParams, HeadlessShadow, Purpose, Template, surprise
from .memory import LinkKind, MemoryStore
from .model import (
    Instance,
    Overlay,
    RelationGraph,
    RelationKind,
    VerbInstance,
    VIKind,
    attribute_match,
)
from .parser import Directive, Statement, XapiSyntaxError, parse_program
from .resolve import Resolution, ResolutionError, resolve_statement
from .shadows import ShadowEngine, TickParams, TickReport


class EngineError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass
class EngineConfig:
    tick: TickParams = field(default_factory=TickParams)
    focus: FocusParams = field(default_factory=FocusParams)
    hls: HLSParams = field(default_factory=HLSParams)
    theta_ref: float = 0.2
    vi_dt: float = 1.0
    relation_dt: float = 0.0
    succession_window: int = 5
    top_k: int = 3

    def set(self, key: str, value: str) -> None:
        """Set ``key`` (a field of this config or of one of its parameter groups)."""
        for target in (self, self.tick, self.focus, self.hls):
            names = {f.name: f for f in dataclasses.fields(target)}
            if key in names and key not in ("tick", "focus", "hls", "coefficients"):
                current = getattr(target, key)
                try:
                    setattr(target, key, type(current)(value))
                except ValueError:
                    raise EngineError(f"bad value for {key}: {value!r}") from None
                if target is self.tick:
                    self.tick.__post_init__()
                return
        raise EngineError(f"unknown parameter {key!r}")


@dataclass
class VIRecord:
    """What the engine observed when incorporating one VI."""

    vi: VerbInstance
    expectedness: float
    surprise: float
    matched: str | None
    tick: TickReport

    def to_json(self, continuations, missing) -> dict:
        return {
            "vi": self.vi.to_json(),
            "expectedness": round(self.expectedness, 12),
            "surprise": round(self.surprise, 12),
            "matched": self.matched,
            "continuations": continuations,
            "missing": missing,
        }


_ID_RE = re.compile(r"^([a-z]+)(\d+)$")


class Engine:
    def __init__(self, lib: DomainLibrary, config: EngineConfig | None = None,
                 memory: MemoryStore | None = None) -> None:
        self.lib = lib
        self.config = config or EngineConfig()
        self.theta_ref = self.config.theta_ref
        self.memory = memory or MemoryStore(self.config.succession_window)
        self.relations = RelationGraph()
        self.scenes: dict[str, str] = {}
        self.labels: dict[str, str] = {}
        self.counters: dict[str, int] = {}
        self.scene_seq: dict[str, int] = {}
        self.current_scene: str | None = None
        self.focus = Focus(self.memory, self.config.focus)
        self.shadows = ShadowEngine(self.memory, self.focus.items, self.relations,
                                    lib.base, self.config.tick)
        self.hls = HLSEngine(self.memory, self.shadows, self.focus, lib.base, self.config.hls)
        self.focus.on_expel.append(self._on_expel)
        self.records: list[VIRecord] = []
        self.last_surprise = 0.0
        self._open_questions: dict[str, tuple[str, str]] = {}
        self._summary_span: list[str] | None = None
        self._summary_pending: list[str] | None = None
        if memory is not None:
            self._advance_counters()

    # ---- bookkeeping ------------------------------------------------------

    def _on_expel(self, item_id: str) -> None:
        self.shadows.remove(item_id)
        self.hls.invalidate()

    def _advance_counters(self) -> None:
        ids = list(self.memory.order)
        scenes = [i.scene for i in self.memory.instances] + [v.scene for v in self.memory.vis]
        scenes += [v.quote_scene for v in self.memory.vis if v.quote_scene]
        for item_id in ids + scenes:
            m = _ID_RE.match(item_id)
            if m:
                prefix, n = m.group(1), int(m.group(2))
                self.counters[prefix] = max(self.counters.get(prefix, 0), n)
        for item_id in ids:
            self.focus.tombstones.add(item_id)

    def carry_over(self, prior: "Engine") -> None:
        """Keep ids used by ``prior`` retired here, so none of them can come back."""
        for prefix, n in prior.counters.items():
            self.counters[prefix] = max(self.counters.get(prefix, 0), n)
        self.focus.tombstones |= prior.focus.tombstones
        self.focus.tombstones |= prior.focus.items.keys()

    @property
    def clock(self) -> float:
        return self.focus.clock

    # ---- input ------------------------------------------------------------

    def execute(self, src: str) -> list[VIRecord]:
        """Parse ``src`` fully, then run each statement and directive in order."""
        program = parse_program(src)
        out: list[VIRecord] = []
        for item in program:
            if isinstance(item, Directive):
                self.directive(item)
            else:
                out.extend(self.statement(item))
        return out

    def directive(self, d: Directive) -> None:
        name, args = d.name, d.args
        if name == "new-scene":
            self._want_args(d, 1)
            label = args[0]
            if label in self.labels:
                raise EngineError(f"scene {label!r} already exists", d.line, d.col)
            self.current_scene = self._new_scene(label)
        elif name == "set-scene":
            self._want_args(d, 1)
            if args[0] not in self.labels:
                raise EngineError(f"unknown scene {args[0]!r}", d.line, d.col)
            self.current_scene = self.labels[args[0]]
        elif name == "link-scenes":
            if len(args) != 3 or args[1] != "succession":
                raise EngineError("usage: $link-scenes \"A\" succession \"B\"", d.line, d.col)
            a, b = (self.labels.get(x) for x in (args[0], args[2]))
            if a is None or b is None:
                raise EngineError("unknown scene in $link-scenes", d.line, d.col)
            try:
                self.relations.add_scene_succession(a, b)
            except Exception as exc:
                raise EngineError(str(exc), d.line, d.col) from None
        elif name == "summary-begin":
            self._want_args(d, 0)
            if self._summary_span is not None:
                raise EngineError("nested $summary-begin", d.line, d.col)
            self._summary_span = []
        elif name == "summary-end":
            self._want_args(d, 0)
            if self._summary_span is None:
                raise EngineError("$summary-end without $summary-begin", d.line, d.col)
            self._summary_pending = self._summary_span
            self._summary_span = None
        elif name == "non-identical":
            self._want_args(d, 2)
            a, b = (self._lookup_ref(x, d) for x in args)
            if a.id == b.id:
                raise EngineError("an instance cannot be non-identical to itself", d.line, d.col)
            if not self.relations.same_story_line(a.scene, b.scene):
                raise EngineError("non-identical instances must share a story line", d.line, d.col)
            self.relations.add_non_identity(a.id, b.id)
        else:
            raise EngineError(f"unknown directive ${name}", d.line, d.col)

    def _want_args(self, d: Directive, n: int) -> None:
        if len(d.args) != n:
            raise EngineError(f"${d.name} takes {n} argument(s)", d.line, d.col)

    def _new_scene(self, label: str) -> str:
        n = self.counters.get("s", 0) + 1
        self.counters["s"] = n
        sid = f"s{n}"
        self.labels[label] = sid
        self.scenes[sid] = label
        return sid

    def _lookup_ref(self, text: str, d: Directive) -> Instance:
        if self.current_scene is None:
            raise EngineError("no current scene", d.line, d.col)
        queries = [Overlay.concept(f'"{text}"')]
        try:
            queries.append(self.lib.lookup_phrase(text.split())[1])
        except Exception:
            pass
        best, best_key = None, None
        for inst in self.focus.instances():
            if inst.scene != self.current_scene:
                continue
            for q in queries:
                if q.kind != inst.attributes.kind:
                    continue
                s = attribute_match(inst.attributes, q, self.lib.base) * self.focus.weight(inst.id)
                key = (s, inst.created_at, int(inst.id[1:]))
                if s >= self.theta_ref and (best_key is None or key > best_key):
                    best, best_key = inst, key
        if best is None:
            raise EngineError(f"cannot resolve {text!r}", d.line, d.col)
        return best

    # ---- statements -------------------------------------------------------

    def resolve(self, st: Statement) -> Resolution:
        return resolve_statement(st, self)

    def statement(self, st: Statement) -> list[VIRecord]:
        res = self.resolve(st)
        return self.apply(res)

    def apply(self, res: Resolution) -> list[VIRecord]:
        self.counters = res.counters
        self.scene_seq = res.scene_seq
        for sid, label in res.scenes:
            self.labels[label] = sid
            self.scenes[sid] = label
        self.labels.update(res.labels)
        for kind, a, b in res.relations:
            self.relations.add_identity(kind, a, b)
        fresh = {inst.id for inst in res.instances}
        for inst in res.instances:
            self.focus.add_instance(inst)
            self.shadows.init_shadow_unexpected(inst.id)
        self.hls.invalidate()
        out = [self._incorporate(vi, res, fresh) for vi in res.vis]
        return out

    def _state(self) -> tuple[dict[str, np.ndarray], dict[str, float]]:
        self.shadows.sync()
        rows: dict[str, np.ndarray] = {}
        for fld, prefix in ((self.shadows.inst, "i:"), (self.shadows.vi, "v:")):
            live = fld.live()
            for r, head in enumerate(fld.heads):
                rows[prefix + head] = live[r].copy()
        return rows, dict(self.hls.supports())

    def _incorporate(self, vi: VerbInstance, res: Resolution, fresh: set[str]) -> VIRecord:
        before = self._state()
        hls, expectedness = self.hls.match_incoming(vi, fresh)
        for inst_id, extra in list(res.attribute_additions.items()):
            if vi.kind == VIKind.S_ISA_ADJ and vi.subject == inst_id and inst_id in self.focus:
                self.focus.items[inst_id].add_attributes(extra)
                del res.attribute_additions[inst_id]
        self.focus.insert_vi(vi, self.lib.impacts_of(vi.verb))
        if vi.id in self.focus:
            if hls is not None:
                self.shadows.init_shadow_from_hls(vi.id, hls)
            else:
                self.shadows.init_shadow_unexpected(vi.id)
        self._links_for(vi)
        self.hls.invalidate()
        tick = self.step(self.config.relation_dt if vi.is_relation else self.config.vi_dt)
        after = self._state()
        s = surprise(before[0], after[0], before[1], after[1])
        self.last_surprise = s
        rec = VIRecord(vi, expectedness, s, hls.template.key() if hls else None, tick)
        self.records.append(rec)
        return rec

    def _links_for(self, vi: VerbInstance) -> None:
        if vi.is_relation:
            return
        if self._summary_pending is not None:
            for member in self._summary_pending:
                self.memory.propose(member, LinkKind.SUMMARY, vi.id, 1.0)
            self._summary_pending = None
        elif self._summary_span is not None:
            self._summary_span.append(vi.id)
        if vi.kind == VIKind.QUOTE:
            q = self._open_questions.get(vi.quote_scene)
            if q is not None and q[1] != vi.subject:
                self.memory.propose(q[0], LinkKind.ANSWER, vi.id, 1.0)
                del self._open_questions[vi.quote_scene]
            if vi.wh:
                self._open_questions[vi.quote_scene] = (vi.id, vi.subject)

    def step(self, dt: float) -> TickReport:
        """Advance story time: focus decay (with expulsions), then the shadow tick."""
        if dt < 0:
            raise EngineError(f"negative time step {dt}")
        self.focus.decay_focus(dt)
        report = self.shadows.tick(dt)
        self.hls.invalidate()
        return report

    def flush(self) -> None:
        """End an episode: move all focus content to memory and forget scene labels."""
        self.focus.flush()
        self.labels = {}
        self.current_scene = None
        self._open_questions = {}
        self._summary_span = None
        self._summary_pending = None
        self.hls.invalidate()

    # ---- queries ----------------------------------------------------------

    def predict(self, purpose: Purpose = Purpose.CONTINUATION, k: int | None = None
                ) -> list[tuple[Template, float]]:
        return self.hls.predict(purpose, self.config.top_k if k is None else k)

    def describe(self, attrs: Overlay) -> str:
        """A short word for an attribute overlay: its name, else the best dictionary noun."""
        names = sorted(a.strip('"') for a in attrs.weights if a.startswith('"'))
        if names:
            return names[0]
        best, best_key = "thing", None
        for word, (kind, ov) in self.lib.dictionary.items():
            if kind != attrs.kind:
                continue
            key = (attribute_match(attrs, ov, self.lib.base), len(ov), word)
            if best_key is None or key[:2] > best_key[:2] or (key[:2] == best_key[:2] and word < best):
                best, best_key = word, key
        return best

    def render_template(self, t: Template) -> str:
        def name(inst_id: str) -> str:
            item = self.focus.items.get(inst_id)
            if item is None:
                return inst_id
            return f"{self.describe(item.attributes)}[{inst_id}]"

        def part(b) -> str:
            if b.focus is not None:
                return "the " + name(b.focus)
            return "a " + self.describe(b.new) + " (new)"

        verb = "+".join(sorted(t.verb.weights))
        parts = [part(t.subject), verb]
        if t.quote_scene is not None:
            parts[1] += f" in {self.scenes.get(t.quote_scene, t.quote_scene)!r} [x]"
        if isinstance(t.obj, Overlay):
            parts.append(self.describe(t.obj))
        elif t.obj is not None:
            parts.append(part(t.obj))
        return " / ".join(parts)

    def prediction_json(self, purpose: Purpose, k: int | None = None) -> list[dict]:
        out = []
        for t, score in self.predict(purpose, k):
            out.append({"template": t.to_json(), "text": self.render_template(t),
                        "score": round(score, 12)})
        return out

    def best_hls(self, purpose: Purpose) -> HeadlessShadow | None:
        ranked = self.hls.ranked(purpose)
        return ranked[0] if ranked else None

    def resolve_ref(self, text: str) -> str:
        """A focus id, or the best-matching focus instance for a word or name."""
        if text in self.focus:
            return text
        return self._lookup_ref(text, Directive("ref", (text,))).id

    # ---- persistence ------------------------------------------------------

    def save_memory(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.memory.to_json(), fh, sort_keys=True)

    @classmethod
    def with_memory_file(cls, lib: DomainLibrary, path: str,
                         config: EngineConfig | None = None) -> "Engine":
        with open(path, encoding="utf-8") as fh:
            mem = MemoryStore.from_json(json.load(fh))
        return cls(lib, config, memory=mem)


__all__ = [
    "Engine",
    "EngineConfig",
    "EngineError",
    "VIRecord",
    "XapiSyntaxError",
    "ResolutionError",
    "RelationKind",
]
