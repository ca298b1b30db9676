"""Focus: the weighted set of recent instances and VIs.

Items enter at weight 1, decay exponentially, are pushed out by same-subject
successors and leave for good once below the expulsion threshold.  Relation
VIs do not decay; they leave together with any of their instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .domain import Impact, ImpactEffect
from .memory import LinkKind, MemoryStore
from .model import Instance, VerbInstance, VIKind


class FocusError(Exception):
    pass


@dataclass
class FocusParams:
    lambda_f: float = 0.2
    gamma_push: float = 0.3
    theta_expel: float = 0.05
    consume_factor: float = 0.05


@dataclass
class InsertReport:
    vi: str
    expelled: list[str] = field(default_factory=list)
    pushed: list[str] = field(default_factory=list)
    consumed: list[str] = field(default_factory=list)


class Focus:
    def __init__(self, memory: MemoryStore, params: FocusParams | None = None) -> None:
        self.memory = memory
        self.params = params or FocusParams()
        self.instance_weights: dict[str, float] = {}
        self.vi_weights: dict[str, float] = {}
        self.salience_acc: dict[str, float] = {}
        self.items: dict[str, Instance | VerbInstance] = {}
        self.tombstones: set[str] = set()
        self.barred: set[str] = set()
        self.current_scene: str | None = None
        self.clock = 0.0
        self.on_expel: list[Callable[[str], None]] = []

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.instance_weights or item_id in self.vi_weights

    def weight(self, item_id: str) -> float:
        if item_id in self.instance_weights:
            return self.instance_weights[item_id]
        return self.vi_weights[item_id]

    def instances(self) -> list[Instance]:
        return [self.items[i] for i in self.instance_weights]

    def vis(self) -> list[VerbInstance]:
        return [self.items[v] for v in self.vi_weights]

    def relation_vis(self) -> list[VerbInstance]:
        return [vi for vi in self.vis() if vi.is_relation]

    def _guard(self, item_id: str) -> None:
        if item_id in self.tombstones:
            raise FocusError(f"{item_id} was expelled from the focus and can never return")

    def add_instance(self, inst: Instance) -> None:
        self._guard(inst.id)
        if inst.id in self:
            raise FocusError(f"{inst.id} already in focus")
        self.items[inst.id] = inst
        self.instance_weights[inst.id] = 1.0
        self.salience_acc[inst.id] = 0.0

    def _vi_dependencies(self, vi: VerbInstance) -> list[str]:
        deps = list(vi.instance_parts())
        if vi.kind == VIKind.QUOTE:
            deps.append(vi.obj)
        if vi.kind == VIKind.ACTION_IS_ADVERB:
            deps.append(vi.subject)
        return deps

    def insert_vi(self, vi: VerbInstance, impacts: Iterable[Impact] = ()) -> InsertReport:
        self._guard(vi.id)
        if vi.id in self:
            raise FocusError(f"{vi.id} already in focus")
        for dep in self._vi_dependencies(vi):
            self._guard(dep)
            if dep not in self:
                raise FocusError(f"{vi.id} references {dep}, which is not in focus")
        report = InsertReport(vi.id)
        impacts = list(impacts)

        if not vi.is_relation:
            for rel in self.relation_vis():
                self.memory.propose(vi.id, LinkKind.CONTEXT, rel.id, self.vi_weights[rel.id])
            boost = 1.0
            for imp in impacts:
                if imp.effect == ImpactEffect.PUSH_OUT_BOOST:
                    boost *= 1.0 - imp.magnitude
            for other_id, w in list(self.vi_weights.items()):
                other = self.items[other_id]
                if not other.is_relation and other.subject == vi.subject:
                    self.vi_weights[other_id] = w * self.params.gamma_push * boost
                    report.pushed.append(other_id)

        self.items[vi.id] = vi
        self.vi_weights[vi.id] = 1.0
        self.salience_acc[vi.id] = 0.0
        for inst in vi.instance_parts():
            if inst not in self.barred:
                self.instance_weights[inst] = 1.0

        for imp in impacts:
            if imp.effect == ImpactEffect.CONSUME_OBJECT and vi.kind == VIKind.SVO:
                target = vi.obj
            elif imp.effect == ImpactEffect.CONSUME_SUBJECT and vi.kind != VIKind.ACTION_IS_ADVERB:
                target = vi.subject
            else:
                continue
            factor = self.params.consume_factor * imp.magnitude + (1.0 - imp.magnitude)
            self.instance_weights[target] *= factor
            self.barred.add(target)
            report.consumed.append(target)

        report.expelled = self._expel_below_threshold()
        return report

    def decay_focus(self, dt: float) -> list[str]:
        if dt < 0:
            raise FocusError(f"negative time step {dt}")
        if dt == 0:
            return []
        lam = self.params.lambda_f
        factor = math.exp(-lam * dt)
        # exact integral of w*exp(-lam t) over [0, dt]
        integral = (1.0 - factor) / lam if lam > 0 else dt
        for weights, decays in ((self.instance_weights, None), (self.vi_weights, True)):
            for item_id, w in weights.items():
                if decays and self.items[item_id].is_relation:
                    self.salience_acc[item_id] += w * dt
                    continue
                self.salience_acc[item_id] += w * integral
                weights[item_id] = w * factor
        self.clock += dt
        return self._expel_below_threshold()

    def _expel_below_threshold(self) -> list[str]:
        theta = self.params.theta_expel
        doomed = [i for i, w in self.instance_weights.items() if w < theta]
        doomed += [v for v, w in self.vi_weights.items() if w < theta]
        out: list[str] = []
        for item_id in doomed:
            if item_id in self:
                out.extend(self.expel(item_id))
        return out

    def expel(self, item_id: str) -> list[str]:
        """Move ``item_id`` to memory; cascades to relation VIs that lose a part."""
        if item_id not in self:
            raise FocusError(f"{item_id} is not in focus")
        item = self.items.pop(item_id)
        self.instance_weights.pop(item_id, None)
        self.vi_weights.pop(item_id, None)
        salience = self.salience_acc.pop(item_id)
        self.barred.discard(item_id)
        self.tombstones.add(item_id)
        self.memory.record(item, salience)
        for cb in self.on_expel:
            cb(item_id)
        out = [item_id]
        if isinstance(item, Instance):
            for vi in self.relation_vis():
                if item_id in vi.instance_parts() and vi.id in self:
                    out.extend(self.expel(vi.id))
        return out

    def flush(self) -> list[str]:
        out: list[str] = []
        for vi_id in list(self.vi_weights):
            if vi_id in self:
                out.extend(self.expel(vi_id))
        for inst_id in list(self.instance_weights):
            if inst_id in self:
                out.extend(self.expel(inst_id))
        return out
