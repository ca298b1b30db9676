"""Shared builders for tests."""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from shadowstory.domain import load_domain
from shadowstory.engine import Engine, EngineConfig
from shadowstory.memory import MemoryStore
from shadowstory.model import (
    CONCEPT,
    VERB,
    ConceptBase,
    Instance,
    Overlay,
    RelationGraph,
    RelationKind,
    VerbInstance,
    VIKind,
)
from shadowstory.shadows import ShadowEngine, TickParams

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

AUTOBIOGRAPHY = [
    "carnivores.xapi",
    "carnivores2.xapi",
    "carnivores3.xapi",
    "carnivores4.xapi",
    "conversation1.xapi",
    "conversation2.xapi",
    "sneeze.xapi",
    "vase.xapi",
    "glass.xapi",
]


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def domain():
    return load_domain(fixture_text("domain.xd"))


def autobiography_engine(config: EngineConfig | None = None, lib=None) -> Engine:
    engine = Engine(lib or domain(), config)
    for name in AUTOBIOGRAPHY:
        engine.execute(fixture_text(name))
        engine.flush()
    return engine


ATOMS = ["a", "b", "c", "d"]
VERBS = ["p", "q"]


def small_base(rng: random.Random) -> ConceptBase:
    base = ConceptBase()
    for a in ATOMS:
        base.declare(a, CONCEPT)
    for v in VERBS:
        base.declare(v, VERB)
    base.set_overlap("a", "b", rng.choice([0.0, 0.3, 0.6]))
    base.set_overlap("c", "d", rng.choice([0.0, 0.5]))
    base.set_overlap("p", "q", rng.choice([0.0, 0.4]))
    return base


def _attrs(rng: random.Random) -> Overlay:
    atoms = rng.sample(ATOMS, rng.randint(1, 3))
    return Overlay(CONCEPT, {a: rng.choice([0.5, 1.0]) for a in atoms})


class World:
    """A tiny, hand-built state for exercising the shadow engine directly."""

    def __init__(self, seed: int, n_heads: int = 3, n_mem_inst: int = 5, n_mem_vi: int = 4,
                 n_vi_heads: int = 1, params: TickParams | None = None, kernels=None,
                 random_weights: bool = True) -> None:
        rng = random.Random(seed)
        self.rng = rng
        self.base = small_base(rng)
        self.memory = MemoryStore()
        self.relations = RelationGraph()
        self.items: dict = {}
        mem_ids = [f"m{i}" for i in range(n_mem_inst)]
        for i, mid in enumerate(mem_ids):
            self.memory.record_instance(mid, "old", _attrs(rng), float(i), rng.uniform(0.2, 3.0))
        for i in range(n_mem_vi):
            s, o = rng.sample(mem_ids, 2)
            kind = rng.choice([VIKind.SVO, VIKind.SV])
            vi = VerbInstance(f"mv{i}", kind, Overlay(VERB, {rng.choice(VERBS): 1.0}), s, "old",
                              obj=o if kind == VIKind.SVO else None, seq=i)
            self.memory.record_vi(vi, rng.uniform(0.2, 3.0))
        if n_mem_inst >= 4:
            self.relations.add_identity(RelationKind.IDENTITY_FICTIONAL, mem_ids[0], mem_ids[1])
            self.relations.add_non_identity(mem_ids[2], mem_ids[3])
        heads = [f"h{i}" for i in range(n_heads)]
        for h in heads:
            self.items[h] = Instance(h, "now", _attrs(rng))
        if n_heads >= 2 and n_mem_inst >= 3:
            self.relations.add_identity(RelationKind.IDENTITY_SOMATIC, heads[0], mem_ids[2])
        vi_heads = []
        for i in range(n_vi_heads):
            s, o = rng.sample(heads, 2) if n_heads >= 2 else (heads[0], None)
            kind = VIKind.SVO if o is not None else VIKind.SV
            vi = VerbInstance(f"hv{i}", kind, Overlay(VERB, {rng.choice(VERBS): 1.0}), s, "now",
                              obj=o)
            self.items[vi.id] = vi
            vi_heads.append(vi.id)
        self.heads = heads
        self.vi_heads = vi_heads
        self.engine = ShadowEngine(self.memory, self.items, self.relations, self.base,
                                   params or TickParams(), kernels)
        for h in heads + vi_heads:
            self.engine.init_shadow_unexpected(h)
        if random_weights:
            self.randomize(rng)

    def randomize(self, rng: random.Random) -> None:
        eng = self.engine
        for fld in (eng.inst, eng.vi):
            for r in range(fld.nrows):
                for c in range(fld.ncols):
                    if rng.random() < 0.6:
                        fld.W[r, c] = rng.uniform(0.0, 0.6)
                fld.pool[r] = rng.uniform(0.0, 1.5)

    def state(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        eng = self.engine
        return (eng.inst.live().copy(), eng.inst.pool[: eng.inst.nrows].copy(),
                eng.vi.live().copy(), eng.vi.pool[: eng.vi.nrows].copy())
