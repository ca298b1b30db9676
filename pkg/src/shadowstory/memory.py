"""Append-only autobiographical memory and its inter-VI link structure."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import Overlay, VerbInstance


class MemoryStoreError(Exception):
    pass


class LinkKind(str, enum.Enum):
    IN_SHADOW = "IN_SHADOW"
    PREDECESSOR = "PREDECESSOR"
    SUCCESSOR = "SUCCESSOR"
    SUMMARY = "SUMMARY"
    ELABORATION = "ELABORATION"
    ANSWER = "ANSWER"
    QUESTION = "QUESTION"
    CONTEXT = "CONTEXT"
    CONTEXT_IMPLICATION = "CONTEXT_IMPLICATION"


INVERSE = {
    LinkKind.PREDECESSOR: LinkKind.SUCCESSOR,
    LinkKind.SUCCESSOR: LinkKind.PREDECESSOR,
    LinkKind.SUMMARY: LinkKind.ELABORATION,
    LinkKind.ELABORATION: LinkKind.SUMMARY,
    LinkKind.ANSWER: LinkKind.QUESTION,
    LinkKind.QUESTION: LinkKind.ANSWER,
    LinkKind.CONTEXT: LinkKind.CONTEXT_IMPLICATION,
    LinkKind.CONTEXT_IMPLICATION: LinkKind.CONTEXT,
}
STORED_KINDS = tuple(INVERSE)


def salience_norm(salience: float) -> float:
    """Map accumulated salience onto [0, 1) without a global normalizer."""
    return 1.0 - math.exp(-salience)


@dataclass(frozen=True)
class MemoryInstance:
    id: str
    scene: str
    attributes: Overlay
    created_at: float
    salience: float

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "scene": self.scene,
            "attributes": self.attributes.to_json(),
            "created_at": self.created_at,
            "salience": self.salience,
        }


class _Grow:
    """Amortized-append numpy buffer."""

    def __init__(self, width: int | None, dtype, fill) -> None:
        self.width = width
        self.fill = fill
        shape = (16,) if width is None else (16, width)
        self.buf = np.full(shape, fill, dtype=dtype)
        self.n = 0

    def append(self, value) -> int:
        if self.n == len(self.buf):
            bigger = np.full((2 * len(self.buf),) + self.buf.shape[1:], self.fill, self.buf.dtype)
            bigger[: self.n] = self.buf[: self.n]
            self.buf = bigger
        self.buf[self.n] = value
        self.n += 1
        return self.n - 1

    @property
    def view(self) -> np.ndarray:
        return self.buf[: self.n]


class MemoryStore:
    """Recorded instances and VIs plus typed, strength-weighted links.

    Items are addressed by their original focus id; each kind also has a
    dense column index used by the shadow arrays.  Links may be proposed
    before both endpoints are recorded; they materialize once both are.
    """

    def __init__(self, succession_window: int = 5) -> None:
        self.k_s = succession_window
        self.instances: list[MemoryInstance] = []
        self.vis: list[VerbInstance] = []
        self.vi_salience: list[float] = []
        self.inst_col: dict[str, int] = {}
        self.vi_col: dict[str, int] = {}
        self.order: list[str] = []
        self.links: dict[str, list[tuple[LinkKind, str, float]]] = {}
        self._link_set: set[tuple[str, LinkKind, str]] = set()
        self._pending: dict[str, list[tuple[str, LinkKind, str, float]]] = {}
        self._succession: dict[str, dict[int, str]] = {}
        self._awaiting_part: dict[str, list[tuple[int, int]]] = {}
        self.inst_salnorm = _Grow(None, np.float64, 0.0)
        self.vi_salnorm = _Grow(None, np.float64, 0.0)
        self.vi_part_cols = _Grow(2, np.int64, -1)
        self.version = 0

    def __len__(self) -> int:
        return len(self.order)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.inst_col or item_id in self.vi_col

    @property
    def n_instances(self) -> int:
        return len(self.instances)

    @property
    def n_vis(self) -> int:
        return len(self.vis)

    def instance(self, item_id: str) -> MemoryInstance:
        return self.instances[self.inst_col[item_id]]

    def vi(self, item_id: str) -> VerbInstance:
        return self.vis[self.vi_col[item_id]]

    def record_instance(self, inst_id: str, scene: str, attributes: Overlay,
                        created_at: float, salience: float) -> int:
        if inst_id in self:
            raise MemoryStoreError(f"{inst_id} already recorded")
        col = len(self.instances)
        self.instances.append(MemoryInstance(inst_id, scene, attributes, created_at, salience))
        self.inst_col[inst_id] = col
        self.inst_salnorm.append(salience_norm(salience))
        self.order.append(inst_id)
        for vi_col, slot in self._awaiting_part.pop(inst_id, ()):
            self.vi_part_cols.buf[vi_col, slot] = col
        self.version += 1
        return col

    def record_vi(self, vi: VerbInstance, salience: float) -> int:
        if vi.id in self:
            raise MemoryStoreError(f"{vi.id} already recorded")
        col = len(self.vis)
        self.vis.append(vi)
        self.vi_salience.append(salience)
        self.vi_col[vi.id] = col
        self.vi_salnorm.append(salience_norm(salience))
        self.order.append(vi.id)
        self.links.setdefault(vi.id, [])
        parts = [-1, -1]
        for slot, inst in enumerate(vi.instance_parts()):
            if inst in self.inst_col:
                parts[slot] = self.inst_col[inst]
            else:
                self._awaiting_part.setdefault(inst, []).append((col, slot))
        self.vi_part_cols.append(parts)

        if vi.seq >= 0:
            line = self._succession.setdefault(vi.scene, {})
            line[vi.seq] = vi.id
            for d in range(1, self.k_s + 1):
                earlier = line.get(vi.seq - d)
                if earlier is not None:
                    self._link(vi.id, LinkKind.PREDECESSOR, earlier, 1.0 / d)
                later = line.get(vi.seq + d)
                if later is not None:
                    self._link(later, LinkKind.PREDECESSOR, vi.id, 1.0 / d)
        for a, kind, b, strength in self._pending.pop(vi.id, ()):
            other = b if a == vi.id else a
            if other in self.vi_col:
                self._link(a, kind, b, strength)
        self.version += 1
        return col

    def record(self, item, salience: float) -> int:
        if isinstance(item, VerbInstance):
            return self.record_vi(item, salience)
        return self.record_instance(item.id, item.scene, item.attributes, item.created_at, salience)

    def propose(self, a: str, kind: LinkKind, b: str, strength: float) -> None:
        """Link ``a`` to ``b`` (``b`` is ``a``'s ``kind``) once both are recorded."""
        if kind not in INVERSE:
            raise MemoryStoreError(f"{kind} is not a storable link kind")
        if not 0.0 < strength <= 1.0:
            return
        if a in self.vi_col and b in self.vi_col:
            self._link(a, kind, b, strength)
            return
        for end in (a, b):
            if end not in self.vi_col:
                self._pending.setdefault(end, []).append((a, kind, b, strength))

    def _link(self, a: str, kind: LinkKind, b: str, strength: float) -> None:
        if a == b or (a, kind, b) in self._link_set:
            return
        inv = INVERSE[kind]
        self._link_set.add((a, kind, b))
        self._link_set.add((b, inv, a))
        self.links[a].append((kind, b, strength))
        self.links[b].append((inv, a, strength))

    def neighbors(self, vi_id: str, kind: LinkKind) -> list[tuple[str, float]]:
        try:
            links = self.links[vi_id]
        except KeyError:
            raise MemoryStoreError(f"{vi_id} is not a recorded VI") from None
        out = [(t, s) for k, t, s in links if k == kind]
        out.sort(key=lambda ts: -ts[1])
        return out

    def link_counts(self) -> dict[LinkKind, int]:
        counts = {k: 0 for k in STORED_KINDS}
        for links in self.links.values():
            for k, _t, _s in links:
                counts[k] += 1
        return counts

    def iter_items(self) -> Iterable[tuple[str, object, float]]:
        for item_id in self.order:
            if item_id in self.inst_col:
                inst = self.instance(item_id)
                yield "instance", inst, inst.salience
            else:
                col = self.vi_col[item_id]
                yield "vi", self.vis[col], self.vi_salience[col]

    def to_json(self) -> dict:
        items = []
        for kind, item, salience in self.iter_items():
            if kind == "instance":
                items.append({"type": "instance", **item.to_json()})
            else:
                items.append({"type": "vi", "salience": salience, "vi": item.to_json()})
        links = []
        for a in self.order:
            for kind, b, s in self.links.get(a, ()):
                if kind in (LinkKind.PREDECESSOR, LinkKind.CONTEXT, LinkKind.ANSWER, LinkKind.SUMMARY):
                    links.append([a, kind.value, b, s])
        pending = []
        seen = set()
        for entries in self._pending.values():
            for a, kind, b, s in entries:
                if (a, kind, b) not in seen:
                    seen.add((a, kind, b))
                    pending.append([a, kind.value, b, s])
        return {
            "format": "shadowstory-memory/1",
            "succession_window": self.k_s,
            "items": items,
            "links": links,
            "pending": sorted(pending),
        }

    @classmethod
    def from_json(cls, data: dict) -> "MemoryStore":
        if data.get("format") != "shadowstory-memory/1":
            raise MemoryStoreError("not a shadowstory memory snapshot")
        store = cls(data["succession_window"])
        # links are restored verbatim below, so suppress succession rebuilding
        k_s, store.k_s = store.k_s, 0
        for item in data["items"]:
            if item["type"] == "instance":
                store.record_instance(item["id"], item["scene"],
                                      Overlay.from_json(item["attributes"]),
                                      item["created_at"], item["salience"])
            else:
                store.record_vi(VerbInstance.from_json(item["vi"]), item["salience"])
        store.k_s = k_s
        for a, kind, b, s in data["links"]:
            store._link(a, LinkKind(kind), b, s)
        for a, kind, b, s in data["pending"]:
            store.propose(a, LinkKind(kind), b, s)
        return store
