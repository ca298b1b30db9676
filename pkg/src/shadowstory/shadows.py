"""Shadow maintenance: spike activities and the diffusion activities.

Each focus instance or VI heads a shadow whose body is a weighted set of
memory items of the same kind.  Bodies are stored densely, one row per head,
one column per memory item, so a substep is a handful of sweeps over the
arrays (see :mod:`shadowstory.kernels`).  Every shadow owns a resource pool.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels as _kernels
from .memory import MemoryStore
from .model import (
    ConceptBase,
    Instance,
    Overlay,
    RelationGraph,
    VerbInstance,
    overlay_similarity,
)


class ShadowError(Exception):
    pass


@dataclass
class TickParams:
    lambda_s: float = 0.1
    kappa_m: float = 0.5
    kappa_c: float = 0.5
    kappa_sh: float = 0.3
    kappa_n: float = 0.3
    kappa_id: float = 0.2
    e0: float = 1.0
    dt_max: float = 0.1

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value < 0:
                raise ShadowError(f"tick parameter {name} must be nonnegative")
        if self.dt_max <= 0:
            raise ShadowError("dt_max must be positive")


@dataclass
class Shadow:
    """Read-only view of one shadow."""

    head: str
    body: dict[str, float]
    pool: float

    def total(self) -> float:
        return sum(self.body.values()) + self.pool


@dataclass
class TickReport:
    dt: float = 0.0
    substeps: int = 0
    delta: dict[str, float] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def total_delta(self) -> float:
        return sum(self.delta.values())


def substep_count(dt: float, dt_max: float) -> int:
    return max(1, math.ceil(dt / dt_max - 1e-9))


class ShadowField:
    """Dense weight rows (one per head) over one kind of memory item."""

    def __init__(self) -> None:
        self.heads: list[str] = []
        self.row: dict[str, int] = {}
        self.W = np.zeros((4, 64))
        self.S = np.zeros((4, 64))
        self.G = np.zeros((4, 64))
        self.pool = np.zeros(4)
        self.ncols = 0
        self.static_upto: list[int] = []
        self.static_key: list[object] = []

    @property
    def nrows(self) -> int:
        return len(self.heads)

    def _resize(self, rows: int, cols: int) -> None:
        rcap, ccap = self.W.shape
        if rows <= rcap and cols <= ccap:
            return
        while rcap < rows:
            rcap *= 2
        while ccap < cols:
            ccap *= 2
        for name in ("W", "S", "G"):
            old = getattr(self, name)
            new = np.zeros((rcap, ccap))
            new[: self.nrows, : self.ncols] = old[: self.nrows, : self.ncols]
            setattr(self, name, new)
        pool = np.zeros(rcap)
        pool[: self.nrows] = self.pool[: self.nrows]
        self.pool = pool

    def set_cols(self, n: int) -> None:
        self._resize(self.nrows, n)
        self.ncols = n

    def add_row(self, head: str, pool: float) -> int:
        if head in self.row:
            raise ShadowError(f"shadow for {head} already exists")
        r = self.nrows
        self._resize(r + 1, self.ncols)
        for arr in (self.W, self.S, self.G):
            arr[r, :] = 0.0
        self.pool[r] = pool
        self.heads.append(head)
        self.row[head] = r
        self.static_upto.append(0)
        self.static_key.append(None)
        return r

    def remove_row(self, head: str) -> None:
        r = self.row.pop(head)
        n = self.nrows
        for arr in (self.W, self.S, self.G):
            arr[r : n - 1] = arr[r + 1 : n]
            arr[n - 1] = 0.0
        self.pool[r : n - 1] = self.pool[r + 1 : n]
        self.pool[n - 1] = 0.0
        del self.heads[r]
        del self.static_upto[r]
        del self.static_key[r]
        for i in range(r, n - 1):
            self.row[self.heads[i]] = i

    def live(self) -> np.ndarray:
        return self.W[: self.nrows, : self.ncols]


class ShadowEngine:
    def __init__(
        self,
        memory: MemoryStore,
        items: Mapping[str, Instance | VerbInstance],
        relations: RelationGraph,
        base: ConceptBase,
        params: TickParams | None = None,
        kernels=None,
    ) -> None:
        self.memory = memory
        self.items = items
        self.relations = relations
        self.base = base
        self.params = params or TickParams()
        self.k = kernels or _kernels.active
        self.inst = ShadowField()
        self.vi = ShadowField()
        self._sim_cache: dict[tuple[Overlay, Overlay], float] = {}
        self._ident_pairs: list[tuple[int, int]] = []
        self._non_ident: list[tuple[int, int]] = []
        self._seen_instances = 0
        self._col_arity = np.zeros(64, dtype=np.int64)
        self._arity_upto = 0

    # ---- spike activities -------------------------------------------------

    def has_shadow(self, head: str) -> bool:
        return head in self.inst.row or head in self.vi.row

    def _field_for(self, head: str) -> ShadowField:
        item = self.items.get(head)
        if item is None:
            raise ShadowError(f"{head} is not a focus item")
        return self.vi if isinstance(item, VerbInstance) else self.inst

    def init_shadow_unexpected(self, head: str) -> Shadow:
        if self.has_shadow(head):
            raise ShadowError(f"shadow for {head} already exists")
        self.sync()
        fld = self._field_for(head)
        fld.add_row(head, self.params.e0)
        return self.shadow(head)

    def init_shadow_from_hls(self, head: str, hls) -> Shadow:
        """Seed the body from the HLS sources with positive contribution.

        Contributions are normalized to sum 1 over the positive sources; an
        HLS without positive sources yields an empty shadow.
        """
        self.init_shadow_unexpected(head)
        fld = self._field_for(head)
        r = fld.row[head]
        contributions = hls.source_contributions()
        positive = {m: c for m, c in contributions.items()
                    if c > 0 and m in self.memory.vi_col}
        total = sum(positive.values())
        for m, c in sorted(positive.items()):
            fld.W[r, self.memory.vi_col[m]] = c / total
        return self.shadow(head)

    def remove(self, head: str) -> None:
        if head in self.inst.row:
            self.inst.remove_row(head)
        elif head in self.vi.row:
            self.vi.remove_row(head)

    def shadow(self, head: str) -> Shadow:
        if head in self.inst.row:
            fld, ids = self.inst, self.memory.instances
        elif head in self.vi.row:
            fld, ids = self.vi, self.memory.vis
        else:
            raise ShadowError(f"no shadow for {head}")
        r = fld.row[head]
        row = fld.W[r, : fld.ncols]
        body = {ids[c].id: float(row[c]) for c in np.flatnonzero(row > 0.0)}
        return Shadow(head, body, float(fld.pool[r]))

    def participation(self, head: str, memory_id: str) -> float:
        if head in self.inst.row:
            col = self.memory.inst_col.get(memory_id)
            fld = self.inst
        else:
            col = self.memory.vi_col.get(memory_id)
            fld = self.vi
        if col is None or col >= fld.ncols:
            return 0.0
        return float(fld.W[fld.row[head], col])

    def set_participation(self, head: str, memory_id: str, weight: float) -> None:
        """Directly place a weight (used by tests and state restoration)."""
        self.sync()
        if not 0.0 <= weight <= 1.0:
            raise ShadowError("participation must lie in [0,1]")
        if head in self.inst.row:
            self.inst.W[self.inst.row[head], self.memory.inst_col[memory_id]] = weight
        else:
            self.vi.W[self.vi.row[head], self.memory.vi_col[memory_id]] = weight

    # ---- static gains -----------------------------------------------------

    def _sim(self, a: Overlay, b: Overlay) -> float:
        key = (a, b)
        s = self._sim_cache.get(key)
        if s is None:
            s = overlay_similarity(a, b, self.base) if a.kind == b.kind else 0.0
            self._sim_cache[key] = s
        return s

    def _vi_static(self, head: VerbInstance, m: VerbInstance) -> float:
        if head.kind != m.kind:
            return 0.0
        s = self._sim(head.verb, m.verb)
        if s and isinstance(head.obj, Overlay):
            s *= self._sim(head.obj, m.obj)
        return s

    def sync(self) -> None:
        """Bring columns, static gains and relation pairs up to date."""
        mem = self.memory
        self.inst.set_cols(mem.n_instances)
        self.vi.set_cols(mem.n_vis)
        if len(self._col_arity) < mem.n_vis:
            grown = np.zeros(max(mem.n_vis, 2 * len(self._col_arity)), dtype=np.int64)
            grown[: len(self._col_arity)] = self._col_arity
            self._col_arity = grown
        inst_sal = mem.inst_salnorm.view
        vi_sal = mem.vi_salnorm.view
        for r, head in enumerate(self.inst.heads):
            attrs = self.items[head].attributes
            start = self.inst.static_upto[r] if self.inst.static_key[r] == attrs else 0
            for c in range(start, mem.n_instances):
                self.inst.S[r, c] = self._sim(attrs, mem.instances[c].attributes) * inst_sal[c]
            self.inst.static_upto[r] = mem.n_instances
            self.inst.static_key[r] = attrs
        for c in range(self._arity_upto, mem.n_vis):
            self._col_arity[c] = len(mem.vis[c].instance_parts())
        self._arity_upto = mem.n_vis
        for r, head in enumerate(self.vi.heads):
            hvi = self.items[head]
            for c in range(self.vi.static_upto[r], mem.n_vis):
                self.vi.S[r, c] = self._vi_static(hvi, mem.vis[c]) * vi_sal[c]
            self.vi.static_upto[r] = mem.n_vis
        for c in range(self._seen_instances, mem.n_instances):
            inst_id = mem.instances[c].id
            # each pair is recorded once, when its later column arrives
            for other in self.relations.identical(inst_id):
                oc = mem.inst_col.get(other)
                if oc is not None and oc < c:
                    self._ident_pairs.append((c, oc))
                    self._ident_pairs.append((oc, c))
            for other in self.relations.non_identical(inst_id):
                oc = mem.inst_col.get(other)
                if oc is not None and oc < c:
                    self._non_ident.append((oc, c))
        self._seen_instances = mem.n_instances

    # ---- diffusion activities (single-shadow forms) -------------------------

    def da_decay(self, head: str, dt: float) -> None:
        fld = self._field_for(head)
        r = fld.row[head]
        factor = math.exp(-self.params.lambda_s * dt)
        self.k.decay(fld.W[r : r + 1], fld.pool[r : r + 1], 1, fld.ncols, factor)

    def _head_parts(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.vi.nrows
        hp = np.full((max(n, 1), 2), -1, dtype=np.int64)
        arity = np.zeros(max(n, 1), dtype=np.int64)
        for r, head in enumerate(self.vi.heads):
            parts = self.items[head].instance_parts()
            arity[r] = len(parts)
            for s, inst in enumerate(parts):
                hp[r, s] = self.inst.row.get(inst, -1)
        return hp, arity

    def _gains(self) -> None:
        n, c = self.vi.nrows, self.vi.ncols
        if n == 0:
            return
        hp, _ = self._head_parts()
        self.k.vi_gains(self.vi.G, self.vi.S, self.inst.W, hp,
                        self.memory.vi_part_cols.buf, n, c)

    def da_match_head(self, head: str, dt: float) -> None:
        self.sync()
        fld = self._field_for(head)
        r = fld.row[head]
        if fld is self.vi:
            self._gains()
            G = fld.G
        else:
            G = fld.S
        self.k.match_transfer(fld.W[r : r + 1], fld.pool[r : r + 1], G[r : r + 1],
                              1, fld.ncols, self.params.kappa_m * dt)

    def _identity_flow(self, rate: float, only: str | None = None) -> None:
        fld = self.inst
        mem = self.memory
        pairs = self._ident_pairs
        for r, head in enumerate(fld.heads):
            if only is not None and head != only:
                continue
            head_links = [mem.inst_col[o] for o in self.relations.identical(head)
                          if o in mem.inst_col]
            if not pairs and not head_links:
                continue
            row = fld.W[r]
            # gains are computed from the pre-flow weights
            wants = [(dst, rate) for dst in head_links]
            wants += [(dst, rate * row[src]) for src, dst in pairs if row[src] > 0.0]
            pool = fld.pool[r]
            for dst, gain in wants:
                if pool <= 0.0:
                    break
                g = min(gain, pool)
                nw = row[dst] + g
                if nw > 1.0:
                    g -= nw - 1.0
                    nw = 1.0
                row[dst] = nw
                pool -= g
            fld.pool[r] = pool

    def _head_links(self) -> list[list[int]]:
        mem = self.memory
        return [[mem.inst_col[o] for o in self.relations.identical(head) if o in mem.inst_col]
                for head in self.inst.heads]

    def _funded_rates(self, h: float, head_links: list[list[int]]) -> np.ndarray | None:
        """Per-cell rates of the pool-funded instance DAs (match plus identity).

        Identity rates depend on the weights they feed, so they are taken at
        the midpoint of the step.  Returns None when only matching applies.
        """
        fld = self.inst
        p = self.params
        n, c = fld.nrows, fld.ncols
        pairs = self._ident_pairs
        if not pairs and not any(head_links):
            return None
        R = fld.G
        np.multiply(fld.S[:n, :c], p.kappa_m, out=R[:n, :c])
        for r in range(n):
            row = fld.W[r]
            base = R[r].copy() if pairs else None
            for dst in head_links[r]:
                R[r, dst] += p.kappa_id
            if not pairs:
                continue
            for src, dst in pairs:
                base[dst] += p.kappa_id * row[src]
            demand = h * base[:c].sum()
            frac = min(1.0, fld.pool[r] / demand) if demand > 0 else 0.0
            for src, dst in pairs:
                mid = min(1.0, row[src] + 0.5 * h * frac * base[src])
                if mid > 0.0:
                    R[r, dst] += p.kappa_id * mid
        return R

    def da_identity(self, head: str, dt: float) -> None:
        self.sync()
        self._identity_flow(self.params.kappa_id * dt, only=head)

    def da_consistency(self, head: str, dt: float) -> None:
        self.sync()
        r = self.vi.row[head]
        hp, arity = self._head_parts()
        self.k.consistency(self.vi.W[r : r + 1], self.inst.W, hp[r : r + 1],
                           self.memory.vi_part_cols.buf, arity[r : r + 1], self._col_arity,
                           1, self.vi.ncols, self.params.kappa_c * dt)

    def da_sharpening(self, dt: float) -> None:
        self.k.sharpen(self.inst.W, self.inst.nrows, self.inst.ncols, self.params.kappa_sh * dt)

    def da_non_identity(self, dt: float) -> None:
        pairs = self._pair_array()
        self.k.non_identity(self.inst.W, pairs, self.inst.nrows, len(self._non_ident),
                            self.params.kappa_n * dt)

    def _pair_array(self) -> np.ndarray:
        if not self._non_ident:
            return np.zeros((1, 2), dtype=np.int64)
        return np.ascontiguousarray(self._non_ident, dtype=np.int64)

    # ---- the tick ---------------------------------------------------------

    def substep(self, h: float) -> None:
        """One substep of the coupled DAs, second-order accurate in ``h``.

        The resource-neutral DAs (consistency, sharpening, non-identity) run
        for h/2 on either side of the pool-funded core.  The core solves decay
        together with the funded DAs (match and identity) exactly for frozen
        rates: instance shadows for h/2, VI shadows for h with gains taken
        from the instance weights at that midpoint, instance shadows for h/2.
        """
        half = 0.5 * h
        hp, arity = self._head_parts()
        head_links = self._head_links()
        self._funded_instances(half, head_links)
        self._funded_vis(half, hp)
        self._neutral(half, hp, arity, forward=True)
        self._neutral(half, hp, arity, forward=False)
        self._funded_vis(half, hp)
        self._funded_instances(half, head_links)

    def _funded_vis(self, h: float, hp: np.ndarray) -> None:
        vi = self.vi
        if vi.nrows:
            self.k.vi_gains(vi.G, vi.S, self.inst.W, hp, self.memory.vi_part_cols.buf,
                            vi.nrows, vi.ncols)
            self.k.decay_fund(vi.W, vi.pool, vi.G, vi.nrows, vi.ncols, self.params.lambda_s,
                              h, self.params.kappa_m)

    def _funded_instances(self, h: float, head_links: list[list[int]]) -> None:
        inst, p = self.inst, self.params
        R = self._funded_rates(h, head_links)
        if R is None:
            self.k.decay_fund(inst.W, inst.pool, inst.S, inst.nrows, inst.ncols, p.lambda_s,
                              h, p.kappa_m)
        else:
            self.k.decay_fund(inst.W, inst.pool, R, inst.nrows, inst.ncols, p.lambda_s, h, 1.0)

    def _neutral(self, h: float, hp: np.ndarray, arity: np.ndarray, forward: bool) -> None:
        k, p = self.k, self.params
        inst, vi = self.inst, self.vi

        def consistency():
            if vi.nrows:
                k.consistency(vi.W, inst.W, hp, self.memory.vi_part_cols.buf, arity,
                              self._col_arity, vi.nrows, vi.ncols, p.kappa_c * h, True,
                              not forward)

        def sharpen():
            k.sharpen(inst.W, inst.nrows, inst.ncols, p.kappa_sh * h, True)

        def non_identity():
            if self._non_ident:
                k.non_identity(inst.W, self._pair_array(), inst.nrows, len(self._non_ident),
                               p.kappa_n * h, True, not forward)

        steps = [consistency, sharpen, non_identity]
        for step in steps if forward else reversed(steps):
            step()

    def tick(self, dt: float) -> TickReport:
        if dt < 0:
            raise ShadowError(f"negative tick {dt}")
        if dt == 0:
            return TickReport()
        t0 = time.perf_counter()
        self.sync()
        before_i = self.inst.live().copy()
        before_v = self.vi.live().copy()
        n = substep_count(dt, self.params.dt_max)
        h = dt / n
        for _ in range(n):
            self.substep(h)
        report = TickReport(dt=dt, substeps=n)
        for fld, before in ((self.inst, before_i), (self.vi, before_v)):
            diff = np.abs(fld.live() - before).sum(axis=1)
            for r, head in enumerate(fld.heads):
                report.delta[head] = float(diff[r])
        report.elapsed = time.perf_counter() - t0
        return report

    # ---- inspection -------------------------------------------------------

    def heads(self) -> list[str]:
        return list(self.inst.heads) + list(self.vi.heads)

    def snapshot(self) -> dict[str, dict[str, float]]:
        """All participations keyed by head then memory id."""
        return {h: self.shadow(h).body for h in self.heads()}

    def reverse_shadow(self, memory_instance: str) -> list[tuple[str, float]]:
        """Focus instance heads whose shadows contain ``memory_instance``."""
        col = self.memory.inst_col.get(memory_instance)
        if col is None or col >= self.inst.ncols:
            return []
        column = self.inst.W[: self.inst.nrows, col]
        return [(self.inst.heads[r], float(column[r])) for r in np.flatnonzero(column > 0.0)]
