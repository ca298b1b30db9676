import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import domain
from shadowstory.engine import Engine
from shadowstory.memory import (
    INVERSE,
    LinkKind,
    MemoryStore,
    MemoryStoreError,
    salience_norm,
)
from shadowstory.model import Overlay, VerbInstance, VIKind

WALK = Overlay.verb("walks")


def act(vid, seq, scene="s1", subj="i1"):
    return VerbInstance(vid, VIKind.SV, WALK, subj, scene, seq=seq)


def test_succession_links_follow_one_over_d():
    m = MemoryStore()
    for i, v in enumerate("ABC"):
        m.record_vi(act(v, i), 1.0)
    assert m.neighbors("C", LinkKind.PREDECESSOR) == [("B", 1.0), ("A", 0.5)]
    assert m.neighbors("B", LinkKind.PREDECESSOR) == [("A", 1.0)]
    assert m.neighbors("A", LinkKind.SUCCESSOR) == [("B", 1.0), ("C", 0.5)]


def test_succession_uses_creation_order_not_recording_order():
    m = MemoryStore()
    for v, seq in (("C", 2), ("A", 0), ("B", 1)):
        m.record_vi(act(v, seq), 1.0)
    assert m.neighbors("C", LinkKind.PREDECESSOR) == [("B", 1.0), ("A", 0.5)]


def test_window_and_scene_limits():
    m = MemoryStore(succession_window=2)
    for i in range(4):
        m.record_vi(act(f"v{i}", i), 1.0)
    m.record_vi(act("other", 4, scene="s2"), 1.0)
    assert [t for t, _ in m.neighbors("v3", LinkKind.PREDECESSOR)] == ["v2", "v1"]
    assert m.neighbors("other", LinkKind.PREDECESSOR) == []


def test_lone_vi_has_no_links():
    m = MemoryStore()
    m.record_vi(act("A", 0), 1.0)
    assert m.links["A"] == []
    assert m.neighbors("A", LinkKind.SUMMARY) == []


def test_errors():
    m = MemoryStore()
    m.record_vi(act("A", 0), 1.0)
    with pytest.raises(MemoryStoreError):
        m.record_vi(act("A", 1), 1.0)
    with pytest.raises(MemoryStoreError):
        m.neighbors("nope", LinkKind.SUCCESSOR)


def test_proposed_links_wait_for_both_endpoints():
    m = MemoryStore()
    m.propose("x", LinkKind.CONTEXT, "r", 0.7)
    m.record_vi(act("x", -1), 1.0)
    assert m.neighbors("x", LinkKind.CONTEXT) == []
    m.record_vi(VerbInstance("r", VIKind.S_ISA_ADJ, Overlay.verb("is-a"), "i1", "s1",
                             obj=Overlay.concept("big"), is_relation=True), 1.0)
    assert m.neighbors("x", LinkKind.CONTEXT) == [("r", 0.7)]
    assert m.neighbors("r", LinkKind.CONTEXT_IMPLICATION) == [("x", 0.7)]


def test_question_answer_links_from_the_corpus():
    e = Engine(domain())
    e.execute('$new-scene "Meadow"\n"LRRH" / is-a / girl.\nA fox / meets / the girl.\n'
              'The girl / asks in scene "Talk" // the fox / wh is-a / hungry?\n'
              'The fox / says in scene "Talk" // I / is-a / hungry.\n')
    e.flush()
    quotes = [v for v in e.memory.vis if v.kind == VIKind.QUOTE]
    q, a = quotes
    assert e.memory.neighbors(q.id, LinkKind.ANSWER) == [(a.id, 1.0)]
    assert e.memory.neighbors(a.id, LinkKind.QUESTION) == [(q.id, 1.0)]


def test_summary_links_from_annotation():
    e = Engine(domain())
    e.execute('$new-scene "Meadow"\nA wolf / walks.\n$summary-begin\nThe wolf / sees / a deer.\n'
              'The wolf / chases / the deer.\n$summary-end\nThe wolf / eats / the deer.\n')
    e.flush()
    eats = next(v for v in e.memory.vis if "eats" in v.verb)
    elab = e.memory.neighbors(eats.id, LinkKind.ELABORATION)
    assert len(elab) == 2
    for vid, _ in elab:
        assert e.memory.neighbors(vid, LinkKind.SUMMARY) == [(eats.id, 1.0)]


def test_salience_norm_is_bounded_and_monotone():
    xs = [0.0, 0.1, 1.0, 5.0, 50.0]
    ys = [salience_norm(x) for x in xs]
    assert ys[0] == 0.0 and all(0.0 <= y <= 1.0 for y in ys) and ys[3] < 1.0
    assert ys == sorted(ys)


ops = st.lists(
    st.one_of(
        st.tuples(st.just("act"), st.sampled_from(["s1", "s2"]), st.integers(-1, 12)),
        st.tuples(st.just("link"), st.integers(0, 15), st.integers(0, 15),
                  st.sampled_from([LinkKind.CONTEXT, LinkKind.ANSWER, LinkKind.SUMMARY]),
                  st.floats(0.01, 1.0)),
    ),
    max_size=40,
)


def run_ops(seq):
    m = MemoryStore()
    seqs: dict[str, set] = {}
    history = []
    n = 0
    for op in seq:
        if op[0] == "act":
            _, scene, s = op
            used = seqs.setdefault(scene, set())
            if s in used:
                s = -1
            used.add(s)
            m.record_vi(act(f"v{n}", s, scene), 1.0)
            n += 1
        else:
            _, a, b, kind, w = op
            if a != b:
                m.propose(f"v{a}", kind, f"v{b}", w)
        history.append(list(m.order))
    return m, history


@settings(max_examples=80)
@given(ops)
def test_links_pair_with_inverses(seq):
    m, _ = run_ops(seq)
    counts = m.link_counts()
    for kind, inv in INVERSE.items():
        assert counts[kind] == counts[inv]
    for a, links in m.links.items():
        for kind, b, s in links:
            assert (INVERSE[kind], a, s) in m.links[b]


@settings(max_examples=80)
@given(ops)
def test_store_is_append_only(seq):
    _, history = run_ops(seq)
    for before, after in zip(history, history[1:]):
        assert after[: len(before)] == before


@settings(max_examples=60)
@given(ops)
def test_json_round_trip(seq):
    m, _ = run_ops(seq)
    data = json.loads(json.dumps(m.to_json()))
    again = MemoryStore.from_json(data)
    assert again.to_json() == m.to_json()
    for vid in m.vi_col:
        for kind in INVERSE:
            assert again.neighbors(vid, kind) == m.neighbors(vid, kind)
