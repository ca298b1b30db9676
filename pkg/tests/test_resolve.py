import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import domain
from shadowstory.engine import Engine
from shadowstory.model import RelationKind, VIKind
from shadowstory.parser import parse_program
from shadowstory.resolve import ResolutionError

LIB = domain()


def fresh(src=""):
    e = Engine(LIB)
    if src:
        e.execute(src)
    return e


def test_definite_binds_existing_instances():
    e = fresh('$new-scene "Forest"\nA wolf / walks.\nA girl / walks.\n')
    wolf, girl = list(e.focus.instance_weights)[:2]
    (rec,) = e.execute("The wolf / eats / the girl.")
    vi = rec.vi
    assert vi.kind == VIKind.SVO
    assert (vi.subject, vi.obj) == (wolf, girl)
    assert len(e.focus.instance_weights) <= 2


def test_indefinite_creates_instance_and_isa_vi():
    e = fresh('$new-scene "Forest"\n')
    recs = e.execute("A wolf / is-a / big.")
    assert [r.vi.kind for r in recs] == [VIKind.S_ISA_ADJ]
    (inst,) = e.focus.instances()
    assert "wolf" in inst.attributes and "big" in inst.attributes


def test_quote_i_binds_the_quote_scene_counterpart():
    e = fresh('$new-scene "StoryEnd"\n"LRRH" / is-a / girl.\n')
    speaker = e.focus.instances()[0].id
    recs = e.execute('"LRRH" / says in scene "GrandmasHouse" // I / is-a / afraid.')
    inner = recs[0].vi
    assert inner.subject != speaker
    assert e.relations.identical(speaker) == [inner.subject]
    rel = next(e.relations.of_kind(RelationKind.IDENTITY_FICTIONAL))
    assert {rel.src, rel.dst} == {speaker, inner.subject}
    again = e.execute('"LRRH" / says in scene "GrandmasHouse" // I / sleeps.')
    assert again[0].vi.subject == inner.subject


def test_chain_emits_relation_vi():
    e = fresh('$new-scene "Forest"\nA wolf / walks.\n')
    recs = e.execute("The wolf / sees / eyes -- of -- the wolf.")
    kinds = [(r.vi.kind, r.vi.is_relation) for r in recs]
    assert (VIKind.SVO, True) in kinds and (VIKind.SVO, False) in kinds
    assert len(recs) == 2


def test_unresolved_definite_is_an_error_and_changes_nothing():
    e = fresh('$new-scene "Forest"\nA wolf / walks.\n')
    before = (dict(e.counters), dict(e.focus.instance_weights), len(e.records))
    with pytest.raises(ResolutionError):
        e.execute("The wolf / eats / the basket.")
    assert (dict(e.counters), dict(e.focus.instance_weights), len(e.records)) == before


def test_statement_without_scene_is_rejected():
    with pytest.raises(ResolutionError, match="no current scene"):
        fresh().execute("A wolf / walks.")


def test_you_is_rejected():
    e = fresh('$new-scene "Forest"\nA wolf / walks.\n')
    with pytest.raises(ResolutionError, match="you"):
        e.execute("The wolf / eats / you.")


def test_unknown_word_is_reported_with_position():
    e = fresh('$new-scene "Forest"\n')
    with pytest.raises(ResolutionError) as info:
        e.execute("A xyzzy / walks.")
    assert info.value.line == 1


def test_resolution_is_deterministic():
    src = ('$new-scene "Forest"\n"LRRH" / is-a / girl.\nA wolf / sees / the girl.\n'
           'The wolf / says in scene "Conversation" // eyes -- of -- I / sees good / the girl.\n')
    a = [r.vi for r in fresh().execute(src)]
    b = [r.vi for r in fresh().execute(src)]
    assert a == b


NOUNS = ["wolf", "girl", "fox", "deer", "basket"]
VERBS = ["sees", "eats", "chases", "meets"]
ADJS = ["big", "hungry", "small"]


@st.composite
def programs(draw):
    lines = ['$new-scene "Meadow"']
    last = None
    for _ in range(draw(st.integers(1, 8))):
        choice = draw(st.integers(0, 3))
        noun = draw(st.sampled_from(NOUNS))
        # only the previous subject is sure to still be in focus
        subj = f"the {noun}" if noun == last else f"a {noun}"
        last = noun
        if choice == 0:
            lines.append(f"{subj} / {draw(st.sampled_from(VERBS))} / a {draw(st.sampled_from(NOUNS))}.")
        elif choice == 1:
            lines.append(f"{subj} / is-a / {draw(st.sampled_from(ADJS))}.")
        elif choice == 2:
            lines.append(f"{subj} / sees / ears -- of -- a {draw(st.sampled_from(NOUNS))}.")
        else:
            lines.append(f"{subj} / says in \"Talk\" // I / is-a / {draw(st.sampled_from(ADJS))}.")
    return "\n".join(lines) + "\n"


@settings(max_examples=40, deadline=None)
@given(programs())
def test_expansion_at_least_one_vi_per_statement(src):
    statements = [p for p in parse_program(src) if hasattr(p, "subject")]
    e = Engine(LIB)
    recs = e.execute(src)
    assert len(recs) >= len(statements)
