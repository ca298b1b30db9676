import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import domain
from shadowstory.domain import (
    DomainError,
    ImpactEffect,
    UnknownWordError,
    load_domain,
    lookup_word,
)
from shadowstory.model import CONCEPT, VERB, Overlay


def test_small_library():
    lib = load_domain('concept wolf. concept dog. overlap wolf dog 0.5. word "wolf" -> wolf.')
    assert set(lib.base.kinds) == {"wolf", "dog"}
    assert lib.base.overlap_items() == [("dog", "wolf", 0.5)]
    assert lookup_word(lib, "wolf") == (CONCEPT, Overlay.concept("wolf"))


def test_impact_declaration():
    lib = load_domain('verb eats impact consume-object 1.0. word "eats" -> eats.')
    (imp,) = lib.impacts_of(Overlay.verb("eats"))
    assert imp.effect == ImpactEffect.CONSUME_OBJECT and imp.magnitude == 1.0


def test_empty_source():
    lib = load_domain("")
    assert not lib.base.kinds and not lib.dictionary


def test_phrase_lookup_merges_word_overlays():
    lib = domain()
    kind, ov = lib.lookup_phrase(["sees", "good"])
    assert kind == VERB
    assert dict(ov.weights) == {"sees": 1.0, "good-manner": 1.0}


def test_weighted_word_entries():
    lib = load_domain('concept deer. concept young. word "fawn" -> deer+young:0.5.')
    assert dict(lib.lookup_word("fawn")[1].weights) == {"deer": 1.0, "young": 0.5}


def test_unknown_word_fails_loudly():
    lib = domain()
    with pytest.raises(UnknownWordError) as info:
        lib.lookup_word("xyzzy")
    assert info.value.word == "xyzzy"


@pytest.mark.parametrize("src, line", [
    ("concept wolf.\noverlap wolf ghost 0.5.", 2),
    ('concept wolf.\n\nword "wolf" -> ghost.', 3),
    ('concept wolf.\nword "w" -> wolf.\nword "w" -> wolf.', 3),
    ("concept wolf.\nconcept wolf.", 2),
    ("verb eats.\nmetaverb says.", 2),
    ("concept wolf.\noverlap wolf wolf 2.", 2),
    ("verb eats impact explode 1.0.", 1),
    ("concept wolf", 1),
    ("concept a.\nverb b.\noverlap a b 0.2.", 3),
])
def test_validation_errors_carry_line(src, line):
    with pytest.raises(DomainError) as info:
        load_domain(src)
    assert info.value.line == line


def test_comments_are_ignored():
    lib = load_domain('# header\nconcept wolf. # trailing\nword "a # b" -> wolf.')
    assert "a # b" in lib.dictionary


def test_fixture_domain_round_trips():
    lib = domain()
    assert load_domain(lib.serialize()) == lib
    assert lib.serialize() == load_domain(lib.serialize()).serialize()


def test_lookup_does_not_mutate():
    lib = domain()
    before = copy.deepcopy(lib)
    lib.lookup_word("wolf")
    lib.lookup_phrase(["sees", "good"])
    with pytest.raises(UnknownWordError):
        lib.lookup_word("nothing-here")
    assert lib == before


atom_names = st.sampled_from(["a", "b", "c", "d", "e"])


@st.composite
def libraries(draw):
    concepts = draw(st.sets(atom_names, min_size=1))
    verbs = draw(st.sets(st.sampled_from(["p", "q", "r"])))
    lines = [f"concept {a}." for a in sorted(concepts)] + [f"verb {v}." for v in sorted(verbs)]
    ws = st.sampled_from([0.1, 0.25, 0.5, 1.0])
    for a in sorted(concepts):
        for b in sorted(concepts):
            if a < b and draw(st.booleans()):
                lines.append(f"overlap {a} {b} {draw(ws)}.")
    for v in sorted(verbs):
        if draw(st.booleans()):
            lines.append(f"verb {v} impact consume-object {draw(ws)}.")
    for i, a in enumerate(sorted(concepts)):
        lines.append(f'word "w{i}" -> {a}:{draw(ws)}.')
    return "\n".join(lines)


@settings(max_examples=60)
@given(libraries())
def test_serialize_round_trip(src):
    lib = load_domain(src)
    again = load_domain(lib.serialize())
    assert again == lib
    assert again.serialize() == lib.serialize()
