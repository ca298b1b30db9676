import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowstory.parser import (
    Directive,
    PartForm,
    PartRef,
    Statement,
    VerbPhrase,
    XapiSyntaxError,
    parse_program,
    unparse,
)


def one(src):
    (item,) = parse_program(src)
    return item


def test_empty_program():
    assert parse_program("") == []
    assert parse_program("# only a comment\n\n") == []


def test_quote_statement_shape():
    st_ = one('"LRRH" / says in scene "GrandmasHouse" //\n  I / is-a / afraid.')
    assert st_.subject.form == PartForm.PROPER and st_.subject.name == "LRRH"
    assert st_.verb == VerbPhrase(("says",), scene="GrandmasHouse")
    assert st_.obj is None
    q = st_.quoted
    assert q.subject.form == PartForm.PRONOUN_I
    assert q.verb.words == ("is-a",)
    assert q.obj.words == ("afraid",)


def test_scene_keyword_is_optional():
    a = one('The wolf / says in scene "Conversation" // I / sleeps.')
    b = one('The wolf / says in "Conversation" // I / sleeps.')
    assert a == b


def test_sv_statement():
    st_ = one("The wolf / sneezes.")
    assert st_.subject == PartRef(PartForm.DEFINITE, ("wolf",), "the")
    assert st_.verb.words == ("sneezes",) and st_.obj is None and st_.quoted is None


def test_chain_and_wh_question():
    st_ = one('The girl / asks in scene "Conversation"//\n'
              '   mouth -- of -- "Grandma" / wh is-a / big?')
    assert st_.terminator == "?"
    q = st_.quoted
    assert q.subject.form == PartForm.REL_CHAIN
    assert q.subject.head.words == ("mouth",) and q.subject.relation == "of"
    assert q.subject.tail.name == "Grandma"
    assert q.verb.wh and q.verb.words == ("is-a",)


def test_multiword_verb_phrase():
    st_ = one('The wolf / says in scene "Conversation"//\n'
              '  eyes -- of -- I / sees good / the girl.')
    assert st_.quoted.verb.words == ("sees", "good")
    assert st_.quoted.subject.tail.form == PartForm.PRONOUN_I
    assert one("The wolf / thus takes / the basket.").verb.words == ("thus", "takes")


def test_text_literal_and_indefinite():
    st_ = one('"LRRH" / utters / text "Bless you".')
    assert st_.obj == PartRef(PartForm.TEXT_LITERAL, name="Bless you")
    assert one("The FocusI2 / act / an InstanceNew.").obj.form == PartForm.INDEFINITE


def test_directives():
    items = parse_program('$new-scene "Forest"\n$link-scenes "A" succession "B"\n$summary-end\n')
    assert items[0] == Directive("new-scene", ("Forest",), (True,))
    assert items[1].args == ("A", "succession", "B")
    assert items[2].name == "summary-end" and items[2].args == ()


@pytest.mark.parametrize("src, line, col", [
    ("The wolf / eats / the girl?", 1, 27),
    ("The wolf / wh eats / what.", 1, 26),
    ('"LRRH / walks.', 1, 1),
    ("The wolf eats.", 1, 14),
    ("\n\nThe wolf / eats / the -- girl.", 3, None),
    ("The wolf / says // I / is-a / big", 1, None),
])
def test_syntax_errors_are_located(src, line, col):
    with pytest.raises(XapiSyntaxError) as info:
        parse_program(src)
    assert info.value.line == line
    if col is not None:
        assert info.value.col == col


def test_positions_are_recorded():
    items = parse_program("\n  The wolf / sneezes.")
    assert (items[0].line, items[0].col) == (2, 3)


# ---- round trip ---------------------------------------------------------

words = st.sampled_from(["wolf", "girl", "big", "eyes", "mouth", "basket", "hungry"])
verbs = st.sampled_from(["eats", "sees", "is-a", "walks", "thus", "good"])
names = st.text(alphabet="abcXYZ _'", min_size=1, max_size=8)


def simple_parts():
    return st.one_of(
        st.builds(lambda w, a: PartRef(PartForm.INDEFINITE if a == "a" else PartForm.DEFINITE,
                                       tuple(w), a),
                  st.lists(words, min_size=1, max_size=2), st.sampled_from(["the", "a", None])),
        st.builds(lambda n: PartRef(PartForm.PROPER, name=n), names),
        st.just(PartRef(PartForm.PRONOUN_I)),
        st.builds(lambda n: PartRef(PartForm.TEXT_LITERAL, name=n), names),
    )


def fix_article(p):
    # bare words read back as DEFINITE without an article
    if p.form == PartForm.INDEFINITE and p.article is None:
        return PartRef(PartForm.DEFINITE, p.words)
    return p


parts = st.one_of(
    simple_parts().map(fix_article),
    st.builds(lambda h, t: PartRef(PartForm.REL_CHAIN, head=fix_article(h), relation="of",
                                   tail=fix_article(t)),
              simple_parts().filter(lambda p: p.form in (PartForm.DEFINITE, PartForm.INDEFINITE)),
              simple_parts()),
)


@st.composite
def clauses(draw, wh=False):
    return (draw(parts), VerbPhrase(tuple(draw(st.lists(verbs, min_size=1, max_size=2))), wh),
            draw(st.one_of(st.none(), parts)))


@st.composite
def statements(draw):
    subj, verb, obj = draw(clauses())
    if draw(st.booleans()):
        qs, qv, qo = draw(clauses())
        wh = draw(st.booleans())
        quoted = Statement(qs, VerbPhrase(qv.words, wh), qo, terminator="?" if wh else ".")
        scene = draw(names)
        return Statement(subj, VerbPhrase(("says",), scene=scene), None, quoted,
                         "?" if wh else ".")
    wh = draw(st.booleans())
    return Statement(subj, VerbPhrase(verb.words, wh), obj, terminator="?" if wh else ".")


@settings(max_examples=150)
@given(st.lists(statements(), min_size=1, max_size=4))
def test_unparse_parse_round_trip(program):
    text = "\n".join(unparse(s) for s in program)
    again = parse_program(text)
    assert again == program
    assert parse_program("\n".join(unparse(s) for s in again)) == again
