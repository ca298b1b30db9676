import io
import json

import pytest

from helpers import AUTOBIOGRAPHY, FIXTURES, autobiography_engine, domain, fixture_text
from shadowstory.cli import Session, SessionConfig, main, read_config_file, run_batch, run_repl
from shadowstory.engine import Engine
from shadowstory.parser import parse_program

DOMAIN = str(FIXTURES / "domain.xd")
AUTO = [str(FIXTURES / name) for name in AUTOBIOGRAPHY]
STORY = str(FIXTURES / "lrrh.xapi")


def batch_args(*extra):
    args = ["run", "--domain", DOMAIN]
    for a in AUTO:
        args += ["--auto", a]
    return args + list(extra)


def test_batch_emits_one_record_per_story_vi(capsys):
    assert main(batch_args("--story", STORY)) == 0
    lines = capsys.readouterr().out.splitlines()
    records = [json.loads(line) for line in lines]
    e = autobiography_engine()
    assert len(records) == len(e.execute(fixture_text("lrrh.xapi")))
    assert len(records) >= len([p for p in parse_program(fixture_text("lrrh.xapi"))
                                if hasattr(p, "subject")])
    for r in records:
        assert set(r) == {"vi", "expectedness", "surprise", "matched", "continuations", "missing"}


def test_batch_dumps_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(batch_args("--story", STORY, "--dump", str(a))) == 0
    assert main(batch_args("--story", STORY, "--dump", str(b))) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["hls.json", "memory.json", "records.jsonl", "shadows.json"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_missing_file_exits_2(capsys):
    assert main(["run", "--domain", "/nonexistent/domain.xd"]) == 2
    assert "no such file" in capsys.readouterr().err
    cfg = SessionConfig(DOMAIN, story="/nonexistent/story.xapi")
    assert run_batch(cfg, io.StringIO()) == 2


def test_story_error_reports_file_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.xapi"
    bad.write_text('$new-scene "A"\nA wolf / walks.\nThe wolf eats.\n')
    assert main(["run", "--domain", DOMAIN, "--story", str(bad)]) == 1
    err = capsys.readouterr().err
    assert f"{bad}:3:" in err


def test_params_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("# tuning\nlambda_s = 0.2\ntop_k=2\n")
    assert read_config_file(str(cfg)) == [("lambda_s", "0.2"), ("top_k", "2")]
    assert main(batch_args("--story", STORY, "--config", str(cfg), "--param", "theta_match=0.7")) == 0
    recs = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert all(len(r["continuations"]) <= 2 for r in recs)
    assert main(["run", "--domain", DOMAIN, "--param", "bogus=1"]) == 1


@pytest.fixture
def session():
    s = Session(autobiography_engine())
    s.handle(fixture_text("lrrh.xapi").split("The wolf / eats")[0])
    return s


def feed(s, text):
    out = ""
    for line in text.splitlines():
        out = s.handle(line)
    return out


def test_repl_predict_and_missing(session):
    rows = session.handle(":predict 3").splitlines()
    assert len(rows) == 3
    assert "says" in rows[0]
    assert session.handle(":missing 2").count("\n") <= 1


def test_repl_sneeze_then_surprise(session):
    out = session.handle("The wolf / sneezes.")
    assert "unexpected" in out
    rep = session.handle(":surprise")
    assert "expectedness=0.0000" in rep
    assert float(rep.split("surprise=")[1]) < 5.0


def test_repl_step_and_listing(session):
    assert session.handle(":step 1.0").startswith("t=")
    assert "Conversation" in session.handle(":scenes")
    assert session.handle(":focus")
    assert session.handle(":shadows wolf").startswith("shadow of ")
    assert "svri" in session.handle(":hls")


def test_repl_errors_keep_the_session(session):
    before = dict(session.engine.focus.instance_weights)
    assert session.handle("The basket / walks.").startswith("error:")
    assert session.handle(":frob").startswith("unknown command")
    assert session.handle(":step x").startswith("error:")
    assert session.handle(":shadows nobody-here").startswith("error:")
    assert dict(session.engine.focus.instance_weights) == before
    assert not session.done


def test_repl_buffers_multiline_statements(session):
    assert session.handle('The wolf / says in scene "Conversation" //') == ""
    assert "QUOTE" in session.handle("  I / is-a / hungry.")


def test_repl_save_load_and_quit(tmp_path, session):
    path = tmp_path / "m.json"
    session.handle(":flush")
    assert session.handle(f":save {path}").startswith("saved")
    assert session.handle(f":load {path}").startswith("loaded")
    assert session.handle(":predict") == "(no predictions)"
    assert session.handle(":quit") == "bye" and session.done


def test_run_repl_reads_until_quit():
    e = autobiography_engine()
    stdin = io.StringIO('$new-scene "Forest"\nA wolf / walks.\n:quit\nA fox / walks.\n')
    out = io.StringIO()
    assert run_repl(e, stdin, out) == 0
    assert "bye" in out.getvalue()
    assert len(e.focus.instances()) == 1


def test_load_keeps_expelled_ids_retired(tmp_path):
    other = tmp_path / "other.json"
    Engine(domain()).save_memory(str(other))
    s = Session(Engine(domain()))
    feed(s, '$new-scene "A"\nA cup / walks.\n:flush')
    gone = set(s.engine.focus.tombstones)
    s.handle(f":load {other}")
    feed(s, '$new-scene "B"\nA cup / walks.')
    assert gone and not gone & s.engine.focus.items.keys()
