"""Command line: batch runs over Xapi corpora and an interactive REPL."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .domain import DomainError, load_domain
from .engine import Engine, EngineConfig, EngineError
from .focus import FocusError
from .hls import Purpose
from .memory import MemoryStoreError
from .parser import XapiSyntaxError, parse_program
from .resolve import ResolutionError
from .shadows import ShadowError

USER_ERRORS = (XapiSyntaxError, ResolutionError, EngineError, DomainError, FocusError,
               ShadowError, MemoryStoreError)


@dataclass
class SessionConfig:
    domain: str
    autobiography: list[str] = field(default_factory=list)
    story: str | None = None
    params: list[tuple[str, str]] = field(default_factory=list)
    seed: int = 0
    dump: str | None = None

    def engine_config(self) -> EngineConfig:
        cfg = EngineConfig()
        for key, value in self.params:
            cfg.set(key, value)
        return cfg


def read_config_file(path: str) -> list[tuple[str, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise EngineError(f"{path}:{n}: expected key=value")
            out.append((key.strip(), value.strip()))
    return out


def _parse_param(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    return key.strip(), value.strip()


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _located(path: str, exc: Exception) -> str:
    line = getattr(exc, "line", 0) or 0
    msg = str(exc)
    # the exception text already leads with line:col; keep a single location prefix
    if line and msg.startswith(f"{line}:"):
        return f"{path}:{msg}"
    return f"{path}:{line}: {msg}" if line else f"{path}: {msg}"


def build_engine(config: SessionConfig) -> Engine:
    lib = load_domain(_read(config.domain))
    engine = Engine(lib, config.engine_config())
    for path in config.autobiography:
        try:
            engine.execute(_read(path))
        except USER_ERRORS as exc:
            raise EngineError(_located(path, exc)) from None
        engine.flush()
    return engine


def record_json(engine: Engine, rec) -> dict:
    return rec.to_json(engine.prediction_json(Purpose.CONTINUATION),
                       engine.prediction_json(Purpose.MISSING_ACTION))


def run_batch(config: SessionConfig, out=None) -> int:
    out = out or sys.stdout
    for path in [config.domain, *config.autobiography, *([config.story] if config.story else [])]:
        if not os.path.exists(path):
            print(f"error: no such file: {path}", file=sys.stderr)
            return 2
    try:
        engine = build_engine(config)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    records = []
    if config.story:
        try:
            program = parse_program(_read(config.story))
            for item in program:
                if hasattr(item, "subject"):
                    for rec in engine.statement(item):
                        records.append(record_json(engine, rec))
                else:
                    engine.directive(item)
        except USER_ERRORS as exc:
            print(f"error: {_located(config.story, exc)}", file=sys.stderr)
            return 1
    lines = [json.dumps(r, sort_keys=True) for r in records]
    if config.dump:
        os.makedirs(config.dump, exist_ok=True)
        with open(os.path.join(config.dump, "records.jsonl"), "w", encoding="utf-8") as fh:
            fh.write("".join(line + "\n" for line in lines))
        with open(os.path.join(config.dump, "hls.json"), "w", encoding="utf-8") as fh:
            json.dump(engine.hls.dump(), fh, sort_keys=True)
        with open(os.path.join(config.dump, "shadows.json"), "w", encoding="utf-8") as fh:
            json.dump(engine.shadows.snapshot(), fh, sort_keys=True)
        engine.save_memory(os.path.join(config.dump, "memory.json"))
    else:
        for line in lines:
            print(line, file=out)
    return 0


HELP = """\
Xapi statements and $directives are executed directly.  Commands:
  :predict [k]     top-k continuation predictions
  :missing [k]     top-k missing-action inferences
  :shadows <ref>   shadow of a focus item (id, noun or name)
  :hls             all headless shadows with their supports
  :surprise        expectedness and surprise of the last VI
  :step <dt>       advance story time
  :scenes          list scenes
  :focus           list focus items and weights
  :flush           move the focus to memory and end the episode
  :save <path>     save the autobiographical memory
  :load <path>     restart on a saved memory
  :quit            leave"""


class Session:
    """REPL state; ``handle`` maps one input line to printable output."""

    def __init__(self, engine: Engine) -> None:
        self.engine = engine
        self.buffer: list[str] = []
        self.done = False

    def handle(self, line: str) -> str:
        stripped = line.strip()
        if not self.buffer and stripped.startswith(":"):
            return self.command(stripped)
        if not stripped and not self.buffer:
            return ""
        self.buffer.append(line)
        text = "\n".join(self.buffer)
        if not (stripped.startswith("$") and len(self.buffer) == 1) and not _complete(text):
            return ""
        self.buffer = []
        try:
            records = self.engine.execute(text + "\n")
        except USER_ERRORS as exc:
            return f"error: {exc}"
        out = []
        for rec in records:
            tag = "expected" if rec.expectedness > 0 else "unexpected"
            out.append(f"{rec.vi.id} {rec.vi.kind.value} {tag} "
                       f"expectedness={rec.expectedness:.3f} surprise={rec.surprise:.3f}")
        return "\n".join(out)

    def command(self, text: str) -> str:
        name, *args = text.split()
        e = self.engine
        try:
            if name == ":quit":
                self.done = True
                return "bye"
            if name in (":predict", ":missing"):
                k = int(args[0]) if args else e.config.top_k
                purpose = Purpose.CONTINUATION if name == ":predict" else Purpose.MISSING_ACTION
                rows = e.predict(purpose, k)
                if not rows:
                    return "(no predictions)"
                return "\n".join(f"{s:8.4f}  {e.render_template(t)}" for t, s in rows)
            if name == ":shadows":
                if len(args) != 1:
                    return "usage: :shadows <ref>"
                sh = e.shadows.shadow(e.resolve_ref(args[0]))
                body = sorted(sh.body.items(), key=lambda kv: (-kv[1], kv[0]))
                lines = [f"shadow of {sh.head}  pool={sh.pool:.4f}"]
                lines += [f"  {m:>8}  {w:.4f}" for m, w in body]
                return "\n".join(lines)
            if name == ":hls":
                hls = e.hls.headless_shadows()
                if not hls:
                    return "(no headless shadows)"
                return "\n".join(
                    f"cont={h.support[Purpose.CONTINUATION]:.4f} "
                    f"miss={h.support[Purpose.MISSING_ACTION]:.4f}  "
                    f"{e.render_template(h.template)}  ({len(h.svris)} svri)"
                    for h in hls)
            if name == ":surprise":
                if not e.records:
                    return "no VI yet"
                rec = e.records[-1]
                return (f"{rec.vi.id}: expectedness={rec.expectedness:.4f} "
                        f"surprise={rec.surprise:.4f}")
            if name == ":step":
                if len(args) != 1:
                    return "usage: :step <dt>"
                rep = e.step(float(args[0]))
                return (f"t={e.clock:g} substeps={rep.substeps} "
                        f"total|dw|={rep.total_delta:.4f} shadows={len(rep.delta)}")
            if name == ":scenes":
                rows = [f"{sid}  {label}" + ("  *" if sid == e.current_scene else "")
                        for sid, label in e.scenes.items()]
                return "\n".join(rows) or "(no scenes)"
            if name == ":focus":
                rows = [f"{i}  {w:.4f}" for i, w in e.focus.instance_weights.items()]
                rows += [f"{v}  {w:.4f}" for v, w in e.focus.vi_weights.items()]
                return "\n".join(rows) or "(empty focus)"
            if name == ":flush":
                e.flush()
                return f"memory holds {len(e.memory)} items"
            if name == ":save":
                if len(args) != 1:
                    return "usage: :save <path>"
                e.save_memory(args[0])
                return f"saved {len(e.memory)} items to {args[0]}"
            if name == ":load":
                if len(args) != 1:
                    return "usage: :load <path>"
                self.engine = Engine.with_memory_file(e.lib, args[0], e.config)
                self.engine.carry_over(e)
                return f"loaded {len(self.engine.memory)} items"
            if name == ":help":
                return HELP
        except USER_ERRORS as exc:
            return f"error: {exc}"
        except (ValueError, OSError, KeyError) as exc:
            return f"error: {exc}"
        return f"unknown command {name}\n{HELP}"


def _complete(text: str) -> bool:
    """True when ``text`` ends with a statement terminator outside a string."""
    in_str = False
    last = ""
    for ch in text:
        if ch == '"':
            in_str = not in_str
        elif not in_str and not ch.isspace():
            last = ch
    return not in_str and last in ".?!"


def run_repl(engine: Engine, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    session = Session(engine)
    interactive = stdin.isatty()
    while not session.done:
        if interactive:
            stdout.write("... " if session.buffer else "> ")
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        out = session.handle(line.rstrip("\n"))
        if out:
            print(out, file=stdout)
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="engine", description="Shadow-based story understanding.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "repl"):
        sp = sub.add_parser(name)
        sp.add_argument("--domain", required=True, help="domain library file")
        sp.add_argument("--auto", action="append", default=[],
                        help="autobiography corpus (repeatable, ingested in order)")
        sp.add_argument("--param", action="append", default=[], type=_parse_param,
                        help="parameter override k=v (repeatable)")
        sp.add_argument("--config", help="key=value parameter file")
        if name == "run":
            sp.add_argument("--story", help="story to follow VI by VI")
            sp.add_argument("--dump", help="directory for JSON dumps (default: stdout)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    for path in [args.domain, *args.auto, *([args.config] if args.config else [])]:
        if not os.path.exists(path):
            print(f"error: no such file: {path}", file=sys.stderr)
            return 2
    params = []
    try:
        if args.config:
            params.extend(read_config_file(args.config))
        params.extend(args.param)
        config = SessionConfig(args.domain, list(args.auto), getattr(args, "story", None),
                               params, dump=getattr(args, "dump", None))
        config.engine_config()
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command == "run":
        return run_batch(config)
    try:
        engine = build_engine(config)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run_repl(engine)


if __name__ == "__main__":
    sys.exit(main())
