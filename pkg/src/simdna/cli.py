"""Command-line workbench: compile, simulate, run-tm, render, check.

Exit codes: 0 ok, 2 input error, 3 nonconfluent instruction, 4 oracle
mismatch.  Every command that takes --out-dir records its invocation in
``manifest.json`` there; outputs carry no timestamps so reruns are
byte-identical.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

from . import compiler, engine, render
from .model import (
    Match,
    RegisterState,
    SchemaError,
    parse_register,
    register_doc,
    serialize_register,
    _canon,
)
from .tm import (
    SpaceBoundViolationError,
    TMError,
    TMSpecError,
    initial_config,
    parse_tm_document,
    tm_step,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONFLUENT = 3
EXIT_ORACLE = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _state_hash(state: RegisterState) -> str:
    return hashlib.sha256(serialize_register(state)).hexdigest()


def _token_doc(tok) -> dict:
    return {"m": tok.domain} if isinstance(tok, Match) else {"o": tok.tag}


def _spec_doc(spec) -> dict:
    return {
        "orientation": spec.orientation.value,
        "tokens": [_token_doc(t) for t in spec.tokens],
    }


def _reaction_doc(r) -> dict:
    if isinstance(r, engine.Attach):
        return {"rule": "attach", "offset": r.offset, "strand": _spec_doc(r.spec)}
    if isinstance(r, engine.Displace):
        return {
            "rule": "displace",
            "offset": r.offset,
            "strand": _spec_doc(r.spec),
            "incumbent": {"offset": r.incumbent.offset, "tokens": [_token_doc(t) for t in r.incumbent.spec.tokens]},
        }
    if isinstance(r, engine.ToeholdExchange):
        return {
            "rule": "exchange",
            "offset": r.offset,
            "strand": _spec_doc(r.spec),
            "incumbent": {"offset": r.incumbent.offset, "tokens": [_token_doc(t) for t in r.incumbent.spec.tokens]},
        }
    if isinstance(r, engine.Cooperative):
        return {
            "rule": "cooperative",
            "left": {"offset": r.left_offset, "strand": _spec_doc(r.left_spec)},
            "right": {"offset": r.right_offset, "strand": _spec_doc(r.right_spec)},
            "incumbent": {"offset": r.incumbent.offset, "tokens": [_token_doc(t) for t in r.incumbent.spec.tokens]},
        }
    return {
        "rule": "detach",
        "remover": _spec_doc(r.remover),
        "target": {"offset": r.target.offset, "tokens": [_token_doc(t) for t in r.target.spec.tokens]},
    }


def _outcome_line(index: int, label: str, outcome: engine.InstructionOutcome) -> bytes:
    doc = {
        "instr": index,
        "label": label,
        "applied": [_reaction_doc(r) for r in outcome.applied],
        "state_hash": _state_hash(outcome.final_state),
        "state": register_doc(outcome.final_state),
    }
    return _canon(doc)


def _write_manifest(out_dir: Path, command: str, argv: list[str], files: dict[str, str]):
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "argv": argv, "files": files}
    (out_dir / "manifest.json").write_bytes(_canon(doc) + b"\n")


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e}") from e


# --- compile ------------------------------------------------------------------


def cmd_compile(args, argv) -> int:
    spec, _extras = parse_tm_document(_read(args.machine))
    compiled = compiler.compile_tm(spec, args.cells)
    payload = compiler.serialize_compiled(compiled) + b"\n"
    stats = compiled.stats
    lines = [
        f"t={stats.t} d={stats.d} cells={stats.s} instructions={stats.instruction_count}",
        " ".join(f"nucleotides(k={k})={stats.nucleotides(k)}" for k in (5, 6, 7)),
    ]
    if args.output:
        Path(args.output).write_bytes(payload)
        print("\n".join(lines))
    else:
        sys.stdout.buffer.write(payload)
        print("\n".join(lines), file=sys.stderr)
    return EXIT_OK


# --- simulate / check -----------------------------------------------------------


def _simulate(args, argv, verify: bool) -> int:
    program = compiler.load_program_file(_read(args.program))
    registers = []
    for path in args.registers:
        st = parse_register(_read(path))
        if st.layout != program.layout:
            raise CliError(f"{path}: register layout does not match the program")
        registers.append(st)

    mode = engine.VerifyConfluent(args.max_states) if verify else engine.Canonical()
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        _write_manifest(
            out_dir,
            "check" if verify and args.iterations == 1 else "simulate",
            argv,
            {"program": args.program, "registers": ",".join(args.registers)},
        )

    labels = [ins.label for ins in program.instructions]
    for i, state in enumerate(registers):
        lines: list[bytes] = []
        try:
            for _ in range(args.iterations):
                state, outcomes = engine.run_program(state, program, mode)
                for k, out in enumerate(outcomes):
                    lines.append(_outcome_line(k + 1, labels[k], out))
        except engine.NonConfluentError as e:
            doc = {
                "register": i,
                "final_a": register_doc(e.state_a),
                "order_a": [_reaction_doc(r) for r in e.order_a],
                "final_b": register_doc(e.state_b),
                "order_b": [_reaction_doc(r) for r in e.order_b],
            }
            if out_dir:
                path = out_dir / f"nonconfluent-{i}.json"
                path.write_bytes(_canon(doc) + b"\n")
                print(f"nonconfluent: register {i}, counterexample in {path}", file=sys.stderr)
            else:
                print(f"nonconfluent: register {i}: {e}", file=sys.stderr)
            return EXIT_NONCONFLUENT
        except engine.StateBudgetExceededError as e:
            print(f"register {i}: {e}", file=sys.stderr)
            return EXIT_NONCONFLUENT
        if out_dir:
            (out_dir / f"trace-{i}.jsonl").write_bytes(b"\n".join(lines) + b"\n")
            (out_dir / f"final-{i}.json").write_bytes(serialize_register(state) + b"\n")
        print(f"register {i}: {_state_hash(state)}")
    return EXIT_OK


def cmd_simulate(args, argv) -> int:
    return _simulate(args, argv, verify=args.verify)


def cmd_check(args, argv) -> int:
    args.iterations = 1
    return _simulate(args, argv, verify=True)


# --- run-tm ---------------------------------------------------------------------


def cmd_run_tm(args, argv) -> int:
    spec, extras = parse_tm_document(_read(args.machine))
    input_str = args.input if args.input is not None else extras.get("input", "")
    try:
        config = initial_config(spec, input_str, args.cells)
    except TMError as e:
        raise CliError(str(e)) from e
    compiled = compiler.compile_tm(spec, args.cells)
    mode = engine.VerifyConfluent(args.max_states) if args.verify else engine.Canonical()

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        _write_manifest(out_dir, "run-tm", argv, {"machine": args.machine, "input": input_str})

    state, lossy = compiler.encode_config(spec, compiled.scheme, config, args.cells)
    if lossy:
        print("note: initial configuration is not head-representable", file=sys.stderr)
    labels = [ins.label for ins in compiled.program.instructions]
    trace_lines: list[bytes] = []
    decoded = compiler.decode_register(spec, compiled.scheme, state)
    current = config
    for it in range(args.max_iters):
        if isinstance(decoded, compiler.TapeOnly):
            break
        expected = None
        if args.oracle:
            try:
                expected = tm_step(spec, current)
            except SpaceBoundViolationError as e:
                # the machine would leave the tape: terminal for the run, not
                # a simulation mismatch
                print(f"stopped: {e}", file=sys.stderr)
                break
        state, outcomes = engine.run_program(state, compiled.program, mode)
        for k, out in enumerate(outcomes):
            trace_lines.append(_outcome_line(k + 1, labels[k], out))
        try:
            decoded = compiler.decode_register(spec, compiled.scheme, state)
        except compiler.DecodeError as e:
            print(f"iteration {it + 1}: register no longer decodes: {e}", file=sys.stderr)
            return EXIT_ORACLE
        if args.oracle:
            if not compiler.configs_equivalent(spec, expected, decoded):
                print(
                    f"oracle mismatch at iteration {it + 1}: "
                    f"machine says {expected}, register decodes to {decoded}",
                    file=sys.stderr,
                )
                return EXIT_ORACLE
            if expected.is_terminal or isinstance(decoded, compiler.TapeOnly):
                break
            current = decoded
        elif isinstance(decoded, compiler.TapeOnly):
            break
        else:
            current = decoded

    tape = decoded.tape_str()
    if out_dir:
        (out_dir / "trace.jsonl").write_bytes(b"\n".join(trace_lines) + b"\n" if trace_lines else b"")
        (out_dir / "final.json").write_bytes(serialize_register(state) + b"\n")
    print(tape)
    return EXIT_OK


# --- render ---------------------------------------------------------------------


def _scene_from_register(doc_bytes: bytes) -> render.RenderScene:
    return render.RenderScene(parse_register(doc_bytes))


def _scenes_from_trace(text: bytes) -> tuple[list[render.RenderScene], list[int]]:
    scenes = []
    counts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as e:
            raise CliError(f"trace line {lineno}: {e}") from e
        state = parse_register(_canon(doc["state"]))
        label = f"#{doc.get('instr', lineno)} {doc.get('label', '')}".rstrip()
        scenes.append(render.RenderScene(state, (), label))
        counts.append(len(doc.get("applied", [])))
    if not scenes:
        raise CliError("trace file carries no outcomes")
    return scenes, counts


def cmd_render(args, argv) -> int:
    raw = _read(args.input)
    style = render.load_style(args.style)
    first = raw.lstrip()[:1]
    try:
        if b"\n" in raw.strip() and first == b"{" and b'"instr"' in raw.splitlines()[0]:
            scenes, counts = _scenes_from_trace(raw)
            payload = render.render_trace(scenes, every=args.every, reaction_counts=counts, style=style)
            if args.format == "text":
                payload = "\n".join(render.render_text(s) for s in scenes)
        else:
            doc = json.loads(raw)
            if "strands" in doc and "layout" in doc:
                scene = _scene_from_register(raw)
            else:
                raise CliError(f"{args.input}: not a register or trace file")
            payload = (
                render.render_text(scene)
                if args.format == "text"
                else render.render_svg(scene, style)
            )
    except SchemaError as e:
        raise CliError(f"{args.input}: {e}") from e
    if args.output:
        Path(args.output).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return EXIT_OK


# --- entry ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="simdna",
        description="strand-displacement register workbench",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a Turing machine file to a program")
    c.add_argument("machine")
    c.add_argument("--cells", "-s", type=int, required=True, help="tape cells")
    c.add_argument("--output", "-o", help="program JSON path (default: stdout)")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("simulate", help="run a program over register files")
    s.add_argument("program")
    s.add_argument("registers", nargs="+")
    s.add_argument("--iterations", "-n", type=int, default=1)
    s.add_argument("--verify", action="store_true", help="check confluence of every instruction")
    s.add_argument("--max-states", type=int, default=100_000)
    s.add_argument("--out-dir", help="write traces and final registers here")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("check", help="simulate --verify --iterations 1")
    k.add_argument("program")
    k.add_argument("registers", nargs="+")
    k.add_argument("--max-states", type=int, default=100_000)
    k.add_argument("--out-dir")
    k.set_defaults(func=cmd_check, verify=True, iterations=1)

    r = sub.add_parser("run-tm", help="compile, encode, iterate, decode")
    r.add_argument("machine")
    r.add_argument("--input", help="binary input (default: the file's input)")
    r.add_argument("--cells", "-s", type=int, required=True)
    r.add_argument("--max-iters", type=int, default=256)
    r.add_argument("--oracle", action="store_true", help="cross-check each pass against the interpreter")
    r.add_argument("--verify", action="store_true", help="confluence-check every instruction")
    r.add_argument("--max-states", type=int, default=100_000)
    r.add_argument("--out-dir")
    r.set_defaults(func=cmd_run_tm)

    d = sub.add_parser("render", help="draw a register or trace file")
    d.add_argument("input")
    d.add_argument("--format", choices=("svg", "text"), default="svg")
    d.add_argument("--every", type=int, help="panel stride for traces")
    d.add_argument("--style", help="style table JSON (also: SIMDNA_STYLE)")
    d.add_argument("--output", "-o")
    d.set_defaults(func=cmd_render)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args, argv)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (SchemaError, TMSpecError, TMError, compiler.CompileError, compiler.DecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except engine.NonConfluentError as e:
        print(f"nonconfluent: {e}", file=sys.stderr)
        return EXIT_NONCONFLUENT
    except engine.EngineError as e:
        # livelocks and budget blowups are program pathologies, like
        # nonconfluence: the run has no well-defined outcome
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONCONFLUENT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
