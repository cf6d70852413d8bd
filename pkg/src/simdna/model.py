"""Register, strand, instruction, and program data model.

A register is one long bottom strand divided into cells of ``d`` domains
each; position ``p`` (0-indexed, left to right) carries the starred
complement of domain ``(p mod d) + 1``.  Top strands are token sequences in
left-to-right spatial order; a Match token can pair only with a register
position carrying its domain, an Ortho token never pairs with the register.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Union


class SchemaError(ValueError):
    """Raised when a program/register document is malformed."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class Orientation(Enum):
    FORWARD = "fwd"
    REVERSE = "rev"


@dataclass(frozen=True)
class Match:
    """Token that hybridizes at register positions carrying its domain."""

    domain: int


@dataclass(frozen=True)
class Ortho:
    """Overhang token orthogonal to every register domain; never binds."""

    tag: str


Token = Union[Match, Ortho]


def token_key(tok: Token) -> tuple:
    if isinstance(tok, Match):
        return (0, tok.domain, "")
    return (1, 0, tok.tag)


@dataclass(frozen=True)
class RegisterLayout:
    """Geometry of the bottom strand: ``cells`` cells of ``domains_per_cell``."""

    cells: int
    domains_per_cell: int

    def __post_init__(self):
        if self.cells < 1:
            raise ValueError("cells must be >= 1")
        if self.domains_per_cell < 2:
            raise ValueError("domains_per_cell must be >= 2")

    @property
    def total_positions(self) -> int:
        return self.cells * self.domains_per_cell

    def domain_at(self, position: int) -> int:
        """Domain index (1-based) exposed at an absolute register position."""
        return position % self.domains_per_cell + 1

    def contains(self, position: int) -> bool:
        return 0 <= position < self.total_positions


@dataclass(frozen=True)
class StrandSpec:
    """A strand species: token sequence (left to right) plus orientation."""

    tokens: tuple[Token, ...]
    orientation: Orientation = Orientation.FORWARD

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("strand must have at least one token")

    @property
    def is_forward(self) -> bool:
        return self.orientation is Orientation.FORWARD

    @property
    def has_ortho(self) -> bool:
        return any(isinstance(t, Ortho) for t in self.tokens)

    def sort_key(self) -> tuple:
        return (self.orientation.value, tuple(token_key(t) for t in self.tokens))


def fwd(*tokens: Token) -> StrandSpec:
    return StrandSpec(tuple(tokens), Orientation.FORWARD)


def rev(*tokens: Token) -> StrandSpec:
    return StrandSpec(tuple(tokens), Orientation.REVERSE)


@dataclass(frozen=True)
class BoundStrand:
    """A forward strand sitting on the register with its leftmost token over
    ``offset``.  Edge tokens may hang off either register end; they never bind.
    """

    spec: StrandSpec
    offset: int

    def bound_positions(self, layout: RegisterLayout) -> frozenset[int]:
        pos = []
        for j, tok in enumerate(self.spec.tokens):
            p = self.offset + j
            if (
                isinstance(tok, Match)
                and layout.contains(p)
                and layout.domain_at(p) == tok.domain
            ):
                pos.append(p)
        return frozenset(pos)

    def sort_key(self) -> tuple:
        return (self.offset, self.spec.sort_key())


@dataclass(frozen=True)
class RegisterState:
    """Canonical register configuration: the strand set, sorted."""

    layout: RegisterLayout
    strands: tuple[BoundStrand, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.strands, key=BoundStrand.sort_key))
        object.__setattr__(self, "strands", ordered)

    def with_strands(self, strands) -> "RegisterState":
        return RegisterState(self.layout, tuple(strands))


@dataclass(frozen=True)
class Instruction:
    """One stage: a set of strand species added in large excess, then washed."""

    species: tuple[StrandSpec, ...]
    label: str = ""

    def __post_init__(self):
        deduped = tuple(sorted(set(self.species), key=StrandSpec.sort_key))
        object.__setattr__(self, "species", deduped)


@dataclass(frozen=True)
class Program:
    layout: RegisterLayout
    instructions: tuple[Instruction, ...]


def validate_state(state: RegisterState) -> list[str]:
    """Check RegisterState invariants; returns human-readable violations.

    Violations are data, not failures: the empty list means the state is
    well-formed (every strand stably bound, forward, and no register position
    owned by two strands).
    """
    violations = []
    layout = state.layout
    seen: dict[int, BoundStrand] = {}
    for bs in state.strands:
        if not bs.spec.is_forward:
            violations.append(f"reverse strand bound at offset {bs.offset}")
        bound = bs.bound_positions(layout)
        if len(bound) < 2:
            violations.append(
                f"strand at offset {bs.offset} bound by {len(bound)} domain(s) "
                f"(positions {sorted(bound)}); needs at least two"
            )
        for p in bound:
            if p in seen:
                violations.append(
                    f"position {p} bound by two strands "
                    f"(offsets {seen[p].offset} and {bs.offset})"
                )
            else:
                seen[p] = bs
    return violations


# --- JSON round-trip -------------------------------------------------------
#
# Program file:  {"layout": {"cells": s, "domains_per_cell": d},
#                 "instructions": [{"label": str, "strands": [strand, ...]}]}
# Register file: {"layout": ..., "strands": [{"offset": int, "tokens": [...]}]}
# A strand in a program is {"orientation": "fwd"|"rev", "tokens": [...]};
# tokens are {"m": int} or {"o": str}.  Canonical output sorts object keys
# and carries no insignificant whitespace.


def _canon(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise SchemaError(path, message)


def _load_json(text: bytes, path: str):
    try:
        return json.loads(text.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SchemaError(path, f"not valid UTF-8 JSON: {e}") from e


def _parse_layout(doc, path: str) -> RegisterLayout:
    _expect(isinstance(doc, dict), path, "layout must be an object")
    for key in ("cells", "domains_per_cell"):
        _expect(key in doc, path, f"missing key {key!r}")
        _expect(
            isinstance(doc[key], int) and not isinstance(doc[key], bool),
            f"{path}.{key}",
            "must be an integer",
        )
    _expect(doc["cells"] >= 1, f"{path}.cells", "must be >= 1")
    _expect(doc["domains_per_cell"] >= 2, f"{path}.domains_per_cell", "must be >= 2")
    extra = set(doc) - {"cells", "domains_per_cell"}
    _expect(not extra, path, f"unknown keys {sorted(extra)}")
    return RegisterLayout(doc["cells"], doc["domains_per_cell"])


def _parse_tokens(doc, path: str, d: int) -> tuple[Token, ...]:
    _expect(isinstance(doc, list), path, "tokens must be an array")
    _expect(len(doc) >= 1, path, "token list must be nonempty")
    out = []
    for i, tok in enumerate(doc):
        tpath = f"{path}[{i}]"
        _expect(isinstance(tok, dict) and len(tok) == 1, tpath, 'must be {"m": int} or {"o": str}')
        if "m" in tok:
            m = tok["m"]
            _expect(isinstance(m, int) and not isinstance(m, bool), tpath, "domain index must be an integer")
            _expect(1 <= m <= d, tpath, f"domain index {m} out of range 1..{d}")
            out.append(Match(m))
        elif "o" in tok:
            _expect(isinstance(tok["o"], str) and tok["o"], tpath, "overhang tag must be a nonempty string")
            out.append(Ortho(tok["o"]))
        else:
            raise SchemaError(tpath, 'must be {"m": int} or {"o": str}')
    return tuple(out)


def parse_program(text: bytes) -> Program:
    doc = _load_json(text, "$")
    _expect(isinstance(doc, dict), "$", "top level must be an object")
    _expect("layout" in doc, "$", "missing key 'layout'")
    _expect("instructions" in doc, "$", "missing key 'instructions'")
    layout = _parse_layout(doc["layout"], "$.layout")
    d = layout.domains_per_cell
    instrs_doc = doc["instructions"]
    _expect(isinstance(instrs_doc, list), "$.instructions", "must be an array")
    instructions = []
    for i, idoc in enumerate(instrs_doc):
        ipath = f"$.instructions[{i}]"
        _expect(isinstance(idoc, dict), ipath, "must be an object")
        label = idoc.get("label", "")
        _expect(isinstance(label, str), f"{ipath}.label", "must be a string")
        strands_doc = idoc.get("strands", [])
        _expect(isinstance(strands_doc, list), f"{ipath}.strands", "must be an array")
        species = []
        for k, sdoc in enumerate(strands_doc):
            spath = f"{ipath}.strands[{k}]"
            _expect(isinstance(sdoc, dict), spath, "must be an object")
            orient = sdoc.get("orientation", "fwd")
            _expect(orient in ("fwd", "rev"), f"{spath}.orientation", 'must be "fwd" or "rev"')
            tokens = _parse_tokens(sdoc.get("tokens"), f"{spath}.tokens", d)
            species.append(StrandSpec(tokens, Orientation(orient)))
        instructions.append(Instruction(tuple(species), label))
    return Program(layout, tuple(instructions))


def _token_doc(tok: Token) -> dict:
    if isinstance(tok, Match):
        return {"m": tok.domain}
    return {"o": tok.tag}


def _layout_doc(layout: RegisterLayout) -> dict:
    return {"cells": layout.cells, "domains_per_cell": layout.domains_per_cell}


def program_doc(p: Program) -> dict:
    return {
        "layout": _layout_doc(p.layout),
        "instructions": [
            {
                "label": ins.label,
                "strands": [
                    {
                        "orientation": s.orientation.value,
                        "tokens": [_token_doc(t) for t in s.tokens],
                    }
                    for s in ins.species
                ],
            }
            for ins in p.instructions
        ],
    }


def serialize_program(p: Program) -> bytes:
    return _canon(program_doc(p))


def parse_register(text: bytes) -> RegisterState:
    doc = _load_json(text, "$")
    _expect(isinstance(doc, dict), "$", "top level must be an object")
    _expect("layout" in doc, "$", "missing key 'layout'")
    _expect("strands" in doc, "$", "missing key 'strands'")
    layout = _parse_layout(doc["layout"], "$.layout")
    strands_doc = doc["strands"]
    _expect(isinstance(strands_doc, list), "$.strands", "must be an array")
    strands = []
    for i, sdoc in enumerate(strands_doc):
        spath = f"$.strands[{i}]"
        _expect(isinstance(sdoc, dict), spath, "must be an object")
        _expect("offset" in sdoc, spath, "missing key 'offset'")
        off = sdoc["offset"]
        _expect(isinstance(off, int) and not isinstance(off, bool), f"{spath}.offset", "must be an integer")
        tokens = _parse_tokens(sdoc.get("tokens"), f"{spath}.tokens", layout.domains_per_cell)
        strands.append(BoundStrand(StrandSpec(tokens, Orientation.FORWARD), off))
    state = RegisterState(layout, tuple(strands))
    bad = validate_state(state)
    if bad:
        raise SchemaError("$.strands", "; ".join(bad))
    return state


def register_doc(state: RegisterState) -> dict:
    return {
        "layout": _layout_doc(state.layout),
        "strands": [
            {"offset": bs.offset, "tokens": [_token_doc(t) for t in bs.spec.tokens]}
            for bs in state.strands
        ],
    }


def serialize_register(state: RegisterState) -> bytes:
    return _canon(register_doc(state))
