"""Compiler from a 3-symbol Turing machine to a strand-displacement program.

Cell layout: a machine with ``t`` transitions uses ``d = 2t + 8`` domains per
cell.  Transition input number ``i`` (1-based, in a fixed deterministic
order) owns the two consecutive domains ``{2i-1, 2i}``; the rightmost eight
domains form the symbol region, whose nick pattern stores the cell's symbol.
The head cell is the only cell with exposed domains: the region of the
applicable (state, symbol) input is uncovered and the symbol region carries a
single 8-domain cover instead of a pattern.

One pass of the compiled instruction list advances every encoded register by
exactly one machine step.  Registers are protected from instruction sublists
that do not apply to them by plug strands: a pre-plug covers the exposed
region until its transition's sublist runs, and a post-plug covers the next
transition's region from the moment a register has been processed until the
final deprotecting instruction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import engine
from .model import (
    BoundStrand,
    Instruction,
    Match,
    Ortho,
    Program,
    RegisterLayout,
    RegisterState,
    StrandSpec,
    fwd,
    program_doc,
    rev,
    _canon,
    _expect,
    _load_json,
)
from .tm import TMConfig, TMSpec, TMStatus, TransitionKey, tm_step

SYMBOL_RANK = {"0": 0, "1": 1, "_": 2}

# Nick patterns over the 8-domain symbol region, as (start, length) spans,
# 1-based within the region.  Every span is at least two domains (stability)
# and the three patterns differ in their first and last span, so a cascade
# entering from either end can tell them apart.
SYMBOL_PATTERNS: dict[str, tuple[tuple[int, int], ...]] = {
    "_": ((1, 4), (5, 4)),
    "0": ((1, 2), (3, 6)),
    "1": ((1, 6), (7, 2)),
}


class CompileError(Exception):
    pass


class SchemeError(CompileError):
    pass


class DecodeError(Exception):
    pass


class UnrecognizedPatternError(DecodeError):
    def __init__(self, cell: int, detail: str = ""):
        self.cell = cell
        super().__init__(f"cell {cell}: unrecognized strand arrangement{': ' + detail if detail else ''}")


class MultipleHeadsError(DecodeError):
    def __init__(self, cells: list[int]):
        self.cells = cells
        super().__init__(f"exposed transition regions in more than one cell: {cells}")


@dataclass(frozen=True)
class TapeOnly:
    """Decoded register with no exposed region: a halted or stuck machine."""

    tape: tuple[str, ...]

    def tape_str(self) -> str:
        return "".join(self.tape)


@dataclass(frozen=True)
class CellScheme:
    transition_order: tuple[TransitionKey, ...]

    @property
    def t(self) -> int:
        return len(self.transition_order)

    @property
    def d(self) -> int:
        return 2 * self.t + 8

    def region_index(self, key: TransitionKey) -> int:
        return self.transition_order.index(key) + 1

    def y(self, k: int) -> int:
        """Domain number of the k-th symbol-region domain (k in 1..8)."""
        return 2 * self.t + k

    # --- strand species (tokens are cell-local domain numbers) -----------

    def plain_cover(self, i: int) -> StrandSpec:
        return fwd(Match(2 * i - 1), Match(2 * i))

    @property
    def head_cover(self) -> StrandSpec:
        return fwd(*(Match(self.y(k)) for k in range(1, 9)))

    def pattern_strands(self, symbol: str) -> tuple[tuple[int, StrandSpec], ...]:
        """(cell-local offset, strand) pairs covering the symbol region."""
        out = []
        for start, length in SYMBOL_PATTERNS[symbol]:
            toks = tuple(Match(self.y(k)) for k in range(start, start + length))
            out.append((self.y(start) - 1, fwd(*toks)))
        return tuple(out)

    def span_tokens(self, symbol: str, which: int) -> tuple[int, ...]:
        """Domain numbers of span 0 (left) or 1 (right) of a pattern."""
        start, length = SYMBOL_PATTERNS[symbol][which]
        return tuple(self.y(k) for k in range(start, start + length))

    def pre_plug(self, key: TransitionKey) -> StrandSpec:
        i = self.region_index(key)
        return fwd(Match(2 * i - 1), Match(2 * i), Ortho(f"pre:{key[0]},{key[1]}"))

    def pre_plug_remover(self, key: TransitionKey) -> StrandSpec:
        i = self.region_index(key)
        return rev(Match(2 * i - 1), Match(2 * i), Ortho(f"pre:{key[0]},{key[1]}"))

    def post_plug(self, key: TransitionKey) -> StrandSpec:
        i = self.region_index(key)
        return fwd(Ortho(f"post:{key[0]},{key[1]}"), Match(2 * i - 1), Match(2 * i))

    def post_plug_remover(self, key: TransitionKey) -> StrandSpec:
        i = self.region_index(key)
        return rev(Ortho(f"post:{key[0]},{key[1]}"), Match(2 * i - 1), Match(2 * i))


def _mrange(a: int, b: int) -> tuple[Match, ...]:
    return tuple(Match(x) for x in range(a, b + 1))


def build_scheme(spec: TMSpec) -> CellScheme:
    """Fix the cell layout for a machine; validates pattern distinguishability."""
    if spec.transition_count < 1:
        raise SchemeError("machine must have at least one transition")
    order = tuple(
        sorted(spec.transitions, key=lambda k: (k[0], SYMBOL_RANK[k[1]]))
    )
    scheme = CellScheme(order)
    _check_pattern_distinguishability(scheme)
    return scheme


def _probe_state(scheme: CellScheme, symbol: str, side: str) -> tuple[RegisterState, Instruction]:
    """Two-cell register with cell 0 carrying ``symbol`` and an entry toehold
    on the requested side; paired with the probe species for that side."""
    t, d = scheme.t, scheme.d
    layout = RegisterLayout(2, d)
    strands = []
    for cell in (0, 1):
        base = cell * d
        for i in range(1, t + 1):
            if side == "R" and cell == 1 and i == 1:
                continue  # open entry toehold at the next cell's first region
            strands.append(BoundStrand(scheme.plain_cover(i), base + 2 * i - 2))
        if side == "L" and cell == 0:
            strands.pop()  # drop cover of the last region: left entry toehold
        sym = symbol if cell == 0 else "_"
        for off, s in scheme.pattern_strands(sym):
            strands.append(BoundStrand(s, base + off))
    state = RegisterState(layout, tuple(strands))

    probes = []
    for sigma in SYMBOL_PATTERNS:
        if side == "L":
            span = scheme.span_tokens(sigma, 0)
            toks = (Match(2 * t),) + tuple(Match(x) for x in span[:-1])
        else:
            span = scheme.span_tokens(sigma, 1)
            toks = tuple(Match(x) for x in span[1:]) + (Match(1),)
        probes.append((sigma, fwd(*toks)))
    return state, probes


def _check_pattern_distinguishability(scheme: CellScheme) -> None:
    """Every ordered pair of symbols must be separable by a displacement
    cascade entering the symbol region from either end."""
    for side in ("L", "R"):
        fired: dict[str, set[str]] = {}
        for probe_sym in SYMBOL_PATTERNS:
            fired[probe_sym] = set()
            for actual in SYMBOL_PATTERNS:
                state, probes = _probe_state(scheme, actual, side)
                probe = dict(probes)[probe_sym]
                if engine.applicable_reactions(state, Instruction((probe,))):
                    fired[probe_sym].add(actual)
        for a in SYMBOL_PATTERNS:
            for b in SYMBOL_PATTERNS:
                if a == b:
                    continue
                if not any(
                    (a in hits) != (b in hits) for hits in fired.values()
                ):
                    raise SchemeError(
                        f"patterns {a!r} and {b!r} are not distinguishable from side {side}"
                    )


# --- encoding ---------------------------------------------------------------


def encode_config(
    spec: TMSpec, scheme: CellScheme, config: TMConfig, s: int
) -> tuple[RegisterState, bool]:
    """Register form of a machine configuration.

    Returns ``(state, lossy)``; lossy means the head position could not be
    represented (no defined transition for the head's state/symbol pair, or
    the machine has stopped) and was erased into the all-covered form.
    """
    if len(config.tape) != s:
        raise CompileError(f"tape length {len(config.tape)} != register cells {s}")
    t, d = scheme.t, scheme.d
    layout = RegisterLayout(s, d)

    head_cell: Optional[int] = None
    head_region: Optional[int] = None
    if (
        config.status is TMStatus.RUNNING
        and config.head is not None
        and spec.defined(config.state, config.tape[config.head])
    ):
        head_cell = config.head
        head_region = scheme.region_index((config.state, config.tape[config.head]))
    # lossy: the head existed but the register form cannot show it
    lossy = config.head is not None and head_cell is None

    strands = []
    for cell in range(s):
        base = cell * d
        if cell == head_cell:
            for i in range(1, t + 1):
                if i != head_region:
                    strands.append(BoundStrand(scheme.plain_cover(i), base + 2 * i - 2))
            strands.append(BoundStrand(scheme.head_cover, base + 2 * t))
        else:
            for i in range(1, t + 1):
                strands.append(BoundStrand(scheme.plain_cover(i), base + 2 * i - 2))
            for off, strand in scheme.pattern_strands(config.tape[cell]):
                strands.append(BoundStrand(strand, base + off))
    return RegisterState(layout, tuple(strands)), lossy


def decode_register(
    spec: TMSpec, scheme: CellScheme, state: RegisterState
) -> Union[TMConfig, TapeOnly]:
    """Read a clean register back into a machine configuration.

    Exactly one exposed transition region means a running machine; none means
    the tape of a halted/stuck machine.  Anything else is a corrupted run.
    """
    t, d = scheme.t, scheme.d
    s = state.layout.cells
    if d != state.layout.domains_per_cell:
        raise CompileError("register layout does not match scheme")

    per_cell: dict[int, list[tuple[int, StrandSpec]]] = {c: [] for c in range(s)}
    for bs in state.strands:
        bound = bs.bound_positions(state.layout)
        cells = {p // d for p in bound}
        if len(cells) != 1:
            raise UnrecognizedPatternError(min(cells), "strand crosses a cell boundary")
        cell = cells.pop()
        per_cell[cell].append((bs.offset - cell * d, bs.spec))

    def candidates(cell: int):
        plains = [(2 * i - 2, scheme.plain_cover(i)) for i in range(1, t + 1)]
        for sym in SYMBOL_PATTERNS:
            yield ("sym", sym, sorted(plains + list(scheme.pattern_strands(sym))))
        for i in range(1, t + 1):
            form = [p for p in plains if p[0] != 2 * i - 2]
            form.append((2 * t, scheme.head_cover))
            yield ("head", i, sorted(form))

    tape: list[str] = []
    exposed: list[tuple[int, int]] = []
    for cell in range(s):
        got = sorted(per_cell[cell], key=lambda x: (x[0], x[1].sort_key()))
        match = None
        for kind, value, form in candidates(cell):
            if got == sorted(form, key=lambda x: (x[0], x[1].sort_key())):
                match = (kind, value)
                break
        if match is None:
            raise UnrecognizedPatternError(cell)
        kind, value = match
        if kind == "sym":
            tape.append(value)
        else:
            exposed.append((cell, value))
            tape.append(scheme.transition_order[value - 1][1])

    if len(exposed) > 1:
        raise MultipleHeadsError([c for c, _ in exposed])
    if not exposed:
        return TapeOnly(tuple(tape))
    cell, region = exposed[0]
    q, b = scheme.transition_order[region - 1]
    return TMConfig(tuple(tape), cell, q, TMStatus.RUNNING)


# --- instruction generation --------------------------------------------------


class _SublistBuilder:
    """Shared vocabulary for one transition's instruction sublist."""

    def __init__(self, spec: TMSpec, scheme: CellScheme, key: TransitionKey):
        self.spec = spec
        self.scheme = scheme
        self.key = key
        self.q, self.b = key
        self.nxt, self.write, self.move = spec.transitions[key]
        self.j = scheme.region_index(key)
        self.t = scheme.t
        self.d = scheme.d
        self.instructions: list[Instruction] = []
        self._n = 0

    def tag(self, role: str) -> str:
        return f"h:{self.q},{self.b}:{role}"

    def emit(self, species: list[StrandSpec]) -> None:
        self._n += 1
        label = f"L({self.q},{self.b})#{self._n}"
        self.instructions.append(Instruction(tuple(species), label))

    def y(self, k: int) -> int:
        return self.scheme.y(k)

    def branch_targets(self) -> list[tuple[str, Optional[TransitionKey]]]:
        """Per possible symbol under the moved head: the next transition input
        (None when undefined or the machine halts there)."""
        out = []
        for sym in ("0", "1", "_"):
            key = (self.nxt, sym)
            out.append((sym, key if self.spec.defined(self.nxt, sym) else None))
        return out

    def defined_branches(self) -> list[tuple[str, TransitionKey, int]]:
        byidx = [
            (sym, key, self.scheme.region_index(key))
            for sym, key in self.branch_targets()
            if key is not None
        ]
        return sorted(byidx, key=lambda x: x[2])

    def undefined_branches(self) -> list[str]:
        return [sym for sym, key in self.branch_targets() if key is None]

    # common pieces -------------------------------------------------------

    def unplug(self) -> None:
        self.emit([self.scheme.pre_plug_remover(self.key)])

    def rightward_tear(self, with_handles: bool) -> list[StrandSpec]:
        """Toehold-exchange chain opening cell k from the exposed region
        through the symbol-region cover; vacates the cell's last domain."""
        j, t = self.j, self.t
        chain = []
        if j == t:
            toks = (Match(2 * t - 1), Match(2 * t)) + _mrange(self.y(1), self.y(7))
            chain.append(("A1", toks))
        else:
            chain.append(("A1", (Match(2 * j - 1), Match(2 * j), Match(2 * j + 1))))
            for m in range(2, t - j + 1):
                a = 2 * j + 2 * m - 2
                chain.append((f"A{m}", (Match(a), Match(a + 1))))
            chain.append(("Asym", (Match(2 * t),) + _mrange(self.y(1), self.y(7))))
        out = []
        for name, toks in chain:
            if with_handles:
                toks = toks + (Ortho(self.tag(name)),)
            out.append(fwd(*toks))
        return out


def _sublist_halting(b: _SublistBuilder) -> list[Instruction]:
    """Transition whose destination has no defined transitions (halt state or
    a dead state): write the output symbol, cover everything, touch no
    neighbor cell."""
    sch = b.scheme
    b.unplug()
    tear = b.rightward_tear(with_handles=True)
    b.emit(tear)
    b.emit([rev(*s.tokens) for s in tear])
    plains = [sch.plain_cover(i) for i in range(b.j, b.t + 1)]
    span1 = fwd(*(Match(x) for x in sch.span_tokens(b.write, 0)))
    b.emit(plains + [span1])
    b.emit([fwd(*(Match(x) for x in sch.span_tokens(b.write, 1)))])
    return b.instructions


def _sublist_right(b: _SublistBuilder) -> list[Instruction]:
    sch, t, j = b.scheme, b.t, b.j
    y = b.y
    defined = b.defined_branches()
    undefined = b.undefined_branches()

    b.unplug()

    # previous cell: open from the exposed region to the cell's right edge,
    # then rebuild with the written symbol, keeping the last domain open as
    # the toehold into the next cell.
    tear = b.rightward_tear(with_handles=True)
    b.emit(tear)
    b.emit([rev(*s.tokens) for s in tear])
    plains = [sch.plain_cover(i) for i in range(j, t + 1)]
    if b.write == "1":
        b.emit(plains + [fwd(*_mrange(y(1), y(5)))])
        b.emit([fwd(Match(y(6)), Match(y(7)))])
    else:
        b.emit(plains + [fwd(*(Match(x) for x in sch.span_tokens(b.write, 0)))])
        span2 = sch.span_tokens(b.write, 1)
        b.emit([fwd(*(Match(x) for x in span2[:-1]))])

    # next cell: cross the boundary and walk every transition-region cover.
    # These shingles are later displaced by the rebuild chains, so they carry
    # no detachment handles.
    dchain = [fwd(Match(b.d), Match(1))]
    for m in range(2, t + 1):
        dchain.append(fwd(Match(2 * m - 2), Match(2 * m - 1)))
    b.emit(dchain)

    # branch detectors: tear the first span of the symbol pattern.
    e_strands = {}
    for sym in ("0", "1", "_"):
        span1 = sch.span_tokens(sym, 0)
        toks = (Match(2 * t),) + tuple(Match(x) for x in span1[:-1]) + (Ortho(b.tag(f"E{sym}")),)
        e_strands[sym] = fwd(*toks)
    b.emit(list(e_strands.values()))

    # second-span tear, only where the branch continues.
    f_strands = {}
    for sym, key, _ in defined:
        span2 = sch.span_tokens(sym, 1)
        nick = sch.span_tokens(sym, 0)[-1]  # vacated by the E strand's exchange
        toks = (Match(nick),) + tuple(Match(x) for x in span2[:-1])
        f_strands[sym] = fwd(*(toks + (Ortho(b.tag(f"F{sym}")),)))
    if f_strands:
        b.emit(list(f_strands.values()))

    for sym, key, i2 in defined:
        b.emit([rev(*e_strands[sym].tokens), rev(*f_strands[sym].tokens), sch.head_cover])
        chain = [sch.plain_cover(i) for i in range(1, t + 1) if i != i2]
        b.emit(chain + [sch.post_plug(key)])

    if undefined:
        b.emit([
            fwd(*(Match(x) for x in sch.span_tokens(sym, 0))) for sym in undefined
        ])
        b.emit([sch.plain_cover(i) for i in range(1, t + 1)])

    # seal the previous cell's last domain with the written symbol's pattern.
    if b.write == "1":
        b.emit([fwd(Match(y(7)), Match(y(8))), fwd(*_mrange(y(1), y(6)))])
    else:
        b.emit([fwd(*(Match(x) for x in sch.span_tokens(b.write, 1)))])
    return b.instructions


def _sublist_left(b: _SublistBuilder) -> list[Instruction]:
    sch, t, j = b.scheme, b.t, b.j
    y = b.y
    defined = b.defined_branches()
    undefined = b.undefined_branches()

    b.unplug()

    # open the current cell's left flank and cross into the neighbor's symbol
    # region; the crossing strand family is the branch detector.
    n0: list[StrandSpec] = []
    if j >= 2:
        if j == 2:
            n0.append(fwd(Match(2), Match(3), Match(4)))
        else:
            n0.append(fwd(Match(2 * j - 2), Match(2 * j - 1), Match(2 * j)))
            for m in range(2, j):
                a = 2 * j - 2 * m
                n0.append(fwd(Match(a), Match(a + 1)))
    crosses = {}
    for sym in ("0", "1", "_"):
        sp2 = sch.span_tokens(sym, 1)
        toks = tuple(Match(x) for x in sp2[1:]) + (Match(1),)
        if j == 1:
            toks = toks + (Match(2),)
        crosses[sym] = fwd(*toks)
    n0.extend(crosses.values())
    b.emit(n0)

    x_strands = {}
    for sym, key, i2 in defined:
        sp1 = sch.span_tokens(sym, 0)
        nick = y(len(sp1) + 1)  # leftmost domain of the second span
        b.emit([fwd(*(_mrange(y(2), nick) + (Ortho(b.tag(f"H{sym}")),)))])

        kchain = [fwd(Match(2 * t), Match(y(1)))]
        for m in range(2, t - i2 + 2):
            a = 2 * t - 2 * m + 2
            kchain.append(fwd(Match(a), Match(a + 1)))
        b.emit(kchain)

        b.emit([sch.post_plug(key)])

        rchain = [sch.plain_cover(i) for i in range(i2 + 1, t + 1)]
        h_toks = _mrange(y(2), nick) + (Ortho(b.tag(f"H{sym}")),)
        b.emit(rchain + [rev(*h_toks)])

        if j == 1:
            toks = _mrange(y(1), y(8)) + (Match(1), Match(2), Ortho(b.tag(f"X{sym}")))
            x = fwd(*toks)
            x_strands[sym] = x
            b.emit([x])
        else:
            b.emit([sch.head_cover])

    p_strands = {}
    if undefined:
        batch = []
        for sym in undefined:
            sp2 = sch.span_tokens(sym, 1)
            if j == 1:
                p = fwd(*(tuple(Match(x) for x in sp2) + (Match(1), Match(2), Ortho(b.tag(f"P{sym}")))))
                p_strands[sym] = p
                batch.append(p)
            else:
                batch.append(fwd(*(Match(x) for x in sp2)))
        b.emit(batch)

    if j == 1:
        shared1 = [rev(*x.tokens) for x in x_strands.values()]
        if defined:
            shared1.append(sch.head_cover)
            b.emit(shared1)
        shared2 = [rev(*p.tokens) for p in p_strands.values()]
        shared2.extend(
            fwd(*(Match(x) for x in sch.span_tokens(sym, 1))) for sym in p_strands
        )
        if shared2:
            b.emit(shared2)

    # previous cell: walk left-to-right over the opener shingles and the
    # symbol cover, then rebuild fully with the written symbol.
    chain: list[tuple[str, tuple[Match, ...]]] = []
    if t == 1:  # forcibly j == 1; the whole cell opens with one exchange
        chain.append(("pA1", (Match(1), Match(2)) + _mrange(y(1), y(7))))
    elif j <= 2:
        chain.append(("pA1", (Match(1), Match(2), Match(3))))
        for m in range(2, t):
            chain.append((f"pA{m}", (Match(2 * m), Match(2 * m + 1))))
        chain.append(("pAsym", (Match(2 * t),) + _mrange(y(1), y(7))))
    else:
        chain.append(("pA1", (Match(1), Match(2))))
        for m in range(2, j - 1):
            chain.append((f"pA{m}", (Match(2 * m - 1), Match(2 * m))))
        chain.append((f"pA{j-1}", (Match(2 * j - 3), Match(2 * j - 2), Match(2 * j - 1))))
        for m in range(t - j):
            chain.append((f"pB{m}", (Match(2 * j + 2 * m), Match(2 * j + 2 * m + 1))))
        chain.append(("pAsym", (Match(2 * t),) + _mrange(y(1), y(7))))
    pa = [fwd(*(toks + (Ortho(b.tag(name)),))) for name, toks in chain]
    b.emit(pa)
    b.emit([rev(*s.tokens) for s in pa])
    plains = [sch.plain_cover(i) for i in range(1, t + 1)]
    b.emit(plains + [fwd(*(Match(x) for x in sch.span_tokens(b.write, 0)))])
    b.emit([fwd(*(Match(x) for x in sch.span_tokens(b.write, 1)))])
    return b.instructions


def compile_transition(
    spec: TMSpec, scheme: CellScheme, key: TransitionKey, s: int
) -> list[Instruction]:
    """Instruction sublist advancing registers whose applicable transition is
    ``key``; inert on every other register."""
    b = _SublistBuilder(spec, scheme, key)
    nxt = spec.transitions[key][0]
    if not any(spec.defined(nxt, sym) for sym in ("0", "1", "_")):
        return _sublist_halting(b)
    if b.move == "R":
        return _sublist_right(b)
    return _sublist_left(b)


@dataclass(frozen=True)
class CompileStats:
    d: int
    t: int
    s: int
    instruction_count: int

    def nucleotides(self, k: int) -> int:
        return k * self.s * (2 * self.t + 8)

    def to_doc(self) -> dict:
        return {
            "d": self.d,
            "t": self.t,
            "s": self.s,
            "instructions": self.instruction_count,
            "nucleotides": {str(k): self.nucleotides(k) for k in (5, 6, 7)},
        }


@dataclass(frozen=True)
class CompiledProgram:
    program: Program
    scheme: CellScheme
    sublist_index: dict[TransitionKey, tuple[int, int]]
    stats: CompileStats


def compile_tm(spec: TMSpec, s: int) -> CompiledProgram:
    """Full program: pre-plug instruction, one sublist per transition in the
    fixed order, final deprotecting instruction."""
    if s < 2:
        raise CompileError("register must have at least 2 cells")
    scheme = build_scheme(spec)
    instructions = [
        Instruction(tuple(scheme.pre_plug(k) for k in scheme.transition_order), "pre-plug")
    ]
    sublist_index: dict[TransitionKey, tuple[int, int]] = {}
    for key in scheme.transition_order:
        sub = compile_transition(spec, scheme, key, s)
        first = len(instructions) + 1
        instructions.extend(sub)
        sublist_index[key] = (first, len(instructions))
    instructions.append(
        Instruction(
            tuple(scheme.post_plug_remover(k) for k in scheme.transition_order),
            "final-deprotect",
        )
    )
    layout = RegisterLayout(s, scheme.d)
    program = Program(layout, tuple(instructions))
    stats = CompileStats(scheme.d, scheme.t, s, len(instructions))
    return CompiledProgram(program, scheme, sublist_index, stats)


def serialize_compiled(cp: CompiledProgram) -> bytes:
    doc = program_doc(cp.program)
    doc["stats"] = cp.stats.to_doc()
    doc["sublists"] = {
        f"{q},{b}": list(span) for (q, b), span in sorted(cp.sublist_index.items())
    }
    return _canon(doc)


def load_program_file(text: bytes) -> Program:
    """Accept either a plain program document or a compiled one (which adds
    'stats' and 'sublists' keys)."""
    doc = _load_json(text, "$")
    _expect(isinstance(doc, dict), "$", "top level must be an object")
    core = {k: v for k, v in doc.items() if k in ("layout", "instructions")}
    from .model import parse_program

    return parse_program(_canon(core))


# --- verification -------------------------------------------------------------


def configs_equivalent(
    spec: TMSpec, expected: TMConfig, got: Union[TMConfig, TapeOnly]
) -> bool:
    """Equality up to the encoding: configurations the register cannot
    represent (halted, stuck, or head on an undefined pair) compare by tape."""
    representable = (
        expected.status is TMStatus.RUNNING
        and expected.head is not None
        and spec.defined(expected.state, expected.tape[expected.head])
    )
    if representable:
        return (
            isinstance(got, TMConfig)
            and got.tape == expected.tape
            and got.head == expected.head
            and got.state == expected.state
        )
    return isinstance(got, TapeOnly) and got.tape == expected.tape


def reachable_configs(
    spec: TMSpec, input_str: str, s: int, max_steps: int = 10_000
) -> tuple[list[TMConfig], bool]:
    """Trajectory configs from an input; True if the run ends by walking off
    the tape.  The configuration whose step violates the space bound is not
    returned: its step is undefined, so it is outside the one-step claim."""
    from .tm import SpaceBoundViolationError, initial_config

    configs = [initial_config(spec, input_str, s)]
    for _ in range(max_steps):
        c = configs[-1]
        if c.is_terminal:
            return configs, False
        try:
            configs.append(tm_step(spec, c))
        except SpaceBoundViolationError:
            return configs[:-1], True
    return configs, False


@dataclass
class VerifyEntry:
    config: TMConfig
    ok: bool
    detail: str
    reaction_counts: tuple[int, ...]


@dataclass
class VerificationReport:
    entries: list[VerifyEntry]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def violations(self) -> list[str]:
        return [e.detail for e in self.entries if not e.ok]

    def to_doc(self) -> dict:
        return {
            "ok": self.ok,
            "entries": [
                {
                    "tape": "".join(e.config.tape),
                    "head": e.config.head,
                    "state": e.config.state,
                    "status": e.config.status.value,
                    "ok": e.ok,
                    "detail": e.detail,
                    "reactions": list(e.reaction_counts),
                }
                for e in self.entries
            ],
        }


def verify_compilation(
    spec: TMSpec,
    s: int,
    compiled: CompiledProgram,
    inputs: list[TMConfig],
    mode: engine.Mode = engine.Canonical(),
) -> VerificationReport:
    """Check the construction's one-step claim on explicit configurations.

    Configurations with a defined transition must advance exactly as tm_step
    does; terminal or head-erased ones must be left byte-identical."""
    entries = []
    for config in inputs:
        reg, lossy = encode_config(spec, compiled.scheme, config, s)
        final, outcomes = engine.run_program(reg, compiled.program, mode)
        counts = tuple(len(o.applied) for o in outcomes)
        steppable = (
            config.status is TMStatus.RUNNING
            and config.head is not None
            and spec.defined(config.state, config.tape[config.head])
        )
        if steppable:
            expected = tm_step(spec, config)
            try:
                got = decode_register(spec, compiled.scheme, final)
            except DecodeError as e:
                entries.append(VerifyEntry(config, False, f"decode failed: {e}", counts))
                continue
            ok = configs_equivalent(spec, expected, got)
            detail = "" if ok else f"expected {expected}, decoded {got}"
        else:
            ok = final == reg
            detail = "" if ok else "terminal register was modified by the program"
        entries.append(VerifyEntry(config, ok, detail, counts))
    return VerificationReport(entries)
