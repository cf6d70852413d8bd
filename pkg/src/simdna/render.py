"""Deterministic terminal and SVG views of registers and traces.

Drawing conventions: the register is a horizontal baseline with ticks per
domain and heavier marks at cell boundaries.  Bound strands sit directly
above the positions they cover; tokens that cannot pair (overhangs,
mismatches, off-register ends) are drawn diagonally in SVG and as ``/`` in
text.  Strands added by an instruction are drawn above the register at the
alignment where they act (solid) or where they would best bind (dashed, for
species that do nothing in the shown step).  The 3' end carries the
arrowhead: right for forward strands, left for reverse.
"""
from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

from . import engine
from .model import (
    BoundStrand,
    Instruction,
    Match,
    RegisterState,
    StrandSpec,
)


@dataclass(frozen=True)
class StyleTable:
    unit_width: int = 20
    lane_height: int = 14
    margin: int = 16
    tick_height: int = 4
    cell_tick_height: int = 10
    strand_gap: int = 3
    diag_rise: int = 7
    stroke_width: int = 2
    palette: tuple[str, ...] = (
        "#1f77b4",
        "#d62728",
        "#2ca02c",
        "#9467bd",
        "#ff7f0e",
        "#17becf",
        "#8c564b",
        "#e377c2",
        "#7f7f7f",
        "#bcbd22",
    )


def load_style(path: Optional[str] = None) -> StyleTable:
    """Style table, optionally overridden by a JSON file (SIMDNA_STYLE)."""
    path = path or os.environ.get("SIMDNA_STYLE")
    if not path:
        return StyleTable()
    with open(path, "rb") as fh:
        doc = json.load(fh)
    kwargs = {}
    for key in StyleTable.__dataclass_fields__:
        if key in doc:
            value = doc[key]
            kwargs[key] = tuple(value) if key == "palette" else value
    return StyleTable(**kwargs)


@dataclass(frozen=True)
class PendingStrand:
    spec: StrandSpec
    offset: int
    reactive: bool


@dataclass(frozen=True)
class RenderScene:
    state: RegisterState
    pending: tuple[PendingStrand, ...] = ()
    label: str = ""


def _reaction_placements(r) -> list[tuple[StrandSpec, int]]:
    if isinstance(r, engine.Attach) or isinstance(r, (engine.Displace, engine.ToeholdExchange)):
        return [(r.spec, r.offset)]
    if isinstance(r, engine.Cooperative):
        return [(r.left_spec, r.left_offset), (r.right_spec, r.right_offset)]
    if isinstance(r, engine.Detach):
        toks, hay = r.target.spec.tokens, r.remover.tokens
        idx = next(
            i for i in range(len(hay) - len(toks) + 1) if hay[i : i + len(toks)] == toks
        )
        return [(r.remover, r.target.offset - idx)]
    return []


def _best_alignment(state: RegisterState, spec: StrandSpec) -> int:
    layout = state.layout
    best = (0, 0)
    found = False
    for off in range(-len(spec.tokens) + 1, layout.total_positions):
        n = len(BoundStrand(spec, off).bound_positions(layout))
        if not found or n > best[0] or (n == best[0] and off < best[1]):
            if n > 0:
                best = (n, off)
                found = True
    return best[1] if found else 0


def make_scene(
    state: RegisterState,
    instr: Optional[Instruction] = None,
    outcome: Optional[engine.InstructionOutcome] = None,
    label: str = "",
) -> RenderScene:
    """Scene for a register, optionally with an instruction's species placed
    above it.  With an outcome, a species is solid exactly when it took part
    in an applied reaction; otherwise applicability on the state decides."""
    if instr is None:
        return RenderScene(state, (), label)
    placements: dict[tuple[StrandSpec, int], bool] = {}
    if outcome is not None:
        reactions = outcome.applied
    else:
        reactions = tuple(
            sorted(
                engine.applicable_reactions(state, instr),
                key=lambda r: engine.reaction_sort_key(r, state),
            )
        )
    for r in reactions:
        for spec, off in _reaction_placements(r):
            placements[(spec, off)] = True
    active_specs = {spec for (spec, _off) in placements}
    for spec in instr.species:
        if spec not in active_specs:
            placements[(spec, _best_alignment(state, spec))] = False
    pending = tuple(
        PendingStrand(spec, off, hot)
        for (spec, off), hot in sorted(
            placements.items(), key=lambda kv: (kv[0][1], kv[0][0].sort_key())
        )
    )
    return RenderScene(state, pending, label)


# --- text ---------------------------------------------------------------------


def _pack_lanes(items: Sequence[tuple[int, int]]) -> list[int]:
    """Greedy first-fit lane index per (start, end) interval."""
    lanes: list[int] = []
    ends: list[int] = []
    for start, end in items:
        for i, e in enumerate(ends):
            if start > e + 1:
                lanes.append(i)
                ends[i] = end
                break
        else:
            lanes.append(len(ends))
            ends.append(end)
    return lanes


def render_text(scene: RenderScene) -> str:
    """Fixed-width picture: ruler line at the bottom, bound strands above it,
    pending instruction strands (dashed as dots when inert) on top."""
    layout = scene.state.layout
    d, n = layout.domains_per_cell, layout.total_positions

    spans: list[tuple[int, int]] = []
    all_tokens: list[int] = [0, n - 1]
    for bs in scene.state.strands:
        all_tokens += [bs.offset, bs.offset + len(bs.spec.tokens) - 1]
    for ps in scene.pending:
        all_tokens += [ps.offset, ps.offset + len(ps.spec.tokens) - 1]
    left_pad = max(0, -min(all_tokens))
    right_pad = max(0, max(all_tokens) - (n - 1))

    def col(p: int) -> int:
        if p < 0:
            return left_pad + 1 + p
        if p >= n:
            return left_pad + 1 + p + layout.cells
        return left_pad + 1 + p + p // d

    width = left_pad + n + layout.cells + 1 + right_pad
    ruler = [" "] * width
    for p in range(n):
        ruler[col(p)] = str(layout.domain_at(p) % 10)
    for c in range(layout.cells):
        ruler[col(c * d) - 1] = "|"
    ruler[col(n - 1) + 1] = "|"

    def strand_row(spec: StrandSpec, offset: int, bound: frozenset[int], dashed: bool) -> list[str]:
        row = [" "] * width
        for j, tok in enumerate(spec.tokens):
            p = offset + j
            if dashed:
                ch = "."
            elif p in bound:
                ch = "="
            else:
                ch = "/"
            row[col(p)] = ch
        if spec.is_forward:
            row[col(offset + len(spec.tokens) - 1)] = ">"
        else:
            row[col(offset)] = "<"
        return row

    bound_rows: list[tuple[int, list[str]]] = []
    items = []
    for bs in scene.state.strands:
        items.append((col(bs.offset), col(bs.offset + len(bs.spec.tokens) - 1)))
    lanes = _pack_lanes(items)
    for bs, lane in zip(scene.state.strands, lanes):
        bound_rows.append(
            (lane, strand_row(bs.spec, bs.offset, bs.bound_positions(layout), False))
        )

    pend_rows: list[tuple[int, list[str]]] = []
    items = []
    for ps in scene.pending:
        items.append((col(ps.offset), col(ps.offset + len(ps.spec.tokens) - 1)))
    lanes = _pack_lanes(items)
    for ps, lane in zip(scene.pending, lanes):
        bound = BoundStrand(ps.spec, ps.offset).bound_positions(layout) if ps.spec.is_forward else frozenset()
        pend_rows.append((lane, strand_row(ps.spec, ps.offset, bound, not ps.reactive)))

    def stack(rows: list[tuple[int, list[str]]]) -> list[str]:
        if not rows:
            return []
        depth = max(lane for lane, _ in rows) + 1
        grid = [[" "] * width for _ in range(depth)]
        for lane, row in rows:
            target = grid[lane]
            for i, ch in enumerate(row):
                if ch != " ":
                    target[i] = ch
        return ["".join(g).rstrip() for g in reversed(grid)]

    lines = []
    if scene.label:
        lines.append(scene.label)
    lines += stack(pend_rows)
    lines += stack(bound_rows)
    lines.append("".join(ruler).rstrip())
    return "\n".join(lines) + "\n"


# --- SVG ----------------------------------------------------------------------


def _color(spec: StrandSpec, style: StyleTable) -> str:
    key = ";".join(
        f"m{t.domain}" if isinstance(t, Match) else f"o{t.tag}" for t in spec.tokens
    )
    return style.palette[zlib.crc32(key.encode()) % len(style.palette)]


def _strand_svg(
    spec: StrandSpec,
    offset: int,
    bound: frozenset[int],
    y: int,
    dashed: bool,
    style: StyleTable,
    x0: int,
) -> list[str]:
    u, g = style.unit_width, style.strand_gap
    rise = style.diag_rise
    pts: list[tuple[float, float]] = []
    for j in range(len(spec.tokens)):
        p = offset + j
        flat = p in bound
        xa, xb = x0 + p * u + g, x0 + (p + 1) * u - g
        if flat:
            pts += [(xa, y), (xb, y)]
        else:
            pts += [(xa, y - 2), (xb, y - rise)]
    points = " ".join(f"{x:g},{yy:g}" for x, yy in pts)
    color = _color(spec, style)
    dash = ' stroke-dasharray="5 4"' if dashed else ""
    out = [
        f'<polyline fill="none" stroke="{color}" stroke-width="{style.stroke_width}"{dash} points="{points}"/>'
    ]
    if spec.is_forward:
        tx, ty = pts[-1]
        out.append(
            f'<path fill="{color}" d="M {tx:g} {ty - 3:g} L {tx + 6:g} {ty:g} L {tx:g} {ty + 3:g} Z"/>'
        )
    else:
        tx, ty = pts[0]
        out.append(
            f'<path fill="{color}" d="M {tx:g} {ty - 3:g} L {tx - 6:g} {ty:g} L {tx:g} {ty + 3:g} Z"/>'
        )
    return out


def _scene_fragment(scene: RenderScene, style: StyleTable, y_base: int, x0: int) -> tuple[list[str], int]:
    """SVG elements for one scene with the baseline at y_base; returns the
    fragment and the total height consumed above the baseline."""
    layout = scene.state.layout
    d, n = layout.domains_per_cell, layout.total_positions
    u = style.unit_width
    parts = []

    items = [
        (bs.offset, bs.offset + len(bs.spec.tokens) - 1) for bs in scene.state.strands
    ]
    bound_lanes = _pack_lanes([(a, b) for a, b in items])
    n_bound = max(bound_lanes, default=-1) + 1
    pend_items = [
        (ps.offset, ps.offset + len(ps.spec.tokens) - 1) for ps in scene.pending
    ]
    pend_lanes = _pack_lanes(pend_items)
    n_pend = max(pend_lanes, default=-1) + 1

    # register baseline with domain ticks and cell marks
    parts.append(
        f'<path class="register" stroke="#000" stroke-width="2" fill="none" '
        f'd="M {x0:g} {y_base:g} H {x0 + n * u:g}"/>'
    )
    for p in range(n + 1):
        h = style.cell_tick_height if p % d == 0 else style.tick_height
        parts.append(
            f'<line stroke="#000" stroke-width="1" x1="{x0 + p * u:g}" y1="{y_base:g}" '
            f'x2="{x0 + p * u:g}" y2="{y_base + h:g}"/>'
        )

    for bs, lane in zip(scene.state.strands, bound_lanes):
        y = y_base - 6 - lane * style.lane_height
        parts += _strand_svg(
            bs.spec, bs.offset, bs.bound_positions(layout), y, False, style, x0
        )
    for ps, lane in zip(scene.pending, pend_lanes):
        y = y_base - 6 - (n_bound + 1 + lane) * style.lane_height
        bound = (
            BoundStrand(ps.spec, ps.offset).bound_positions(layout)
            if ps.spec.is_forward
            else frozenset()
        )
        parts += _strand_svg(ps.spec, ps.offset, bound, y, not ps.reactive, style, x0)

    top_lanes = n_bound + (n_pend + 1 if n_pend else 0)
    height = 6 + (top_lanes + 1) * style.lane_height + style.cell_tick_height
    if scene.label:
        ylab = y_base - 6 - (top_lanes + 0.5) * style.lane_height
        parts.append(
            f'<text x="{x0:g}" y="{ylab:g}" font-family="monospace" font-size="11" fill="#000">{_esc(scene.label)}</text>'
        )
        height += style.lane_height
    return parts, height


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _document(parts: list[str], width: float, height: float) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:g}" height="{height:g}" viewBox="0 0 {width:g} {height:g}">\n'
    )
    return head + "\n".join(parts) + "\n</svg>\n"


def _extent(scene: RenderScene) -> tuple[int, int]:
    n = scene.state.layout.total_positions
    lo, hi = 0, n
    for bs in scene.state.strands:
        lo = min(lo, bs.offset)
        hi = max(hi, bs.offset + len(bs.spec.tokens))
    for ps in scene.pending:
        lo = min(lo, ps.offset)
        hi = max(hi, ps.offset + len(ps.spec.tokens))
    return lo, hi


def render_svg(scene: RenderScene, style: Optional[StyleTable] = None) -> str:
    style = style or load_style()
    lo, hi = _extent(scene)
    x0 = style.margin - lo * style.unit_width
    parts, h = _scene_fragment(scene, style, 0, x0)
    height = h + 2 * style.margin
    # shift everything down so the tallest lane fits
    shifted, _ = _scene_fragment(scene, style, height - style.margin - style.cell_tick_height, x0)
    width = style.margin * 2 + (hi - lo) * style.unit_width
    return _document(shifted, width, height)


def render_trace(
    scenes: Sequence[RenderScene],
    every: Optional[int] = None,
    reaction_counts: Optional[Sequence[int]] = None,
    style: Optional[StyleTable] = None,
) -> str:
    """Stacked panels.  By default panels where nothing fired are omitted
    (their instructions were inert); a stride of ``every`` forces inclusion
    of every ``every``-th panel, so ``every=1`` shows all of them."""
    style = style or load_style()
    chosen: list[RenderScene] = []
    for i, scene in enumerate(scenes):
        fired = None if reaction_counts is None else reaction_counts[i]
        include = (
            fired is None
            or fired > 0
            or (every is not None and i % every == 0)
        )
        if include:
            chosen.append(scene)
    if not chosen:
        chosen = list(scenes[:1])

    lo = min((_extent(s)[0] for s in chosen), default=0)
    hi = max((_extent(s)[1] for s in chosen), default=1)
    x0 = style.margin - lo * style.unit_width
    width = style.margin * 2 + (hi - lo) * style.unit_width

    parts: list[str] = []
    y = style.margin
    for scene in chosen:
        _, h = _scene_fragment(scene, style, 0, x0)
        y += h
        frag, _ = _scene_fragment(scene, style, y - style.cell_tick_height, x0)
        parts += frag
        y += style.margin
    return _document(parts, width, y)
