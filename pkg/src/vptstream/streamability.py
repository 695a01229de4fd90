"""Deciding and searching the memory-boundedness properties.

Three tiers, strongest first: bounded memory (BM) holds iff the domain's
stack height is bounded and the height-restricted finite-state transducer is
twinned — both decided exactly here.  Height-bounded memory (HBM) and
current-height-bounded memory (OBM) are characterized by the horizontal and
matched twinning properties of the pushdown machine itself; for those this
module runs bounded witness searches: a Violated verdict carries a replayed,
machine-checked witness, while exhausting the bounds yields NoWitnessUpTo —
never Holds, since the searches are not complete.

All searches run on the reduced machine (accessible implies co-accessible
there, which the twinning premises need) and witnesses are projected back to
the caller's machine and re-verified on it before being returned.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

from .delay_algebra import DelayPair, Word, delta, delta_extend
from .nested_words import SymbolKind, classify, is_well_nested
from .vpt_core import (
    Configuration,
    CounterExample,
    FstMachine,
    FstRule,
    InputWord,
    NotFunctionalWitness,
    StateExplosion,
    Vpt,
    check_functional_bounded,
    co_accessible,
    fst_of,
    metrics,
    reduce_with_map,
    step_runs,
    trim_fst,
    well_matched_witnesses,
)


class InconsistentVerdicts(Exception):
    """The verdict ladder BM => OBM => HBM was contradicted: a bug, not data."""


class Outcome(enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    NO_WITNESS_UP_TO = "NoWitnessUpTo"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SearchBounds:
    max_height: int = 6
    max_len: int = 24
    delay_cap: Optional[int] = None  # None: 3·|Q|²·M of the searched machine

    def __post_init__(self):
        if self.max_height < 0 or self.max_len < 0 \
                or (self.delay_cap is not None and self.delay_cap < 0):
            raise ValueError("search bounds must be non-negative")


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    witness: object = None
    bounds: Optional[SearchBounds] = None
    diagnostics: str = ""


@dataclass(frozen=True)
class FstTwinWitness:
    u1: InputWord
    u2: InputWord
    run1_rules: tuple[FstRule, ...]
    run2_rules: tuple[FstRule, ...]
    v1: Word
    v2: Word
    w1: Word
    w2: Word
    delay_before: DelayPair
    delay_after: DelayPair


@dataclass(frozen=True)
class VptTwinWitness:
    """Runs over u1·u2·u3·u4; a horizontal witness has u3 = u4 = ε."""
    u1: InputWord
    u2: InputWord
    u3: InputWord
    u4: InputWord
    init1: str
    init2: str
    configs1: tuple[Configuration, Configuration, Configuration, Configuration]
    configs2: tuple[Configuration, Configuration, Configuration, Configuration]
    outs1: tuple[Word, Word, Word, Word]
    outs2: tuple[Word, Word, Word, Word]
    delay_before: DelayPair
    delay_after: DelayPair


@dataclass(frozen=True)
class Bounded:
    h_max: int


@dataclass(frozen=True)
class Unbounded:
    state: str
    prefix: InputWord
    cycle: InputWord


@dataclass(frozen=True)
class StreamabilityReport:
    bm: Verdict
    hbm: Verdict
    obm: Verdict


_NODE_BUDGET = 400_000


# ---------------------------------------------------------------------------
# Exact twinning for finite-state transducers

def _delay_len(d: DelayPair) -> int:
    return max(len(d.left), len(d.right))


def check_fst_twinning(fst: FstMachine, delay_cap: Optional[int] = None,
                       node_budget: Optional[int] = None) -> Verdict:
    """Exact decision: two runs looping on a common input keep a fixed delay.

    Depth-first product reachability over (state, state, delay) triples.  Two
    tripwires fire mid-search: a state pair recurring on the current path with
    a different delay is itself a violating loop, and a delay longer than
    3·|Q|²·M forces such a recurrence somewhere on its own discovery path.
    Divergent machines are caught by one of these before the (potentially
    huge) set of bounded delays is enumerated; if neither fires, the reachable
    node graph is exhausted and searched for a same-pair delay change, which
    settles the remaining cases.
    """
    m = trim_fst(fst)
    if not m.initial or not m.rules:
        return Verdict(Outcome.HOLDS, diagnostics="no two runs exist")
    max_out = max((len(r.out) for r in m.rules), default=0)
    cap = delay_cap if delay_cap is not None \
        else 3 * len(m.states) ** 2 * max(max_out, 1)

    by_symbol: dict[tuple[str, str], list[FstRule]] = {}
    for r in sorted(m.rules):
        by_symbol.setdefault((r.src, r.symbol), []).append(r)
    symbols = sorted({r.symbol for r in m.rules})

    start_delay = DelayPair((), ())
    NodeT = tuple[str, str, DelayPair]
    preds: dict[NodeT, Optional[tuple[NodeT, str, Word, Word]]] = {}
    succs: dict[NodeT, list[NodeT]] = {}
    roots = []
    for i1 in sorted(m.initial):
        for i2 in sorted(m.initial):
            node = (i1, i2, start_delay)
            if node not in preds:
                preds[node] = None
                roots.append(node)

    def path_to(node: NodeT) -> list[tuple[NodeT, str, Word, Word]]:
        """Discovery path as (node, symbol-into-node, out1, out2); first entry
        has no incoming step."""
        chain = []
        cur: Optional[NodeT] = node
        while cur is not None:
            entry = preds[cur]
            if entry is None:
                chain.append((cur, "", (), ()))
                cur = None
            else:
                prev, sym, o1, o2 = entry
                chain.append((cur, sym, o1, o2))
                cur = prev
        chain.reverse()
        return chain

    def witness_from_paths(p1: list, p2: list) -> Verdict:
        # p1: path from a start node to the loop anchor; p2: anchor-to-anchor
        u1 = tuple(sym for (_, sym, _, _) in p1[1:])
        u2 = tuple(sym for (_, sym, _, _) in p2[1:])
        v1 = sum((o1 for (_, _, o1, _) in p1[1:]), ())
        w1 = sum((o2 for (_, _, _, o2) in p1[1:]), ())
        v2 = sum((o1 for (_, _, o1, _) in p2[1:]), ())
        w2 = sum((o2 for (_, _, _, o2) in p2[1:]), ())

        def rules_along(path, pick_out):
            rules = []
            for (prev, _, _, _), (cur, sym, o1, o2) in zip(path, path[1:]):
                out = pick_out(o1, o2)
                src = prev[0] if pick_out is _first else prev[1]
                dst = cur[0] if pick_out is _first else cur[1]
                rules.append(FstRule(src, sym, out, dst))
            return tuple(rules)

        run1 = rules_along(p1, _first) + rules_along(p2, _first)
        run2 = rules_along(p1, _second) + rules_along(p2, _second)
        witness = FstTwinWitness(
            u1=u1, u2=u2, run1_rules=run1, run2_rules=run2,
            v1=v1, v2=v2, w1=w1, w2=w2,
            delay_before=delta(v1, w1), delay_after=delta(v1 + v2, w1 + w2))
        verify_fst_twinning_witness(m, witness)
        return Verdict(Outcome.VIOLATED, witness=witness)

    def expansions(node: NodeT):
        q1, q2, d = node
        for symbol in symbols:
            for r1 in by_symbol.get((q1, symbol), ()):
                for r2 in by_symbol.get((q2, symbol), ()):
                    yield (r1.dst, r2.dst, delta_extend(d, r1.out, r2.out)), \
                        symbol, r1.out, r2.out

    def divergence_on_stack(stack, child) -> Optional[Verdict]:
        """Scan the current root-to-child path for a state pair occurring with
        two delays; the enclosed segment is a violating loop."""
        path = [(node, sym, o1, o2) for (node, _, sym, o1, o2) in stack]
        path.append(child)
        seen_pairs: dict[tuple[str, str], int] = {}
        for idx, (n, _, _, _) in enumerate(path):
            pair = (n[0], n[1])
            if pair in seen_pairs:
                j = seen_pairs[pair]
                if path[j][0][2] != n[2]:
                    return witness_from_paths(path[: j + 1], path[j: idx + 1])
            else:
                seen_pairs[pair] = idx
        return None

    # Depth-first so the divergence check sees whole root-to-node paths, with
    # a path-local index of pairs to make the per-step test cheap.
    for root in roots:
        stack = [(root, expansions(root), "", (), ())]
        on_path: dict[tuple[str, str], list[DelayPair]] = {}
        on_path.setdefault((root[0], root[1]), []).append(root[2])
        while stack:
            node, it = stack[-1][0], stack[-1][1]
            pushed = False
            for nxt, symbol, o1, o2 in it:
                child = (nxt, symbol, o1, o2)
                if _delay_len(nxt[2]) > cap:
                    # Its own discovery path must revisit a pair with two
                    # delays: more than 3|Q|² strictly growing steps.
                    found = divergence_on_stack(stack, child)
                    assert found is not None, "cap hit on a repeat-free path"
                    return found
                succs.setdefault(node, []).append(nxt)
                pair = (nxt[0], nxt[1])
                if any(earlier != nxt[2] for earlier in on_path.get(pair, ())):
                    found = divergence_on_stack(stack, child)
                    assert found is not None, "path index out of sync"
                    return found
                if nxt not in preds:
                    preds[nxt] = (node, symbol, o1, o2)
                    if node_budget is not None and len(preds) > node_budget:
                        raise StateExplosion(
                            f"product delay graph exceeded {node_budget} nodes")
                    stack.append((nxt, expansions(nxt), symbol, o1, o2))
                    on_path.setdefault(pair, []).append(nxt[2])
                    pushed = True
                    break
            if not pushed:
                stack.pop()
                on_path[(node[0], node[1])].pop()

    # Finite fixpoint: look for a loop between two delays of one state pair.
    by_pair: dict[tuple[str, str], list[NodeT]] = {}
    for node in preds:
        by_pair.setdefault((node[0], node[1]), []).append(node)
    for pair in sorted(by_pair):
        group = by_pair[pair]
        if len(group) < 2:
            continue
        targets = set(group)
        for anchor in sorted(group, key=lambda n: (n[2].left, n[2].right)):
            loop_pred: dict[NodeT, tuple[NodeT, str, Word, Word]] = {}
            stack = [anchor]
            hit = None
            while stack and hit is None:
                cur = stack.pop()
                for sym_nxt in succs.get(cur, ()):
                    if sym_nxt in loop_pred or sym_nxt == anchor:
                        continue
                    loop_pred[sym_nxt] = _step_between(m, by_symbol, cur, sym_nxt)
                    if sym_nxt in targets:
                        hit = sym_nxt
                        break
                    stack.append(sym_nxt)
            if hit is not None:
                p2 = []
                cur = hit
                while cur != anchor:
                    prev, sym, o1, o2 = loop_pred[cur]
                    p2.append((cur, sym, o1, o2))
                    cur = prev
                p2.append((anchor, "", (), ()))
                p2.reverse()
                return witness_from_paths(path_to(anchor), p2)
    return Verdict(Outcome.HOLDS)


def _first(a, b):
    return a


def _second(a, b):
    return b


def _step_between(m: FstMachine, by_symbol, src: tuple, dst: tuple):
    """One concrete (symbol, out1, out2) step realizing the product edge."""
    for symbol in sorted({r.symbol for r in m.rules}):
        for r1 in by_symbol.get((src[0], symbol), ()):
            for r2 in by_symbol.get((src[1], symbol), ()):
                if (r1.dst, r2.dst) == (dst[0], dst[1]) \
                        and delta_extend(src[2], r1.out, r2.out) == dst[2]:
                    return (src, symbol, r1.out, r2.out)
    raise AssertionError("recorded product edge has no realizing step")


def verify_fst_twinning_witness(fst: FstMachine, w: FstTwinWitness) -> None:
    """Replay both runs rule by rule; raises AssertionError on any mismatch."""
    word = w.u1 + w.u2
    for rules, out_all in ((w.run1_rules, w.v1 + w.v2), (w.run2_rules, w.w1 + w.w2)):
        assert len(rules) == len(word)
        assert rules[0].src in fst.initial if rules else True
        collected: Word = ()
        for rule, symbol in zip(rules, word):
            assert rule in fst.rules, f"rule {rule} not in machine"
            assert rule.symbol == symbol
            collected += rule.out
        for prev, nxt in zip(rules, rules[1:]):
            assert prev.dst == nxt.src, "runs do not chain"
        assert collected == out_all
    k = len(w.u1)
    q_mid1 = w.run1_rules[k - 1].dst if k else w.run1_rules[0].src
    q_mid2 = w.run2_rules[k - 1].dst if k else w.run2_rules[0].src
    assert w.run1_rules[-1].dst == q_mid1, "run 1 does not loop"
    assert w.run2_rules[-1].dst == q_mid2, "run 2 does not loop"
    assert delta(w.v1, w.w1) == w.delay_before
    assert delta(w.v1 + w.v2, w.w1 + w.w2) == w.delay_after
    assert w.delay_before != w.delay_after, "claimed delays are equal"


# ---------------------------------------------------------------------------
# Domain height

def _ascend_edges(vpt: Vpt) -> dict[str, list[tuple[str, InputWord]]]:
    """q -> p whenever one call from q plus a well-matched walk lands on p one
    level higher; the word realizes the ascent."""
    wmw = well_matched_witnesses(vpt)
    edges: dict[str, list[tuple[str, InputWord]]] = {}
    for r in sorted(vpt.call_rules):
        for (a, p), word in sorted(wmw.items()):
            if a == r.dst:
                edges.setdefault(r.src, []).append((p, (r.symbol,) + word))
    return edges


def _access_words(vpt: Vpt) -> dict[str, InputWord]:
    """Some input word reaching each forward-reachable state."""
    wmw = well_matched_witnesses(vpt)
    words: dict[str, InputWord] = {q: () for q in sorted(vpt.initial)}
    changed = True
    while changed:
        changed = False
        for q in list(words):
            for r in sorted(vpt.internal_rules):
                if r.src == q and r.dst not in words:
                    words[r.dst] = words[q] + (r.symbol,)
                    changed = True
            for r in sorted(vpt.call_rules):
                if r.src == q and r.dst not in words:
                    words[r.dst] = words[q] + (r.symbol,)
                    changed = True
            for (a, p), word in wmw.items():
                if a == q and p not in words:
                    words[p] = words[q] + word
                    changed = True
    return words


def domain_height_bounded(vpt: Vpt):
    """Bounded(h_max) or Unbounded(pump witness); expects a reduced machine."""
    edges = _ascend_edges(vpt)
    color: dict[str, int] = {}
    for start in sorted(vpt.states):
        if color.get(start, 0) != 0:
            continue
        found = _find_ascent_cycle(start, edges, color)
        if found is not None:
            state, cycle_word = found
            access = _access_words(vpt)
            return Unbounded(state=state, prefix=access.get(state, ()),
                             cycle=cycle_word)

    wmw = well_matched_witnesses(vpt)
    wm_pairs = set(wmw)
    level = {p for q in vpt.initial for (a, p) in wm_pairs if a == q}
    h_max = 0
    k = 0
    while level:
        nxt_states: set[str] = set()
        for q in level:
            for r in vpt.call_rules:
                if r.src == q:
                    for (a, p) in wm_pairs:
                        if a == r.dst:
                            nxt_states.add(p)
        k += 1
        if nxt_states:
            h_max = k
        if k > len(vpt.states) + 1:
            raise AssertionError("ascent iteration exceeded |Q| without a cycle")
        level = nxt_states
    return Bounded(h_max=h_max)


def _find_ascent_cycle(start: str, edges: dict[str, list[tuple[str, InputWord]]],
                       color: dict[str, int]) -> Optional[tuple[str, InputWord]]:
    """Iterative DFS; returns (state on cycle, input word realizing the cycle)."""
    path: list[tuple[str, InputWord]] = [(start, ())]
    iters = [iter(edges.get(start, ()))]
    color[start] = 1
    while iters:
        advanced = False
        for (nxt, word) in iters[-1]:
            if color.get(nxt, 0) == 1:
                idx = next(i for i, (s, _) in enumerate(path) if s == nxt)
                cycle_word = sum((w for (_, w) in path[idx + 1:]), ()) + word
                return (nxt, cycle_word)
            if color.get(nxt, 0) == 0:
                color[nxt] = 1
                path.append((nxt, word))
                iters.append(iter(edges.get(nxt, ())))
                advanced = True
                break
        if not advanced:
            state, _ = path.pop()
            color[state] = 2
            iters.pop()
    return None


# ---------------------------------------------------------------------------
# BM

def check_bm(vpt: Vpt, delay_cap: Optional[int] = None,
             config_budget: int = 200_000) -> Verdict:
    """Exact: bounded domain height plus twinning of the height-capped FST."""
    reduced, state_map, _ = reduce_with_map(vpt)
    shape = domain_height_bounded(reduced)
    if isinstance(shape, Unbounded):
        shape = replace(shape, state=state_map[shape.state])
        _verify_pump(vpt, shape)
        return Verdict(Outcome.VIOLATED, witness=shape,
                       diagnostics="domain height is unbounded")
    try:
        flat = fst_of(reduced, shape.h_max, max_states=config_budget)
        verdict = check_fst_twinning(flat, delay_cap=delay_cap,
                                     node_budget=config_budget)
    except StateExplosion as exc:
        return Verdict(Outcome.UNKNOWN, diagnostics=str(exc))
    if verdict.outcome is Outcome.VIOLATED:
        return replace(verdict, diagnostics=(
            f"twinning fails on the height-{shape.h_max} restriction"))
    return replace(verdict, diagnostics=f"domain height bounded by {shape.h_max}")


def _verify_pump(vpt: Vpt, w: Unbounded) -> None:
    """The pump witness must keep runs alive while the pending height grows."""
    configs = {Configuration(q, ()) for q in vpt.initial}
    word = w.prefix + w.cycle + w.cycle
    ends = step_runs_many(vpt, configs, word)
    assert ends, "pump witness replay died"
    grow = step_runs_many(vpt, configs, w.prefix + w.cycle)
    base = step_runs_many(vpt, configs, w.prefix)
    assert max(len(c.stack) for c, _ in grow) > max(len(c.stack) for c, _ in base), \
        "pump witness does not ascend"


def step_runs_many(vpt: Vpt, configs, word):
    out = set()
    for c in configs:
        out |= step_runs(vpt, c, word)
    return out


# ---------------------------------------------------------------------------
# Joint search machinery (shared by the HTP and MTP searches)

class _RuleIndex:
    def __init__(self, vpt: Vpt):
        self.vpt = vpt
        self.symbols = sorted(vpt.alphabet.symbols)
        self.kind = {s: classify(s, vpt.alphabet) for s in self.symbols}
        self.calls: dict[tuple[str, str], list] = {}
        for r in sorted(vpt.call_rules):
            self.calls.setdefault((r.src, r.symbol), []).append(r)
        self.rets: dict[tuple[str, str, str], list] = {}
        for r in sorted(vpt.return_rules):
            self.rets.setdefault((r.src, r.symbol, r.pop), []).append(r)
        self.ints: dict[tuple[str, str], list] = {}
        for r in sorted(vpt.internal_rules):
            self.ints.setdefault((r.src, r.symbol), []).append(r)

    def moves(self, cfg: Configuration, symbol: str) -> list[tuple[Configuration, Word]]:
        kind = self.kind[symbol]
        out = []
        if kind is SymbolKind.CALL:
            for r in self.calls.get((cfg.state, symbol), ()):
                out.append((Configuration(r.dst, cfg.stack + (r.push,)), r.out))
        elif kind is SymbolKind.RETURN:
            if cfg.stack:
                for r in self.rets.get((cfg.state, symbol, cfg.stack[-1]), ()):
                    out.append((Configuration(r.dst, cfg.stack[:-1]), r.out))
        else:
            for r in self.ints.get((cfg.state, symbol), ()):
                out.append((Configuration(r.dst, cfg.stack), r.out))
        return out


def _wn_loop_states(vpt: Vpt) -> set[str]:
    """States with a nonempty well-nested input loop back to themselves."""
    wm = set(well_matched_witnesses(vpt))
    by_left: dict[str, list[str]] = {}
    for (a, b) in wm:
        by_left.setdefault(a, []).append(b)
    steps: set[tuple[str, str]] = set()
    for r in vpt.internal_rules:
        steps.add((r.src, r.dst))
    for c in vpt.call_rules:
        for x in by_left.get(c.dst, ()):
            for r in vpt.return_rules:
                if r.src == x and r.pop == c.push:
                    steps.add((c.src, r.dst))
    loops: set[str] = set()
    for q in vpt.states:
        for (a, b) in steps:
            if (q, a) in wm and (b, q) in wm:
                loops.add(q)
                break
    return loops


def _joint_pairs(vpt: Vpt) -> set[tuple[str, str]]:
    """State pairs jointly reachable on a common input, stacks abstracted."""
    idx = _RuleIndex(vpt)
    pairs = {(a, b) for a in vpt.initial for b in vpt.initial}
    frontier = list(pairs)
    while frontier:
        (a, b) = frontier.pop()
        for symbol in idx.symbols:
            kind = idx.kind[symbol]
            if kind is SymbolKind.CALL:
                steps_a = [r.dst for r in idx.calls.get((a, symbol), ())]
                steps_b = [r.dst for r in idx.calls.get((b, symbol), ())]
            elif kind is SymbolKind.INTERNAL:
                steps_a = [r.dst for r in idx.ints.get((a, symbol), ())]
                steps_b = [r.dst for r in idx.ints.get((b, symbol), ())]
            else:
                steps_a = [r.dst for r in vpt.return_rules
                           if r.src == a and r.symbol == symbol]
                steps_b = [r.dst for r in vpt.return_rules
                           if r.src == b and r.symbol == symbol]
            for na in steps_a:
                for nb in steps_b:
                    if (na, nb) not in pairs:
                        pairs.add((na, nb))
                        frontier.append((na, nb))
    return pairs


def _resolve_cap(bounds: SearchBounds, vpt: Vpt) -> int:
    if bounds.delay_cap is not None:
        return bounds.delay_cap
    m = metrics(vpt)
    return 3 * m.n ** 2 * max(m.M, 1)


def _project_config(cfg: Configuration, state_map: dict[str, str],
                    sym_map: dict[str, str]) -> Configuration:
    return Configuration(state_map[cfg.state],
                         tuple(sym_map[g] for g in cfg.stack))


# ---------------------------------------------------------------------------
# HTP search

def check_htp(vpt: Vpt, bounds: Optional[SearchBounds] = None) -> Verdict:
    """Search for two runs on a common input looping (each on its own
    configuration) around a common well-nested word with diverging delay."""
    bounds = bounds or SearchBounds()
    reduced, state_map, sym_map = reduce_with_map(vpt)
    cap = _resolve_cap(bounds, reduced)
    eff = replace(bounds, delay_cap=cap)
    if not reduced.initial:
        return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff,
                       diagnostics="empty domain")

    loopers = _wn_loop_states(reduced)
    if not loopers or not any(a in loopers and b in loopers
                              for (a, b) in _joint_pairs(reduced)):
        return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff, diagnostics=(
            "no jointly reachable state pair admits a nonempty well-nested "
            "loop, so no witness of any size exists"))

    idx = _RuleIndex(reduced)
    empty_delay = DelayPair((), ())
    # nodes: (1, c1, c2, d) before the loop, (2, c1, c2, d, a1, a2, da) inside
    preds: dict[tuple, Optional[tuple[tuple, Optional[str], Word, Word]]] = {}
    layer: deque[tuple] = deque()
    for i1 in sorted(reduced.initial):
        for i2 in sorted(reduced.initial):
            node = (1, Configuration(i1, ()), Configuration(i2, ()), empty_delay)
            if node not in preds:
                preds[node] = None
                layer.append(node)

    completed = -1
    budget_hit = False

    def anchor_of(node):
        return None if node[0] == 1 else (node[4], node[5], node[6])

    for length in range(bounds.max_len + 1):
        if not layer:
            completed = bounds.max_len
            break
        nxt_layer: deque[tuple] = deque()
        work = layer
        while work:
            node = work.popleft()
            phase, c1, c2, d = node[0], node[1], node[2], node[3]
            if phase == 1 and c1.state in loopers and c2.state in loopers:
                eps = (2, c1, c2, d, c1, c2, d)
                if eps not in preds:
                    preds[eps] = (node, None, (), ())
                    work.append(eps)
            for symbol in idx.symbols:
                kind = idx.kind[symbol]
                if phase == 2 and kind is SymbolKind.RETURN \
                        and len(c1.stack) <= len(node[4].stack):
                    continue  # a pop here would dip below the loop anchor
                for (n1, o1) in idx.moves(c1, symbol):
                    if len(n1.stack) > bounds.max_height:
                        continue
                    for (n2, o2) in idx.moves(c2, symbol):
                        d2 = delta_extend(d, o1, o2)
                        if _delay_len(d2) > cap:
                            continue
                        if phase == 1:
                            child = (1, n1, n2, d2)
                        else:
                            a1, a2, da = node[4], node[5], node[6]
                            child = (2, n1, n2, d2, a1, a2, da)
                            if n1 == a1 and n2 == a2 and d2 != da:
                                preds[child] = (node, symbol, o1, o2)
                                return _htp_witness(vpt, reduced, state_map,
                                                    sym_map, preds, child)
                        if child not in preds:
                            preds[child] = (node, symbol, o1, o2)
                            if len(preds) > _NODE_BUDGET:
                                budget_hit = True
                                break
                            nxt_layer.append(child)
                    if budget_hit:
                        break
                if budget_hit:
                    break
            if budget_hit:
                break
        if budget_hit:
            break
        completed = length
        layer = nxt_layer

    if budget_hit and completed < bounds.max_len:
        eff = replace(eff, max_len=max(completed, 0))
        return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff, diagnostics=(
            f"node budget exhausted; exhaustive only up to length {max(completed, 0)}"))
    return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff)


def _chain(preds, node):
    steps = []
    cur = node
    while True:
        entry = preds[cur]
        if entry is None:
            steps.append((cur, None, (), ()))
            break
        prev, sym, o1, o2 = entry
        steps.append((cur, sym, o1, o2))
        cur = prev
    steps.reverse()
    return steps


def _htp_witness(original: Vpt, reduced: Vpt, state_map, sym_map,
                 preds, final_node) -> Verdict:
    steps = _chain(preds, final_node)
    u1, u2 = [], []
    v1, v2, w1, w2 = [], [], [], []
    anchor1 = anchor2 = None
    in_loop = False
    for (node, sym, o1, o2) in steps:
        if sym is None and node[0] == 2 and not in_loop:
            in_loop = True
            anchor1, anchor2 = node[1], node[2]
            continue
        if sym is None:
            continue
        if in_loop:
            u2.append(sym)
            v2.extend(o1)
            w2.extend(o2)
        else:
            u1.append(sym)
            v1.extend(o1)
            w1.extend(o2)
    init1 = steps[0][0][1].state
    init2 = steps[0][0][2].state
    a1 = _project_config(anchor1, state_map, sym_map)
    a2 = _project_config(anchor2, state_map, sym_map)
    witness = VptTwinWitness(
        u1=tuple(u1), u2=tuple(u2), u3=(), u4=(),
        init1=state_map[init1], init2=state_map[init2],
        configs1=(a1, a1, a1, a1), configs2=(a2, a2, a2, a2),
        outs1=(tuple(v1), tuple(v2), (), ()),
        outs2=(tuple(w1), tuple(w2), (), ()),
        delay_before=delta(tuple(v1), tuple(w1)),
        delay_after=delta(tuple(v1) + tuple(v2), tuple(w1) + tuple(w2)))
    verify_vpt_twinning_witness(original, witness)
    return Verdict(Outcome.VIOLATED, witness=witness)


# ---------------------------------------------------------------------------
# MTP search

def check_mtp(vpt: Vpt, bounds: Optional[SearchBounds] = None) -> Verdict:
    """Search for matched ascent/descent loops (u2/u4 around a well-nested
    u3) whose pumping changes the delay between two runs on a common input."""
    bounds = bounds or SearchBounds()
    reduced, state_map, sym_map = reduce_with_map(vpt)
    cap = _resolve_cap(bounds, reduced)
    eff = replace(bounds, delay_cap=cap)
    if not reduced.initial:
        return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff,
                       diagnostics="empty domain")

    idx = _RuleIndex(reduced)
    empty_delay = DelayPair((), ())
    # node shapes, by phase tag:
    #  (1, c1, c2, dF)                          before the ascent loop
    #  (2, c1, c2, dA, dF, p, p', ah, ne)       inside u2 (anchor states p,p';
    #                                           ah = anchor height)
    #  (3, c1, c2, dA, dF, ah, f3, ne)          inside u3 (f3 = its floor)
    #  (4, c1, c2, dA, dF, ah, q3, q3', ne)     inside u4
    preds: dict[tuple, Optional[tuple[tuple, Optional[str], Word, Word]]] = {}
    layer: deque[tuple] = deque()
    for i1 in sorted(reduced.initial):
        for i2 in sorted(reduced.initial):
            node = (1, Configuration(i1, ()), Configuration(i2, ()), empty_delay)
            if node not in preds:
                preds[node] = None
                layer.append(node)

    completed = -1
    budget_hit = False

    # The anchor/closure gates compare states of the caller's machine, not the
    # reduced one: the reduction refines states by pop obligation, and a loop
    # that is closed upstairs may look open downstairs after refinement.
    def try_final(node) -> bool:
        if node[0] != 4:
            return False
        _, c1, c2, dA, dF, ah, q3a, q3b, ne = node
        return (ne and len(c1.stack) == ah and state_map[c1.state] == q3a
                and state_map[c2.state] == q3b and dA != dF)

    def expansions(node):
        """Same-length ε-steps: phase entries and hand-offs."""
        out = []
        phase = node[0]
        if phase == 1:
            _, c1, c2, dF = node
            out.append((2, c1, c2, dF, dF, state_map[c1.state],
                        state_map[c2.state], len(c1.stack), False))
        elif phase == 2:
            _, c1, c2, dA, dF, p1, p2, ah, ne = node
            if state_map[c1.state] == p1 and state_map[c2.state] == p2:
                out.append((3, c1, c2, dA, dF, ah, len(c1.stack), ne))
        elif phase == 3:
            _, c1, c2, dA, dF, ah, f3, ne = node
            if len(c1.stack) == f3:
                out.append((4, c1, c2, dA, dF, ah, state_map[c1.state],
                            state_map[c2.state], ne))
        return out

    final = None
    for length in range(bounds.max_len + 1):
        if final is not None or not layer:
            completed = bounds.max_len
            break
        nxt_layer: deque[tuple] = deque()
        work = layer
        while work and final is None:
            node = work.popleft()
            for eps in expansions(node):
                if eps not in preds:
                    preds[eps] = (node, None, (), ())
                    if try_final(eps):
                        final = eps
                        break
                    work.append(eps)
            if final is not None:
                break
            phase, c1, c2 = node[0], node[1], node[2]
            floor = 0
            if phase == 2:
                floor = node[7]
            elif phase == 3:
                floor = node[6]
            elif phase == 4:
                floor = node[5]
            for symbol in idx.symbols:
                kind = idx.kind[symbol]
                if phase != 1 and kind is SymbolKind.RETURN \
                        and len(c1.stack) <= floor:
                    continue
                for (n1, o1) in idx.moves(c1, symbol):
                    if len(n1.stack) > bounds.max_height:
                        continue
                    for (n2, o2) in idx.moves(c2, symbol):
                        if phase == 1:
                            dF2 = delta_extend(node[3], o1, o2)
                            if _delay_len(dF2) > cap:
                                continue
                            child = (1, n1, n2, dF2)
                        elif phase == 2:
                            _, _, _, dA, dF, p1, p2, ah, ne = node
                            dF2 = delta_extend(dF, o1, o2)
                            if _delay_len(dF2) > cap:
                                continue
                            child = (2, n1, n2, dA, dF2, p1, p2, ah, True)
                        elif phase == 3:
                            _, _, _, dA, dF, ah, f3, ne = node
                            dA2 = delta_extend(dA, o1, o2)
                            dF2 = delta_extend(dF, o1, o2)
                            if _delay_len(dA2) > cap or _delay_len(dF2) > cap:
                                continue
                            child = (3, n1, n2, dA2, dF2, ah, f3, ne)
                        else:
                            _, _, _, dA, dF, ah, q3a, q3b, ne = node
                            dF2 = delta_extend(dF, o1, o2)
                            if _delay_len(dF2) > cap:
                                continue
                            child = (4, n1, n2, dA, dF2, ah, q3a, q3b, True)
                        if child not in preds:
                            preds[child] = (node, symbol, o1, o2)
                            if try_final(child):
                                final = child
                                break
                            if len(preds) > _NODE_BUDGET:
                                budget_hit = True
                                break
                            nxt_layer.append(child)
                    if final is not None or budget_hit:
                        break
                if final is not None or budget_hit:
                    break
            if budget_hit:
                break
        if final is not None or budget_hit:
            break
        completed = length
        layer = nxt_layer

    if final is not None:
        return _mtp_witness(vpt, reduced, state_map, sym_map, preds, final)
    if budget_hit and completed < bounds.max_len:
        eff = replace(eff, max_len=max(completed, 0))
        return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff, diagnostics=(
            f"node budget exhausted; exhaustive only up to length {max(completed, 0)}"))
    return Verdict(Outcome.NO_WITNESS_UP_TO, bounds=eff)


def _mtp_witness(original: Vpt, reduced: Vpt, state_map, sym_map,
                 preds, final_node) -> Verdict:
    steps = _chain(preds, final_node)
    segs_u = {1: [], 2: [], 3: [], 4: []}
    segs_v = {1: [], 2: [], 3: [], 4: []}
    segs_w = {1: [], 2: [], 3: [], 4: []}
    marks: dict[int, tuple[Configuration, Configuration]] = {}
    for (node, sym, o1, o2) in steps:
        phase = node[0]
        if sym is None:
            # phase entry: remember the configuration pair at the boundary
            if phase in (2, 3, 4) and phase not in marks:
                marks[phase] = (node[1], node[2])
            continue
        segs_u[phase].append(sym)
        segs_v[phase].extend(o1)
        segs_w[phase].extend(o2)
    # boundary configs: after u1 = entry to phase 2; after u2 = entry to 3;
    # after u3 = entry to 4; after u4 = the final node itself
    A = marks[2]
    B = marks[3]
    C = marks[4]
    D = (final_node[1], final_node[2])
    pc = lambda pair: ( _project_config(pair[0], state_map, sym_map),
                        _project_config(pair[1], state_map, sym_map))
    A, B, C, D = pc(A), pc(B), pc(C), pc(D)
    init1 = steps[0][0][1].state
    init2 = steps[0][0][2].state
    v = {k: tuple(x) for k, x in segs_v.items()}
    w = {k: tuple(x) for k, x in segs_w.items()}
    witness = VptTwinWitness(
        u1=tuple(segs_u[1]), u2=tuple(segs_u[2]),
        u3=tuple(segs_u[3]), u4=tuple(segs_u[4]),
        init1=state_map[init1], init2=state_map[init2],
        configs1=(A[0], B[0], C[0], D[0]),
        configs2=(A[1], B[1], C[1], D[1]),
        outs1=(v[1], v[2], v[3], v[4]),
        outs2=(w[1], w[2], w[3], w[4]),
        delay_before=delta(v[1] + v[3], w[1] + w[3]),
        delay_after=delta(v[1] + v[2] + v[3] + v[4],
                          w[1] + w[2] + w[3] + w[4]))
    verify_vpt_twinning_witness(original, witness)
    return Verdict(Outcome.VIOLATED, witness=witness)


def verify_vpt_twinning_witness(vpt: Vpt, w: VptTwinWitness) -> None:
    """Replay both runs through the four segments on the given machine and
    re-check every premise plus the delay divergence; AssertionError on any
    mismatch."""
    assert len(w.u2) + len(w.u4) >= 1, "both loops are empty"
    assert is_well_nested(w.u3, vpt.alphabet), "u3 is not well-nested"
    assert is_well_nested(w.u2 + w.u4, vpt.alphabet), "u2·u4 is not well-nested"
    for init, cfgs, outs in ((w.init1, w.configs1, w.outs1),
                             (w.init2, w.configs2, w.outs2)):
        assert init in vpt.initial
        A, B, C, D = cfgs
        assert B.state == A.state, "ascent loop does not return to its state"
        assert B.stack[: len(A.stack)] == A.stack, "ascent loop touched the base"
        assert C.stack == B.stack, "u3 changed the stack"
        assert D.state == C.state, "descent loop does not return to its state"
        assert D.stack == A.stack, "descent loop did not restore the stack"
        cur = Configuration(init, ())
        for word, out, target in zip((w.u1, w.u2, w.u3, w.u4), outs, cfgs):
            results = step_runs(vpt, cur, word)
            assert (target, out) in results, "segment replay failed"
            cur = target
        assert co_accessible(vpt, D), "end configuration is not co-accessible"
    v1, v2, v3, v4 = w.outs1
    w1, w2, w3, w4 = w.outs2
    assert delta(v1 + v3, w1 + w3) == w.delay_before
    assert delta(v1 + v2 + v3 + v4, w1 + w2 + w3 + w4) == w.delay_after
    assert w.delay_before != w.delay_after, "claimed delays are equal"


# ---------------------------------------------------------------------------
# Combined report

def classify_streamability(vpt: Vpt,
                           bounds: Optional[SearchBounds] = None) -> StreamabilityReport:
    bounds = bounds or SearchBounds()
    probe = check_functional_bounded(vpt, min(bounds.max_len, 10))
    if isinstance(probe, CounterExample):
        raise NotFunctionalWitness(probe.word, probe.out1, probe.out2)
    hbm = check_htp(vpt, bounds)
    obm = check_mtp(vpt, bounds)
    bm = check_bm(vpt)

    if hbm.outcome is Outcome.VIOLATED and obm.outcome is not Outcome.VIOLATED:
        # any horizontal witness is a matched witness with empty u3/u4
        try:
            verify_vpt_twinning_witness(vpt, hbm.witness)
        except AssertionError as exc:
            raise InconsistentVerdicts(
                f"horizontal witness did not transfer: {exc}") from exc
        obm = Verdict(Outcome.VIOLATED, witness=hbm.witness,
                      diagnostics="transferred from the horizontal witness")
    if bm.outcome is Outcome.HOLDS and (hbm.outcome is Outcome.VIOLATED
                                        or obm.outcome is Outcome.VIOLATED):
        raise InconsistentVerdicts(
            "bounded memory holds but a twinning violation was found")
    return StreamabilityReport(bm=bm, hbm=hbm, obm=obm)
