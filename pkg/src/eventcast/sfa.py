"""Symbolic automata over minterm alphabets.

Compilation pipeline: pattern AST -> nondeterministic automaton for
"anything, then the pattern" (a self-loop over the whole alphabet feeds the
pattern fragment, so detection can start at any stream position) -> subset
determinization -> history unfolding that makes the last ``m`` symbols
recoverable from the state alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .algebra import (
    Event,
    Minterm,
    MintermClassifier,
    PredicateAtom,
    SatOracle,
    compute_minterms,
)
from .pattern import Concat, Leaf, PatternSpec, Plus, Star, Union

EPSILON = None


class DisambiguationLimitError(RuntimeError):
    """History unfolding exceeded the configured state budget."""


@dataclass(frozen=True)
class SymbolicNfa:
    """Nondeterministic automaton; guards are indices into ``alphabet``."""

    alphabet: tuple[Minterm, ...]
    n_states: int
    initial: int
    finals: frozenset[int]
    transitions: tuple[tuple[int, int | None, int], ...]

    def eps_closure(self, states: Iterable[int]) -> frozenset[int]:
        seen = set(states)
        stack = list(seen)
        while stack:
            q = stack.pop()
            for src, sym, dst in self.transitions:
                if src == q and sym is EPSILON and dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return frozenset(seen)

    def move(self, states: Iterable[int], symbol: int) -> frozenset[int]:
        return frozenset(
            dst for src, sym, dst in self.transitions if src in states and sym == symbol
        )

    def scan(self, symbols: Sequence[int]) -> list[bool]:
        """Acceptance flag after each symbol (subset-tracking simulation)."""
        current = self.eps_closure({self.initial})
        flags = []
        for sym in symbols:
            current = self.eps_closure(self.move(current, sym))
            flags.append(bool(current & self.finals))
        return flags

    def accepts(self, symbols: Sequence[int]) -> bool:
        current = self.eps_closure({self.initial})
        for sym in symbols:
            current = self.eps_closure(self.move(current, sym))
        return bool(current & self.finals)


@dataclass
class SymbolicDfa:
    """Total deterministic automaton; ``delta[state][symbol]`` is the successor.

    Guards are minterms, so at most one transition per state applies to any
    event; totality makes it exactly one.
    """

    alphabet: tuple[Minterm, ...]
    n_states: int
    initial: int
    finals: frozenset[int]
    delta: tuple[tuple[int, ...], ...]
    _classifier: MintermClassifier | None = field(
        default=None, init=False, repr=False, compare=False
    )

    @property
    def classifier(self) -> MintermClassifier:
        if self._classifier is None:
            self._classifier = MintermClassifier(self.alphabet)
        return self._classifier

    def classify_event(self, event: Event) -> int:
        return self.classifier.symbol(event)

    def step_symbol(self, state: int, symbol: int) -> tuple[int, bool]:
        nxt = self.delta[state][symbol]
        return nxt, nxt in self.finals

    def accepts_symbols(self, symbols: Sequence[int]) -> bool:
        state = self.initial
        for sym in symbols:
            state = self.delta[state][sym]
        return state in self.finals

    def scan(self, symbols: Sequence[int]) -> list[bool]:
        state = self.initial
        flags = []
        for sym in symbols:
            state = self.delta[state][sym]
            flags.append(state in self.finals)
        return flags

    def successors(self, state: int) -> tuple[int, ...]:
        return tuple(sorted(set(self.delta[state])))


@dataclass
class DisambiguatedDfa(SymbolicDfa):
    """Deterministic automaton whose states determine the last ``m`` minterms.

    ``annotation`` maps every state reachable by at least ``m`` transitions to
    the unique minterm word (symbol indices) of length ``m`` leading to it;
    shallower states are omitted.  ``origin`` maps each state back to the
    state of the automaton that was unfolded.
    """

    order: int = 0
    annotation: dict[int, tuple[int, ...]] = field(default_factory=dict)
    origin: tuple[int, ...] = ()


def step(dfa: SymbolicDfa, state: int, event: Event) -> tuple[int, bool]:
    """Advance one event: classify to its minterm, follow delta.

    Returns the successor state and whether it is final (a detection).
    """
    return dfa.step_symbol(state, dfa.classify_event(event))


def compile_snfa(spec: PatternSpec, oracle: SatOracle | None = None) -> SymbolicNfa:
    """Thompson-style construction of the skip-prefixed pattern automaton.

    The minterm alphabet is computed over the atoms of all variable bindings
    plus the declared extra features; each variable leaf becomes one
    transition per minterm that entails the variable's guard formula.
    """
    atoms: dict[tuple, PredicateAtom] = {}
    for formula in spec.bindings.values():
        for a in formula.atoms():
            atoms.setdefault((a.name, a.args), a)
    for a in spec.extras:
        atoms.setdefault((a.name, a.args), a)
    minterms = compute_minterms(tuple(atoms.values()), oracle)

    guard_symbols = {
        var: tuple(
            i for i, m in enumerate(minterms) if formula.under(m.assignment())
        )
        for var, formula in spec.bindings.items()
    }

    transitions: list[tuple[int, int | None, int]] = []
    counter = 0

    def new_state() -> int:
        nonlocal counter
        counter += 1
        return counter - 1

    def build(node) -> tuple[int, int]:
        if isinstance(node, Leaf):
            s, e = new_state(), new_state()
            for sym in guard_symbols[node.var]:
                transitions.append((s, sym, e))
            return s, e
        if isinstance(node, Concat):
            frags = [build(p) for p in node.parts]
            for (_, e1), (s2, _) in zip(frags, frags[1:]):
                transitions.append((e1, EPSILON, s2))
            return frags[0][0], frags[-1][1]
        if isinstance(node, Union):
            s, e = new_state(), new_state()
            for part in node.parts:
                ps, pe = build(part)
                transitions.append((s, EPSILON, ps))
                transitions.append((pe, EPSILON, e))
            return s, e
        if isinstance(node, Star):
            s, e = new_state(), new_state()
            ps, pe = build(node.child)
            transitions.append((s, EPSILON, e))
            transitions.append((s, EPSILON, ps))
            transitions.append((pe, EPSILON, ps))
            transitions.append((pe, EPSILON, e))
            return s, e
        if isinstance(node, Plus):
            return build(Concat((node.child, Star(node.child))))
        raise TypeError(f"unknown pattern node {node!r}")

    start = new_state()
    for sym in range(len(minterms)):
        transitions.append((start, sym, start))
    frag_start, frag_end = build(spec.ast)
    transitions.append((start, EPSILON, frag_start))

    return SymbolicNfa(
        alphabet=tuple(minterms),
        n_states=counter,
        initial=start,
        finals=frozenset({frag_end}),
        transitions=tuple(transitions),
    )


def determinize(nfa: SymbolicNfa) -> SymbolicDfa:
    """Subset construction over the minterm alphabet.

    The result is total (the empty subset acts as dead state when reachable)
    and contains only reachable subset-states, numbered in BFS discovery
    order with symbols visited in canonical minterm order.
    """
    n_syms = len(nfa.alphabet)
    moves: list[dict[int, list[int]]] = [dict() for _ in range(n_syms)]
    eps: list[list[int]] = [[] for _ in range(nfa.n_states)]
    for src, sym, dst in nfa.transitions:
        if sym is EPSILON:
            eps[src].append(dst)
        else:
            moves[sym].setdefault(src, []).append(dst)

    def closure(states: frozenset[int]) -> frozenset[int]:
        seen = set(states)
        stack = list(states)
        while stack:
            q = stack.pop()
            for dst in eps[q]:
                if dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return frozenset(seen)

    start = closure(frozenset({nfa.initial}))
    ids: dict[frozenset[int], int] = {start: 0}
    order = [start]
    delta_rows: list[list[int]] = []
    i = 0
    while i < len(order):
        subset = order[i]
        row = []
        for sym in range(n_syms):
            targets = set()
            table = moves[sym]
            for q in subset:
                targets.update(table.get(q, ()))
            nxt = closure(frozenset(targets))
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            row.append(ids[nxt])
        delta_rows.append(row)
        i += 1

    finals = frozenset(i for i, subset in enumerate(order) if subset & nfa.finals)
    return SymbolicDfa(
        alphabet=nfa.alphabet,
        n_states=len(order),
        initial=0,
        finals=finals,
        delta=tuple(tuple(r) for r in delta_rows),
    )


def disambiguate(
    dfa: SymbolicDfa, m: int, max_states: int = 50_000
) -> DisambiguatedDfa:
    """Unfold states until the last ``m`` symbols are a function of the state.

    Each reachable (state, last-m-word) pair becomes its own state, which is
    exactly the fixpoint of cloning any state with more than one possible
    incoming word.  States reachable only by fewer than ``m`` transitions keep
    a shorter word and carry no annotation.  ``m = 0`` is the identity.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return DisambiguatedDfa(
            alphabet=dfa.alphabet,
            n_states=dfa.n_states,
            initial=dfa.initial,
            finals=dfa.finals,
            delta=dfa.delta,
            order=0,
            annotation={},
            origin=tuple(range(dfa.n_states)),
        )

    n_syms = len(dfa.alphabet)
    start = (dfa.initial, ())
    ids: dict[tuple[int, tuple[int, ...]], int] = {start: 0}
    order = [start]
    delta_rows: list[list[int]] = []
    i = 0
    while i < len(order):
        q, word = order[i]
        row = []
        for sym in range(n_syms):
            nxt = (dfa.delta[q][sym], (word + (sym,))[-m:])
            if nxt not in ids:
                if len(order) >= max_states:
                    raise DisambiguationLimitError(
                        f"unfolding for m={m} exceeds {max_states} states "
                        f"(alphabet of {n_syms} minterms); raise max_states or "
                        "lower m"
                    )
                ids[nxt] = len(order)
                order.append(nxt)
            row.append(ids[nxt])
        delta_rows.append(row)
        i += 1

    finals = frozenset(i for i, (q, _) in enumerate(order) if q in dfa.finals)
    annotation = {i: word for i, (_, word) in enumerate(order) if len(word) == m}
    return DisambiguatedDfa(
        alphabet=dfa.alphabet,
        n_states=len(order),
        initial=0,
        finals=finals,
        delta=tuple(tuple(r) for r in delta_rows),
        order=m,
        annotation=annotation,
        origin=tuple(q for q, _ in order),
    )


def compile_pattern(spec: PatternSpec, oracle: SatOracle | None = None) -> DisambiguatedDfa:
    """Full pipeline: build, determinize, unfold to the spec's order."""
    return disambiguate(determinize(compile_snfa(spec, oracle)), spec.order)


@dataclass(frozen=True)
class ClassicalDfa:
    """Plain finite automaton over named symbols; used as a testing oracle."""

    symbols: tuple[str, ...]
    n_states: int
    initial: int
    finals: frozenset[int]
    delta: tuple[tuple[int, ...], ...]

    def accepts(self, word: Sequence[str]) -> bool:
        index = {s: i for i, s in enumerate(self.symbols)}
        state = self.initial
        for sym in word:
            state = self.delta[state][index[sym]]
        return state in self.finals


def relabel_to_classical(dfa: SymbolicDfa) -> ClassicalDfa:
    """Rename each minterm to a fresh symbol ``a1..ak``; structure unchanged."""
    symbols = tuple(f"a{i + 1}" for i in range(len(dfa.alphabet)))
    return ClassicalDfa(
        symbols=symbols,
        n_states=dfa.n_states,
        initial=dfa.initial,
        finals=dfa.finals,
        delta=dfa.delta,
    )


def export_automaton(dfa: SymbolicDfa) -> dict:
    """JSON-ready dump of states, finals, and the transition table."""
    doc = {
        "states": dfa.n_states,
        "initial": dfa.initial,
        "finals": sorted(dfa.finals),
        "alphabet": [str(m) for m in dfa.alphabet],
        "transitions": [list(row) for row in dfa.delta],
    }
    if isinstance(dfa, DisambiguatedDfa):
        doc["order"] = dfa.order
        doc["annotation"] = {str(q): list(w) for q, w in sorted(dfa.annotation.items())}
        doc["origin"] = list(dfa.origin)
    return doc


def automaton_to_json(dfa: SymbolicDfa, indent: int = 2) -> str:
    return json.dumps(export_automaton(dfa), ensure_ascii=False, indent=indent)
