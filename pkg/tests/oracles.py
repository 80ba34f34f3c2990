"""Independent reference implementations used only for checking results.

Everything here deliberately avoids the library's own algorithms: NFA runs
are naive per-symbol subset simulations, language comparisons explore
reachable state pairs, waiting times are exhaustive first-hit enumerations
over the string tree, and interval search enumerates every window.
"""

import math
from itertools import product


def naive_eps_closure(nfa, states):
    seen = set(states)
    changed = True
    while changed:
        changed = False
        for src, sym, dst in nfa.transitions:
            if sym is None and src in seen and dst not in seen:
                seen.add(dst)
                changed = True
    return frozenset(seen)


def naive_nfa_step(nfa, states, symbol):
    moved = {dst for src, sym, dst in nfa.transitions if src in states and sym == symbol}
    return naive_eps_closure(nfa, moved)


def nfa_dfa_agree_to_depth(nfa, dfa, depth):
    """True iff acceptance agrees on every symbol string of length <= depth.

    Breadth-first search over reachable (DFA state, NFA subset) pairs; a pair
    disagreeing on acceptance within the depth bound is a counterexample.
    """
    n_syms = len(dfa.alphabet)
    start = (dfa.initial, naive_eps_closure(nfa, {nfa.initial}))
    if (start[0] in dfa.finals) != bool(start[1] & nfa.finals):
        return False
    frontier = {start}
    visited = {start}
    for _ in range(depth):
        nxt = set()
        for dstate, subset in frontier:
            for sym in range(n_syms):
                pair = (dfa.delta[dstate][sym], naive_nfa_step(nfa, subset, sym))
                if (pair[0] in dfa.finals) != bool(pair[1] & nfa.finals):
                    return False
                if pair not in visited:
                    visited.add(pair)
                    nxt.add(pair)
        if not nxt:
            break
        frontier = nxt
    return True


def dfas_agree_to_depth(d1, d2, depth):
    """Language agreement of two total DFAs on all strings of length <= depth."""
    n_syms = len(d1.alphabet)
    assert n_syms == len(d2.alphabet)
    start = (d1.initial, d2.initial)
    if (start[0] in d1.finals) != (start[1] in d2.finals):
        return False
    frontier = {start}
    visited = {start}
    for _ in range(depth):
        nxt = set()
        for s1, s2 in frontier:
            for sym in range(n_syms):
                pair = (d1.delta[s1][sym], d2.delta[s2][sym])
                if (pair[0] in d1.finals) != (pair[1] in d2.finals):
                    return False
                if pair not in visited:
                    visited.add(pair)
                    nxt.add(pair)
        if not nxt:
            break
        frontier = nxt
    return True


def enumerate_agreement(nfa, dfa, max_len):
    """Literal string-by-string check (use only for small alphabets)."""
    n_syms = len(dfa.alphabet)
    for length in range(max_len + 1):
        for word in product(range(n_syms), repeat=length):
            accepted_nfa = bool(
                _run_nfa(nfa, word) & nfa.finals
            )
            if accepted_nfa != dfa.accepts_symbols(word):
                return False
    return True


def _run_nfa(nfa, word):
    current = naive_eps_closure(nfa, {nfa.initial})
    for sym in word:
        current = naive_nfa_step(nfa, current, sym)
    return current


def incoming_words(dfa, m):
    """delta^{-m}: for each state, the set of length-m words that lead to it."""
    words = {q: {()} for q in range(dfa.n_states)}
    for _ in range(m):
        nxt = {q: set() for q in range(dfa.n_states)}
        for p in range(dfa.n_states):
            for sym in range(len(dfa.alphabet)):
                q = dfa.delta[p][sym]
                for w in words[p]:
                    nxt[q].add(w + (sym,))
        words = nxt
    return words


def first_hit_distribution(dfa, start, probs, n_max):
    """P(first final entry after exactly n symbols), n = 1..n_max.

    Depth-first walk of the complete string tree with first-hit pruning;
    equivalent to enumerating every length-n string and summing the
    probabilities of those whose run first enters a final state at step n.
    """
    out = [0.0] * (n_max + 1)

    def walk(state, depth, weight):
        if depth == n_max:
            return
        for sym, p in enumerate(probs):
            nxt = dfa.delta[state][sym]
            w = weight * p
            if nxt in dfa.finals:
                out[depth + 1] += w
            else:
                walk(nxt, depth + 1, w)

    walk(start, 0, 1.0)
    return out[1:]


def brute_force_interval(probs, theta):
    """Smallest window with mass >= theta by enumerating all O(H^2) windows.

    Tie rules: shorter window, then higher mass, then smaller start.  Returns
    (start, end) 1-indexed, or None when no window reaches theta.
    """
    horizon = len(probs)
    best = None
    best_key = None
    for s in range(1, horizon + 1):
        for e in range(s, horizon + 1):
            mass = math.fsum(probs[s - 1 : e])
            if mass < theta:
                continue
            key = (e - s, -mass, s)
            if best_key is None or key < best_key:
                best_key = key
                best = (s, e)
    return best


def winding_number_contains(p, ring):
    """Winding-number point-in-polygon; independent of the ray caster."""
    wn = 0
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        is_left = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat)
        if a.lat <= p.lat:
            if b.lat > p.lat and is_left > 0:
                wn += 1
        else:
            if b.lat <= p.lat and is_left < 0:
                wn -= 1
    return wn != 0
