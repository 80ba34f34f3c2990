"""Markov-chain model of automaton runs and forecast-interval computation.

The state sequence of the deterministic automaton driven by the stream is
modelled as a first-order Markov chain.  Making final states absorbing and
splitting the transition matrix into the non-final block ``N`` and the
non-final-to-final block turns "how many more events until detection" into a
phase-type waiting time whose distribution is computed by iterated
vector-matrix products.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .algebra import Event
from .sfa import SymbolicDfa

log = logging.getLogger(__name__)

DEFAULT_HORIZON_CAP = 5_000
DEFAULT_COVERAGE = 0.999


class EmptyTrainingError(ValueError):
    """The training stream contained no events."""


class FinalStateQueryError(ValueError):
    """Waiting time was requested for a final state (it is identically 0)."""


class HorizonTooShortError(RuntimeError):
    """The distribution mass within the horizon is below the threshold."""

    def __init__(self, message: str, states: Sequence[int] = ()):
        super().__init__(message)
        self.states = tuple(states)


@dataclass
class PatternMarkovChain:
    """Row-stochastic transition model over automaton states.

    ``counts`` and ``symbol_counts`` keep the raw transition and per-minterm
    tallies so the model can be re-estimated incrementally; final rows are
    forced absorbing after estimation, which is what the waiting-time algebra
    requires.
    """

    state_ids: tuple[int, ...]
    matrix: np.ndarray
    finals: frozenset[int]
    counts: np.ndarray
    symbol_counts: np.ndarray
    unvisited: tuple[int, ...] = ()

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        l = len(self.state_ids)
        if self.matrix.shape != (l, l):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({l}, {l})")

    @property
    def n_states(self) -> int:
        return len(self.state_ids)

    def nonfinal_states(self) -> list[int]:
        return [i for i in range(self.n_states) if i not in self.finals]

    def validate(self, atol: float = 1e-9) -> None:
        if np.any(self.matrix < -atol) or np.any(self.matrix > 1 + atol):
            raise ValueError("matrix entries outside [0, 1]")
        rows = self.matrix.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=atol):
            raise ValueError(f"rows do not sum to 1: {rows}")
        for f in self.finals:
            if self.matrix[f, f] != 1.0:
                raise ValueError(f"final row {f} is not absorbing")


@dataclass(frozen=True)
class WaitingTimeDistribution:
    """P(first detection after exactly n more events), n = 1..horizon."""

    state: int
    probs: np.ndarray
    tail_mass: float

    @property
    def horizon(self) -> int:
        return len(self.probs)

    def prob(self, n: int) -> float:
        return float(self.probs[n - 1])


@dataclass(frozen=True)
class Forecast:
    """Shortest future window [start, end] holding at least the target mass."""

    state: int
    start: int
    end: int
    probability: float


def _structural_successors(dfa: SymbolicDfa, state: int) -> tuple[int, ...]:
    return tuple(sorted(set(dfa.delta[state])))


def learn_matrix(
    dfa: SymbolicDfa,
    training_stream: Iterable[Event],
    per_partition: bool = True,
    *,
    smoothing: bool = False,
) -> PatternMarkovChain:
    """Maximum-likelihood transition estimates from a stream replay.

    The stream is replayed per partition key (one run each, starting at the
    initial state); every transition is tallied and a run resets to the
    initial state right after entering a final state.  Row estimates are
    transition counts over row visits; rows never visited fall back to a
    uniform distribution over their structural successors so the matrix stays
    stochastic.  With ``smoothing`` enabled, add-one smoothing is applied over
    structural successors instead of the raw estimates.
    """
    l = dfa.n_states
    n_syms = len(dfa.alphabet)
    counts = np.zeros((l, l), dtype=np.float64)
    symbol_counts = np.zeros((l, n_syms), dtype=np.float64)
    classifier = dfa.classifier
    delta = dfa.delta
    finals = dfa.finals
    initial = dfa.initial

    states: dict[str, int] = {}
    n_events = 0
    for event in training_stream:
        n_events += 1
        key = event.partition_key if per_partition else ""
        here = states.get(key, initial)
        sym = classifier.symbol(event)
        nxt = delta[here][sym]
        counts[here, nxt] += 1.0
        symbol_counts[here, sym] += 1.0
        states[key] = initial if nxt in finals else nxt
    if n_events == 0:
        raise EmptyTrainingError("training stream is empty")

    matrix = np.zeros((l, l), dtype=np.float64)
    unvisited = []
    for i in range(l):
        if i in finals:
            matrix[i, i] = 1.0
            continue
        successors = _structural_successors(dfa, i)
        n_i = counts[i].sum()
        if smoothing:
            denom = n_i + len(successors)
            for j in successors:
                matrix[i, j] = (counts[i, j] + 1.0) / denom
        elif n_i > 0:
            matrix[i] = counts[i] / n_i
        else:
            unvisited.append(i)
            for j in successors:
                matrix[i, j] = 1.0 / len(successors)
    if unvisited:
        log.warning(
            "states never visited during training, using uniform fallback: %s",
            unvisited,
        )

    return PatternMarkovChain(
        state_ids=tuple(range(l)),
        matrix=matrix,
        finals=frozenset(finals),
        counts=counts,
        symbol_counts=symbol_counts,
        unvisited=tuple(unvisited),
    )


def analytic_chain(dfa: SymbolicDfa, symbol_probs: Sequence[float]) -> PatternMarkovChain:
    """Exact chain induced by an i.i.d. minterm source with known probabilities.

    Row p gets ``P(symbol)`` added onto column ``delta[p][symbol]``; final rows
    are absorbing.  This is the closed-form counterpart of :func:`learn_matrix`
    for streams whose minterm process is i.i.d.
    """
    probs = np.asarray(symbol_probs, dtype=np.float64)
    if probs.shape != (len(dfa.alphabet),):
        raise ValueError("one probability per minterm required")
    if not np.isclose(probs.sum(), 1.0):
        raise ValueError("symbol probabilities must sum to 1")
    l = dfa.n_states
    matrix = np.zeros((l, l), dtype=np.float64)
    for p in range(l):
        if p in dfa.finals:
            matrix[p, p] = 1.0
            continue
        for sym, prob in enumerate(probs):
            matrix[p, dfa.delta[p][sym]] += prob
    return PatternMarkovChain(
        state_ids=tuple(range(l)),
        matrix=matrix,
        finals=frozenset(dfa.finals),
        counts=np.zeros((l, l)),
        symbol_counts=np.zeros((l, len(dfa.alphabet))),
    )


def _absorbing_blocks(pmc: PatternMarkovChain) -> tuple[list[int], np.ndarray, np.ndarray]:
    nonfinal = pmc.nonfinal_states()
    n = pmc.matrix[np.ix_(nonfinal, nonfinal)]
    exit_mass = 1.0 - n.sum(axis=1)
    return nonfinal, n, exit_mass


def waiting_time_distribution(
    pmc: PatternMarkovChain,
    state: int,
    horizon: int,
    xi: Sequence[float] | None = None,
) -> WaitingTimeDistribution:
    """Distribution of the number of events until the first final entry.

    Computed as repeated products of the start-state selector with the
    non-final block: the mass leaving the non-final block at step n is
    P(W = n).  ``xi`` optionally replaces the one-hot selector with a general
    initial distribution over the non-final states (in row order).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if state in pmc.finals:
        raise FinalStateQueryError(
            f"state {state} is final; its waiting time is identically 0"
        )
    nonfinal, n_block, exit_mass = _absorbing_blocks(pmc)
    position = {s: i for i, s in enumerate(nonfinal)}
    if xi is None:
        v = np.zeros(len(nonfinal))
        v[position[state]] = 1.0
    else:
        v = np.asarray(xi, dtype=np.float64)
        if v.shape != (len(nonfinal),):
            raise ValueError("xi must have one entry per non-final state")
    probs = np.empty(horizon)
    for i in range(horizon):
        probs[i] = float(v @ exit_mass)
        v = v @ n_block
    return WaitingTimeDistribution(
        state=state, probs=probs, tail_mass=float(1.0 - probs.sum())
    )


def forecast_interval(dist: WaitingTimeDistribution, theta_fc: float) -> Forecast:
    """Single-pass scan for the smallest window with mass >= ``theta_fc``.

    Ties between equally short windows go to the higher mass, then to the
    smaller start.  "At least" is deliberate: with discrete mass an exact hit
    such as a 50% window must count.
    """
    if not 0.0 < theta_fc <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta_fc}")
    p = np.asarray(dist.probs, dtype=np.float64)
    horizon = len(p)
    prefix = np.concatenate(([0.0], np.cumsum(p)))
    if prefix[-1] < theta_fc:
        raise HorizonTooShortError(
            f"mass within horizon {horizon} is {prefix[-1]:.6g} < {theta_fc}; "
            "raise the horizon",
            states=(dist.state,),
        )
    best_key = None
    best = None
    start = 1
    for end in range(1, horizon + 1):
        if prefix[end] - prefix[start - 1] < theta_fc:
            continue
        while start < end and prefix[end] - prefix[start] >= theta_fc:
            start += 1
        mass = prefix[end] - prefix[start - 1]
        key = (end - start, -mass, start)
        if best_key is None or key < best_key:
            best_key = key
            best = (start, end, mass)
    start, end, mass = best
    return Forecast(state=dist.state, start=start, end=end, probability=float(mass))


def _adaptive_distribution(
    pmc: PatternMarkovChain,
    state: int,
    target_mass: float,
    cap: int,
) -> WaitingTimeDistribution:
    """Grow the horizon until the cumulative mass reaches ``target_mass``."""
    nonfinal, n_block, exit_mass = _absorbing_blocks(pmc)
    position = {s: i for i, s in enumerate(nonfinal)}
    v = np.zeros(len(nonfinal))
    v[position[state]] = 1.0
    probs: list[float] = []
    cum = 0.0
    while len(probs) < cap:
        step_mass = float(v @ exit_mass)
        probs.append(step_mass)
        cum += step_mass
        if cum >= target_mass:
            break
        v = v @ n_block
    arr = np.array(probs)
    return WaitingTimeDistribution(state=state, probs=arr, tail_mass=float(1.0 - arr.sum()))


def build_forecast_table(
    pmc: PatternMarkovChain,
    theta_fc: float,
    horizon: int | None = None,
    *,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
    coverage: float = DEFAULT_COVERAGE,
) -> dict[int, Forecast]:
    """One cached forecast per non-final state.

    With no explicit horizon, each state uses the smallest horizon whose
    cumulative mass reaches ``max(theta_fc, coverage)``, capped at
    ``horizon_cap``.  States whose mass cannot reach the threshold are
    collected and reported together.
    """
    table: dict[int, Forecast] = {}
    failed: list[int] = []
    for state in pmc.nonfinal_states():
        if horizon is not None:
            dist = waiting_time_distribution(pmc, state, horizon)
        else:
            dist = _adaptive_distribution(pmc, state, max(theta_fc, coverage), horizon_cap)
        try:
            table[state] = forecast_interval(dist, theta_fc)
        except HorizonTooShortError:
            failed.append(state)
    if failed:
        raise HorizonTooShortError(
            f"waiting-time mass below theta={theta_fc} within the horizon for "
            f"states {failed}; raise the horizon or lower theta",
            states=failed,
        )
    return table


# --- persistence ------------------------------------------------------------


def pmc_to_dict(pmc: PatternMarkovChain) -> dict:
    return {
        "states": list(pmc.state_ids),
        "finals": sorted(pmc.finals),
        "matrix": pmc.matrix.tolist(),
        "counts": pmc.counts.tolist(),
        "symbol_counts": pmc.symbol_counts.tolist(),
        "unvisited": list(pmc.unvisited),
    }


def pmc_from_dict(doc: dict) -> PatternMarkovChain:
    return PatternMarkovChain(
        state_ids=tuple(doc["states"]),
        matrix=np.array(doc["matrix"], dtype=np.float64),
        finals=frozenset(doc["finals"]),
        counts=np.array(doc["counts"], dtype=np.float64),
        symbol_counts=np.array(doc["symbol_counts"], dtype=np.float64),
        unvisited=tuple(doc.get("unvisited", ())),
    )


def save_pmc(pmc: PatternMarkovChain, path: str | Path) -> None:
    Path(path).write_text(json.dumps(pmc_to_dict(pmc)))


def load_pmc(path: str | Path) -> PatternMarkovChain:
    return pmc_from_dict(json.loads(Path(path).read_text()))
