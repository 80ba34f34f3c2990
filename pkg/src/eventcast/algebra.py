"""Events, Boolean predicate formulas, and minterm alphabets.

Guards on automaton transitions are *minterms*: maximal conjunctions of
(possibly negated) predicate atoms.  Minterms over a fixed predicate set are
mutually exclusive and, when the satisfiability oracle is sound, partition the
event space, so every event maps to exactly one of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

AttrValue = float | int | str | bool

ASSUME_ALL = "assume-all-satisfiable"
INTERVAL_PRUNING = "interval-pruning"


class MissingAttributeError(KeyError):
    """A predicate referenced an attribute the event does not carry."""

    def __init__(self, name: str):
        super().__init__(name)
        self.attribute = name

    def __str__(self) -> str:
        return f"event is missing attribute {self.attribute!r}"


class NoMatchingMintermError(RuntimeError):
    """No minterm in the alphabet matched the event.

    Can only happen when the satisfiability oracle wrongly pruned a
    combination that is in fact satisfiable; callers must treat this as a
    fatal configuration error, not as data noise.
    """


@dataclass(frozen=True, slots=True)
class Event:
    """One stream element: a timestamped attribute tuple with a partition key."""

    timestamp: float
    attributes: Mapping[str, AttrValue]
    partition_key: str = ""

    def attr(self, name: str) -> AttrValue:
        try:
            return self.attributes[name]
        except KeyError:
            raise MissingAttributeError(name) from None


@dataclass(frozen=True, slots=True)
class Band:
    """Half-open numeric constraint lo <= quantity < hi.

    ``axis`` identifies the constrained quantity, e.g. ``("attr", "speed")``
    or ``("dist", lon, lat)`` for the distance to a fixed point.  Atoms that
    expose a band can be reasoned about by the interval-pruning oracle and
    inverted by synthetic-stream emitters.
    """

    axis: tuple
    lo: float
    hi: float


@dataclass(frozen=True)
class PredicateAtom:
    """A named unary predicate applied to one event.

    Identity (equality/hashing) is by ``name`` and ``args`` only: the bound
    event variable and the evaluation closure do not distinguish atoms, so a
    predicate used under two pattern variables contributes a single dimension
    to the minterm alphabet.
    """

    name: str
    args: tuple
    fn: Callable[[Event], bool] = field(compare=False, repr=False)
    var: str = field(default="x", compare=False)
    band: Band | None = field(default=None, compare=False)

    def evaluate(self, event: Event) -> bool:
        return bool(self.fn(event))

    def __str__(self) -> str:
        parts = [self.var] + [_format_const(a) for a in self.args]
        return f"{self.name}({', '.join(parts)})"


def _format_const(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    return repr(value)


class Formula:
    """Boolean combination of predicate atoms; closed under ~, &, |."""

    __slots__ = ()

    def evaluate(self, event: Event) -> bool:
        raise NotImplementedError

    def under(self, assignment: Mapping[PredicateAtom, bool]) -> bool:
        """Evaluate with atom truth values fixed by ``assignment``."""
        raise NotImplementedError

    def atoms(self) -> Iterator[PredicateAtom]:
        raise NotImplementedError

    def __invert__(self) -> "Formula":
        return Not(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And((self, other))

    def __or__(self, other: "Formula") -> "Formula":
        return Or((self, other))


@dataclass(frozen=True)
class Atom(Formula):
    atom: PredicateAtom

    def evaluate(self, event: Event) -> bool:
        return self.atom.evaluate(event)

    def under(self, assignment) -> bool:
        return assignment[self.atom]

    def atoms(self):
        yield self.atom

    def __str__(self) -> str:
        return str(self.atom)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def evaluate(self, event: Event) -> bool:
        return not self.child.evaluate(event)

    def under(self, assignment) -> bool:
        return not self.child.under(assignment)

    def atoms(self):
        yield from self.child.atoms()

    def __str__(self) -> str:
        return f"¬{_wrap(self.child)}"


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def evaluate(self, event: Event) -> bool:
        return all(c.evaluate(event) for c in self.children)

    def under(self, assignment) -> bool:
        return all(c.under(assignment) for c in self.children)

    def atoms(self):
        for c in self.children:
            yield from c.atoms()

    def __str__(self) -> str:
        if not self.children:
            return "⊤"
        return " ∧ ".join(_wrap(c) for c in self.children)


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def evaluate(self, event: Event) -> bool:
        return any(c.evaluate(event) for c in self.children)

    def under(self, assignment) -> bool:
        return any(c.under(assignment) for c in self.children)

    def atoms(self):
        for c in self.children:
            yield from c.atoms()

    def __str__(self) -> str:
        if not self.children:
            return "⊥"
        return " ∨ ".join(_wrap(c) for c in self.children)


def _wrap(f: Formula) -> str:
    if isinstance(f, (And, Or)) and len(f.children) > 1:
        return f"({f})"
    return str(f)


#: Vacuous truth, the guard of an unconstrained pattern variable.
TOP = And(())


def evaluate(formula: Formula, event: Event) -> bool:
    """Standard Boolean semantics over atom evaluations.

    Raises :class:`MissingAttributeError` when an atom references an
    attribute the event does not carry; absence is an error, never ``False``.
    """
    return formula.evaluate(event)


@dataclass(frozen=True)
class Minterm:
    """One sign assignment over an ordered predicate set.

    ``signs[i]`` is ``True`` when ``atoms[i]`` appears positively.  Distinct
    minterms over the same predicate set are mutually exclusive.
    """

    atoms: tuple[PredicateAtom, ...]
    signs: tuple[bool, ...]

    def evaluate(self, event: Event) -> bool:
        return all(a.evaluate(event) == s for a, s in zip(self.atoms, self.signs))

    def formula(self) -> Formula:
        if not self.atoms:
            return TOP
        parts = tuple(
            Atom(a) if s else Not(Atom(a)) for a, s in zip(self.atoms, self.signs)
        )
        return parts[0] if len(parts) == 1 else And(parts)

    def assignment(self) -> dict[PredicateAtom, bool]:
        return dict(zip(self.atoms, self.signs))

    def __str__(self) -> str:
        if not self.atoms:
            return "⊤"
        return " ∧ ".join(
            ("" if s else "¬") + str(a) for a, s in zip(self.atoms, self.signs)
        )


@dataclass(frozen=True)
class SatOracle:
    """Decides which sign assignments over a predicate set are kept.

    Soundness contract: a satisfiable combination is never reported
    unsatisfiable.  Completeness is not required; surviving unsatisfiable
    combinations merely become unreachable automaton states.

    ``interval-pruning`` discards combinations whose single-axis band
    constraints have provably empty intersection; everything else is kept.
    """

    strategy: str = ASSUME_ALL

    def __post_init__(self):
        if self.strategy not in (ASSUME_ALL, INTERVAL_PRUNING):
            raise ValueError(f"unknown oracle strategy {self.strategy!r}")

    def satisfiable(self, atoms: Sequence[PredicateAtom], signs: Sequence[bool]) -> bool:
        if self.strategy == ASSUME_ALL:
            return True
        by_axis: dict[tuple, list[tuple[Band, bool]]] = {}
        for atom, sign in zip(atoms, signs):
            if atom.band is not None:
                by_axis.setdefault(atom.band.axis, []).append((atom.band, sign))
        for constraints in by_axis.values():
            positives = [b for b, s in constraints if s]
            if not positives:
                continue
            lo = max(b.lo for b in positives)
            hi = min(b.hi for b in positives)
            if lo >= hi:
                return False
            # A negated band that covers the whole positive core empties it.
            if any(b.lo <= lo and hi <= b.hi for b, s in constraints if not s):
                return False
        return True


def compute_minterms(
    predicates: Sequence[PredicateAtom], oracle: SatOracle | None = None
) -> list[Minterm]:
    """All sign assignments over ``predicates`` the oracle cannot refute.

    The result is canonically ordered as a binary counter over negations: the
    all-positive minterm first, the all-negative one last.  An empty predicate
    list yields the single vacuous minterm.
    """
    atoms = tuple(predicates)
    seen = set()
    for a in atoms:
        key = (a.name, a.args)
        if key in seen:
            raise ValueError(f"duplicate predicate {a}")
        seen.add(key)
    if oracle is None:
        oracle = SatOracle()
    k = len(atoms)
    out = []
    for counter in range(2**k):
        signs = tuple(not (counter >> (k - 1 - i)) & 1 for i in range(k))
        if oracle.satisfiable(atoms, signs):
            out.append(Minterm(atoms, signs))
    return out


def classify(event: Event, minterms: Sequence[Minterm]) -> Minterm:
    """Map an event to the unique minterm it satisfies.

    Evaluates each atom once, so the cost is linear in the predicate set, not
    in the number of minterms.
    """
    atoms = minterms[0].atoms
    observed = tuple(a.evaluate(event) for a in atoms)
    for m in minterms:
        if m.signs == observed:
            return m
    raise NoMatchingMintermError(
        f"no minterm matches observed signs {observed}; the sat oracle pruned "
        "a satisfiable combination"
    )


class MintermClassifier:
    """Hash-lookup classifier shared by the runtime hot path."""

    __slots__ = ("atoms", "minterms", "_index")

    def __init__(self, minterms: Sequence[Minterm]):
        self.minterms = tuple(minterms)
        self.atoms = self.minterms[0].atoms if self.minterms else ()
        self._index = {m.signs: i for i, m in enumerate(self.minterms)}

    def symbol(self, event: Event) -> int:
        observed = tuple(bool(a.fn(event)) for a in self.atoms)
        try:
            return self._index[observed]
        except KeyError:
            raise NoMatchingMintermError(
                f"no minterm matches observed signs {observed}; the sat oracle "
                "pruned a satisfiable combination"
            ) from None
