"""Parser for the pattern DSL.

A pattern file holds one pattern plus optional sidecar configuration::

    # approach, then enter
    x · y+ · z WHERE
        Distance(x, PortCoords, 7.0, 10.0) AND
        Distance(y, PortCoords, 5.0, 7.0) AND
        WithinCircle(z, PortCoords, 5.0)
    PARTITION BY vesselId

    order = 1
    theta = 0.5
    extras = [SpeedBetween(x, 0.0, 10.0), HeadingTowards(x, PortCoords)]

The regular part uses ``·`` (or ``;``) for concatenation, postfix ``+``/``*``,
``|`` for union and parentheses; precedence is star > concat > union.  The
WHERE clause is an AND-separated list of per-variable formulas built from
``∧``/``AND``, ``∨``/``OR``, ``¬``/``NOT``.  The first argument of every
predicate is the event variable it binds to.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .algebra import And, Atom, Formula, Not, Or, PredicateAtom

Registry = Mapping[str, Callable[[str, tuple], PredicateAtom]]


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})" if line else message)
        self.line = line
        self.col = col


class UnboundVariableError(ParseError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} has no binding in the WHERE clause")
        self.name = name


class UnknownPredicateError(ParseError):
    def __init__(self, name: str, line: int = 0, col: int = 0):
        super().__init__(f"unknown predicate {name!r}", line, col)
        self.name = name


# --- abstract syntax -------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    var: str


@dataclass(frozen=True)
class Concat:
    parts: tuple


@dataclass(frozen=True)
class Union:
    parts: tuple


@dataclass(frozen=True)
class Star:
    child: object


@dataclass(frozen=True)
class Plus:
    child: object


PatternAst = Leaf | Concat | Union | Star | Plus


def ast_variables(node: PatternAst) -> Iterator[str]:
    """Leaf variables in left-to-right order (with repetitions)."""
    if isinstance(node, Leaf):
        yield node.var
    elif isinstance(node, (Concat, Union)):
        for p in node.parts:
            yield from ast_variables(p)
    else:
        yield from ast_variables(node.child)


@dataclass(frozen=True)
class PatternSpec:
    """A parsed pattern: regular part, per-variable guards, configuration."""

    ast: PatternAst
    bindings: dict[str, Formula]
    partition_attribute: str = "partitionKey"
    extras: tuple[PredicateAtom, ...] = ()
    order: int = 0
    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ParseError(f"theta must be in (0, 1], got {self.theta}")
        if self.order < 0:
            raise ParseError(f"order must be >= 0, got {self.order}")


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<NUMBER>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<STRING>"[^"]*"|'[^']*')
  | (?P<OP>[()\[\],|+*=;·∧∨¬])
  | (?P<WS>\s+)
  | (?P<BAD>.)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"WHERE", "AND", "OR", "NOT", "PARTITION", "BY"}


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | NAME | STRING | OP | KW | EOF
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        value = m.group()
        col = m.start() - line_start + 1
        if kind == "WS":
            nl = value.count("\n")
            if nl:
                line += nl
                line_start = m.start() + value.rfind("\n") + 1
            continue
        if kind == "BAD":
            raise ParseError(f"unexpected character {value!r}", line, col)
        if kind == "NAME" and value in _KEYWORDS:
            kind = "KW"
        tokens.append(_Token(kind, value, line, col))
    tokens.append(_Token("EOF", "", line, 1))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, value: str | None = None) -> _Token:
        t = self.peek()
        if t.kind != kind or (value is not None and t.value != value):
            want = value or kind
            raise ParseError(f"expected {want!r}, found {t.value or 'end of input'!r}", t.line, t.col)
        return self.next()

    def match(self, kind: str, *values: str) -> bool:
        t = self.peek()
        return t.kind == kind and (not values or t.value in values)


# --- regular part ----------------------------------------------------------


def _parse_union(c: _Cursor) -> PatternAst:
    parts = [_parse_concat(c)]
    while c.match("OP", "|"):
        c.next()
        parts.append(_parse_concat(c))
    return parts[0] if len(parts) == 1 else Union(tuple(parts))


def _parse_concat(c: _Cursor) -> PatternAst:
    parts = [_parse_postfix(c)]
    while c.match("OP", "·", ";"):
        c.next()
        parts.append(_parse_postfix(c))
    return parts[0] if len(parts) == 1 else Concat(tuple(parts))


def _parse_postfix(c: _Cursor) -> PatternAst:
    node = _parse_primary(c)
    while c.match("OP", "+", "*"):
        node = Plus(node) if c.next().value == "+" else Star(node)
    return node


def _parse_primary(c: _Cursor) -> PatternAst:
    t = c.peek()
    if t.kind == "NAME":
        c.next()
        return Leaf(t.value)
    if c.match("OP", "("):
        c.next()
        node = _parse_union(c)
        c.expect("OP", ")")
        return node
    raise ParseError(f"expected a variable or '(', found {t.value or 'end of input'!r}", t.line, t.col)


# --- WHERE clause ----------------------------------------------------------


def _parse_or(c: _Cursor, registry: Registry) -> Formula:
    parts = [_parse_and(c, registry)]
    while c.match("OP", "∨") or c.match("KW", "OR"):
        c.next()
        parts.append(_parse_and(c, registry))
    return parts[0] if len(parts) == 1 else Or(tuple(parts))


def _parse_and(c: _Cursor, registry: Registry) -> Formula:
    parts = [_parse_not(c, registry)]
    while c.match("OP", "∧") or c.match("KW", "AND"):
        c.next()
        parts.append(_parse_not(c, registry))
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def _parse_not(c: _Cursor, registry: Registry) -> Formula:
    if c.match("OP", "¬") or c.match("KW", "NOT"):
        c.next()
        return Not(_parse_not(c, registry))
    if c.match("OP", "("):
        c.next()
        inner = _parse_or(c, registry)
        c.expect("OP", ")")
        return inner
    return Atom(_parse_atom(c, registry))


def _parse_atom(c: _Cursor, registry: Registry) -> PredicateAtom:
    t = c.expect("NAME")
    c.expect("OP", "(")
    var_tok = c.expect("NAME")
    args = []
    while c.match("OP", ","):
        c.next()
        args.append(_parse_const(c))
    c.expect("OP", ")")
    builder = registry.get(t.value)
    if builder is None:
        raise UnknownPredicateError(t.value, t.line, t.col)
    return builder(var_tok.value, tuple(args))


def _parse_const(c: _Cursor):
    t = c.peek()
    if t.kind == "NUMBER":
        c.next()
        return float(t.value)
    if t.kind == "NAME":
        c.next()
        return t.value
    if t.kind == "STRING":
        c.next()
        return t.value[1:-1]
    raise ParseError(f"expected a constant, found {t.value or 'end of input'!r}", t.line, t.col)


def _formula_vars(f: Formula) -> set[str]:
    return {a.var for a in f.atoms()}


# --- sidecar configuration --------------------------------------------------

_CONFIG_RE = re.compile(r"^\s*(order|theta|extras)\s*=\s*(.*?)\s*$")


def _split_sidecar(text: str) -> tuple[str, dict[str, str]]:
    pattern_lines, config = [], {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0]
        m = _CONFIG_RE.match(line)
        if m:
            if m.group(1) in config:
                raise ParseError(f"duplicate config key {m.group(1)!r}")
            config[m.group(1)] = m.group(2)
        else:
            pattern_lines.append(line)
    return "\n".join(pattern_lines), config


def _parse_extras(text: str, registry: Registry) -> tuple[PredicateAtom, ...]:
    c = _Cursor(_tokenize(text))
    c.expect("OP", "[")
    atoms: list[PredicateAtom] = []
    if not c.match("OP", "]"):
        atoms.append(_parse_atom(c, registry))
        while c.match("OP", ","):
            c.next()
            atoms.append(_parse_atom(c, registry))
    c.expect("OP", "]")
    c.expect("EOF")
    return tuple(atoms)


def parse_extra_features(text: str, registry: Registry) -> tuple[PredicateAtom, ...]:
    """Parse a bracketed extra-feature list, e.g. ``[SpeedBetween(x, 0.0, 10.0)]``."""
    return _parse_extras(text, registry)


# --- entry point ------------------------------------------------------------


def parse_pattern(text: str, registry: Registry) -> PatternSpec:
    """Parse a pattern file into a fully bound :class:`PatternSpec`."""
    body, config = _split_sidecar(text)
    c = _Cursor(_tokenize(body))

    ast = _parse_union(c)
    c.expect("KW", "WHERE")
    where = _parse_or(c, registry)

    partition_attribute = "partitionKey"
    if c.match("KW", "PARTITION"):
        c.next()
        c.expect("KW", "BY")
        partition_attribute = c.expect("NAME").value
    c.expect("EOF")

    conjuncts = list(where.children) if isinstance(where, And) else [where]
    bindings: dict[str, Formula] = {}
    for conj in conjuncts:
        vars_ = _formula_vars(conj)
        if len(vars_) != 1:
            raise ParseError(
                f"each AND-separated WHERE term must constrain exactly one "
                f"variable, found {sorted(vars_)}"
            )
        (var,) = vars_
        if var in bindings:
            prev = bindings[var]
            merged = (prev.children if isinstance(prev, And) else (prev,)) + (conj,)
            bindings[var] = And(merged)
        else:
            bindings[var] = conj

    pattern_vars = list(dict.fromkeys(ast_variables(ast)))
    for v in pattern_vars:
        if v not in bindings:
            raise UnboundVariableError(v)
    for v in bindings:
        if v not in pattern_vars:
            raise ParseError(f"WHERE clause binds {v!r}, which is not in the pattern")
    bindings = {v: bindings[v] for v in pattern_vars}

    extras = ()
    if "extras" in config:
        extras = _parse_extras(config["extras"], registry)
    bound_atoms = {(a.name, a.args) for f in bindings.values() for a in f.atoms()}
    for extra in extras:
        if (extra.name, extra.args) in bound_atoms:
            raise ParseError(f"extra feature {extra} already appears in the pattern")

    try:
        order = int(config["order"]) if "order" in config else 0
        theta = float(config["theta"]) if "theta" in config else 0.5
    except ValueError as exc:
        raise ParseError(f"bad config value: {exc}") from None

    return PatternSpec(
        ast=ast,
        bindings=bindings,
        partition_attribute=partition_attribute,
        extras=extras,
        order=order,
        theta=theta,
    )


# --- pretty printer ---------------------------------------------------------

_PREC = {Union: 0, Concat: 1, Star: 2, Plus: 2, Leaf: 3}


def _format_ast(node: PatternAst, min_prec: int = 0) -> str:
    prec = _PREC[type(node)]
    if isinstance(node, Leaf):
        s = node.var
    elif isinstance(node, Union):
        s = " | ".join(_format_ast(p, 1) for p in node.parts)
    elif isinstance(node, Concat):
        s = " · ".join(_format_ast(p, 2) for p in node.parts)
    elif isinstance(node, Star):
        s = _format_ast(node.child, 3) + "*"
    else:
        s = _format_ast(node.child, 3) + "+"
    return f"({s})" if prec < min_prec else s


def _format_formula(f: Formula, top: bool = False) -> str:
    if isinstance(f, Atom):
        return str(f.atom)
    if isinstance(f, Not):
        inner = _format_formula(f.child)
        if isinstance(f.child, (And, Or)):
            inner = f"({inner})"
        return f"¬{inner}"
    if isinstance(f, And):
        body = " ∧ ".join(
            f"({_format_formula(p)})" if isinstance(p, (And, Or)) else _format_formula(p)
            for p in f.children
        )
        return body if top else f"({body})"
    if isinstance(f, Or):
        body = " ∨ ".join(
            f"({_format_formula(p)})" if isinstance(p, (And, Or)) else _format_formula(p)
            for p in f.children
        )
        return f"({body})"
    raise TypeError(f"cannot format {f!r}")


def format_pattern(spec: PatternSpec) -> str:
    """Render a spec back to DSL text that reparses to an identical spec."""
    parts = [_format_ast(spec.ast), "WHERE"]
    parts.append(" AND ".join(_format_formula(f) for f in spec.bindings.values()))
    parts.append(f"PARTITION BY {spec.partition_attribute}")
    lines = [" ".join(parts), "", f"order = {spec.order}", f"theta = {spec.theta!r}"]
    if spec.extras:
        lines.append("extras = [" + ", ".join(str(a) for a in spec.extras) + "]")
    return "\n".join(lines) + "\n"
