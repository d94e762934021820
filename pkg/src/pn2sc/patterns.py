"""Declarative graph patterns and their brute-force reference semantics.

A :class:`Pattern` is a named disjunction of bodies; a body is a conjunction
of constraints over variables.  Patterns call each other by name (positively,
negatively, or to count matches), so they live in a *library*, a plain
``dict`` from name to pattern.

:func:`eval_reference` is the semantic definition: it enumerates matches
top-down with no caching between calls.  The incremental matcher in
:mod:`pn2sc.rete` is tested against it.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Union

from .graph import GraphStore, NodeId

WILDCARD = "_"


class UnknownPattern(KeyError):
    """A pattern name that is not in the library (or not registered)."""


class CheckSyntaxError(ValueError):
    pass


# -- constraints -------------------------------------------------------------


@dataclass(frozen=True)
class NodeType:
    var: str
    type: str


@dataclass(frozen=True)
class Edge:
    kind: str
    src: str
    dst: str


@dataclass(frozen=True)
class PosCall:
    pattern: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class NegCall:
    """Holds when no callee match agrees with the bound arguments.

    Arguments not bound elsewhere in the body (or written ``_``) are
    existential and scoped to the call.
    """

    pattern: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class CountCall:
    pattern: str
    args: tuple[str, ...]
    result: str


@dataclass(frozen=True)
class Check:
    """Linear integer comparison over count results, e.g. ``"n >= 2"``."""

    expr: str

    def holds(self, env: Mapping[str, int]) -> bool:
        left, op, right = parse_check(self.expr)
        return _COMPARE[op](_lin_value(left, env), _lin_value(right, env))

    @property
    def variables(self) -> tuple[str, ...]:
        left, _, right = parse_check(self.expr)
        seen: dict[str, None] = {}
        for name, _coef in left[1] + right[1]:
            seen.setdefault(name)
        return tuple(seen)


@dataclass(frozen=True)
class AttrNeq:
    var1: str
    key1: str
    var2: str
    key2: str


@dataclass(frozen=True)
class Distinct:
    """The two bound variables denote different nodes."""

    var1: str
    var2: str


Constraint = Union[NodeType, Edge, PosCall, NegCall, CountCall, Check, AttrNeq, Distinct]
POSITIVE = (NodeType, Edge, PosCall)


# -- check expressions -------------------------------------------------------

_COMPARE = {
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    ">": operator.gt,
}
_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(<=|>=|==|!=|<|>)|([+\-*]))")

# (constant, ((var, coefficient), ...))
Linear = tuple[int, tuple[tuple[str, int], ...]]


@lru_cache(maxsize=None)
def parse_check(expr: str) -> tuple[Linear, str, Linear]:
    """Parse ``a + 2*b - 3 >= 2`` into two linear sides and a comparator."""
    tokens = []
    pos = 0
    text = expr.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise CheckSyntaxError(f"unexpected input at {text[pos:]!r} in {expr!r}")
        tokens.append(m.groups())
        pos = m.end()
    comparators = [i for i, tok in enumerate(tokens) if tok[2]]
    if len(comparators) != 1:
        raise CheckSyntaxError(f"expected exactly one comparison in {expr!r}")
    split = comparators[0]
    return (
        _parse_linear(tokens[:split], expr),
        tokens[split][2],
        _parse_linear(tokens[split + 1 :], expr),
    )


def _parse_linear(tokens, expr) -> Linear:
    if not tokens:
        raise CheckSyntaxError(f"empty operand in {expr!r}")
    const = 0
    coefs: dict[str, int] = {}
    sign = 1
    expect_term = True
    i = 0
    while i < len(tokens):
        number, name, _cmp, op = tokens[i]
        i += 1
        if op == "*":
            raise CheckSyntaxError(f"misplaced '*' in {expr!r}")
        if op:
            if not expect_term:
                sign = 1 if op == "+" else -1
                expect_term = True
            else:
                sign = sign if op == "+" else -sign
            continue
        if not expect_term:
            raise CheckSyntaxError(f"missing operator in {expr!r}")
        if number and i < len(tokens) and tokens[i][3] == "*":
            # k * var
            if i + 1 >= len(tokens) or not tokens[i + 1][1]:
                raise CheckSyntaxError(f"expected a variable after '*' in {expr!r}")
            name = tokens[i + 1][1]
            coefs[name] = coefs.get(name, 0) + sign * int(number)
            i += 2
        elif number:
            const += sign * int(number)
        else:
            coefs[name] = coefs.get(name, 0) + sign
        sign = 1
        expect_term = False
    if expect_term:
        raise CheckSyntaxError(f"dangling operator in {expr!r}")
    return const, tuple(coefs.items())


def _lin_value(lin: Linear, env: Mapping[str, int]) -> int:
    const, terms = lin
    return const + sum(coef * env[name] for name, coef in terms)


# -- patterns ----------------------------------------------------------------


@dataclass(frozen=True)
class Body:
    constraints: tuple[Constraint, ...]

    def positive_vars(self) -> set[str]:
        bound: set[str] = set()
        for c in self.constraints:
            bound.update(v for v in _positive_binds(c) if v != WILDCARD)
        return bound

    def locals(self, params: Iterable[str]) -> list[str]:
        params = set(params)
        seen: dict[str, None] = {}
        for c in self.constraints:
            for v in _positive_binds(c):
                if v != WILDCARD and v not in params:
                    seen.setdefault(v)
        return list(seen)


@dataclass(frozen=True)
class Pattern:
    name: str
    params: tuple[str, ...]
    bodies: tuple[Body, ...]

    def calls(self) -> list[str]:
        names = []
        for body in self.bodies:
            for c in body.constraints:
                if isinstance(c, (PosCall, NegCall, CountCall)) and c.pattern not in names:
                    names.append(c.pattern)
        return names

    def dump(self) -> str:
        """Stable, one-constraint-per-line rendering for golden tests."""
        lines = [f"pattern {self.name}({', '.join(self.params)})"]
        for i, body in enumerate(self.bodies):
            lines.append(f"  body {i}")
            lines.extend(f"    {format_constraint(c)}" for c in body.constraints)
        return "\n".join(lines)


def format_constraint(c: Constraint) -> str:
    if isinstance(c, NodeType):
        return f"type {c.type}({c.var})"
    if isinstance(c, Edge):
        return f"edge {c.kind}({c.src}, {c.dst})"
    if isinstance(c, PosCall):
        return f"find {c.pattern}({', '.join(c.args)})"
    if isinstance(c, NegCall):
        return f"neg find {c.pattern}({', '.join(c.args)})"
    if isinstance(c, CountCall):
        return f"count {c.pattern}({', '.join(c.args)}) -> {c.result}"
    if isinstance(c, Check):
        return f"check {c.expr}"
    if isinstance(c, AttrNeq):
        return f"attr {c.var1}.{c.key1} != {c.var2}.{c.key2}"
    if isinstance(c, Distinct):
        return f"distinct {c.var1} != {c.var2}"
    return f"unsupported {c!r}"


def _positive_binds(c: Constraint) -> tuple[str, ...]:
    if isinstance(c, NodeType):
        return (c.var,)
    if isinstance(c, Edge):
        return (c.src, c.dst)
    if isinstance(c, PosCall):
        return c.args
    return ()


class BodyBuilder:
    def __init__(self) -> None:
        self.constraints: list[Constraint] = []

    def _add(self, c: Constraint) -> "BodyBuilder":
        self.constraints.append(c)
        return self

    def type(self, var: str, type: str) -> "BodyBuilder":
        return self._add(NodeType(var, type))

    def edge(self, kind: str, src: str, dst: str) -> "BodyBuilder":
        return self._add(Edge(kind, src, dst))

    def find(self, pattern: str, *args: str) -> "BodyBuilder":
        return self._add(PosCall(pattern, tuple(args)))

    def neg(self, pattern: str, *args: str) -> "BodyBuilder":
        return self._add(NegCall(pattern, tuple(args)))

    def count(self, pattern: str, args: Iterable[str], result: str) -> "BodyBuilder":
        return self._add(CountCall(pattern, tuple(args), result))

    def check(self, expr: str) -> "BodyBuilder":
        return self._add(Check(expr))

    def attr_neq(self, var1: str, key1: str, var2: str, key2: str) -> "BodyBuilder":
        return self._add(AttrNeq(var1, key1, var2, key2))

    def distinct(self, var1: str, var2: str) -> "BodyBuilder":
        return self._add(Distinct(var1, var2))


class PatternBuilder:
    """Fluent construction of a :class:`Pattern`.

    >>> b = PatternBuilder("prePlaceOf", "P", "T")
    >>> _ = b.body().edge("preArc", "P", "T")
    >>> print(b.build().dump())
    pattern prePlaceOf(P, T)
      body 0
        edge preArc(P, T)
    """

    def __init__(self, name: str, *params: str):
        self.name = name
        self.params = tuple(params)
        self._bodies: list[BodyBuilder] = []

    def body(self) -> BodyBuilder:
        b = BodyBuilder()
        self._bodies.append(b)
        return b

    def build(self) -> Pattern:
        return Pattern(
            self.name,
            self.params,
            tuple(Body(tuple(b.constraints)) for b in self._bodies),
        )


def library(*patterns: Pattern) -> dict[str, Pattern]:
    lib: dict[str, Pattern] = {}
    for p in patterns:
        if p.name in lib:
            raise ValueError(f"duplicate pattern name {p.name!r}")
        lib[p.name] = p
    return lib


# -- well-formedness ---------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    rule: str
    pattern: str
    detail: str

    def __str__(self) -> str:
        return f"{self.pattern}: {self.rule}: {self.detail}"


def dependencies(name: str, lib: Mapping[str, Pattern]) -> list[str]:
    """Patterns reachable from ``name`` (inclusive), callees before callers.

    Raises :class:`UnknownPattern` on a dangling call.  Cycles are tolerated
    here; :func:`well_formed` reports them.
    """
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(n: str) -> None:
        if state.get(n):
            return
        if n not in lib:
            raise UnknownPattern(n)
        state[n] = 1
        for callee in lib[n].calls():
            visit(callee)
        state[n] = 2
        order.append(n)

    visit(name)
    return order


def _find_cycle(name: str, lib: Mapping[str, Pattern]) -> Optional[list[str]]:
    path: list[str] = []
    done: set[str] = set()

    def visit(n: str) -> Optional[list[str]]:
        if n in path:
            return path[path.index(n) :] + [n]
        if n in done:
            return None
        path.append(n)
        for callee in lib[n].calls():
            cycle = visit(callee)
            if cycle:
                return cycle
        path.pop()
        done.add(n)
        return None

    return visit(name)


def well_formed(pattern: Pattern, lib: Mapping[str, Pattern]) -> list[Violation]:
    """Structural checks on ``pattern`` and everything it calls.

    Raises :class:`UnknownPattern` for a call to a pattern missing from
    ``lib``.
    """
    names = dependencies(pattern.name, {**lib, pattern.name: pattern})
    full = {**lib, pattern.name: pattern}
    out: list[Violation] = []
    cycle = _find_cycle(pattern.name, full)
    if cycle:
        out.append(Violation("cycle", pattern.name, " -> ".join(cycle)))
    for name in names:
        out.extend(_check_pattern(full[name], full))
    return out


def _check_pattern(p: Pattern, lib: Mapping[str, Pattern]) -> list[Violation]:
    out: list[Violation] = []

    def bad(rule: str, detail: str) -> None:
        out.append(Violation(rule, p.name, detail))

    if not p.bodies:
        bad("no-bodies", "pattern needs at least one body")
    if len(set(p.params)) != len(p.params) or WILDCARD in p.params:
        bad("params", f"parameters must be distinct names: {p.params}")
    for i, body in enumerate(p.bodies):
        bound = body.positive_vars()
        for v in p.params:
            if v not in bound:
                bad("unbound-parameter", f"body {i}: {v} not bound by a positive constraint")
        occurrences: dict[str, int] = {}
        for c in body.constraints:
            for v in _mentions(c):
                occurrences[v] = occurrences.get(v, 0) + 1
        results: set[str] = set()
        for c in body.constraints:
            if isinstance(c, CountCall):
                if c.result in bound or c.result in p.params or c.result in results:
                    bad("count-result", f"body {i}: result {c.result} must be a fresh name")
                results.add(c.result)
        for c in body.constraints:
            where = f"body {i}: {format_constraint(c)}"
            if not isinstance(c, (NodeType, Edge, PosCall, NegCall, CountCall, Check, AttrNeq, Distinct)):
                bad("unsupported", where)
                continue
            if isinstance(c, (PosCall, NegCall, CountCall)):
                callee = lib[c.pattern]
                if len(c.args) != len(callee.params):
                    bad("arity", f"{where}: {c.pattern} takes {len(callee.params)} arguments")
            if isinstance(c, (NegCall, CountCall)):
                for v in c.args:
                    if v != WILDCARD and v not in bound and occurrences.get(v, 0) > c.args.count(v):
                        bad("existential-reuse", f"{where}: {v} is existential but used elsewhere")
                if isinstance(c, CountCall) and c.result in c.args:
                    bad("count-result", f"{where}: result used as an argument")
            elif isinstance(c, Check):
                try:
                    names = c.variables
                except CheckSyntaxError as exc:
                    bad("check-syntax", f"{where}: {exc}")
                    continue
                for v in names:
                    if v not in results:
                        bad("check-variable", f"{where}: {v} is not a count result")
            elif isinstance(c, AttrNeq):
                for v in (c.var1, c.var2):
                    if v not in bound:
                        bad("unbound-variable", f"{where}: {v} not bound")
            elif isinstance(c, Distinct):
                for v in (c.var1, c.var2):
                    if v not in bound:
                        bad("unbound-variable", f"{where}: {v} not bound")
        for c in body.constraints:
            if isinstance(c, (NodeType, Edge, PosCall, NegCall, AttrNeq, Distinct)):
                for v in _mentions(c):
                    if v in results:
                        bad("count-result", f"body {i}: {v} used outside a check")
    return out


def _mentions(c: Constraint) -> tuple[str, ...]:
    if isinstance(c, NodeType):
        return (c.var,)
    if isinstance(c, Edge):
        return (c.src, c.dst)
    if isinstance(c, (PosCall, NegCall)):
        return tuple(a for a in c.args if a != WILDCARD)
    if isinstance(c, CountCall):
        return tuple(a for a in c.args if a != WILDCARD)
    if isinstance(c, Check):
        try:
            return c.variables
        except CheckSyntaxError:
            return ()
    if isinstance(c, AttrNeq):
        return (c.var1, c.var2)
    if isinstance(c, Distinct):
        return (c.var1, c.var2)
    return ()


# -- match sets --------------------------------------------------------------


@dataclass(frozen=True)
class MatchSet:
    pattern: str
    tuples: frozenset = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[tuple]:
        return iter(sorted(self.tuples))

    def __contains__(self, item) -> bool:
        return item in self.tuples


# -- reference evaluation ----------------------------------------------------


class ReferenceEvaluator:
    """Top-down evaluation of a library against one store state.

    Callee results are memoised for the lifetime of the evaluator, so build a
    fresh one after the store changes.
    """

    def __init__(self, store: GraphStore, lib: Mapping[str, Pattern]):
        self.store = store
        self.lib = lib
        self._memo: dict[str, set[tuple]] = {}
        self._indexes: dict[tuple[str, tuple[int, ...]], dict[tuple, list[tuple]]] = {}

    def matches(self, name: str) -> set[tuple]:
        if name not in self._memo:
            if name not in self.lib:
                raise UnknownPattern(name)
            p = self.lib[name]
            found: set[tuple] = set()
            for body in p.bodies:
                found |= self._eval_body(p, body)
            self._memo[name] = found
        return self._memo[name]

    def _candidates(self, name: str, fixed: tuple[int, ...], key: tuple) -> list[tuple]:
        if not fixed:
            return list(self.matches(name))
        index = self._indexes.get((name, fixed))
        if index is None:
            index = {}
            for t in self.matches(name):
                index.setdefault(tuple(t[i] for i in fixed), []).append(t)
            self._indexes[(name, fixed)] = index
        return index.get(key, [])

    def _call_solutions(self, c, env: dict) -> Iterator[dict]:
        """Assignments of the call's unbound args, one per agreeing match."""
        fixed = tuple(i for i, a in enumerate(c.args) if a != WILDCARD and a in env)
        key = tuple(env[c.args[i]] for i in fixed)
        for t in self._candidates(c.pattern, fixed, key):
            ext: dict = {}
            ok = True
            for a, value in zip(c.args, t):
                if a == WILDCARD or a in env:
                    continue
                if ext.setdefault(a, value) != value:
                    ok = False
                    break
            if ok:
                yield ext

    def _extend(self, c: Constraint, env: dict) -> Iterator[dict]:
        store = self.store
        if isinstance(c, NodeType):
            if c.var in env:
                if store.is_live(env[c.var]) and store.type_of(env[c.var]) == c.type:
                    yield env
            else:
                for n in store.nodes(c.type):
                    yield {**env, c.var: n}
        elif isinstance(c, Edge):
            src, dst = env.get(c.src), env.get(c.dst)
            if src is not None and dst is not None:
                if store.has_edge(c.kind, src, dst):
                    yield env
            elif src is not None:
                for d in sorted(store.out(c.kind, src)):
                    if c.dst == c.src and d != src:
                        continue
                    yield {**env, c.dst: d}
            elif dst is not None:
                for s in sorted(store.inn(c.kind, dst)):
                    yield {**env, c.src: s}
            else:
                for _, s, d in store.edges(c.kind):
                    if c.src == c.dst:
                        if s == d:
                            yield {**env, c.src: s}
                    else:
                        yield {**env, c.src: s, c.dst: d}
        elif isinstance(c, PosCall):
            for ext in self._call_solutions(c, env):
                yield {**env, **ext}
        else:
            raise TypeError(f"not a positive constraint: {c!r}")

    def _eval_body(self, p: Pattern, body: Body) -> set[tuple]:
        positive = [c for c in body.constraints if isinstance(c, POSITIVE)]
        counts = [c for c in body.constraints if isinstance(c, CountCall)]
        filters = [
            c for c in body.constraints
            if not isinstance(c, POSITIVE) and not isinstance(c, CountCall)
        ]
        envs: list[dict] = [{}]
        for c in positive:
            envs = [ext for env in envs for ext in self._extend(c, env)]
            if not envs:
                return set()
        out: set[tuple] = set()
        for env in envs:
            ok = True
            for c in counts:
                env[c.result] = sum(1 for _ in self._call_solutions(c, env))
            for c in filters:
                if isinstance(c, NegCall):
                    ok = next(self._call_solutions(c, env), None) is None
                elif isinstance(c, Check):
                    ok = c.holds(env)
                elif isinstance(c, AttrNeq):
                    ok = self.store.attr(env[c.var1], c.key1) != self.store.attr(env[c.var2], c.key2)
                elif isinstance(c, Distinct):
                    ok = env[c.var1] != env[c.var2]
                else:
                    raise TypeError(f"unsupported constraint {c!r}")
                if not ok:
                    break
            if ok:
                out.add(tuple(env[v] for v in p.params))
        return out


def eval_reference(store: GraphStore, pattern: Union[Pattern, str], lib: Mapping[str, Pattern]) -> MatchSet:
    """Exact match set of ``pattern`` on the current store content."""
    if isinstance(pattern, Pattern):
        lib = {**lib, pattern.name: pattern}
        name = pattern.name
    else:
        name = pattern
    return MatchSet(name, frozenset(ReferenceEvaluator(store, lib).matches(name)))
