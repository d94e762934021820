"""Rete-style incremental maintenance of pattern match sets.

Each body of each pattern compiles to a left-deep chain of nodes; every node
keeps the memory of partial matches it produces.  Store events enter the
chains as right activations at every node reading the changed relation.

Two orderings keep the deltas exact without a global recomputation:

* right activations of one source go to the deepest consumers first, so a
  change that is read twice in one chain is joined with itself exactly once;
* a pattern's match set is *published* to its callers only after all of its
  own inputs settled, callees before callers (the call graph is acyclic).
  Until then callers keep seeing the previous state, which makes negation and
  counting over callees glitch-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from operator import itemgetter
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .graph import (
    AttrSet,
    ChangeEvent,
    EdgeAdded,
    EdgeRemoved,
    GraphStore,
    NodeAdded,
    NodeRemoved,
    Subscription,
)
from .patterns import (
    WILDCARD,
    AttrNeq,
    Check,
    CountCall,
    Distinct,
    Edge,
    MatchSet,
    NegCall,
    NodeType,
    Pattern,
    PosCall,
    ReferenceEvaluator,
    UnknownPattern,
    dependencies,
    well_formed,
)


class UnsupportedConstraint(TypeError):
    pass


class MalformedPattern(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class MatchDelta:
    pattern: str
    appeared: tuple[tuple, ...]
    disappeared: tuple[tuple, ...]


# -- compiled plan -------------------------------------------------------------


@dataclass
class Step:
    """One node of a compiled body chain.

    ``kind`` is one of ``join``, ``neg``, ``count``, ``filter``, ``attr``.
    ``vars`` is the layout of the tuples the node produces.
    """

    kind: str
    constraint: object
    vars: tuple[str, ...]
    source: Optional[tuple[str, str]] = None
    args: tuple[str, ...] = ()
    key_left: tuple[int, ...] = ()
    key_atom: tuple[int, ...] = ()
    new_atom: tuple[int, ...] = ()
    atom_eq: tuple[tuple[int, int], ...] = ()
    folded: tuple[Check, ...] = ()
    carry: bool = False


@dataclass
class BodyPlan:
    steps: list[Step]
    projection: tuple[int, ...]


@dataclass
class PatternPlan:
    pattern: Pattern
    bodies: list[BodyPlan] = field(default_factory=list)


def _is_existential(arg: str, bound: set[str]) -> bool:
    return arg == WILDCARD or arg not in bound


def _plan_body(p: Pattern, body_constraints: Sequence) -> BodyPlan:
    fresh = iter(range(1_000_000))
    constraints = []
    for c in body_constraints:
        if isinstance(c, PosCall):
            c = PosCall(c.pattern, tuple(f"_#{next(fresh)}" if a == WILDCARD else a for a in c.args))
        elif not isinstance(c, (NodeType, Edge, NegCall, CountCall, Check, AttrNeq, Distinct)):
            raise UnsupportedConstraint(repr(c))
        constraints.append(c)
    positive_vars = set()
    for c in constraints:
        if isinstance(c, NodeType):
            positive_vars.add(c.var)
        elif isinstance(c, Edge):
            positive_vars.update((c.src, c.dst))
        elif isinstance(c, PosCall):
            positive_vars.update(c.args)

    layout: list[str] = []
    produced: set[str] = set()  # count results available in the layout
    steps: list[Step] = []
    remaining = list(constraints)

    def ready(c) -> bool:
        if isinstance(c, (NegCall, CountCall)):
            return all(_is_existential(a, positive_vars) or a in layout for a in c.args)
        if isinstance(c, Check):
            return all(v in produced for v in c.variables)
        if isinstance(c, (AttrNeq, Distinct)):
            return c.var1 in layout and c.var2 in layout
        return False

    while remaining:
        filt = next((c for c in remaining if not isinstance(c, (NodeType, Edge, PosCall)) and ready(c)), None)
        if filt is not None:
            remaining.remove(filt)
            steps.append(_filter_step(filt, layout, positive_vars, remaining, produced))
            continue
        positives = [c for c in remaining if isinstance(c, (NodeType, Edge, PosCall))]
        if not positives:
            raise MalformedPattern([f"{p.name}: constraints never become evaluable: {remaining}"])
        best = max(
            positives,
            key=lambda c: (sum(1 for a in _atom_args(c) if a in layout), -remaining.index(c)),
        )
        remaining.remove(best)
        steps.append(_join_step(best, layout))
    return BodyPlan(steps, tuple(layout.index(v) for v in p.params))


def _atom_args(c) -> tuple[str, ...]:
    if isinstance(c, NodeType):
        return (c.var,)
    if isinstance(c, Edge):
        return (c.src, c.dst)
    return c.args


def _join_step(c, layout: list[str]) -> Step:
    args = _atom_args(c)
    if isinstance(c, NodeType):
        source = ("type", c.type)
    elif isinstance(c, Edge):
        source = ("edge", c.kind)
    else:
        source = ("call", c.pattern)
    key_left, key_atom, new_atom, atom_eq = [], [], [], []
    first_seen: dict[str, int] = {}
    for i, a in enumerate(args):
        if a in layout:
            key_left.append(layout.index(a))
            key_atom.append(i)
        elif a in first_seen:
            atom_eq.append((first_seen[a], i))
        else:
            first_seen[a] = i
            new_atom.append(i)
    layout.extend(args[i] for i in new_atom)
    return Step(
        "join", c, tuple(layout), source=source, args=args,
        key_left=tuple(key_left), key_atom=tuple(key_atom),
        new_atom=tuple(new_atom), atom_eq=tuple(atom_eq),
    )


def _filter_step(c, layout: list[str], positive_vars: set[str], remaining: list, produced: set[str]) -> Step:
    if isinstance(c, (NegCall, CountCall)):
        key_left, key_atom, atom_eq = [], [], []
        first_seen: dict[str, int] = {}
        for i, a in enumerate(c.args):
            if a == WILDCARD:
                continue
            if a in layout:
                key_left.append(layout.index(a))
                key_atom.append(i)
            elif a in first_seen:
                atom_eq.append((first_seen[a], i))
            else:
                first_seen[a] = i
        common = dict(
            constraint=c, source=("call", c.pattern), args=c.args,
            key_left=tuple(key_left), key_atom=tuple(key_atom), atom_eq=tuple(atom_eq),
        )
        if isinstance(c, NegCall):
            return Step("neg", vars=tuple(layout), **common)
        dependents = [d for d in remaining if isinstance(d, Check) and c.result in d.variables]
        folded = tuple(d for d in dependents if set(d.variables) == {c.result})
        for d in folded:
            remaining.remove(d)
        carry = len(folded) < len(dependents)
        if carry:
            layout.append(c.result)
            produced.add(c.result)
        return Step("count", vars=tuple(layout), folded=folded, carry=carry, **common)
    if isinstance(c, AttrNeq):
        return Step("attr", c, tuple(layout), key_left=(layout.index(c.var1), layout.index(c.var2)))
    if isinstance(c, Distinct):
        return Step("filter", c, tuple(layout), key_left=(layout.index(c.var1), layout.index(c.var2)))
    return Step("filter", c, tuple(layout), key_left=tuple(layout.index(v) for v in c.variables))


class Network:
    """Compiled plans for a set of patterns; each named pattern once.

    >>> from pn2sc.patterns import PatternBuilder, library
    >>> b = PatternBuilder("arc", "P", "T"); _ = b.body().edge("preArc", "P", "T")
    >>> net = Network(library(b.build())); net.add("arc")
    >>> [s.kind for s in net.plans["arc"].bodies[0].steps]
    ['join']
    """

    def __init__(self, lib: Mapping[str, Pattern]):
        self.lib = dict(lib)
        self.plans: dict[str, PatternPlan] = {}
        self.order: list[str] = []
        self.registered: list[str] = []

    def add(self, name: str) -> None:
        if name in self.registered:
            return
        if name not in self.lib:
            raise UnknownPattern(name)
        violations = well_formed(self.lib[name], self.lib)
        if violations:
            raise MalformedPattern(violations)
        for dep in dependencies(name, self.lib):
            if dep in self.plans:
                continue
            pattern = self.lib[dep]
            plan = PatternPlan(pattern)
            for body in pattern.bodies:
                plan.bodies.append(_plan_body(pattern, body.constraints))
            self.plans[dep] = plan
            self.order.append(dep)
        self.registered.append(name)

    def add_all(self, names: Iterable[str]) -> "Network":
        for n in names:
            self.add(n)
        return self

    def consumers(self, name: str) -> list[tuple[str, int, int]]:
        """(caller, body index, step index) for every step reading ``name``."""
        found = []
        for caller in self.order:
            for b, body in enumerate(self.plans[caller].bodies):
                for s, step in enumerate(body.steps):
                    if step.source == ("call", name):
                        found.append((caller, b, s))
        return found

    def node_kinds(self, name: str) -> list[str]:
        """Node kinds of ``name`` and all of its callees."""
        kinds = []
        for dep in dependencies(name, self.lib):
            for body in self.plans[dep].bodies:
                kinds.extend(step.kind for step in body.steps)
        return kinds

    def attach(self, store: GraphStore) -> "IncrementalMatcher":
        return IncrementalMatcher(self, store)


def compile_patterns(lib: Mapping[str, Pattern], names: Iterable[str]) -> Network:
    return Network(lib).add_all(names)


# -- runtime -------------------------------------------------------------------


def _key_fn(positions: Sequence[int]) -> Callable[[tuple], object]:
    if not positions:
        return lambda t: ()
    return itemgetter(*positions)


class Memory:
    __slots__ = ("items", "_indexes")

    def __init__(self) -> None:
        self.items: set[tuple] = set()
        self._indexes: list[tuple[Callable, dict]] = []

    def add_index(self, positions: Sequence[int]) -> int:
        key = _key_fn(positions)
        index: dict = {}
        for t in self.items:
            index.setdefault(key(t), set()).add(t)
        self._indexes.append((key, index))
        return len(self._indexes) - 1

    def add(self, t: tuple) -> None:
        self.items.add(t)
        for key, index in self._indexes:
            k = key(t)
            bucket = index.get(k)
            if bucket is None:
                index[k] = {t}
            else:
                bucket.add(t)

    def remove(self, t: tuple) -> None:
        self.items.remove(t)
        for key, index in self._indexes:
            k = key(t)
            bucket = index[k]
            bucket.discard(t)
            if not bucket:
                del index[k]

    def lookup(self, i: int, key) -> set[tuple]:
        return self._indexes[i][1].get(key, _EMPTY)


_EMPTY: frozenset = frozenset()


class _TypeSource:
    def __init__(self, type: str):
        self.type = type
        self.store: GraphStore = None  # type: ignore[assignment]

    def lookup(self, mask: tuple[bool, ...], key):
        if mask[0]:
            if key in self.store.node_set(self.type):
                return ((key,),)
            return ()
        return [(n,) for n in self.store.node_set(self.type)]


class _EdgeSource:
    def __init__(self, kind: str):
        self.kind = kind
        self.store: GraphStore = None  # type: ignore[assignment]

    def lookup(self, mask: tuple[bool, ...], key):
        store, kind = self.store, self.kind
        if mask[0] and mask[1]:
            return (key,) if store.has_edge(kind, key[0], key[1]) else ()
        if mask[0]:
            return [(key, d) for d in store.out(kind, key)]
        if mask[1]:
            return [(s, key) for s in store.inn(kind, key)]
        return [(s, d) for _, s, d in store.edges(kind)]


class _PatternState:
    """Support counts, pending changes and the published match set."""

    def __init__(self, name: str):
        self.name = name
        self.support: dict[tuple, int] = {}
        self.pending: dict[tuple, int] = {}
        self.published = Memory()
        self.masks: dict[tuple[bool, ...], int] = {}
        self.consumers: list = []

    def index_for(self, mask: tuple[bool, ...]) -> int:
        if mask not in self.masks:
            self.masks[mask] = self.published.add_index([i for i, m in enumerate(mask) if m])
        return self.masks[mask]

    def lookup(self, mask: tuple[bool, ...], key):
        if not any(mask):
            return list(self.published.items)
        return self.published.lookup(self.masks[mask], key)

    def add_support(self, t: tuple, sign: int) -> None:
        old = self.support.get(t, 0)
        new = old + sign
        if new:
            self.support[t] = new
        else:
            del self.support[t]
        if (old > 0) != (new > 0):
            if t in self.pending:
                del self.pending[t]
            else:
                self.pending[t] = 1 if new > 0 else -1


class _Node:
    kind = "node"

    def __init__(self, step: Optional[Step], depth: int):
        self.step = step
        self.depth = depth
        self.out = Memory()
        self.succ = None
        self.left_mem: Memory = None  # type: ignore[assignment]
        self.left_idx = -1

    def emit(self, t: tuple, sign: int) -> None:
        if sign > 0:
            self.out.add(t)
        else:
            self.out.remove(t)
        self.succ.left(t, sign)

    def left_index_positions(self) -> list[Sequence[int]]:
        """Key positions this node needs on its left memory."""
        return []


class _JoinNode(_Node):
    kind = "join"

    def __init__(self, step: Step, depth: int, source):
        super().__init__(step, depth)
        self.source = source
        self.lkey = _key_fn(step.key_left)
        self.rkey = _key_fn(step.key_atom)
        self.mask = tuple(i in step.key_atom for i in range(len(step.args)))
        self.new_atom = step.new_atom
        self.newvals = _key_fn(step.new_atom) if len(step.new_atom) != 1 else None
        self.atom_eq = step.atom_eq
        if isinstance(source, _PatternState):
            source.index_for(self.mask)

    def left_index_positions(self):
        return [self.step.key_left]

    def _ext(self, r: tuple) -> tuple:
        if self.newvals is None:
            return (r[self.new_atom[0]],)
        if not self.new_atom:
            return ()
        return self.newvals(r)

    def left(self, t: tuple, sign: int) -> None:
        key = self.lkey(t)
        for r in self.source.lookup(self.mask, key):
            if self.atom_eq and any(r[i] != r[j] for i, j in self.atom_eq):
                continue
            o = t + self._ext(r)
            if sign < 0 and o not in self.out.items:
                continue
            self.emit(o, sign)

    def right(self, r: tuple, sign: int) -> None:
        if self.atom_eq and any(r[i] != r[j] for i, j in self.atom_eq):
            return
        lefts = self.left_mem.lookup(self.left_idx, self.rkey(r))
        if not lefts:
            return
        ext = self._ext(r)
        for t in list(lefts):
            self.emit(t + ext, sign)


class _GroupCounter(_Node):
    """Shared machinery of anti-join and count nodes: per-key callee counts."""

    def __init__(self, step: Step, depth: int, source: _PatternState):
        super().__init__(step, depth)
        self.source = source
        self.lkey = _key_fn(step.key_left)
        self.rkey = _key_fn(step.key_atom)
        self.atom_eq = step.atom_eq
        self.counts: dict = {}

    def left_index_positions(self):
        return [self.step.key_left]

    def _bump(self, r: tuple, sign: int):
        if self.atom_eq and any(r[i] != r[j] for i, j in self.atom_eq):
            return None
        key = self.rkey(r)
        old = self.counts.get(key, 0)
        new = old + sign
        if new:
            self.counts[key] = new
        else:
            del self.counts[key]
        return key, old, new


class _NegNode(_GroupCounter):
    kind = "neg"

    def left(self, t: tuple, sign: int) -> None:
        if sign > 0:
            if not self.counts.get(self.lkey(t)):
                self.emit(t, 1)
        elif t in self.out.items:
            self.emit(t, -1)

    def right(self, r: tuple, sign: int) -> None:
        bumped = self._bump(r, sign)
        if bumped is None:
            return
        key, old, new = bumped
        if (old == 0) == (new == 0):
            return
        out_sign = 1 if new == 0 else -1
        for t in list(self.left_mem.lookup(self.left_idx, key)):
            self.emit(t, out_sign)


class _CountNode(_GroupCounter):
    kind = "count"

    def __init__(self, step: Step, depth: int, source: _PatternState):
        super().__init__(step, depth, source)
        self.checks = step.folded
        self.carry = step.carry
        self.result = step.constraint.result

    def passes(self, n: int) -> bool:
        env = {self.result: n}
        return all(c.holds(env) for c in self.checks)

    def left(self, t: tuple, sign: int) -> None:
        n = self.counts.get(self.lkey(t), 0)
        if not self.passes(n):
            return
        o = t + (n,) if self.carry else t
        if sign > 0 or o in self.out.items:
            self.emit(o, sign)

    def right(self, r: tuple, sign: int) -> None:
        bumped = self._bump(r, sign)
        if bumped is None:
            return
        key, old, new = bumped
        was, now = self.passes(old), self.passes(new)
        if not self.carry and was == now:
            return
        for t in list(self.left_mem.lookup(self.left_idx, key)):
            if self.carry:
                if was:
                    self.emit(t + (old,), -1)
                if now:
                    self.emit(t + (new,), 1)
            else:
                self.emit(t, 1 if now else -1)


class _FilterNode(_Node):
    kind = "filter"

    def __init__(self, step: Step, depth: int):
        super().__init__(step, depth)
        c = step.constraint
        if isinstance(c, Distinct):
            i, j = step.key_left
            self.pred = lambda t: t[i] != t[j]
        else:
            positions = dict(zip(c.variables, step.key_left))
            self.pred = lambda t: c.holds({v: t[p] for v, p in positions.items()})

    def left(self, t: tuple, sign: int) -> None:
        if sign > 0:
            if self.pred(t):
                self.emit(t, 1)
        elif t in self.out.items:
            self.emit(t, -1)


class _AttrNode(_Node):
    kind = "attr"

    def __init__(self, step: Step, depth: int):
        super().__init__(step, depth)
        c = step.constraint
        self.key1, self.key2 = c.key1, c.key2
        self.pos1, self.pos2 = step.key_left
        self.store: GraphStore = None  # type: ignore[assignment]
        self.idx1 = self.idx2 = -1

    def left_index_positions(self):
        return [(self.pos1,), (self.pos2,)]

    def pred(self, t: tuple) -> bool:
        return self.store.attr(t[self.pos1], self.key1) != self.store.attr(t[self.pos2], self.key2)

    def left(self, t: tuple, sign: int) -> None:
        if sign > 0:
            if self.pred(t):
                self.emit(t, 1)
        elif t in self.out.items:
            self.emit(t, -1)

    def attr_changed(self, nid, key: str) -> None:
        affected: set[tuple] = set()
        if key == self.key1:
            affected |= self.left_mem.lookup(self.idx1, nid)
        if key == self.key2:
            affected |= self.left_mem.lookup(self.idx2, nid)
        for t in sorted(affected):
            now = self.pred(t)
            if now != (t in self.out.items):
                self.emit(t, 1 if now else -1)


class _Production:
    def __init__(self, state: _PatternState, projection: tuple[int, ...]):
        self.state = state
        self.project = _key_fn(projection) if len(projection) != 1 else None
        self.pos = projection[0] if len(projection) == 1 else None
        self.projection = projection

    def left(self, t: tuple, sign: int) -> None:
        if self.pos is not None:
            p = (t[self.pos],)
        elif not self.projection:
            p = ()
        else:
            p = self.project(t)
        self.state.add_support(p, sign)


class IncrementalMatcher:
    """Live match sets of every pattern in a :class:`Network` over a store."""

    def __init__(self, network: Network, store: GraphStore):
        self.network = network
        self.store = store
        self._states: dict[str, _PatternState] = {n: _PatternState(n) for n in network.order}
        self._sources: dict[tuple[str, str], object] = {}
        self._consumers: dict[tuple[str, str], list] = {}
        self._attr_nodes: list[_AttrNode] = []
        self._chains: list[_Node] = []
        # deltas are reported for registered patterns only, not helpers
        self._acc: dict[str, dict[tuple, int]] = {n: {} for n in network.registered}
        self._build()
        self._subscription: Optional[Subscription] = None
        self._seed(store)

    # -- construction --------------------------------------------------------

    def _source(self, key: tuple[str, str]):
        if key[0] == "call":
            return self._states[key[1]]
        if key not in self._sources:
            self._sources[key] = _TypeSource(key[1]) if key[0] == "type" else _EdgeSource(key[1])
        return self._sources[key]

    def _build(self) -> None:
        for name in self.network.order:
            plan = self.network.plans[name]
            for body in plan.bodies:
                unit = Memory()
                unit.add(())
                prev_mem = unit
                nodes: list[_Node] = []
                for depth, step in enumerate(body.steps, start=1):
                    if step.kind == "join":
                        node = _JoinNode(step, depth, self._source(step.source))
                    elif step.kind == "neg":
                        node = _NegNode(step, depth, self._states[step.source[1]])
                    elif step.kind == "count":
                        node = _CountNode(step, depth, self._states[step.source[1]])
                    elif step.kind == "attr":
                        node = _AttrNode(step, depth)
                        self._attr_nodes.append(node)
                    else:
                        node = _FilterNode(step, depth)
                    node.left_mem = prev_mem
                    positions = node.left_index_positions()
                    if positions:
                        node.left_idx = prev_mem.add_index(positions[0])
                    if isinstance(node, _AttrNode):
                        node.idx1 = node.left_idx
                        node.idx2 = prev_mem.add_index(positions[1])
                    if step.source is not None:
                        self._consumers.setdefault(step.source, []).append(node)
                    if nodes:
                        nodes[-1].succ = node
                    nodes.append(node)
                    prev_mem = node.out
                production = _Production(self._states[name], body.projection)
                if nodes:
                    nodes[-1].succ = production
                    self._chains.append(nodes[0])
                else:
                    production.left((), 1)
        for key, consumers in self._consumers.items():
            consumers.sort(key=lambda n: -n.depth)
            if key[0] == "call":
                self._states[key[1]].consumers = consumers
        self._attr_nodes.sort(key=lambda n: -n.depth)

    def _point_at(self, store: GraphStore) -> None:
        for source in self._sources.values():
            source.store = store
        for node in self._attr_nodes:
            node.store = store

    def _seed(self, store: GraphStore) -> None:
        shadow = GraphStore()
        self._point_at(shadow)
        sub = shadow.subscribe(self.handle_event)
        for first in self._chains:
            first.left((), 1)
        self._publish()
        for event in store.as_events():
            shadow.apply(event)
        sub.cancel()
        self._point_at(store)
        for acc in self._acc.values():
            acc.clear()
        self._subscription = store.subscribe(self.handle_event)

    def detach(self) -> None:
        if self._subscription is not None:
            self._subscription.cancel()
            self._subscription = None

    # -- event handling ------------------------------------------------------

    def handle_event(self, event: ChangeEvent) -> None:
        cls = type(event)
        if cls is EdgeAdded or cls is EdgeRemoved:
            sign = 1 if cls is EdgeAdded else -1
            consumers = self._consumers.get(("edge", event.kind))
            if consumers:
                r = (event.src, event.dst)
                for node in consumers:
                    node.right(r, sign)
        elif cls is NodeAdded or cls is NodeRemoved:
            sign = 1 if cls is NodeAdded else -1
            consumers = self._consumers.get(("type", event.type))
            if consumers:
                r = (event.id,)
                for node in consumers:
                    node.right(r, sign)
        elif cls is AttrSet:
            for node in self._attr_nodes:
                if event.key == node.key1 or event.key == node.key2:
                    node.attr_changed(event.id, event.key)
        else:
            return
        self._publish()

    def _publish(self) -> None:
        for state in self._states.values():
            if not state.pending:
                continue
            changes = sorted(state.pending.items())
            state.pending.clear()
            acc = self._acc.get(state.name)
            for t, sign in changes:
                if sign > 0:
                    state.published.add(t)
                else:
                    state.published.remove(t)
                for node in state.consumers:
                    node.right(t, sign)
                if acc is None:
                    continue
                if t in acc:
                    del acc[t]
                else:
                    acc[t] = sign

    # -- queries -------------------------------------------------------------

    @property
    def patterns(self) -> list[str]:
        return list(self.network.order)

    def matches(self, name: str) -> set[tuple]:
        """Live match set; do not mutate."""
        try:
            return self._states[name].published.items
        except KeyError:
            raise UnknownPattern(name) from None

    def current_matches(self, name: str) -> MatchSet:
        return MatchSet(name, frozenset(self.matches(name)))

    def take_deltas(self) -> list[MatchDelta]:
        out = []
        for name, acc in self._acc.items():
            if not acc:
                continue
            appeared = tuple(sorted(t for t, s in acc.items() if s > 0))
            disappeared = tuple(sorted(t for t, s in acc.items() if s < 0))
            acc.clear()
            out.append(MatchDelta(name, appeared, disappeared))
        return out

    def count_nodes(self) -> list[tuple[str, tuple[int, ...], tuple[tuple[int, int], ...], dict]]:
        """(callee, keyed argument positions, equal-argument pairs, per-key
        counts) for every count node; lets tests check the counts by brute
        force."""
        found = []
        for first in self._chains:
            node = first
            while isinstance(node, _Node):
                if isinstance(node, _CountNode):
                    step = node.step
                    found.append((step.source[1], step.key_atom, step.atom_eq, dict(node.counts)))
                node = node.succ
        return found


class ReferenceMatcher:
    """Same interface as :class:`IncrementalMatcher`, recomputing on demand.

    Any store change marks the cached match sets dirty; the next query
    re-evaluates every pattern with :class:`ReferenceEvaluator`.
    """

    def __init__(self, lib: Mapping[str, Pattern], names: Iterable[str], store: GraphStore):
        names = list(names)
        self.lib = dict(lib)
        self.store = store
        order: list[str] = []
        for n in names:
            for dep in dependencies(n, self.lib):
                if dep not in order:
                    order.append(dep)
        self._order = order
        self._registered = list(dict.fromkeys(names))
        self._dirty = True
        self._current: dict[str, frozenset] = {}
        self._last_taken: dict[str, frozenset] = {}
        self._refresh()
        self._last_taken = dict(self._current)
        self._subscription = store.subscribe(self.handle_event)

    def handle_event(self, event: ChangeEvent) -> None:
        self._dirty = True

    def detach(self) -> None:
        self._subscription.cancel()

    def _refresh(self) -> None:
        if not self._dirty:
            return
        ev = ReferenceEvaluator(self.store, self.lib)
        self._current = {n: frozenset(ev.matches(n)) for n in self._order}
        self._dirty = False

    @property
    def patterns(self) -> list[str]:
        return list(self._order)

    def matches(self, name: str) -> frozenset:
        if name not in self._order:
            raise UnknownPattern(name)
        self._refresh()
        return self._current[name]

    def current_matches(self, name: str) -> MatchSet:
        return MatchSet(name, self.matches(name))

    def take_deltas(self) -> list[MatchDelta]:
        self._refresh()
        out = []
        for n in self._registered:
            old, new = self._last_taken.get(n, frozenset()), self._current[n]
            if old != new:
                out.append(MatchDelta(n, tuple(sorted(new - old)), tuple(sorted(old - new))))
        self._last_taken = dict(self._current)
        return out


Matcher = Union[IncrementalMatcher, ReferenceMatcher]


def make_matcher(kind: str, lib: Mapping[str, Pattern], names: Iterable[str], store: GraphStore) -> Matcher:
    """``kind`` is ``"incremental"`` or ``"reference"``."""
    names = list(names)
    if kind == "incremental":
        return compile_patterns(lib, names).attach(store)
    if kind == "reference":
        return ReferenceMatcher(lib, names, store)
    raise ValueError(f"unknown matcher {kind!r}")
