"""Petri net to statechart transformation: rules, actions and pipeline.

Initialization maps every place to a Basic state wrapped in an OR state and
every transition to a hyperedge.  Reduction then repeatedly applies

* the AND rule: the pre-places (or post-places) of a transition that all
  share the same pre- and post-transitions are merged into one place, and
  their OR states are grouped under a new AND state;
* the OR rule: a transition with exactly one pre-place ``Q`` and one
  post-place ``R`` is contracted, ``R`` merging into ``Q`` and the OR state
  of ``R`` dissolving into the OR state of ``Q``.

The net is consumed in the process; it is fully reduced when one place and
no transitions remain, in which case the single top-level state is the root.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, TextIO, Union

from .engine import FiringLog, Phase, Rule, StaleMatch, run_phase
from .graph import GraphStore, NodeId
from .models import (
    AND,
    BASIC,
    CONTAINS,
    H_SOURCE,
    H_TARGET,
    HYPEREDGE,
    NAME,
    OR,
    PLACE,
    POST_ARC,
    PRE_ARC,
    TRANSITION,
    PetriNetView,
    StatechartView,
    Trace,
    model_size,
    name_of,
    validate_statechart,
    validate_trace,
)
from .patterns import Pattern, PatternBuilder, library
from .rete import make_matcher


class AlreadyInitialized(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    pass


# -- preconditions ---------------------------------------------------------------


def _simple(name: str, kind: str, src: str, dst: str, *params: str) -> Pattern:
    b = PatternBuilder(name, *params)
    b.body().edge(kind, src, dst)
    return b.build()


def _tran_with_two(name: str, place_of: str, pre: bool) -> Pattern:
    b = PatternBuilder(name, "T", "P1", "P2")
    if pre:
        b.body().find(place_of, "P1", "T").find(place_of, "P2", "T")
    else:
        b.body().find(place_of, "T", "P1").find(place_of, "T", "P2")
    return b.build()


def _non_common(name: str, pair: str) -> Pattern:
    # two places of the pair differ in a post-transition or a pre-transition
    b = PatternBuilder(name, "T")
    b.body().find(pair, "T", "P1", "P2").edge(PRE_ARC, "P1", "Tx").neg("prePlaceOf", "P2", "Tx")
    b.body().find(pair, "T", "P1", "P2").edge(POST_ARC, "Tx", "P1").neg("postPlaceOf", "Tx", "P2")
    return b.build()


def build_and_precondition() -> Pattern:
    """``andPrecond(P, T)``: P is one of at least two interchangeable
    pre-places (first body) or post-places (second body) of T."""
    b = PatternBuilder("andPrecond", "P", "T")
    (
        b.body()
        .edge(PRE_ARC, "P", "T")
        .count("prePlaceOf", ["_", "T"], "countPrePlaces")
        .check("countPrePlaces >= 2")
        .neg("nonCommonTPre", "T")
    )
    (
        b.body()
        .edge(POST_ARC, "T", "P")
        .count("postPlaceOf", ["T", "_"], "countPostPlaces")
        .check("countPostPlaces >= 2")
        .neg("nonCommonTPost", "T")
    )
    return b.build()


def build_or_precondition() -> Pattern:
    """``orPrecond(Q, T, R)``: T is the only link Q -> R and has no other
    pre- or post-places."""
    b = PatternBuilder("orPrecond", "Q", "T", "R")
    (
        b.body()
        .edge(PRE_ARC, "Q", "T")
        .edge(POST_ARC, "T", "R")
        .distinct("Q", "R")
        .count("prePlaceOf", ["_", "T"], "c1")
        .check("c1 == 1")
        .count("postPlaceOf", ["T", "_"], "c2")
        .check("c2 == 1")
        .neg("parallelLink", "Q", "R", "T")
    )
    return b.build()


def _parallel_link() -> Pattern:
    b = PatternBuilder("parallelLink", "Q", "R", "T")
    (
        b.body()
        .edge(PRE_ARC, "Q", "T").edge(POST_ARC, "T", "R")
        .edge(PRE_ARC, "Q", "T2").edge(POST_ARC, "T2", "R")
        .distinct("T", "T2")
    )
    (
        b.body()
        .edge(PRE_ARC, "Q", "T").edge(POST_ARC, "T", "R")
        .edge(PRE_ARC, "R", "T2").edge(POST_ARC, "T2", "Q")
    )
    return b.build()


def pn2sc_library() -> dict[str, Pattern]:
    return library(
        _simple("prePlaceOf", PRE_ARC, "P", "T", "P", "T"),
        _simple("postPlaceOf", POST_ARC, "T", "P", "T", "P"),
        _tran_with_two("tranWithTwoPrePlaces", "prePlaceOf", pre=True),
        _tran_with_two("tranWithTwoPostPlaces", "postPlaceOf", pre=False),
        _non_common("nonCommonTPre", "tranWithTwoPrePlaces"),
        _non_common("nonCommonTPost", "tranWithTwoPostPlaces"),
        _parallel_link(),
        build_and_precondition(),
        build_or_precondition(),
    )


# -- phases ----------------------------------------------------------------------


def initialize(store: GraphStore) -> Trace:
    """Map places to Basic-in-OR states and transitions to hyperedges."""
    trace = Trace(store)
    if not trace.is_empty():
        raise AlreadyInitialized("the store already holds trace entries")
    net = PetriNetView(store)
    basic: dict[NodeId, NodeId] = {}
    for p in net.places:
        name = name_of(store, p)
        b = store.create_node(BASIC)
        o = store.create_node(OR)
        store.set_attr(b, NAME, name)
        store.set_attr(o, NAME, name)
        store.add_edge(CONTAINS, o, b)
        trace.add_place(p, o, b)
        basic[p] = b
    for t in net.transitions:
        h = store.create_node(HYPEREDGE)
        store.set_attr(h, NAME, name_of(store, t))
        for q in sorted(net.pre(t)):
            store.add_edge(H_SOURCE, h, basic[q])
        for r in sorted(net.post(t)):
            store.add_edge(H_TARGET, h, basic[r])
        trace.add_transition(t, h)
    return trace


def _homogeneous(net: PetriNetView, places: set[NodeId]) -> bool:
    shapes = {(frozenset(net.pre_transitions(p)), frozenset(net.post_transitions(p))) for p in places}
    return len(shapes) <= 1


def _reparent(store: GraphStore, state: NodeId, parent: NodeId) -> None:
    for old in sorted(store.inn(CONTAINS, state)):
        store.remove_edge(CONTAINS, old, state)
    store.add_edge(CONTAINS, parent, state)


def and_action(match: tuple, store: GraphStore, trace: Trace) -> None:
    P, T = match
    net = PetriNetView(store)
    if not (store.is_live(P) and store.is_live(T)):
        raise StaleMatch(match)
    pre, post = net.pre(T), net.post(T)
    if P in pre and len(pre) >= 2 and _homogeneous(net, pre):
        place_set = pre
    elif P in post and len(post) >= 2 and _homogeneous(net, post):
        place_set = post
    else:
        raise StaleMatch(match)
    name = name_of(store, P)
    and_state = store.create_node(AND)
    or_state = store.create_node(OR)
    store.set_attr(and_state, NAME, name)
    store.set_attr(or_state, NAME, name)
    store.add_edge(CONTAINS, or_state, and_state)
    for p in sorted(place_set):
        _reparent(store, trace.equiv(p), and_state)
    basic = trace.basic_of(P)
    trace.remove(P)
    trace.add_place(P, or_state, basic)
    for p in sorted(place_set - {P}):
        trace.remove(p)
        store.delete_node(p)


def or_action(match: tuple, store: GraphStore, trace: Trace) -> None:
    Q, T, R = match
    net = PetriNetView(store)
    if not all(store.is_live(n) for n in match) or Q == R:
        raise StaleMatch(match)
    if net.pre(T) != {Q} or net.post(T) != {R}:
        raise StaleMatch(match)
    target, merged = trace.equiv(Q), trace.equiv(R)
    for child in sorted(store.out(CONTAINS, merged)):
        _reparent(store, child, target)
    trace.remove(R)
    store.delete_node(merged)
    for t in sorted(net.pre_transitions(R) - {T}):
        store.add_edge(POST_ARC, t, Q)
    for t in sorted(net.post_transitions(R)):
        store.add_edge(PRE_ARC, Q, t)
    trace.remove(T)
    store.delete_node(T)
    store.delete_node(R)


def reduction_phase() -> Phase:
    return Phase(
        "reduction",
        (
            Rule("AND", "andPrecond", and_action),
            Rule("OR", "orPrecond", or_action),
        ),
    )


@dataclass(frozen=True)
class Termination:
    root: Optional[NodeId]
    top_elements: tuple[NodeId, ...]

    @property
    def reducible(self) -> bool:
        return self.root is not None


def terminate(store: GraphStore, trace: Optional[Trace] = None) -> Termination:
    """Designate the root when exactly one top-level state remains."""
    top = tuple(StatechartView(store).top_level())
    return Termination(top[0] if len(top) == 1 else None, top)


# -- pipeline --------------------------------------------------------------------


@dataclass
class TransformResult:
    store: GraphStore
    trace: Trace
    log: FiringLog
    termination: Termination
    labels: dict[str, NodeId]
    read_seconds: float = 0.0
    transform_seconds: float = 0.0
    matcher: Any = field(default=None, repr=False)
    session: Any = field(default=None, repr=False)

    @property
    def root(self) -> Optional[NodeId]:
        return self.termination.root

    @property
    def reducible(self) -> bool:
        return self.termination.reducible

    @property
    def top_elements(self) -> tuple[NodeId, ...]:
        return self.termination.top_elements

    @property
    def place_count(self) -> int:
        return len(self.store.node_set(PLACE))

    @property
    def transition_count(self) -> int:
        return len(self.store.node_set(TRANSITION))

    @property
    def statechart(self) -> StatechartView:
        return StatechartView(self.store, self.root)


def _check_models(store: GraphStore) -> None:
    problems = validate_statechart(store) + validate_trace(store)
    if problems:
        raise InvariantViolation("; ".join(map(str, problems)))


def transform(
    source: Union[str, "NetDocument", GraphStore],  # noqa: F821
    *,
    matcher: str = "incremental",
    max_firings: Optional[int] = None,
    trace: Union[bool, TextIO, None] = None,
    check: bool = False,
) -> TransformResult:
    """Run initialization, reduction to fixpoint and termination.

    ``source`` is net text, a parsed :class:`~pn2sc.formats.NetDocument`, or
    a store that already holds a net (labels are then read from the
    ``label`` attribute).  With ``check=True`` both model validators run
    after every firing.
    """
    from .formats import NetDocument, load_net, parse_net_text

    t0 = time.perf_counter()
    if isinstance(source, GraphStore):
        store = source
        labels = {store.attr(n, "label") or str(n): n for n in store.nodes(PLACE) + store.nodes(TRANSITION)}
    else:
        doc = parse_net_text(source) if isinstance(source, str) else source
        store = GraphStore()
        labels = load_net(doc, store)
    read_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    limit = max_firings if max_firings is not None else 10 * max(model_size(store), 1)
    lib = pn2sc_library()
    phase = reduction_phase()
    live = make_matcher(matcher, lib, phase.preconditions, store)
    trace_model = initialize(store)
    after = (lambda act: _check_models(store)) if check else None
    log = run_phase(phase, store, live, trace_model, limit=limit, trace=trace, after_fire=after)
    termination = terminate(store, trace_model)
    transform_seconds = time.perf_counter() - t1
    return TransformResult(
        store, trace_model, log, termination, labels,
        read_seconds=read_seconds, transform_seconds=transform_seconds, matcher=live,
    )
