"""Petri net, statechart and trace models as typed views over one store."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .graph import GraphStore, NodeId

# node types
PLACE = "Place"
TRANSITION = "Transition"
BASIC = "Basic"
OR = "OR"
AND = "AND"
HYPEREDGE = "HyperEdge"
PLACE_TRACE = "PlaceTrace"
TRANSITION_TRACE = "TransitionTrace"

STATE_TYPES = (BASIC, OR, AND)

# edge kinds
PRE_ARC = "preArc"  # Place -> Transition
POST_ARC = "postArc"  # Transition -> Place
CONTAINS = "contains"  # state -> child state
H_SOURCE = "hSource"  # HyperEdge -> Basic
H_TARGET = "hTarget"  # HyperEdge -> Basic
T_SOURCE = "tSource"  # trace -> Place | Transition
T_EQUIV = "tEquiv"  # PlaceTrace -> OR
T_BASIC = "tBasic"  # PlaceTrace -> Basic
T_HEDGE = "tHedge"  # TransitionTrace -> HyperEdge

NAME = "name"
LABEL = "label"

NET_TYPES = (PLACE, TRANSITION)
NET_EDGES = (PRE_ARC, POST_ARC)
STATECHART_TYPES = (BASIC, OR, AND, HYPEREDGE)
STATECHART_EDGES = (CONTAINS, H_SOURCE, H_TARGET)
TRACE_TYPES = (PLACE_TRACE, TRANSITION_TRACE)
TRACE_EDGES = (T_SOURCE, T_EQUIV, T_BASIC, T_HEDGE)

SCOPES = {
    "net": (NET_TYPES, NET_EDGES),
    "statechart": (STATECHART_TYPES, STATECHART_EDGES),
    "trace": (TRACE_TYPES, TRACE_EDGES),
}


def model_size(store: GraphStore, scope: Optional[str] = None) -> int:
    """Live nodes plus live edges, whole store or one of ``SCOPES``."""
    if scope is None:
        return store.node_count() + store.edge_count()
    types, kinds = SCOPES[scope]
    return sum(len(store.node_set(t)) for t in types) + sum(
        1 for k in kinds for _ in store.edges(k)
    )


def name_of(store: GraphStore, nid: NodeId) -> str:
    return store.attr(nid, NAME) or ""


# -- petri net -----------------------------------------------------------------


class PetriNetView:
    def __init__(self, store: GraphStore):
        self.store = store

    @property
    def places(self) -> list[NodeId]:
        return self.store.nodes(PLACE)

    @property
    def transitions(self) -> list[NodeId]:
        return self.store.nodes(TRANSITION)

    def pre(self, t: NodeId) -> set[NodeId]:
        """Places feeding transition ``t``."""
        return set(self.store.inn(PRE_ARC, t))

    def post(self, t: NodeId) -> set[NodeId]:
        """Places fed by transition ``t``."""
        return set(self.store.out(POST_ARC, t))

    def pre_transitions(self, p: NodeId) -> set[NodeId]:
        return set(self.store.inn(POST_ARC, p))

    def post_transitions(self, p: NodeId) -> set[NodeId]:
        return set(self.store.out(PRE_ARC, p))

    def arcs(self) -> list[tuple[NodeId, NodeId]]:
        return sorted((s, d) for _, s, d in self.store.edges(PRE_ARC)) + sorted(
            (s, d) for _, s, d in self.store.edges(POST_ARC)
        )


# -- statechart ----------------------------------------------------------------


class StatechartView:
    def __init__(self, store: GraphStore, root: Optional[NodeId] = None):
        self.store = store
        self.root = root

    def states(self) -> list[NodeId]:
        return sorted(n for t in STATE_TYPES for n in self.store.node_set(t))

    def hyperedges(self) -> list[NodeId]:
        return self.store.nodes(HYPEREDGE)

    def children(self, s: NodeId) -> list[NodeId]:
        """Children in the order they were attached."""
        store = self.store
        return sorted(store.out(CONTAINS, s), key=lambda c: store.edge_order(CONTAINS, s, c))

    def parent(self, s: NodeId) -> Optional[NodeId]:
        parents = self.store.inn(CONTAINS, s)
        return min(parents) if parents else None

    def top_level(self) -> list[NodeId]:
        return [s for s in self.states() if not self.store.inn(CONTAINS, s)]

    def sources(self, h: NodeId) -> list[NodeId]:
        return sorted(self.store.out(H_SOURCE, h))

    def targets(self, h: NodeId) -> list[NodeId]:
        return sorted(self.store.out(H_TARGET, h))

    def depth(self) -> int:
        """Levels of the deepest containment path (a lone state has depth 1)."""

        def walk(s: NodeId) -> int:
            return 1 + max((walk(c) for c in self.children(s)), default=0)

        return max((walk(s) for s in self.top_level()), default=0)

    def canonical(self) -> tuple:
        """Id-free structural form: nested states plus hyperedges by name."""
        store = self.store

        def form(s: NodeId) -> tuple:
            return (store.type_of(s), name_of(store, s), tuple(sorted(form(c) for c in self.children(s))))

        def leaf(b: NodeId) -> tuple:
            return (name_of(store, b),)

        states = tuple(sorted(form(s) for s in self.top_level()))
        hedges = tuple(
            sorted(
                (
                    name_of(store, h),
                    tuple(sorted(leaf(b) for b in self.sources(h))),
                    tuple(sorted(leaf(b) for b in self.targets(h))),
                )
                for h in self.hyperedges()
            )
        )
        root = form(self.root) if self.root is not None else None
        return states, hedges, root


@dataclass(frozen=True)
class ModelViolation:
    rule: str
    nodes: tuple[NodeId, ...]
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.rule} {list(self.nodes)} {self.detail}".rstrip()


_ALLOWED_CHILDREN = {OR: (BASIC, AND), AND: (OR,), BASIC: ()}


def validate_statechart(store: GraphStore, root: Optional[NodeId] = None) -> list[ModelViolation]:
    out: list[ModelViolation] = []
    states = {n for t in STATE_TYPES for n in store.node_set(t)}
    for _, parent, child in sorted(store.edges(CONTAINS)):
        if parent not in states or child not in states:
            out.append(ModelViolation("containment-endpoint", (parent, child)))
            continue
        if store.type_of(child) not in _ALLOWED_CHILDREN[store.type_of(parent)]:
            out.append(
                ModelViolation(
                    "alternation",
                    (parent, child),
                    f"{store.type_of(parent)} may not contain {store.type_of(child)}",
                )
            )
    for s in sorted(states):
        parents = store.inn(CONTAINS, s)
        if len(parents) > 1:
            out.append(ModelViolation("forest", (s, *sorted(parents)), "more than one parent"))
    # cycle detection: walk up parent links
    for s in sorted(states):
        seen = {s}
        cur = s
        while True:
            parents = store.inn(CONTAINS, cur)
            if not parents:
                break
            cur = min(parents)
            if cur in seen:
                out.append(ModelViolation("forest", (s,), "containment cycle"))
                break
            seen.add(cur)
    for kind in (H_SOURCE, H_TARGET):
        for _, h, b in sorted(store.edges(kind)):
            if store.type_of(h) != HYPEREDGE or store.type_of(b) != BASIC:
                out.append(ModelViolation("hyperedge-endpoint", (h, b), kind))
    if root is not None:
        if root not in states:
            out.append(ModelViolation("root", (root,), "root is not a live state"))
        elif store.inn(CONTAINS, root):
            out.append(ModelViolation("root", (root,), "root has a parent"))
    return out


# -- trace ---------------------------------------------------------------------


class Trace:
    """Place/transition correspondence stored as trace nodes.

    A place trace links its place (``tSource``) to the place's OR state
    (``tEquiv``) and Basic state (``tBasic``); a transition trace links its
    transition to its hyperedge (``tHedge``).
    """

    def __init__(self, store: GraphStore):
        self.store = store

    def _traces_of(self, source: NodeId, type: str) -> list[NodeId]:
        return sorted(n for n in self.store.inn(T_SOURCE, source) if self.store.type_of(n) == type)

    def _single(self, nodes: Iterable[NodeId]) -> Optional[NodeId]:
        nodes = sorted(nodes)
        return nodes[0] if nodes else None

    def place_trace(self, p: NodeId) -> Optional[NodeId]:
        return self._single(self._traces_of(p, PLACE_TRACE))

    def transition_trace(self, t: NodeId) -> Optional[NodeId]:
        return self._single(self._traces_of(t, TRANSITION_TRACE))

    def equiv(self, p: NodeId) -> Optional[NodeId]:
        tr = self.place_trace(p)
        return None if tr is None else self._single(self.store.out(T_EQUIV, tr))

    def basic_of(self, p: NodeId) -> Optional[NodeId]:
        tr = self.place_trace(p)
        return None if tr is None else self._single(self.store.out(T_BASIC, tr))

    def hedge_of(self, t: NodeId) -> Optional[NodeId]:
        tr = self.transition_trace(t)
        return None if tr is None else self._single(self.store.out(T_HEDGE, tr))

    def add_place(self, p: NodeId, or_state: NodeId, basic: NodeId) -> NodeId:
        tr = self.store.create_node(PLACE_TRACE)
        self.store.add_edge(T_SOURCE, tr, p)
        self.store.add_edge(T_EQUIV, tr, or_state)
        self.store.add_edge(T_BASIC, tr, basic)
        return tr

    def add_transition(self, t: NodeId, hedge: NodeId) -> NodeId:
        tr = self.store.create_node(TRANSITION_TRACE)
        self.store.add_edge(T_SOURCE, tr, t)
        self.store.add_edge(T_HEDGE, tr, hedge)
        return tr

    def remove(self, source: NodeId) -> None:
        """Delete every trace node whose source is ``source``."""
        for tr in sorted(self.store.inn(T_SOURCE, source)):
            self.store.delete_node(tr)

    def is_empty(self) -> bool:
        return not any(self.store.node_set(t) for t in TRACE_TYPES)


def validate_trace(store: GraphStore) -> list[ModelViolation]:
    out: list[ModelViolation] = []
    places = store.node_set(PLACE)
    transitions = store.node_set(TRANSITION)
    equiv_owner: dict[NodeId, NodeId] = {}
    covered_places: dict[NodeId, int] = {}
    covered_transitions: dict[NodeId, int] = {}

    def one(tr: NodeId, kind: str, expected: str) -> Optional[NodeId]:
        targets = store.out(kind, tr)
        if len(targets) != 1:
            out.append(ModelViolation("trace-shape", (tr,), f"{len(targets)} {kind} links"))
            return None
        (target,) = targets
        if store.type_of(target) != expected:
            out.append(ModelViolation("trace-shape", (tr, target), f"{kind} must point at {expected}"))
            return None
        return target

    for tr in sorted(store.node_set(PLACE_TRACE)):
        src = store.out(T_SOURCE, tr)
        if not src:
            out.append(ModelViolation("dangling-trace", (tr,), "source place deleted"))
        else:
            p = one(tr, T_SOURCE, PLACE)
            if p is not None:
                covered_places[p] = covered_places.get(p, 0) + 1
        o = one(tr, T_EQUIV, OR)
        one(tr, T_BASIC, BASIC)
        if o is not None:
            if o in equiv_owner:
                out.append(ModelViolation("equiv-injective", (equiv_owner[o], tr, o)))
            else:
                equiv_owner[o] = tr
    for tr in sorted(store.node_set(TRANSITION_TRACE)):
        if not store.out(T_SOURCE, tr):
            out.append(ModelViolation("dangling-trace", (tr,), "source transition deleted"))
        else:
            t = one(tr, T_SOURCE, TRANSITION)
            if t is not None:
                covered_transitions[t] = covered_transitions.get(t, 0) + 1
        one(tr, T_HEDGE, HYPEREDGE)
    for p in sorted(places):
        n = covered_places.get(p, 0)
        if n != 1:
            out.append(ModelViolation("place-coverage", (p,), f"{n} traces"))
    for t in sorted(transitions):
        n = covered_transitions.get(t, 0)
        if n != 1:
            out.append(ModelViolation("transition-coverage", (t,), f"{n} traces"))
    return out
