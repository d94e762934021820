"""Random small graphs and mutation scripts over the full node vocabulary."""

import random

from pn2sc.graph import GraphStore
from pn2sc.models import (
    BASIC, HYPEREDGE, NAME, OR, PLACE, PLACE_TRACE, POST_ARC, PRE_ARC,
    T_BASIC, T_EQUIV, T_HEDGE, T_SOURCE, TRANSITION, TRANSITION_TRACE,
)

NAMES = ("a", "b", "c")
NODE_TYPES = (PLACE, PLACE, TRANSITION, TRANSITION, BASIC, OR, HYPEREDGE, PLACE_TRACE, TRANSITION_TRACE)
TYPED_EDGES = (
    (PRE_ARC, PLACE, TRANSITION),
    (POST_ARC, TRANSITION, PLACE),
    (T_SOURCE, PLACE_TRACE, PLACE),
    (T_SOURCE, TRANSITION_TRACE, TRANSITION),
    (T_EQUIV, PLACE_TRACE, OR),
    (T_BASIC, PLACE_TRACE, BASIC),
    (T_HEDGE, TRANSITION_TRACE, HYPEREDGE),
)


def _new_node(store, rng):
    n = store.create_node(rng.choice(NODE_TYPES))
    if rng.random() < 0.8:
        store.set_attr(n, NAME, rng.choice(NAMES))
    return n


def _add_edge(store, rng):
    kind, st, dt = rng.choice(TYPED_EDGES + (TYPED_EDGES[0], TYPED_EDGES[1]))
    srcs, dsts = store.nodes(st), store.nodes(dt)
    if srcs and dsts:
        store.add_edge(kind, rng.choice(srcs), rng.choice(dsts))


def random_store(rng: random.Random, max_nodes: int = 12) -> GraphStore:
    store = GraphStore()
    for _ in range(rng.randint(2, max_nodes)):
        _new_node(store, rng)
    for _ in range(rng.randint(0, 3 * max_nodes)):
        _add_edge(store, rng)
    return store


def mutate(store: GraphStore, rng: random.Random, max_nodes: int = 12) -> str:
    """Apply one random mutation and return its kind."""
    r = rng.random()
    live = store.nodes()
    if r < 0.12 and len(live) < max_nodes or not live:
        _new_node(store, rng)
        return "create"
    if r < 0.24:
        store.delete_node(rng.choice(live))
        return "delete"
    if r < 0.55:
        _add_edge(store, rng)
        return "add-edge"
    if r < 0.85:
        edges = sorted(store.edges())
        if edges:
            store.remove_edge(*rng.choice(edges))
        return "remove-edge"
    store.set_attr(rng.choice(live), NAME, rng.choice(NAMES))
    return "rename"
