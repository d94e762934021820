from __future__ import annotations

import pytest

from pn2sc.graph import GraphStore
from pn2sc.models import NAME, PLACE, POST_ARC, PRE_ARC, TRANSITION


def build_net(places, transitions, arcs, store=None):
    """Tiny net builder: names double as labels; returns (store, ids)."""
    store = store if store is not None else GraphStore()
    ids = {}
    for name in places:
        ids[name] = store.create_node(PLACE)
        store.set_attr(ids[name], NAME, name)
        store.set_attr(ids[name], "label", name)
    for name in transitions:
        ids[name] = store.create_node(TRANSITION)
        store.set_attr(ids[name], NAME, name)
        store.set_attr(ids[name], "label", name)
    for src, dst in arcs:
        kind = PRE_ARC if src in places else POST_ARC
        store.add_edge(kind, ids[src], ids[dst])
    return store, ids


FORK_JOIN = (
    ["p0", "p1", "p2", "p3"],
    ["tf", "tj"],
    [("p0", "tf"), ("tf", "p1"), ("tf", "p2"), ("p1", "tj"), ("p2", "tj"), ("tj", "p3")],
)
CHAIN = (["p0", "p1"], ["t"], [("p0", "t"), ("t", "p1")])
# t1 -> q1, t2 -> q2, {q1, q2} -> t3: q1 and q2 differ in their pre-transitions
NON_REDUCIBLE = (["q1", "q2"], ["t1", "t2", "t3"], [("t1", "q1"), ("t2", "q2"), ("q1", "t3"), ("q2", "t3")])


@pytest.fixture
def fork_join():
    return build_net(*FORK_JOIN)


@pytest.fixture
def chain():
    return build_net(*CHAIN)


class Recorder:
    def __init__(self):
        self.events = []

    def __call__(self, event):
        self.events.append(event)


@pytest.fixture
def recorder():
    return Recorder()


# one PASS/FAIL line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
