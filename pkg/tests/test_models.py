from conftest import FORK_JOIN, build_net
from pn2sc.bench import generate_sp
from pn2sc.formats import load_net
from pn2sc.graph import GraphStore
from pn2sc.models import (
    AND, BASIC, CONTAINS, HYPEREDGE, OR, PLACE, T_EQUIV,
    StatechartView, Trace, model_size, validate_statechart, validate_trace,
)
from pn2sc.transform import initialize


def state(store, type, parent=None):
    n = store.create_node(type)
    if parent is not None:
        store.add_edge(CONTAINS, parent, n)
    return n


def rules(violations):
    return [v.rule for v in violations]


def test_or_over_basic_is_valid():
    g = GraphStore()
    o = state(g, OR)
    state(g, BASIC, o)
    assert validate_statechart(g, o) == []


def test_or_inside_or_breaks_alternation():
    g = GraphStore()
    o = state(g, OR)
    state(g, OR, o)
    assert rules(validate_statechart(g)) == ["alternation"]


def test_and_may_only_hold_or():
    g = GraphStore()
    a = state(g, AND)
    state(g, BASIC, a)
    assert rules(validate_statechart(g)) == ["alternation"]


def test_two_parents_break_the_forest():
    g = GraphStore()
    o1, o2 = state(g, OR), state(g, OR)
    b = state(g, BASIC, o1)
    g.add_edge(CONTAINS, o2, b)
    assert rules(validate_statechart(g)) == ["forest"]


def test_containment_cycle():
    g = GraphStore()
    o = state(g, OR)
    a = state(g, AND, o)
    g.add_edge(CONTAINS, a, o)
    assert "forest" in rules(validate_statechart(g))


def test_hyperedge_must_touch_basics():
    g = GraphStore()
    o = state(g, OR)
    h = g.create_node(HYPEREDGE)
    g.add_edge("hSource", h, o)
    assert rules(validate_statechart(g)) == ["hyperedge-endpoint"]


def test_root_with_parent():
    g = GraphStore()
    o = state(g, OR)
    a = state(g, AND, o)
    assert rules(validate_statechart(g, a)) == ["root"]


def test_initialize_output_has_a_valid_trace(fork_join):
    store, _ = fork_join
    initialize(store)
    assert validate_trace(store) == []
    assert validate_statechart(store) == []


def test_deleted_place_leaves_dangling_trace(fork_join):
    store, n = fork_join
    initialize(store)
    store.delete_node(n["p3"])
    assert rules(validate_trace(store)) == ["dangling-trace"]


def test_two_places_on_one_or(fork_join):
    store, n = fork_join
    trace = initialize(store)
    tr = trace.place_trace(n["p1"])
    store.remove_edge(T_EQUIV, tr, trace.equiv(n["p1"]))
    store.add_edge(T_EQUIV, tr, trace.equiv(n["p0"]))
    assert rules(validate_trace(store)) == ["equiv-injective"]


def test_untraced_place():
    store, _ = build_net(["p"], [], [])
    assert rules(validate_trace(store)) == ["place-coverage"]


def test_model_size():
    assert model_size(GraphStore()) == 0
    store, _ = build_net(*FORK_JOIN)
    assert model_size(store) == 12
    for n in (0, 1, 5, 40):
        store = GraphStore()
        load_net(generate_sp(n), store)
        # scan by hand rather than trusting the counters
        nodes = len(store.nodes())
        edges = len(list(store.edges()))
        assert model_size(store) == nodes + edges == 1 + 11 * n


def test_scoped_size(fork_join):
    store, _ = fork_join
    initialize(store)
    assert model_size(store, "net") == 12
    # 4 Basic + 4 OR + 2 hyperedges, 4 contains + 3 sources + 3 targets
    assert model_size(store, "statechart") == 20


def test_trace_lookups(fork_join):
    store, n = fork_join
    trace = initialize(store)
    b = trace.basic_of(n["p0"])
    assert store.type_of(b) == BASIC and store.type_of(trace.equiv(n["p0"])) == OR
    assert store.out(CONTAINS, trace.equiv(n["p0"])) == {b}
    h = trace.hedge_of(n["tf"])
    view = StatechartView(store)
    assert view.sources(h) == [b]
    assert view.targets(h) == sorted([trace.basic_of(n["p1"]), trace.basic_of(n["p2"])])
    trace.remove(n["p0"])
    assert trace.place_trace(n["p0"]) is None


def test_view_depth_and_canonical_form(fork_join):
    store, _ = fork_join
    initialize(store)
    view = StatechartView(store)
    assert view.depth() == 2
    assert len(view.top_level()) == 4
    states, hedges, root = view.canonical()
    assert root is None
    assert ("tf", (("p0",),), (("p1",), ("p2",))) in hedges
    assert len(store.nodes(PLACE)) == 4
    assert isinstance(Trace(store).is_empty(), bool)
