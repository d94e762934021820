import random
from operator import itemgetter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_net
from fuzz import mutate, random_store
from pn2sc.graph import GraphStore
from pn2sc.models import NAME, PRE_ARC
from pn2sc.patterns import Body, Pattern, PatternBuilder, ReferenceEvaluator, library
from pn2sc.propagation import CP_RULES, cp_library
from pn2sc.rete import MalformedPattern, ReferenceMatcher, compile_patterns, make_matcher
from pn2sc.transform import pn2sc_library

LIB = {**pn2sc_library(), **cp_library()}
WATCHED = ("andPrecond", "orPrecond", "nonCommonTPre") + CP_RULES


def reference(store, names):
    ev = ReferenceEvaluator(store, LIB)
    return {n: ev.matches(n) for n in names}


def test_shared_callee_compiled_once():
    post_t = PatternBuilder("postT", "P", "T")
    post_t.body().edge(PRE_ARC, "P", "T")
    a = PatternBuilder("a", "P")
    a.body().type("P", "Place").neg("postT", "P", "_")
    b = PatternBuilder("b", "T")
    b.body().type("T", "Transition").count("postT", ["_", "T"], "n").check("n >= 2")
    net = compile_patterns(library(post_t.build(), a.build(), b.build()), ["a", "b"])
    assert net.order.count("postT") == 1
    assert [c[0] for c in net.consumers("postT")] == ["a", "b"]


def test_single_constraint_network():
    p = PatternBuilder("arc", "P", "T")
    p.body().edge(PRE_ARC, "P", "T")
    net = compile_patterns(library(p.build()), ["arc"])
    assert net.node_kinds("arc") == ["join"]


def test_and_precondition_network_shape():
    kinds = compile_patterns(LIB, ["andPrecond"]).node_kinds("andPrecond")
    assert "count" in kinds and "neg" in kinds


def test_malformed_pattern_rejected():
    p = PatternBuilder("bad", "X")
    p.body().type("Y", "Place")
    with pytest.raises(MalformedPattern):
        compile_patterns(library(p.build()), ["bad"])


def test_attach_empty_store():
    m = compile_patterns(LIB, WATCHED).attach(GraphStore())
    assert all(len(m.current_matches(n)) == 0 for n in WATCHED)


def test_attach_seeds_from_existing_content(fork_join):
    store, n = fork_join
    net = compile_patterns(LIB, ["andPrecond"])
    first, second = net.attach(store), net.attach(store)
    assert len(first.current_matches("andPrecond")) == 4
    assert first.current_matches("andPrecond") == second.current_matches("andPrecond")
    assert first.take_deltas() == []


def test_arc_removal_and_readdition_deltas(fork_join):
    store, n = fork_join
    m = make_matcher("incremental", LIB, ["andPrecond"], store)
    before = set(m.matches("andPrecond"))
    store.remove_edge(PRE_ARC, n["p1"], n["tj"])
    (d,) = m.take_deltas()
    assert set(d.disappeared) == before and d.appeared == ()
    store.add_edge(PRE_ARC, n["p1"], n["tj"])
    (d,) = m.take_deltas()
    assert set(d.appeared) == before and d.disappeared == ()


def test_no_changes_no_deltas(fork_join):
    store, n = fork_join
    m = make_matcher("incremental", LIB, ["andPrecond"], store)
    assert m.take_deltas() == []
    store.set_attr(n["p1"], NAME, "renamed")
    assert m.take_deltas() == []


def test_add_then_delete_cancels(chain):
    store, n = chain
    m = make_matcher("incremental", LIB, ["orPrecond"], store)
    t = store.create_node("Transition")
    store.add_edge(PRE_ARC, n["p1"], t)
    p = store.create_node("Place")
    store.add_edge("postArc", t, p)
    assert m.matches("orPrecond") == {(n["p0"], n["t"], n["p1"]), (n["p1"], t, p)}
    store.delete_node(t)
    assert m.take_deltas() == []


def test_deltas_follow_an_and_firing(fork_join):
    from pn2sc.transform import and_action, initialize

    store, n = fork_join
    m = make_matcher("incremental", LIB, ["andPrecond", "orPrecond"], store)
    trace = initialize(store)
    old = {k: set(m.matches(k)) for k in ("andPrecond", "orPrecond")}
    and_action((n["p1"], n["tf"]), store, trace)
    new = reference(store, ["andPrecond", "orPrecond"])
    for d in m.take_deltas():
        assert (old[d.pattern] | set(d.appeared)) - set(d.disappeared) == new[d.pattern]
    assert new["orPrecond"] == {(n["p0"], n["tf"], n["p1"]), (n["p1"], n["tj"], n["p3"])}


@pytest.mark.parametrize("kind", ["incremental", "reference"])
def test_unknown_pattern_query(kind):
    from pn2sc.patterns import UnknownPattern

    m = make_matcher(kind, LIB, ["orPrecond"], GraphStore())
    with pytest.raises(UnknownPattern):
        m.matches("andPrecond")


def check_count_nodes(m):
    for callee, key_atom, atom_eq, counts in m.count_nodes():
        expected = {}
        key = itemgetter(*key_atom) if key_atom else (lambda t: ())
        for t in m.matches(callee):
            if all(t[i] == t[j] for i, j in atom_eq):
                expected[key(t)] = expected.get(key(t), 0) + 1
        assert {k: v for k, v in counts.items() if v} == expected


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence_and_delta_soundness(seed):
    rng = random.Random(seed)
    store = random_store(rng)
    m = make_matcher("incremental", LIB, WATCHED, store)
    names = m.patterns
    prev = reference(store, names)
    assert {k: set(m.matches(k)) for k in names} == prev
    for _ in range(40):
        mutate(store, rng)
        now = reference(store, names)
        assert {k: set(m.matches(k)) for k in names} == now
        for d in m.take_deltas():
            app, gone = set(d.appeared), set(d.disappeared)
            assert not app & gone
            assert not app & prev[d.pattern] and gone <= prev[d.pattern]
            assert (prev[d.pattern] | app) - gone == now[d.pattern]
        prev = now
        check_count_nodes(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_deltas_cover_every_change(seed):
    rng = random.Random(seed)
    store = random_store(rng)
    m = make_matcher("incremental", LIB, WATCHED, store)
    prev = {k: set(m.matches(k)) for k in WATCHED}
    for _ in range(10):
        for _ in range(rng.randint(1, 4)):
            mutate(store, rng)
        changed = {d.pattern for d in m.take_deltas()}
        now = {k: set(m.matches(k)) for k in WATCHED}
        # helper patterns never report deltas
        assert changed == {k for k in now if now[k] != prev[k]}
        prev = now


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reference_matcher_deltas_agree(seed):
    rng = random.Random(seed)
    store = random_store(rng)
    inc = make_matcher("incremental", LIB, WATCHED, store)
    ref = ReferenceMatcher(LIB, WATCHED, store)
    for _ in range(15):
        mutate(store, rng)
        assert sorted(inc.take_deltas(), key=lambda d: d.pattern) == sorted(ref.take_deltas(), key=lambda d: d.pattern)


def shuffled_library(rng):
    out = {}
    for name, p in LIB.items():
        bodies = []
        for body in p.bodies:
            cs = list(body.constraints)
            rng.shuffle(cs)
            bodies.append(Body(tuple(cs)))
        out[name] = Pattern(p.name, p.params, tuple(bodies))
    return out


@pytest.mark.parametrize("seed", range(15))
def test_constraint_order_insensitive_network(seed):
    rng = random.Random(seed)
    store = random_store(rng)
    a = compile_patterns(LIB, WATCHED).attach(store)
    b = compile_patterns(shuffled_library(rng), WATCHED).attach(store)
    for _ in range(30):
        mutate(store, rng)
        for k in WATCHED:
            assert a.matches(k) == b.matches(k)


def test_detach_stops_updates(chain):
    store, n = chain
    m = make_matcher("incremental", LIB, ["orPrecond"], store)
    m.detach()
    store.delete_node(n["t"])
    assert len(m.current_matches("orPrecond")) == 1


def test_mixed_count_check():
    # two count results in one check: carried through the chain
    b = PatternBuilder("balanced", "T")
    (
        b.body().type("T", "Transition")
        .count("prePlaceOf", ["_", "T"], "i")
        .count("postPlaceOf", ["T", "_"], "o")
        .check("i - o == 0")
    )
    lib = {**pn2sc_library(), "balanced": b.build()}
    store, n = build_net(["a", "b", "c"], ["t", "u"], [("a", "t"), ("t", "b"), ("b", "u"), ("u", "a"), ("u", "c")])
    m = make_matcher("incremental", lib, ["balanced"], store)
    assert m.matches("balanced") == {(n["t"],)}
    store.remove_edge("postArc", n["u"], n["c"])
    assert m.matches("balanced") == {(n["t"],), (n["u"],)}
    store.add_edge("preArc", n["c"], n["t"])
    assert m.matches("balanced") == {(n["u"],)}
    check_count_nodes(m)
