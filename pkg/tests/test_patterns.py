import itertools
import random

import pytest

from conftest import CHAIN, FORK_JOIN, NON_REDUCIBLE, build_net
from oracles import and_precond, non_common_t_pre, or_precond
from pn2sc.models import PRE_ARC
from pn2sc.patterns import (
    Body,
    Check,
    CheckSyntaxError,
    MatchSet,
    Pattern,
    PatternBuilder,
    UnknownPattern,
    dependencies,
    eval_reference,
    library,
    parse_check,
    well_formed,
)
from pn2sc.transform import pn2sc_library

LIB = pn2sc_library()


def ids(names, table):
    return {tuple(table[n] for n in t) for t in names}


def test_and_precondition_library_is_well_formed():
    for name in LIB:
        assert well_formed(LIB[name], LIB) == []


def test_param_bound_only_under_negation_is_reported():
    b = PatternBuilder("p", "X")
    b.body().type("Y", "Place").neg("prePlaceOf", "X", "Y")
    v = well_formed(b.build(), LIB)
    assert [x.rule for x in v] == ["unbound-parameter"]


def test_self_call_is_a_cycle():
    b = PatternBuilder("loop", "X")
    b.body().type("X", "Place").neg("loop", "X")
    p = b.build()
    assert any(v.rule == "cycle" for v in well_formed(p, {"loop": p}))


def test_mutual_recursion_is_a_cycle():
    a = PatternBuilder("a", "X")
    a.body().type("X", "Place").find("b", "X")
    b = PatternBuilder("b", "X")
    b.body().type("X", "Place").find("a", "X")
    lib = library(a.build(), b.build())
    assert any(v.rule == "cycle" for v in well_formed(lib["a"], lib))


def test_unknown_callee():
    b = PatternBuilder("p", "X")
    b.body().type("X", "Place").neg("missing", "X")
    with pytest.raises(UnknownPattern):
        well_formed(b.build(), LIB)


def test_arity_and_count_misuse():
    b = PatternBuilder("p", "T")
    b.body().type("T", "Transition").count("prePlaceOf", ["_"], "n").check("n >= 1")
    assert [v.rule for v in well_formed(b.build(), LIB)] == ["arity"]
    b = PatternBuilder("p", "T")
    b.body().type("T", "Transition").count("prePlaceOf", ["_", "T"], "n").check("m >= 1")
    assert [v.rule for v in well_formed(b.build(), LIB)] == ["check-variable"]
    b = PatternBuilder("p", "T")
    b.body().type("T", "Transition").count("prePlaceOf", ["_", "T"], "n").type("n", "Place")
    assert "count-result" in [v.rule for v in well_formed(b.build(), LIB)]


def test_check_syntax_error_reported():
    b = PatternBuilder("p", "T")
    b.body().type("T", "Transition").count("prePlaceOf", ["_", "T"], "n").check("n >=")
    assert [v.rule for v in well_formed(b.build(), LIB)] == ["check-syntax"]


@pytest.mark.parametrize(
    "expr,env,expected",
    [("n >= 2", {"n": 2}, True), ("n >= 2", {"n": 1}, False), ("a + b == 3", {"a": 1, "b": 2}, True),
     ("2*a - b < 0", {"a": 1, "b": 3}, True), ("a != b", {"a": 4, "b": 4}, False), ("n > -1", {"n": 0}, True)],
)
def test_check_expressions(expr, env, expected):
    assert Check(expr).holds(env) is expected


@pytest.mark.parametrize("expr", ["2 * > 1", "a * b > 1", "n >", "n = 2", "n >= 2 >= 1", "import os", ""])
def test_check_rejects_non_linear_syntax(expr):
    with pytest.raises(CheckSyntaxError):
        parse_check(expr)


def test_dependencies_topological():
    order = dependencies("andPrecond", LIB)
    assert order[-1] == "andPrecond"
    for callee in ("prePlaceOf", "tranWithTwoPrePlaces", "nonCommonTPre"):
        assert order.index(callee) < order.index("andPrecond")
    assert order.index("prePlaceOf") < order.index("tranWithTwoPrePlaces") < order.index("nonCommonTPre")


def test_dump_is_stable():
    assert LIB["andPrecond"].dump() == pn2sc_library()["andPrecond"].dump()
    text = LIB["orPrecond"].dump()
    assert text.splitlines()[0].startswith("pattern orPrecond")


def test_and_precond_on_fork_join(fork_join):
    store, n = fork_join
    got = eval_reference(store, "andPrecond", LIB)
    assert isinstance(got, MatchSet)
    assert got.tuples == ids([("p1", "tf"), ("p2", "tf"), ("p1", "tj"), ("p2", "tj")], n)
    assert got.tuples == and_precond(store)


def test_and_precond_on_chain_is_empty(chain):
    store, _ = chain
    assert len(eval_reference(store, "andPrecond", LIB)) == 0


def test_removing_one_arc_breaks_homogeneity(fork_join):
    store, n = fork_join
    store.remove_edge(PRE_ARC, n["p1"], n["tj"])
    # p1 now has no post-transition while p2 still feeds tj
    assert (n["tf"],) in eval_reference(store, "nonCommonTPost", LIB)
    assert eval_reference(store, "nonCommonTPre", LIB).tuples == non_common_t_pre(store)
    assert eval_reference(store, "andPrecond", LIB).tuples == set()


def test_and_precond_differing_presets():
    store, n = build_net(*NON_REDUCIBLE)
    assert eval_reference(store, "nonCommonTPre", LIB).tuples == {(n["t3"],)}
    assert eval_reference(store, "andPrecond", LIB).tuples == set()
    assert eval_reference(store, "orPrecond", LIB).tuples == set()


def test_or_precond_cases():
    store, n = build_net(*CHAIN)
    assert eval_reference(store, "orPrecond", LIB).tuples == {(n["p0"], n["t"], n["p1"])}
    store, n = build_net(*FORK_JOIN)
    assert eval_reference(store, "orPrecond", LIB).tuples == set()
    store, n = build_net(["p0", "p1"], ["t", "u"], [("p0", "t"), ("t", "p1"), ("p0", "u"), ("u", "p1")])
    assert eval_reference(store, "orPrecond", LIB).tuples == set()
    store, n = build_net(["p0", "p1"], ["t", "u"], [("p0", "t"), ("t", "p1"), ("p1", "u"), ("u", "p0")])
    assert eval_reference(store, "orPrecond", LIB).tuples == set()


def random_net(rng, max_nodes=10):
    places = [f"p{i}" for i in range(rng.randint(1, max_nodes - 1))]
    transitions = [f"t{i}" for i in range(rng.randint(0, max_nodes - len(places)))]
    arcs = [(p, t) for p in places for t in transitions if rng.random() < 0.35]
    arcs += [(t, p) for t in transitions for p in places if rng.random() < 0.35]
    return build_net(places, transitions, arcs)


@pytest.mark.parametrize("seed", range(60))
def test_reference_evaluator_against_set_oracle(seed):
    store, _ = random_net(random.Random(seed))
    assert eval_reference(store, "andPrecond", LIB).tuples == and_precond(store)
    assert eval_reference(store, "orPrecond", LIB).tuples == or_precond(store)
    assert eval_reference(store, "nonCommonTPre", LIB).tuples == non_common_t_pre(store)


def permuted(pattern, rng):
    bodies = []
    for body in pattern.bodies:
        cs = list(body.constraints)
        rng.shuffle(cs)
        bodies.append(Body(tuple(cs)))
    return Pattern(pattern.name, pattern.params, tuple(bodies))


@pytest.mark.parametrize("seed", range(20))
def test_constraint_order_does_not_change_matches(seed):
    rng = random.Random(seed)
    store, _ = random_net(rng)
    for name in ("andPrecond", "orPrecond", "nonCommonTPre", "parallelLink"):
        lib = {k: permuted(p, rng) for k, p in LIB.items()}
        assert eval_reference(store, name, lib) == eval_reference(store, name, LIB)


def test_wildcards_are_independent():
    # prePlaceOf(_, _) in a body: the two wildcards never unify
    b = PatternBuilder("busy", "T")
    b.body().type("T", "Transition").find("prePlaceOf", "_", "T")
    store, n = build_net(["a", "b"], ["t", "u"], [("a", "t"), ("b", "t")])
    lib = library(b.build(), LIB["prePlaceOf"])
    assert eval_reference(store, "busy", lib).tuples == {(n["t"],)}


def test_attr_neq_and_distinct():
    b = PatternBuilder("renamed", "X", "Y")
    b.body().type("X", "Place").type("Y", "Place").distinct("X", "Y").attr_neq("X", "name", "Y", "name")
    store, n = build_net(["a", "b", "c"], [], [])
    store.set_attr(n["c"], "name", "a")
    lib = library(b.build())
    expected = {(x, y) for x, y in itertools.permutations(n.values(), 2)} - {(n["a"], n["c"]), (n["c"], n["a"])}
    assert eval_reference(store, "renamed", lib).tuples == expected
