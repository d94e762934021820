"""Watch a compiled pattern network follow edits to a small net."""

from pn2sc import GraphStore, compile_patterns, eval_reference, pn2sc_library

lib = pn2sc_library()
print(lib["andPrecond"].dump())

store = GraphStore()
ids = {}
for label in ("p0", "p1", "p2", "p3"):
    ids[label] = store.create_node("Place")
for label in ("tf", "tj"):
    ids[label] = store.create_node("Transition")
for src, dst in (("p0", "tf"), ("p1", "tj"), ("p2", "tj")):
    store.add_edge("preArc", ids[src], ids[dst])
for src, dst in (("tf", "p1"), ("tf", "p2"), ("tj", "p3")):
    store.add_edge("postArc", ids[src], ids[dst])

network = compile_patterns(lib, ["andPrecond", "orPrecond"])
print("node kinds:", sorted(set(network.node_kinds("andPrecond"))))
matcher = network.attach(store)
names = {v: k for k, v in ids.items()}


def show(pattern):
    return sorted(tuple(names[i] for i in t) for t in matcher.matches(pattern))


print("andPrecond:", show("andPrecond"))

# %% drop one arc: p1 and p2 stop being interchangeable
store.remove_edge("preArc", ids["p1"], ids["tj"])
for delta in matcher.take_deltas():
    print(delta.pattern, "gone:", [tuple(names[i] for i in t) for t in delta.disappeared],
          "new:", [tuple(names[i] for i in t) for t in delta.appeared])

# the reference evaluator agrees
assert matcher.current_matches("andPrecond") == eval_reference(store, "andPrecond", lib)
assert matcher.current_matches("orPrecond") == eval_reference(store, "orPrecond", lib)

# %% put it back
store.add_edge("preArc", ids["p1"], ids["tj"])
print("andPrecond:", show("andPrecond"))
