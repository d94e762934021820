"""Line-oriented text formats for nets, statecharts and traces.

Net (``.net``)::

    # comments and blank lines are ignored
    place p0 Start
    transition t1 Fork
    arc p0 t1          # place -> transition is a pre-arc
    arc t1 p1          # transition -> place is a post-arc

Statechart (``.sc``): one ``state <label> <kind> <name>`` line per state,
indented two spaces per containment level, then ``hyperedge <label> <name>
<sources...> -> <targets...>`` lines, ``top <labels...>`` and an optional
``root <label>``.

Trace (``.map``): ``place <place> <or-state> <basic-state>`` and
``transition <transition> <hyperedge>``; places and transitions use net
labels, states and hyperedges use statechart labels.

Names and labels are single whitespace-free tokens.  Writers sort
everything, so equal models serialize to identical bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .graph import GraphStore, NodeId
from .models import (
    AND,
    BASIC,
    CONTAINS,
    H_SOURCE,
    H_TARGET,
    HYPEREDGE,
    LABEL,
    NAME,
    OR,
    PLACE,
    POST_ARC,
    PRE_ARC,
    TRANSITION,
    StatechartView,
    Trace,
    name_of,
)

NET_FILE = "reduced.net"
STATECHART_FILE = "statechart.sc"
TRACE_FILE = "trace.map"


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DanglingArc(ParseError):
    pass


class DuplicateLabel(ParseError):
    pass


class ArcTypeError(ParseError):
    pass


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            yield number, raw, stripped.split()


# -- nets ------------------------------------------------------------------------


@dataclass
class NetDocument:
    places: list[tuple[str, str]] = field(default_factory=list)
    transitions: list[tuple[str, str]] = field(default_factory=list)
    arcs: list[tuple[str, str]] = field(default_factory=list)

    def size(self) -> int:
        return len(self.places) + len(self.transitions) + len(self.arcs)


def parse_net_text(text: str) -> NetDocument:
    doc = NetDocument()
    kinds: dict[str, str] = {}
    arcs_seen: set[tuple[str, str]] = set()
    pending_arcs: list[tuple[int, str, str]] = []
    for number, _raw, words in _lines(text):
        head = words[0]
        if head in ("place", "transition"):
            if len(words) not in (2, 3):
                raise ParseError(f"expected '{head} <label> [<name>]'", number)
            label = words[1]
            name = words[2] if len(words) == 3 else label
            if label in kinds:
                raise DuplicateLabel(f"label {label!r} defined twice", number)
            kinds[label] = head
            (doc.places if head == "place" else doc.transitions).append((label, name))
        elif head == "arc":
            if len(words) != 3:
                raise ParseError("expected 'arc <from> <to>'", number)
            pending_arcs.append((number, words[1], words[2]))
        else:
            raise ParseError(f"unknown record {head!r}", number)
    for number, src, dst in pending_arcs:
        for end in (src, dst):
            if end not in kinds:
                raise DanglingArc(f"arc endpoint {end!r} is not defined", number)
        if kinds[src] == kinds[dst]:
            raise ArcTypeError(f"arc {src} -> {dst} joins two {kinds[src]}s", number)
        if (src, dst) not in arcs_seen:
            arcs_seen.add((src, dst))
            doc.arcs.append((src, dst))
    return doc


def load_net(doc: NetDocument, store: GraphStore) -> dict[str, NodeId]:
    """Create the document's nodes and arcs; returns label -> node id."""
    labels: dict[str, NodeId] = {}
    for type, items in ((PLACE, doc.places), (TRANSITION, doc.transitions)):
        for label, name in items:
            nid = store.create_node(type)
            store.set_attr(nid, LABEL, label)
            store.set_attr(nid, NAME, name)
            labels[label] = nid
    for src, dst in doc.arcs:
        s, d = labels[src], labels[dst]
        kind = PRE_ARC if store.type_of(s) == PLACE else POST_ARC
        store.add_edge(kind, s, d)
    return labels


def parse_net(text: str, store: Optional[GraphStore] = None) -> tuple[GraphStore, dict[str, NodeId]]:
    store = store if store is not None else GraphStore()
    return store, load_net(parse_net_text(text), store)


def _label(store: GraphStore, nid: NodeId) -> str:
    return store.attr(nid, LABEL) or f"n{nid}"


def net_document(store: GraphStore) -> NetDocument:
    lab = lambda n: _label(store, n)  # noqa: E731
    places = sorted((lab(p), name_of(store, p)) for p in store.nodes(PLACE))
    transitions = sorted((lab(t), name_of(store, t)) for t in store.nodes(TRANSITION))
    arcs = sorted(
        [(lab(s), lab(d)) for _, s, d in store.edges(PRE_ARC)]
        + [(lab(s), lab(d)) for _, s, d in store.edges(POST_ARC)]
    )
    return NetDocument(places, transitions, arcs)


def format_net(doc: NetDocument) -> str:
    lines = [f"place {label} {name}" for label, name in doc.places]
    lines += [f"transition {label} {name}" for label, name in doc.transitions]
    lines += [f"arc {src} {dst}" for src, dst in doc.arcs]
    return "".join(line + "\n" for line in lines)


# -- statecharts -----------------------------------------------------------------


@dataclass
class StateDoc:
    label: str
    kind: str
    name: str
    children: list["StateDoc"] = field(default_factory=list)

    def structure(self) -> tuple:
        return (self.kind, self.name, tuple(sorted(c.structure() for c in self.children)))


@dataclass
class HyperedgeDoc:
    label: str
    name: str
    sources: list[str]
    targets: list[str]


@dataclass
class StatechartDocument:
    states: list[StateDoc] = field(default_factory=list)
    hyperedges: list[HyperedgeDoc] = field(default_factory=list)
    root: Optional[str] = None
    top_elements: list[str] = field(default_factory=list)

    def find(self, label: str) -> StateDoc:
        stack = list(self.states)
        while stack:
            s = stack.pop()
            if s.label == label:
                return s
            stack.extend(s.children)
        raise KeyError(label)

    def structure(self) -> tuple:
        """Id- and label-free form, comparable with ``StatechartView.canonical``."""
        names: dict[str, str] = {}
        stack = list(self.states)
        while stack:
            s = stack.pop()
            names[s.label] = s.name
            stack.extend(s.children)
        states = tuple(sorted(s.structure() for s in self.states))
        hedges = tuple(
            sorted(
                (
                    h.name,
                    tuple(sorted((names[b],) for b in h.sources)),
                    tuple(sorted((names[b],) for b in h.targets)),
                )
                for h in self.hyperedges
            )
        )
        root = self.find(self.root).structure() if self.root is not None else None
        return states, hedges, root


def state_labels(store: GraphStore) -> tuple[dict[NodeId, str], dict[NodeId, str]]:
    """Deterministic labels: states in preorder (top level by id, children
    in attach order), then hyperedges by id."""
    view = StatechartView(store)
    states: dict[NodeId, str] = {}
    stack = list(reversed(view.top_level()))
    while stack:
        s = stack.pop()
        states[s] = f"s{len(states)}"
        stack.extend(reversed(view.children(s)))
    hedges = {h: f"h{i}" for i, h in enumerate(view.hyperedges())}
    return states, hedges


def statechart_document(store: GraphStore, root: Optional[NodeId] = None) -> StatechartDocument:
    view = StatechartView(store, root)
    states, hedges = state_labels(store)

    def build(s: NodeId) -> StateDoc:
        return StateDoc(states[s], store.type_of(s), name_of(store, s), [build(c) for c in view.children(s)])

    top = view.top_level()
    return StatechartDocument(
        [build(s) for s in top],
        [
            HyperedgeDoc(hedges[h], name_of(store, h), [states[b] for b in view.sources(h)], [states[b] for b in view.targets(h)])
            for h in view.hyperedges()
        ],
        states[root] if root is not None else None,
        [states[s] for s in top],
    )


def format_statechart(doc: StatechartDocument) -> str:
    lines: list[str] = []

    def emit(s: StateDoc, depth: int) -> None:
        lines.append(f"{'  ' * depth}state {s.label} {s.kind} {s.name}")
        for c in s.children:
            emit(c, depth + 1)

    for s in doc.states:
        emit(s, 0)
    for h in doc.hyperedges:
        lines.append(" ".join(["hyperedge", h.label, h.name, *h.sources, "->", *h.targets]))
    lines.append(" ".join(["top", *doc.top_elements]))
    if doc.root is not None:
        lines.append(f"root {doc.root}")
    return "".join(line + "\n" for line in lines)


def parse_statechart_text(text: str) -> StatechartDocument:
    doc = StatechartDocument()
    stack: list[tuple[int, StateDoc]] = []
    labels: set[str] = set()
    for number, raw, words in _lines(text):
        head = words[0]
        if head == "state":
            if len(words) != 4 or words[2] not in (BASIC, OR, AND):
                raise ParseError("expected 'state <label> Basic|OR|AND <name>'", number)
            indent = len(raw) - len(raw.lstrip(" "))
            if indent % 2:
                raise ParseError("indentation must be a multiple of two spaces", number)
            depth = indent // 2
            if words[1] in labels:
                raise DuplicateLabel(f"state {words[1]!r} defined twice", number)
            labels.add(words[1])
            state = StateDoc(words[1], words[2], words[3])
            while stack and stack[-1][0] >= depth:
                stack.pop()
            if depth == 0:
                doc.states.append(state)
            elif stack and stack[-1][0] == depth - 1:
                stack[-1][1].children.append(state)
            else:
                raise ParseError("state indented without a parent", number)
            stack.append((depth, state))
        elif head == "hyperedge":
            if len(words) < 4 or "->" not in words[3:]:
                raise ParseError("expected 'hyperedge <label> <name> <sources> -> <targets>'", number)
            split = words.index("->", 3)
            doc.hyperedges.append(HyperedgeDoc(words[1], words[2], words[3:split], words[split + 1 :]))
        elif head == "top":
            doc.top_elements = words[1:]
        elif head == "root":
            if len(words) != 2:
                raise ParseError("expected 'root <label>'", number)
            doc.root = words[1]
        else:
            raise ParseError(f"unknown record {head!r}", number)
    for h in doc.hyperedges:
        for b in h.sources + h.targets:
            if b not in labels:
                raise DanglingArc(f"hyperedge {h.label} references unknown state {b!r}")
    for label in doc.top_elements + ([doc.root] if doc.root else []):
        if label not in labels:
            raise DanglingArc(f"unknown state {label!r}")
    return doc


def load_statechart(doc: StatechartDocument, store: GraphStore) -> tuple[dict[str, NodeId], Optional[NodeId]]:
    ids: dict[str, NodeId] = {}

    def build(s: StateDoc, parent: Optional[NodeId]) -> None:
        nid = store.create_node(s.kind)
        store.set_attr(nid, NAME, s.name)
        ids[s.label] = nid
        if parent is not None:
            store.add_edge(CONTAINS, parent, nid)
        for c in s.children:
            build(c, nid)

    for s in doc.states:
        build(s, None)
    for h in doc.hyperedges:
        nid = store.create_node(HYPEREDGE)
        store.set_attr(nid, NAME, h.name)
        ids[h.label] = nid
        for b in h.sources:
            store.add_edge(H_SOURCE, nid, ids[b])
        for b in h.targets:
            store.add_edge(H_TARGET, nid, ids[b])
    return ids, (ids[doc.root] if doc.root is not None else None)


# -- traces ----------------------------------------------------------------------


def format_trace(store: GraphStore) -> str:
    trace = Trace(store)
    states, hedges = state_labels(store)
    lines = []
    for label, p in sorted((_label(store, p), p) for p in store.nodes(PLACE)):
        o, b = trace.equiv(p), trace.basic_of(p)
        if o is not None and b is not None:
            lines.append(f"place {label} {states[o]} {states[b]}")
    for label, t in sorted((_label(store, t), t) for t in store.nodes(TRANSITION)):
        h = trace.hedge_of(t)
        if h is not None:
            lines.append(f"transition {label} {hedges[h]}")
    return "".join(line + "\n" for line in lines)


def parse_trace_text(text: str) -> list[tuple[str, ...]]:
    entries = []
    for number, _raw, words in _lines(text):
        if words[0] == "place" and len(words) == 4:
            entries.append(tuple(words))
        elif words[0] == "transition" and len(words) == 3:
            entries.append(tuple(words))
        else:
            raise ParseError("expected 'place <p> <or> <basic>' or 'transition <t> <hyperedge>'", number)
    return entries


def load_trace(entries, store: GraphStore, net_ids: dict[str, NodeId], sc_ids: dict[str, NodeId]) -> Trace:
    trace = Trace(store)
    for entry in entries:
        try:
            if entry[0] == "place":
                trace.add_place(net_ids[entry[1]], sc_ids[entry[2]], sc_ids[entry[3]])
            else:
                trace.add_transition(net_ids[entry[1]], sc_ids[entry[2]])
        except KeyError as exc:
            raise DanglingArc(f"trace entry {' '.join(entry)} references unknown label {exc}") from None
    return trace


# -- directories -----------------------------------------------------------------


def write_models(store: GraphStore, root: Optional[NodeId], directory: Union[str, os.PathLike], stem: Optional[str] = None) -> list[Path]:
    """Write net, statechart and trace; ``stem`` replaces the default names."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if stem is None:
        names = (NET_FILE, STATECHART_FILE, TRACE_FILE)
    else:
        names = (f"{stem}.net", f"{stem}.sc", f"{stem}.map")
    contents = (
        format_net(net_document(store)),
        format_statechart(statechart_document(store, root)),
        format_trace(store),
    )
    paths = []
    for name, text in zip(names, contents):
        path = directory / name
        path.write_text(text)
        paths.append(path)
    return paths


def serialize_outputs(result, directory: Union[str, os.PathLike]) -> list[Path]:
    """Write ``reduced.net``, ``statechart.sc`` and ``trace.map``."""
    return write_models(result.store, result.root, directory)


@dataclass
class LoadedModels:
    store: GraphStore
    labels: dict[str, NodeId]
    states: dict[str, NodeId]
    trace: Trace
    root: Optional[NodeId]


def load_models(directory: Union[str, os.PathLike], stem: Optional[str] = None) -> LoadedModels:
    directory = Path(directory)
    if stem is None:
        names = (NET_FILE, STATECHART_FILE, TRACE_FILE)
    else:
        names = (f"{stem}.net", f"{stem}.sc", f"{stem}.map")
    texts = [(directory / n).read_text() for n in names]
    store = GraphStore()
    store, labels = parse_net(texts[0], store)
    states, root = load_statechart(parse_statechart_text(texts[1]), store)
    trace = load_trace(parse_trace_text(texts[2]), store, labels, states)
    return LoadedModels(store, labels, states, trace, root)
