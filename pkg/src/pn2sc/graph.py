"""Mutable typed graph with a synchronous change-event stream.

Nodes carry a type tag and string attributes; edges are unique per
``(kind, src, dst)``.  Every mutation is reported to subscribers before the
mutating call returns, which is what incremental matchers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

NodeId = int


class UnknownNode(KeyError):
    """Raised when an operation references a node that is not live."""


@dataclass(frozen=True, slots=True)
class NodeAdded:
    type: str
    id: NodeId


@dataclass(frozen=True, slots=True)
class NodeRemoved:
    type: str
    id: NodeId


@dataclass(frozen=True, slots=True)
class EdgeAdded:
    kind: str
    src: NodeId
    dst: NodeId


@dataclass(frozen=True, slots=True)
class EdgeRemoved:
    kind: str
    src: NodeId
    dst: NodeId


@dataclass(frozen=True, slots=True)
class AttrSet:
    id: NodeId
    key: str
    old: Optional[str]
    new: Optional[str]


ChangeEvent = Union[NodeAdded, NodeRemoved, EdgeAdded, EdgeRemoved, AttrSet]
Listener = Callable[[ChangeEvent], None]


class Subscription:
    """Handle returned by :meth:`GraphStore.subscribe`."""

    def __init__(self, store: "GraphStore", listener: Listener):
        self._store = store
        self.listener = listener

    def cancel(self) -> None:
        try:
            self._store._listeners.remove(self.listener)
        except ValueError:
            pass


class GraphStore:
    """In-memory typed graph model.

    >>> g = GraphStore()
    >>> p, t = g.create_node("Place"), g.create_node("Transition")
    >>> g.add_edge("preArc", p, t)
    True
    >>> g.add_edge("preArc", p, t)
    False
    >>> sorted(g.out("preArc", p))
    [1]
    """

    def __init__(self) -> None:
        self._next_id: NodeId = 0
        self._types: dict[NodeId, str] = {}
        self._by_type: dict[str, set[NodeId]] = {}
        self._out: dict[str, dict[NodeId, set[NodeId]]] = {}
        self._in: dict[str, dict[NodeId, set[NodeId]]] = {}
        self._attrs: dict[NodeId, dict[str, str]] = {}
        self._edge_count = 0
        self._edge_seq: dict[tuple[str, NodeId, NodeId], int] = {}
        self._next_seq = 0
        self._listeners: list[Listener] = []

    # -- observation -------------------------------------------------------

    def subscribe(self, listener: Listener) -> Subscription:
        self._listeners.append(listener)
        return Subscription(self, listener)

    def _emit(self, event: ChangeEvent) -> None:
        for listener in tuple(self._listeners):
            listener(event)

    # -- mutation ----------------------------------------------------------

    def create_node(self, type: str) -> NodeId:
        nid = self._next_id
        self._insert_node(type, nid)
        return nid

    def _insert_node(self, type: str, nid: NodeId) -> None:
        self._next_id = max(self._next_id, nid + 1)
        self._types[nid] = type
        self._by_type.setdefault(type, set()).add(nid)
        self._emit(NodeAdded(type, nid))

    def delete_node(self, nid: NodeId) -> None:
        type = self._require(nid)
        for kind, src, dst in self.incident_edges(nid):
            self.remove_edge(kind, src, dst)
        del self._types[nid]
        self._by_type[type].discard(nid)
        self._attrs.pop(nid, None)
        self._emit(NodeRemoved(type, nid))

    def add_edge(self, kind: str, src: NodeId, dst: NodeId) -> bool:
        self._require(src)
        self._require(dst)
        targets = self._out.setdefault(kind, {}).setdefault(src, set())
        if dst in targets:
            return False
        targets.add(dst)
        self._in.setdefault(kind, {}).setdefault(dst, set()).add(src)
        self._edge_count += 1
        self._edge_seq[(kind, src, dst)] = self._next_seq
        self._next_seq += 1
        self._emit(EdgeAdded(kind, src, dst))
        return True

    def remove_edge(self, kind: str, src: NodeId, dst: NodeId) -> bool:
        targets = self._out.get(kind, {}).get(src)
        if not targets or dst not in targets:
            return False
        targets.discard(dst)
        if not targets:
            del self._out[kind][src]
        sources = self._in[kind][dst]
        sources.discard(src)
        if not sources:
            del self._in[kind][dst]
        self._edge_count -= 1
        del self._edge_seq[(kind, src, dst)]
        self._emit(EdgeRemoved(kind, src, dst))
        return True

    def set_attr(self, nid: NodeId, key: str, value: str) -> None:
        self._require(nid)
        attrs = self._attrs.setdefault(nid, {})
        old = attrs.get(key)
        if old == value:
            return
        attrs[key] = value
        self._emit(AttrSet(nid, key, old, value))

    # -- queries -----------------------------------------------------------

    def _require(self, nid: NodeId) -> str:
        try:
            return self._types[nid]
        except KeyError:
            raise UnknownNode(nid) from None

    def is_live(self, nid: NodeId) -> bool:
        return nid in self._types

    def type_of(self, nid: NodeId) -> str:
        return self._require(nid)

    def nodes(self, type: Optional[str] = None) -> list[NodeId]:
        """Live node ids (optionally of one type), ascending."""
        if type is None:
            return sorted(self._types)
        return sorted(self._by_type.get(type, ()))

    def node_set(self, type: str) -> set[NodeId]:
        """Live ids of ``type``; the returned set must not be mutated."""
        return self._by_type.get(type, _EMPTY)

    def out(self, kind: str, src: NodeId) -> set[NodeId]:
        return self._out.get(kind, {}).get(src, _EMPTY)

    def inn(self, kind: str, dst: NodeId) -> set[NodeId]:
        return self._in.get(kind, {}).get(dst, _EMPTY)

    def has_edge(self, kind: str, src: NodeId, dst: NodeId) -> bool:
        return dst in self.out(kind, src)

    def edges(self, kind: Optional[str] = None) -> Iterator[tuple[str, NodeId, NodeId]]:
        kinds = [kind] if kind is not None else sorted(self._out)
        for k in kinds:
            for src, targets in self._out.get(k, {}).items():
                for dst in targets:
                    yield k, src, dst

    def edge_order(self, kind: str, src: NodeId, dst: NodeId) -> int:
        """Insertion rank of a live edge; later additions rank higher."""
        return self._edge_seq[(kind, src, dst)]

    def edge_kinds(self) -> list[str]:
        return sorted(k for k, m in self._out.items() if m)

    def incident_edges(self, nid: NodeId) -> list[tuple[str, NodeId, NodeId]]:
        """Edges touching ``nid`` sorted by kind, then endpoint ids."""
        found = set()
        for kind, adj in self._out.items():
            for dst in adj.get(nid, ()):
                found.add((kind, nid, dst))
        for kind, adj in self._in.items():
            for src in adj.get(nid, ()):
                found.add((kind, src, nid))
        return sorted(found)

    def attr(self, nid: NodeId, key: str) -> Optional[str]:
        return self._attrs.get(nid, {}).get(key)

    def attrs(self, nid: NodeId) -> dict[str, str]:
        return dict(self._attrs.get(nid, {}))

    def node_count(self) -> int:
        return len(self._types)

    def edge_count(self) -> int:
        return self._edge_count

    def __len__(self) -> int:
        return len(self._types)

    # -- replay ------------------------------------------------------------

    def apply(self, event: ChangeEvent) -> None:
        """Apply a recorded event, reusing the node id it carries."""
        if isinstance(event, NodeAdded):
            if event.id in self._types:
                raise ValueError(f"node {event.id} already live")
            self._insert_node(event.type, event.id)
        elif isinstance(event, NodeRemoved):
            self.delete_node(event.id)
        elif isinstance(event, EdgeAdded):
            self.add_edge(event.kind, event.src, event.dst)
        elif isinstance(event, EdgeRemoved):
            self.remove_edge(event.kind, event.src, event.dst)
        elif isinstance(event, AttrSet):
            if event.new is None:
                raise ValueError("attributes cannot be unset")
            self.set_attr(event.id, event.key, event.new)
        else:
            raise TypeError(f"not a change event: {event!r}")

    def as_events(self) -> Iterator[ChangeEvent]:
        """Insertion events that rebuild the current content from empty."""
        for nid in sorted(self._types):
            yield NodeAdded(self._types[nid], nid)
        for kind, src, dst in sorted(self.edges()):
            yield EdgeAdded(kind, src, dst)
        for nid in sorted(self._attrs):
            for key, value in sorted(self._attrs[nid].items()):
                yield AttrSet(nid, key, None, value)

    @classmethod
    def replay(cls, events: Iterable[ChangeEvent]) -> "GraphStore":
        store = cls()
        for event in events:
            store.apply(event)
        return store

    def snapshot(self) -> tuple:
        """Comparable value of the whole content (nodes, edges, attributes)."""
        return (
            frozenset(self._types.items()),
            frozenset(self.edges()),
            frozenset(
                (nid, key, value)
                for nid, attrs in self._attrs.items()
                for key, value in attrs.items()
            ),
        )

    def check_integrity(self) -> list[str]:
        """Full-scan referential integrity check; empty when consistent."""
        problems = []
        for kind, src, dst in self.edges():
            for end in (src, dst):
                if end not in self._types:
                    problems.append(f"{kind}({src}, {dst}) references dead node {end}")
        for nid in self._attrs:
            if nid not in self._types:
                problems.append(f"attributes kept for dead node {nid}")
        return problems


_EMPTY: frozenset = frozenset()
