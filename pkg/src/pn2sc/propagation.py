"""Rule-based propagation of net edits onto an already transformed model.

Three rules keep the statechart and trace in step with the net:

``cpAdd``
    an untraced place (transition) gets a Basic-in-OR (a hyperedge) and a
    trace, exactly as initialization would have created them;
``cpDangle``
    a trace whose source was deleted takes its target states (hyperedge)
    down with it;
``cpRename``
    a traced element whose name differs from its target's is copied over.

All three are detected structurally by patterns, never by event hooks.
Arc edits are applied to the net but not propagated.
"""

from __future__ import annotations

import os
import weakref
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .engine import FiringLog, Phase, Rule, run_phase
from .formats import ParseError, write_models
from .graph import GraphStore, NodeId
from .models import (
    BASIC,
    CONTAINS,
    H_SOURCE,
    H_TARGET,
    HYPEREDGE,
    LABEL,
    NAME,
    OR,
    PLACE,
    PLACE_TRACE,
    T_BASIC,
    T_EQUIV,
    T_HEDGE,
    T_SOURCE,
    TRANSITION,
    TRANSITION_TRACE,
    PetriNetView,
    Trace,
    name_of,
)
from .patterns import Pattern, PatternBuilder, library
from .rete import make_matcher


class SessionExists(RuntimeError):
    pass


class UnknownLabel(KeyError):
    pass


class LabelExists(ValueError):
    pass


# -- preconditions ---------------------------------------------------------------


def cp_library() -> dict[str, Pattern]:
    placed = PatternBuilder("placeTraced", "P")
    placed.body().edge(T_SOURCE, "Tr", "P").type("Tr", PLACE_TRACE)
    transed = PatternBuilder("transitionTraced", "T")
    transed.body().edge(T_SOURCE, "Tr", "T").type("Tr", TRANSITION_TRACE)
    has_source = PatternBuilder("traceHasSource", "Tr")
    has_source.body().edge(T_SOURCE, "Tr", "X")

    add = PatternBuilder("cpAdd", "X")
    add.body().type("X", PLACE).neg("placeTraced", "X")
    add.body().type("X", TRANSITION).neg("transitionTraced", "X")

    dangle = PatternBuilder("cpDangle", "Tr")
    dangle.body().type("Tr", PLACE_TRACE).neg("traceHasSource", "Tr")
    dangle.body().type("Tr", TRANSITION_TRACE).neg("traceHasSource", "Tr")

    rename = PatternBuilder("cpRename", "X")
    rename.body().type("X", PLACE).edge(T_SOURCE, "Tr", "X").edge(T_EQUIV, "Tr", "O").attr_neq("X", NAME, "O", NAME)
    rename.body().type("X", PLACE).edge(T_SOURCE, "Tr", "X").edge(T_BASIC, "Tr", "B").attr_neq("X", NAME, "B", NAME)
    rename.body().type("X", TRANSITION).edge(T_SOURCE, "Tr", "X").edge(T_HEDGE, "Tr", "H").attr_neq("X", NAME, "H", NAME)

    return library(*(b.build() for b in (placed, transed, has_source, add, dangle, rename)))


CP_RULES = ("cpAdd", "cpDangle", "cpRename")


# -- actions ---------------------------------------------------------------------


def _add_action(match: tuple, store: GraphStore, trace: Trace) -> None:
    (x,) = match
    name = name_of(store, x)
    if store.type_of(x) == PLACE:
        b = store.create_node(BASIC)
        o = store.create_node(OR)
        store.set_attr(b, NAME, name)
        store.set_attr(o, NAME, name)
        store.add_edge(CONTAINS, o, b)
        trace.add_place(x, o, b)
        return
    net = PetriNetView(store)
    h = store.create_node(HYPEREDGE)
    store.set_attr(h, NAME, name)
    for kind, places in ((H_SOURCE, net.pre(x)), (H_TARGET, net.post(x))):
        for p in sorted(places):
            b = trace.basic_of(p)
            if b is not None:
                store.add_edge(kind, h, b)
    trace.add_transition(x, h)


def _dangle_action(match: tuple, store: GraphStore, trace: Trace) -> None:
    # orphaned children of a deleted OR become top-level states
    (tr,) = match
    targets = set()
    for kind in (T_EQUIV, T_BASIC, T_HEDGE):
        targets.update(store.out(kind, tr))
    store.delete_node(tr)
    for n in sorted(targets, reverse=True):
        if store.is_live(n):
            store.delete_node(n)


def _rename_action(match: tuple, store: GraphStore, trace: Trace) -> None:
    (x,) = match
    name = name_of(store, x)
    if store.type_of(x) == PLACE:
        targets = [trace.equiv(x), trace.basic_of(x)]
    else:
        targets = [trace.hedge_of(x)]
    for n in targets:
        if n is not None:
            store.set_attr(n, NAME, name)


def propagation_phase() -> Phase:
    return Phase(
        "propagation",
        (
            Rule("cpDangle", "cpDangle", _dangle_action),
            Rule("cpAdd", "cpAdd", _add_action),
            Rule("cpRename", "cpRename", _rename_action),
        ),
    )


# -- commands --------------------------------------------------------------------


@dataclass(frozen=True)
class ChangeCommand:
    op: str  # add | remove | rename
    element: str  # place | transition
    label: str
    name: Optional[str] = None

    def __str__(self) -> str:
        parts = [f"{self.op}-{self.element}", self.label]
        if self.name is not None:
            parts.append(self.name)
        return " ".join(parts)


_ARITY = {"add": 2, "remove": 1, "rename": 2}


def parse_change_script(text: str) -> list[ChangeCommand]:
    commands = []
    for number, raw in enumerate(text.splitlines(), start=1):
        words = raw.split()
        if not words or words[0].startswith("#"):
            continue
        op, _, element = words[0].partition("-")
        if op not in _ARITY or element not in ("place", "transition"):
            raise ParseError(f"unknown command {words[0]!r}", number)
        if len(words) != _ARITY[op] + 1:
            raise ParseError(f"{words[0]} takes {_ARITY[op]} argument(s)", number)
        commands.append(ChangeCommand(op, element, words[1], words[2] if op != "remove" else None))
    return commands


# -- sessions --------------------------------------------------------------------

_open_sessions: "weakref.WeakKeyDictionary[GraphStore, PropagationSession]" = weakref.WeakKeyDictionary()


class PropagationSession:
    def __init__(self, store: GraphStore, root: Optional[NodeId] = None,
                 snapshot_dir: Union[str, os.PathLike, None] = None, matcher: str = "incremental"):
        self.store = store
        self.root = root
        self.trace = Trace(store)
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir is not None else None
        self.phase = propagation_phase()
        self.lib = cp_library()
        self.matcher = make_matcher(matcher, self.lib, CP_RULES, store)

    def labels(self) -> dict[str, NodeId]:
        return {
            self.store.attr(n, LABEL): n
            for t in (PLACE, TRANSITION)
            for n in self.store.nodes(t)
            if self.store.attr(n, LABEL) is not None
        }

    def resolve(self, label: str, element: str) -> NodeId:
        nid = self.labels().get(label)
        expected = PLACE if element == "place" else TRANSITION
        if nid is None or self.store.type_of(nid) != expected:
            raise UnknownLabel(f"no {element} labelled {label!r}")
        return nid

    def apply(self, command: ChangeCommand) -> None:
        """Edit the net only; propagation happens in :meth:`run`."""
        store = self.store
        if command.op == "add":
            if command.label in self.labels():
                raise LabelExists(command.label)
            nid = store.create_node(PLACE if command.element == "place" else TRANSITION)
            store.set_attr(nid, LABEL, command.label)
            store.set_attr(nid, NAME, command.name)
        elif command.op == "remove":
            store.delete_node(self.resolve(command.label, command.element))
        else:
            store.set_attr(self.resolve(command.label, command.element), NAME, command.name)

    def run(self, limit: Optional[int] = None, trace=None) -> FiringLog:
        log = run_phase(self.phase, self.store, self.matcher, self.trace, limit=limit, trace=trace)
        if self.root is not None and not self.store.is_live(self.root):
            self.root = None
        return log

    def close(self) -> None:
        self.matcher.detach()
        _open_sessions.pop(self.store, None)


def open_session(context, snapshot_dir: Union[str, os.PathLike, None] = None, matcher: str = "incremental") -> PropagationSession:
    """Start propagating on a finished transform (or reloaded outputs).

    ``context`` needs ``store`` and ``root`` attributes, as
    :class:`~pn2sc.transform.TransformResult` and
    :class:`~pn2sc.formats.LoadedModels` have.
    """
    store = context.store
    if store in _open_sessions:
        raise SessionExists("a propagation session is already open on this model")
    session = PropagationSession(store, context.root, snapshot_dir, matcher)
    _open_sessions[store] = session
    return session


def propagate(session: PropagationSession, commands: Iterable[ChangeCommand],
              limit: Optional[int] = None, trace=None) -> FiringLog:
    """Apply each command and run the propagation rules to fixpoint after it.

    With a snapshot directory, models are written after every command as
    ``<index>-<command>.{net,sc,map}``.
    """
    log = FiringLog()
    for i, command in enumerate(commands):
        session.apply(command)
        log.extend(session.run(limit=limit, trace=trace))
        if session.snapshot_dir is not None:
            snapshot(session, f"{i:03d}-{command.op}-{command.element}-{command.label}")
    return log


def snapshot(session: PropagationSession, tag: str) -> list[Path]:
    if session.snapshot_dir is None:
        raise ValueError("session has no snapshot directory")
    return write_models(session.store, session.root, session.snapshot_dir, stem=tag)
