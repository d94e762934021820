"""Forward-chaining rule execution over match deltas.

A rule pairs a precondition pattern with an action.  The agenda holds one
activation per current precondition match; the least activation by
``(rule index, match tuple)`` fires first, and the agenda is resynchronised
from the matcher's deltas before every selection so stale activations never
fire.
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, TextIO

from .graph import GraphStore
from .models import model_size

Action = Callable[[tuple, GraphStore, Any], None]


class FiringLimitExceeded(RuntimeError):
    def __init__(self, limit: int):
        super().__init__(f"rule firing limit of {limit} exceeded")
        self.limit = limit


class StaleMatch(RuntimeError):
    """An action was invoked on a tuple that no longer matches."""


@dataclass(frozen=True)
class Rule:
    name: str
    precondition: str
    action: Action


@dataclass(frozen=True)
class Phase:
    name: str
    rules: tuple[Rule, ...]

    def __post_init__(self):
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate rule names in phase {self.name!r}: {names}")

    @property
    def preconditions(self) -> list[str]:
        return list(dict.fromkeys(r.precondition for r in self.rules))


@dataclass(frozen=True, order=True)
class Activation:
    rule_index: int
    match: tuple
    rule: str = field(compare=False)


@dataclass
class FiringLog:
    firings: list[tuple[str, tuple]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.firings)

    def by_rule(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rule, _ in self.firings:
            counts[rule] = counts.get(rule, 0) + 1
        return counts

    def extend(self, other: "FiringLog") -> None:
        self.firings.extend(other.firings)


def agenda_snapshot(matcher, phase: Phase) -> list[Activation]:
    """Current activations of ``phase`` in firing order."""
    acts = [
        Activation(i, m, rule.name)
        for i, rule in enumerate(phase.rules)
        for m in matcher.matches(rule.precondition)
    ]
    return sorted(acts)


class Agenda:
    """Heap of activations kept in sync with the matcher through deltas."""

    def __init__(self, phase: Phase, matcher):
        self.phase = phase
        self.matcher = matcher
        self._by_pattern: dict[str, list[int]] = {}
        for i, rule in enumerate(phase.rules):
            self._by_pattern.setdefault(rule.precondition, []).append(i)
        matcher.take_deltas()
        self._live: set[tuple[int, tuple]] = set()
        self._heap: list[tuple[int, tuple]] = []
        for act in agenda_snapshot(matcher, phase):
            self._live.add((act.rule_index, act.match))
        self._heap = sorted(self._live)

    def sync(self) -> None:
        for delta in self.matcher.take_deltas():
            indices = self._by_pattern.get(delta.pattern)
            if not indices:
                continue
            for i in indices:
                for t in delta.disappeared:
                    self._live.discard((i, t))
                for t in delta.appeared:
                    key = (i, t)
                    if key not in self._live:
                        self._live.add(key)
                        heapq.heappush(self._heap, key)

    def pop(self) -> Optional[Activation]:
        self.sync()
        while self._heap:
            key = heapq.heappop(self._heap)
            if key in self._live:
                self._live.discard(key)
                i, match = key
                return Activation(i, match, self.phase.rules[i].name)
        return None

    def __len__(self) -> int:
        self.sync()
        return len(self._live)


def _fire(phase: Phase, act: Activation, store: GraphStore, context, trace: Optional[TextIO]) -> None:
    if trace is not None:
        print(f"FIRE {phase.name}/{act.rule} ({', '.join(map(str, act.match))})", file=trace)
    phase.rules[act.rule_index].action(act.match, store, context)


def run_phase(
    phase: Phase,
    store: GraphStore,
    matcher,
    context: Any = None,
    limit: Optional[int] = None,
    trace: Optional[TextIO] = None,
    after_fire: Optional[Callable[[Activation], None]] = None,
) -> FiringLog:
    """Fire ``phase`` to fixpoint and return what fired.

    ``limit`` defaults to ten times the model size at entry.  ``trace=True``
    prints ``FIRE`` lines to standard error; a stream may be given instead.
    """
    if limit is None:
        limit = 10 * max(model_size(store), 1)
    if trace is True:
        trace = sys.stderr
    log = FiringLog()
    agenda = Agenda(phase, matcher)
    while True:
        act = agenda.pop()
        if act is None:
            return log
        if log.count >= limit:
            raise FiringLimitExceeded(limit)
        _fire(phase, act, store, context, trace or None)
        log.firings.append((act.rule, act.match))
        if after_fire is not None:
            after_fire(act)


def step(phase: Phase, store: GraphStore, matcher, context: Any = None, trace: Optional[TextIO] = None) -> Optional[tuple[str, tuple]]:
    """Fire the least activation, if any; ``None`` at fixpoint."""
    acts = agenda_snapshot(matcher, phase)
    if not acts:
        return None
    act = acts[0]
    _fire(phase, act, store, context, trace)
    matcher.take_deltas()
    return act.rule, act.match
