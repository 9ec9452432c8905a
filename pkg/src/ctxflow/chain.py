"""The extended process model: activity chain, adaptation rules and the runner.

Activities form a doubly linked chain (prev/next) walked from the single
start-attached node to the single end-attached node. Five rewrite strategies
operate on the chain: fragment insertion, replacement (by fragment, of role,
of medium), bypass, window reordering and data-level change. The runner
walks the chain, evaluates each activity's contextual event just before it
executes, and applies the action selected by the first matching rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .context import (
    AtomicContext,
    ContextState,
    ContextualSituation,
    ScopeFilter,
    catch_context,
)
from .errors import (
    ChainIntegrityError,
    EmptyChainError,
    InvalidWindowError,
    UnknownActivityError,
)
from .fragments import FragmentRepository, ProcessFragment, throw_activity
from .graph import (
    CompositeValue,
    ContextGraph,
    TimedValue,
    apply_dependencies,
    assign_values,
    compose_value,
    instantiate,
)

logger = logging.getLogger(__name__)

# Fragment activities inserted at run time may themselves carry contextual
# events; cap how deep insertion-triggered insertions may recurse.
MAX_INSERTION_DEPTH = 3


@dataclass
class ActivityNode:
    id: str
    sub_goal: str
    role: str = ""
    medium: str = ""
    prev: Optional[str] = None
    next: Optional[str] = None
    output_data: Set[str] = field(default_factory=set)
    scope: Optional[ScopeFilter] = None
    duration: int = 0

    def copy(self) -> "ActivityNode":
        clone = replace(self)
        clone.output_data = set(self.output_data)
        return clone


class ActivityChain:
    """Doubly linked activity list with a single start and a single end."""

    def __init__(self, nodes: Dict[str, ActivityNode], start: str):
        self.nodes = nodes
        self.start = start

    @classmethod
    def from_nodes(cls, ordered: Sequence[ActivityNode]) -> "ActivityChain":
        if not ordered:
            raise EmptyChainError("a chain needs at least one activity")
        nodes = {}
        for i, node in enumerate(ordered):
            node.prev = ordered[i - 1].id if i > 0 else None
            node.next = ordered[i + 1].id if i < len(ordered) - 1 else None
            if node.id in nodes:
                raise ChainIntegrityError("duplicate activity id %r" % (node.id,))
            nodes[node.id] = node
        return cls(nodes, ordered[0].id)

    def copy(self) -> "ActivityChain":
        return ActivityChain({k: v.copy() for k, v in self.nodes.items()}, self.start)

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, activity_id):
        return activity_id in self.nodes

    def node(self, activity_id: str) -> ActivityNode:
        try:
            return self.nodes[activity_id]
        except KeyError:
            raise UnknownActivityError(
                "no activity %r in chain" % (activity_id,), activity=activity_id
            ) from None

    def order(self) -> List[str]:
        out = []
        seen = set()
        cursor = self.start
        while cursor is not None:
            if cursor in seen:
                raise ChainIntegrityError("cycle through %r" % (cursor,))
            seen.add(cursor)
            out.append(cursor)
            cursor = self.nodes[cursor].next
        return out

    def validate(self) -> None:
        """Raise unless the chain is a well-formed doubly linked list."""
        starts = [n.id for n in self.nodes.values() if n.prev is None]
        ends = [n.id for n in self.nodes.values() if n.next is None]
        if len(starts) != 1 or len(ends) != 1:
            raise ChainIntegrityError(
                "chain must have exactly one start and one end (found %r / %r)"
                % (starts, ends)
            )
        if self.start != starts[0]:
            raise ChainIntegrityError("start pointer disagrees with links")
        for node in self.nodes.values():
            if node.next is not None and self.nodes[node.next].prev != node.id:
                raise ChainIntegrityError(
                    "next/prev mismatch between %r and %r" % (node.id, node.next)
                )
            if node.prev is not None and self.nodes[node.prev].next != node.id:
                raise ChainIntegrityError(
                    "prev/next mismatch between %r and %r" % (node.id, node.prev)
                )
        if len(self.order()) != len(self.nodes):
            raise ChainIntegrityError("chain contains unreachable activities")

    # -- low-level splicing -------------------------------------------------

    def _link(self, left: Optional[str], right: Optional[str]) -> None:
        if left is not None:
            self.nodes[left].next = right
        if right is not None:
            self.nodes[right].prev = left
        if right is not None and left is None:
            self.start = right

    def _insert_run(self, after: Optional[str], before: Optional[str],
                    run: Sequence[ActivityNode]) -> None:
        for i, node in enumerate(run):
            if node.id in self.nodes:
                raise ChainIntegrityError(
                    "inserted activity id %r already in chain" % (node.id,)
                )
            self.nodes[node.id] = node
        self._link(after, run[0].id)
        for i in range(len(run) - 1):
            self._link(run[i].id, run[i + 1].id)
        self._link(run[-1].id, before)


def _materialize(fragment: ProcessFragment, chain: ActivityChain) -> List[ActivityNode]:
    nodes = []
    for activity in fragment.activities:
        node_id = activity.name
        suffix = 2
        while node_id in chain.nodes or any(n.id == node_id for n in nodes):
            node_id = "%s#%d" % (activity.name, suffix)
            suffix += 1
        nodes.append(
            ActivityNode(
                id=node_id,
                sub_goal=activity.sub_goal or activity.name,
                role=activity.role,
                medium=activity.medium,
            )
        )
    return nodes


def add_fragment(
    chain: ActivityChain, target: str, position: str, fragment: ProcessFragment
) -> ActivityChain:
    """Insert a fragment's activities directly before or after ``target``."""
    anchor = chain.node(target)
    run = _materialize(fragment, chain)
    if position == "before":
        chain._insert_run(anchor.prev, anchor.id, run)
    elif position == "after":
        chain._insert_run(anchor.id, anchor.next, run)
    else:
        raise ValueError("position must be 'before' or 'after'")
    chain.validate()
    return chain


def replace_activity(
    chain: ActivityChain, target: str, fragment: ProcessFragment
) -> ActivityChain:
    """Swap ``target`` out of the chain for the fragment's activities."""
    victim = chain.node(target)
    run = _materialize(fragment, chain)
    before, after = victim.prev, victim.next
    del chain.nodes[target]
    chain._insert_run(before, after, run)
    chain.validate()
    return chain


def replace_attribute(
    chain: ActivityChain, target: str, kind: str, new_value: str
) -> ActivityChain:
    """Change who performs the activity (role) or how (medium); no rewiring."""
    node = chain.node(target)
    if kind == "role":
        node.role = new_value
    elif kind == "medium":
        node.medium = new_value
    else:
        raise ValueError("kind must be 'role' or 'medium'")
    chain.validate()
    return chain


def bypass(chain: ActivityChain, target: str) -> ActivityChain:
    """Unlink ``target`` and join its neighbours."""
    if len(chain) < 2:
        raise EmptyChainError("cannot bypass the only activity")
    victim = chain.node(target)
    before, after = victim.prev, victim.next
    del chain.nodes[target]
    chain._link(before, after)
    if after is None and before is not None:
        chain.nodes[before].next = None
    chain.validate()
    return chain


def reorder(
    chain: ActivityChain, window: Sequence[str], permutation: Sequence[str]
) -> ActivityChain:
    """Permute a contiguous window of two or three activities.

    ``window`` must list the activities in their current chain order;
    ``permutation`` is the same ids in the desired order. All six
    permutations of a 3-window are supported; 2-windows cover the
    start/end-attached degenerate cases.
    """
    window = list(window)
    permutation = list(permutation)
    if sorted(window) != sorted(permutation) or not 2 <= len(window) <= 3:
        raise InvalidWindowError(
            "permutation %r does not rearrange window %r" % (permutation, window)
        )
    for wid in window:
        chain.node(wid)
    for i in range(len(window) - 1):
        if chain.nodes[window[i]].next != window[i + 1]:
            raise InvalidWindowError(
                "window %r is not contiguous in the chain" % (window,)
            )
    before = chain.nodes[window[0]].prev
    after = chain.nodes[window[-1]].next
    chain._link(before, permutation[0])
    for i in range(len(permutation) - 1):
        chain._link(permutation[i], permutation[i + 1])
    chain._link(permutation[-1], after)
    chain.validate()
    return chain


def data_level_change(chain: ActivityChain, target: str, delta) -> ActivityChain:
    """Update the activity's output data; topology is untouched."""
    node = chain.node(target)
    node.output_data |= set(delta)
    chain.validate()
    return chain


# -- adaptation rules -------------------------------------------------------

FRAGMENT_ACTIONS = ("add_before", "add_after", "replace_fragment")
PLAIN_ACTIONS = (
    "replace_role",
    "replace_medium",
    "bypass",
    "reorder",
    "data_change",
)


@dataclass(frozen=True)
class Action:
    kind: str
    role: str = ""  # replace_role
    medium: str = ""  # replace_medium
    order: Tuple[str, ...] = ()  # reorder: labels among L2 (prev), L1, L3 (next)
    data: Tuple[str, ...] = ()  # data_change

    def __post_init__(self):
        if self.kind not in FRAGMENT_ACTIONS + PLAIN_ACTIONS:
            raise ValueError("unknown action kind %r" % (self.kind,))
        if self.kind == "reorder" and sorted(set(self.order)) != sorted(self.order):
            raise ValueError("reorder labels must be distinct")

    @property
    def needs_fragment(self) -> bool:
        return self.kind in FRAGMENT_ACTIONS

    def describe(self) -> str:
        extra = {
            "replace_role": self.role,
            "replace_medium": self.medium,
            "reorder": "->".join(self.order),
            "data_change": "+".join(sorted(self.data)),
        }.get(self.kind, "")
        return "%s(%s)" % (self.kind, extra) if extra else self.kind


@dataclass(frozen=True)
class AdaptationRule:
    activity_id: str
    value_pattern: CompositeValue
    fragment_pattern: Optional[str]  # fragment id, or None
    action: Action
    declaration_order: int = 0

    def __post_init__(self):
        if not self.value_pattern.pairs:
            raise ValueError("rule value pattern cannot be empty")
        if self.action.needs_fragment and self.fragment_pattern is None:
            raise ValueError(
                "action %r needs a selected fragment" % (self.action.kind,)
            )
        if not self.action.needs_fragment and self.fragment_pattern is not None:
            raise ValueError(
                "action %r applies only when no fragment was selected"
                % (self.action.kind,)
            )


def select_rule(
    rules: Sequence[AdaptationRule],
    value: CompositeValue,
    fragment: Optional[ProcessFragment],
) -> Optional[AdaptationRule]:
    """First rule (declaration order) matching the value/fragment pair."""
    fragment_id = fragment.id if fragment is not None else None
    for rule in sorted(rules, key=lambda r: r.declaration_order):
        if rule.value_pattern.matches(value) and rule.fragment_pattern == fragment_id:
            return rule
    logger.warning("no adaptation rule matched value %s", value.render())
    return None


# -- the integrated model and its runner ------------------------------------


@dataclass
class ProcessModel:
    """Context graph + chain + rules + ideal context assignment."""

    graph: ContextGraph
    chain: ActivityChain
    repo: FragmentRepository
    rules: Tuple[AdaptationRule, ...]
    ideal: Mapping[str, AtomicContext]  # qualified attribute -> ideal context

    def rules_for(self, activity_id: str):
        return [r for r in self.rules if r.activity_id == activity_id]

    def validate(self) -> None:
        self.chain.validate()
        for rule in self.rules:
            if rule.activity_id not in self.chain:
                raise UnknownActivityError(
                    "rule targets unknown activity %r" % (rule.activity_id,),
                    activity=rule.activity_id,
                )
        for q in self.ideal:
            if q not in self.graph.attributes:
                raise UnknownActivityError(
                    "ideal assignment names unknown attribute %r" % (q,), attribute=q
                )


@dataclass(frozen=True)
class TraceEntry:
    timestamp: int
    activity_id: str
    value: Optional[CompositeValue]
    fragment_id: Optional[str]
    action: Optional[str]
    deferred_until: Optional[int] = None

    def describe(self) -> str:
        parts = [
            "t=%d" % self.timestamp,
            self.activity_id,
            self.value.render() if self.value is not None else "-",
            self.fragment_id or "-",
            self.action or "no-change",
        ]
        if self.deferred_until is not None:
            parts.append("deferred-until=%d" % self.deferred_until)
        return " | ".join(parts)


@dataclass
class AdaptationTrace:
    entries: List[TraceEntry] = field(default_factory=list)
    final_order: List[str] = field(default_factory=list)

    @property
    def actions(self) -> List[TraceEntry]:
        return [e for e in self.entries if e.action]


@dataclass
class _Pending:
    due: int
    activity_id: str
    rule: AdaptationRule
    fragment: Optional[ProcessFragment]
    value: CompositeValue


class _Runner:
    def __init__(self, model: ProcessModel, scenario: Sequence[ContextualSituation]):
        self.model = model
        self.chain = model.chain.copy()
        self.scenario = list(scenario)
        self.trace = AdaptationTrace()
        self.states: Dict[str, ContextState] = {}
        self.assignments: Dict[str, Dict[str, TimedValue]] = {}
        self.executed: Set[str] = set()
        self.evaluated: Set[str] = set()
        self.pending: List[_Pending] = []
        self.clock = self.scenario[0].timestamp if self.scenario else 0
        self.next_situation = 0
        for node in self.chain.nodes.values():
            self._init_activity(node)

    def _init_activity(self, node: ActivityNode) -> None:
        if node.scope is None:
            return
        ideal = [
            ctx
            for q, ctx in self.model.ideal.items()
            if node.scope.covers(ctx)
        ]
        # Timestamp -1 marks the design-time ideal, older than any observation.
        self.states[node.id] = ContextState.initial(node.id, ideal, timestamp=-1)
        self.assignments[node.id] = {
            ctx.qualified: TimedValue(
                ctx.value, self.model.graph.attributes[ctx.qualified].delay
            )
            for ctx in ideal
        }

    # -- scenario ingestion --------------------------------------------------

    def _ingest_due_situations(self) -> None:
        while (
            self.next_situation < len(self.scenario)
            and self.scenario[self.next_situation].timestamp <= self.clock
        ):
            cs = self.scenario[self.next_situation]
            self.next_situation += 1
            for activity_id, state in list(self.states.items()):
                node = self.chain.nodes.get(activity_id)
                if node is None or node.scope is None:
                    continue
                updated = catch_context(cs, state, node.scope)
                if updated is not state:
                    self.states[activity_id] = updated
                    for q in updated.bindings:
                        ctx = updated.bindings[q]
                        attr = self.model.graph.attributes.get(q)
                        delay = attr.delay if attr else 0
                        self.assignments[activity_id][q] = TimedValue(
                            ctx.value, delay
                        )

    # -- evaluation ----------------------------------------------------------

    def _evaluate(self, node: ActivityNode, depth: int = 0) -> None:
        self.evaluated.add(node.id)
        if node.scope is None or node.id not in self.states:
            return
        state = self.states[node.id]
        graph = self.model.graph
        inst = instantiate(graph, state)
        if inst.is_empty:
            self.trace.entries.append(
                TraceEntry(self.clock, node.id, None, None, None)
            )
            return
        obs = {
            q: tv
            for q, tv in self.assignments[node.id].items()
            if q in inst.activated_attributes
        }
        inst = assign_values(inst, obs)
        inst = apply_dependencies(inst, graph.dependency_rules)
        value = compose_value(inst, graph.state_nodes[node.id])
        thrown = throw_activity(self.model.repo, node.sub_goal, value)
        rule = select_rule(self.model.rules_for(node.id), value, thrown.fragment)
        if rule is None:
            self.trace.entries.append(
                TraceEntry(
                    self.clock,
                    node.id,
                    value,
                    thrown.fragment.id if thrown.fragment else None,
                    None,
                )
            )
            return
        if value.max_delay > 0:
            due = self.clock + value.max_delay
            self.pending.append(
                _Pending(due, node.id, rule, thrown.fragment, value)
            )
            self.trace.entries.append(
                TraceEntry(
                    self.clock,
                    node.id,
                    value,
                    thrown.fragment.id if thrown.fragment else None,
                    rule.action.describe(),
                    deferred_until=due,
                )
            )
            return
        self._apply(node.id, rule, thrown.fragment, value, depth)
        self.trace.entries.append(
            TraceEntry(
                self.clock,
                node.id,
                value,
                thrown.fragment.id if thrown.fragment else None,
                rule.action.describe(),
            )
        )

    def _apply(
        self,
        activity_id: str,
        rule: AdaptationRule,
        fragment: Optional[ProcessFragment],
        value: CompositeValue,
        depth: int,
    ) -> None:
        action = rule.action
        chain = self.chain
        if activity_id not in chain:
            logger.warning(
                "activity %r left the chain before action %s applied",
                activity_id,
                action.describe(),
            )
            return
        inserted: List[str] = []
        if action.kind in ("add_before", "add_after"):
            existing = set(chain.nodes)
            add_fragment(
                chain, activity_id, action.kind.split("_", 1)[1], fragment
            )
            inserted = [i for i in chain.nodes if i not in existing]
        elif action.kind == "replace_fragment":
            existing = set(chain.nodes)
            replace_activity(chain, activity_id, fragment)
            inserted = [i for i in chain.nodes if i not in existing]
        elif action.kind == "replace_role":
            replace_attribute(chain, activity_id, "role", action.role)
        elif action.kind == "replace_medium":
            replace_attribute(chain, activity_id, "medium", action.medium)
        elif action.kind == "bypass":
            bypass(chain, activity_id)
        elif action.kind == "reorder":
            window, permutation = self._resolve_reorder(activity_id, action.order)
            reorder(chain, window, permutation)
        elif action.kind == "data_change":
            data_level_change(chain, activity_id, action.data)
        # Freshly inserted activities receive contextual events evaluated at
        # insertion time, in chain order.
        if inserted and depth < MAX_INSERTION_DEPTH:
            order = chain.order()
            for new_id in sorted(inserted, key=order.index):
                self._evaluate(chain.nodes[new_id], depth + 1)
        elif inserted:
            for new_id in inserted:
                self.evaluated.add(new_id)

    def _resolve_reorder(self, center: str, order: Sequence[str]):
        node = self.chain.node(center)
        labels = {"L1": center}
        window = []
        if node.prev is not None:
            labels["L2"] = node.prev
            window.append(node.prev)
        window.append(center)
        if node.next is not None:
            labels["L3"] = node.next
            window.append(node.next)
        if len(window) < 2:
            raise InvalidWindowError("cannot reorder a single-activity chain")
        if set(order) <= set(labels):
            permutation = [labels[lbl] for lbl in order]
            if sorted(permutation) == sorted(window):
                return window, permutation
        # Degenerate windows: fall back to swapping whatever neighbours exist.
        if len(window) == 2:
            return window, [window[1], window[0]]
        raise InvalidWindowError(
            "reorder labels %r do not fit window %r" % (tuple(order), tuple(window))
        )

    # -- main walk -----------------------------------------------------------

    def _blocked(self, activity_id: str) -> bool:
        return any(p.activity_id == activity_id for p in self.pending)

    def _next_unexecuted(self) -> Optional[ActivityNode]:
        """First unexecuted activity that is not waiting on a deferred action.

        An activity whose contextual event produced a timed value is blocked
        until the delay elapses; activities after it may run meanwhile, which
        is how a timed value postpones its activity in the schedule.
        """
        cursor = self.chain.start
        while cursor is not None:
            if cursor not in self.executed and not self._blocked(cursor):
                return self.chain.nodes[cursor]
            cursor = self.chain.nodes[cursor].next
        return None

    def _has_unexecuted(self) -> bool:
        return any(i not in self.executed for i in self.chain.order())

    def _apply_due_pending(self) -> None:
        still = []
        for item in self.pending:
            if item.due > self.clock:
                still.append(item)
                continue
            if item.activity_id in self.executed or item.activity_id not in self.chain:
                logger.warning(
                    "deferred action on %r expired unapplied", item.activity_id
                )
                continue
            self._apply(item.activity_id, item.rule, item.fragment, item.value, 0)
            self.trace.entries.append(
                TraceEntry(
                    self.clock,
                    item.activity_id,
                    item.value,
                    item.fragment.id if item.fragment else None,
                    item.rule.action.describe(),
                )
            )
        self.pending = still

    def run(self) -> AdaptationTrace:
        guard = 0
        limit = 10 * (len(self.chain) + len(self.scenario) + 10)
        while True:
            guard += 1
            if guard > limit + 1000:
                raise ChainIntegrityError("runner failed to make progress")
            self._ingest_due_situations()
            self._apply_due_pending()
            pos = self._next_unexecuted()
            if pos is None:
                if self.pending and self._has_unexecuted():
                    # Everything left is waiting on a timed value; let the
                    # clock run forward to the earliest deferral.
                    self.clock = min(p.due for p in self.pending)
                    continue
                break
            if pos.id not in self.evaluated:
                self._evaluate(pos)
                continue  # chain may have been rewritten; re-resolve position
            self.executed.add(pos.id)
            self.trace.final_order.append(pos.id)
            self.clock += pos.duration
        self.trace.final_order = list(self.trace.final_order)
        return self.trace


def run_instance(
    model: ProcessModel, scenario: Sequence[ContextualSituation]
) -> AdaptationTrace:
    """Execute one process instance under a timed scenario.

    The logical clock starts at the first situation's timestamp and advances
    by activity durations; a situation becomes visible once the clock has
    reached its timestamp. Each activity's contextual event is evaluated once,
    immediately before the activity executes (or at insertion time for
    activities contributed by fragments). Actions whose composite value is
    timed are deferred by its maximum delay.
    """
    model.validate()
    for i in range(1, len(scenario)):
        if scenario[i].timestamp < scenario[i - 1].timestamp:
            raise ValueError("scenario timestamps must be monotone")
    return _Runner(model, scenario).run()
