"""Colored-token net translation of a process model and its state space.

The generated net has two layers. Layer 2 is the activity spine: a case
token travels Start -> Activity_1 -> INFO_1 -> ... -> End, with each
activity gated on the decision token produced by its context pipeline.
Layer 1 mirrors the context graph: the single contextual-situation token is
borrowed by one activity's pipeline at a time, flows through state, entity,
attribute and value places, composes into the activity's composite value,
and returns to the contextual event where the fragment decision is thrown.

Tokens carry a color label; a place's color set is the set of labels it may
hold and arcs require/produce specific labels. Guards exist in the data
model but the translator never emits one.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import NotEnabledError, PartialSpaceError

# Token color labels.
CASE = "case"  # process case token on the spine
CS = "cs"  # contextual-situation token; staged as cs1, cs2, ... per pipeline
STATE = "s"  # context state travelling through layer 1
STATE_VALUE = "sv"  # contextual event annotated with its composite value
ENTITY = "e"
ATTR = "a"
ATOMIC = "v"
COMPOSITE = "V"
FRAG = "frag"  # throwActivity decision token


@dataclass(frozen=True)
class Place:
    name: str
    colorset: FrozenSet[str]


@dataclass(frozen=True)
class Transition:
    name: str
    guard: Optional[str] = None  # supported but never set by the translator


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    label: str  # token color consumed/produced


@dataclass(frozen=True)
class Net:
    places: Mapping[str, Place]
    transitions: Mapping[str, Transition]
    arcs: Tuple[Arc, ...]
    initial_marking: "Marking"

    def __post_init__(self):
        place_names = set(self.places)
        transition_names = set(self.transitions)
        if place_names & transition_names:
            raise ValueError("place and transition names must be disjoint")
        inputs = {t: 0 for t in transition_names}
        outputs = {t: 0 for t in transition_names}
        for arc in self.arcs:
            if arc.source in place_names and arc.target in transition_names:
                inputs[arc.target] += 1
                if arc.label not in self.places[arc.source].colorset:
                    raise ValueError(
                        "arc %s->%s consumes label %r outside the color set"
                        % (arc.source, arc.target, arc.label)
                    )
            elif arc.source in transition_names and arc.target in place_names:
                outputs[arc.source] += 1
                if arc.label not in self.places[arc.target].colorset:
                    raise ValueError(
                        "arc %s->%s produces label %r outside the color set"
                        % (arc.source, arc.target, arc.label)
                    )
            else:
                raise ValueError(
                    "arc %s->%s does not connect a place and a transition"
                    % (arc.source, arc.target)
                )
        for t in transition_names:
            if inputs[t] == 0 or outputs[t] == 0:
                raise ValueError("transition %r lacks input or output arcs" % (t,))

    def pre(self, transition: str) -> Counter:
        return Counter(
            (arc.source, arc.label)
            for arc in self.arcs
            if arc.target == transition
        )

    def post(self, transition: str) -> Counter:
        return Counter(
            (arc.target, arc.label)
            for arc in self.arcs
            if arc.source == transition
        )


# A marking maps (place, label) -> token count; canonically a sorted tuple.
Marking = Tuple[Tuple[str, str, int], ...]


def make_marking(tokens: Mapping[Tuple[str, str], int]) -> Marking:
    return tuple(
        (place, label, count)
        for (place, label), count in sorted(tokens.items())
        if count > 0
    )


def marking_tokens(marking: Marking) -> Counter:
    return Counter({(place, label): count for place, label, count in marking})


def enabled(net: Net, marking: Marking) -> List[Tuple[str, None]]:
    """Transitions (with their trivial binding) enabled at ``marking``."""
    tokens = marking_tokens(marking)
    out = []
    for name in net.transitions:
        pre = net.pre(name)
        if all(tokens.get(key, 0) >= need for key, need in pre.items()):
            out.append((name, None))
    return out


def fire(net: Net, marking: Marking, transition: str, binding=None) -> Marking:
    """Consume the input tokens of ``transition`` and produce its outputs."""
    if transition not in net.transitions:
        raise NotEnabledError("unknown transition %r" % (transition,))
    tokens = marking_tokens(marking)
    pre = net.pre(transition)
    for key, need in pre.items():
        if tokens.get(key, 0) < need:
            raise NotEnabledError(
                "transition %r is not enabled at this marking" % (transition,),
                transition=transition,
            )
    for key, need in pre.items():
        tokens[key] -= need
    for key, made in net.post(transition).items():
        tokens[key] = tokens.get(key, 0) + made
        place, label = key
        if label not in net.places[place].colorset:
            raise NotEnabledError(
                "token %r not admitted by place %r" % (label, place), place=place
            )
    return make_marking(tokens)


@dataclass
class StateSpace:
    initial: Marking
    nodes: Set[Marking] = field(default_factory=set)
    arcs: List[Tuple[Marking, str, Marking]] = field(default_factory=list)
    partial: bool = False

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)


def explore(net: Net, initial: Optional[Marking] = None, limit: int = 100000) -> StateSpace:
    """Breadth-first exhaustive exploration of the reachable markings.

    The result is exact when fewer than ``limit`` markings exist, else it is
    flagged partial. Canonical marking encoding makes the space independent
    of internal work ordering.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    m0 = initial if initial is not None else net.initial_marking
    space = StateSpace(initial=m0)
    space.nodes.add(m0)
    frontier = deque([m0])
    while frontier:
        marking = frontier.popleft()
        for transition, _ in enabled(net, marking):
            successor = fire(net, marking, transition)
            if successor not in space.nodes:
                if len(space.nodes) >= limit:
                    space.partial = True
                    return space
                space.nodes.add(successor)
                frontier.append(successor)
            space.arcs.append((marking, transition, successor))
    return space


# -- property checks --------------------------------------------------------


@dataclass(frozen=True)
class BoundednessReport:
    bounds: Mapping[str, int]  # per-place maximum token count
    k: int

    @property
    def bounded(self) -> bool:
        return all(b <= self.k for b in self.bounds.values())

    def violations(self):
        return {p: b for p, b in self.bounds.items() if b > self.k}


def check_bounded(space: StateSpace, k: int = 1, net: Optional[Net] = None) -> BoundednessReport:
    bounds: Dict[str, int] = {}
    if net is not None:
        bounds.update({p: 0 for p in net.places})
    for marking in space.nodes:
        per_place: Dict[str, int] = {}
        for place, label, count in marking:
            per_place[place] = per_place.get(place, 0) + count
        for place, total in per_place.items():
            bounds[place] = max(bounds.get(place, 0), total)
    return BoundednessReport(bounds, k)


@dataclass(frozen=True)
class LivenessReport:
    dead_transitions: Tuple[str, ...]
    dead_markings: Tuple[Marking, ...]
    occurrence_counts: Mapping[str, int]  # fairness is reported as counts only


def check_liveness(space: StateSpace, net: Net) -> LivenessReport:
    if space.partial:
        raise PartialSpaceError("liveness needs an exact state space")
    fired = Counter(t for _, t, _ in space.arcs)
    dead_transitions = tuple(sorted(t for t in net.transitions if fired[t] == 0))
    sources = {m for m, _, _ in space.arcs}
    dead_markings = tuple(sorted(m for m in space.nodes if m not in sources))
    return LivenessReport(dead_transitions, dead_markings, dict(fired))


def check_reachable(space: StateSpace, goal) -> Tuple[bool, List[str]]:
    """Shortest transition path from the initial marking to a goal marking.

    ``goal`` is either a marking or a predicate over markings.
    """
    predicate = goal if callable(goal) else (lambda m: m == goal)
    adjacency: Dict[Marking, List[Tuple[str, Marking]]] = {}
    for src, t, dst in space.arcs:
        adjacency.setdefault(src, []).append((t, dst))
    seen = {space.initial: None}
    frontier = deque([space.initial])
    while frontier:
        marking = frontier.popleft()
        if predicate(marking):
            path = []
            cursor = marking
            while seen[cursor] is not None:
                prev, t = seen[cursor]
                path.append(t)
                cursor = prev
            return True, list(reversed(path))
        for t, dst in sorted(adjacency.get(marking, [])):
            if dst not in seen:
                seen[dst] = (marking, t)
                frontier.append(dst)
    return False, []


def check_home(space: StateSpace, marking: Marking) -> bool:
    """True when ``marking`` is reachable from every reachable marking."""
    if space.partial:
        raise PartialSpaceError("home property needs an exact state space")
    reverse: Dict[Marking, List[Marking]] = {}
    for src, _, dst in space.arcs:
        reverse.setdefault(dst, []).append(src)
    reached = {marking}
    frontier = deque([marking])
    while frontier:
        cursor = frontier.popleft()
        for prev in reverse.get(cursor, []):
            if prev not in reached:
                reached.add(prev)
                frontier.append(prev)
    return space.nodes <= reached


def goal_marking(net: Net) -> Marking:
    """The marking with a single case token on End and nothing else."""
    return make_marking({("End", CASE): 1})


# -- translation ------------------------------------------------------------


def translate(model) -> Net:
    """Generate the two-layer net for a (possibly adapted) process model.

    Layer-2 naming follows the Activity_i / INFO_i / ContextualEvent_i /
    Returned_i scheme with INFO_1..INFO_(n-1) between consecutive
    activities; layer 1 mirrors the context graph restricted to the state
    nodes of activities present in the chain. Substitution-transition
    internals default to a begin/busy/end task sequence unless the model
    supplies an explicit task list.
    """
    model.validate()
    order = model.chain.order()
    n = len(order)
    graph = model.graph

    places: Dict[str, Place] = {}
    transitions: Dict[str, Transition] = {}
    arcs: List[Arc] = []

    def place(name, *labels):
        places[name] = Place(name, frozenset(labels))
        return name

    def transition(name):
        transitions[name] = Transition(name)
        return name

    def arc(source, target, label):
        arcs.append(Arc(source, target, label))

    # Which activities carry a context pipeline (state node present). The
    # situation token is colored by pipeline stage (cs1, cs2, ...) so the
    # pipelines consume it strictly in activity order.
    piped = [i for i, aid in enumerate(order, start=1) if aid in graph.state_nodes]
    last_piped = piped[-1] if piped else None
    stage_of = {i: k for k, i in enumerate(piped, start=1)}

    place("Start", CASE)
    place("End", CASE)
    cs_labels = tuple("%s%d" % (CS, k) for k in range(1, len(piped) + 1)) or (CS,)
    place("ContextualSituation", *cs_labels)
    for i in range(1, n):
        place("INFO_%d" % i, CASE)

    # Entities/attributes referenced by the pipelines, in deterministic order.
    used_entities: List[str] = []
    entity_attrs: Dict[str, List[str]] = {}
    for aid in order:
        node = graph.state_nodes.get(aid)
        if node is None:
            continue
        for attr_name in sorted(graph.attributes):
            attr = graph.attributes[attr_name]
            if attr.entity in node.parameters:
                if attr.entity not in used_entities:
                    used_entities.append(attr.entity)
                    entity_attrs[attr.entity] = []
                if attr_name not in entity_attrs[attr.entity]:
                    entity_attrs[attr.entity].append(attr_name)

    for entity in used_entities:
        place("Entity_%s" % entity, ENTITY)
        transition("Attributes_%s" % entity)
        arc("Entity_%s" % entity, "Attributes_%s" % entity, ENTITY)
        for attr_name in entity_attrs[entity]:
            place("A_%s" % attr_name, ATTR)
            place("value_%s" % attr_name, ATOMIC)
            transition("Grab_value_%s" % attr_name)
            arc("Attributes_%s" % entity, "A_%s" % attr_name, ATTR)
            arc("A_%s" % attr_name, "Grab_value_%s" % attr_name, ATTR)
            arc("Grab_value_%s" % attr_name, "value_%s" % attr_name, ATOMIC)

    for i, aid in enumerate(order, start=1):
        upstream = "Start" if i == 1 else "INFO_%d" % (i - 1)
        downstream = "End" if i == n else "INFO_%d" % i

        node = graph.state_nodes.get(aid)
        has_pipeline = node is not None
        if has_pipeline:
            ce = place("ContextualEvent_%d" % i, STATE, STATE_VALUE)
            returned = place("Returned_%d" % i, FRAG)
            state_place = place("State_%d" % i, STATE)
            value_place = place("VALUE_%d" % i, COMPOSITE)

            stage = stage_of[i]
            catch = transition("catchContext_%d" % i)
            arc("ContextualSituation", catch, "%s%d" % (CS, stage))
            arc(catch, ce, STATE)

            propagate_state = transition("PropagateState_%d" % i)
            arc(ce, propagate_state, STATE)
            arc(propagate_state, state_place, STATE)

            mapping = transition("Mapping_%d" % i)
            arc(state_place, mapping, STATE)
            for entity in node.parameters:
                arc(mapping, "Entity_%s" % entity, ENTITY)

            composition = transition("Composition_%d" % i)
            for entity in node.parameters:
                for attr_name in entity_attrs[entity]:
                    arc("value_%s" % attr_name, composition, ATOMIC)
            arc(composition, value_place, COMPOSITE)

            propagate_v = transition("PropagateV_%d" % i)
            arc(value_place, propagate_v, COMPOSITE)
            arc(propagate_v, ce, STATE_VALUE)

            throw = transition("throwActivity_%d" % i)
            arc(ce, throw, STATE_VALUE)
            arc(throw, returned, FRAG)
            if i != last_piped:
                # Hand the situation token on, recolored for the next stage.
                arc(throw, "ContextualSituation", "%s%d" % (CS, stage + 1))

        # Substitution-transition internals for Activity_i.
        tasks = getattr(model.chain.nodes[aid], "tasks", None) or ("begin", "end")
        if len(tasks) < 2:
            tasks = ("begin", "end")
        stage_places = [
            place("Activity_%d_p%d" % (i, s), CASE) for s in range(1, len(tasks))
        ]
        for t_index, task in enumerate(tasks):
            t_name = transition("Activity_%d_%s" % (i, task))
            source = upstream if t_index == 0 else stage_places[t_index - 1]
            target = downstream if t_index == len(tasks) - 1 else stage_places[t_index]
            arc(source, t_name, CASE)
            arc(t_name, target, CASE)
            if t_index == 0 and has_pipeline:
                arc("Returned_%d" % i, t_name, FRAG)

    initial = make_marking(
        {
            ("Start", CASE): 1,
            ("ContextualSituation", "%s1" % CS): 1 if piped else 0,
        }
    )
    return Net(places, transitions, tuple(arcs), initial)
