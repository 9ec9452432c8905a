"""Three-level context graph: structure, instantiation and value computation.

Level 1 holds state nodes (one per activity with a contextual event), level 2
entities and attributes with their relationships and dependency rules, level 3
the atomic and composite value slots. A context state instantiates the
sub-graph it maps onto; observed values are bound, dependency rules run to
fixpoint, and the state node's composition expression yields the composite
value handed back to the process layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Tuple, Union

from .context import ContextState, Value, normalize_value, values_equal
from .errors import (
    DependencyConflictError,
    DependencyCycleError,
    IncompleteBindingError,
    UnknownContextError,
    UnobservedAttributeError,
)


@dataclass(frozen=True)
class EntityNode:
    name: str
    category: str = "organization"


@dataclass(frozen=True)
class AttributeNode:
    """Level-2 attribute; ``name`` is qualified as ``Entity.Attribute``."""

    name: str
    temporality: str = "dynamic"  # steady | dynamic
    derivation: str = "direct"  # direct | derived
    delay: int = 0  # green-link delay in minutes; 0 means untimed

    def __post_init__(self):
        if self.temporality not in ("steady", "dynamic"):
            raise ValueError("attribute temporality must be steady or dynamic")
        if self.derivation not in ("direct", "derived"):
            raise ValueError("attribute derivation must be direct or derived")
        if self.delay < 0:
            raise ValueError("green-link delay must be >= 0")

    @property
    def entity(self) -> str:
        return self.name.split(".", 1)[0]


CARDINALITIES = ("one-one", "one-many", "many-one", "many-many")


@dataclass(frozen=True)
class EntityRelation:
    """Structural relationship between two entities; documentation only."""

    source: str
    target: str
    cardinality: str = "one-one"

    def __post_init__(self):
        if self.cardinality not in CARDINALITIES:
            raise ValueError("unknown cardinality %r" % (self.cardinality,))


@dataclass(frozen=True)
class RulePattern:
    attribute: str
    value: Value

    def matches(self, bound: Optional["TimedValue"]) -> bool:
        return bound is not None and values_equal(bound.value, self.value)


@dataclass(frozen=True)
class DependencyRule:
    """IF <antecedent contexts> THEN <consequent assignment>.

    Partial rules may overwrite a directly observed value; total rules are
    the sole source of their (derived) target attribute's value.
    """

    kind: str  # partial | total
    antecedent: Tuple[RulePattern, ...]
    consequent: RulePattern

    def __post_init__(self):
        if self.kind not in ("partial", "total"):
            raise ValueError("dependency rule kind must be partial or total")
        if not self.antecedent:
            raise ValueError("dependency rule needs at least one antecedent")


@dataclass(frozen=True)
class Composition:
    """AND/OR expression over attribute references (possibly nested)."""

    op: str  # AND | OR
    items: Tuple[Union[str, "Composition"], ...]

    def __post_init__(self):
        if self.op not in ("AND", "OR"):
            raise ValueError("composition operator must be AND or OR")

    def attributes(self) -> Tuple[str, ...]:
        out = []
        for item in self.items:
            if isinstance(item, Composition):
                out.extend(item.attributes())
            else:
                out.append(item)
        return tuple(out)


@dataclass(frozen=True)
class StateNodeDef:
    """Level-1 state node: scope of one activity plus its value composition."""

    id: str
    parameters: Tuple[str, ...]
    attributes: Tuple[str, ...]
    composition: Optional[Composition] = None

    def effective_composition(self) -> Composition:
        # Plain conjunction over the node's attributes when not spelled out.
        if self.composition is not None:
            return self.composition
        return Composition("AND", tuple(self.attributes))


@dataclass(frozen=True)
class TimedValue:
    """A value plus the delay (minutes) until it becomes effective."""

    value: Value
    delay: int = 0

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")

    @property
    def untimed(self) -> bool:
        return self.delay == 0


@dataclass(frozen=True)
class CompositeValue:
    """The observed value of a state node: (attribute, value) pairs under AND/OR."""

    op: str
    pairs: Tuple[Tuple[str, Value], ...]
    max_delay: int = 0

    def normalized(self):
        return (
            self.op,
            frozenset(
                (attr.casefold(), normalize_value(value)) for attr, value in self.pairs
            ),
        )

    def matches(self, other: "CompositeValue") -> bool:
        return self.normalized() == other.normalized()

    def render(self) -> str:
        joint = " %s " % self.op
        return "[%s]" % joint.join(
            "(%s, %s)" % (attr, value) for attr, value in self.pairs
        )


@dataclass(frozen=True)
class ContextGraph:
    entities: Mapping[str, EntityNode]
    attributes: Mapping[str, AttributeNode]
    relations: Tuple[EntityRelation, ...] = ()
    dependency_rules: Tuple[DependencyRule, ...] = ()
    state_nodes: Mapping[str, StateNodeDef] = field(default_factory=dict)
    composite_slots: Tuple[str, ...] = ()

    @classmethod
    def build(cls, entities, attributes, relations=(), dependency_rules=(),
              state_nodes=(), composite_slots=None):
        state_map = {node.id: node for node in state_nodes}
        if composite_slots is None:
            composite_slots = tuple("V_%s" % node_id for node_id in state_map)
        return cls(
            entities={e.name: e for e in entities},
            attributes={a.name: a for a in attributes},
            relations=tuple(relations),
            dependency_rules=tuple(dependency_rules),
            state_nodes=state_map,
            composite_slots=tuple(composite_slots),
        )

    def red_links(self):
        """State-node parameter -> entity node (the f mapping)."""
        return {
            (node.id, p): p
            for node in self.state_nodes.values()
            for p in node.parameters
        }

    def blue_links(self):
        """State-node attribute -> attribute node (the g mapping)."""
        return {
            (node.id, a): a
            for node in self.state_nodes.values()
            for a in node.attributes
        }

    def green_links(self):
        """Attribute node -> (atomic value slot, delay)."""
        return {
            name: ("v_%s" % name, attr.delay)
            for name, attr in self.attributes.items()
        }


@dataclass(frozen=True)
class Finding:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: Tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def codes(self):
        return [f.code for f in self.findings]


def validate_graph(g: ContextGraph) -> ValidationReport:
    """Check every structural invariant; an empty report means well-formed."""
    findings = []

    if len(g.composite_slots) != len(g.state_nodes):
        findings.append(Finding(
            "composite-count",
            "composite value slots (%d) must match state nodes (%d)"
            % (len(g.composite_slots), len(g.state_nodes)),
        ))

    names = {}
    for group, pool in (
        ("entity", g.entities),
        ("attribute", g.attributes),
        ("state", g.state_nodes),
    ):
        for name in pool:
            if name in names and names[name] != group:
                findings.append(Finding(
                    "node-overlap",
                    "%s node %r collides with a %s node" % (group, name, names[name]),
                ))
            names[name] = group

    for attr in g.attributes.values():
        if attr.entity not in g.entities:
            findings.append(Finding(
                "unknown-entity",
                "attribute %r belongs to undeclared entity %r"
                % (attr.name, attr.entity),
            ))

    for rel in g.relations:
        for end in (rel.source, rel.target):
            if end not in g.entities:
                findings.append(Finding(
                    "unknown-entity",
                    "relation endpoint %r is not a declared entity" % (end,),
                ))

    for rule in g.dependency_rules:
        for pat in rule.antecedent + (rule.consequent,):
            if pat.attribute not in g.attributes:
                findings.append(Finding(
                    "unknown-attribute",
                    "dependency rule references undeclared attribute %r"
                    % (pat.attribute,),
                ))
        target = g.attributes.get(rule.consequent.attribute)
        if rule.kind == "total" and target is not None and target.derivation != "derived":
            findings.append(Finding(
                "total-rule-target",
                "total rule targets direct attribute %r" % (target.name,),
            ))

    for node in g.state_nodes.values():
        for p in node.parameters:
            if p not in g.entities:
                findings.append(Finding(
                    "unknown-entity",
                    "state node %r maps parameter %r to no entity" % (node.id, p),
                ))
        for a in node.attributes:
            if a not in g.attributes:
                findings.append(Finding(
                    "unknown-attribute",
                    "state node %r maps attribute %r to no attribute node"
                    % (node.id, a),
                ))
        for a in node.effective_composition().attributes():
            if a not in node.attributes:
                findings.append(Finding(
                    "composition-scope",
                    "state node %r composes attribute %r outside its own links"
                    % (node.id, a),
                ))

    return ValidationReport(tuple(findings))


@dataclass(frozen=True)
class SubgraphInstance:
    """The run-time sub-graph activated by one context state."""

    graph: ContextGraph
    activated_state: Optional[str]
    activated_entities: frozenset
    activated_attributes: frozenset
    bound_values: Mapping[str, TimedValue] = field(default_factory=dict)
    stats: Tuple[int, int] = (0, 0)

    @property
    def is_empty(self) -> bool:
        return self.activated_state is None


def instantiate(g: ContextGraph, s: ContextState) -> SubgraphInstance:
    """Activate the entities/attributes that are the link image of ``s``."""
    if s.is_empty:
        return SubgraphInstance(g, None, frozenset(), frozenset())

    node = g.state_nodes.get(s.activity_id)
    if node is None:
        raise UnknownContextError(
            "no state node for activity %r" % (s.activity_id,),
            activity=s.activity_id,
        )
    for p in s.parameters:
        if p not in node.parameters or p not in g.entities:
            raise UnknownContextError(
                "parameter %r of state %r has no red link" % (p, s.activity_id),
                parameter=p,
            )
    for a in s.attributes:
        if a not in node.attributes or a not in g.attributes:
            raise UnknownContextError(
                "attribute %r of state %r has no blue link" % (a, s.activity_id),
                attribute=a,
            )

    entities = frozenset(s.parameters)
    attributes = frozenset(s.attributes)
    # Nodes: state node, entities, attributes, one atomic slot per attribute,
    # one composite slot. Edges: red + blue + green.
    n_nodes = 2 + len(entities) + 2 * len(attributes)
    n_edges = len(entities) + 2 * len(attributes)
    return SubgraphInstance(
        graph=g,
        activated_state=node.id,
        activated_entities=entities,
        activated_attributes=attributes,
        stats=(n_nodes, n_edges),
    )


def assign_values(
    inst: SubgraphInstance, observations: Mapping[str, object]
) -> SubgraphInstance:
    """Bind observed values to the instance's direct attributes.

    Observations may be raw values or :class:`TimedValue`; raw values pick up
    the attribute's green-link delay. Derived attributes stay unbound until
    dependency evaluation.
    """
    if inst.is_empty and not observations:
        return inst

    bound = dict(inst.bound_values)
    for name in sorted(inst.activated_attributes):
        attr = inst.graph.attributes[name]
        if attr.derivation != "direct":
            continue
        if name not in observations:
            raise UnobservedAttributeError(
                "direct attribute %r has no observation" % (name,), attribute=name
            )
        obs = observations[name]
        if not isinstance(obs, TimedValue):
            obs = TimedValue(obs, attr.delay)
        bound[name] = obs
    return replace(inst, bound_values=bound)


def apply_dependencies(
    inst: SubgraphInstance, rules: Tuple[DependencyRule, ...]
) -> SubgraphInstance:
    """Fire dependency rules pass-by-pass until the bindings stabilise.

    Each pass evaluates every rule against the current bindings and applies
    all resulting writes at once, which makes the fixpoint independent of
    rule ordering. Two rules producing different values for one attribute in
    the same pass is a conflict, not a silent choice.
    """
    if inst.is_empty:
        return inst

    bound = dict(inst.bound_values)
    cap = len(rules) * max(len(inst.activated_attributes), 1) + 1
    for _ in range(cap):
        proposals = {}
        for rule in rules:
            target = rule.consequent.attribute
            if target not in inst.activated_attributes:
                continue
            if not all(bound_matches(bound, pat) for pat in rule.antecedent):
                continue
            delay = max(
                (bound[p.attribute].delay for p in rule.antecedent), default=0
            )
            value = TimedValue(rule.consequent.value, delay)
            if target in proposals and not values_equal(
                proposals[target].value, value.value
            ):
                raise DependencyConflictError(
                    "rules disagree on %r: %r vs %r"
                    % (target, proposals[target].value, value.value),
                    attribute=target,
                )
            proposals[target] = value
        changed = False
        for target, value in proposals.items():
            prior = bound.get(target)
            if prior is None or not values_equal(prior.value, value.value):
                bound[target] = value
                changed = True
        if not changed:
            return replace(inst, bound_values=bound)
    raise DependencyCycleError(
        "dependency rules did not stabilise within %d passes" % (cap,)
    )


def bound_matches(bound, pattern: RulePattern) -> bool:
    return pattern.matches(bound.get(pattern.attribute))


def compose_value(inst: SubgraphInstance, node: StateNodeDef) -> CompositeValue:
    """Evaluate the state node's composition over the instance's bindings."""
    comp = node.effective_composition()
    pairs = []
    max_delay = 0
    for attr in comp.attributes():
        bound = inst.bound_values.get(attr)
        if bound is None:
            raise IncompleteBindingError(
                "attribute %r is unbound in composition of %r" % (attr, node.id),
                attribute=attr,
            )
        pairs.append((attr, bound.value))
        max_delay = max(max_delay, bound.delay)
    return CompositeValue(comp.op, tuple(pairs), max_delay)


def composite_from_pairs(pairs, op: str = "AND", max_delay: int = 0) -> CompositeValue:
    """Build a composite value pattern from raw (attribute, value) pairs."""
    return CompositeValue(op, tuple((str(a), v) for a, v in pairs), max_delay)
