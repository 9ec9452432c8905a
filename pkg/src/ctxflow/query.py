"""Context predicate algebra: a small query language over a situation.

A contextual situation is viewed here as an ordered list of context
predicates ``Category(subject, attribute, connector, value)``. Seven query
kinds are supported:

* ``AND <Cat> WHERE parameter INSTANCE_OF <Param>`` -- conjunction of all
  predicates whose subject is an instance of the parameter.
* ``AND CHAIN <Cat1> -> <Cat2> [-> ...]`` -- cross-category conjunction
  chaining predicates where the previous value names the next subject.
* ``AND <Cat> WHERE <condition>`` -- conditional conjunction.
* ``OR <Cat> WHERE instance = <I> AND attribute = <A>`` -- disjunction of
  predicates sharing instance and attribute (differing values).
* ``OR <Cat> WHERE attribute = <A> AND value = <V>`` -- disjunction of
  predicates sharing attribute and value (differing instances).
* ``NOT <predicate>`` -- negation of a literal predicate.
* ``ADD <predicate>, <predicate>`` / ``SUB ...`` -- arithmetic over two
  compatible numeric predicates.

Conditions are AND/OR trees over leaves ``attr <name> <op> <value>``,
``param <op> <value>``, ``instance <op> <value>`` and ``value <op> <value>``,
with parentheses for grouping. Values may be bare words, numbers or quoted
strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

from .context import Value, normalize_value, values_equal
from .errors import IncompatibleOperandsError, QueryParseError


@dataclass(frozen=True)
class ContextPredicate:
    """Encapsulates one context 4-tuple under a category name."""

    category: str
    subject: str  # parameter or instance name
    attribute: str
    connector: str
    value: Value
    instance_of: Optional[str] = None  # declared parameter this subject instantiates
    negated: bool = False

    def render(self) -> str:
        text = "%s(%s, %s, %s, %s)" % (
            self.category,
            self.subject,
            self.attribute,
            self.connector,
            self.value,
        )
        return "NOT %s" % text if self.negated else text

    def is_instance_of(self, parameter: str) -> bool:
        target = parameter.casefold()
        subject = self.subject.casefold()
        if self.instance_of is not None and self.instance_of.casefold() == target:
            return True
        return subject == target or subject.endswith("_" + target)


@dataclass(frozen=True)
class QueryResult:
    """Predicates joined by AND/OR; empty means NULL."""

    op: Optional[str]
    predicates: Tuple[ContextPredicate, ...]

    NULL = None  # set after class definition

    @property
    def is_null(self) -> bool:
        return not self.predicates

    def render(self) -> str:
        if self.is_null:
            return "NULL"
        if len(self.predicates) == 1:
            return self.predicates[0].render()
        joint = " %s " % (self.op or "AND")
        return joint.join(p.render() for p in self.predicates)


QueryResult.NULL = QueryResult(None, ())


@dataclass(frozen=True)
class Condition:
    """Leaf or AND/OR node of a kind-3 condition tree."""

    op: str  # AND | OR | leaf
    children: Tuple["Condition", ...] = ()
    field: str = ""  # attr | param | instance | value (leaves only)
    name: str = ""  # attribute name for attr leaves
    cmp: str = "="
    value: Value = ""

    def holds(self, pred: ContextPredicate) -> bool:
        if self.op == "AND":
            return all(c.holds(pred) for c in self.children)
        if self.op == "OR":
            return any(c.holds(pred) for c in self.children)
        if self.field == "attr":
            if normalize_value(pred.attribute) != normalize_value(self.name):
                return False
            return compare(pred.value, self.cmp, self.value)
        if self.field in ("param", "instance"):
            return compare(pred.subject, self.cmp, self.value)
        return compare(pred.value, self.cmp, self.value)


def compare(left: Value, op: str, right: Value) -> bool:
    if op == "=":
        return values_equal(left, right)
    if op == "!=":
        return not values_equal(left, right)
    try:
        lf, rf = float(left), float(right)
    except (TypeError, ValueError):
        return False
    return {
        ">": lf > rf,
        "<": lf < rf,
        ">=": lf >= rf,
        "<=": lf <= rf,
    }[op]


KINDS = (
    "and_by_parameter",
    "and_cross_category",
    "and_conditional",
    "or_same_instance",
    "or_same_value",
    "not",
    "arith",
)


@dataclass(frozen=True)
class Query:
    kind: str
    category: str = ""
    target: str = ""  # kind 1: parameter whose instances are selected
    chain: Tuple[str, ...] = ()  # kind 2: category chain
    condition: Optional[Condition] = None  # kind 3
    instance: str = ""  # kind 4
    attribute: str = ""  # kinds 4 and 5
    value: Value = ""  # kind 5
    predicate: Optional[ContextPredicate] = None  # not
    arith_op: str = ""  # + | -
    operands: Tuple[ContextPredicate, ...] = ()  # arith


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<string>"[^"]*"|'[^']*')
      | (?P<op>->|>=|<=|!=|[=<>(),])
      | (?P<word>[^\s=<>!(),]+)
    )""",
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise QueryParseError("unreadable input", position=pos)
        if m.group("string") is not None:
            tokens.append((m.group("string")[1:-1], m.start("string"), True))
        elif m.group("op") is not None:
            tokens.append((m.group("op"), m.start("op"), False))
        elif m.group("word") is not None:
            tokens.append((m.group("word"), m.start("word"), False))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self):
        if self.index < len(self.tokens):
            return self.tokens[self.index][0]
        return None

    def peek_at(self, offset):
        i = self.index + offset
        if i < len(self.tokens):
            return self.tokens[i][0]
        return None

    def position(self) -> int:
        if self.index < len(self.tokens):
            return self.tokens[self.index][1]
        return len(self.text)

    def take(self, expected=None):
        if self.index >= len(self.tokens):
            raise QueryParseError(
                "unexpected end of query", position=len(self.text), expected=expected
            )
        token, pos, quoted = self.tokens[self.index]
        if expected is not None and token.upper() != expected.upper():
            raise QueryParseError(
                "expected %r, found %r" % (expected, token),
                position=pos,
                expected=expected,
            )
        self.index += 1
        return token

    def done(self):
        if self.index != len(self.tokens):
            raise QueryParseError(
                "trailing input", position=self.position(), expected="end of query"
            )

    def value(self) -> Value:
        if self.index >= len(self.tokens):
            raise QueryParseError(
                "expected a value", position=len(self.text), expected="value"
            )
        token, pos, quoted = self.tokens[self.index]
        self.index += 1
        if quoted:
            return token
        try:
            return int(token)
        except ValueError:
            pass
        try:
            return float(token)
        except ValueError:
            pass
        return token

    def predicate(self) -> ContextPredicate:
        category = self.take()
        self.take("(")
        subject = self.take()
        self.take(",")
        attribute = self.take()
        self.take(",")
        connector = self.take()
        self.take(",")
        value = self.value()
        self.take(")")
        return ContextPredicate(category, subject, attribute, connector, value)

    def condition(self) -> Condition:
        node = self.condition_term()
        children = [node]
        op = None
        while self.peek() in ("AND", "OR"):
            next_op = self.take().upper()
            if op is not None and next_op != op:
                raise QueryParseError(
                    "mixed AND/OR without parentheses",
                    position=self.position(),
                    expected=op,
                )
            op = next_op
            children.append(self.condition_term())
        if op is None:
            return node
        return Condition(op, tuple(children))

    def condition_term(self) -> Condition:
        if self.peek() == "(":
            self.take("(")
            inner = self.condition()
            self.take(")")
            return inner
        fieldname = self.take().lower()
        if fieldname not in ("attr", "param", "instance", "value"):
            raise QueryParseError(
                "unknown condition field %r" % (fieldname,),
                position=self.tokens[self.index - 1][1],
                expected="attr/param/instance/value",
            )
        name = ""
        if fieldname == "attr":
            name = self.take()
        cmp = self.take()
        if cmp not in ("=", "!=", ">", "<", ">=", "<="):
            raise QueryParseError(
                "unknown comparison %r" % (cmp,),
                position=self.tokens[self.index - 1][1],
                expected="comparison operator",
            )
        value = self.value()
        return Condition("leaf", field=fieldname, name=name, cmp=cmp, value=value)


def parse_query(text: str) -> Query:
    """Parse concrete query syntax into a :class:`Query` AST."""
    parser = _Parser(text)
    head = parser.peek()
    if head is None:
        raise QueryParseError("empty query", position=0, expected="AND/OR/NOT/ADD/SUB")
    head = head.upper()

    if head == "AND":
        parser.take("AND")
        if parser.peek() is not None and parser.peek().upper() == "CHAIN":
            parser.take("CHAIN")
            chain = [parser.take()]
            parser.take("->")
            chain.append(parser.take())
            while parser.peek() == "->":
                parser.take("->")
                chain.append(parser.take())
            parser.done()
            return Query("and_cross_category", chain=tuple(chain))
        category = parser.take()
        parser.take("WHERE")
        if (
            parser.peek() is not None
            and parser.peek().lower() == "parameter"
            and parser.peek_at(1) is not None
            and parser.peek_at(1).upper() == "INSTANCE_OF"
        ):
            parser.take()
            parser.take()
            target = parser.take()
            parser.done()
            return Query("and_by_parameter", category=category, target=target)
        condition = parser.condition()
        parser.done()
        return Query("and_conditional", category=category, condition=condition)

    if head == "OR":
        parser.take("OR")
        category = parser.take()
        parser.take("WHERE")
        first = parser.take().lower()
        if first == "instance":
            parser.take("=")
            instance = parser.take()
            parser.take("AND")
            parser.take("attribute")
            parser.take("=")
            attribute = parser.take()
            parser.done()
            return Query(
                "or_same_instance",
                category=category,
                instance=instance,
                attribute=attribute,
            )
        if first == "attribute":
            parser.take("=")
            attribute = parser.take()
            parser.take("AND")
            parser.take("value")
            parser.take("=")
            value = parser.value()
            parser.done()
            return Query(
                "or_same_value", category=category, attribute=attribute, value=value
            )
        raise QueryParseError(
            "expected 'instance' or 'attribute'",
            position=parser.tokens[parser.index - 1][1],
            expected="instance/attribute",
        )

    if head == "NOT":
        parser.take("NOT")
        pred = parser.predicate()
        parser.done()
        return Query("not", predicate=replace(pred, negated=not pred.negated))

    if head in ("ADD", "SUB"):
        parser.take(head)
        left = parser.predicate()
        if parser.peek() == ",":
            parser.take(",")
        right = parser.predicate()
        parser.done()
        op = "+" if head == "ADD" else "-"
        return Query("arith", arith_op=op, operands=(left, right))

    raise QueryParseError(
        "unknown query head %r" % (head,), position=0, expected="AND/OR/NOT/ADD/SUB"
    )


def format_query(q: Query) -> str:
    """Canonical concrete syntax for a query (round-trips through parse)."""
    if q.kind == "and_by_parameter":
        return "AND %s WHERE parameter INSTANCE_OF %s" % (q.category, q.target)
    if q.kind == "and_cross_category":
        return "AND CHAIN %s" % " -> ".join(q.chain)
    if q.kind == "and_conditional":
        return "AND %s WHERE %s" % (q.category, _format_condition(q.condition))
    if q.kind == "or_same_instance":
        return "OR %s WHERE instance = %s AND attribute = %s" % (
            q.category,
            q.instance,
            q.attribute,
        )
    if q.kind == "or_same_value":
        return "OR %s WHERE attribute = %s AND value = %s" % (
            q.category,
            q.attribute,
            _format_value(q.value),
        )
    if q.kind == "not":
        inner = replace(q.predicate, negated=False)
        return "NOT %s" % inner.render()
    if q.kind == "arith":
        head = "ADD" if q.arith_op == "+" else "SUB"
        return "%s %s, %s" % (head, q.operands[0].render(), q.operands[1].render())
    raise ValueError("unknown query kind %r" % (q.kind,))


def _format_value(v: Value) -> str:
    if isinstance(v, str) and re.search(r"[\s=<>!(),]", v):
        return '"%s"' % v
    return str(v)


def _format_condition(c: Condition) -> str:
    if c.op in ("AND", "OR"):
        joint = " %s " % c.op
        return joint.join("(%s)" % _format_condition(ch) for ch in c.children)
    if c.field == "attr":
        return "attr %s %s %s" % (c.name, c.cmp, _format_value(c.value))
    return "%s %s %s" % (c.field, c.cmp, _format_value(c.value))


def _category_matches(pred: ContextPredicate, category: str) -> bool:
    return pred.category.casefold() == category.casefold()


def evaluate(q: Query, cs: Sequence[ContextPredicate]) -> QueryResult:
    """Evaluate a query over the situation's predicate list.

    Result predicates keep the situation's declaration order; an empty
    selection yields NULL (except arithmetic, which errors on bad operands).
    """
    if q.kind == "and_by_parameter":
        chosen = [
            p
            for p in cs
            if _category_matches(p, q.category) and p.is_instance_of(q.target)
        ]
        return _joined("AND", chosen)

    if q.kind == "and_cross_category":
        chosen = _chain_participants(q.chain, cs)
        return _joined("AND", chosen)

    if q.kind == "and_conditional":
        chosen = [
            p
            for p in cs
            if _category_matches(p, q.category) and q.condition.holds(p)
        ]
        return _joined("AND", chosen)

    if q.kind == "or_same_instance":
        chosen = [
            p
            for p in cs
            if _category_matches(p, q.category)
            and values_equal(p.subject, q.instance)
            and values_equal(p.attribute, q.attribute)
        ]
        return _joined("OR", chosen)

    if q.kind == "or_same_value":
        chosen = [
            p
            for p in cs
            if _category_matches(p, q.category)
            and values_equal(p.attribute, q.attribute)
            and values_equal(p.value, q.value)
        ]
        return _joined("OR", chosen)

    if q.kind == "not":
        return QueryResult(None, (q.predicate,))

    if q.kind == "arith":
        return QueryResult(None, (apply_arith(q.arith_op, *q.operands),))

    raise ValueError("unknown query kind %r" % (q.kind,))


def _joined(op: str, predicates) -> QueryResult:
    if not predicates:
        return QueryResult.NULL
    return QueryResult(op, tuple(predicates))


def _chain_participants(chain, cs):
    """Predicates taking part in at least one complete category chain.

    A chain links predicates where the previous value equals the next
    subject. Chains longer than two links are supported but rarely useful.
    """
    stages = [
        [p for p in cs if _category_matches(p, cat)] for cat in chain
    ]
    # forward[i][p] = True if a partial chain from stage 0 reaches p
    forward = []
    for i, stage in enumerate(stages):
        marks = {}
        for p in stage:
            if i == 0:
                marks[id(p)] = True
            else:
                marks[id(p)] = any(
                    forward[i - 1][id(prev)]
                    and values_equal(prev.value, p.subject)
                    for prev in stages[i - 1]
                )
        forward.append(marks)
    backward = [None] * len(stages)
    for i in range(len(stages) - 1, -1, -1):
        marks = {}
        for p in stages[i]:
            if i == len(stages) - 1:
                marks[id(p)] = True
            else:
                marks[id(p)] = any(
                    backward[i + 1][id(nxt)]
                    and values_equal(p.value, nxt.subject)
                    for nxt in stages[i + 1]
                )
        backward[i] = marks
    participating = set()
    for i, stage in enumerate(stages):
        for p in stage:
            if forward[i][id(p)] and backward[i][id(p)]:
                participating.add(id(p))
    return [p for p in cs if id(p) in participating]


def apply_arith(
    op: str, left: ContextPredicate, right: ContextPredicate
) -> ContextPredicate:
    """Add or subtract two compatible numeric predicates.

    Operands must share category and subject and carry numeric values; the
    result keeps the first operand's attribute name.
    """
    for pred in (left, right):
        if isinstance(pred.value, bool) or not isinstance(pred.value, (int, float)):
            raise IncompatibleOperandsError(
                "non-numeric operand %s" % pred.render(), operand=pred.render()
            )
    if not values_equal(left.subject, right.subject) or not _category_matches(
        left, right.category
    ):
        raise IncompatibleOperandsError(
            "operands describe different parameters: %s vs %s"
            % (left.render(), right.render())
        )
    value = left.value + right.value if op == "+" else left.value - right.value
    return replace(left, value=value)
