"""Tests for the context predicate algebra and its query language."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxflow.errors import IncompatibleOperandsError, QueryParseError
from ctxflow.query import (
    Condition,
    ContextPredicate,
    Query,
    QueryResult,
    apply_arith,
    evaluate,
    format_query,
    parse_query,
)

from oracles import query_oracle


def pred(category, subject, attribute, value, connector="=", instance_of=None):
    return ContextPredicate(
        category=category,
        subject=subject,
        attribute=attribute,
        connector=connector,
        value=value,
        instance_of=instance_of,
    )


# The situation used throughout: two network operators, one weather report,
# one assistant with two attributes, two caregivers.
SITUATION = (
    pred("Resource", "BSNL_Network", "Connectivity", "Very Poor"),
    pred("Season", "Weather", "Status", "Rainy"),
    pred("Resource", "Reliance_Network", "Connectivity", "Average"),
    pred("Healthcare_Assistant", "Y", "Status", "Present"),
    pred("Healthcare_Assistant", "Y", "Working_Experience", "Good"),
    pred("Caregiver", "Z1", "Expertise", "Childcare", connector="In"),
    pred("Caregiver", "Z1", "Status", "Present"),
    pred("Caregiver", "Z2", "Expertise", "Arthritis", connector="In"),
    pred("Caregiver", "Z2", "Status", "Absent"),
)


class TestParsing:
    def test_and_by_parameter(self):
        q = parse_query("AND Resource WHERE parameter INSTANCE_OF Network")
        assert q.kind == "and_by_parameter"
        assert (q.category, q.target) == ("Resource", "Network")

    def test_and_chain(self):
        q = parse_query("AND CHAIN Patient -> Caregiver")
        assert q.kind == "and_cross_category"
        assert q.chain == ("Patient", "Caregiver")

    def test_and_conditional_with_nesting(self):
        q = parse_query(
            'AND Caregiver WHERE (attr Status = Present) AND (attr Expertise = Arthritis)'
        )
        assert q.kind == "and_conditional"
        assert q.condition.op == "AND"
        assert len(q.condition.children) == 2

    def test_or_same_instance(self):
        q = parse_query(
            "OR Resource WHERE instance = BSNL_Network AND attribute = Connectivity"
        )
        assert q.kind == "or_same_instance"
        assert (q.instance, q.attribute) == ("BSNL_Network", "Connectivity")

    def test_or_same_value(self):
        q = parse_query(
            'OR Resource WHERE attribute = Connectivity AND value = "Very Poor"'
        )
        assert q.kind == "or_same_value"
        assert q.value == "Very Poor"

    def test_not(self):
        q = parse_query("NOT Patient(X, Suffering, from, Malaria)")
        assert q.kind == "not"
        assert q.predicate.negated
        assert q.predicate.connector == "from"

    def test_arith(self):
        q = parse_query(
            "ADD Manpower(Healthcare_Assistant, Count, =, 10), "
            "Manpower(Healthcare_Assistant, Recruitment, =, 6)"
        )
        assert q.kind == "arith"
        assert q.arith_op == "+"
        assert q.operands[0].value == 10

    def test_error_reports_position_and_expectation(self):
        with pytest.raises(QueryParseError) as err:
            parse_query("AND Resource WHERE")
        assert err.value.position == len("AND Resource WHERE")

    def test_unknown_head(self):
        with pytest.raises(QueryParseError) as err:
            parse_query("MAYBE x")
        assert err.value.expected == "AND/OR/NOT/ADD/SUB"

    def test_mixed_and_or_needs_parentheses(self):
        with pytest.raises(QueryParseError):
            parse_query("AND C WHERE attr a = 1 AND attr b = 2 OR attr c = 3")

    def test_trailing_garbage(self):
        with pytest.raises(QueryParseError):
            parse_query("NOT Patient(X, Suffering, from, Malaria) extra")

    def test_empty_query(self):
        with pytest.raises(QueryParseError):
            parse_query("   ")


class TestFormatting:
    ROUND_TRIPS = [
        "AND Resource WHERE parameter INSTANCE_OF Network",
        "AND CHAIN Patient -> Caregiver -> Hospital",
        "OR Resource WHERE instance = BSNL_Network AND attribute = Connectivity",
        'OR Resource WHERE attribute = Connectivity AND value = "Very Poor"',
        "NOT Patient(X, Suffering, from, Malaria)",
        "ADD Manpower(HA, Count, =, 10), Manpower(HA, Recruitment, =, 6)",
    ]

    @pytest.mark.parametrize("text", ROUND_TRIPS)
    def test_round_trip(self, text):
        q = parse_query(text)
        assert parse_query(format_query(q)) == q


class TestEvaluation:
    def test_instances_of_network_parameter(self):
        q = parse_query("AND Resource WHERE parameter INSTANCE_OF Network")
        out = evaluate(q, SITUATION)
        assert out.op == "AND"
        assert [p.subject for p in out.predicates] == [
            "BSNL_Network",
            "Reliance_Network",
        ]
        assert out.render() == (
            "Resource(BSNL_Network, Connectivity, =, Very Poor)"
            " AND Resource(Reliance_Network, Connectivity, =, Average)"
        )

    def test_present_arthritis_caregiver_is_null(self):
        q = parse_query(
            "AND Caregiver WHERE (attr Status = Present)"
            " AND (attr Expertise = Arthritis)"
        )
        out = evaluate(q, SITUATION)
        assert out.is_null
        assert out.render() == "NULL"

    def test_conditional_single_leaf(self):
        q = parse_query("AND Caregiver WHERE attr Status = Present")
        out = evaluate(q, SITUATION)
        assert [p.subject for p in out.predicates] == ["Z1"]

    def test_or_same_instance_selects_values(self):
        extra = SITUATION + (
            pred("Resource", "BSNL_Network", "Connectivity", "No"),
        )
        q = parse_query(
            "OR Resource WHERE instance = BSNL_Network AND attribute = Connectivity"
        )
        out = evaluate(q, extra)
        assert out.op == "OR"
        assert [p.value for p in out.predicates] == ["Very Poor", "No"]

    def test_or_same_value_selects_instances(self):
        extra = SITUATION + (
            pred("Resource", "Reliance_Network", "Connectivity", "Very Poor"),
        )
        q = parse_query(
            'OR Resource WHERE attribute = Connectivity AND value = "Very Poor"'
        )
        out = evaluate(q, extra)
        assert [p.subject for p in out.predicates] == [
            "BSNL_Network",
            "Reliance_Network",
        ]

    def test_chain_links_value_to_subject(self):
        cs = (
            pred("Patient", "X", "Assigned_To", "Z1"),
            pred("Caregiver", "Z1", "Status", "Present"),
            pred("Caregiver", "Z2", "Status", "Absent"),
        )
        q = parse_query("AND CHAIN Patient -> Caregiver")
        out = evaluate(q, cs)
        assert [p.subject for p in out.predicates] == ["X", "Z1"]

    def test_chain_without_complete_path_is_null(self):
        cs = (
            pred("Patient", "X", "Assigned_To", "Z9"),
            pred("Caregiver", "Z1", "Status", "Present"),
        )
        q = parse_query("AND CHAIN Patient -> Caregiver")
        assert evaluate(q, cs).is_null

    def test_manpower_addition(self):
        q = parse_query(
            "ADD Manpower(Healthcare_Assistant, Count, =, 10), "
            "Manpower(Healthcare_Assistant, Recruitment, =, 6)"
        )
        out = evaluate(q, ())
        assert out.predicates[0].value == 16
        assert out.predicates[0].attribute == "Count"
        assert out.render() == "Manpower(Healthcare_Assistant, Count, =, 16)"

    def test_subtraction(self):
        q = parse_query("SUB Manpower(HA, Count, =, 10), Manpower(HA, Leavers, =, 4)")
        assert evaluate(q, ()).predicates[0].value == 6

    def test_negation_round_trips(self):
        text = "NOT Patient(X, Suffering, from, Malaria)"
        q = parse_query(text)
        out = evaluate(q, SITUATION)
        assert out.render() == text
        assert parse_query(format_query(q)) == q


class TestArithCompatibility:
    def test_non_numeric_operand_rejected(self):
        with pytest.raises(IncompatibleOperandsError):
            apply_arith(
                "+",
                pred("M", "HA", "Count", "ten"),
                pred("M", "HA", "Count", 5),
            )

    def test_bool_operand_rejected(self):
        with pytest.raises(IncompatibleOperandsError):
            apply_arith("+", pred("M", "HA", "Count", True), pred("M", "HA", "Count", 1))

    def test_different_subjects_rejected(self):
        with pytest.raises(IncompatibleOperandsError):
            apply_arith(
                "+", pred("M", "HA", "Count", 1), pred("M", "Nurse", "Count", 1)
            )

    def test_different_categories_rejected(self):
        with pytest.raises(IncompatibleOperandsError):
            apply_arith(
                "+", pred("M", "HA", "Count", 1), pred("Other", "HA", "Count", 1)
            )

    def test_different_attributes_same_subject_allowed(self):
        out = apply_arith(
            "+", pred("M", "HA", "Count", 10), pred("M", "HA", "Recruitment", 6)
        )
        assert out.value == 16


CATEGORIES = ("Resource", "Caregiver", "Season")
SUBJECTS = ("BSNL_Network", "Reliance_Network", "Z1", "Z2", "Weather")
ATTRS = ("Connectivity", "Status", "Expertise")
VALUES = ("Very Poor", "Average", "Present", "Absent", 3)

predicates = st.builds(
    pred,
    category=st.sampled_from(CATEGORIES),
    subject=st.sampled_from(SUBJECTS),
    attribute=st.sampled_from(ATTRS),
    value=st.sampled_from(VALUES),
)

queries = st.one_of(
    st.builds(
        lambda c, t: Query("and_by_parameter", category=c, target=t),
        st.sampled_from(CATEGORIES),
        st.sampled_from(("Network", "Z1", "Weather")),
    ),
    st.builds(
        lambda chain: Query("and_cross_category", chain=chain),
        st.tuples(st.sampled_from(CATEGORIES), st.sampled_from(CATEGORIES)),
    ),
    st.builds(
        lambda c, a, v: Query(
            "and_conditional",
            category=c,
            condition=Condition("leaf", field="attr", name=a, cmp="=", value=v),
        ),
        st.sampled_from(CATEGORIES),
        st.sampled_from(ATTRS),
        st.sampled_from(VALUES),
    ),
    st.builds(
        lambda c, i, a: Query("or_same_instance", category=c, instance=i, attribute=a),
        st.sampled_from(CATEGORIES),
        st.sampled_from(SUBJECTS),
        st.sampled_from(ATTRS),
    ),
    st.builds(
        lambda c, a, v: Query("or_same_value", category=c, attribute=a, value=v),
        st.sampled_from(CATEGORIES),
        st.sampled_from(ATTRS),
        st.sampled_from(VALUES),
    ),
)


@given(q=queries, cs=st.lists(predicates, max_size=8))
@settings(max_examples=300)
def test_evaluator_matches_subset_oracle(q, cs):
    got = evaluate(q, cs)
    expected = query_oracle(q, cs)
    assert list(got.predicates) == expected


def test_null_result_is_shared_sentinel():
    q = parse_query("AND Resource WHERE parameter INSTANCE_OF Network")
    assert evaluate(q, ()) is QueryResult.NULL
