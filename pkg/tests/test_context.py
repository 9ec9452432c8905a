"""Tests for the context algebra: atomic contexts, situations, states, diff."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxflow.context import (
    AtomicContext,
    ContextState,
    ContextVector,
    ContextualSituation,
    ScopeFilter,
    catch_context,
    diff,
    normalize_value,
    values_equal,
)
from ctxflow.errors import ScopeMismatchError

from oracles import diff_oracle


def ctx(parameter, attribute, value, **kw):
    return AtomicContext(parameter=parameter, attribute=attribute, value=value, **kw)


class TestAtomicContext:
    def test_qualified_name(self):
        assert ctx("Weather", "Status", "Sunny").qualified == "Weather.Status"

    def test_key_includes_instance(self):
        a = ctx("Network", "Connectivity", "Poor", instance="BSNL_Network")
        b = ctx("Network", "Connectivity", "Poor", instance="Reliance_Network")
        assert a.key != b.key

    def test_rejects_unknown_connector(self):
        with pytest.raises(ValueError):
            ctx("Weather", "Status", "Sunny", connector="~")

    def test_rejects_empty_parameter(self):
        with pytest.raises(ValueError):
            ctx("", "Status", "Sunny")

    def test_rejects_unknown_category(self):
        with pytest.raises(ValueError):
            ctx("Weather", "Status", "Sunny", category="weird")


class TestValueNormalization:
    def test_strings_casefold_and_strip(self):
        assert values_equal("  Rainy ", "rainy")

    def test_numbers_compare_numerically(self):
        assert values_equal(16, 16.0)

    def test_bool_is_not_number(self):
        assert normalize_value(True) != normalize_value(1)


class TestContextVector:
    def test_duplicate_keys_rejected(self):
        a = ctx("Weather", "Status", "Sunny")
        with pytest.raises(ValueError):
            ContextVector((a, a), timestamp=0)

    def test_distinct_instances_allowed(self):
        pair = (
            ctx("Network", "Connectivity", "Poor", instance="BSNL_Network"),
            ctx("Network", "Connectivity", "Average", instance="Reliance_Network"),
        )
        assert len(ContextVector(pair, timestamp=0).contexts) == 2


class TestContextualSituation:
    def test_from_contexts_collects_parameters_once(self):
        cs = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "Rainy"), ctx("Weather", "Wind", "High")],
            timestamp=5,
        )
        assert cs.parameters == ("Weather",)
        assert cs.attributes == ("Weather.Status", "Weather.Wind")

    def test_static_contexts_rejected(self):
        with pytest.raises(ValueError):
            ContextualSituation.from_contexts(
                [ctx("Kiosk", "Location", "Village", temporality="static")],
                timestamp=0,
            )


class TestScopeFilter:
    def test_restrict_drops_outside_contexts(self):
        scope = ScopeFilter("A", frozenset({"Weather"}), frozenset())
        cs = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "Rainy"), ctx("Patient", "Condition", "Serious")],
            timestamp=1,
        )
        restricted = scope.restrict(cs)
        assert restricted.parameters == ("Weather",)

    def test_covers_by_qualified_attribute(self):
        scope = ScopeFilter("A", frozenset(), frozenset({"Watch.Time"}))
        assert scope.covers(ctx("Watch", "Time", "11:00"))
        assert not scope.covers(ctx("Watch", "Brand", "X"))


class TestDiff:
    def old_state(self):
        return ContextState.initial(
            "Storage in Cloud",
            [
                ctx("Weather", "Status", "Sunny"),
                ctx("Watch", "Time", "10.30 am"),
                ctx("Healthcare_Employee", "Status", "Present"),
            ],
            timestamp=630,
        )

    def test_not_newer_returns_old_identically(self):
        old = self.old_state()
        new = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "Rainy")], timestamp=630
        )
        assert diff(new, old) is old

    def test_no_change_returns_old_identically(self):
        old = self.old_state()
        new = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "sunny")], timestamp=700
        )
        assert diff(new, old) is old

    def test_weather_change_set(self):
        # The 10:30 -> 11:00 rain onset: both known parameters report
        # changed attribute values; the absent employee parameter is only
        # annotated as removed.
        old = self.old_state()
        new = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "Rainy"), ctx("Watch", "Time", "11.00 am")],
            timestamp=660,
        )
        out = diff(new, old)
        assert out.parameters == ("Weather", "Watch")
        assert out.attributes == ("Weather.Status", "Watch.Time")
        assert out.bindings["Weather.Status"].value == "Rainy"
        assert out.bindings["Watch.Time"].value == "11.00 am"
        assert out.timestamp == 660
        assert out.removed_parameters == ("Healthcare_Employee",)
        assert out.activity_id == "Storage in Cloud"

    def test_new_parameter_is_added_without_value_comparison(self):
        old = self.old_state()
        new = ContextualSituation.from_contexts(
            [ctx("Ambulance", "Availability", "Ready")], timestamp=700
        )
        out = diff(new, old)
        assert out.parameters == ("Ambulance",)
        # Attributes list only changed values of known parameters.
        assert out.attributes == ()
        assert "Ambulance.Availability" in out.bindings

    def test_matches_classification_oracle_on_examples(self):
        old = self.old_state()
        new = ContextualSituation.from_contexts(
            [
                ctx("Weather", "Status", "Rainy"),
                ctx("Watch", "Time", "10.30 am"),
                ctx("Ambulance", "Availability", "Ready"),
            ],
            timestamp=700,
        )
        out = diff(new, old)
        expected = diff_oracle(new, old)
        assert expected is not None
        assert out.parameters == expected["parameters"]
        assert out.attributes == expected["attributes"]
        assert out.removed_parameters == expected["removed"]


PARAMS = ("Weather", "Watch", "Patient", "Network")
ATTRS = ("Status", "Time", "Level")
VALUES = ("A", "B", "C", 1, 2)


@st.composite
def situations(draw, timestamp):
    pairs = draw(
        st.lists(
            st.tuples(
                st.sampled_from(PARAMS),
                st.sampled_from(ATTRS),
                st.sampled_from(VALUES),
            ),
            max_size=6,
            unique_by=lambda t: (t[0], t[1]),
        )
    )
    contexts = [ctx(p, a, v) for p, a, v in pairs]
    return ContextualSituation.from_contexts(contexts, draw(timestamp))


@given(
    old=situations(st.integers(0, 5)),
    new=situations(st.integers(0, 10)),
)
@settings(max_examples=200)
def test_diff_matches_oracle(old, new):
    state = ContextState(
        parameters=old.parameters,
        attributes=old.attributes,
        timestamp=old.timestamp,
        bindings=old.bindings,
        activity_id="A",
    )
    out = diff(new, state)
    expected = diff_oracle(new, state)
    if expected is None:
        assert out is state
    else:
        assert out.parameters == expected["parameters"]
        assert out.attributes == expected["attributes"]
        assert out.removed_parameters == expected["removed"]
        assert out.timestamp == expected["timestamp"]


class TestCatchContext:
    def test_scope_mismatch_raises(self):
        state = ContextState.initial("A", [], timestamp=0)
        scope = ScopeFilter("B", frozenset(), frozenset())
        cs = ContextualSituation.from_contexts([], timestamp=1)
        with pytest.raises(ScopeMismatchError):
            catch_context(cs, state, scope)

    def test_out_of_scope_situation_leaves_state_untouched(self):
        state = ContextState.initial(
            "Patient Registration",
            [ctx("Healthcare_Employee", "Status", "Present")],
            timestamp=630,
        )
        scope = ScopeFilter(
            "Patient Registration",
            frozenset({"Healthcare_Employee"}),
            frozenset(),
        )
        rain = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "Rainy"), ctx("Watch", "Time", "11.00 am")],
            timestamp=660,
        )
        assert catch_context(rain, state, scope) is state

    def test_in_scope_change_replaces_state(self):
        state = ContextState.initial(
            "Storage in Cloud", [ctx("Weather", "Status", "Sunny")], timestamp=630
        )
        scope = ScopeFilter("Storage in Cloud", frozenset({"Weather"}), frozenset())
        rain = ContextualSituation.from_contexts(
            [ctx("Weather", "Status", "Rainy"), ctx("Patient", "Condition", "OK")],
            timestamp=660,
        )
        out = catch_context(rain, state, scope)
        assert out is not state
        assert out.attributes == ("Weather.Status",)
