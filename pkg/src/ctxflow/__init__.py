"""Executable engine for context-aware business process models.

Diffs streams of contextual information into per-activity context states,
evaluates a three-level context graph with dependency rules, selects process
fragments, rewrites the activity chain through five adaptation strategies,
and verifies the adapted model by exhaustive state-space analysis of a
generated colored-token net.
"""

from .context import (
    AtomicContext,
    ContextState,
    ContextVector,
    ContextualSituation,
    ScopeFilter,
    catch_context,
    diff,
)
from .chain import (
    ActivityChain,
    ActivityNode,
    AdaptationRule,
    Action,
    ProcessModel,
    run_instance,
)
from .fragments import FragmentRepository, ProcessFragment, throw_activity
from .graph import ContextGraph, validate_graph

__version__ = "0.1.0"

__all__ = [
    "AtomicContext",
    "ContextVector",
    "ContextualSituation",
    "ContextState",
    "ScopeFilter",
    "diff",
    "catch_context",
    "ActivityChain",
    "ActivityNode",
    "Action",
    "AdaptationRule",
    "ProcessModel",
    "run_instance",
    "FragmentRepository",
    "ProcessFragment",
    "throw_activity",
    "ContextGraph",
    "validate_graph",
    "__version__",
]
