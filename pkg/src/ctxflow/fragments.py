"""Process-fragment repository keyed by (sub-goal, composite value).

The repository mirrors the tabular layout used at design time: an indexed
sub-goal list, each sub-goal carrying value-pattern -> fragment rows, plus
the fragment definitions themselves. Lookup is a linear scan of one
sub-goal's rows; the repository is immutable after load.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

from .errors import AmbiguousEntryError, LoadError, UnknownSubgoalError
from .graph import CompositeValue, composite_from_pairs


@dataclass(frozen=True)
class FragmentActivity:
    name: str
    sub_goal: str = ""
    role: str = ""
    medium: str = ""


@dataclass(frozen=True)
class ProcessFragment:
    id: str
    activities: Tuple[FragmentActivity, ...]

    def __post_init__(self):
        if not self.activities:
            raise ValueError("fragment %r has no activities" % (self.id,))


@dataclass(frozen=True)
class SubgoalEntry:
    index: int  # 1-based; sub-goal K corresponds to activity K
    name: str
    rows: Tuple[Tuple[CompositeValue, str], ...] = ()


@dataclass(frozen=True)
class FragmentRepository:
    subgoals: Tuple[SubgoalEntry, ...]
    fragments: Mapping[str, ProcessFragment]

    def subgoal(self, key) -> SubgoalEntry:
        for entry in self.subgoals:
            if entry.name == key or entry.index == key:
                return entry
        raise UnknownSubgoalError("sub-goal %r not in repository" % (key,), subgoal=key)


@dataclass(frozen=True)
class ThrowResult:
    value: CompositeValue
    fragment: Optional[ProcessFragment]
    comparisons: int


def throw_activity(
    repo: FragmentRepository, subgoal, value: CompositeValue
) -> ThrowResult:
    """Select the fragment stored for ``(subgoal, value)``, if any.

    Scans the sub-goal's rows in declaration order and returns on the first
    pattern matching the normalized composite value; no match yields a NULL
    fragment. ``comparisons`` reports how many patterns were inspected.
    """
    entry = repo.subgoal(subgoal)
    comparisons = 0
    for pattern, fragment_id in entry.rows:
        comparisons += 1
        if pattern.matches(value):
            return ThrowResult(value, repo.fragments[fragment_id], comparisons)
    return ThrowResult(value, None, comparisons)


def load_repository(document: dict) -> FragmentRepository:
    """Build a repository from its parsed document, validating invariants."""
    if not isinstance(document, dict):
        raise LoadError("repository document must be a mapping")

    fragments = {}
    for spec in document.get("fragments", []):
        frag = ProcessFragment(
            id=spec["id"],
            activities=tuple(
                FragmentActivity(
                    name=a["name"],
                    sub_goal=a.get("sub_goal", ""),
                    role=a.get("role", ""),
                    medium=a.get("medium", ""),
                )
                for a in spec["activities"]
            ),
        )
        if frag.id in fragments:
            raise LoadError("duplicate fragment id %r" % (frag.id,))
        fragments[frag.id] = frag

    subgoals = []
    for position, spec in enumerate(document.get("subgoals", []), start=1):
        rows = []
        seen = set()
        for row in spec.get("entries", []):
            pattern = composite_from_pairs(row["value"], row.get("op", "AND"))
            key = pattern.normalized()
            if key in seen:
                raise AmbiguousEntryError(
                    "duplicate value pattern under sub-goal %r" % (spec["name"],),
                    subgoal=spec["name"],
                )
            seen.add(key)
            fragment_id = row["fragment"]
            if fragment_id not in fragments:
                raise LoadError(
                    "sub-goal %r references unknown fragment %r"
                    % (spec["name"], fragment_id)
                )
            rows.append((pattern, fragment_id))
        used = [fid for _, fid in rows]
        if len(used) != len(set(used)):
            raise AmbiguousEntryError(
                "fragment mapped by two value patterns under sub-goal %r"
                % (spec["name"],),
                subgoal=spec["name"],
            )
        subgoals.append(
            SubgoalEntry(
                index=spec.get("index", position),
                name=spec["name"],
                rows=tuple(rows),
            )
        )

    return FragmentRepository(tuple(subgoals), fragments)


def store_repository(repo: FragmentRepository) -> dict:
    """Serialize back to the canonical document form (round-trips load)."""
    return {
        "subgoals": [
            {
                "index": entry.index,
                "name": entry.name,
                "entries": [
                    {
                        "op": pattern.op,
                        "value": [[attr, value] for attr, value in pattern.pairs],
                        "fragment": fragment_id,
                    }
                    for pattern, fragment_id in entry.rows
                ],
            }
            for entry in repo.subgoals
        ],
        "fragments": [
            {
                "id": frag.id,
                "activities": [
                    {
                        "name": a.name,
                        "sub_goal": a.sub_goal,
                        "role": a.role,
                        "medium": a.medium,
                    }
                    for a in frag.activities
                ],
            }
            for frag in repo.fragments.values()
        ],
    }
