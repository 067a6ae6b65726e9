"""Step verification: exact and soft (edit-distance) action matching."""

from __future__ import annotations

from specplan.engine.types import MatchKind, MatchPolicy, Step


def edit_distance(s1: str, s2: str) -> int:
    """Character-level Levenshtein distance with unit edit costs."""
    if s1 == s2:
        return 0
    if not s1:
        return len(s2)
    if not s2:
        return len(s1)
    if len(s2) > len(s1):
        s1, s2 = s2, s1
    previous = list(range(len(s2) + 1))
    for i, c1 in enumerate(s1, start=1):
        current = [i]
        for j, c2 in enumerate(s2, start=1):
            cost = 0 if c1 == c2 else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def normalized_edit_distance(s1: str, s2: str) -> float:
    """Edit distance divided by the longer length; 0.0 when both are empty."""
    longest = max(len(s1), len(s2))
    if longest == 0:
        return 0.0
    return edit_distance(s1, s2) / longest


def split_action(content: str) -> tuple[str, str | None]:
    """Split "Name[params]" into (name, params); no "[" means all-name.

    A trailing "]" belongs to the bracket syntax and is stripped from params.
    """
    head, bracket, tail = content.partition("[")
    if not bracket:
        return content.strip(), None
    if tail.endswith("]"):
        tail = tail[:-1]
    return head.strip(), tail


def verify_step(a: Step, t: Step, policy: MatchPolicy) -> bool:
    """Does the approximation step match the target step under the policy?"""
    if a.index != t.index:
        raise ValueError(f"verify_step requires equal indices, got {a.index} and {t.index}")
    a_text = a.content.strip()
    t_text = t.content.strip()
    if policy.kind is MatchKind.EXACT:
        return a_text == t_text
    a_name, a_params = split_action(a_text)
    t_name, t_params = split_action(t_text)
    if policy.function_name_exact and a_name != t_name:
        return False
    if a_params is None and t_params is None:
        return a_name == t_name
    return normalized_edit_distance(a_params or "", t_params or "") < policy.threshold


def is_terminate(content: str, terminate_token: str) -> bool:
    """Case-insensitive, whitespace-trimmed sentinel comparison."""
    return content.strip().lower() == terminate_token.strip().lower()
