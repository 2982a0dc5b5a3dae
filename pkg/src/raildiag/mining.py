"""Burst denoising and LCSS mining of recurrent ordered event sets.

Chatty sensors can repeat one code hundreds of times in minutes, so sequences
are first collapsed to runs of distinct codes. Recurrent sets are then found
per class by pairwise longest-common-subsequence over the class's traces; a
candidate survives if it is an ordered subsequence (gaps allowed) of enough
distinct traces of that class. The surviving sets, next to all singleton
codes, are the classifier vocabulary and double as human-readable incident
scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import SubsystemClass

DEFAULT_MAX_LEN = 5
DEFAULT_MIN_SUPPORT = 5


@dataclass(frozen=True)
class EventSetFeature:
    """A singleton code or a mined ordered code sequence used as a feature."""

    codes: tuple[str, ...]
    origin: str  # "singleton" | "mined"
    support: dict[SubsystemClass, int] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.codes:
            raise ValueError("feature needs at least one code")
        if self.origin == "mined" and len(self.codes) < 2:
            raise ValueError("mined features have length >= 2")
        if self.origin == "singleton" and len(self.codes) != 1:
            raise ValueError("singleton features have length 1")

    @property
    def total_support(self) -> int:
        return sum(self.support.values())

    def to_record(self) -> dict:
        return {
            "codes": list(self.codes),
            "origin": self.origin,
            "length": len(self.codes),
            "support": {cls.value: n for cls, n in sorted(
                self.support.items(), key=lambda kv: kv[0].value)},
            "total_support": self.total_support,
        }

    @classmethod
    def from_record(cls, payload: dict) -> "EventSetFeature":
        return cls(
            codes=tuple(payload["codes"]),
            origin=payload["origin"],
            support={
                SubsystemClass(name): int(n)
                for name, n in payload.get("support", {}).items()
            },
        )


def denoise(codes: Sequence[str]) -> list[str]:
    """Collapse maximal runs of consecutive identical codes to one occurrence."""
    out: list[str] = []
    for code in codes:
        if not out or out[-1] != code:
            out.append(code)
    return out


def is_subsequence(needle: Sequence[str], haystack: Sequence[str]) -> bool:
    """Order-preserving containment with gaps allowed."""
    it = iter(haystack)
    return all(any(code == h for h in it) for code in needle)


def lcss(a: Sequence[str], b: Sequence[str]) -> list[str]:
    """A longest common subsequence of two denoised code lists.

    Among equal-length solutions, returns the one whose matched positions in
    ``a`` are lexicographically smallest, so the result is deterministic.
    Classic dynamic program, O(len(a) * len(b)).
    """
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        return []
    # dp[i][j] = LCS length of a[i:] and b[j:]
    dp = [[0] * (nb + 1) for _ in range(na + 1)]
    for i in range(na - 1, -1, -1):
        row, below = dp[i], dp[i + 1]
        ai = a[i]
        for j in range(nb - 1, -1, -1):
            if ai == b[j]:
                row[j] = below[j + 1] + 1
            else:
                down, right = below[j], row[j + 1]
                row[j] = down if down >= right else right
    out: list[str] = []
    i = j = 0
    remaining = dp[0][0]
    while remaining > 0:
        matched = False
        if dp[i][j] == remaining:
            target = a[i]
            for j2 in range(j, nb):
                if b[j2] == target and dp[i + 1][j2 + 1] == remaining - 1:
                    out.append(target)
                    i += 1
                    j = j2 + 1
                    remaining -= 1
                    matched = True
                    break
        if not matched:
            i += 1
    return out


def restrict_traces(
    traces: Iterable[tuple[SubsystemClass, Sequence[str]]],
    allowed_codes: Iterable[str],
) -> list[tuple[SubsystemClass, list[str]]]:
    """Keep only selected codes, re-denoising runs the restriction exposes."""
    allowed = set(allowed_codes)
    return [
        (label, denoise([c for c in codes if c in allowed]))
        for label, codes in traces
    ]


def mine_recurrent_sets(
    traces: Sequence[tuple[SubsystemClass, Sequence[str]]],
    max_len: int = DEFAULT_MAX_LEN,
    min_support: int = DEFAULT_MIN_SUPPORT,
) -> list[EventSetFeature]:
    """Mine per-class recurrent ordered sets and attach singleton features.

    ``traces`` are (label, denoised restricted code list) pairs. Candidates
    come from pairwise LCSS inside each class, truncated to their first
    ``max_len`` codes; a candidate is kept when it is a subsequence of at
    least ``min_support`` distinct traces of that class. Result is sorted by
    (length desc, total support desc, codes), mined sets deduplicated across
    classes, singletons emitted for every code present in any trace.
    """
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    if min_support < 2:
        raise ValueError("min_support must be at least 2")

    by_class: dict[SubsystemClass, list[tuple[str, ...]]] = {}
    for label, codes in traces:
        by_class.setdefault(label, []).append(tuple(codes))

    candidates: set[tuple[str, ...]] = set()
    per_class_candidates: dict[SubsystemClass, set[tuple[str, ...]]] = {}
    for label, class_traces in by_class.items():
        found: set[tuple[str, ...]] = set()
        distinct = sorted(set(class_traces))
        memo: dict[tuple[tuple[str, ...], tuple[str, ...]], tuple[str, ...]] = {}
        for x in range(len(distinct)):
            for y in range(x + 1, len(distinct)):
                key = (distinct[x], distinct[y])
                common = memo.get(key)
                if common is None:
                    common = tuple(lcss(distinct[x], distinct[y])[:max_len])
                    memo[key] = common
                if len(common) >= 2:
                    found.add(common)
        per_class_candidates[label] = found
        candidates.update(found)

    # Support counting by direct recount over every trace, across all classes.
    supports: dict[tuple[str, ...], dict[SubsystemClass, int]] = {
        c: {} for c in candidates
    }
    singleton_support: dict[str, dict[SubsystemClass, int]] = {}
    for label, codes in traces:
        code_set = set(codes)
        for code in code_set:
            bucket = singleton_support.setdefault(code, {})
            bucket[label] = bucket.get(label, 0) + 1
        for candidate in candidates:
            if all(c in code_set for c in candidate) and is_subsequence(candidate, codes):
                bucket = supports[candidate]
                bucket[label] = bucket.get(label, 0) + 1

    features: list[EventSetFeature] = []
    emitted: set[tuple[str, ...]] = set()
    for label, found in sorted(per_class_candidates.items(), key=lambda kv: kv[0].value):
        for candidate in found:
            if candidate in emitted:
                continue
            if supports[candidate].get(label, 0) >= min_support:
                emitted.add(candidate)
                features.append(
                    EventSetFeature(
                        codes=candidate, origin="mined", support=supports[candidate]
                    )
                )
    for code in sorted(singleton_support):
        features.append(
            EventSetFeature(
                codes=(code,), origin="singleton", support=singleton_support[code]
            )
        )
    features.sort(key=lambda f: (-len(f.codes), -f.total_support, f.codes))
    return features


def match_features(
    window_codes: Sequence[str], features: Sequence[EventSetFeature]
) -> set[EventSetFeature]:
    """Features whose code list is a subsequence of the window; Bernoulli presence."""
    matcher = FeatureMatcher(features)
    present = matcher.match(window_codes)
    return {features[i] for i in present}


class FeatureMatcher:
    """Index-backed subsequence matcher over a fixed feature vocabulary.

    Features are triggered by their first code and prefiltered by set
    inclusion, so matching a window costs roughly O(distinct window codes +
    positional scans for the few candidates that survive).
    """

    def __init__(self, features: Sequence[EventSetFeature]):
        self.features = tuple(features)
        self._singletons: dict[str, int] = {}
        self._by_trigger: dict[str, list[tuple[int, tuple[str, ...], frozenset[str]]]] = {}
        for fid, feature in enumerate(self.features):
            if len(feature.codes) == 1:
                self._singletons[feature.codes[0]] = fid
            else:
                entry = (fid, feature.codes, frozenset(feature.codes))
                self._by_trigger.setdefault(feature.codes[0], []).append(entry)

    def match(self, window_codes: Sequence[str]) -> frozenset[int]:
        """Present feature ids (indices into the vocabulary order)."""
        window_set = set(window_codes)
        present: set[int] = set()
        for code in window_set:
            fid = self._singletons.get(code)
            if fid is not None:
                present.add(fid)
            for fid, codes, code_set in self._by_trigger.get(code, ()):
                if code_set <= window_set and is_subsequence(codes, window_codes):
                    present.add(fid)
        return frozenset(present)
