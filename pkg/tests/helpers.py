"""Tiny constructors shared across test modules."""

from __future__ import annotations

from ecrkit.cluster import ClusterSet
from ecrkit.pairing import DiscourseWindow, Label, MentionPair


def make_window(trigger: str, lemma: str | None = None, center: str | None = None,
                mention_id: str = "m", prefix: tuple[str, ...] = (),
                suffix: tuple[str, ...] = (), w: int = 2) -> DiscourseWindow:
    if center is None:
        center = f"Something {trigger} happened here."
    pos = center.lower().find(trigger.lower())
    assert pos >= 0, f"center must contain trigger: {trigger!r}"
    return DiscourseWindow(
        mention_id=mention_id,
        prefix=prefix,
        center=center,
        suffix=suffix,
        w=w,
        trigger=trigger,
        head_lemma=lemma if lemma is not None else trigger.lower(),
        trigger_span=(pos, pos + len(trigger)),
    )


def make_simple_pair(trigger_a: str, trigger_b: str, label: Label,
                     lemma_a: str | None = None, lemma_b: str | None = None,
                     pair_id: str = "a__b") -> MentionPair:
    return MentionPair(
        first=make_window(trigger_a, lemma_a, mention_id="a"),
        second=make_window(trigger_b, lemma_b, mention_id="b"),
        label=label,
        pair_id=pair_id,
    )


def cs(*clusters: tuple[str, ...] | list[str] | set[str]) -> ClusterSet:
    return ClusterSet.from_clusters([frozenset(c) for c in clusters])
