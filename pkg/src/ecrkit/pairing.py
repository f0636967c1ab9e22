"""Build discourse windows and K-nearest mention-pair datasets.

Every mention is represented by a discourse window of at most 2w+1
sentences: up to w prefix sentences, the mention sentence itself, and up to
w suffix sentences, truncated silently at document boundaries. Pairs are
built by retrieving, for each anchor mention, its K most similar mentions
under a pluggable similarity function, scoped to the anchor's topic by
default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, NamedTuple

from .corpus import Corpus, Mention
from .errors import NotFoundError

DEFAULT_WINDOW_RADIUS = 2

# Minimal English stopword list used by the built-in content-token overlap
# similarity. Deliberately small: only determiners, pronouns, conjunctions,
# auxiliaries and high-frequency prepositions.
STOPWORDS = frozenset("""
a about above after again all am an and any are as at be because been before
being below between both but by did do does doing down during each few for
from further had has have having he her here hers him his how i if in into is
it its itself just me more most my no nor not now of off on once only or
other our out over own s same she should so some such t than that the their
theirs them then there these they this those through to too under until up
very was we were what when where which while who whom why will with you your
""".split())


class Label(str, Enum):
    COREF = "coref"
    NOT_COREF = "not_coref"

    def flipped(self) -> "Label":
        return Label.NOT_COREF if self is Label.COREF else Label.COREF


@dataclass(frozen=True)
class DiscourseWindow:
    """Up to 2w+1 sentences of discourse context around one mention.

    ``trigger_span`` is the character span of the trigger inside ``center``.
    Prefix and suffix entries are sentence strings; windows built from a
    corpus carry one sentence per entry, generated windows may carry a
    single multi-sentence block.
    """

    mention_id: str
    prefix: tuple[str, ...]
    center: str
    suffix: tuple[str, ...]
    w: int
    trigger: str
    head_lemma: str
    trigger_span: tuple[int, int]

    def __post_init__(self):
        if self.w < 0:
            raise ValueError("window radius must be >= 0")
        if len(self.prefix) > self.w or len(self.suffix) > self.w:
            raise ValueError("prefix/suffix longer than window radius")
        if not self.center:
            raise ValueError("center sentence must be non-empty")
        start, end = self.trigger_span
        if not (0 <= start < end <= len(self.center)):
            raise ValueError(f"trigger_span {self.trigger_span} outside center bounds")
        if self.center[start:end].lower() != self.trigger.lower():
            raise ValueError(
                f"center[{start}:{end}] = {self.center[start:end]!r} "
                f"does not match trigger {self.trigger!r}"
            )

    @property
    def text(self) -> str:
        return " ".join((*self.prefix, self.center, *self.suffix))

    @property
    def trigger_span_in_text(self) -> tuple[int, int]:
        """Trigger character span relative to the full window text."""
        offset = sum(len(p) + 1 for p in self.prefix)
        start, end = self.trigger_span
        return offset + start, offset + end

    def as_dict(self) -> dict:
        return {
            "mention_id": self.mention_id,
            "prefix": list(self.prefix),
            "center": self.center,
            "suffix": list(self.suffix),
            "w": self.w,
            "trigger": self.trigger,
            "head_lemma": self.head_lemma,
            "trigger_span": list(self.trigger_span),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscourseWindow":
        return cls(
            mention_id=data["mention_id"],
            prefix=tuple(data["prefix"]),
            center=data["center"],
            suffix=tuple(data["suffix"]),
            w=data["w"],
            trigger=data["trigger"],
            head_lemma=data["head_lemma"],
            trigger_span=tuple(data["trigger_span"]),
        )


@dataclass(frozen=True)
class MentionPair:
    """A pair of discourse windows with a binary coreference label."""

    first: DiscourseWindow
    second: DiscourseWindow
    label: Label
    pair_id: str

    def as_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "first": self.first.as_dict(),
            "second": self.second.as_dict(),
            "label": self.label.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MentionPair":
        return cls(
            first=DiscourseWindow.from_dict(data["first"]),
            second=DiscourseWindow.from_dict(data["second"]),
            label=Label(data["label"]),
            pair_id=data["pair_id"],
        )


@dataclass(frozen=True)
class PairDataset:
    pairs: tuple[MentionPair, ...]
    k_train: int
    k_infer: int

    def __post_init__(self):
        ids = [p.pair_id for p in self.pairs]
        if len(ids) != len(set(ids)):
            raise ValueError("pair_id values must be unique")

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(p.as_dict(), ensure_ascii=False, sort_keys=True) + "\n"
            for p in self.pairs
        )

    @classmethod
    def from_jsonl(cls, text: str, k_train: int = 0, k_infer: int = 0) -> "PairDataset":
        pairs = tuple(
            MentionPair.from_dict(json.loads(line))
            for line in text.splitlines() if line.strip()
        )
        return cls(pairs=pairs, k_train=k_train, k_infer=k_infer)


def extract_window(corpus: Corpus, mention_id: str, w: int) -> DiscourseWindow:
    """Extract the discourse window around a mention.

    Prefix and suffix are truncated silently at document boundaries.

    Raises:
        NotFoundError: unknown mention id.
        ValueError: w < 0.
    """
    if w < 0:
        raise ValueError("window radius must be >= 0")
    mention = corpus.mention(mention_id)
    doc = corpus.documents[mention.doc_id]
    i = mention.sent_idx
    sentences = doc.sentences
    prefix = tuple(s.text for s in sentences[max(0, i - w):i])
    suffix = tuple(s.text for s in sentences[i + 1:i + 1 + w])
    center_tokens = sentences[i].tokens
    start_tok, end_tok = mention.trigger_span
    char_start = sum(len(t) + 1 for t in center_tokens[:start_tok])
    char_end = char_start + len(" ".join(center_tokens[start_tok:end_tok]))
    return DiscourseWindow(
        mention_id=mention_id,
        prefix=prefix,
        center=sentences[i].text,
        suffix=suffix,
        w=w,
        trigger=mention.trigger_text,
        head_lemma=mention.head_lemma,
        trigger_span=(char_start, char_end),
    )


Similarity = Callable[[Mention, Mention], float]


class TokenOverlapSimilarity:
    """Content-token overlap between two mentions' discourse windows.

    The score is the number of distinct lowercased tokens shared by both
    windows after stopword removal. Any callable with the same
    ``sim(mention, mention) -> float`` signature can replace it, including
    plugins backed by external embeddings.
    """

    def __init__(self, corpus: Corpus, w: int = DEFAULT_WINDOW_RADIUS,
                 stopwords: frozenset[str] = STOPWORDS):
        self._stopwords = stopwords
        self._tokens: dict[str, frozenset[str]] = {}
        for mid in corpus.mentions:
            window = extract_window(corpus, mid, w)
            toks = window.text.lower().split()
            self._tokens[mid] = frozenset(t for t in toks if t not in stopwords)

    def __call__(self, a: Mention, b: Mention) -> float:
        return float(len(self._tokens[a.mention_id] & self._tokens[b.mention_id]))


class Neighbors(NamedTuple):
    mention_ids: list[str]
    short: bool  # fewer than k candidates were available


def retrieve_nearest(corpus: Corpus, anchor: str, k: int, sim: Similarity,
                     scope: str = "topic") -> Neighbors:
    """Rank the k most similar mentions to the anchor.

    Candidates exclude the anchor itself and, under topic scope, mentions
    outside the anchor's topic. Ordering is descending similarity with ties
    broken by ascending mention id, so the result is independent of corpus
    insertion order.

    Args:
        scope: "topic" restricts candidates to the anchor's topic (falling
            back to corpus-wide when the topic id is empty); "corpus" ranks
            against all mentions.

    Returns:
        Neighbors; ``short`` is set when fewer than k candidates exist.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if scope not in ("topic", "corpus"):
        raise ValueError(f"scope must be 'topic' or 'corpus', got {scope!r}")
    anchor_mention = corpus.mention(anchor)
    topic = corpus.topic_of(anchor)
    if scope == "topic" and topic:
        candidates = [m for m in corpus.mentions_in_topic(topic) if m != anchor]
    else:
        candidates = [m for m in sorted(corpus.mentions) if m != anchor]
    ranked = sorted(
        candidates,
        key=lambda mid: (-sim(anchor_mention, corpus.mentions[mid]), mid),
    )
    return Neighbors(mention_ids=ranked[:k], short=len(ranked) < k)


def _pair_label(corpus: Corpus, a: str, b: str) -> Label:
    same = corpus.mentions[a].gold_cluster_id == corpus.mentions[b].gold_cluster_id
    return Label.COREF if same else Label.NOT_COREF


def pair_id_for(first: str, second: str) -> str:
    return f"{first}__{second}"


def build_pair_dataset(corpus: Corpus, k_train: int, k_infer: int,
                       w: int = DEFAULT_WINDOW_RADIUS,
                       sim: Similarity | None = None,
                       scope: str = "topic") -> PairDataset:
    """Build the (anchor, neighbor) pair dataset for a corpus.

    The number of neighbors per anchor is k_train for a train-split corpus
    and k_infer otherwise. Anchors are processed in sorted order and labels
    come from gold cluster ids, so output is deterministic for a given
    corpus, similarity and k.
    """
    if sim is None:
        sim = TokenOverlapSimilarity(corpus, w)
    k = k_train if corpus.split == "train" else k_infer
    windows = {mid: extract_window(corpus, mid, w) for mid in sorted(corpus.mentions)}
    pairs: list[MentionPair] = []
    for anchor in sorted(corpus.mentions):
        neighbors = retrieve_nearest(corpus, anchor, k, sim, scope)
        for neighbor in neighbors.mention_ids:
            pairs.append(MentionPair(
                first=windows[anchor],
                second=windows[neighbor],
                label=_pair_label(corpus, anchor, neighbor),
                pair_id=pair_id_for(anchor, neighbor),
            ))
    return PairDataset(pairs=tuple(pairs), k_train=k_train, k_infer=k_infer)


def window_with_center(window: DiscourseWindow, center: str, trigger: str,
                       head_lemma: str, mention_id: str | None = None,
                       prefix: tuple[str, ...] | None = None,
                       suffix: tuple[str, ...] | None = None) -> DiscourseWindow:
    """Derive a window with a replaced center sentence (and optional context).

    The trigger span is located by case-insensitive substring search in the
    new center, which must therefore contain the trigger.
    """
    pos = center.lower().find(trigger.lower())
    if pos < 0:
        raise ValueError(f"new center does not contain trigger {trigger!r}")
    return replace(
        window,
        mention_id=mention_id if mention_id is not None else window.mention_id,
        prefix=window.prefix if prefix is None else prefix,
        center=center,
        suffix=window.suffix if suffix is None else suffix,
        trigger=trigger,
        head_lemma=head_lemma,
        trigger_span=(pos, pos + len(trigger)),
    )
