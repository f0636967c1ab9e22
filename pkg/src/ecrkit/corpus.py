"""Load, validate and index mention-annotated multi-document corpora.

The corpus format is JSON-Lines with two record kinds::

    {"kind":"doc","doc_id":...,"topic_id":...,"subtopic_id":...,"sentences":[[tok,...],...]}
    {"kind":"mention","mention_id":...,"doc_id":...,"sent_idx":...,"span":[start,end],
     "head_lemma":...,"gold_cluster_id":...}

Files are UTF-8. A mention's trigger text is always derived from its
document's tokens, never stored. Records may appear in any order; parsing
and cross-record integrity are validated in two separate passes so errors
can name the offending line or ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .cluster import ClusterSet
from .errors import CorpusIntegrityError, CorpusParseError, NotFoundError

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class SentenceRec:
    sent_idx: int
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.sent_idx < 0:
            raise ValueError(f"sent_idx must be >= 0, got {self.sent_idx}")
        if not self.tokens:
            raise ValueError("sentence tokens must be non-empty")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class Document:
    doc_id: str
    topic_id: str
    subtopic_id: str
    sentences: tuple[SentenceRec, ...]

    def __post_init__(self):
        for i, sent in enumerate(self.sentences):
            if sent.sent_idx != i:
                raise ValueError(
                    f"doc {self.doc_id}: sentence indices must be contiguous from 0, "
                    f"found {sent.sent_idx} at position {i}"
                )


@dataclass(frozen=True)
class Mention:
    """An event trigger span anchored in a document sentence."""

    mention_id: str
    doc_id: str
    sent_idx: int
    trigger_span: tuple[int, int]
    trigger_text: str
    head_lemma: str
    gold_cluster_id: str

    def __post_init__(self):
        start, end = self.trigger_span
        if not start < end:
            raise ValueError(
                f"mention {self.mention_id}: trigger_span start must be < end, "
                f"got [{start}, {end})"
            )


@dataclass(frozen=True)
class Corpus:
    """Immutable, fully indexed corpus; safe to share across readers."""

    documents: dict[str, Document]
    mentions: dict[str, Mention]
    split: str

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def document_of(self, mention_id: str) -> Document:
        mention = self.mention(mention_id)
        return self.documents[mention.doc_id]

    def mention(self, mention_id: str) -> Mention:
        try:
            return self.mentions[mention_id]
        except KeyError:
            raise NotFoundError(f"unknown mention: {mention_id}") from None

    def topic_of(self, mention_id: str) -> str:
        return self.document_of(mention_id).topic_id

    def topic_ids(self) -> list[str]:
        return sorted({d.topic_id for d in self.documents.values()})

    def mentions_in_topic(self, topic_id: str) -> list[str]:
        """Mention ids whose document belongs to the topic, sorted."""
        if topic_id not in {d.topic_id for d in self.documents.values()}:
            raise NotFoundError(f"unknown topic: {topic_id}")
        return sorted(
            mid for mid, m in self.mentions.items()
            if self.documents[m.doc_id].topic_id == topic_id
        )

    @property
    def n_sentences(self) -> int:
        return sum(len(d.sentences) for d in self.documents.values())


def _parse_doc(rec: dict, line_no: int) -> Document:
    try:
        sentences = tuple(
            SentenceRec(i, tuple(str(t) for t in toks))
            for i, toks in enumerate(rec["sentences"])
        )
        return Document(
            doc_id=str(rec["doc_id"]),
            topic_id=str(rec["topic_id"]),
            subtopic_id=str(rec["subtopic_id"]),
            sentences=sentences,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusParseError(line_no, f"bad doc record: {exc}") from exc


def _parse_mention_rec(rec: dict, line_no: int) -> dict:
    try:
        start, end = rec["span"]
        return {
            "mention_id": str(rec["mention_id"]),
            "doc_id": str(rec["doc_id"]),
            "sent_idx": int(rec["sent_idx"]),
            "span": (int(start), int(end)),
            "head_lemma": str(rec["head_lemma"]),
            "gold_cluster_id": str(rec["gold_cluster_id"]),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusParseError(line_no, f"bad mention record: {exc}") from exc


def load_corpus(path: str | Path, split: str) -> Corpus:
    """Load and fully validate a JSON-Lines corpus file.

    Raises:
        CorpusParseError: a line is not valid JSON or lacks required fields.
        CorpusIntegrityError: cross-record invariants are violated (dangling
            doc references, out-of-bounds spans, duplicate ids).
    """
    documents: dict[str, Document] = {}
    mention_recs: list[dict] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(line_no, f"invalid JSON: {exc}") from exc
            kind = rec.get("kind")
            if kind == "doc":
                doc = _parse_doc(rec, line_no)
                if doc.doc_id in documents:
                    raise CorpusIntegrityError("duplicate doc_id", [doc.doc_id])
                documents[doc.doc_id] = doc
            elif kind == "mention":
                mention_recs.append(_parse_mention_rec(rec, line_no))
            else:
                raise CorpusParseError(line_no, f"unknown record kind: {kind!r}")

    mentions: dict[str, Mention] = {}
    for rec in mention_recs:
        mid = rec["mention_id"]
        if mid in mentions:
            raise CorpusIntegrityError("duplicate mention_id", [mid])
        doc = documents.get(rec["doc_id"])
        if doc is None:
            raise CorpusIntegrityError("mention references unknown doc", [mid])
        if not 0 <= rec["sent_idx"] < len(doc.sentences):
            raise CorpusIntegrityError("mention sent_idx out of range", [mid])
        tokens = doc.sentences[rec["sent_idx"]].tokens
        start, end = rec["span"]
        if not (0 <= start < end <= len(tokens)):
            raise CorpusIntegrityError("trigger_span outside sentence bounds", [mid])
        mentions[mid] = Mention(
            mention_id=mid,
            doc_id=rec["doc_id"],
            sent_idx=rec["sent_idx"],
            trigger_span=(start, end),
            trigger_text=" ".join(tokens[start:end]),
            head_lemma=rec["head_lemma"],
            gold_cluster_id=rec["gold_cluster_id"],
        )
    return Corpus(documents=documents, mentions=mentions, split=split)


@dataclass(frozen=True)
class SplitStats:
    """Expected per-split counts, as published for the benchmark corpora."""

    documents: int
    sentences: int
    mentions: int


@dataclass(frozen=True)
class StatCheck:
    name: str
    expected: int
    actual: int

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


@dataclass(frozen=True)
class StatsReport:
    split: str
    checks: tuple[StatCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "split": self.split,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "expected": c.expected, "actual": c.actual, "ok": c.ok}
                for c in self.checks
            ],
        }


def validate_split_stats(corpus: Corpus, expected: SplitStats) -> StatsReport:
    """Compare corpus counts against expected statistics.

    A mismatch is data, not failure: the report carries per-field pass/fail
    and this function never raises on mismatch.
    """
    checks = (
        StatCheck("documents", expected.documents, len(corpus.documents)),
        StatCheck("sentences", expected.sentences, corpus.n_sentences),
        StatCheck("mentions", expected.mentions, len(corpus.mentions)),
    )
    return StatsReport(split=corpus.split, checks=checks)


def gold_clustering(corpus: Corpus, topic_scope: str | None = None) -> ClusterSet:
    """Partition the in-scope mention ids by gold cluster id.

    Args:
        topic_scope: restrict to mentions of one topic; None means corpus-wide.

    Raises:
        NotFoundError: topic_scope names a topic absent from the corpus.
    """
    if topic_scope is not None:
        in_scope: Iterable[str] = corpus.mentions_in_topic(topic_scope)
    else:
        in_scope = sorted(corpus.mentions)
    by_cluster: dict[str, set[str]] = {}
    for mid in in_scope:
        by_cluster.setdefault(corpus.mentions[mid].gold_cluster_id, set()).add(mid)
    return ClusterSet.from_clusters(
        (by_cluster[cid] for cid in sorted(by_cluster)),
        universe=in_scope,
    )
