"""Coreference metrics, pairwise-classification reports and LLM response parsing.

Implements the standard coreference evaluation suite over key (gold) and
response (system) clusterings:

* MUC: link-based; recall counts, per key cluster, the links missing after
  partitioning the cluster by the response, normalized by cluster size - 1.
* B-cubed: per-mention overlap fractions averaged over the universe.
* CEAF_e: optimal one-to-one cluster alignment maximizing
  phi4(K, R) = 2|K n R| / (|K| + |R|), solved as an assignment problem.
* LEA: link-based entity-aware; each entity weighs by its size and resolves
  by the fraction of its links found within single response entities. A
  singleton entity carries one conceptual self-link, resolved iff the
  mention is also a singleton on the other side (switchable to excluding
  singletons entirely).
* CoNLL F1: arithmetic mean of the MUC, B-cubed and CEAF_e F1 values.

All metrics use the zero-denominator convention of the reference scorer:
an undefined recall or precision scores 0.0, so two identical degenerate
clusterings (e.g. all singletons under MUC) do not score 1.0.

The module also covers evaluation of LLM transcripts: the markdown
document-template annotation format ``[mention](#cluster)`` with its error
taxonomy, and the pairwise chain-of-thought answer format with the task
completeness (TComp) statistic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cluster import ClusterSet
from .errors import CorpusIntegrityError, LlmParseError
from .pairing import Label


@dataclass(frozen=True)
class PRF:
    recall: float
    precision: float
    f1: float

    @classmethod
    def from_rp(cls, recall: float, precision: float) -> "PRF":
        denom = recall + precision
        f1 = 2 * recall * precision / denom if denom > 0 else 0.0
        return cls(recall=recall, precision=precision, f1=f1)

    def as_dict(self) -> dict:
        return {"recall": self.recall, "precision": self.precision, "f1": self.f1}


def _check_universes(key: ClusterSet, response: ClusterSet) -> None:
    if key.universe != response.universe:
        diff = key.universe ^ response.universe
        raise CorpusIntegrityError("key and response universes differ", sorted(diff))


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def muc(key: ClusterSet, response: ClusterSet) -> PRF:
    """MUC link-based metric."""
    _check_universes(key, response)

    def side(base: ClusterSet, other: ClusterSet) -> float:
        assignment = {m: i for i, c in enumerate(other.clusters) for m in c}
        num = sum(len(c) - len({assignment[m] for m in c}) for c in base.clusters)
        den = sum(len(c) - 1 for c in base.clusters)
        return _ratio(num, den)

    return PRF.from_rp(recall=side(key, response), precision=side(response, key))


def b_cubed(key: ClusterSet, response: ClusterSet) -> PRF:
    """B-cubed per-mention overlap metric."""
    _check_universes(key, response)

    def side(base: ClusterSet, other: ClusterSet) -> float:
        other_of = {m: c for c in other.clusters for m in c}
        total = 0.0
        for cluster in base.clusters:
            for m in cluster:
                total += len(cluster & other_of[m]) / len(cluster)
        return _ratio(total, len(base.universe))

    return PRF.from_rp(recall=side(key, response), precision=side(response, key))


def _phi4(a: frozenset[str], b: frozenset[str]) -> float:
    return 2 * len(a & b) / (len(a) + len(b))


def ceaf_e(key: ClusterSet, response: ClusterSet) -> PRF:
    """Entity-based CEAF under the optimal one-to-one cluster alignment."""
    _check_universes(key, response)
    if not key.clusters or not response.clusters:
        return PRF.from_rp(0.0, 0.0)
    scores = np.zeros((len(key.clusters), len(response.clusters)))
    for i, kc in enumerate(key.clusters):
        for j, rc in enumerate(response.clusters):
            scores[i, j] = _phi4(kc, rc)
    rows, cols = linear_sum_assignment(-scores)
    total = float(scores[rows, cols].sum())
    return PRF.from_rp(
        recall=_ratio(total, len(key.clusters)),
        precision=_ratio(total, len(response.clusters)),
    )


def lea(key: ClusterSet, response: ClusterSet, include_singletons: bool = True) -> PRF:
    """Link-based entity-aware metric.

    Args:
        include_singletons: keep the self-link convention for singleton
            entities; when False, singletons are dropped from both sides.
    """
    _check_universes(key, response)

    def side(base: ClusterSet, other: ClusterSet) -> float:
        other_of = {m: c for c in other.clusters for m in c}
        other_singletons = {next(iter(c)) for c in other.clusters if len(c) == 1}
        num = 0.0
        den = 0
        for entity in base.clusters:
            size = len(entity)
            if size == 1:
                if not include_singletons:
                    continue
                m = next(iter(entity))
                resolution = 1.0 if m in other_singletons else 0.0
            else:
                links = size * (size - 1) // 2
                resolved = 0
                members = sorted(entity)
                for i, a in enumerate(members):
                    for b in members[i + 1:]:
                        if b in other_of[a]:
                            resolved += 1
                resolution = resolved / links
            num += size * resolution
            den += size
        return _ratio(num, den)

    return PRF.from_rp(recall=side(key, response), precision=side(response, key))


@dataclass(frozen=True)
class MetricReport:
    muc: PRF
    b_cubed: PRF
    ceaf_e: PRF
    lea: PRF
    conll_f1: float

    def __post_init__(self):
        mean = (self.muc.f1 + self.b_cubed.f1 + self.ceaf_e.f1) / 3
        if abs(mean - self.conll_f1) > 1e-12:
            raise ValueError("conll_f1 must equal the mean of MUC, B-cubed and CEAF_e F1")

    def as_dict(self) -> dict:
        return {
            "muc": self.muc.as_dict(),
            "b_cubed": self.b_cubed.as_dict(),
            "ceaf_e": self.ceaf_e.as_dict(),
            "lea": self.lea.as_dict(),
            "conll_f1": self.conll_f1,
        }

    def as_table(self, name: str = "system") -> str:
        """Aligned text table: MUC/B-cubed/CEAF_e/LEA x R/P/F1 plus CoNLL F1."""
        header_groups = "".join(f"{g:<21}" for g in ("MUC", "B3", "CEAF_e", "LEA"))
        header = f"{'':<12}{header_groups}{'CoNLL':<7}"
        sub = f"{'':<12}" + "".join(f"{c:<7}" for _ in range(4) for c in ("R", "P", "F1")) + f"{'F1':<7}"
        cells = []
        for prf in (self.muc, self.b_cubed, self.ceaf_e, self.lea):
            cells.extend(f"{100 * v:<7.1f}" for v in (prf.recall, prf.precision, prf.f1))
        row = f"{name:<12}" + "".join(cells) + f"{100 * self.conll_f1:<7.1f}"
        return "\n".join((header, sub, row))


def conll(key: ClusterSet, response: ClusterSet,
          include_singletons: bool = True) -> MetricReport:
    """Full metric report; CoNLL F1 is the mean of MUC, B-cubed and CEAF_e F1."""
    muc_prf = muc(key, response)
    b3_prf = b_cubed(key, response)
    ceafe_prf = ceaf_e(key, response)
    lea_prf = lea(key, response, include_singletons)
    return MetricReport(
        muc=muc_prf,
        b_cubed=b3_prf,
        ceaf_e=ceafe_prf,
        lea=lea_prf,
        conll_f1=(muc_prf.f1 + b3_prf.f1 + ceafe_prf.f1) / 3,
    )


# ---------------------------------------------------------------------------
# Pairwise-classification evaluation of LLM transcripts
# ---------------------------------------------------------------------------

class PairwisePrediction(NamedTuple):
    label: Label | None
    score: float | None
    complete: bool


_RESULT_RE = re.compile(
    r"^[\s*_]*Coreferential results?\s*:[\s*_]*(.+?)[\s*_]*$",
    re.IGNORECASE | re.MULTILINE,
)
_SCORE_RE = re.compile(
    r"^[\s*_]*Coreferential score\s*:[\s*_]*([0-9]*\.?[0-9]+)",
    re.IGNORECASE | re.MULTILINE,
)


def parse_pairwise_cot(raw: str) -> PairwisePrediction:
    """Extract the answer line and 0-1 score from a pairwise CoT response.

    A response is complete only when it carries the exact answer line with
    the word Coreferential or Non-Coreferential; prose answers and refusals
    are incomplete. The score is optional and dropped when outside [0, 1].
    """
    match = _RESULT_RE.search(raw)
    if not match:
        return PairwisePrediction(label=None, score=None, complete=False)
    verdict = match.group(1).strip().strip(".'\"`").lower()
    if verdict.startswith("non-coreferential") or verdict.startswith("non coreferential"):
        label = Label.NOT_COREF
    elif verdict.startswith("coreferential"):
        label = Label.COREF
    else:
        return PairwisePrediction(label=None, score=None, complete=False)
    score = None
    score_match = _SCORE_RE.search(raw)
    if score_match:
        value = float(score_match.group(1))
        if 0.0 <= value <= 1.0:
            score = value
    return PairwisePrediction(label=label, score=score, complete=True)


@dataclass(frozen=True)
class PairwiseReport:
    """Classification report over parsed pairwise predictions.

    Recall, precision, F1 and positive rate are measured on completed
    examples only; accuracy counts unparsed examples as wrong; tcomp is the
    completed fraction of the total.
    """

    recall: float
    precision: float
    f1: float
    accuracy: float
    positive_rate: float
    tcomp: float
    n_total: int
    n_complete: int

    def as_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "positive_rate": self.positive_rate,
            "tcomp": self.tcomp,
            "n_total": self.n_total,
            "n_complete": self.n_complete,
        }


def pairwise_report(gold: Mapping[str, Label],
                    predictions: Mapping[str, PairwisePrediction]) -> PairwiseReport:
    """Score parsed predictions against gold labels, aligned by pair id."""
    if not gold:
        raise ValueError("pairwise_report requires at least one gold label")
    n_total = len(gold)
    n_complete = 0
    tp = fp = fn = 0
    positives = 0
    correct = 0
    for pair_id, gold_label in gold.items():
        pred = predictions.get(pair_id)
        if pred is None or not pred.complete or pred.label is None:
            continue
        n_complete += 1
        if pred.label is Label.COREF:
            positives += 1
            if gold_label is Label.COREF:
                tp += 1
            else:
                fp += 1
        elif gold_label is Label.COREF:
            fn += 1
        if pred.label is gold_label:
            correct += 1
    recall = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    return PairwiseReport(
        recall=recall,
        precision=precision,
        f1=PRF.from_rp(recall, precision).f1,
        accuracy=_ratio(correct, n_total),
        positive_rate=_ratio(positives, n_complete),
        tcomp=_ratio(n_complete, n_total),
        n_total=n_total,
        n_complete=n_complete,
    )


# ---------------------------------------------------------------------------
# Document-template evaluation of LLM transcripts
# ---------------------------------------------------------------------------

class DocMention(NamedTuple):
    """A gold mention of one document, in document order."""

    mention_id: str
    text: str
    gold_cluster_id: str


class TaggedSpan(NamedTuple):
    mention_id: str
    span: tuple[int, int]
    cluster: str | None  # None when the tag carried no cluster name


class RedundantSpan(NamedTuple):
    span: tuple[int, int]
    text: str
    cluster: str


@dataclass(frozen=True)
class DocTemplateAnnotation:
    tagged: tuple[TaggedSpan, ...]
    redundant: tuple[RedundantSpan, ...]

    def cluster_of(self, mention_id: str) -> str | None:
        for entry in self.tagged:
            if entry.mention_id == mention_id:
                return entry.cluster
        return None


@dataclass(frozen=True)
class LlmErrorTaxonomy:
    """Counts of the known LLM annotation failure modes.

    missing_type1: mention tagged but with an empty cluster slot.
    missing_type2: mention not tagged at all.
    redundant: tag placed at a span that is not a gold mention (such spans
        are excluded from metric computation).
    wrong_prediction: tagged mention whose induced cluster disagrees with
        gold, restricted to tagged mentions.
    """

    missing_type1: int
    missing_type2: int
    redundant: int
    wrong_prediction: int

    def as_dict(self) -> dict:
        return {
            "missing_type1": self.missing_type1,
            "missing_type2": self.missing_type2,
            "redundant": self.redundant,
            "wrong_prediction": self.wrong_prediction,
        }


_TAG_RE = re.compile(r"\[([^\]\[]+)\]\(#([^)]*)\)")


def parse_doc_template(mentions: Sequence[DocMention],
                       raw: str) -> tuple[DocTemplateAnnotation, LlmErrorTaxonomy]:
    """Parse a markdown-tagged document response against its gold mentions.

    Tags are matched to gold mentions in document order by surface text.
    Tags at non-gold spans are recorded as redundant and never enter the
    annotation used for metrics.

    Raises:
        LlmParseError: the response is empty or unreadable.
    """
    if not raw or not raw.strip():
        raise LlmParseError("empty document-template response", raw)
    tagged: list[TaggedSpan] = []
    redundant: list[RedundantSpan] = []
    cursor = 0  # next gold mention eligible for matching
    for match in _TAG_RE.finditer(raw):
        text = " ".join(match.group(1).split())
        cluster = match.group(2).strip()
        hit = None
        for idx in range(cursor, len(mentions)):
            if " ".join(mentions[idx].text.split()) == text:
                hit = idx
                break
        if hit is None:
            redundant.append(RedundantSpan(span=match.span(), text=text, cluster=cluster))
            continue
        # gold mentions skipped over were left untagged by the response
        cursor = hit + 1
        tagged.append(TaggedSpan(
            mention_id=mentions[hit].mention_id,
            span=match.span(),
            cluster=cluster or None,
        ))
    tagged_ids = {t.mention_id for t in tagged}
    annotation = DocTemplateAnnotation(tagged=tuple(tagged), redundant=tuple(redundant))
    missing_type1 = sum(1 for t in tagged if t.cluster is None)
    missing_type2 = sum(1 for m in mentions if m.mention_id not in tagged_ids)
    taxonomy = LlmErrorTaxonomy(
        missing_type1=missing_type1,
        missing_type2=missing_type2,
        redundant=len(redundant),
        wrong_prediction=_count_wrong_predictions(mentions, annotation),
    )
    return annotation, taxonomy


def _count_wrong_predictions(mentions: Sequence[DocMention],
                             annotation: DocTemplateAnnotation) -> int:
    clustered = [t for t in annotation.tagged if t.cluster is not None]
    gold_of = {m.mention_id: m.gold_cluster_id for m in mentions}
    by_pred: dict[str, set[str]] = {}
    by_gold: dict[str, set[str]] = {}
    for t in clustered:
        by_pred.setdefault(t.cluster, set()).add(t.mention_id)
        by_gold.setdefault(gold_of[t.mention_id], set()).add(t.mention_id)
    wrong = 0
    for t in clustered:
        if by_pred[t.cluster] != by_gold[gold_of[t.mention_id]]:
            wrong += 1
    return wrong


def doc_template_cluster_sets(mentions: Sequence[DocMention],
                              annotation: DocTemplateAnnotation) -> tuple[ClusterSet, ClusterSet]:
    """Key and response ClusterSets induced by a parsed annotation.

    The universe is all gold mention ids; mentions the response missed
    (either type) become response singletons. Redundant spans never enter
    the universe.
    """
    universe = [m.mention_id for m in mentions]
    key_groups: dict[str, set[str]] = {}
    for m in mentions:
        key_groups.setdefault(m.gold_cluster_id, set()).add(m.mention_id)
    response_groups: dict[str, set[str]] = {}
    for t in annotation.tagged:
        if t.cluster is not None:
            response_groups.setdefault(t.cluster, set()).add(t.mention_id)
    key = ClusterSet.from_clusters(
        (key_groups[c] for c in sorted(key_groups)), universe=universe)
    response = ClusterSet.from_clusters(
        (response_groups[c] for c in sorted(response_groups)), universe=universe)
    return key, response


def merge_cluster_sets(parts: Iterable[ClusterSet]) -> ClusterSet:
    """Union of per-document (or per-topic) partitions over disjoint universes."""
    clusters: list[frozenset[str]] = []
    universe: set[str] = set()
    for part in parts:
        overlap = universe & part.universe
        if overlap:
            raise CorpusIntegrityError("cluster sets overlap", sorted(overlap))
        clusters.extend(part.clusters)
        universe |= part.universe
    return ClusterSet(tuple(clusters), frozenset(universe))
