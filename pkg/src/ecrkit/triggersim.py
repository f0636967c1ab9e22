"""Quantify lexical similarity between trigger pairs and its distribution.

The similarity measure is the classic fuzz ratio: a 0-100 score derived
from edit distance with substitution cost 2 and insertion/deletion cost 1
(equivalently, twice the unmatched residue after longest common subsequence
alignment)::

    ratio(a, b) = round(100 * (|a| + |b| - dist2(a, b)) / (|a| + |b|))

A trigger pair scoring at or above the threshold (default 80) counts as
lexically similar, otherwise as lexically divergent. The per-label
distribution of that binary feature over a pair dataset is the bias
histogram; the headline figure is the fraction of coreferential pairs with
lexically similar triggers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .pairing import DiscourseWindow, Label, MentionPair

SIMILARITY_THRESHOLD = 80

Normalizer = Callable[[DiscourseWindow], str]


def _edit_distance(a: str, b: str, substitution_cost: int) -> int:
    """Dynamic-programming edit distance with unit indel cost."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            if ca == cb:
                cur.append(prev[j - 1])
            else:
                cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + substitution_cost))
        prev = cur
    return prev[-1]


def fuzz_ratio(a: str, b: str, *, plain_levenshtein: bool = False) -> int:
    """Lexical similarity ratio between two non-empty strings, 0-100.

    Symmetric, and 100 iff the strings are equal. ``plain_levenshtein``
    switches the underlying distance to substitution cost 1 for
    sensitivity analysis; the default (cost 2) matches the conventional
    fuzz-ratio semantics.

    Raises:
        ValueError: either string is empty.
    """
    if not a or not b:
        raise ValueError("fuzz_ratio requires non-empty strings")
    cost = 1 if plain_levenshtein else 2
    dist = _edit_distance(a, b, cost)
    total = len(a) + len(b)
    return round(100 * (total - dist) / total)


@dataclass(frozen=True)
class LexicalSimilarityClass:
    ratio: int
    is_similar: bool


def default_normalizer(window: DiscourseWindow) -> str:
    """Lowercased head lemma, falling back to the trigger surface form."""
    return (window.head_lemma or window.trigger).lower()


def classify_pair_triggers(pair: MentionPair,
                           normalizer: Normalizer = default_normalizer,
                           threshold: int = SIMILARITY_THRESHOLD) -> LexicalSimilarityClass:
    """Classify a pair's triggers as lexically similar or divergent.

    The ratio is computed on the normalized trigger forms; the pair is
    similar iff ratio >= threshold.
    """
    ratio = fuzz_ratio(normalizer(pair.first), normalizer(pair.second))
    return LexicalSimilarityClass(ratio=ratio, is_similar=ratio >= threshold)


@dataclass(frozen=True)
class BiasHistogram:
    """Counts of {similar, divergent} trigger pairs per coreference label."""

    similar_coref: int
    divergent_coref: int
    similar_not_coref: int
    divergent_not_coref: int

    @property
    def total(self) -> int:
        return (self.similar_coref + self.divergent_coref
                + self.similar_not_coref + self.divergent_not_coref)

    @property
    def percent_similar_coref(self) -> float | None:
        """Fraction of coreferential pairs with similar triggers; None if no coref pairs."""
        n_coref = self.similar_coref + self.divergent_coref
        if n_coref == 0:
            return None
        return self.similar_coref / n_coref

    def as_dict(self) -> dict:
        return {
            "similar_coref": self.similar_coref,
            "divergent_coref": self.divergent_coref,
            "similar_not_coref": self.similar_not_coref,
            "divergent_not_coref": self.divergent_not_coref,
            "total": self.total,
            "percent_similar_coref": self.percent_similar_coref,
        }

    def as_csv_rows(self) -> list[tuple[str, str, int]]:
        return [
            ("coref", "similar", self.similar_coref),
            ("coref", "divergent", self.divergent_coref),
            ("not_coref", "similar", self.similar_not_coref),
            ("not_coref", "divergent", self.divergent_not_coref),
        ]


def bias_histogram(pairs: Iterable[MentionPair],
                   normalizer: Normalizer = default_normalizer,
                   threshold: int = SIMILARITY_THRESHOLD) -> BiasHistogram:
    """Tabulate the trigger-similarity distribution of a pair dataset.

    Raises:
        ValueError: the dataset is empty.
    """
    counts = {
        (Label.COREF, True): 0,
        (Label.COREF, False): 0,
        (Label.NOT_COREF, True): 0,
        (Label.NOT_COREF, False): 0,
    }
    n = 0
    for pair in pairs:
        cls = classify_pair_triggers(pair, normalizer, threshold)
        counts[(pair.label, cls.is_similar)] += 1
        n += 1
    if n == 0:
        raise ValueError("bias_histogram requires a non-empty dataset")
    return BiasHistogram(
        similar_coref=counts[(Label.COREF, True)],
        divergent_coref=counts[(Label.COREF, False)],
        similar_not_coref=counts[(Label.NOT_COREF, True)],
        divergent_not_coref=counts[(Label.NOT_COREF, False)],
    )
