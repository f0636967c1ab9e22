"""Lexical features over wire-format pairs (window text plus trigger span)."""

from __future__ import annotations

from difflib import SequenceMatcher

FEATURE_NAMES = (
    "token_jaccard",
    "trigger_similarity",
    "trigger_exact",
    "overlap_fraction",
)


def _tokens(text: str) -> set[str]:
    return set(text.lower().split())


def extract_features(first_text: str, first_span: tuple[int, int],
                     second_text: str, second_span: tuple[int, int]) -> list[float]:
    """Fixed-length feature vector for one pair, all components in [0, 1]."""
    a, b = _tokens(first_text), _tokens(second_text)
    union = a | b
    jaccard = len(a & b) / len(union) if union else 0.0
    trig_a = first_text[first_span[0]:first_span[1]].lower()
    trig_b = second_text[second_span[0]:second_span[1]].lower()
    similarity = SequenceMatcher(None, trig_a, trig_b).ratio()
    smaller = min(len(a), len(b))
    overlap = len(a & b) / smaller if smaller else 0.0
    return [jaccard, similarity, float(trig_a == trig_b), overlap]
