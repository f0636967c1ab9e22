"""Pluggable pairwise scoring models.

The default is a logistic regression over lexical features: non-neural on
purpose, so the server is trainable and testable without a GPU. A
cross-encoder slot shows where a fine-tuned transformer pairwise scorer
plugs in: any model only has to implement ``score_batch`` over wire pairs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Protocol, Sequence

from .features import FEATURE_NAMES, extract_features

WirePair = dict  # {"pair_id":…, "first":{"text","span"}, "second":{…}}

# heuristic fallback weights used when serving without a trained checkpoint:
# strong weight on trigger identity and window overlap, negative intercept
# so fully disjoint pairs land near zero
DEFAULT_COEF = (2.0, 3.0, 2.0, 2.0)
DEFAULT_INTERCEPT = -4.0


class PairScorer(Protocol):
    def score_batch(self, pairs: Sequence[WirePair]) -> list[float]: ...


class FeatureLogisticScorer:
    """Logistic regression over the lexical feature vector."""

    def __init__(self, coef: Sequence[float] = DEFAULT_COEF,
                 intercept: float = DEFAULT_INTERCEPT):
        if len(coef) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} coefficients")
        self.coef = tuple(float(c) for c in coef)
        self.intercept = float(intercept)

    @staticmethod
    def _features(pair: WirePair) -> list[float]:
        return extract_features(
            pair["first"]["text"], tuple(pair["first"]["span"]),
            pair["second"]["text"], tuple(pair["second"]["span"]),
        )

    def score_batch(self, pairs: Sequence[WirePair]) -> list[float]:
        scores = []
        for pair in pairs:
            z = self.intercept + sum(
                c * f for c, f in zip(self.coef, self._features(pair)))
            scores.append(1.0 / (1.0 + math.exp(-z)))
        return scores

    @classmethod
    def fit(cls, pairs: Sequence[WirePair], labels: Sequence[int],
            regularization: float = 1.0) -> "FeatureLogisticScorer":
        """Train on labeled wire pairs (1 = coreferential)."""
        from sklearn.linear_model import LogisticRegression

        X = [cls._features(p) for p in pairs]
        clf = LogisticRegression(C=regularization, max_iter=1000)
        clf.fit(X, list(labels))
        return cls(coef=clf.coef_[0].tolist(), intercept=float(clf.intercept_[0]))

    def save(self, path: str | Path) -> None:
        payload = {
            "kind": "feature-logistic",
            "features": list(FEATURE_NAMES),
            "coef": list(self.coef),
            "intercept": self.intercept,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureLogisticScorer":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("kind") != "feature-logistic":
            raise ValueError(f"not a feature-logistic checkpoint: {path}")
        return cls(coef=payload["coef"], intercept=payload["intercept"])


class CrossEncoderScorer:
    """Slot for a fine-tuned transformer pairwise scorer.

    Loads a sequence-classification checkpoint and scores the pair as the
    sigmoid/softmax probability of the coreferential class over the
    concatenated window texts. Requires the ``cross-encoder`` extra
    (torch + transformers).
    """

    def __init__(self, checkpoint_path: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise RuntimeError(
                "cross-encoder support needs the [cross-encoder] extra") from exc
        if not Path(checkpoint_path).exists():
            raise FileNotFoundError(f"checkpoint not found: {checkpoint_path}")
        self._torch = torch
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint_path)
        self.model = AutoModelForSequenceClassification.from_pretrained(
            checkpoint_path).to(device).eval()

    def score_batch(self, pairs: Sequence[WirePair]) -> list[float]:
        torch = self._torch
        texts_a = [p["first"]["text"] for p in pairs]
        texts_b = [p["second"]["text"] for p in pairs]
        batch = self.tokenizer(texts_a, texts_b, padding=True, truncation=True,
                               max_length=512, return_tensors="pt").to(self.device)
        with torch.no_grad():
            logits = self.model(**batch).logits
        if logits.shape[-1] == 1:
            probs = torch.sigmoid(logits[:, 0])
        else:
            probs = torch.softmax(logits, dim=-1)[:, -1]
        return [float(p) for p in probs]


def load_model(spec: str, checkpoint: str | None, device: str) -> PairScorer:
    """Build the scorer named by the config model spec."""
    if spec == "feature-logistic":
        if checkpoint:
            return FeatureLogisticScorer.load(checkpoint)
        return FeatureLogisticScorer()
    if spec == "cross-encoder":
        if not checkpoint:
            raise ValueError("cross-encoder model requires a checkpoint path")
        return CrossEncoderScorer(checkpoint, device)
    raise ValueError(f"unknown model spec: {spec!r}")
