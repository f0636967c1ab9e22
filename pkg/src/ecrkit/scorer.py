"""Pairwise coreference scoring: lemma baseline and external-scorer protocol.

Scorers need not be symmetric (cross-encoders usually are not), so pairs
are always scored in their stored (first, second) orientation. The wire
protocol for external scorers is JSON over HTTP POST: the request body
carries a batch of pairs as window text plus trigger character span, and
the response returns one score per pair id. The JSON schema for both
messages ships at ``ecrkit/schemas/score_protocol.schema.json``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import requests

from .errors import ProtocolError, ScoreValidationError
from .pairing import MentionPair

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_IN_FLIGHT = 2


@dataclass(frozen=True)
class ScoreRequest:
    pair_id: str
    first_text: str
    first_span: tuple[int, int]
    second_text: str
    second_span: tuple[int, int]

    def __post_init__(self):
        for text, span in ((self.first_text, self.first_span),
                           (self.second_text, self.second_span)):
            start, end = span
            if not (0 <= start < end <= len(text)):
                raise ValueError(f"span {span} invalid for text of length {len(text)}")

    @classmethod
    def from_pair(cls, pair: MentionPair) -> "ScoreRequest":
        return cls(
            pair_id=pair.pair_id,
            first_text=pair.first.text,
            first_span=pair.first.trigger_span_in_text,
            second_text=pair.second.text,
            second_span=pair.second.trigger_span_in_text,
        )

    def as_wire(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "first": {"text": self.first_text, "span": list(self.first_span)},
            "second": {"text": self.second_text, "span": list(self.second_span)},
        }


@dataclass(frozen=True)
class ScoreResult:
    pair_id: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ScoreValidationError(
                f"score for {self.pair_id} outside [0, 1]: {self.score}")


class FailedItem(NamedTuple):
    pair_id: str
    reason: str


def lemma_baseline_score(p: Union[MentionPair, ScoreRequest]) -> ScoreResult:
    """Score 1.0 iff the case-folded head lemmas match, else 0.0.

    On a bare ScoreRequest (no lemmas on the wire) the trigger span surface
    forms stand in for the lemmas.
    """
    if isinstance(p, MentionPair):
        a, b = p.first.head_lemma, p.second.head_lemma
        pair_id = p.pair_id
    else:
        a = p.first_text[p.first_span[0]:p.first_span[1]]
        b = p.second_text[p.second_span[0]:p.second_span[1]]
        pair_id = p.pair_id
    return ScoreResult(pair_id=pair_id, score=1.0 if a.casefold() == b.casefold() else 0.0)


def _post_batch(session: requests.Session, url: str,
                batch: Sequence[ScoreRequest], timeout: float) -> list[ScoreResult]:
    resp = session.post(url, json={"pairs": [r.as_wire() for r in batch]}, timeout=timeout)
    if resp.status_code != 200:
        raise ProtocolError(f"scorer returned HTTP {resp.status_code}", resp.text[:1000])
    try:
        payload = resp.json()
        scores = {item["pair_id"]: item["score"] for item in payload["scores"]}
    except (ValueError, KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed scorer response: {exc}", resp.text[:1000]) from exc
    wanted = [r.pair_id for r in batch]
    if set(scores) != set(wanted):
        raise ProtocolError("scorer response pair_ids do not match the request",
                            sorted(set(scores) ^ set(wanted)))
    results = []
    for pair_id in wanted:
        value = scores[pair_id]
        if not isinstance(value, (int, float)) or not 0.0 <= float(value) <= 1.0:
            raise ScoreValidationError(f"score for {pair_id} outside [0, 1]: {value}")
        results.append(ScoreResult(pair_id=pair_id, score=float(value)))
    return results


def external_score_batch(score_requests: Sequence[ScoreRequest], endpoint: str,
                         batch_size: int = DEFAULT_BATCH_SIZE,
                         max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
                         timeout: float = 30.0,
                         session: requests.Session | None = None,
                         ) -> tuple[list[ScoreResult], list[FailedItem]]:
    """Score requests against an external scorer endpoint, in batches.

    Batches are dispatched with bounded concurrency; results are assembled
    in request order. A batch that times out is retried once and then its
    items are reported as failed rather than voiding the whole run.

    Raises:
        ProtocolError: non-200 status, unparseable body, or misaligned ids.
        ScoreValidationError: a returned score falls outside [0, 1].
    """
    if not score_requests:
        raise ValueError("batch must be non-empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    url = endpoint.rstrip("/") + "/score"
    http = session or requests.Session()
    batches = [score_requests[i:i + batch_size]
               for i in range(0, len(score_requests), batch_size)]

    def run(batch: Sequence[ScoreRequest]) -> tuple[list[ScoreResult], list[FailedItem]]:
        for attempt in (0, 1):
            try:
                return _post_batch(http, url, batch, timeout), []
            except requests.Timeout:
                if attempt == 0:
                    log.warning("scorer batch timed out, retrying once")
        failed = [FailedItem(r.pair_id, "timeout") for r in batch]
        return [], failed

    if max_in_flight > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            outcomes = list(pool.map(run, batches))
    else:
        outcomes = [run(b) for b in batches]
    results: list[ScoreResult] = []
    failures: list[FailedItem] = []
    for batch_results, batch_failures in outcomes:
        results.extend(batch_results)
        failures.extend(batch_failures)
    return results, failures
