import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ecrkit.errors import ProtocolError, ScoreValidationError
from ecrkit.pairing import Label
from ecrkit.scorer import (
    ScoreRequest,
    ScoreResult,
    external_score_batch,
    lemma_baseline_score,
)
from helpers import make_simple_pair


class StubScorer:
    """Tiny HTTP server whose /score behavior is swappable per test."""

    def __init__(self):
        self.hits = 0
        self.responder = self.echo_half

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                stub.hits += 1
                length = int(self.headers["Content-Length"])
                body = json.loads(self.rfile.read(length))
                status, payload = stub.responder(body)
                data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                except BrokenPipeError:
                    pass  # client gave up (timeout tests)

            def log_message(self, *args):
                pass

            def handle(self):
                try:
                    super().handle()
                except BrokenPipeError:
                    pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()
        self.endpoint = f"http://127.0.0.1:{self.server.server_port}"

    @staticmethod
    def echo_half(body):
        return 200, {"scores": [{"pair_id": p["pair_id"], "score": 0.5}
                                for p in body["pairs"]]}

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture()
def stub():
    server = StubScorer()
    yield server
    server.close()


def requests_batch(n):
    return [
        ScoreRequest(pair_id=f"p{i}", first_text="a bc", first_span=(0, 1),
                     second_text="x yz", second_span=(2, 4))
        for i in range(n)
    ]


def test_lemma_scorer_match():
    pair = make_simple_pair("died", "died", Label.COREF, lemma_a="die", lemma_b="die")
    assert lemma_baseline_score(pair).score == 1.0


def test_lemma_scorer_mismatch():
    pair = make_simple_pair("pay", "shelled out", Label.COREF,
                            lemma_a="pay", lemma_b="shell")
    assert lemma_baseline_score(pair).score == 0.0


def test_lemma_scorer_case_folds():
    pair = make_simple_pair("Died", "died", Label.COREF, lemma_a="Die", lemma_b="die")
    assert lemma_baseline_score(pair).score == 1.0


def test_lemma_scorer_on_raw_request():
    req = ScoreRequest(pair_id="p", first_text="he died now", first_span=(3, 7),
                       second_text="she died too", second_span=(4, 8))
    assert lemma_baseline_score(req).score == 1.0


def test_score_request_from_pair_span_alignment(fixture_corpus, ew_pair):
    req = ScoreRequest.from_pair(ew_pair)
    assert req.first_text[req.first_span[0]:req.first_span[1]] == "died"
    assert req.second_text[req.second_span[0]:req.second_span[1]] == "died"


def test_score_result_range_enforced():
    with pytest.raises(ScoreValidationError):
        ScoreResult(pair_id="p", score=1.7)


def test_echo_stub_all_half(stub):
    results, failures = external_score_batch(requests_batch(4), stub.endpoint)
    assert not failures
    assert [r.score for r in results] == [0.5] * 4
    assert [r.pair_id for r in results] == [f"p{i}" for i in range(4)]


def test_batching_splits_requests(stub):
    results, _ = external_score_batch(requests_batch(5), stub.endpoint, batch_size=2)
    assert stub.hits == 3
    assert [r.pair_id for r in results] == [f"p{i}" for i in range(5)]


def test_out_of_range_score_rejected(stub):
    stub.responder = lambda body: (200, {"scores": [
        {"pair_id": p["pair_id"], "score": 1.7} for p in body["pairs"]]})
    with pytest.raises(ScoreValidationError):
        external_score_batch(requests_batch(2), stub.endpoint)


def test_malformed_response_is_protocol_error(stub):
    stub.responder = lambda body: (200, b"this is not json")
    with pytest.raises(ProtocolError):
        external_score_batch(requests_batch(1), stub.endpoint)


def test_misaligned_pair_ids_rejected(stub):
    stub.responder = lambda body: (200, {"scores": [{"pair_id": "zz", "score": 0.5}]})
    with pytest.raises(ProtocolError):
        external_score_batch(requests_batch(1), stub.endpoint)


def test_non_200_is_protocol_error(stub):
    stub.responder = lambda body: (500, {"error": "down"})
    with pytest.raises(ProtocolError):
        external_score_batch(requests_batch(1), stub.endpoint)


def test_empty_batch_rejected(stub):
    with pytest.raises(ValueError):
        external_score_batch([], stub.endpoint)


def test_request_wire_format(stub):
    captured = {}

    def capture(body):
        captured.update(body)
        return StubScorer.echo_half(body)

    stub.responder = capture
    external_score_batch(requests_batch(1), stub.endpoint)
    pair = captured["pairs"][0]
    assert set(pair) == {"pair_id", "first", "second"}
    assert pair["first"] == {"text": "a bc", "span": [0, 1]}


def test_wire_format_matches_shared_schema(stub):
    jsonschema = pytest.importorskip("jsonschema")
    from importlib import resources

    schema = json.loads(
        resources.files("ecrkit").joinpath("schemas/score_protocol.schema.json")
        .read_text())
    captured = {}

    def capture(body):
        captured.update(body)
        return StubScorer.echo_half(body)

    stub.responder = capture
    results, _ = external_score_batch(requests_batch(3), stub.endpoint)
    jsonschema.validate(
        captured, {**schema, "$ref": "#/definitions/score_request"})
    response_payload = {"scores": [{"pair_id": r.pair_id, "score": r.score}
                                   for r in results]}
    jsonschema.validate(
        response_payload, {**schema, "$ref": "#/definitions/score_response"})


def test_orientation_is_stable(ew_pair):
    req = ScoreRequest.from_pair(ew_pair)
    assert req.first_text == ew_pair.first.text
    assert req.second_text == ew_pair.second.text
    assert req.first_text != req.second_text


def test_timeout_fails_per_item_after_one_retry(stub):
    import time as _time

    def slow(body):
        _time.sleep(0.5)
        return StubScorer.echo_half(body)

    stub.responder = slow
    results, failures = external_score_batch(
        requests_batch(2), stub.endpoint, timeout=0.1)
    assert results == []
    assert [f.pair_id for f in failures] == ["p0", "p1"]
    assert all(f.reason == "timeout" for f in failures)
    assert stub.hits == 2  # original attempt plus exactly one retry
