import json
import socket
import threading
import time
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from conftest import wire_pair


def load_schema():
    text = resources.files("scorer_server").joinpath(
        "schemas/score_protocol.schema.json").read_text()
    return json.loads(text)


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_round_trip_alignment(client):
    pairs = [wire_pair(f"p{i}", f"event number {i} happened", "another event entirely")
             for i in range(7)]
    response = client.post("/score", json={"pairs": pairs})
    assert response.status_code == 200
    scores = response.json()["scores"]
    assert [s["pair_id"] for s in scores] == [f"p{i}" for i in range(7)]
    assert all(0.0 <= s["score"] <= 1.0 for s in scores)


def test_messages_validate_against_shared_schema(client):
    schema = load_schema()
    request_body = {"pairs": [
        wire_pair("a", "the reactor shut down", "the reactor shut down"),
        wire_pair("b", "a concert was cancelled", "a bridge was repaired"),
    ]}
    jsonschema.validate(request_body, {**schema, "$ref": "#/definitions/score_request"})
    response = client.post("/score", json=request_body)
    assert response.status_code == 200
    jsonschema.validate(response.json(),
                        {**schema, "$ref": "#/definitions/score_response"})


def test_schema_is_byte_identical_to_primary():
    ours = resources.files("scorer_server").joinpath(
        "schemas/score_protocol.schema.json").read_text()
    primary = Path(__file__).resolve().parents[2] / "src" / "ecrkit" / \
        "schemas" / "score_protocol.schema.json"
    if not primary.exists():
        pytest.skip("primary package sources not present")
    assert ours == primary.read_text()


def test_malformed_request_gets_400(client):
    response = client.post("/score", json={"pears": []})
    assert response.status_code == 400
    assert "error" in response.json()


def test_missing_span_gets_400(client):
    response = client.post("/score", json={"pairs": [
        {"pair_id": "x", "first": {"text": "abc"}, "second": {"text": "def",
                                                              "span": [0, 1]}}]})
    assert response.status_code == 400


def test_invalid_span_gets_400(client):
    bad = wire_pair("x", "short", "short")
    bad["first"]["span"] = [2, 99]
    response = client.post("/score", json={"pairs": [bad]})
    assert response.status_code == 400
    assert "span" in response.json()["error"]


def test_oversize_batch_gets_413(client, config):
    pairs = [wire_pair(f"p{i}", "a b c", "d e f")
             for i in range(config.batch_cap + 1)]
    response = client.post("/score", json={"pairs": pairs})
    assert response.status_code == 413


def test_scores_are_clamped(config):
    from scorer_server.app import create_app

    class WildScorer:
        def score_batch(self, pairs):
            return [3.7 for _ in pairs]

    from fastapi.testclient import TestClient

    wild_client = TestClient(create_app(config, model=WildScorer()))
    response = wild_client.post("/score", json={"pairs": [
        wire_pair("p", "a b", "c d")]})
    assert response.status_code == 200
    assert response.json()["scores"][0]["score"] == 1.0


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_server(config):
    import uvicorn

    from scorer_server.app import create_app

    port = _free_port()
    server = uvicorn.Server(uvicorn.Config(
        create_app(config), host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    import requests

    while time.monotonic() < deadline:
        try:
            if requests.get(f"http://127.0.0.1:{port}/healthz", timeout=1).ok:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        pytest.fail("live server did not come up")
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_primary_client_round_trip(live_server):
    """The toolkit's own batch client scores N pairs against this server."""
    ecrkit_scorer = pytest.importorskip("ecrkit.scorer")
    requests_batch = [
        ecrkit_scorer.ScoreRequest(
            pair_id=f"p{i}",
            first_text=f"the merger closed on day {i}",
            first_span=(4, 10),
            second_text="the merger closed yesterday",
            second_span=(4, 10),
        )
        for i in range(40)
    ]
    results, failures = ecrkit_scorer.external_score_batch(
        requests_batch, live_server, batch_size=16)
    assert not failures
    assert [r.pair_id for r in results] == [f"p{i}" for i in range(40)]
    assert all(0.0 <= r.score <= 1.0 for r in results)
