import pytest
from fastapi.testclient import TestClient

from scorer_server.app import create_app
from scorer_server.config import ServerConfig


def wire_pair(pair_id, first_text, second_text, trigger_a=None, trigger_b=None):
    """Build a wire pair; spans point at the given trigger words."""

    def span(text, trigger):
        if trigger is None:
            return [0, len(text.split()[0])]
        pos = text.index(trigger)
        return [pos, pos + len(trigger)]

    return {
        "pair_id": pair_id,
        "first": {"text": first_text, "span": span(first_text, trigger_a)},
        "second": {"text": second_text, "span": span(second_text, trigger_b)},
    }


@pytest.fixture(scope="session")
def config():
    return ServerConfig(batch_cap=64)


@pytest.fixture(scope="session")
def client(config):
    return TestClient(create_app(config))


@pytest.fixture(scope="session")
def training_pairs():
    """Ten labeled wire pairs: five near-duplicates, five disjoint."""
    positives = [
        (wire_pair(f"pos{i}",
                   f"The committee approved the {noun} plan on Monday.",
                   f"The committee approved the {noun} plan on Monday.",
                   "approved", "approved"), 1)
        for i, noun in enumerate(["budget", "housing", "transit", "school", "park"])
    ]
    negatives = [
        (wire_pair(f"neg{i}",
                   f"A {animal} escaped from the city zoo overnight.",
                   f"Engineers repaired the {thing} after the storm.",
                   "escaped", "repaired"), 0)
        for i, (animal, thing) in enumerate([
            ("lion", "bridge"), ("panda", "runway"), ("wolf", "tunnel"),
            ("eagle", "pipeline"), ("otter", "antenna")])
    ]
    return positives + negatives
