"""Shared fixtures: the 20-mention corpus, signature pairs, mock LLM clients."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from ecrkit.augment import AugmentationPlan, eligible_sources
from ecrkit.corpus import Corpus, load_corpus
from ecrkit.llm import OPERATORS, MockClient, render_prompt
from ecrkit.pairing import (
    DiscourseWindow,
    Label,
    MentionPair,
    PairDataset,
    build_pair_dataset,
    extract_window,
)

from tests_paths import CORPUS_PATH, SIGNATURE_TRANSCRIPT_PATH

# Lexically divergent replacement expressions for every fixture trigger,
# used to synthesize mock generation responses for non-signature pairs.
SYNONYMS = {
    "died": ["departed", "expired", "perished"],
    "passed away": ["departed", "expired"],
    "married": ["tied the knot", "exchanged vows"],
    "wed": ["tied the knot", "exchanged vows"],
    "crashed": ["smashed", "wrecked"],
    "collided": ["smashed", "wrecked"],
    "address": ["tackle", "remedy"],
    "addressed": ["tackled", "remedied"],
    "protect": ["secured", "fortifying", "defend"],
    "protects": ["shields", "safeguards"],
    "shielded": ["safeguarded", "defended"],
    "pay": ["shelled out", "forked over"],
    "shelled out": ["forked over", "handed over"],
    "hacked": ["infiltrated", "compromised"],
    "breached": ["infiltrated", "compromised"],
    "released": ["unveiled", "debuted"],
}


@pytest.fixture(scope="session")
def fixture_corpus() -> Corpus:
    return load_corpus(CORPUS_PATH, "test")


@pytest.fixture(scope="session")
def fixture_dataset(fixture_corpus) -> PairDataset:
    return build_pair_dataset(fixture_corpus, k_train=15, k_infer=5, w=2)


def make_pair(corpus: Corpus, first: str, second: str, w: int = 2) -> MentionPair:
    a = extract_window(corpus, first, w)
    b = extract_window(corpus, second, w)
    same = (corpus.mentions[first].gold_cluster_id
            == corpus.mentions[second].gold_cluster_id)
    return MentionPair(
        first=a, second=b,
        label=Label.COREF if same else Label.NOT_COREF,
        pair_id=f"{first}__{second}",
    )


@pytest.fixture(scope="session")
def ew_pair(fixture_corpus) -> MentionPair:
    """The coreferential celebrity-death pair."""
    return make_pair(fixture_corpus, "m_ew1", "m_ew2")


@pytest.fixture(scope="session")
def ms_pair(fixture_corpus) -> MentionPair:
    """The non-coreferential software-security pair."""
    return make_pair(fixture_corpus, "m_ms1", "m_ms2")


def _load_signature_entries() -> dict[str, str]:
    entries = {}
    with open(SIGNATURE_TRANSCRIPT_PATH, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rec = json.loads(line)
                entries[rec["prompt"]] = rec["response"]
    return entries


def _nce_response(trigger: str) -> str:
    syns = SYNONYMS[trigger.lower()]
    lines = [f"Expressions: {', '.join(syns)}"]
    for i, syn in enumerate(syns, 1):
        lines.append(
            f"{i}. Unrelated workers {syn} at a different venue in another town last year.")
    return "\n".join(lines)


def _ce_response(trigger: str, center: str) -> str:
    syns = SYNONYMS[trigger.lower()]
    lines = [f"Expressions: {', '.join(syns)}"]
    for i, syn in enumerate(syns, 1):
        lines.append(f"{i}. {center.replace(trigger, syn, 1)}")
    return "\n".join(lines)


def _nce_keep_response(trigger: str) -> str:
    return (f"Expressions: {trigger}\n"
            f"1. Unrelated workers {trigger} at a different venue in another town last year.\n"
            f"2. Other people {trigger} somewhere else entirely the month before.")


def _ce_keep_response(trigger: str, center: str) -> str:
    return (f"Expressions: {trigger}\n"
            f"1. According to follow-up reports, {center}\n"
            f"2. Witnesses confirmed that {center}")


def _para_response(window: DiscourseWindow) -> str:
    prefix = " ".join(window.prefix)
    suffix = " ".join(window.suffix)
    return (f"Prefix:\n1. To put it differently, {prefix}\n2. In other words, {prefix}\n"
            f"Suffix:\n1. To put it differently, {suffix}\n2. In other words, {suffix}")


def build_mock_entries(dataset: PairDataset,
                       plan: AugmentationPlan) -> dict[str, str]:
    """Canned responses covering every prompt the generators will render
    for the eligible sources of the dataset, signature pairs included."""
    entries: dict[str, str] = {}

    def add(prompt: str, response: str) -> None:
        entries.setdefault(prompt, response)

    for pair in eligible_sources(dataset, plan):
        if pair.label is Label.COREF:
            target = pair.first
            add(render_prompt(OPERATORS["syn_nce"],
                              {"trigger": target.trigger, "sentence": target.center}),
                _nce_response(target.trigger))
            add(render_prompt(OPERATORS["nce_keep"],
                              {"trigger": target.trigger, "sentence": target.center}),
                _nce_keep_response(target.trigger))
        else:
            target = pair.second
            add(render_prompt(OPERATORS["syn_ce"],
                              {"trigger": target.trigger, "sentence": target.center}),
                _ce_response(target.trigger, target.center))
            add(render_prompt(OPERATORS["ce_keep"],
                              {"trigger": target.trigger, "sentence": target.center}),
                _ce_keep_response(target.trigger, target.center))
            add(render_prompt(OPERATORS["para"], {
                "text": target.text,
                "prefix": " ".join(target.prefix),
                "mention": target.center,
                "suffix": " ".join(target.suffix),
            }), _para_response(target))
    entries.update(_load_signature_entries())
    return entries


@pytest.fixture(scope="session")
def tables_mock() -> MockClient:
    """Mock client holding only the signature-pair transcripts."""
    return MockClient.from_transcript(SIGNATURE_TRANSCRIPT_PATH)


@pytest.fixture(scope="session")
def full_mock(fixture_dataset) -> MockClient:
    """Mock client covering augmentation of the whole fixture dataset."""
    entries = build_mock_entries(fixture_dataset, AugmentationPlan())
    return MockClient.from_pairs(entries.items())


@pytest.fixture(scope="session")
def full_transcript_file(tmp_path_factory, fixture_dataset) -> Path:
    """The full mock transcript serialized for CLI runs."""
    entries = build_mock_entries(fixture_dataset, AugmentationPlan())
    path = tmp_path_factory.mktemp("transcripts") / "full.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for prompt, response in sorted(entries.items()):
            handle.write(json.dumps({"prompt": prompt, "response": response},
                                    ensure_ascii=False) + "\n")
    return path
