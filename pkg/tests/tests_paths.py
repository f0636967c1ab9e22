"""Locations of the shipped test fixtures."""

from pathlib import Path

FIXTURE_DIR = Path(__file__).parent / "fixtures"
CORPUS_PATH = FIXTURE_DIR / "fixture_corpus.jsonl"
SIGNATURE_TRANSCRIPT_PATH = FIXTURE_DIR / "transcripts" / "signature_pairs.jsonl"
PAIRWISE_DIR = FIXTURE_DIR / "transcripts" / "pairwise"
