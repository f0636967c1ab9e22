"""Line-oriented parsers for LLM generation and paraphrase responses.

Parsing is anchored on explicit markers ("Expressions:", "Prefix:",
"Suffix:", "N.") rather than free-form extraction. Malformed responses
raise rather than being repaired: silent repair would corrupt the
minimal-edit guarantee of the augmented data, so callers drop and log
failed candidates instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import LlmParseError

_ITEM_RE = re.compile(r"^\s*(\d+)[.)]\s*(.*)$")
_EXPRESSIONS_RE = re.compile(r"^\s*Expressions\s*:\s*(.*)$", re.IGNORECASE)
_PREFIX_RE = re.compile(r"^\s*Prefix(?:es)?\s*:\s*(.*)$", re.IGNORECASE)
_SUFFIX_RE = re.compile(r"^\s*Suffix(?:es)?\s*:\s*(.*)$", re.IGNORECASE)
_SKIP_RE = re.compile(r"^\s*(?:\.\.\.|…|Event mentions\s*:)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class GenerationBundle:
    """Synonyms plus generated mention sentences, each containing one synonym."""

    synonyms: tuple[str, ...]
    mention_sentences: tuple[str, ...]

    def __post_init__(self):
        if not self.synonyms:
            raise ValueError("generation bundle requires at least one expression")
        if not self.mention_sentences or any(not s for s in self.mention_sentences):
            raise ValueError("generation bundle requires non-empty mention sentences")


def _numbered_items(lines: list[str]) -> list[str]:
    """Collect numbered items, folding continuation lines into the open item."""
    items: list[str] = []
    for line in lines:
        if _SKIP_RE.match(line):
            continue
        match = _ITEM_RE.match(line)
        if match:
            items.append(match.group(2).strip())
        elif items and line.strip():
            items[-1] = f"{items[-1]} {line.strip()}"
    return [i for i in items if i]


def parse_generation(raw: str) -> GenerationBundle:
    """Parse a synonym-and-mention generation response.

    Synonyms come from the line prefixed "Expressions:" (comma-split,
    trimmed); mention sentences from the numbered lines that follow.

    Raises:
        LlmParseError: no Expressions line or no numbered mention lines.
    """
    lines = raw.splitlines()
    synonyms: list[str] | None = None
    body_start = 0
    for i, line in enumerate(lines):
        match = _EXPRESSIONS_RE.match(line)
        if match:
            synonyms = [s.strip() for s in match.group(1).split(",") if s.strip()]
            body_start = i + 1
            break
    if not synonyms:
        raise LlmParseError("no Expressions line in generation response", raw)
    sentences = _numbered_items(lines[body_start:])
    if not sentences:
        raise LlmParseError("no numbered mention sentences in generation response", raw)
    return GenerationBundle(synonyms=tuple(synonyms), mention_sentences=tuple(sentences))


def parse_paraphrases(raw: str) -> tuple[list[str], list[str]]:
    """Parse prefix and suffix variant lists from a rewrite response.

    Sections are located by their "Prefix:"/"Suffix:" headers (plural
    accepted, order irrelevant); each holds a numbered list.

    Raises:
        LlmParseError: a header is missing or its list is empty.
    """
    sections: dict[str, list[str]] = {"prefix": [], "suffix": []}
    seen: set[str] = set()
    current: str | None = None
    for line in raw.splitlines():
        prefix_match = _PREFIX_RE.match(line)
        suffix_match = _SUFFIX_RE.match(line)
        if prefix_match or suffix_match:
            current = "prefix" if prefix_match else "suffix"
            seen.add(current)
            rest = (prefix_match or suffix_match).group(1).strip()
            if rest:
                sections[current].append(rest)
            continue
        if current is not None:
            sections[current].append(line)
    for name in ("prefix", "suffix"):
        if name not in seen:
            raise LlmParseError(f"no {name} header in paraphrase response", raw)
    prefixes = _numbered_items(sections["prefix"])
    suffixes = _numbered_items(sections["suffix"])
    if not prefixes or not suffixes:
        raise LlmParseError("empty paraphrase variant list", raw)
    return prefixes, suffixes
