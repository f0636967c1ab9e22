"""Counterfactual and ablation data generation for mention pairs.

Four generators produce label-flipped variants of an original pair, always
by editing the first window and never the second window's mention sentence:

* CAD (counterfactual augmented data): for a coreferential pair, the first
  mention sentence is replaced by generated sentences that use a lexically
  divergent synonym of the trigger and are non-coreferential to it; this is
  the minimal edit (only the first center changes). For a non-coreferential
  pair, sentences coreferential to the second mention are generated with
  trigger synonyms, and a new first window is assembled from paraphrases of
  the second window's prefix and suffix around each candidate.
* TIA (trigger-intervention ablation): as CAD but without synonym
  diversification; candidates must contain the original trigger verbatim.
* CIA (context-intervention ablation): as CAD but with both windows'
  prefixes and suffixes paraphrased, deliberately producing larger edits.
* TAD (temporal-commonsense augmented data): as CAD but both windows get
  generated temporal prefix/suffix context instead of the original or
  paraphrased discourse.

Candidates that fail their structural constraint (synonym containment for
CAD/CIA/TAD, verbatim trigger containment for TIA) or whose responses fail
to parse are dropped with a logged warning rather than repaired.

Each generated pair carries an edit ledger naming exactly the window
segments that differ from the source, and a plausibility score from a
token-level edit-distance proxy (an embedding-based scorer can be plugged
in through the ``plausibility_fn`` hook).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, NamedTuple, Sequence

from .errors import LlmParseError
from .llm import OPERATORS, CompletionClient, parse_generation, parse_paraphrases, render_prompt
from .pairing import DiscourseWindow, Label, MentionPair, PairDataset, window_with_center

log = logging.getLogger(__name__)

SEGMENTS = (
    "first.prefix", "first.center", "first.suffix",
    "second.prefix", "second.center", "second.suffix",
)


class AugKind(str, Enum):
    CAD = "CAD"
    TIA = "TIA"
    CIA = "CIA"
    TAD = "TAD"


class EditRecord(NamedTuple):
    segment: str
    action: str  # replaced | paraphrased | generated


@dataclass(frozen=True)
class AugmentedPair(MentionPair):
    kind: AugKind
    source_pair_id: str
    edit_ledger: tuple[EditRecord, ...]
    plausibility: float

    def __post_init__(self):
        if not 0.0 <= self.plausibility <= 1.0:
            raise ValueError(f"plausibility must be in [0, 1], got {self.plausibility}")

    def as_dict(self) -> dict:
        data = super().as_dict()
        data.update({
            "kind": self.kind.value,
            "source_pair_id": self.source_pair_id,
            "edit_ledger": [list(rec) for rec in self.edit_ledger],
            "plausibility": self.plausibility,
        })
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentedPair":
        base = MentionPair.from_dict(data)
        return cls(
            first=base.first,
            second=base.second,
            label=base.label,
            pair_id=base.pair_id,
            kind=AugKind(data["kind"]),
            source_pair_id=data["source_pair_id"],
            edit_ledger=tuple(EditRecord(*rec) for rec in data["edit_ledger"]),
            plausibility=data["plausibility"],
        )


@dataclass(frozen=True)
class AugmentationPlan:
    """How many augmentations to keep per source and which sources qualify."""

    per_original: int = 2
    top_n: int = 5  # only the top-n nearest pairs per anchor are augmented
    seed: int = 0

    def __post_init__(self):
        if self.per_original < 1:
            raise ValueError("per_original must be >= 1")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


def _token_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, 1):
        cur = [i]
        for j, tb in enumerate(b, 1):
            if ta == tb:
                cur.append(prev[j - 1])
            else:
                cur.append(1 + min(prev[j], cur[j - 1], prev[j - 1]))
        prev = cur
    return prev[-1]


def plausibility_proxy(source: MentionPair, aug: MentionPair) -> float:
    """Token-level similarity between a source pair and its augmentation.

    1 - editDistance(tokens(source), tokens(aug)) / max(length); 1.0 means
    identical, 0.0 completely disjoint sequences of equal length.
    """
    src = f"{source.first.text} {source.second.text}".split()
    new = f"{aug.first.text} {aug.second.text}".split()
    longest = max(len(src), len(new))
    if longest == 0:
        return 1.0
    return 1.0 - _token_edit_distance(src, new) / longest


PlausibilityFn = Callable[[MentionPair, MentionPair], float]


def _match_synonym(candidate: str, synonyms: Sequence[str]) -> str | None:
    lowered = candidate.lower()
    for syn in synonyms:
        if syn.lower() in lowered:
            return syn
    return None


def _diff_ledger(source: MentionPair, first: DiscourseWindow,
                 second: DiscourseWindow, context_action: str) -> tuple[EditRecord, ...]:
    """Record exactly the window segments that differ from the source pair."""
    values = {
        "first.prefix": (source.first.prefix, first.prefix),
        "first.center": (source.first.center, first.center),
        "first.suffix": (source.first.suffix, first.suffix),
        "second.prefix": (source.second.prefix, second.prefix),
        "second.center": (source.second.center, second.center),
        "second.suffix": (source.second.suffix, second.suffix),
    }
    ledger = []
    for segment in SEGMENTS:
        old, new = values[segment]
        if old != new:
            action = "replaced" if segment.endswith(".center") else context_action
            ledger.append(EditRecord(segment, action))
    return tuple(ledger)


def _paraphrase_context(window: DiscourseWindow, llm: CompletionClient,
                        operator: str = "para") -> tuple[list[str], list[str]]:
    """One rewrite call for a window's context; empty context skips the call."""
    if not window.prefix and not window.suffix:
        return [""], [""]
    prompt = render_prompt(OPERATORS[operator], {
        "text": window.text,
        "prefix": " ".join(window.prefix),
        "mention": window.center,
        "suffix": " ".join(window.suffix),
    })
    response = llm.complete(prompt, operator=OPERATORS[operator].kind.value)
    prefixes, suffixes = parse_paraphrases(response)
    if not window.prefix:
        prefixes = [""]
    if not window.suffix:
        suffixes = [""]
    return prefixes, suffixes


def _temporal_context(trigger: str, sentence: str,
                      llm: CompletionClient) -> tuple[list[str], list[str]]:
    prompt = render_prompt(OPERATORS["tc"], {"trigger": trigger, "sentence": sentence})
    response = llm.complete(prompt, operator="TC")
    return parse_paraphrases(response)


def _generate_candidates(pair: MentionPair, llm: CompletionClient,
                         keep_trigger: bool) -> tuple[list[tuple[str, str]], DiscourseWindow]:
    """Run the generation step of the algorithms' first phase.

    For a coreferential pair the target is the first mention sentence and
    candidates must be non-coreferential to it; for a non-coreferential
    pair the target is the second mention sentence and candidates must be
    coreferential to it. Returns (candidate sentence, its trigger) pairs
    that passed containment validation, plus the target window.
    """
    if pair.label is Label.COREF:
        target = pair.first
        operator = OPERATORS["nce_keep" if keep_trigger else "syn_nce"]
    else:
        target = pair.second
        operator = OPERATORS["ce_keep" if keep_trigger else "syn_ce"]
    prompt = render_prompt(operator, {"trigger": target.trigger, "sentence": target.center})
    response = llm.complete(prompt, operator=operator.kind.value)
    try:
        bundle = parse_generation(response)
    except LlmParseError as exc:
        log.warning("dropping all candidates for %s: %s", pair.pair_id, exc)
        return [], target
    survivors: list[tuple[str, str]] = []
    for candidate in bundle.mention_sentences:
        if keep_trigger:
            if target.trigger not in candidate:
                log.warning("dropping candidate without verbatim trigger %r: %r",
                            target.trigger, candidate)
                continue
            survivors.append((candidate, target.trigger))
        else:
            synonym = _match_synonym(candidate, bundle.synonyms)
            if synonym is None:
                log.warning("dropping candidate without any generated synonym: %r", candidate)
                continue
            survivors.append((candidate, synonym))
    if not survivors:
        log.warning("no surviving candidates for %s", pair.pair_id)
    return survivors, target


def _assemble(pair: MentionPair, kind: AugKind, index: int,
              first: DiscourseWindow, second: DiscourseWindow,
              context_action: str, plausibility_fn: PlausibilityFn) -> AugmentedPair:
    tag = f"{kind.value.lower()}{index}"
    first = replace(first, mention_id=f"{pair.first.mention_id}~{tag}")
    if second is not pair.second:
        second = replace(second, mention_id=f"{pair.second.mention_id}~{tag}")
    shell = MentionPair(first=first, second=second,
                        label=pair.label.flipped(), pair_id=f"{pair.pair_id}~{tag}")
    return AugmentedPair(
        first=shell.first,
        second=shell.second,
        label=shell.label,
        pair_id=shell.pair_id,
        kind=kind,
        source_pair_id=pair.pair_id,
        edit_ledger=_diff_ledger(pair, first, second, context_action),
        plausibility=max(0.0, min(1.0, plausibility_fn(pair, shell))),
    )


def _variant(variants: Sequence[str], index: int) -> tuple[str, ...]:
    value = variants[index % len(variants)]
    return (value,) if value else ()


def generate_cad(pair: MentionPair, llm: CompletionClient,
                 plausibility_fn: PlausibilityFn = plausibility_proxy) -> list[AugmentedPair]:
    """Counterfactual augmented data with trigger and context intervention.

    Coreferential source: each candidate replaces only the first mention
    sentence. Non-coreferential source: a new first window is assembled
    from paraphrased second-window context around each candidate. The
    second window is byte-identical to the source in both branches.
    """
    candidates, target = _generate_candidates(pair, llm, keep_trigger=False)
    if not candidates:
        return []
    out: list[AugmentedPair] = []
    if pair.label is Label.COREF:
        for i, (sentence, trigger) in enumerate(candidates):
            first = window_with_center(pair.first, sentence, trigger, trigger.lower())
            out.append(_assemble(pair, AugKind.CAD, i, first, pair.second,
                                 "paraphrased", plausibility_fn))
    else:
        try:
            prefixes, suffixes = _paraphrase_context(pair.second, llm)
        except LlmParseError as exc:
            log.warning("dropping all candidates for %s: %s", pair.pair_id, exc)
            return []
        for i, (sentence, trigger) in enumerate(candidates):
            first = window_with_center(
                pair.first, sentence, trigger, trigger.lower(),
                prefix=_variant(prefixes, i), suffix=_variant(suffixes, i),
            )
            out.append(_assemble(pair, AugKind.CAD, i, first, pair.second,
                                 "paraphrased", plausibility_fn))
    return out


def generate_tia(pair: MentionPair, llm: CompletionClient,
                 plausibility_fn: PlausibilityFn = plausibility_proxy) -> list[AugmentedPair]:
    """Trigger-intervention ablation: like CAD but the original trigger is
    kept verbatim in every candidate (no synonym step)."""
    candidates, target = _generate_candidates(pair, llm, keep_trigger=True)
    if not candidates:
        return []
    out: list[AugmentedPair] = []
    if pair.label is Label.COREF:
        for i, (sentence, trigger) in enumerate(candidates):
            first = window_with_center(pair.first, sentence, trigger, target.head_lemma)
            out.append(_assemble(pair, AugKind.TIA, i, first, pair.second,
                                 "paraphrased", plausibility_fn))
    else:
        try:
            prefixes, suffixes = _paraphrase_context(pair.second, llm)
        except LlmParseError as exc:
            log.warning("dropping all candidates for %s: %s", pair.pair_id, exc)
            return []
        for i, (sentence, trigger) in enumerate(candidates):
            first = window_with_center(
                pair.first, sentence, trigger, target.head_lemma,
                prefix=_variant(prefixes, i), suffix=_variant(suffixes, i),
            )
            out.append(_assemble(pair, AugKind.TIA, i, first, pair.second,
                                 "paraphrased", plausibility_fn))
    return out


def generate_cia(pair: MentionPair, llm: CompletionClient,
                 plausibility_fn: PlausibilityFn = plausibility_proxy) -> list[AugmentedPair]:
    """Context-intervention ablation: synonym step kept, but both windows'
    prefixes and suffixes are paraphrased, producing larger edits. The
    second mention sentence itself stays unchanged."""
    candidates, target = _generate_candidates(pair, llm, keep_trigger=False)
    if not candidates:
        return []
    first_context_source = pair.first if pair.label is Label.COREF else pair.second
    try:
        pre1, suf1 = _paraphrase_context(first_context_source, llm)
        pre2, suf2 = _paraphrase_context(pair.second, llm)
    except LlmParseError as exc:
        log.warning("dropping all candidates for %s: %s", pair.pair_id, exc)
        return []
    out: list[AugmentedPair] = []
    for i, (sentence, trigger) in enumerate(candidates):
        first = window_with_center(
            pair.first, sentence, trigger, trigger.lower(),
            prefix=_variant(pre1, i), suffix=_variant(suf1, i),
        )
        second = replace(pair.second, prefix=_variant(pre2, i), suffix=_variant(suf2, i))
        out.append(_assemble(pair, AugKind.CIA, i, first, second,
                             "paraphrased", plausibility_fn))
    return out


def generate_tad(pair: MentionPair, llm: CompletionClient,
                 plausibility_fn: PlausibilityFn = plausibility_proxy) -> list[AugmentedPair]:
    """Temporal-commonsense augmented data: candidates as in CAD, but both
    windows receive generated temporal prefix/suffix context."""
    candidates, target = _generate_candidates(pair, llm, keep_trigger=False)
    if not candidates:
        return []
    try:
        pre2, suf2 = _temporal_context(pair.second.trigger, pair.second.center, llm)
    except LlmParseError as exc:
        log.warning("dropping all candidates for %s: %s", pair.pair_id, exc)
        return []
    out: list[AugmentedPair] = []
    for i, (sentence, trigger) in enumerate(candidates):
        try:
            pre1, suf1 = _temporal_context(trigger, sentence, llm)
        except LlmParseError as exc:
            log.warning("dropping candidate %d of %s: %s", i, pair.pair_id, exc)
            continue
        first = window_with_center(
            pair.first, sentence, trigger, trigger.lower(),
            prefix=_variant(pre1, 0), suffix=_variant(suf1, 0),
        )
        second = replace(pair.second, prefix=_variant(pre2, 0), suffix=_variant(suf2, 0))
        out.append(_assemble(pair, AugKind.TAD, i, first, second,
                             "generated", plausibility_fn))
    return out


GENERATORS: dict[AugKind, Callable[..., list[AugmentedPair]]] = {
    AugKind.CAD: generate_cad,
    AugKind.TIA: generate_tia,
    AugKind.CIA: generate_cia,
    AugKind.TAD: generate_tad,
}


def pair_ranks(dataset: PairDataset) -> dict[str, int]:
    """1-based neighbor rank of each pair within its anchor group."""
    ranks: dict[str, int] = {}
    counts: dict[str, int] = {}
    for pair in dataset.pairs:
        anchor = pair.first.mention_id
        counts[anchor] = counts.get(anchor, 0) + 1
        ranks[pair.pair_id] = counts[anchor]
    return ranks


def eligible_sources(dataset: PairDataset, plan: AugmentationPlan) -> list[MentionPair]:
    """Pairs qualifying for augmentation: the top-n nearest per anchor."""
    ranks = pair_ranks(dataset)
    return [p for p in dataset.pairs if ranks[p.pair_id] <= plan.top_n]


def augment_dataset(dataset: PairDataset, kind: AugKind, llm: CompletionClient,
                    plan: AugmentationPlan,
                    plausibility_fn: PlausibilityFn = plausibility_proxy) -> list[AugmentedPair]:
    """Generate augmentation candidates for every eligible source pair."""
    generator = GENERATORS[kind]
    out: list[AugmentedPair] = []
    for pair in eligible_sources(dataset, plan):
        out.extend(generator(pair, llm, plausibility_fn))
    return out


def mix_dataset(ori: PairDataset, augs: Iterable[AugmentedPair],
                plan: AugmentationPlan) -> PairDataset:
    """Append selected augmentations to the original dataset.

    Original order is preserved; for each eligible source, at most
    ``plan.per_original`` of its candidates are chosen uniformly at random
    under ``plan.seed``. Candidates of ineligible sources are discarded.

    Raises:
        ValueError: an augmentation references an unknown source pair.
    """
    ranks = pair_ranks(ori)
    by_source: dict[str, list[AugmentedPair]] = {}
    for aug in augs:
        if aug.source_pair_id not in ranks:
            raise ValueError(f"augmentation {aug.pair_id} references unknown "
                             f"source {aug.source_pair_id}")
        by_source.setdefault(aug.source_pair_id, []).append(aug)
    rng = random.Random(plan.seed)
    appended: list[AugmentedPair] = []
    for pair in ori.pairs:
        if ranks[pair.pair_id] > plan.top_n:
            continue
        candidates = by_source.get(pair.pair_id, [])
        if not candidates:
            continue
        if len(candidates) <= plan.per_original:
            chosen = list(candidates)
        else:
            chosen = rng.sample(candidates, plan.per_original)
            chosen.sort(key=lambda a: a.pair_id)
        appended.extend(chosen)
    return PairDataset(pairs=ori.pairs + tuple(appended),
                       k_train=ori.k_train, k_infer=ori.k_infer)


def render_pair_dump(pair: MentionPair) -> str:
    """Human-readable dump with window boundary markers."""
    return f"<s>{pair.first.text}</s>\n<s>{pair.second.text}</s>"
