"""Prompt operators: few-shot templates for the generation and rewrite tasks.

Each operator bundles a fixed demonstration block and an input template
with named slots. Rendering is byte-deterministic: the demonstration is
prepended verbatim, then the input template is filled. Six operators ship:

* ``syn_nce``: two-step synonym + non-coreferential mention generation
  (counterfactuals for coreferential pairs).
* ``syn_ce``: two-step synonym + coreferential mention generation
  (counterfactuals for non-coreferential pairs).
* ``nce_keep`` / ``ce_keep``: single-step variants that keep the original
  trigger verbatim instead of diversifying it (trigger-intervention
  ablation).
* ``para``: paraphrase the prefix and suffix of a discourse window while
  keeping all event-relevant arguments coreferential.
* ``tc``: generate temporal-commonsense prefix/suffix context for a
  mention sentence.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from enum import Enum

from ..errors import TemplateError


class OperatorKind(str, Enum):
    SYN = "SYN"    # synonym generation (embedded as step 1 of the generators)
    CE = "CE"      # coreferential mention generation
    NCE = "NCE"    # non-coreferential mention generation
    PARA = "PARA"  # context paraphrase
    TC = "TC"      # temporal-commonsense context generation


@dataclass(frozen=True)
class PromptOperator:
    name: str
    kind: OperatorKind
    demonstration: str
    template: str
    slots: tuple[str, ...]

    def __post_init__(self):
        referenced = {
            field for _, field, _, _ in string.Formatter().parse(self.template)
            if field
        }
        undeclared = referenced - set(self.slots)
        if undeclared:
            raise ValueError(f"operator {self.name}: undeclared slots {sorted(undeclared)}")


class _SlotMap(dict):
    def __missing__(self, key):
        raise TemplateError(key)


def render_prompt(op: PromptOperator, slots: dict[str, str]) -> str:
    """Fill the operator's template; demonstration block comes first.

    Raises:
        TemplateError: a referenced slot is missing from ``slots``.
    """
    body = op.template.format_map(_SlotMap(slots))
    if op.demonstration:
        return f"{op.demonstration}\n\n{body}"
    return body


_NCE_DEMONSTRATION = """\
Please perform a two-step task based on commonsense inference.
Step1: Can you give me five similar expressions for the given word extracted from a sentence? Given word: 'fire' from 'A man has been charged on suspicion of arson following a fire that devastated a Somerset supermarket.' Please show all expressions here.
Step2: Try to use each expression in Step1 as the event head lemma to generate event mention not coreferential to the event induced by the event head lemma 'fire' in the given text: 'A man has been charged on suspicion of arson following a fire that devastated a Somerset supermarket.' Noting that, the human participants, non-human participants, times and locations in generated event mention content should be not coreferential to and different from those in the given text, keeping the sentence structure same as the given text as possible.
Expressions: blaze, inferno, conflagration, flames, combustion
Event mentions:
1. A woman has been charged with arson after a blaze at the local library in Bristol.
2. A teenager has been charged with arson after an inferno at the shopping mall in Birmingham.
3. A basketball athlete has been charged with arson after a conflagration at the historic museum in York."""

_NCE_TEMPLATE = """\
Please perform a two-step task based on commonsense inference.
Step1: Can you give me five similar expressions for the given word extracted from a sentence? Given word: '{trigger}' from '{sentence}' Please show all expressions here.
Step2: Try to use each expression in Step1 as the event head lemma to generate event mention not coreferential to the event induced by the event head lemma '{trigger}' in the given text: '{sentence}' Noting that, the human participants, non-human participants, times and locations in generated event mention content should be not coreferential to and different from those in the given text, keeping the sentence structure same as the given text as possible."""

_CE_DEMONSTRATION = """\
Please perform a two-step task based on commonsense inference.
Step1: Can you give me five similar expressions for the given word extracted from the sentence? Given word: 'free throw' from 'McDermott broke Rodney Buford's school scoring record of 2,116 points with a free throw with 4:43 to play in the first half.' Please show all expressions here.
Step2: Try to use each expression in Step1 as the event head lemma to generate event mention coreferential to the event induced by the event head lemma 'free throw' in the given text: 'McDermott broke Rodney Buford's school scoring record of 2,116 points with a free throw with 4:43 to play in the first half.' Noting that, the human participants, non-human participants, times and locations in generated event mention content should be coreferential to those in the given text, but the sentence structure can be different from the given text.
Expressions: basketball shot, scoring toss, uncontested shot, charity toss, foul shot
Event mentions:
1. McDermott broke Rodney Buford's school scoring record of 2,116 points with a basketball shot at 4:43 remaining in the first half.
2. McDermott surpassed Rodney Buford's school scoring record of 2,116 points with a scoring toss in the first half with 4:43 left on the clock.
3. McDermott set a new school scoring record of 2,116 points with an uncontested shot during the first half with 4:43 remaining."""

_CE_TEMPLATE = """\
Please perform a two-step task based on commonsense inference.
Step1: Can you give me five similar expressions for the given word extracted from a sentence? Given word: '{trigger}' from '{sentence}' Please show all expressions here.
Step2: Try to use each expression in Step1 as the event head lemma to generate event mention coreferential to the event induced by the event head lemma '{trigger}' in the given text: '{sentence}' Noting that, the human participants, non-human participants, times and locations in generated event mention content should be coreferential to those in the given text, but the sentence structure can be different from the given text."""

_NCE_KEEP_DEMONSTRATION = """\
Please perform a task based on commonsense inference.
Use the given word 'fire' as the event head lemma to generate event mentions not coreferential to the event induced by the event head lemma 'fire' in the given text: 'A man has been charged on suspicion of arson following a fire that devastated a Somerset supermarket.' Keep the word 'fire' itself as the event head lemma of every generated mention. Noting that, the human participants, non-human participants, times and locations in generated event mention content should be not coreferential to and different from those in the given text, keeping the sentence structure same as the given text as possible.
Expressions: fire
Event mentions:
1. A woman has been charged with arson after a fire at the local library in Bristol.
2. A teenager has been charged with arson after a fire at the shopping mall in Birmingham.
3. A basketball athlete has been charged with arson after a fire at the historic museum in York."""

_NCE_KEEP_TEMPLATE = """\
Please perform a task based on commonsense inference.
Use the given word '{trigger}' as the event head lemma to generate event mentions not coreferential to the event induced by the event head lemma '{trigger}' in the given text: '{sentence}' Keep the word '{trigger}' itself as the event head lemma of every generated mention. Noting that, the human participants, non-human participants, times and locations in generated event mention content should be not coreferential to and different from those in the given text, keeping the sentence structure same as the given text as possible."""

_CE_KEEP_DEMONSTRATION = """\
Please perform a task based on commonsense inference.
Use the given word 'free throw' as the event head lemma to generate event mentions coreferential to the event induced by the event head lemma 'free throw' in the given text: 'McDermott broke Rodney Buford's school scoring record of 2,116 points with a free throw with 4:43 to play in the first half.' Keep the word 'free throw' itself as the event head lemma of every generated mention. Noting that, the human participants, non-human participants, times and locations in generated event mention content should be coreferential to those in the given text, but the sentence structure can be different from the given text.
Expressions: free throw
Event mentions:
1. McDermott broke Rodney Buford's school scoring record of 2,116 points with a free throw at 4:43 remaining in the first half.
2. McDermott surpassed Rodney Buford's school scoring record of 2,116 points with a free throw in the first half with 4:43 left on the clock.
3. McDermott set a new school scoring record of 2,116 points with a free throw during the first half with 4:43 remaining."""

_CE_KEEP_TEMPLATE = """\
Please perform a task based on commonsense inference.
Use the given word '{trigger}' as the event head lemma to generate event mentions coreferential to the event induced by the event head lemma '{trigger}' in the given text: '{sentence}' Keep the word '{trigger}' itself as the event head lemma of every generated mention. Noting that, the human participants, non-human participants, times and locations in generated event mention content should be coreferential to those in the given text, but the sentence structure can be different from the given text."""

_PARA_DEMONSTRATION = """\
We have a snippet of text: 'Indianapolis Colts clinch playoff berth with win over Kansas City Chiefs December 23, 2012. Going into week 16, the Indianapolis Colts controlled their own destiny of making it to post-season play. The Colts could clinch a playoff berth with a win over the Kansas City Chiefs or a Pittsburgh Steelers loss. As they have done all season, the Colts refused to let their fate be decided by anyone other than themselves. The young team fought hard to defeat the Chiefs in another fourth quarter victory, 20-13. Although they started the game with a three-and-out, the Colts were able to light up the scoreboard first.'
The text can be divided into prefix, mention and suffix as following:
Prefix: 'Indianapolis Colts clinch playoff berth with win over Kansas City Chiefs December 23, 2012. Going into week 16, the Indianapolis Colts controlled their own destiny of making it to post-season play.'
Mention: 'The Colts could clinch a playoff berth with a win over the Kansas City Chiefs or a Pittsburgh Steelers loss.'
Suffix: 'As they have done all season, the Colts refused to let their fate be decided by anyone other than themselves. The young team fought hard to defeat the Chiefs in another fourth quarter victory, 20-13. Although they started the game with a three-and-out, the Colts were able to light up the scoreboard first.'
Can you paraphrase Prefix and Suffix in five different ways, where human participants, non-human participants, times, locations and actions in generated examples are coreferential to those in the original one?
Prefix:
1. The Indianapolis Colts secured a spot in the playoffs by defeating the Kansas City Chiefs on December 23, 2012, in week 16 of the season. The Colts had control of their own destiny and could have also clinched a playoff berth with a Pittsburgh Steelers loss.
2. On December 23, 2012, the Indianapolis Colts earned a playoff spot by winning against the Kansas City Chiefs in week 16. The Colts had the power to determine their own fate and could have also secured a playoff berth if the Pittsburgh Steelers lost.
Suffix:
1. Throughout the season, the Indianapolis Colts refused to let anyone else decide their fate. In another fourth-quarter victory, the young team fought hard to defeat the Kansas City Chiefs with a score of 20-13, despite starting the game with a three-and-out.
2. The Indianapolis Colts demonstrated their determination to control their own destiny throughout the season. They fought hard to secure another fourth-quarter victory against the Kansas City Chiefs, winning 20-13, despite starting the game with a three-and-out."""

_PARA_TEMPLATE = """\
We have a snippet of text: '{text}'
The text can be divided into prefix, mention and suffix as following:
Prefix: '{prefix}'
Mention: '{mention}'
Suffix: '{suffix}'
Can you paraphrase Prefix and Suffix in five different ways, where human participants, non-human participants, times, locations and actions in generated examples are coreferential to those in the original one?"""

_TC_DEMONSTRATION = """\
We have a template sentence: 'A publicist says Tara Reid has checked herself into rehab.' Please generate three Prefixes and Suffixes for the template sentence. Prefix content should be about what typically happens before the event head lemma 'checked herself' in the given template sentence, while Suffix content should be about what typically happens after the event head lemma 'checked herself' in the given template sentence. Note: Each generated Prefix or Suffix contains three sentences.
Prefixes:
1. After a series of public appearances where she appeared to be under the influence, rumors began to circulate that Tara Reid was struggling with addiction. Friends and family members reportedly urged her to seek help and get treatment before things got worse.
2. Tara Reid often faces mounting pressure from friends, family, and inner demons. The weight of her addiction or mental health challenges becomes increasingly burdensome. Seeking relief and stability, she reaches a breaking point where seeking professional help is no longer just an option, but a necessity.
Suffixes:
1. Reid's representatives have confirmed that she is taking her recovery seriously and is committed to staying in rehab for as long as necessary. She has also expressed gratitude for the support she has received from fans and loved ones during this difficult time. It is hoped that with the help of professionals, she will be able to overcome her addiction and move forward in a positive direction.
2. Tara Reid begins a transformative journey towards healing after checking herself into rehab. She commits herself to a comprehensive treatment plan tailored to her specific needs. With dedication and the support of professionals, she embarks on a path of self-discovery, growth, and sobriety."""

_TC_TEMPLATE = """\
We have a template sentence: '{sentence}' Please generate three Prefixes and Suffixes for the template sentence. Prefix content should be about what typically happens before the event head lemma '{trigger}' in the given template sentence, while Suffix content should be about what typically happens after the event head lemma '{trigger}' in the given template sentence. Note: Each generated Prefix or Suffix contains three sentences."""


OPERATORS: dict[str, PromptOperator] = {
    op.name: op
    for op in (
        PromptOperator(
            name="syn_nce",
            kind=OperatorKind.NCE,
            demonstration=_NCE_DEMONSTRATION,
            template=_NCE_TEMPLATE,
            slots=("trigger", "sentence"),
        ),
        PromptOperator(
            name="syn_ce",
            kind=OperatorKind.CE,
            demonstration=_CE_DEMONSTRATION,
            template=_CE_TEMPLATE,
            slots=("trigger", "sentence"),
        ),
        PromptOperator(
            name="nce_keep",
            kind=OperatorKind.NCE,
            demonstration=_NCE_KEEP_DEMONSTRATION,
            template=_NCE_KEEP_TEMPLATE,
            slots=("trigger", "sentence"),
        ),
        PromptOperator(
            name="ce_keep",
            kind=OperatorKind.CE,
            demonstration=_CE_KEEP_DEMONSTRATION,
            template=_CE_KEEP_TEMPLATE,
            slots=("trigger", "sentence"),
        ),
        PromptOperator(
            name="para",
            kind=OperatorKind.PARA,
            demonstration=_PARA_DEMONSTRATION,
            template=_PARA_TEMPLATE,
            slots=("text", "prefix", "mention", "suffix"),
        ),
        PromptOperator(
            name="tc",
            kind=OperatorKind.TC,
            demonstration=_TC_DEMONSTRATION,
            template=_TC_TEMPLATE,
            slots=("trigger", "sentence"),
        ),
    )
}
