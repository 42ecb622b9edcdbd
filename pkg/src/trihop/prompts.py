"""Byte-exact construction of every prompt this engine sends.

Five fixed templates: the plain polarity question, its "think step by
step" variant, the three hop questions of the aspect -> opinion ->
polarity chain, and the revising-prompt assembly used to build
supervised training inputs. All functions are pure; for a fixed input
the output is byte-identical across calls and platforms, which is what
the golden-file tests pin down.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import BadStepError, EmptyFieldError

VANILLA_TEMPLATE = 'Given the sentence "{sentence}", what is the sentiment polarity towards {target}?'
ZEROCOT_SUFFIX = " Let's think step by step."
SENTENCE_CONTEXT_TEMPLATE = 'Given the sentence "{sentence}"'
FINAL_QUESTION_TEMPLATE = "What is the sentiment polarity towards {target}?"

# Question suffix appended to the accumulated context at each hop.
HOP_QUESTION_TEMPLATES = {
    1: ", which specific aspect of {target} is possibly mentioned?",
    2: ". Based on the common sense, what is the implicit opinion towards the mentioned aspect of {target}, and why?",
    3: ". Based on the opinion, what is the sentiment polarity towards {target}?",
}

# Joiner between a context and an answer appended to it. Single space,
# fixed so golden files stay stable.
CONTEXT_JOINER = " "


@dataclass(frozen=True)
class HopContext:
    """Accumulated prompt context for one hop of the chain.

    ``step`` is the hop the text was built for; ``extend_context`` keeps
    the step unchanged until the next ``build_hop_prompt`` call relabels
    it. Step 1 text embeds the sentence; step k>1 text additionally
    contains every earlier selected answer verbatim.
    """

    step: int
    text: str


def _require(name: str, value: str) -> None:
    if not value or not value.strip():
        raise EmptyFieldError(f"{name} must be non-empty")


def build_vanilla_prompt(sentence: str, target: str) -> str:
    """Substitute sentence and target into the plain polarity question."""
    _require("sentence", sentence)
    _require("target", target)
    return VANILLA_TEMPLATE.format(sentence=sentence, target=target)


def build_zerocot_prompt(sentence: str, target: str) -> str:
    """Vanilla prompt with the fixed step-by-step suffix appended."""
    return build_vanilla_prompt(sentence, target) + ZEROCOT_SUFFIX


def build_hop_prompt(
    step: int, context: str | HopContext, target: str
) -> tuple[str, HopContext]:
    """Build the prompt for one hop and return it with the context it used.

    For step 1 ``context`` is the raw sentence and the context text
    becomes ``Given the sentence "{sentence}"``. For steps 2-3 it is the
    previous HopContext, already extended with the previous selected
    answer; its text is carried over verbatim and relabeled to ``step``.
    The returned prompt is always the context text plus the step's fixed
    question suffix, so the context is a byte-exact prefix of the prompt.
    """
    if step not in HOP_QUESTION_TEMPLATES:
        raise BadStepError(f"step must be 1, 2, or 3, got {step!r}")
    _require("target", target)
    if step == 1:
        if isinstance(context, HopContext):
            raise BadStepError("step 1 takes the raw sentence, not a HopContext")
        _require("sentence", context)
        hop_context = HopContext(step=1, text=SENTENCE_CONTEXT_TEMPLATE.format(sentence=context))
    else:
        if not isinstance(context, HopContext):
            raise BadStepError(f"step {step} takes the previous HopContext")
        _require("context", context.text)
        hop_context = HopContext(step=step, text=context.text)
    prompt = hop_context.text + HOP_QUESTION_TEMPLATES[step].format(target=target)
    return prompt, hop_context


def extend_context(context: HopContext, answer: str) -> HopContext:
    """Append a selected answer to the context: old text + space + answer."""
    _require("answer", answer)
    return HopContext(step=context.step, text=context.text + CONTEXT_JOINER + answer)


def assemble_revising_prompt(
    step: int, context: HopContext, answer: str, target: str
) -> str:
    """Assemble a supervised training input: context + answer + final question.

    Only steps 1 and 2 have revising prompts; the step-3 prompt already
    ends in the final polarity question, so step 3 raises.
    """
    if step == 3:
        raise BadStepError("step 3 needs no revising prompt; its own prompt ends in the final question")
    if step not in (1, 2):
        raise BadStepError(f"step must be 1 or 2, got {step!r}")
    _require("context", context.text)
    _require("answer", answer)
    _require("target", target)
    return (
        context.text
        + CONTEXT_JOINER
        + answer
        + CONTEXT_JOINER
        + FINAL_QUESTION_TEMPLATE.format(target=target)
    )
