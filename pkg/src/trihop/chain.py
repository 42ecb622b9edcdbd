"""Chain orchestration: one instance through vanilla, zerocot, or thor.

The thor mode runs three causally chained hops (aspect, implicit
opinion, polarity), voting over k samples at each hop and extending the
context with each selected answer. The baseline modes issue a single
prompt and vote on the polarity of its k samples directly. Every prompt,
candidate, and selection lands in a ChainTrace; backend failures mark a
trace failed instead of fabricating a prediction.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .backend import Backend, Candidate, GenerationRequest
from .consistency import (
    VotingConfig,
    best_member,
    cluster_candidates,
    polarity_key,
    select_answer,
    text_key,
)
from .errors import AllUnparseableError, BackendError, EmptyFieldError
from .extraction import Polarity
from .prompts import (
    CONTEXT_JOINER,
    HopContext,
    build_hop_prompt,
    build_vanilla_prompt,
    build_zerocot_prompt,
    extend_context,
)

logger = logging.getLogger(__name__)

MODES = ("vanilla", "zerocot", "thor")

UNPARSEABLE_FLAG = "unparseable"
LOW_CONSISTENCY_FLAG = "low_consistency"

TRACE_SCHEMA = "trihop/trace/v1"


@dataclass(frozen=True)
class Instance:
    """One labeled example: sentence, target term, gold polarity."""

    id: str
    sentence: str
    target: str
    gold: Polarity
    implicit: bool

    def validate(self) -> None:
        if not self.id or not self.id.strip():
            raise EmptyFieldError("instance id must be non-empty")
        if not self.sentence or not self.sentence.strip():
            raise EmptyFieldError(f"instance {self.id}: sentence must be non-empty")
        if not self.target or not self.target.strip():
            raise EmptyFieldError(f"instance {self.id}: target must be non-empty")

    def warn_if_target_missing(self) -> None:
        # Targets are expected inside their sentence; real datasets carry
        # casing mismatches, so this only warns.
        if self.target not in self.sentence:
            logger.warning(
                "instance %s: target %r does not occur verbatim in the sentence",
                self.id,
                self.target,
            )


@dataclass
class DecodingConfig:
    """Server-side decoding knobs, recorded in every trace file."""

    temperature: float = 0.9
    max_tokens: int = 256
    seed: int | None = None

    def validate(self) -> None:
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")


@dataclass
class HopRecord:
    step: int
    prompt: str
    candidates: list[Candidate]
    selected: Candidate
    consistency_flag: bool
    context_after: str


@dataclass
class ChainTrace:
    instance_id: str
    mode: str
    hops: list[HopRecord] = field(default_factory=list)
    prediction: Polarity | None = None
    flags: set[str] = field(default_factory=set)
    failed: bool = False
    error: str | None = None


def run_chain(
    instance: Instance,
    backend: Backend,
    mode: str,
    voting: VotingConfig,
    decoding: DecodingConfig | None = None,
) -> ChainTrace:
    """Run one instance through one mode, returning its full trace.

    Backend failures propagate after the backend's own retries; callers
    that must keep going (run_batch) convert them into failed traces.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    instance.validate()
    if decoding is None:
        decoding = DecodingConfig()
    decoding.validate()
    if mode == "thor":
        return _run_thor(instance, backend, voting, decoding)
    return _run_single(instance, backend, mode, voting, decoding)


def _run_single(
    instance: Instance,
    backend: Backend,
    mode: str,
    voting: VotingConfig,
    decoding: DecodingConfig,
) -> ChainTrace:
    if mode == "vanilla":
        prompt = build_vanilla_prompt(instance.sentence, instance.target)
    else:
        prompt = build_zerocot_prompt(instance.sentence, instance.target)
    candidates = _sample(backend, prompt, instance.id, 1, voting, decoding)
    flags: set[str] = set()
    selected, consistent, prediction = _vote_polarity(candidates, voting, flags)
    hop = HopRecord(
        step=1,
        prompt=prompt,
        candidates=candidates,
        selected=selected,
        consistency_flag=consistent,
        context_after=f"{prompt}{CONTEXT_JOINER}{selected.text}",
    )
    return ChainTrace(
        instance_id=instance.id,
        mode=mode,
        hops=[hop],
        prediction=prediction,
        flags=flags,
    )


def _run_thor(
    instance: Instance,
    backend: Backend,
    voting: VotingConfig,
    decoding: DecodingConfig,
) -> ChainTrace:
    flags: set[str] = set()
    hops: list[HopRecord] = []
    context: HopContext | None = None

    for step in (1, 2):
        if step == 1:
            prompt, context = build_hop_prompt(1, instance.sentence, instance.target)
        else:
            assert context is not None
            prompt, context = build_hop_prompt(2, context, instance.target)
        candidates = _sample(backend, prompt, instance.id, step, voting, decoding)
        clusters = cluster_candidates(candidates, text_key)
        try:
            selected, consistent = select_answer(clusters, voting)
        except AllUnparseableError:
            # Nothing survived normalization; carry the best-scored raw
            # answer forward so the chain can still finish.
            selected, consistent = best_member(clusters[0]), False
        if not consistent:
            flags.add(LOW_CONSISTENCY_FLAG)
        context = extend_context(context, selected.text)
        hops.append(
            HopRecord(
                step=step,
                prompt=prompt,
                candidates=candidates,
                selected=selected,
                consistency_flag=consistent,
                context_after=context.text,
            )
        )

    assert context is not None
    prompt, context = build_hop_prompt(3, context, instance.target)
    candidates = _sample(backend, prompt, instance.id, 3, voting, decoding)
    selected, consistent, prediction = _vote_polarity(candidates, voting, flags)
    final_context = extend_context(context, selected.text)
    hops.append(
        HopRecord(
            step=3,
            prompt=prompt,
            candidates=candidates,
            selected=selected,
            consistency_flag=consistent,
            context_after=final_context.text,
        )
    )
    return ChainTrace(
        instance_id=instance.id,
        mode="thor",
        hops=hops,
        prediction=prediction,
        flags=flags,
    )


def _vote_polarity(
    candidates: list[Candidate], voting: VotingConfig, flags: set[str]
) -> tuple[Candidate, bool, Polarity]:
    """Final-hop selection: the winning cluster's key is the prediction.

    When no candidate carries a polarity keyword, the prediction falls
    back to neutral, the unparseable flag is set, and the best-scored raw
    candidate is still recorded as selected.
    """
    clusters = cluster_candidates(candidates, polarity_key)
    try:
        selected, consistent = select_answer(clusters, voting)
        prediction = Polarity(clusters[0].key)
    except AllUnparseableError:
        selected, consistent = best_member(clusters[0]), False
        prediction = Polarity.NEUTRAL
        flags.add(UNPARSEABLE_FLAG)
    if not consistent:
        flags.add(LOW_CONSISTENCY_FLAG)
    return selected, consistent, prediction


def _sample(
    backend: Backend,
    prompt: str,
    instance_id: str,
    step: int,
    voting: VotingConfig,
    decoding: DecodingConfig,
) -> list[Candidate]:
    request = GenerationRequest(
        prompt=prompt,
        n=voting.k,
        temperature=decoding.temperature,
        max_tokens=decoding.max_tokens,
        seed=decoding.seed,
        instance_id=instance_id,
        step=step,
    )
    request.validate()
    return backend.generate(request)


def failed_trace(instance: Instance, mode: str, error: Exception) -> ChainTrace:
    """Trace for an instance whose backend calls gave out."""
    return ChainTrace(
        instance_id=instance.id,
        mode=mode,
        hops=[],
        prediction=None,
        flags=set(),
        failed=True,
        error=f"{type(error).__name__}: {error}",
    )


def run_batch(
    instances: Iterable[Instance],
    backend: Backend,
    mode: str,
    voting: VotingConfig,
    decoding: DecodingConfig | None = None,
    parallelism: int = 1,
) -> Iterator[ChainTrace]:
    """Run many instances, yielding traces in input order.

    Chains run concurrently up to ``parallelism``; completion order never
    leaks into output order. A backend failure marks that one instance's
    trace failed and the batch continues.
    """
    instances = list(instances)
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    limit = getattr(backend, "max_in_flight", None)
    if limit is not None and parallelism > limit:
        raise ValueError(
            f"parallelism {parallelism} exceeds the backend's max_in_flight {limit}"
        )

    def one(instance: Instance) -> ChainTrace:
        try:
            return run_chain(instance, backend, mode, voting, decoding)
        except BackendError as exc:
            logger.warning("instance %s failed: %s", instance.id, exc)
            return failed_trace(instance, mode, exc)

    if parallelism == 1 or len(instances) <= 1:
        for instance in instances:
            yield one(instance)
        return
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(one, instance) for instance in instances]
        for future in futures:
            yield future.result()


def trace_to_obj(trace: ChainTrace) -> dict:
    """Trace as a JSON-ready dict with a fixed field layout."""
    return {
        "instance_id": trace.instance_id,
        "mode": trace.mode,
        "hops": [
            {
                "step": hop.step,
                "prompt": hop.prompt,
                "candidates": [{"text": c.text, "score": c.score} for c in hop.candidates],
                "selected": {"text": hop.selected.text, "score": hop.selected.score},
                "consistency_flag": hop.consistency_flag,
                "context_after": hop.context_after,
            }
            for hop in trace.hops
        ],
        "prediction": trace.prediction.value if trace.prediction is not None else None,
        "flags": sorted(trace.flags),
        "failed": trace.failed,
        "error": trace.error,
    }


def trace_from_obj(obj: dict) -> ChainTrace:
    """Inverse of trace_to_obj. Raises KeyError/ValueError on bad shapes;
    the file reader wraps those with line numbers."""
    hops = [
        HopRecord(
            step=int(h["step"]),
            prompt=h["prompt"],
            candidates=[Candidate(text=c["text"], score=float(c["score"])) for c in h["candidates"]],
            selected=Candidate(text=h["selected"]["text"], score=float(h["selected"]["score"])),
            consistency_flag=bool(h["consistency_flag"]),
            context_after=h["context_after"],
        )
        for h in obj["hops"]
    ]
    prediction = obj["prediction"]
    if not isinstance(obj["instance_id"], str):
        raise ValueError("instance_id must be a string")
    if obj["mode"] not in MODES:
        raise ValueError(f"unknown mode {obj['mode']!r}")
    return ChainTrace(
        instance_id=obj["instance_id"],
        mode=obj["mode"],
        hops=hops,
        prediction=None if prediction is None else Polarity(prediction),
        flags=set(obj["flags"]),
        failed=bool(obj.get("failed", False)),
        error=obj.get("error"),
    )
