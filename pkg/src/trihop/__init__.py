"""Three-hop reasoning engine for implicit sentiment analysis.

Builds the vanilla, zero-shot CoT, and three-hop prompt chains, samples
candidate answers from pluggable backends, selects answers by
self-consistency voting, and evaluates predictions with macro-F1 over
All and implicit-only splits. A CLI ties runs, evaluation, reporting,
and training-data export together.
"""
from .backend import (
    Backend,
    BackendConfig,
    Candidate,
    GenerationRequest,
    HttpBackend,
    MockBackend,
    load_mock_script,
    make_backend,
)
from .chain import (
    MODES,
    ChainTrace,
    DecodingConfig,
    HopRecord,
    Instance,
    run_batch,
    run_chain,
)
from .consistency import (
    UNPARSEABLE_KEY,
    CandidateCluster,
    VotingConfig,
    cluster_candidates,
    polarity_key,
    select_answer,
    text_key,
    vote,
)
from .data_eval import (
    Dataset,
    EvalReport,
    evaluate,
    load_dataset,
    read_report,
    read_traces,
    write_dataset,
    write_report,
    write_traces,
)
from .extraction import ExtractionResult, Polarity, extract_polarity, normalize_text
from .prompts import (
    HopContext,
    assemble_revising_prompt,
    build_hop_prompt,
    build_vanilla_prompt,
    build_zerocot_prompt,
    extend_context,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendConfig",
    "Candidate",
    "CandidateCluster",
    "ChainTrace",
    "Dataset",
    "DecodingConfig",
    "EvalReport",
    "ExtractionResult",
    "GenerationRequest",
    "HopContext",
    "HopRecord",
    "HttpBackend",
    "Instance",
    "MODES",
    "MockBackend",
    "Polarity",
    "UNPARSEABLE_KEY",
    "VotingConfig",
    "assemble_revising_prompt",
    "build_hop_prompt",
    "build_vanilla_prompt",
    "build_zerocot_prompt",
    "cluster_candidates",
    "evaluate",
    "extend_context",
    "extract_polarity",
    "load_dataset",
    "load_mock_script",
    "make_backend",
    "normalize_text",
    "polarity_key",
    "read_report",
    "read_traces",
    "run_batch",
    "run_chain",
    "select_answer",
    "text_key",
    "vote",
    "write_dataset",
    "write_report",
    "write_traces",
]
