"""Command-line front end: run, eval, export-finetune, report.

Exit codes: 0 success, 2 usage error, 3 configuration or data error,
4 backend failure. Run settings come from flags, an optional TOML
manifest, or both; flags win. Every output file embeds the resolved
run-config snapshot so results are self-describing.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Iterable, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .backend import BackendConfig, make_backend
from .chain import MODES, ChainTrace, DecodingConfig, run_batch
from .consistency import VotingConfig
from .data_eval import (
    Dataset,
    EvalReport,
    evaluate,
    load_dataset,
    read_traces,
    write_report,
    write_traces,
)
from .errors import (
    BackendError,
    BadFixtureError,
    BadRecordError,
    BadStepError,
    DuplicateIdError,
    EmptyFieldError,
    ModeMismatchError,
    SchemaMismatchError,
    UnknownIdError,
)
from .prompts import SENTENCE_CONTEXT_TEMPLATE, HopContext, assemble_revising_prompt

logger = logging.getLogger(__name__)

FINETUNE_SCHEMA = "trihop/finetune/v1"

_CONFIG_ERRORS = (
    EmptyFieldError,
    BadStepError,
    BadRecordError,
    DuplicateIdError,
    UnknownIdError,
    SchemaMismatchError,
    ModeMismatchError,
    BadFixtureError,
    ValueError,
    OSError,
)


def export_finetune(
    traces: Iterable[ChainTrace],
    dataset: Dataset,
    out_path: str | Path,
    config: dict | None = None,
) -> int:
    """Write supervised revising examples from thor traces.

    Each trace yields three records: steps 1 and 2 assemble context +
    selected answer + the final polarity question, step 3 reuses the
    hop-3 prompt as-is. Labels are the gold polarity words. Returns the
    record count. Non-thor traces are a contract violation; failed traces
    are skipped with a warning.
    """
    lookup = dataset.by_id()
    records: list[dict] = []
    for trace in traces:
        if trace.mode != "thor":
            raise ModeMismatchError(
                f"export needs thor traces, got mode {trace.mode!r} for {trace.instance_id!r}"
            )
        instance = lookup.get(trace.instance_id)
        if instance is None:
            raise UnknownIdError(f"trace id {trace.instance_id!r} is not in the dataset")
        if trace.failed:
            logger.warning("skipping failed trace %s", trace.instance_id)
            continue
        aspect = trace.hops[0].selected.text
        opinion = trace.hops[1].selected.text
        initial = HopContext(
            step=1, text=SENTENCE_CONTEXT_TEMPLATE.format(sentence=instance.sentence)
        )
        extended = HopContext(step=2, text=trace.hops[0].context_after)
        inputs = {
            1: assemble_revising_prompt(1, initial, aspect, instance.target),
            2: assemble_revising_prompt(2, extended, opinion, instance.target),
            3: trace.hops[2].prompt,
        }
        for step in (1, 2, 3):
            records.append(
                {
                    "input": inputs[step],
                    "target_label": instance.gold.value,
                    "instance_id": trace.instance_id,
                    "step": step,
                }
            )
    header = json.dumps({"schema": FINETUNE_SCHEMA, "config": config or {}}, ensure_ascii=False)
    lines = [header]
    lines.extend(json.dumps(r, ensure_ascii=False) for r in records)
    Path(out_path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(records)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trihop",
        description="Three-hop reasoning runs, evaluation, and training-data export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a dataset through one prompting mode")
    run.add_argument("--config", help="TOML manifest; flags override its values")
    run.add_argument("--data", help="dataset JSONL path")
    run.add_argument("--mode", choices=MODES, help="prompting mode")
    run.add_argument("--out", help="trace JSONL output path")
    run.add_argument("--backend", choices=("mock", "http"), dest="backend_kind")
    run.add_argument("--mock-script", help="mock fixture JSONL (backend mock)")
    run.add_argument("--endpoint-url", help="completions endpoint (backend http)")
    run.add_argument("--model", help="model name sent to the endpoint")
    run.add_argument("--api-key-env", help="environment variable holding the API key")
    run.add_argument("--k", type=int, help="samples per hop")
    run.add_argument("--min-cluster", type=int, help="agreement threshold")
    run.add_argument("--temperature", type=float)
    run.add_argument("--max-tokens", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--parallelism", type=int, help="concurrent chains")
    run.set_defaults(func=_cmd_run)

    ev = sub.add_parser("eval", help="score a trace file against its dataset")
    ev.add_argument("--traces", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--out", required=True, help="report JSON output path")
    ev.set_defaults(func=_cmd_eval)

    ex = sub.add_parser("export-finetune", help="write revising training data from thor traces")
    ex.add_argument("--traces", required=True)
    ex.add_argument("--data", required=True)
    ex.add_argument("--out", required=True, help="training JSONL output path")
    ex.set_defaults(func=_cmd_export)

    rp = sub.add_parser("report", help="compare modes in one table")
    rp.add_argument("--data", required=True)
    rp.add_argument("--traces", required=True, nargs="+", help="one trace file per mode")
    rp.add_argument("--out-dir", help="also write comparison.tsv and comparison.png here")
    rp.set_defaults(func=_cmd_report)
    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 4


def entrypoint() -> None:
    sys.exit(dispatch(sys.argv[1:]))


def _load_manifest(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as handle:
        manifest = tomllib.load(handle)
    if not isinstance(manifest, dict):
        raise ValueError(f"{path}: manifest must be a table")
    return manifest


def _pick(flag_value, manifest: dict, *keys, default=None):
    """Resolution order: explicit flag, then manifest entry, then default."""
    if flag_value is not None:
        return flag_value
    node = manifest
    for key in keys[:-1]:
        node = node.get(key, {}) if isinstance(node, dict) else {}
    if isinstance(node, dict) and keys[-1] in node:
        return node[keys[-1]]
    return default


def _cmd_run(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args.config)
    data_path = _pick(args.data, manifest, "data")
    mode = _pick(args.mode, manifest, "mode")
    out_path = _pick(args.out, manifest, "out")
    for name, value in (("--data", data_path), ("--mode", mode), ("--out", out_path)):
        if value is None:
            raise ValueError(f"{name} is required (flag or manifest)")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    backend_config = BackendConfig(
        kind=_pick(args.backend_kind, manifest, "backend", "kind", default="mock"),
        endpoint_url=_pick(args.endpoint_url, manifest, "backend", "endpoint_url"),
        model_name=_pick(args.model, manifest, "backend", "model"),
        api_key_env=_pick(args.api_key_env, manifest, "backend", "api_key_env", default="THOR_API_KEY"),
    )
    mock_script = _pick(args.mock_script, manifest, "backend", "mock_script")
    voting = VotingConfig(
        k=_pick(args.k, manifest, "voting", "k", default=5),
        min_cluster=_pick(args.min_cluster, manifest, "voting", "min_cluster"),
    )
    decoding = DecodingConfig(
        temperature=_pick(args.temperature, manifest, "decoding", "temperature", default=0.9),
        max_tokens=_pick(args.max_tokens, manifest, "decoding", "max_tokens", default=256),
        seed=_pick(args.seed, manifest, "decoding", "seed"),
    )
    decoding.validate()
    parallelism = _pick(args.parallelism, manifest, "parallelism", default=1)

    dataset = load_dataset(data_path)
    backend = make_backend(backend_config, mock_script)
    traces = list(
        run_batch(dataset.instances, backend, mode, voting, decoding, parallelism=parallelism)
    )
    snapshot = _config_snapshot(mode, voting, decoding, backend_config)
    write_traces(traces, out_path, snapshot)
    failed = sum(1 for t in traces if t.failed)
    print(f"wrote {len(traces)} traces ({failed} failed) to {out_path}")
    return 0


def _config_snapshot(
    mode: str, voting: VotingConfig, decoding: DecodingConfig, backend: BackendConfig
) -> dict:
    # Semantic parameters only: parallelism and file paths are execution
    # details and would break byte-identical reruns.
    return {
        "mode": mode,
        "voting": {"k": voting.k, "min_cluster": voting.min_cluster},
        "decoding": {
            "temperature": decoding.temperature,
            "max_tokens": decoding.max_tokens,
            "seed": decoding.seed,
        },
        "backend": {
            "kind": backend.kind,
            "model_name": backend.model_name,
            "endpoint_url": backend.endpoint_url,
        },
    }


def _cmd_eval(args: argparse.Namespace) -> int:
    traces, run_config = read_traces(args.traces)
    dataset = load_dataset(args.data)
    report = evaluate(traces, dataset)
    write_report(report, args.out, run_config)
    c = report.counts
    print(
        f"macro_f1_all={report.macro_f1_all:.4f} macro_f1_isa={report.macro_f1_isa:.4f} "
        f"n_all={c.n_all} n_isa={c.n_isa} n_unparseable={c.n_unparseable} n_failed={c.n_failed}"
    )
    print(f"wrote report to {args.out}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    traces, run_config = read_traces(args.traces)
    dataset = load_dataset(args.data)
    count = export_finetune(traces, dataset, args.out, config=run_config)
    print(f"wrote {count} training records to {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    rows: list[tuple[str, EvalReport]] = []
    for trace_path in args.traces:
        traces, run_config = read_traces(trace_path)
        mode = run_config.get("mode")
        if mode is None and traces:
            mode = traces[0].mode
        report = evaluate(traces, dataset)
        rows.append((mode or "unknown", report))
    _print_table(rows)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        tsv_path = out_dir / "comparison.tsv"
        png_path = out_dir / "comparison.png"
        _write_tsv(rows, tsv_path)
        _write_figure(rows, png_path)
        print(f"wrote {tsv_path} and {png_path}")
    return 0


def _print_table(rows: list[tuple[str, EvalReport]]) -> None:
    width = max([len("mode")] + [len(mode) for mode, _ in rows])
    print(f"{'mode':<{width}}  {'All':>7}  {'ISA':>7}")
    for mode, report in rows:
        print(f"{mode:<{width}}  {report.macro_f1_all:>7.4f}  {report.macro_f1_isa:>7.4f}")
    if rows:
        c = rows[0][1].counts
        print(f"macro-F1 over n_all={c.n_all}, n_isa={c.n_isa} instances")


def _write_tsv(rows: list[tuple[str, EvalReport]], path: Path) -> None:
    header = (
        "mode\tmacro_f1_all\tmacro_f1_isa\tmicro_f1_all\tmicro_f1_isa"
        "\tn_all\tn_isa\tn_unparseable\tn_failed"
    )
    lines = [header]
    for mode, report in rows:
        c = report.counts
        lines.append(
            f"{mode}\t{report.macro_f1_all:.6f}\t{report.macro_f1_isa:.6f}"
            f"\t{report.micro_f1_all:.6f}\t{report.micro_f1_isa:.6f}"
            f"\t{c.n_all}\t{c.n_isa}\t{c.n_unparseable}\t{c.n_failed}"
        )
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _write_figure(rows: list[tuple[str, EvalReport]], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    modes = [mode for mode, _ in rows]
    all_scores = [report.macro_f1_all for _, report in rows]
    isa_scores = [report.macro_f1_isa for _, report in rows]
    positions = range(len(rows))
    bar_width = 0.38

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar([p - bar_width / 2 for p in positions], all_scores, bar_width, label="All")
    ax.bar([p + bar_width / 2 for p in positions], isa_scores, bar_width, label="ISA")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(modes)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("macro-F1")
    ax.set_title("Mode comparison")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
