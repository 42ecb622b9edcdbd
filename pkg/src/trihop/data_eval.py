"""Dataset ingestion, F1 evaluation over All/ISA splits, and file IO.

Datasets are flat JSONL, one instance per line. Trace files carry a
schema header record followed by one trace per line. Reports are a
single JSON document. Evaluation computes per-class precision/recall/F1
and macro-F1 over all evaluable instances and over the implicit subset;
failed traces and traceless instances are counted, never averaged in.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .chain import (
    TRACE_SCHEMA,
    UNPARSEABLE_FLAG,
    ChainTrace,
    Instance,
    trace_from_obj,
    trace_to_obj,
)
from .errors import BadRecordError, DuplicateIdError, SchemaMismatchError, UnknownIdError
from .extraction import POLARITY_WORDS, Polarity

REPORT_SCHEMA = "trihop/report/v1"

_DATASET_FIELDS = {"id", "sentence", "target", "polarity", "implicit"}


@dataclass
class Dataset:
    name: str
    instances: list[Instance] = field(default_factory=list)

    def by_id(self) -> dict[str, Instance]:
        return {inst.id: inst for inst in self.instances}

    def __len__(self) -> int:
        return len(self.instances)


def load_dataset(path: str | Path) -> Dataset:
    """Parse a dataset JSONL file, preserving line order.

    Every record needs exactly the fields id, sentence, target, polarity,
    implicit. Bad lines report their line number; duplicate ids are
    rejected. Targets missing from their sentence only warn.
    """
    path = Path(path)
    instances: list[Instance] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BadRecordError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        instance = _parse_instance(record, f"{path}:{lineno}")
        if instance.id in seen:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate id {instance.id!r}")
        seen.add(instance.id)
        instance.warn_if_target_missing()
        instances.append(instance)
    return Dataset(name=path.stem, instances=instances)


def _parse_instance(record: object, where: str) -> Instance:
    if not isinstance(record, dict):
        raise BadRecordError(f"{where}: record must be an object")
    missing = _DATASET_FIELDS - set(record)
    if missing:
        raise BadRecordError(f"{where}: missing fields {sorted(missing)}")
    unknown = set(record) - _DATASET_FIELDS
    if unknown:
        raise BadRecordError(f"{where}: unknown fields {sorted(unknown)}")
    for key in ("id", "sentence", "target"):
        value = record[key]
        if not isinstance(value, str) or not value.strip():
            raise BadRecordError(f"{where}: {key!r} must be a non-empty string")
    if record["polarity"] not in POLARITY_WORDS:
        raise BadRecordError(
            f"{where}: polarity must be one of {list(POLARITY_WORDS)}, got {record['polarity']!r}"
        )
    if not isinstance(record["implicit"], bool):
        raise BadRecordError(f"{where}: 'implicit' must be a boolean")
    return Instance(
        id=record["id"],
        sentence=record["sentence"],
        target=record["target"],
        gold=Polarity(record["polarity"]),
        implicit=record["implicit"],
    )


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    lines = []
    for inst in dataset.instances:
        lines.append(
            json.dumps(
                {
                    "id": inst.id,
                    "sentence": inst.sentence,
                    "target": inst.target,
                    "polarity": inst.gold.value,
                    "implicit": inst.implicit,
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Counts:
    n_all: int
    n_isa: int
    n_unparseable: int
    n_failed: int


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[Polarity, ClassMetrics]
    macro_f1_all: float
    macro_f1_isa: float
    micro_f1_all: float
    micro_f1_isa: float
    counts: Counts


def evaluate(traces: Iterable[ChainTrace], dataset: Dataset) -> EvalReport:
    """Score traces against their dataset.

    Every trace id must resolve in the dataset. Failed traces and
    instances lacking a trace count as failed and stay out of every
    denominator; unparseable traces predict neutral and stay in.
    """
    lookup = dataset.by_id()
    pairs: list[tuple[Instance, ChainTrace]] = []
    n_failed = 0
    n_unparseable = 0
    seen: set[str] = set()
    for trace in traces:
        instance = lookup.get(trace.instance_id)
        if instance is None:
            raise UnknownIdError(f"trace id {trace.instance_id!r} is not in the dataset")
        if trace.instance_id in seen:
            raise DuplicateIdError(f"more than one trace for id {trace.instance_id!r}")
        seen.add(trace.instance_id)
        if trace.failed:
            n_failed += 1
            continue
        if trace.prediction is None:
            raise UnknownIdError(
                f"trace {trace.instance_id!r} is not failed yet has no prediction"
            )
        if UNPARSEABLE_FLAG in trace.flags:
            n_unparseable += 1
        pairs.append((instance, trace))
    n_failed += sum(1 for inst in dataset.instances if inst.id not in seen)

    isa_pairs = [(inst, trace) for inst, trace in pairs if inst.implicit]
    per_class, macro_all, micro_all = _confusion_metrics(pairs)
    _, macro_isa, micro_isa = _confusion_metrics(isa_pairs)
    return EvalReport(
        per_class=per_class,
        macro_f1_all=macro_all,
        macro_f1_isa=macro_isa,
        micro_f1_all=micro_all,
        micro_f1_isa=micro_isa,
        counts=Counts(
            n_all=len(pairs),
            n_isa=len(isa_pairs),
            n_unparseable=n_unparseable,
            n_failed=n_failed,
        ),
    )


def _confusion_metrics(
    pairs: list[tuple[Instance, ChainTrace]]
) -> tuple[dict[Polarity, ClassMetrics], float, float]:
    tp = {p: 0 for p in Polarity}
    fp = {p: 0 for p in Polarity}
    fn = {p: 0 for p in Polarity}
    correct = 0
    for instance, trace in pairs:
        assert trace.prediction is not None
        if trace.prediction == instance.gold:
            tp[instance.gold] += 1
            correct += 1
        else:
            fp[trace.prediction] += 1
            fn[instance.gold] += 1
    per_class: dict[Polarity, ClassMetrics] = {}
    for label in Polarity:
        precision = _ratio(tp[label], tp[label] + fp[label])
        recall = _ratio(tp[label], tp[label] + fn[label])
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_class[label] = ClassMetrics(precision=precision, recall=recall, f1=f1)
    # The macro mean runs over classes present in gold or predictions, so
    # a perfectly predicted two-class subset still scores 1.0; classes
    # absent from both sides are reported as zeros above but do not drag
    # the mean down.
    present = [p for p in Polarity if tp[p] + fp[p] + fn[p] > 0]
    macro = sum(per_class[p].f1 for p in present) / len(present) if present else 0.0
    micro = _ratio(correct, len(pairs))
    return per_class, macro, micro


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def write_traces(
    traces: Iterable[ChainTrace], path: str | Path, config: dict | None = None
) -> None:
    """Write a trace JSONL file: header record first, one trace per line."""
    header = json.dumps(
        {"schema": TRACE_SCHEMA, "config": config or {}}, ensure_ascii=False
    )
    lines = [header]
    lines.extend(json.dumps(trace_to_obj(t), ensure_ascii=False) for t in traces)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_traces(path: str | Path) -> tuple[list[ChainTrace], dict]:
    """Read a trace JSONL file back into traces plus the header config."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaMismatchError(f"{path}:1: empty file, expected a header record")
    header = _parse_json_line(lines[0], path, 1)
    if not isinstance(header, dict) or header.get("schema") != TRACE_SCHEMA:
        raise SchemaMismatchError(
            f"{path}:1: expected a header record with schema {TRACE_SCHEMA!r}"
        )
    config = header.get("config")
    if not isinstance(config, dict):
        raise SchemaMismatchError(f"{path}:1: header 'config' must be an object")
    traces: list[ChainTrace] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = _parse_json_line(line, path, lineno)
        try:
            traces.append(trace_from_obj(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatchError(f"{path}:{lineno}: bad trace record: {exc}") from exc
    return traces, config


def _parse_json_line(line: str, path: Path, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaMismatchError(f"{path}:{lineno}: expected an object")
    return obj


def report_to_obj(report: EvalReport, config: dict | None = None) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "config": config or {},
        "per_class": {
            label.value: {
                "precision": metrics.precision,
                "recall": metrics.recall,
                "f1": metrics.f1,
            }
            for label, metrics in report.per_class.items()
        },
        "macro_f1_all": report.macro_f1_all,
        "macro_f1_isa": report.macro_f1_isa,
        "micro_f1_all": report.micro_f1_all,
        "micro_f1_isa": report.micro_f1_isa,
        "counts": {
            "n_all": report.counts.n_all,
            "n_isa": report.counts.n_isa,
            "n_unparseable": report.counts.n_unparseable,
            "n_failed": report.counts.n_failed,
        },
    }


def write_report(report: EvalReport, path: str | Path, config: dict | None = None) -> None:
    Path(path).write_text(
        json.dumps(report_to_obj(report, config), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def read_report(path: str | Path) -> tuple[EvalReport, dict]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("schema") != REPORT_SCHEMA:
        raise SchemaMismatchError(f"{path}: expected schema {REPORT_SCHEMA!r}")
    try:
        per_class = {
            Polarity(label): ClassMetrics(
                precision=float(m["precision"]),
                recall=float(m["recall"]),
                f1=float(m["f1"]),
            )
            for label, m in obj["per_class"].items()
        }
        counts = Counts(
            n_all=int(obj["counts"]["n_all"]),
            n_isa=int(obj["counts"]["n_isa"]),
            n_unparseable=int(obj["counts"]["n_unparseable"]),
            n_failed=int(obj["counts"]["n_failed"]),
        )
        report = EvalReport(
            per_class=per_class,
            macro_f1_all=float(obj["macro_f1_all"]),
            macro_f1_isa=float(obj["macro_f1_isa"]),
            micro_f1_all=float(obj["micro_f1_all"]),
            micro_f1_isa=float(obj["micro_f1_isa"]),
            counts=counts,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatchError(f"{path}: bad report document: {exc}") from exc
    config = obj.get("config")
    return report, config if isinstance(config, dict) else {}
