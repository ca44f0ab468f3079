"""Generation-trace ingestion and experiment-result persistence.

Trace files are JSONL, one record per line, carrying a versioned
``"schema": "seqscore/1"`` marker. A record looks like::

    {"schema": "seqscore/1",
     "id": "triviaqa-0001",
     "question": "Which city hosts the Eiffel Tower?",
     "gold_answers": ["Paris"],
     "dataset": "triviaqa",                      # optional
     "reference": {"text": "Paris",
                   "tokens": [3201],             # optional
                   "token_log_probs": [-0.12],
                   "decode": {"strategy": "greedy"}},
     "samples": [{"text": "Paris",
                  "token_log_probs": [-0.3],
                  "temperature": 1.0}],
     "external_labels": {"llm": true}}           # optional

Answer text is authoritative for clustering; token_log_probs are
authoritative for likelihoods (token ids are optional since tokenizers
differ across backends). Sequences may be variable-length; length
normalization divides by the number of logged tokens.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .estimators import Measure
from .seqmodel import ScoredSequence

__all__ = [
    "SCHEMA",
    "TraceParseError",
    "DecodeInfo",
    "ReferenceAnswer",
    "SampledAnswer",
    "GenerationRecord",
    "ResultRow",
    "ResultEntry",
    "read_traces",
    "write_traces",
    "write_results",
    "read_results",
]

SCHEMA = "seqscore/1"


class TraceParseError(ValueError):
    """Validation failure in a trace file; names the line and field."""

    def __init__(self, line: int, field_name: str, message: str) -> None:
        super().__init__(f"line {line}, field {field_name!r}: {message}")
        self.line = line
        self.field_name = field_name


@dataclass(frozen=True)
class DecodeInfo:
    strategy: str  # "greedy" | "beam"
    width: Optional[int] = None

    def __post_init__(self) -> None:
        if self.strategy not in ("greedy", "beam"):
            raise ValueError(f"decode strategy must be greedy or beam, got {self.strategy!r}")
        if self.strategy == "beam" and (self.width is None or self.width < 1):
            raise ValueError("beam decode requires width >= 1")


@dataclass(frozen=True)
class ReferenceAnswer:
    text: str
    token_log_probs: tuple[float, ...]
    decode: DecodeInfo = DecodeInfo("greedy")
    tokens: Optional[tuple[int, ...]] = None

    def scored(self) -> ScoredSequence:
        return ScoredSequence(token_log_probs=self.token_log_probs, tokens=self.tokens)


@dataclass(frozen=True)
class SampledAnswer:
    text: str
    token_log_probs: tuple[float, ...]
    temperature: float = 1.0

    def scored(self) -> ScoredSequence:
        return ScoredSequence(token_log_probs=self.token_log_probs)


@dataclass(frozen=True)
class GenerationRecord:
    """One QA instance: reference answer, N sampled answers, labels."""

    id: str
    question: str
    gold_answers: tuple[str, ...]
    reference: ReferenceAnswer
    samples: tuple[SampledAnswer, ...] = ()
    external_labels: dict[str, bool] = field(default_factory=dict)
    dataset: Optional[str] = None


def _field(obj: dict, name: str, line: int, parent: str = "") -> object:
    path = f"{parent}.{name}" if parent else name
    if name not in obj:
        raise TraceParseError(line, path, "missing required field")
    return obj[name]


def _log_probs(raw: object, line: int, path: str) -> tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise TraceParseError(line, path, "must be a non-empty list of reals")
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise TraceParseError(line, path, f"entry {i} is not a number")
        v = float(v)
        if math.isnan(v):
            raise TraceParseError(line, path, f"NaN at entry {i}")
        if v > 0:
            raise TraceParseError(line, path, f"log-prob > 0 at line {line} (entry {i}: {v})")
        out.append(v)
    return tuple(out)


def _parse_decode(raw: object, line: int, path: str) -> DecodeInfo:
    if not isinstance(raw, dict):
        raise TraceParseError(line, path, "must be an object")
    strategy = raw.get("strategy")
    if strategy == "greedy":
        return DecodeInfo("greedy")
    if strategy == "beam":
        width = raw.get("width")
        if not isinstance(width, int) or width < 1:
            raise TraceParseError(line, f"{path}.width", "beam decode requires integer width >= 1")
        return DecodeInfo("beam", width)
    raise TraceParseError(line, f"{path}.strategy", f"expected greedy or beam, got {strategy!r}")


def _parse_record(obj: dict, line: int) -> GenerationRecord:
    schema = _field(obj, "schema", line)
    if schema != SCHEMA:
        raise TraceParseError(line, "schema", f"expected {SCHEMA!r}, got {schema!r}")

    rec_id = _field(obj, "id", line)
    question = _field(obj, "question", line)
    gold = _field(obj, "gold_answers", line)
    if not isinstance(rec_id, str) or not rec_id:
        raise TraceParseError(line, "id", "must be a non-empty string")
    if not isinstance(question, str):
        raise TraceParseError(line, "question", "must be a string")
    if not isinstance(gold, list) or not all(isinstance(g, str) for g in gold):
        raise TraceParseError(line, "gold_answers", "must be a list of strings")

    ref_raw = _field(obj, "reference", line)
    if not isinstance(ref_raw, dict):
        raise TraceParseError(line, "reference", "must be an object")
    ref_text = _field(ref_raw, "text", line, "reference")
    if not isinstance(ref_text, str):
        raise TraceParseError(line, "reference.text", "must be a string")
    ref_logs = _log_probs(
        _field(ref_raw, "token_log_probs", line, "reference"), line, "reference.token_log_probs"
    )
    tokens = ref_raw.get("tokens")
    if tokens is not None:
        if not isinstance(tokens, list) or not all(isinstance(t, int) for t in tokens):
            raise TraceParseError(line, "reference.tokens", "must be a list of integers")
        if len(tokens) != len(ref_logs):
            raise TraceParseError(line, "reference.tokens", "length differs from token_log_probs")
        tokens = tuple(tokens)
    decode = _parse_decode(ref_raw.get("decode", {"strategy": "greedy"}), line, "reference.decode")
    reference = ReferenceAnswer(
        text=ref_text, token_log_probs=ref_logs, decode=decode, tokens=tokens
    )

    samples = []
    raw_samples = obj.get("samples", [])
    if not isinstance(raw_samples, list):
        raise TraceParseError(line, "samples", "must be a list")
    for i, s in enumerate(raw_samples):
        path = f"samples[{i}]"
        if not isinstance(s, dict):
            raise TraceParseError(line, path, "must be an object")
        text = _field(s, "text", line, path)
        if not isinstance(text, str):
            raise TraceParseError(line, f"{path}.text", "must be a string")
        logs = _log_probs(
            _field(s, "token_log_probs", line, path), line, f"{path}.token_log_probs"
        )
        temperature = s.get("temperature", 1.0)
        if not isinstance(temperature, (int, float)) or isinstance(temperature, bool):
            raise TraceParseError(line, f"{path}.temperature", "must be a number")
        if temperature <= 0:
            raise TraceParseError(line, f"{path}.temperature", "must be > 0")
        samples.append(
            SampledAnswer(text=text, token_log_probs=logs, temperature=float(temperature))
        )

    labels_raw = obj.get("external_labels", {})
    if not isinstance(labels_raw, dict) or not all(
        isinstance(k, str) and isinstance(v, bool) for k, v in labels_raw.items()
    ):
        raise TraceParseError(line, "external_labels", "must map labeler names to booleans")

    dataset = obj.get("dataset")
    if dataset is not None and not isinstance(dataset, str):
        raise TraceParseError(line, "dataset", "must be a string")

    return GenerationRecord(
        id=rec_id,
        question=question,
        gold_answers=tuple(gold),
        reference=reference,
        samples=tuple(samples),
        external_labels=dict(labels_raw),
        dataset=dataset,
    )


def read_traces(path: Union[str, Path]) -> list[GenerationRecord]:
    """Read and validate a JSONL trace file. Empty file -> empty list."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise TraceParseError(line_no, "<json>", f"malformed JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise TraceParseError(line_no, "<json>", "each line must be a JSON object")
            records.append(_parse_record(obj, line_no))
    return records


def _record_to_json(rec: GenerationRecord) -> dict:
    ref: dict = {"text": rec.reference.text, "token_log_probs": list(rec.reference.token_log_probs)}
    if rec.reference.tokens is not None:
        ref["tokens"] = list(rec.reference.tokens)
    if rec.reference.decode.strategy == "beam":
        ref["decode"] = {"strategy": "beam", "width": rec.reference.decode.width}
    else:
        ref["decode"] = {"strategy": "greedy"}
    obj: dict = {
        "schema": SCHEMA,
        "id": rec.id,
        "question": rec.question,
        "gold_answers": list(rec.gold_answers),
        "reference": ref,
        "samples": [
            {
                "text": s.text,
                "token_log_probs": list(s.token_log_probs),
                "temperature": s.temperature,
            }
            for s in rec.samples
        ],
    }
    if rec.external_labels:
        obj["external_labels"] = rec.external_labels
    if rec.dataset is not None:
        obj["dataset"] = rec.dataset
    return obj


def write_traces(records: Sequence[GenerationRecord], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_json(rec), sort_keys=True) + "\n")


@dataclass(frozen=True)
class ResultRow:
    """Per-record measure values plus correctness per labeler."""

    id: str
    scores: dict[Measure, float]
    labels: dict[str, bool] = field(default_factory=dict)
    dataset: Optional[str] = None


@dataclass(frozen=True)
class ResultEntry:
    """One long-form (record, measure) result line."""

    id: str
    measure: Measure
    value: float
    labels: dict[str, bool] = field(default_factory=dict)
    dataset: Optional[str] = None


_MEASURE_ORDER = list(Measure)


def _format_value(v: float) -> str:
    return format(v, ".6g")


def _long_form(rows: Sequence[ResultRow]) -> tuple[list[str], bool, list[ResultEntry]]:
    labelers = sorted({name for row in rows for name in row.labels})
    with_dataset = any(row.dataset is not None for row in rows)
    entries = []
    for row in rows:
        for measure in _MEASURE_ORDER:
            if measure in row.scores:
                entries.append(
                    ResultEntry(
                        id=row.id,
                        measure=measure,
                        value=row.scores[measure],
                        labels=dict(row.labels),
                        dataset=row.dataset,
                    )
                )
    return labelers, with_dataset, entries


def write_results(
    rows: Sequence[ResultRow],
    path: Union[str, Path],
    format: str = "csv",
) -> None:
    """Write long-form results (one line per record-measure pair).

    Column order is deterministic: id, measure, value, then labeler
    columns sorted lexicographically (a dataset column, when any row
    carries one, comes last). Reals are rendered with 6 significant
    digits.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"format must be csv or jsonl, got {format!r}")
    labelers, with_dataset, entries = _long_form(rows)

    if format == "csv":
        import csv

        header = ["id", "measure", "value", *labelers] + (["dataset"] if with_dataset else [])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for e in entries:
                line = [e.id, e.measure.value, _format_value(e.value)]
                line += [
                    "" if name not in e.labels else ("true" if e.labels[name] else "false")
                    for name in labelers
                ]
                if with_dataset:
                    line.append(e.dataset or "")
                writer.writerow(line)
        return

    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            obj: dict = {"id": e.id, "measure": e.measure.value, "value": float(_format_value(e.value))}
            for name in labelers:
                if name in e.labels:
                    obj.setdefault("labels", {})[name] = e.labels[name]
            if with_dataset and e.dataset is not None:
                obj["dataset"] = e.dataset
            fh.write(json.dumps(obj) + "\n")


def read_results(path: Union[str, Path], format: Optional[str] = None) -> list[ResultEntry]:
    """Read a results file back into long-form entries."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".json") else "csv"

    entries: list[ResultEntry] = []
    if format == "csv":
        import csv

        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fixed = {"id", "measure", "value", "dataset"}
            for row in reader:
                labels = {
                    k: v == "true"
                    for k, v in row.items()
                    if k not in fixed and v not in ("", None)
                }
                entries.append(
                    ResultEntry(
                        id=row["id"],
                        measure=Measure.parse(row["measure"]),
                        value=float(row["value"]),
                        labels=labels,
                        dataset=row.get("dataset") or None,
                    )
                )
        return entries

    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            entries.append(
                ResultEntry(
                    id=obj["id"],
                    measure=Measure.parse(obj["measure"]),
                    value=float(obj["value"]),
                    labels=dict(obj.get("labels", {})),
                    dataset=obj.get("dataset"),
                )
            )
    return entries
