"""Command-line experiment runner.

Subcommands: synth-entropy, synth-maxlik, score, cluster, evaluate,
validate-traces. Commands that write tables emit delimited files; the
synthetic studies and evaluate additionally render a PNG figure next to
the table (suppress with --no-plot). Identical configuration and seed
produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import figures
from .estimators import (
    CLUSTERED_MEASURES,
    SAMPLED_MEASURES,
    Measure,
    SampleSet,
    compute_measure,
)
from .evaluation import EvaluationError, LabeledScore, auroc, rejection_accuracy, squad_f1
from .semcluster import ClusterStrategy, OracleError, cluster
from .study import (
    ENTROPY_COLUMNS,
    MAXLIK_COLUMNS,
    SynthExperimentConfig,
    run_entropy_study,
    run_maxlik_study,
)
from .synthdist import DEFAULT_LEAF_BUDGET, EnumerationBudgetError
from .traceio import (
    GenerationRecord,
    ResultRow,
    read_results,
    read_traces,
    write_results,
)

REPORT_COLUMNS = ("dataset", "labeler", "measure", "n", "accuracy", "auroc", "rejection_accuracy")


def _parse_ints(text: str) -> tuple[int, ...]:
    """Parse '2,3,4' or '1-30' (ranges inclusive) into a tuple of ints."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def _parse_measures(text: str) -> list[Measure]:
    return [Measure.parse(p) for p in text.split(",")]


def _common_flags(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    parser.add_argument("--out", type=Path, required=out_required, help="output file path")


def _strategy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--cluster-strategy",
        choices=("exact", "normalized", "entailment"),
        default="normalized",
        help="answer-equivalence rule for semantic clustering",
    )
    parser.add_argument("--endpoint", default=None,
                        help="entailment oracle URL (default: $SEQSCORE_NLI_ENDPOINT)")
    parser.add_argument("--timeout", type=float, default=30.0, help="oracle timeout seconds")
    parser.add_argument("--no-cache", action="store_true", help="disable oracle verdict caching")


def _build_strategy(args: argparse.Namespace) -> ClusterStrategy:
    return ClusterStrategy(
        kind=args.cluster_strategy,
        endpoint=args.endpoint,
        timeout=args.timeout,
        cache=not args.no_cache,
    )


def _write_table(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([
                repr(v) if isinstance(v, float) else str(v) for v in (row[c] for c in columns)
            ])


def _synth_config(args: argparse.Namespace) -> SynthExperimentConfig:
    depths = (args.length,) if args.length is not None else tuple(args.depths)
    temperatures = (
        (args.temperature,) if args.temperature is not None else tuple(args.temperatures)
    )
    beam_widths = tuple(getattr(args, "beam_widths", ()) or (1,))
    if getattr(args, "beam_width", None) is not None:
        beam_widths = (args.beam_width,)
    strategies = args.strategy.split(",") if args.strategy else None
    if strategies is not None:
        unknown = set(strategies) - {"greedy", "beam", "multinomial"}
        if unknown:
            raise ValueError(f"unknown strategy: {sorted(unknown)}")
        if "multinomial" not in strategies:
            temperatures = ()
        if "beam" not in strategies:
            beam_widths = (1,) if "greedy" in strategies else ()
    return SynthExperimentConfig(
        presets=tuple(args.presets),
        depths=depths,
        sample_counts=tuple(args.samples),
        runs=args.runs,
        temperatures=temperatures,
        beam_widths=beam_widths,
        master_seed=args.seed,
        resample_model=args.resample_model,
        shuffle=not args.no_shuffle,
        budget=args.budget,
        threads=args.threads,
    )


def _add_synth_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--presets", type=_parse_ints, default=(20,),
                        help="vocabulary-size presets, e.g. 20,100 (default 20)")
    parser.add_argument("--depths", type=_parse_ints, default=(2, 3, 4),
                        help="sequence lengths (default 2,3,4)")
    parser.add_argument("--samples", type=_parse_ints, default=tuple(range(1, 31)),
                        help="sample counts N, e.g. 1-30 (default)")
    parser.add_argument("--runs", type=int, default=1000, help="repetitions (default 1000)")
    parser.add_argument("--temperatures", type=_parse_floats, default=(0.5, 1.0),
                        help="multinomial sampling temperatures (default 0.5,1.0)")
    parser.add_argument("--resample-model", action="store_true",
                        help="draw a fresh model per run instead of fixing one per setting")
    parser.add_argument("--no-shuffle", action="store_true",
                        help="keep alpha order fixed instead of per-node shuffling")
    parser.add_argument("--budget", type=int, default=DEFAULT_LEAF_BUDGET,
                        help="max leaves for exhaustive enumeration")
    parser.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    # singular decode-strategy aliases; each overrides its sweep list
    parser.add_argument("--strategy", default=None,
                        help="restrict arms: comma list of greedy,beam,multinomial")
    parser.add_argument("--temperature", type=float, default=None,
                        help="single sampling temperature (overrides --temperatures)")
    parser.add_argument("--length", type=int, default=None,
                        help="single sequence length (overrides --depths)")


def cmd_synth_entropy(args: argparse.Namespace) -> int:
    config = _synth_config(args)
    if not config.temperatures:
        raise ValueError("the entropy study estimates from multinomial samples; "
                         "--strategy must include multinomial")
    rows = run_entropy_study(config)
    _write_table(args.out, ENTROPY_COLUMNS, rows)
    if not args.no_plot:
        figures.plot_entropy_study(rows, args.out.with_suffix(".png"))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_synth_maxlik(args: argparse.Namespace) -> int:
    config = _synth_config(args)
    if not config.temperatures and not config.beam_widths:
        raise ValueError("no decode arms selected")
    rows = run_maxlik_study(config)
    _write_table(args.out, MAXLIK_COLUMNS, rows)
    if not args.no_plot:
        figures.plot_maxlik_study(rows, args.out.with_suffix(".png"))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _record_sample_set(
    record: GenerationRecord,
    need_clusters: bool,
    strategy: ClusterStrategy,
) -> Optional[SampleSet]:
    if not record.samples:
        return None
    cluster_ids = None
    if need_clusters:
        texts = [s.text for s in record.samples]
        cluster_ids = tuple(cluster(texts, strategy, context=record.question))
    return SampleSet(
        samples=tuple(s.scored() for s in record.samples),
        cluster_ids=cluster_ids,
    )


def cmd_score(args: argparse.Namespace) -> int:
    records = read_traces(args.traces)
    measures = _parse_measures(args.measures)
    strategy = _build_strategy(args)
    need_clusters = any(m in CLUSTERED_MEASURES for m in measures)

    rows = []
    for record in records:
        needs_samples = [m for m in measures if m in SAMPLED_MEASURES]
        if needs_samples and not record.samples:
            names = ",".join(m.value for m in needs_samples)
            raise ValueError(
                f"record {record.id!r} has no samples but measures [{names}] need them"
            )
        sample_set = _record_sample_set(record, need_clusters, strategy)
        scores = {
            m: compute_measure(m, record.reference.scored(), sample_set).value
            for m in measures
        }
        labels = dict(record.external_labels)
        if record.gold_answers:
            f1 = squad_f1(record.reference.text, record.gold_answers)
            labels["f1"] = f1 > args.f1_threshold
        rows.append(ResultRow(id=record.id, scores=scores, labels=labels, dataset=record.dataset))

    write_results(rows, args.out, format=args.format)
    print(f"scored {len(rows)} records ({args.measures}) -> {args.out}")
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    records = read_traces(args.traces)
    strategy = _build_strategy(args)
    out_rows = []
    for record in records:
        if not record.samples:
            continue
        ids = cluster([s.text for s in record.samples], strategy, context=record.question)
        for idx, cid in enumerate(ids):
            out_rows.append({"id": record.id, "sample_index": idx, "cluster": cid})
    _write_table(args.out, ("id", "sample_index", "cluster"), out_rows)
    print(f"clustered {len(out_rows)} samples -> {args.out}")
    return 0


def _read_label_file(path: Path) -> dict[str, dict[str, bool]]:
    labels: dict[str, dict[str, bool]] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            labels.setdefault(obj["id"], {}).update(obj["labels"])
    return labels


def cmd_evaluate(args: argparse.Namespace) -> int:
    entries = read_results(args.results)
    if not entries:
        raise EvaluationError(f"no result entries in {args.results}")

    if args.labels is not None:
        extra = _read_label_file(args.labels)
        known = {e.id for e in entries}
        missing = sorted(set(extra) - known)
        if missing:
            raise EvaluationError(f"labels reference unknown record ids: {missing[:5]}")
        entries = [
            type(e)(id=e.id, measure=e.measure, value=e.value,
                    labels={**e.labels, **extra.get(e.id, {})}, dataset=e.dataset)
            for e in entries
        ]

    unlabeled = sorted({e.id for e in entries if not e.labels})
    if unlabeled:
        raise EvaluationError(f"records without any correctness label: {unlabeled[:5]}")

    datasets = sorted({e.dataset or "all" for e in entries})
    labelers = sorted({name for e in entries for name in e.labels})
    measures = [m for m in Measure if any(e.measure is m for e in entries)]

    report = []
    for dataset in datasets:
        for labeler in labelers:
            for measure in measures:
                items = [
                    LabeledScore(score=e.value, correct=e.labels[labeler])
                    for e in entries
                    if (e.dataset or "all") == dataset
                    and e.measure is measure
                    and labeler in e.labels
                ]
                # AUROC is undefined for single-class groups; a labeler
                # whose coverage is degenerate contributes no rows.
                if not items or len({it.correct for it in items}) < 2:
                    continue
                report.append({
                    "dataset": dataset,
                    "labeler": labeler,
                    "measure": measure.value,
                    "n": len(items),
                    "accuracy": sum(it.correct for it in items) / len(items),
                    "auroc": auroc(items),
                    "rejection_accuracy": rejection_accuracy(items, args.keep_fraction),
                })
    if not report:
        raise EvaluationError(
            "no evaluable (dataset, labeler, measure) group: every group is "
            "empty or single-class"
        )

    if len(datasets) > 1:
        for labeler in labelers:
            for measure in measures:
                rows = [r for r in report
                        if r["labeler"] == labeler and r["measure"] == measure.value
                        and r["dataset"] in datasets]
                if not rows:
                    continue
                report.append({
                    "dataset": "mean",
                    "labeler": labeler,
                    "measure": measure.value,
                    "n": sum(r["n"] for r in rows),
                    "accuracy": sum(r["accuracy"] for r in rows) / len(rows),
                    "auroc": sum(r["auroc"] for r in rows) / len(rows),
                    "rejection_accuracy": sum(r["rejection_accuracy"] for r in rows) / len(rows),
                })

    _write_table(args.out, REPORT_COLUMNS, report)
    if not args.no_plot:
        figures.plot_evaluation(
            [r for r in report if r["dataset"] != "mean"], "auroc", args.out.with_suffix(".png")
        )
    _print_report(report)
    return 0


def _print_report(report: Sequence[dict]) -> None:
    """AUROC table: measures as rows, (dataset, labeler) as columns."""
    columns = sorted({(r["dataset"], r["labeler"]) for r in report})
    measures = []
    for r in report:
        if r["measure"] not in measures:
            measures.append(r["measure"])
    header = ["measure"] + [f"{d}/{l}" for d, l in columns]
    widths = [max(8, len(h)) for h in header]
    print("AUROC (higher = uncertainty ranks errors better)")
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for measure in measures:
        cells = [measure.ljust(widths[0])]
        for (d, l), w in zip(columns, widths[1:]):
            match = [r for r in report
                     if r["measure"] == measure and (r["dataset"], r["labeler"]) == (d, l)]
            cells.append((f"{match[0]['auroc']:.3f}" if match else "-").ljust(w))
        print("  ".join(cells))


def cmd_validate_traces(args: argparse.Namespace) -> int:
    records = read_traces(args.traces)
    n_samples = sum(len(r.samples) for r in records)
    print(f"OK: {len(records)} records, {n_samples} sampled answers ({args.traces})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqscore",
        description="Scoring-rule uncertainty measures for sequence models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-entropy", help="entropy-estimator quality study")
    _add_synth_flags(p)
    _common_flags(p)
    p.set_defaults(fn=cmd_synth_entropy)

    p = sub.add_parser("synth-maxlik", help="max-sequence-likelihood estimator study")
    _add_synth_flags(p)
    p.add_argument("--beam-widths", type=_parse_ints, default=(1, 2, 5),
                   help="beam widths to evaluate (default 1,2,5)")
    p.add_argument("--beam-width", type=int, default=None,
                   help="single beam width (overrides --beam-widths)")
    _common_flags(p)
    p.set_defaults(fn=cmd_synth_maxlik)

    p = sub.add_parser("score", help="compute uncertainty measures over a trace file")
    p.add_argument("--traces", type=Path, required=True, help="JSONL trace file")
    p.add_argument("--measures", default="g-nll",
                   help="comma list: g-nll,pe,ln-pe,se,ln-se,d-se (default g-nll)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--f1-threshold", type=float, default=0.5,
                   help="token-F1 above this counts as correct (default 0.5)")
    _strategy_flags(p)
    _common_flags(p)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("cluster", help="assign semantic cluster ids to sampled answers")
    p.add_argument("--traces", type=Path, required=True, help="JSONL trace file")
    _strategy_flags(p)
    _common_flags(p)
    p.set_defaults(fn=cmd_cluster)

    p = sub.add_parser("evaluate", help="AUROC / rejection accuracy over scored results")
    p.add_argument("--results", type=Path, required=True, help="results file from 'score'")
    p.add_argument("--labels", type=Path, default=None,
                   help="optional JSONL with extra labels: {id, labels:{name:bool}}")
    p.add_argument("--keep-fraction", type=float, default=0.8,
                   help="fraction kept for rejection accuracy (default 0.8)")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    _common_flags(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("validate-traces", help="validate a JSONL trace file")
    p.add_argument("traces", type=Path, help="JSONL trace file")
    _common_flags(p, out_required=False)
    p.set_defaults(fn=cmd_validate_traces)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, OracleError, EnumerationBudgetError) as exc:
        # covers TraceParseError and EvaluationError (ValueError subclasses)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
