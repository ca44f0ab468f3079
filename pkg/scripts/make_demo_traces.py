#!/usr/bin/env python3
"""Generate a small demo trace file in the seqscore/1 schema.

Fabricates QA records from seeded synthetic models: the greedy sequence
becomes the reference answer, multinomial samples become the sampled
answers, and answer texts are synthesized from token ids so lexical
clustering has something to chew on. Real exporters write the same shape
from an LLM's per-token logprobs; see the schema block in the README.

    python3 scripts/make_demo_traces.py demo_traces.jsonl --records 20
"""

from __future__ import annotations

import argparse

from seqscore.decode import greedy, multinomial_sample
from seqscore.study import derive_seed
from seqscore.synthdist import DirichletSpec, sample_model
from seqscore.traceio import (
    GenerationRecord,
    ReferenceAnswer,
    SampledAnswer,
    write_traces,
)


def answer_text(tokens) -> str:
    return " ".join(f"tok{t}" for t in tokens)


def make_records(n_records: int, n_samples: int, seed: int) -> list[GenerationRecord]:
    spec = DirichletSpec.preset(20)
    records = []
    for i in range(n_records):
        model = sample_model(spec, depth=3, seed=derive_seed(seed, 0, 20, 3, i))
        ref = greedy(model)
        samples = multinomial_sample(
            model, temperature=1.0, seed=derive_seed(seed, 1, 20, 3, i, 0, 0), n_samples=n_samples
        )
        # mark every third record incorrect so evaluation has both classes
        gold = answer_text(ref.tokens) if i % 3 else "tok0 tok0 tok0"
        records.append(
            GenerationRecord(
                id=f"demo-{i:04d}",
                question=f"Synthetic question {i}?",
                gold_answers=(gold,),
                reference=ReferenceAnswer(
                    text=answer_text(ref.tokens),
                    token_log_probs=ref.token_log_probs,
                    tokens=ref.tokens,
                ),
                samples=tuple(
                    SampledAnswer(text=answer_text(s.tokens), token_log_probs=s.token_log_probs)
                    for s in samples
                ),
                dataset="demo",
            )
        )
    return records


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", help="output JSONL path")
    parser.add_argument("--records", type=int, default=20)
    parser.add_argument("--samples", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    records = make_records(args.records, args.samples, args.seed)
    write_traces(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")


if __name__ == "__main__":
    main()
