#! /usr/bin/env python
"""
write a synthetic annotated corpus (JSONL) with given source fractions and a random vote mix,
for smoke tests and benchmarks of evaluate / tune-weights / bench
"""
import argparse
import json

import numpy as np

LABELS = ["R", "SR", "I", "NE"]
SOURCES = ["web", "ugc", "snippet", "synthetic"]
WORDS = ["river", "museum", "battery", "recipe", "tax", "guitar", "orbit", "vaccine", "bridge", "coffee",
         "election", "python", "garden", "marathon", "volcano", "insurance", "piano", "satellite"]


def str2bool(v):
    # susendberg's function
    return v.lower() in ("yes", "true", "t", "1")


def source_counts(fractions, total):
    """largest remainder rounding of fractions * total"""
    raw = np.asarray(fractions, dtype=np.float64) * total
    counts = np.floor(raw).astype(int)
    rest = total - counts.sum()
    for i in np.argsort(-(raw - counts), kind="stable")[:rest]:
        counts[i] += 1
    return counts


def _votes(rng, label_probs, ne_rate):
    probs = np.asarray(label_probs + [ne_rate], dtype=np.float64)
    probs = probs / probs.sum()
    votes = [LABELS[i] for i in rng.choice(4, size=3, p=probs)]
    adjudication = None
    if len(set(votes)) == 3:
        adjudication = votes[int(rng.randint(3))]
    return votes, adjudication


def make_corpus(total, fractions, seed=0, n_queries=50, ne_rate=0.02, with_title=True):
    rng = np.random.RandomState(seed)
    queries = [" ".join(rng.choice(WORDS, size=2, replace=False)) for _ in range(n_queries)]
    sources = []
    for src, cnt in zip(SOURCES, source_counts(fractions, total)):
        sources += [src] * int(cnt)
    rng.shuffle(sources)

    records = []
    for i, src in enumerate(sources):
        query = queries[rng.randint(n_queries)]
        topic = rng.choice(WORDS, size=6)
        # synthetic hard negatives lean irrelevant
        label_probs = [0.15, 0.15, 0.7] if src == "synthetic" else [0.4, 0.25, 0.35]
        votes, adjudication = _votes(rng, label_probs, ne_rate)
        records.append({"pair_id": "p{:06d}".format(i),
                        "query": query,
                        "title": "about {}".format(topic[0]) if with_title and rng.rand() < 0.5 else None,
                        "document": " ".join(topic) + " " + query,
                        "source": src,
                        "votes": votes,
                        "adjudication": adjudication})
    return records


def main():
    parser = argparse.ArgumentParser(description='write a synthetic annotated corpus in JSONL')
    parser.add_argument('--write_filepath', '-o', type=str, required=True,
                        help='the write filepath')
    parser.add_argument('--num_records', '-n', type=int, required=False, default=500,
                        help='number of records, default 500')
    parser.add_argument('--fractions', type=str, required=False, default="0.4870,0.1217,0.2462,0.1451",
                        help='fractions of web,ugc,snippet,synthetic. default 0.4870,0.1217,0.2462,0.1451')
    parser.add_argument('--num_queries', type=int, required=False, default=50,
                        help='number of distinct queries, default 50')
    parser.add_argument('--ne_rate', type=float, required=False, default=0.02,
                        help='weight of NE votes, default 0.02')
    parser.add_argument('--seed', type=int, required=False, default=0)
    parser.add_argument('--title', type=str, required=False, default='yes',
                        help='give half of the documents a title. default yes')

    args = parser.parse_args()

    fractions = [float(x) for x in args.fractions.split(",")]
    if len(fractions) != len(SOURCES) or abs(sum(fractions) - 1.0) > 1e-6:
        raise ValueError("--fractions must be 4 numbers summing to 1!")
    records = make_corpus(args.num_records, fractions, args.seed, args.num_queries, args.ne_rate,
                          str2bool(args.title))
    with open(args.write_filepath, 'w') as wf:
        for rec in records:
            wf.write(json.dumps(rec, sort_keys=True) + "\n")
    print('wrote {} records to {}'.format(len(records), args.write_filepath))


if __name__ == '__main__':
    main()
