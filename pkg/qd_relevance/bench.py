"""
wall-clock latency per scored pair of the generative, embedding and ensemble paths.
"""

from __future__ import absolute_import

import argparse
import sys
import time

import numpy as np

from .core import InvalidInputError
from .call_relevance import add_global_arguments
from .config import build_scoring_config
from .config import load_service_config
from .dataset import ingest_corpus
from .scoring import ScoringConfig
from .scoring import score_pair
from .utils.json_formater import write_json
from .utils.process_utils import display_args

BENCH_PATHS = ("gen", "emb", "ensemble")
PERCENTILES = (50, 95, 99)


def _path_config(scfg, mode):
    return ScoringConfig(scfg.backend, scfg.heads, scfg.gen_backends, scfg.label_weights, scfg.temperature,
                         scfg.weights, mode)


def latency_summary(samples_ms):
    samples = np.asarray(samples_ms, dtype=np.float64)
    p50, p95, p99 = np.percentile(samples, PERCENTILES)
    return {"p50": float(p50), "p95": float(p95), "p99": float(p99), "mean": float(np.mean(samples)),
            "n": int(len(samples))}


def latency_benchmark(pairs, scfg, warmup=1, iterations=10):
    """
    :param pairs: QueryDocPair list
    :param scfg: ScoringConfig, its heads are needed for the emb and ensemble paths
    :param warmup: untimed rounds over all pairs
    :param iterations: timed rounds, each pair scored once per round and path
    :return: {path: {"p50", "p95", "p99", "mean", "n"}} in milliseconds
    """
    if int(iterations) != iterations or iterations < 1:
        raise InvalidInputError("iterations must be >= 1, got {}".format(iterations))
    if warmup < 0:
        raise InvalidInputError("warmup must be >= 0")
    pairs = list(pairs)
    if len(pairs) == 0:
        raise InvalidInputError("at least one pair is needed")
    configs = [(path, _path_config(scfg, path)) for path in BENCH_PATHS]
    for _ in range(warmup):
        for _, cfg in configs:
            for pair in pairs:
                score_pair(pair, cfg)

    samples = dict((path, []) for path in BENCH_PATHS)
    for _ in range(iterations):
        for path, cfg in configs:
            for pair in pairs:
                t0 = time.perf_counter()
                score_pair(pair, cfg)
                samples[path].append((time.perf_counter() - t0) * 1000.0)
    return dict((path, latency_summary(samples[path])) for path in BENCH_PATHS)


def bench(args):
    print("[main] bench starts..")
    start = time.time()

    scfg = load_service_config(args.config, args.backend, args.seed)
    scoring = build_scoring_config(scfg, "ensemble")
    pairs = [rec.pair for rec in ingest_corpus(args.corpus)]
    if args.max_pairs is not None:
        pairs = pairs[:args.max_pairs]
    report = latency_benchmark(pairs, scoring, args.warmup, args.iterations)
    for path in BENCH_PATHS:
        r = report[path]
        print("{}: p50 {:.4f} ms, p95 {:.4f} ms, p99 {:.4f} ms, mean {:.4f} ms".format(path, r["p50"], r["p95"],
                                                                                       r["p99"], r["mean"]))
    if args.output is not None:
        write_json(report, args.output)
    print("[main] bench costs %.2f seconds.." % (time.time() - start))
    return report


def add_bench_arguments(parser):
    p_input = parser.add_argument_group("INPUT")
    p_input.add_argument("--corpus", "-i", action="store", type=str, required=True,
                         help="JSONL corpus whose pairs are scored")
    p_input.add_argument("--max_pairs", action="store", type=int, default=None, required=False,
                         help="use only the first n pairs")

    p_bench = parser.add_argument_group("BENCH")
    p_bench.add_argument("--warmup", type=int, default=1, required=False,
                         help="untimed rounds, default 1")
    p_bench.add_argument("--iterations", type=int, default=10, required=False,
                         help="timed rounds, default 10")


def main():
    parser = argparse.ArgumentParser("latency benchmark of the scoring paths")
    add_global_arguments(parser)
    add_bench_arguments(parser)

    args = parser.parse_args()
    display_args(args)

    bench(args)


if __name__ == '__main__':
    sys.exit(main())
