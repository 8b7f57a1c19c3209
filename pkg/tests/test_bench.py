import math

import pytest

from qd_relevance.backend import BackendConfig
from qd_relevance.bench import latency_benchmark
from qd_relevance.bench import latency_summary
from qd_relevance.config import ServiceConfig
from qd_relevance.config import build_scoring_config
from qd_relevance.core import InvalidInputError
from qd_relevance.core import QueryDocPair


def test_latency_summary():
    summary = latency_summary([1.0, 2.0, 3.0, 4.0, 5.0])
    assert summary["p50"] == 3.0
    assert summary["mean"] == 3.0
    assert summary["n"] == 5
    assert summary["p50"] <= summary["p95"] <= summary["p99"]


def test_single_iteration(scoring):
    report = latency_benchmark([QueryDocPair("q", "d")], scoring, warmup=0, iterations=1)
    for path in ("gen", "emb", "ensemble"):
        r = report[path]
        assert r["p50"] == r["p95"] == r["p99"] == r["mean"]
        assert math.isfinite(r["mean"]) and r["mean"] > 0.0


def test_latency_tracks_the_backend_delay():
    pairs = [QueryDocPair("q", "d")]
    fast = build_scoring_config(ServiceConfig(backend=BackendConfig(stub_delay_ms=20.0)))
    slow = build_scoring_config(ServiceConfig(backend=BackendConfig(stub_delay_ms=40.0)))
    ratio = (latency_benchmark(pairs, slow, 0, 3)["gen"]["p50"] /
             latency_benchmark(pairs, fast, 0, 3)["gen"]["p50"])
    assert 1.5 <= ratio <= 2.5


def test_benchmark_input_errors(scoring):
    with pytest.raises(InvalidInputError):
        latency_benchmark([QueryDocPair("q", "d")], scoring, iterations=0)
    with pytest.raises(InvalidInputError):
        latency_benchmark([], scoring)
