import json

import numpy as np
import pytest

from qd_relevance.calibration import ThresholdPolicy
from qd_relevance.core import InvalidInputError
from qd_relevance.core import QueryDocPair
from qd_relevance.core import RelevanceLabel
from qd_relevance.dataset import ingest_corpus
from qd_relevance.evaluate import DEFAULT_LABEL_GAINS
from qd_relevance.evaluate import calibrate_report
from qd_relevance.evaluate import eval_refinement
from qd_relevance.evaluate import evaluate_corpus
from qd_relevance.evaluate import label_gains_from_list
from qd_relevance.evaluate import ranked_lists_by_query
from qd_relevance.evaluate import score_corpus
from qd_relevance.evaluate import sweep_report
from qd_relevance.evaluate import tune_report
from qd_relevance.scoring import score_pair
from qd_relevance.utils.json_formater import write_json


def test_report_is_byte_identical(make_corpus, scoring):
    path, _ = make_corpus(60, ne_every=7)
    a = write_json(evaluate_corpus(path, scoring, parallelism=1))
    b = write_json(evaluate_corpus(path, scoring, parallelism=1))
    c = write_json(evaluate_corpus(path, scoring, parallelism=8))
    assert a == b == c


def test_report_fields(make_corpus, scoring):
    path, records = make_corpus(60, ne_every=7)
    report = evaluate_corpus(path, scoring)
    for key in ("kappa", "auc_relevant", "auc_irrelevant", "pr_curve", "ndcg", "dcg"):
        assert key in report
    assert report["count"] == sum(1 for r in records if not r.excluded)
    assert set(report["by_scorer"].keys()) == {"gen", "emb", "ensemble"}
    assert report["by_scorer"]["ensemble"]["auc_relevant"] == report["auc_relevant"]
    assert set(report["by_source"].keys()) == {"web", "ugc", "snippet", "synthetic", "average"}
    assert report["by_source"]["average"]["count"] == report["count"]
    assert "X-Latency-Ms" not in json.dumps(report)


def test_score_corpus_skips_excluded(make_corpus, scoring):
    _, records = make_corpus(30, ne_every=3)
    scored = score_corpus(records, scoring)
    assert len(scored) == 20
    assert all(sp.gold is not RelevanceLabel.NOT_EVALUABLE for sp in scored)


def test_ranked_lists_group_by_query(make_corpus, scoring):
    _, records = make_corpus(24)
    scored = score_corpus(records, scoring)
    lists = ranked_lists_by_query(scored)
    assert sorted(r.query_id for r in lists) == sorted(set(sp.pair.query for sp in scored))
    assert sum(len(r.items) for r in lists) == len(scored)
    assert set(g for r in lists for g, _ in r.items) <= set(DEFAULT_LABEL_GAINS.values())


def test_label_gains_from_list():
    gains = label_gains_from_list([3, 1, 0])
    assert gains[RelevanceLabel.RELEVANT] == 3.0
    with pytest.raises(InvalidInputError):
        label_gains_from_list([1, 0])
    with pytest.raises(InvalidInputError):
        label_gains_from_list([1, -1, 0])


def test_tune_report(make_corpus, scoring):
    _, records = make_corpus(40)
    report = tune_report(score_corpus(records, scoring), "auc_mean", 0.1)
    assert len(report["grid"]) == 11
    assert report["w_gen"] + report["w_emb"] == pytest.approx(1.0)
    assert report["value"] == pytest.approx(max(row["value"] for row in report["grid"]), abs=1e-9)


def test_calibrate_report(make_corpus, scoring):
    _, records = make_corpus(40)
    report = calibrate_report(score_corpus(records, scoring), ThresholdPolicy(0.95))
    block = report["threshold"]
    assert block["positive_class"] == "irrelevant"
    assert {"threshold": block["threshold"], "precision": block["precision"],
            "recall": block["recall"]} in report["pr_curve"]


def test_sweep_report(make_corpus, scoring):
    _, records = make_corpus(40, ne_every=9)
    report = sweep_report(records, scoring.backend, [2.0, 1.0], scoring.label_weights)
    assert [e["temperature"] for e in report["sweep"]] == [1.0, 2.0]
    assert report["best_temperature"] in (1.0, 2.0)


def _write_groups(tmp_path, rows):
    path = str(tmp_path / "groups.jsonl")
    with open(path, "w") as wf:
        for row in rows:
            wf.write(json.dumps(row) + "\n")
    return path


def test_eval_refinement(tmp_path, scoring):
    docs_a = ["coffee tax rules", "import duties on coffee"]
    docs_b = ["a guitar lesson", "how to tune a piano", "orbit of the moon"]
    path = _write_groups(tmp_path, [
        {"group": "g1", "candidate": "original", "query": "coffee tax", "documents": docs_a},
        {"group": "g1", "candidate": "rewrite", "query": "coffee import tax", "documents": docs_b},
    ])
    report = eval_refinement(path, scoring)
    g1 = report["groups"]["g1"]
    mean_a = np.mean([float(score_pair(QueryDocPair("coffee tax", d), scoring).s_final) for d in docs_a])
    assert g1["candidates"]["original"]["mean"] == pytest.approx(mean_a, abs=1e-12)
    assert len(g1["candidates"]["rewrite"]["per_rank"]) == 3
    means = dict((c, v["mean"]) for c, v in g1["candidates"].items())
    assert g1["best"] == max(means, key=lambda c: (means[c], c == "original"))


def test_eval_refinement_input_errors(tmp_path, scoring):
    with pytest.raises(InvalidInputError):
        eval_refinement(_write_groups(tmp_path, [{"group": "g", "candidate": "c", "query": "q"}]), scoring)
    with pytest.raises(InvalidInputError):
        eval_refinement(_write_groups(tmp_path, [{"group": "g", "candidate": "c", "query": "q",
                                                  "documents": []}]), scoring)


def test_corpus_without_scoreable_records(tmp_path, scoring):
    records = ingest_corpus(_write_groups(tmp_path, []))
    with pytest.raises(InvalidInputError):
        score_corpus(records, scoring)
