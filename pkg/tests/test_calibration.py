import math

import numpy as np
import pytest

from qd_relevance.backend import BackendConfig
from qd_relevance.calibration import SweepEntry
from qd_relevance.calibration import SweepReport
from qd_relevance.calibration import ThresholdPolicy
from qd_relevance.calibration import select_threshold
from qd_relevance.calibration import temperature_sweep
from qd_relevance.calibration import threshold_report
from qd_relevance.core import BinaryLabel
from qd_relevance.core import InvalidInputError
from qd_relevance.core import QueryDocPair
from qd_relevance.core import RelevanceLabel
from qd_relevance.core import UndefinedMetricError
from qd_relevance.metrics import PRPoint
from qd_relevance.metrics import labeled_scores
from qd_relevance.metrics import pr_curve
from qd_relevance.metrics import roc_auc
from qd_relevance.scoring import gen_score

# (recall, precision) of an irrelevant-class PR curve, thresholds rising with recall
CURVE = [(0.0, 1.0), (0.0553, 1.0), (0.1320, 0.9925), (0.3112, 0.9882), (0.5721, 0.9701), (0.7434, 0.9213),
         (0.8518, 0.8348), (0.9340, 0.7567), (0.9824, 0.6638), (0.9980, 0.5322), (1.0, 0.4477)]


@pytest.fixture
def curve():
    return [PRPoint(0.05 + 0.08 * i, precision, recall) for i, (recall, precision) in enumerate(CURVE)]


def test_select_at_095(curve):
    choice = select_threshold(curve, ThresholdPolicy(0.95))
    assert choice.achievable
    assert (choice.point.recall, choice.point.precision) == (0.5721, 0.9701)
    assert choice.threshold == choice.point.threshold


def test_select_at_0999(curve):
    choice = select_threshold(curve, ThresholdPolicy(0.999))
    assert (choice.point.recall, choice.point.precision) == (0.0553, 1.0)


def test_single_point_curve():
    point = PRPoint(0.5, 1.0, 1.0)
    assert select_threshold([point], ThresholdPolicy(0.95)).point == point


def test_unreachable_target_falls_back_to_most_precise():
    curve = [PRPoint(0.2, 0.6, 0.5), PRPoint(0.4, 0.9, 0.3), PRPoint(0.6, 0.8, 1.0)]
    choice = select_threshold(curve, ThresholdPolicy(1.0))
    assert not choice.achievable
    assert choice.point == curve[1]


def test_ties_prefer_precision_then_threshold():
    curve = [PRPoint(0.2, 0.96, 0.5), PRPoint(0.3, 0.98, 0.5), PRPoint(0.4, 0.98, 0.5), PRPoint(0.1, 0.99, 0.2)]
    assert select_threshold(curve, ThresholdPolicy(0.95)).point == curve[2]


def test_recall_is_monotone_in_the_target(curve):
    targets = sorted(np.linspace(0.45, 1.0, 56))
    recalls = [select_threshold(curve, ThresholdPolicy(t)).point.recall for t in targets]
    assert all(b <= a for a, b in zip(recalls, recalls[1:]))


def test_selected_point_is_on_the_curve():
    rng = np.random.RandomState(4)
    for _ in range(100):
        scores = list(np.round(rng.rand(12), 2))
        labels = [BinaryLabel.IRRELEVANT] + [BinaryLabel.RELEVANT if x else BinaryLabel.IRRELEVANT
                                             for x in rng.rand(11) < 0.5]
        curve = pr_curve(labeled_scores(scores, labels), BinaryLabel.IRRELEVANT)
        choice = select_threshold(curve, ThresholdPolicy(rng.uniform(0.3, 1.0)))
        assert choice.point in curve


def test_policy_and_curve_errors():
    with pytest.raises(InvalidInputError):
        ThresholdPolicy(0.0)
    with pytest.raises(InvalidInputError):
        ThresholdPolicy(1.5)
    with pytest.raises(InvalidInputError):
        ThresholdPolicy(0.9, "excluded")
    with pytest.raises(InvalidInputError):
        select_threshold([], ThresholdPolicy())


def test_threshold_report(curve):
    policy = ThresholdPolicy(0.95)
    report = threshold_report(select_threshold(curve, policy), policy, curve)
    assert report["threshold"]["positive_class"] == "irrelevant"
    assert report["threshold"]["recall"] == 0.5721
    assert len(report["pr_curve"]) == len(CURVE)


# temperature sweep ======================================================
def _gold_pairs(n=30):
    labels = [RelevanceLabel.RELEVANT, RelevanceLabel.IRRELEVANT, RelevanceLabel.SOMEWHAT_RELEVANT]
    return [(QueryDocPair("query {}".format(i % 4), "document {}".format(i)), labels[i % 3]) for i in range(n)]


def _oracle_aucs(pairs_gold, unit_hash, seed, t):
    scores, rel = [], []
    for pair, gold in pairs_gold:
        z = [-4.0 * unit_hash(seed, pair.query, pair.document, k) / t for k in range(3)]
        e = [math.exp(v - max(z)) for v in z]
        scores.append((e[0] + 0.5 * e[1]) / sum(e))
        rel.append(gold is not RelevanceLabel.IRRELEVANT)
    pos = [s for s, r in zip(scores, rel) if r]
    neg = [s for s, r in zip(scores, rel) if not r]
    auc = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg) / (len(pos) * len(neg))
    return auc


def test_sweep_matches_direct_evaluation():
    cfg = BackendConfig(seed=7)
    pairs_gold = _gold_pairs()
    report = temperature_sweep(pairs_gold, cfg, [1.0])
    scores = [float(gen_score(p, cfg, temp=1.0)) for p, _ in pairs_gold]
    data = labeled_scores(scores, [BinaryLabel.IRRELEVANT if g is RelevanceLabel.IRRELEVANT
                                   else BinaryLabel.RELEVANT for _, g in pairs_gold])
    assert report.entries[0].auc_relevant == roc_auc(data, BinaryLabel.RELEVANT)
    assert report.entries[0].auc_irrelevant == roc_auc(data, BinaryLabel.IRRELEVANT)


def test_sweep_against_independent_composition(unit_hash):
    pairs_gold = _gold_pairs()
    report = temperature_sweep(pairs_gold, BackendConfig(seed=7), [1.0, 3.0])
    for entry in report.entries:
        assert entry.auc_relevant == pytest.approx(_oracle_aucs(pairs_gold, unit_hash, 7, entry.temperature),
                                                   abs=1e-9)


def test_sweep_order_and_determinism():
    pairs_gold = _gold_pairs() + [(QueryDocPair("q", "unjudged"), RelevanceLabel.NOT_EVALUABLE)]
    cfg = BackendConfig(seed=7)
    a = temperature_sweep(pairs_gold, cfg, [3.0, 0.5, 1.0, 3.0])
    b = temperature_sweep(pairs_gold, cfg, [0.5, 1.0, 3.0], parallelism=4)
    assert [e.temperature for e in a.entries] == [0.5, 1.0, 3.0]
    assert a == b
    assert a.to_dict()["best_temperature"] in (0.5, 1.0, 3.0)


def test_sweep_needs_both_classes():
    pairs_gold = [(QueryDocPair("q", "d{}".format(i)), RelevanceLabel.RELEVANT) for i in range(5)]
    with pytest.raises(UndefinedMetricError):
        temperature_sweep(pairs_gold, BackendConfig(), [1.0])
    with pytest.raises(InvalidInputError):
        temperature_sweep(_gold_pairs(), BackendConfig(), [])


def test_sweep_report_invariants():
    with pytest.raises(InvalidInputError):
        SweepReport([SweepEntry(2.0, 0.6, 0.6), SweepEntry(1.0, 0.7, 0.7)])
    with pytest.raises(InvalidInputError):
        SweepReport([SweepEntry(1.0, 1.2, 0.6)])
    report = SweepReport([SweepEntry(1.0, 0.7, 0.7), SweepEntry(2.0, 0.8, 0.6), SweepEntry(3.0, 0.9, 0.8)])
    assert report.best().temperature == 3.0
    # lowest temperature wins a tie
    assert SweepReport([SweepEntry(1.0, 0.7, 0.7), SweepEntry(2.0, 0.8, 0.6)]).best().temperature == 1.0
