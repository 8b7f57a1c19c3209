"""
agreement, classification and ranking metrics on binary-collapsed relevance labels:
cohen's kappa, per-class AUC, PR curves, DCG@k and nDCG@k.
"""

from __future__ import absolute_import

import math
from collections import namedtuple

import numpy as np
from sklearn.metrics import confusion_matrix
from sklearn.metrics import roc_auc_score

from .core import BinaryLabel
from .core import InvalidInputError
from .core import UndefinedMetricError

DEFAULT_KS = (1, 3, 5)


def _as_binary(label):
    try:
        label = BinaryLabel(label)
    except ValueError:
        raise InvalidInputError("not a binary label: {!r}".format(label))
    if label is BinaryLabel.EXCLUDED:
        raise InvalidInputError("excluded records cannot enter a metric")
    return label


class BinaryLabeledScore(namedtuple("BinaryLabeledScore", ["score", "label"])):
    __slots__ = ()

    def __new__(cls, score, label):
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise InvalidInputError("score must lie in [0, 1], got {!r}".format(score))
        return super(BinaryLabeledScore, cls).__new__(cls, score, _as_binary(label))


def labeled_scores(scores, labels):
    if len(scores) != len(labels):
        raise InvalidInputError("{} scores vs {} labels".format(len(scores), len(labels)))
    return [BinaryLabeledScore(s, l) for s, l in zip(scores, labels)]


def binary_predictions(scores, threshold=0.5):
    """relevant when score >= threshold"""
    return [BinaryLabel.RELEVANT if float(s) >= threshold else BinaryLabel.IRRELEVANT for s in scores]


class ConfusionMatrix(namedtuple("ConfusionMatrix", ["counts"])):
    """
    counts[prediction][gold], index 0 = relevant, 1 = irrelevant
    """
    __slots__ = ()

    def __new__(cls, counts):
        arr = np.asarray(counts, dtype=np.int64)
        if arr.shape != (2, 2) or np.any(arr < 0):
            raise InvalidInputError("confusion counts must be a non-negative 2x2 matrix")
        return super(ConfusionMatrix, cls).__new__(cls, tuple(tuple(int(c) for c in row) for row in arr))

    @classmethod
    def from_labels(cls, pred, gold):
        if len(pred) != len(gold):
            raise InvalidInputError("pred has {} labels, gold has {}".format(len(pred), len(gold)))
        if len(pred) == 0:
            raise InvalidInputError("at least one record is needed")
        p = [1 if _as_binary(x) is BinaryLabel.RELEVANT else 0 for x in pred]
        g = [1 if _as_binary(x) is BinaryLabel.RELEVANT else 0 for x in gold]
        # sklearn: rows are gold, columns are predictions
        cm = confusion_matrix(g, p, labels=[1, 0])
        return cls(cm.T)

    @property
    def total(self):
        return sum(sum(row) for row in self.counts)


def kappa_from_confusion(cm):
    n = cm.total
    if n == 0:
        raise InvalidInputError("empty confusion matrix")
    (tp, fp), (fn, tn) = cm.counts
    p_o = float(tp + tn) / n
    p_e = float((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise UndefinedMetricError("kappa undefined: chance agreement is 1 but observed agreement is {}".format(p_o))
    return (p_o - p_e) / (1.0 - p_e)


def cohens_kappa(pred, gold):
    """
    (p_o - p_e) / (1 - p_e) on binary labels
    """
    return kappa_from_confusion(ConfusionMatrix.from_labels(pred, gold))


def _split(data):
    data = [d if isinstance(d, BinaryLabeledScore) else BinaryLabeledScore(*d) for d in data]
    scores = np.asarray([d.score for d in data], dtype=np.float64)
    labels = [d.label for d in data]
    return scores, labels


def roc_auc(data, positive=BinaryLabel.RELEVANT):
    """
    Mann-Whitney AUC with 0.5 credit for ties.
    for positive=irrelevant the score of a record is (1 - score).
    """
    positive = _as_binary(positive)
    scores, labels = _split(data)
    y = np.asarray([1 if l is positive else 0 for l in labels])
    if len(y) == 0 or y.min() == y.max():
        raise UndefinedMetricError("AUC needs at least one {} and one {} record".format(positive.value,
                                                                                     positive.other().value))
    if positive is BinaryLabel.IRRELEVANT:
        scores = 1.0 - scores
    return float(roc_auc_score(y, scores))


def mean_auc(scores, gold):
    data = labeled_scores(scores, gold)
    return 0.5 * (roc_auc(data, BinaryLabel.RELEVANT) + roc_auc(data, BinaryLabel.IRRELEVANT))


class PRPoint(namedtuple("PRPoint", ["threshold", "precision", "recall"])):
    """
    threshold is on the raw score: relevant predicted when score >= threshold,
    irrelevant predicted when score <= threshold
    """
    __slots__ = ()

    def __new__(cls, threshold, precision, recall):
        precision, recall = float(precision), float(recall)
        if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
            raise InvalidInputError("precision and recall must lie in [0, 1]")
        return super(PRPoint, cls).__new__(cls, float(threshold), precision, recall)


def pr_curve(data, positive=BinaryLabel.RELEVANT):
    """
    one point per distinct score, from the strictest threshold down to the one
    that predicts every record positive (recall 1)
    :return: list of PRPoint, recall non-decreasing
    """
    positive = _as_binary(positive)
    scores, labels = _split(data)
    is_pos = np.asarray([l is positive for l in labels], dtype=bool)
    n_pos = int(is_pos.sum())
    if n_pos == 0:
        raise UndefinedMetricError("PR curve needs at least one {} record".format(positive.value))
    # orient scores so that larger key = more confidently positive
    sign = 1.0 if positive is BinaryLabel.RELEVANT else -1.0
    keys = sign * scores
    order = np.argsort(-keys, kind="stable")
    keys, is_pos = keys[order], is_pos[order]
    tps = np.cumsum(is_pos)
    fps = np.cumsum(~is_pos)
    # last index of each run of equal keys
    ends = np.r_[np.nonzero(np.diff(keys))[0], len(keys) - 1]
    points = []
    for i in ends:
        tp, fp = int(tps[i]), int(fps[i])
        points.append(PRPoint(sign * keys[i], float(tp) / (tp + fp), float(tp) / n_pos))
    return points


class RankedList(namedtuple("RankedList", ["query_id", "items"])):
    """items: (gain, score) tuples in input order"""
    __slots__ = ()

    def __new__(cls, query_id, items):
        items = tuple((float(g), float(s)) for g, s in items)
        for g, s in items:
            if not math.isfinite(g) or g < 0.0:
                raise InvalidInputError("gains must be finite and >= 0, got {!r}".format(g))
            if not math.isfinite(s):
                raise InvalidInputError("scores must be finite, got {!r}".format(s))
        return super(RankedList, cls).__new__(cls, query_id, items)

    def gains_by_score(self):
        """gains sorted by descending score, input order breaks ties"""
        if len(self.items) == 0:
            return np.zeros(0)
        gains = np.asarray([g for g, _ in self.items])
        scores = np.asarray([s for _, s in self.items])
        return gains[np.argsort(-scores, kind="stable")]


def _check_k(k):
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be a positive integer, got {!r}".format(k))
    return int(k)


def _dcg(gains, k):
    gains = np.asarray(gains, dtype=np.float64)[:k]
    discounts = np.log2(np.arange(2, len(gains) + 2))
    return float(np.sum(gains / discounts))


def dcg_at_k(ranked, k):
    """sum_{i<=min(k,n)} gain_i / log2(i + 1), items ranked by descending score"""
    return _dcg(ranked.gains_by_score(), _check_k(k))


def ndcg_at_k(ranked, k):
    """dcg / ideal dcg, 1.0 when the ideal dcg is 0"""
    k = _check_k(k)
    gains = ranked.gains_by_score()
    ideal = _dcg(np.sort(gains)[::-1], k)
    if ideal == 0.0:
        return 1.0
    return _dcg(gains, k) / ideal


def ranking_metrics(ranked_lists, ks=DEFAULT_KS):
    """mean dcg@k / ndcg@k over queries, keyed by str(k)"""
    ndcg, dcg = {}, {}
    for k in ks:
        ndcg[str(k)] = float(np.mean([ndcg_at_k(r, k) for r in ranked_lists])) if ranked_lists else None
        dcg[str(k)] = float(np.mean([dcg_at_k(r, k) for r in ranked_lists])) if ranked_lists else None
    return ndcg, dcg


def pr_points_to_list(points):
    return [{"threshold": p.threshold, "precision": p.precision, "recall": p.recall} for p in points]


def classification_metrics(scores, gold, threshold=0.5):
    """kappa at the threshold plus both one-vs-rest AUCs"""
    data = labeled_scores(scores, gold)
    return {"kappa": cohens_kappa(binary_predictions(scores, threshold), gold),
            "auc_relevant": roc_auc(data, BinaryLabel.RELEVANT),
            "auc_irrelevant": roc_auc(data, BinaryLabel.IRRELEVANT),
            "count": len(data)}


def metrics_report(scores, gold, ranked_lists=(), threshold=0.5, pr_positive=BinaryLabel.IRRELEVANT,
                   ks=DEFAULT_KS):
    """
    the JSON report for downstream tooling:
    {"kappa", "auc_relevant", "auc_irrelevant", "pr_curve", "ndcg", "dcg"} plus the other-class curve
    """
    pr_positive = _as_binary(pr_positive)
    data = labeled_scores(scores, gold)
    cls_metrics = classification_metrics(scores, gold, threshold)
    ndcg, dcg = ranking_metrics(list(ranked_lists), ks)
    report = {"kappa": cls_metrics["kappa"],
              "auc_relevant": cls_metrics["auc_relevant"],
              "auc_irrelevant": cls_metrics["auc_irrelevant"],
              "pr_curve": pr_points_to_list(pr_curve(data, pr_positive)),
              "ndcg": ndcg,
              "dcg": dcg,
              "pr_positive": pr_positive.value,
              "kappa_threshold": threshold,
              "count": len(data)}
    if any(d.label is pr_positive.other() for d in data):
        report["pr_curve_other"] = pr_points_to_list(pr_curve(data, pr_positive.other()))
    return report
