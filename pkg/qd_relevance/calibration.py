"""
precision-targeted threshold selection on a PR curve, and temperature sweeps of the
generative scorer.
"""

from __future__ import absolute_import

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import DEFAULT_LABEL_WEIGHTS
from .core import BinaryLabel
from .core import InvalidInputError
from .core import collapse_binary
from .core import expected_score
from .backend import fetch_gen_signal
from .metrics import PRPoint
from .metrics import labeled_scores
from .metrics import pr_points_to_list
from .metrics import roc_auc
from .scoring import Temperature
from .scoring import softmax_with_temperature

DEFAULT_SWEEP_TEMPERATURES = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
DEFAULT_TARGET_PRECISION = 0.95


class ThresholdPolicy(namedtuple("ThresholdPolicy", ["target_precision", "positive_class"])):
    __slots__ = ()

    def __new__(cls, target_precision=DEFAULT_TARGET_PRECISION, positive_class=BinaryLabel.IRRELEVANT):
        target_precision = float(target_precision)
        if not 0.0 < target_precision <= 1.0:
            raise InvalidInputError("target precision must lie in (0, 1], got {}".format(target_precision))
        try:
            positive_class = BinaryLabel(positive_class)
        except ValueError:
            raise InvalidInputError("positive class must be relevant or irrelevant, got {!r}".format(positive_class))
        if positive_class is BinaryLabel.EXCLUDED:
            raise InvalidInputError("positive class must be relevant or irrelevant")
        return super(ThresholdPolicy, cls).__new__(cls, target_precision, positive_class)


class ThresholdChoice(namedtuple("ThresholdChoice", ["threshold", "point", "achievable"])):
    __slots__ = ()


def select_threshold(curve, policy):
    """
    among the points reaching the target precision pick the one with the largest recall,
    ties go to higher precision and then to the higher threshold. when no point reaches
    the target, the most precise point is returned with achievable=False.
    :param curve: list of PRPoint
    :param policy: ThresholdPolicy
    :return: ThresholdChoice, its point is always one of the curve points
    """
    curve = [p if isinstance(p, PRPoint) else PRPoint(*p) for p in curve]
    if len(curve) == 0:
        raise InvalidInputError("cannot select a threshold on an empty PR curve")
    qualified = [p for p in curve if p.precision >= policy.target_precision]
    if qualified:
        best = max(qualified, key=lambda p: (p.recall, p.precision, p.threshold))
        return ThresholdChoice(best.threshold, best, True)
    best = max(curve, key=lambda p: (p.precision, p.recall, p.threshold))
    return ThresholdChoice(best.threshold, best, False)


def threshold_report(choice, policy, curve=None):
    """the "threshold" block of the metrics-report envelope"""
    block = {"target_precision": policy.target_precision,
             "positive_class": policy.positive_class.value,
             "threshold": choice.threshold,
             "precision": choice.point.precision,
             "recall": choice.point.recall,
             "achievable": choice.achievable}
    report = {"threshold": block}
    if curve is not None:
        report["pr_curve"] = pr_points_to_list(curve)
    return report


# temperature sweep ======================================================
class SweepEntry(namedtuple("SweepEntry", ["temperature", "auc_relevant", "auc_irrelevant"])):
    __slots__ = ()


class SweepReport(namedtuple("SweepReport", ["entries"])):
    __slots__ = ()

    def __new__(cls, entries):
        entries = tuple(e if isinstance(e, SweepEntry) else SweepEntry(*e) for e in entries)
        temps = [e.temperature for e in entries]
        if any(b <= a for a, b in zip(temps, temps[1:])):
            raise InvalidInputError("sweep temperatures must be strictly increasing")
        for e in entries:
            if not (0.0 <= e.auc_relevant <= 1.0 and 0.0 <= e.auc_irrelevant <= 1.0):
                raise InvalidInputError("AUC out of [0, 1] at t={}".format(e.temperature))
        return super(SweepReport, cls).__new__(cls, entries)

    def best(self):
        """entry with the highest mean AUC, the lowest temperature wins ties"""
        if not self.entries:
            return None
        means = [0.5 * (e.auc_relevant + e.auc_irrelevant) for e in self.entries]
        return self.entries[int(np.argmax(means))]

    def to_dict(self):
        best = self.best()
        return {"sweep": [{"temperature": e.temperature,
                           "auc_relevant": e.auc_relevant,
                           "auc_irrelevant": e.auc_irrelevant} for e in self.entries],
                "best_temperature": None if best is None else best.temperature}


def _sweep_temperatures(temps):
    if temps is None or len(temps) == 0:
        raise InvalidInputError("at least one temperature is needed")
    return sorted(set(Temperature(t).t for t in temps))


def _sweep_point(logprobs, gold, temp, weights):
    scores = [float(expected_score(softmax_with_temperature(lp, temp), weights)) for lp in logprobs]
    data = labeled_scores(scores, gold)
    return SweepEntry(temp, roc_auc(data, BinaryLabel.RELEVANT), roc_auc(data, BinaryLabel.IRRELEVANT))


def temperature_sweep(pairs_with_gold, cfg, temps=DEFAULT_SWEEP_TEMPERATURES, weights=DEFAULT_LABEL_WEIGHTS,
                      parallelism=1):
    """
    gen_score over every pair at each temperature, both AUCs per temperature.
    label-token logprobs are fetched once and re-softmaxed per temperature.
    :param pairs_with_gold: (QueryDocPair, RelevanceLabel) tuples, NotEvaluable records are skipped
    :param cfg: BackendConfig
    :param temps: temperatures, reported in ascending order
    :return: SweepReport
    """
    temps = _sweep_temperatures(temps)
    kept = [(pair, collapse_binary(gold)) for pair, gold in pairs_with_gold]
    kept = [(pair, gold) for pair, gold in kept if gold is not BinaryLabel.EXCLUDED]
    pairs = [pair for pair, _ in kept]
    gold = [g for _, g in kept]

    workers = max(1, min(int(parallelism), cfg.max_in_flight))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        signals = list(executor.map(lambda p: fetch_gen_signal(p, cfg), pairs))
        logprobs = [s.logprobs for s in signals]
        entries = list(executor.map(lambda t: _sweep_point(logprobs, gold, t, weights), temps))
    return SweepReport(entries)
