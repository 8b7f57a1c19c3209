"""
domain types shared by the scorers, metrics, calibration and dataset modules.
label order is fixed everywhere as (Relevant, SomewhatRelevant, Irrelevant).
"""

from __future__ import absolute_import

import math
from collections import namedtuple
from enum import Enum

import numpy as np

K = 3
PROB_TOL = 1e-9
SCORE_TOL = 1e-12

SOURCES = ("web", "ugc", "snippet", "synthetic")


class InvalidInputError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    pass


class UnresolvedRecordError(ValueError):
    pass


class RelevanceLabel(str, Enum):
    """four-class annotation scheme, values are the corpus codes"""
    RELEVANT = "R"
    SOMEWHAT_RELEVANT = "SR"
    IRRELEVANT = "I"
    NOT_EVALUABLE = "NE"

    @property
    def is_scoreable(self):
        return self in SCOREABLE_LABELS


class BinaryLabel(str, Enum):
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"
    EXCLUDED = "excluded"

    def other(self):
        if self is BinaryLabel.RELEVANT:
            return BinaryLabel.IRRELEVANT
        if self is BinaryLabel.IRRELEVANT:
            return BinaryLabel.RELEVANT
        raise InvalidInputError("excluded has no complementary class")


# canonical order of the scoreable labels, the index is k in y_k / p_k
SCOREABLE_LABELS = (RelevanceLabel.RELEVANT, RelevanceLabel.SOMEWHAT_RELEVANT, RelevanceLabel.IRRELEVANT)

_binary_of = {RelevanceLabel.RELEVANT: BinaryLabel.RELEVANT,
              RelevanceLabel.SOMEWHAT_RELEVANT: BinaryLabel.RELEVANT,
              RelevanceLabel.IRRELEVANT: BinaryLabel.IRRELEVANT,
              RelevanceLabel.NOT_EVALUABLE: BinaryLabel.EXCLUDED}


def collapse_binary(label):
    """
    Relevant and SomewhatRelevant -> relevant, Irrelevant -> irrelevant, NotEvaluable -> excluded
    :param label: RelevanceLabel or its code
    :return: BinaryLabel
    """
    return _binary_of[RelevanceLabel(label)]


def _as_finite_vector(values, name):
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError):
        raise InvalidInputError("{} must be a vector of reals".format(name))
    if arr.ndim != 1:
        raise InvalidInputError("{} must be one-dimensional, got shape {}".format(name, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("{} contains non-finite values".format(name))
    return arr


class LabelWeights(namedtuple("LabelWeights", ["y"])):
    """numeric value y_k of each scoreable label"""
    __slots__ = ()

    def __new__(cls, y=(1.0, 0.5, 0.0)):
        arr = _as_finite_vector(y, "label weights")
        if len(arr) != K:
            raise InvalidInputError("label weights must have exactly {} entries, got {}".format(K, len(arr)))
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise InvalidInputError("label weights must lie in [0, 1]: {}".format(tuple(arr)))
        if np.any(np.diff(arr) > 0.0):
            raise InvalidInputError("label weights must be non-increasing from Relevant "
                                    "to Irrelevant: {}".format(tuple(arr)))
        return super(LabelWeights, cls).__new__(cls, tuple(float(x) for x in arr))


DEFAULT_LABEL_WEIGHTS = LabelWeights()


class LabelDistribution(namedtuple("LabelDistribution", ["p"])):
    __slots__ = ()

    def __new__(cls, p):
        arr = _as_finite_vector(p, "label distribution")
        if len(arr) != K:
            raise InvalidInputError("label distribution must have exactly {} entries, got {}".format(K, len(arr)))
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise InvalidInputError("probabilities must lie in [0, 1]: {}".format(tuple(arr)))
        if abs(float(np.sum(arr)) - 1.0) > PROB_TOL:
            raise InvalidInputError("probabilities must sum to 1, got {!r}".format(float(np.sum(arr))))
        return super(LabelDistribution, cls).__new__(cls, tuple(float(x) for x in arr))


class RelevanceScore(float):
    """a relevance value in [0, 1]; float-rounding overshoot up to 1e-12 is clipped"""

    def __new__(cls, value):
        value = float(value)
        if not math.isfinite(value) or value < -SCORE_TOL or value > 1.0 + SCORE_TOL:
            raise InvalidInputError("relevance score must lie in [0, 1], got {!r}".format(value))
        return super(RelevanceScore, cls).__new__(cls, min(1.0, max(0.0, value)))


class QueryDocPair(namedtuple("QueryDocPair", ["query", "document", "doc_title", "pair_id", "source"])):
    __slots__ = ()

    def __new__(cls, query, document, doc_title=None, pair_id=None, source="web"):
        if not isinstance(query, str) or query.strip() == "":
            raise InvalidInputError("query must be non-empty")
        if not isinstance(document, str) or document.strip() == "":
            raise InvalidInputError("document must be non-empty")
        if doc_title is not None and not isinstance(doc_title, str):
            raise InvalidInputError("doc_title must be text or absent")
        if source not in SOURCES:
            raise InvalidInputError("source must be one of {}, got {!r}".format(SOURCES, source))
        if doc_title == "":
            doc_title = None
        return super(QueryDocPair, cls).__new__(cls, query, document, doc_title, pair_id, source)

    def document_segment(self):
        """title and body joined by a single newline, or the body alone"""
        if self.doc_title is None:
            return self.document
        return self.doc_title + "\n" + self.document


SCORER_MODES = ("ensemble", "gen", "emb")


class ScoredPair(namedtuple("ScoredPair", ["pair", "s_gen", "s_emb", "s_final", "gold", "mode"])):
    __slots__ = ()

    def __new__(cls, pair, s_gen=None, s_emb=None, s_final=None, gold=None, mode="ensemble"):
        if mode not in SCORER_MODES:
            raise InvalidInputError("mode must be one of {}".format(SCORER_MODES))
        s_gen = None if s_gen is None else RelevanceScore(s_gen)
        s_emb = None if s_emb is None else RelevanceScore(s_emb)
        s_final = None if s_final is None else RelevanceScore(s_final)
        gold = None if gold is None else RelevanceLabel(gold)
        if s_final is not None:
            if mode == "ensemble" and (s_gen is None or s_emb is None):
                raise InvalidInputError("s_final needs both s_gen and s_emb in ensemble mode")
            if mode == "gen" and s_gen is None:
                raise InvalidInputError("s_final needs s_gen in gen mode")
            if mode == "emb" and s_emb is None:
                raise InvalidInputError("s_final needs s_emb in emb mode")
        return super(ScoredPair, cls).__new__(cls, pair, s_gen, s_emb, s_final, gold, mode)

    @property
    def gold_binary(self):
        if self.gold is None:
            return None
        return collapse_binary(self.gold)


def expected_score(dist, weights=DEFAULT_LABEL_WEIGHTS):
    """
    sum_k p_k * y_k
    :param dist: LabelDistribution (or a length-3 probability vector)
    :param weights: LabelWeights (or a length-3 vector)
    :return: RelevanceScore
    """
    p = np.asarray(dist.p if isinstance(dist, LabelDistribution) else dist, dtype=np.float64)
    y = np.asarray(weights.y if isinstance(weights, LabelWeights) else weights, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1:
        raise InvalidInputError("dimension mismatch: distribution {} vs weights {}".format(p.shape, y.shape))
    if not isinstance(dist, LabelDistribution):
        LabelDistribution(p)
    return RelevanceScore(float(np.dot(p, y)))
