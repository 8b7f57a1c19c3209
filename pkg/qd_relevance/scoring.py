"""
generative scorer, embedding scorer, their weighted ensemble and validation-based weight tuning.
"""

from __future__ import absolute_import

from collections import namedtuple

import numpy as np
import torch

from .core import DEFAULT_LABEL_WEIGHTS
from .core import BinaryLabel
from .core import InvalidInputError
from .core import LabelDistribution
from .core import RelevanceScore
from .core import ScoredPair
from .core import expected_score
from .backend import fetch_emb_signal
from .backend import fetch_gen_signal
from .metrics import binary_predictions
from .metrics import cohens_kappa
from .metrics import mean_auc
from .utils.constants_torch import device
from .utils.constants_torch import head_dtype

WEIGHT_TOL = 1e-9
OBJECTIVE_TOL = 1e-12
MAX_TEMPERATURE = 10.0

OBJECTIVES = ("kappa", "auc_mean")
DEFAULT_OBJECTIVE = "auc_mean"
DEFAULT_GRID_STEP = 0.01
DEFAULT_KAPPA_THRESHOLD = 0.5


class Temperature(namedtuple("Temperature", ["t"])):
    __slots__ = ()

    def __new__(cls, t=3.0):
        t = float(t)
        if not 0.0 < t <= MAX_TEMPERATURE:
            raise InvalidInputError("temperature must lie in (0, {}], got {}".format(MAX_TEMPERATURE, t))
        return super(Temperature, cls).__new__(cls, t)


DEFAULT_TEMPERATURE = Temperature(3.0)


def _as_temperature(temp):
    return temp if isinstance(temp, Temperature) else Temperature(temp)


class EnsembleWeights(namedtuple("EnsembleWeights", ["w_gen", "w_emb"])):
    __slots__ = ()

    def __new__(cls, w_gen=0.5, w_emb=0.5):
        w_gen, w_emb = float(w_gen), float(w_emb)
        if w_gen < 0.0 or w_emb < 0.0:
            raise InvalidInputError("ensemble weights must be >= 0, got ({}, {})".format(w_gen, w_emb))
        if abs(w_gen + w_emb - 1.0) > WEIGHT_TOL:
            raise InvalidInputError("ensemble weights must sum to 1, got ({}, {})".format(w_gen, w_emb))
        return super(EnsembleWeights, cls).__new__(cls, w_gen, w_emb)

    @classmethod
    def from_w_gen(cls, w_gen):
        return cls(w_gen, 1.0 - w_gen)


# generative path =============================================================
def softmax_with_temperature(logits, temp=DEFAULT_TEMPERATURE):
    """
    p_k = exp(logit_k / t) / sum_j exp(logit_j / t), max-subtracted
    :param logits: K reals, log-probabilities or raw logits of the label tokens
    :param temp: Temperature or a float
    :return: LabelDistribution
    """
    t = _as_temperature(temp).t
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise InvalidInputError("logits must be a vector")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits contain non-finite values")
    z = z / t
    z = z - np.max(z)
    e = np.exp(z)
    return LabelDistribution(e / np.sum(e))


def gen_score(pair, cfg, weights=DEFAULT_LABEL_WEIGHTS, temp=DEFAULT_TEMPERATURE):
    signal = fetch_gen_signal(pair, cfg)
    return expected_score(softmax_with_temperature(signal.logprobs, temp), weights)


# embedding path ==============================================================
def mean_pool(states):
    """
    element-wise mean of the n token vectors
    :param states: EmbSignal or an (n, d_h) sequence
    :return: float64 vector of d_h
    """
    hidden = getattr(states, "hidden_states", states)
    if hidden is None or len(hidden) == 0:
        raise InvalidInputError("cannot pool an empty sequence")
    if len(set(len(h) for h in hidden)) != 1:
        raise InvalidInputError("ragged hidden states")
    arr = np.asarray(hidden, dtype=np.float64)
    return arr.mean(axis=0)


def emb_distribution(pooled, head):
    """softmax(W . pooled + b) at temperature 1"""
    pooled = np.asarray(pooled, dtype=np.float64)
    if pooled.ndim != 1:
        raise InvalidInputError("pooled representation must be a vector")
    with torch.no_grad():
        _, probs = head(torch.from_numpy(pooled).to(device=device, dtype=head_dtype))
    return LabelDistribution(probs.cpu().numpy())


def _emb_scores(signal, heads, weights):
    pooled = mean_pool(signal)
    return [expected_score(emb_distribution(pooled, head), weights) for head in heads]


def emb_score(pair, cfg, head, weights=DEFAULT_LABEL_WEIGHTS):
    signal = fetch_emb_signal(pair, cfg)
    return _emb_scores(signal, [head], weights)[0]


# ensemble ====================================================================
def ensemble_score(s_gen, s_emb, w):
    """w_gen * s_gen + w_emb * s_emb"""
    return RelevanceScore(w.w_gen * float(s_gen) + w.w_emb * float(s_emb))


def mean_score(scores):
    """average of same-architecture instances"""
    return RelevanceScore(float(np.mean([float(s) for s in scores])))


class ScoringConfig(namedtuple("ScoringConfig", ["backend", "gen_backends", "heads", "label_weights",
                                                 "temperature", "weights", "mode"])):
    """
    everything needed to score a pair. gen_backends are averaged into s_gen,
    heads are averaged into s_emb (the embedding signal comes from backend).
    """
    __slots__ = ()

    def __new__(cls, backend, heads, gen_backends=None, label_weights=DEFAULT_LABEL_WEIGHTS,
                temperature=DEFAULT_TEMPERATURE, weights=EnsembleWeights(), mode="ensemble"):
        gen_backends = tuple(gen_backends) if gen_backends else (backend,)
        heads = tuple(heads)
        if mode != "gen" and len(heads) == 0:
            raise InvalidInputError("at least one classifier head is needed for the embedding scorer")
        return super(ScoringConfig, cls).__new__(cls, backend, gen_backends, heads, label_weights,
                                                 _as_temperature(temperature), weights, mode)


def score_pair(pair, scfg, gold=None):
    """
    run both scorers (or the configured single one) on a pair
    :return: ScoredPair
    """
    s_gen, s_emb = None, None
    if scfg.mode in ("ensemble", "gen"):
        s_gen = mean_score([gen_score(pair, cfg, scfg.label_weights, scfg.temperature)
                            for cfg in scfg.gen_backends])
    if scfg.mode in ("ensemble", "emb"):
        s_emb = mean_score(_emb_scores(fetch_emb_signal(pair, scfg.backend), scfg.heads, scfg.label_weights))
    if scfg.mode == "ensemble":
        s_final = ensemble_score(s_gen, s_emb, scfg.weights)
    elif scfg.mode == "gen":
        s_final = s_gen
    else:
        s_final = s_emb
    return ScoredPair(pair, s_gen, s_emb, s_final, gold, scfg.mode)


# weight tuning ===============================================================
def weight_grid(grid_step):
    if not 0.0 < grid_step <= 0.5:
        raise InvalidInputError("grid_step must lie in (0, 0.5], got {}".format(grid_step))
    grid = []
    i = 0
    while i * grid_step <= 1.0 + 1e-12:
        grid.append(min(1.0, round(i * grid_step, 12)))
        i += 1
    if grid[-1] < 1.0:
        grid.append(1.0)
    return grid


def _validation_arrays(validation):
    g, e, gold = [], [], []
    for sp in validation:
        if sp.s_gen is None or sp.s_emb is None or sp.gold is None:
            raise InvalidInputError("every validation pair needs s_gen, s_emb and a gold label")
        if sp.gold_binary is BinaryLabel.EXCLUDED:
            continue
        g.append(float(sp.s_gen))
        e.append(float(sp.s_emb))
        gold.append(sp.gold_binary)
    if len(set(gold)) < 2:
        raise InvalidInputError("validation set must contain both relevant and irrelevant pairs")
    return np.asarray(g), np.asarray(e), gold


def grid_objective(validation, objective=DEFAULT_OBJECTIVE, grid_step=DEFAULT_GRID_STEP,
                   threshold=DEFAULT_KAPPA_THRESHOLD):
    """
    :return: [(w_gen, objective value)] over the whole grid, ascending w_gen
    """
    if objective not in OBJECTIVES:
        raise InvalidInputError("objective must be one of {}, got {!r}".format(OBJECTIVES, objective))
    g, e, gold = _validation_arrays(validation)
    table = []
    for w_gen in weight_grid(grid_step):
        w = EnsembleWeights.from_w_gen(w_gen)
        finals = [float(ensemble_score(sg, se, w)) for sg, se in zip(g, e)]
        if objective == "kappa":
            value = cohens_kappa(binary_predictions(finals, threshold), gold)
        else:
            value = mean_auc(finals, gold)
        table.append((w_gen, value))
    return table


def tune_weights(validation, objective=DEFAULT_OBJECTIVE, grid_step=DEFAULT_GRID_STEP,
                 threshold=DEFAULT_KAPPA_THRESHOLD):
    """
    exhaustive grid over w_gen in {0, step, ..., 1}, w_emb = 1 - w_gen;
    values within 1e-12 of each other tie, ties go to the smallest w_gen
    """
    best_w, best_value = None, None
    for w_gen, value in grid_objective(validation, objective, grid_step, threshold):
        if best_value is None or value > best_value + OBJECTIVE_TOL:
            best_w, best_value = w_gen, value
    return EnsembleWeights.from_w_gen(best_w)
