"""
evaluate the scorers against an annotated corpus: metrics report (overall, per scorer,
per source), ensemble-weight tuning, precision-targeted thresholds, temperature sweeps and
the evaluation of query-refinement candidates.
"""

from __future__ import absolute_import

import argparse
import sys
import time
from collections import OrderedDict

import numpy as np

from .core import SOURCES
from .core import BinaryLabel
from .core import InvalidInputError
from .core import RelevanceLabel
from .core import QueryDocPair
from .core import UndefinedMetricError
from .calibration import select_threshold
from .calibration import temperature_sweep
from .calibration import threshold_report
from .call_relevance import add_global_arguments
from .call_relevance import score_all
from .config import build_scoring_config
from .config import load_service_config
from .dataset import ingest_corpus
from .dataset import labeled_pairs
from .metrics import DEFAULT_KS
from .metrics import RankedList
from .metrics import binary_predictions
from .metrics import cohens_kappa
from .metrics import labeled_scores
from .metrics import metrics_report
from .metrics import pr_curve
from .metrics import roc_auc
from .scoring import DEFAULT_GRID_STEP
from .scoring import DEFAULT_KAPPA_THRESHOLD
from .scoring import DEFAULT_OBJECTIVE
from .scoring import OBJECTIVES
from .scoring import grid_objective
from .scoring import tune_weights
from .utils.json_formater import iter_jsonl
from .utils.json_formater import write_json
from .utils.process_utils import display_args
from .utils.process_utils import str2floats

# graded gains of the gold labels for corpus-level DCG
DEFAULT_LABEL_GAINS = {RelevanceLabel.RELEVANT: 2.0,
                       RelevanceLabel.SOMEWHAT_RELEVANT: 1.0,
                       RelevanceLabel.IRRELEVANT: 0.0}


def label_gains_from_list(values):
    if len(values) != 3:
        raise InvalidInputError("--gains needs 3 values for R,SR,I, got {}".format(values))
    if any(v < 0 for v in values):
        raise InvalidInputError("gains must be >= 0")
    return dict(zip((RelevanceLabel.RELEVANT, RelevanceLabel.SOMEWHAT_RELEVANT, RelevanceLabel.IRRELEVANT),
                    [float(v) for v in values]))


def score_corpus(records, scfg, parallelism=1):
    """
    :param records: AnnotationRecord list, NotEvaluable records are left out
    :return: list of ScoredPair carrying the resolved gold label
    """
    pairs_gold = labeled_pairs(records)
    if len(pairs_gold) == 0:
        raise InvalidInputError("the corpus holds no scoreable record")
    return score_all([p for p, _ in pairs_gold], scfg, parallelism, [g for _, g in pairs_gold])


def ranked_lists_by_query(scored, label_gains=DEFAULT_LABEL_GAINS):
    """one RankedList per distinct query text, in first-appearance order"""
    groups = OrderedDict()
    for sp in scored:
        groups.setdefault(sp.pair.query, []).append((label_gains[sp.gold], float(sp.s_final)))
    return [RankedList(q, items) for q, items in groups.items()]


def _or_none(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


def _block(scores, gold, threshold):
    """kappa and both AUCs, None where a metric is undefined on this subset"""
    data = labeled_scores(scores, gold)
    return {"kappa": _or_none(cohens_kappa, binary_predictions(scores, threshold), gold),
            "auc_relevant": _or_none(roc_auc, data, BinaryLabel.RELEVANT),
            "auc_irrelevant": _or_none(roc_auc, data, BinaryLabel.IRRELEVANT),
            "count": len(data)}


def _macro_average(blocks):
    avg = {}
    for key in ("kappa", "auc_relevant", "auc_irrelevant"):
        values = [b[key] for b in blocks if b[key] is not None]
        avg[key] = float(np.mean(values)) if values else None
    avg["count"] = int(sum(b["count"] for b in blocks))
    return avg


def evaluation_report(scored, threshold=DEFAULT_KAPPA_THRESHOLD, pr_positive=BinaryLabel.IRRELEVANT,
                      label_gains=DEFAULT_LABEL_GAINS, ks=DEFAULT_KS):
    """
    metrics report of s_final, plus "by_scorer" and "by_source" blocks
    :param scored: ScoredPair list with gold labels
    """
    scored = [sp for sp in scored if sp.gold_binary is not BinaryLabel.EXCLUDED]
    if len(scored) == 0:
        raise InvalidInputError("nothing to evaluate")
    gold = [sp.gold_binary for sp in scored]
    finals = [float(sp.s_final) for sp in scored]
    report = metrics_report(finals, gold, ranked_lists_by_query(scored, label_gains), threshold, pr_positive, ks)
    report["mode"] = scored[0].mode

    by_scorer = OrderedDict()
    if all(sp.s_gen is not None for sp in scored):
        by_scorer["gen"] = _block([float(sp.s_gen) for sp in scored], gold, threshold)
    if all(sp.s_emb is not None for sp in scored):
        by_scorer["emb"] = _block([float(sp.s_emb) for sp in scored], gold, threshold)
    by_scorer[scored[0].mode] = _block(finals, gold, threshold)
    report["by_scorer"] = by_scorer

    by_source = OrderedDict()
    for src in SOURCES:
        idx = [i for i, sp in enumerate(scored) if sp.pair.source == src]
        if idx:
            by_source[src] = _block([finals[i] for i in idx], [gold[i] for i in idx], threshold)
    by_source["average"] = _macro_average(list(by_source.values()))
    report["by_source"] = by_source
    return report


def evaluate_corpus(corpus_path, scfg, parallelism=1, threshold=DEFAULT_KAPPA_THRESHOLD,
                    pr_positive=BinaryLabel.IRRELEVANT, label_gains=DEFAULT_LABEL_GAINS):
    return evaluation_report(score_corpus(ingest_corpus(corpus_path), scfg, parallelism),
                             threshold, pr_positive, label_gains)


def tune_report(scored, objective=DEFAULT_OBJECTIVE, grid_step=DEFAULT_GRID_STEP,
                threshold=DEFAULT_KAPPA_THRESHOLD):
    weights = tune_weights(scored, objective, grid_step, threshold)
    grid = grid_objective(scored, objective, grid_step, threshold)
    best = [v for w, v in grid if w == weights.w_gen][0]
    return {"w_gen": weights.w_gen, "w_emb": weights.w_emb, "objective": objective, "value": best,
            "grid_step": grid_step, "grid": [{"w_gen": w, "value": v} for w, v in grid]}


def calibrate_report(scored, policy):
    """pick the operating threshold on the PR curve of policy.positive_class"""
    scored = [sp for sp in scored if sp.gold_binary is not BinaryLabel.EXCLUDED]
    data = labeled_scores([float(sp.s_final) for sp in scored], [sp.gold_binary for sp in scored])
    curve = pr_curve(data, policy.positive_class)
    return threshold_report(select_threshold(curve, policy), policy, curve)


def sweep_report(records, backend_cfg, temps, label_weights, parallelism=1):
    report = temperature_sweep(labeled_pairs(records), backend_cfg, temps, label_weights, parallelism)
    return report.to_dict()


# query refinement =======================================================
def _read_refinement_groups(groups_path):
    rows = []
    for lineno, obj in iter_jsonl(groups_path):
        if not isinstance(obj, dict):
            raise InvalidInputError("line {}: expected a JSON object".format(lineno))
        for field in ("group", "candidate", "query", "documents"):
            if field not in obj:
                raise InvalidInputError("line {}, field '{}': missing".format(lineno, field))
        if not isinstance(obj["documents"], list) or len(obj["documents"]) == 0:
            raise InvalidInputError("line {}, field 'documents': needs at least one document".format(lineno))
        rows.append(obj)
    return rows


def eval_refinement(groups_path, scfg, parallelism=1):
    """
    mean s_final of the documents retrieved for every candidate query, per group
    :param groups_path: JSONL {"group", "candidate", "query", "documents": [...]}
    :return: {"groups": {group: {"candidates": {candidate: {...}}, "best": candidate}}}
    """
    rows = _read_refinement_groups(groups_path)
    pairs, owners = [], []
    for r, obj in enumerate(rows):
        for d, doc in enumerate(obj["documents"]):
            pairs.append(QueryDocPair(obj["query"], doc, pair_id="{}:{}".format(r, d)))
            owners.append(r)
    scored = score_all(pairs, scfg, parallelism)
    per_row = [[] for _ in rows]
    for r, sp in zip(owners, scored):
        per_row[r].append(float(sp.s_final))

    groups = OrderedDict()
    for obj, finals in zip(rows, per_row):
        g = groups.setdefault(str(obj["group"]), {"candidates": OrderedDict()})
        g["candidates"][str(obj["candidate"])] = {"query": obj["query"],
                                                  "mean": float(np.mean(finals)),
                                                  "per_rank": finals}
    for g in groups.values():
        # first candidate wins ties
        best, best_mean = None, None
        for name, c in g["candidates"].items():
            if best_mean is None or c["mean"] > best_mean:
                best, best_mean = name, c["mean"]
        g["best"] = best
    return {"groups": groups}


def evaluate(args):
    print("[main] evaluate starts..")
    start = time.time()

    scfg = load_service_config(args.config, args.backend, args.seed)
    scoring = build_scoring_config(scfg, args.mode)
    report = evaluate_corpus(args.corpus, scoring, args.parallelism, args.threshold, args.pr_positive,
                             label_gains_from_list(str2floats(args.gains)))
    text = write_json(report, args.output)
    if args.output is None:
        print(text)
    print("[main] evaluate costs %.2f seconds.." % (time.time() - start))
    return report


def add_evaluate_arguments(parser):
    p_input = parser.add_argument_group("INPUT")
    p_input.add_argument("--corpus", "-i", action="store", type=str, required=True,
                         help="annotated corpus, JSONL")

    p_eval = parser.add_argument_group("EVALUATE")
    p_eval.add_argument("--mode", type=str, default="ensemble", choices=["ensemble", "gen", "emb"],
                        required=False, help="scorer evaluated as s_final, default ensemble")
    p_eval.add_argument("--threshold", type=float, default=DEFAULT_KAPPA_THRESHOLD, required=False,
                        help="score cut for kappa, relevant when score >= threshold, default 0.5")
    p_eval.add_argument("--pr_positive", type=str, default="irrelevant", choices=["relevant", "irrelevant"],
                        required=False, help="positive class of pr_curve, default irrelevant")
    p_eval.add_argument("--gains", type=str, default="2,1,0", required=False,
                        help="DCG gains of R,SR,I gold labels, default 2,1,0")
    p_eval.add_argument("--parallelism", type=int, default=1, required=False,
                        help="scoring threads, at most backend max_in_flight, default 1")


def add_tune_arguments(parser):
    p_tune = parser.add_argument_group("TUNE")
    p_tune.add_argument("--objective", type=str, default=DEFAULT_OBJECTIVE, choices=list(OBJECTIVES),
                        required=False, help="objective maximized on the validation corpus, default auc_mean")
    p_tune.add_argument("--grid_step", type=float, default=DEFAULT_GRID_STEP, required=False,
                        help="step of the w_gen grid, default 0.01")


def main():
    parser = argparse.ArgumentParser("evaluate relevance scores against an annotated corpus")
    add_global_arguments(parser)
    add_evaluate_arguments(parser)

    args = parser.parse_args()
    display_args(args)

    evaluate(args)


if __name__ == '__main__':
    sys.exit(main())
