#!/usr/bin/python
from __future__ import absolute_import

import sys
import time
import argparse

from .utils.process_utils import str2bool
from .utils.process_utils import str2floats
from .utils.process_utils import display_args

from ._version import QD_RELEVANCE_VERSION

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BACKEND = 2


def _emit(report, args):
    from .utils.json_formater import write_json

    text = write_json(report, args.output)
    if args.output is None:
        print(text)
    return report


def _scoring(args, mode="ensemble"):
    from .config import build_scoring_config
    from .config import load_service_config

    scfg = load_service_config(args.config, args.backend, args.seed)
    return scfg, build_scoring_config(scfg, mode)


def main_score(args):
    from .core import QueryDocPair
    from .scoring import score_pair
    from .utils.json_formater import scored_pair_to_dict

    display_args(args)
    _, scoring = _scoring(args, args.mode)
    pair = QueryDocPair(args.query, args.document, args.title, args.pair_id, args.source)
    return _emit(scored_pair_to_dict(score_pair(pair, scoring)), args)


def main_batch(args):
    from .call_relevance import call_relevance

    display_args(args)
    call_relevance(args)


def main_evaluate(args):
    from .evaluate import evaluate

    display_args(args)
    return evaluate(args)


def _scored_corpus(args, mode):
    from .dataset import ingest_corpus
    from .evaluate import score_corpus

    _, scoring = _scoring(args, mode)
    return score_corpus(ingest_corpus(args.corpus), scoring, args.parallelism)


def main_tune_weights(args):
    from .evaluate import tune_report

    display_args(args)
    print("[main] tune-weights starts..")
    start = time.time()
    report = tune_report(_scored_corpus(args, "ensemble"), args.objective, args.grid_step, args.threshold)
    print("[main] best w_gen={:.4f}, w_emb={:.4f}, {}={:.4f}".format(report["w_gen"], report["w_emb"],
                                                                   report["objective"], report["value"]))
    print("[main] tune-weights costs %.2f seconds.." % (time.time() - start))
    return _emit(report, args)


def main_calibrate_threshold(args):
    from .calibration import ThresholdPolicy
    from .evaluate import calibrate_report

    display_args(args)
    policy = ThresholdPolicy(args.target_precision, args.positive_class)
    return _emit(calibrate_report(_scored_corpus(args, args.mode), policy), args)


def main_sweep_temperature(args):
    from .dataset import ingest_corpus
    from .evaluate import sweep_report

    display_args(args)
    print("[main] sweep-temperature starts..")
    start = time.time()
    scfg, _ = _scoring(args, "gen")
    report = sweep_report(ingest_corpus(args.corpus), scfg.backend, str2floats(args.temps), scfg.label_weights,
                          args.parallelism)
    print("[main] sweep-temperature costs %.2f seconds.." % (time.time() - start))
    return _emit(report, args)


def main_compare_snippet(args):
    from .call_relevance import compare_snippet

    display_args(args)
    scfg, scoring = _scoring(args)
    verdict = compare_snippet(args.query, args.document, args.snippet, scoring, scfg.snippet_thresholds,
                              args.title)
    return _emit({"qd_score": float(verdict.qd_score), "qs_score": float(verdict.qs_score),
                  "flagged": verdict.flagged, "thresholds": scfg.snippet_thresholds._asdict()}, args)


def main_rank(args):
    from .call_relevance import rank_documents
    from .call_relevance import ranking_to_dict

    display_args(args)
    _, scoring = _scoring(args)
    with open(args.documents, "r", encoding="utf-8") as rf:
        documents = [line.rstrip("\n") for line in rf if line.strip() != ""]
    gains = None if args.gains is None else str2floats(args.gains)
    ranked, metrics = rank_documents(args.query, documents, scoring, gains, parallelism=args.parallelism)
    return _emit(ranking_to_dict(ranked, metrics), args)


def main_eval_refinement(args):
    from .evaluate import eval_refinement

    display_args(args)
    _, scoring = _scoring(args)
    return _emit(eval_refinement(args.groups, scoring, args.parallelism), args)


def main_curate(args):
    from .core import QueryDocPair
    from .dataset import build_hard_negative_prompt
    from .dataset import ingest_corpus
    from .dataset import label_counts
    from .dataset import parse_hard_negative_output
    from .dataset import validate_corpus_stats

    display_args(args)
    if args.action == "prompt":
        if args.query is None or args.document is None:
            raise ValueError("--query and --document are required for --action prompt!")
        prompt = build_hard_negative_prompt(QueryDocPair(args.query, args.document, args.title), args.style)
        if args.output is None:
            print(prompt)
        else:
            with open(args.output, "w", encoding="utf-8") as wf:
                wf.write(prompt)
        return prompt
    if args.action == "parse":
        if args.raw is None:
            raise ValueError("--raw is required for --action parse!")
        with open(args.raw, "r", encoding="utf-8") as rf:
            parsed = parse_hard_negative_output(rf.read(), str2bool(args.strict))
        return _emit(parsed._asdict(), args)
    if args.corpus is None:
        raise ValueError("--corpus is required for --action stats!")
    records = ingest_corpus(args.corpus)
    report = validate_corpus_stats(records, tolerance=args.tolerance)
    report["label_counts"] = label_counts(records)
    return _emit(report, args)


def main_bench(args):
    from .bench import bench

    display_args(args)
    return bench(args)


def main_serve(args):
    from .config import load_service_config
    from .service import serve

    display_args(args)
    overrides = {"listen": args.listen}
    serve(load_service_config(args.config, args.backend, args.seed, overrides))


def _add_pair_arguments(group):
    group.add_argument("--query", "-q", action="store", type=str, required=True, help="query text")
    group.add_argument("--document", "-d", action="store", type=str, required=True, help="document body")
    group.add_argument("--title", action="store", type=str, default=None, required=False,
                       help="document title, optional")


def _add_mode_argument(group, default="ensemble"):
    group.add_argument("--mode", type=str, default=default, choices=["ensemble", "gen", "emb"],
                       required=False, help="scorer to run, default {}".format(default))


def _add_parallelism_argument(group):
    group.add_argument("--parallelism", type=int, default=1, required=False,
                       help="scoring threads, at most backend max_in_flight, default 1")


def main(argv=None):
    from .backend import BackendError
    from .call_relevance import PipelineError
    from .call_relevance import add_batch_arguments
    from .call_relevance import add_global_arguments
    from .evaluate import add_evaluate_arguments
    from .evaluate import add_tune_arguments
    from .bench import add_bench_arguments

    parser = argparse.ArgumentParser(prog='qd_relevance',
                                     description="query-document relevance scoring with an ensemble of a "
                                                 "generative scorer and an embedding scorer, "
                                                 "qd_relevance contains modules:\n"
                                                 "\t%(prog)s score: score one query-document pair\n"
                                                 "\t%(prog)s batch: score a JSONL file of pairs\n"
                                                 "\t%(prog)s evaluate: metrics report on an annotated corpus\n"
                                                 "\t%(prog)s tune-weights: grid-search the ensemble weights\n"
                                                 "\t%(prog)s calibrate-threshold: precision-targeted threshold\n"
                                                 "\t%(prog)s sweep-temperature: AUC per generation temperature\n"
                                                 "\t%(prog)s compare-snippet: flag misleading snippets\n"
                                                 "\t%(prog)s rank: rank the documents of a query\n"
                                                 "\t%(prog)s eval-refinement: compare candidate queries\n"
                                                 "\t%(prog)s curate: hard-negative prompts, outputs, corpus stats\n"
                                                 "\t%(prog)s bench: latency of the scoring paths\n"
                                                 "\t%(prog)s serve: HTTP scoring service",
                                     formatter_class=argparse.RawTextHelpFormatter)
    parser.add_argument(
        '-v', '--version', action='version',
        version='qd-relevance version: {}'.format(QD_RELEVANCE_VERSION),
        help='show qd-relevance version and exit.')

    global_parser = argparse.ArgumentParser(add_help=False)
    add_global_arguments(global_parser)

    subparsers = parser.add_subparsers(title="modules", help='qd_relevance modules, use -h/--help for help')

    def _sub(name, description):
        return subparsers.add_parser(name, description=description, parents=[global_parser])

    # score ==================================================================
    sub_score = _sub("score", "score one query-document pair")
    ss_input = sub_score.add_argument_group("INPUT")
    _add_pair_arguments(ss_input)
    ss_input.add_argument("--pair_id", action="store", type=str, default=None, required=False)
    ss_input.add_argument("--source", action="store", type=str, default="web",
                          choices=["web", "ugc", "snippet", "synthetic"], required=False)
    _add_mode_argument(sub_score.add_argument_group("SCORING"))
    sub_score.set_defaults(func=main_score)

    # batch ==================================================================
    sub_batch = _sub("batch", "score a JSONL file of pairs with a multi-process pipeline")
    add_batch_arguments(sub_batch)
    sub_batch.set_defaults(func=main_batch)

    # evaluate ===============================================================
    sub_evaluate = _sub("evaluate", "score an annotated corpus and write the metrics report")
    add_evaluate_arguments(sub_evaluate)
    sub_evaluate.set_defaults(func=main_evaluate)

    # tune-weights ===========================================================
    sub_tune = _sub("tune-weights", "grid-search w_gen (w_emb = 1 - w_gen) on a validation corpus")
    st_input = sub_tune.add_argument_group("INPUT")
    st_input.add_argument("--corpus", "-i", action="store", type=str, required=True,
                          help="validation corpus, JSONL")
    add_tune_arguments(sub_tune)
    sub_tune.add_argument("--threshold", type=float, default=0.5, required=False,
                          help="score cut of the kappa objective, default 0.5")
    _add_parallelism_argument(sub_tune)
    sub_tune.set_defaults(func=main_tune_weights)

    # calibrate-threshold ====================================================
    sub_calib = _sub("calibrate-threshold", "pick the threshold reaching a target precision with max recall")
    sc_input = sub_calib.add_argument_group("INPUT")
    sc_input.add_argument("--corpus", "-i", action="store", type=str, required=True,
                          help="annotated corpus, JSONL")
    sc_calib = sub_calib.add_argument_group("CALIBRATE")
    sc_calib.add_argument("--target_precision", type=float, default=0.95, required=False,
                          help="precision to reach, in (0, 1], default 0.95")
    sc_calib.add_argument("--positive_class", type=str, default="irrelevant", choices=["relevant", "irrelevant"],
                          required=False, help="class being filtered, default irrelevant")
    _add_mode_argument(sc_calib)
    _add_parallelism_argument(sc_calib)
    sub_calib.set_defaults(func=main_calibrate_threshold)

    # sweep-temperature ======================================================
    sub_sweep = _sub("sweep-temperature", "both AUCs of the generative scorer per temperature")
    sw_input = sub_sweep.add_argument_group("INPUT")
    sw_input.add_argument("--corpus", "-i", action="store", type=str, required=True,
                          help="annotated corpus, JSONL")
    sw_sweep = sub_sweep.add_argument_group("SWEEP")
    sw_sweep.add_argument("--temps", type=str, default="0.5,1.0,1.5,2.0,2.5,3.0,3.5,4.0", required=False,
                          help="comma-separated temperatures, default 0.5,1.0,...,4.0")
    _add_parallelism_argument(sw_sweep)
    sub_sweep.set_defaults(func=main_sweep_temperature)

    # compare-snippet ========================================================
    sub_snippet = _sub("compare-snippet", "compare query-document and query-snippet relevance")
    sn_input = sub_snippet.add_argument_group("INPUT")
    _add_pair_arguments(sn_input)
    sn_input.add_argument("--snippet", "-s", action="store", type=str, required=True,
                          help="snippet extracted from the document")
    sub_snippet.set_defaults(func=main_compare_snippet)

    # rank ===================================================================
    sub_rank = _sub("rank", "rank the documents retrieved for a query by s_final")
    sr_input = sub_rank.add_argument_group("INPUT")
    sr_input.add_argument("--query", "-q", action="store", type=str, required=True, help="query text")
    sr_input.add_argument("--documents", "-d", action="store", type=str, required=True,
                          help="text file, one document per line")
    sr_input.add_argument("--gains", action="store", type=str, default=None, required=False,
                          help="comma-separated gold gains in document order, enables nDCG/DCG")
    _add_parallelism_argument(sub_rank)
    sub_rank.set_defaults(func=main_rank)

    # eval-refinement ========================================================
    sub_refine = _sub("eval-refinement", "mean relevance of the results of candidate queries")
    sf_input = sub_refine.add_argument_group("INPUT")
    sf_input.add_argument("--groups", "-i", action="store", type=str, required=True,
                          help="JSONL, {\"group\", \"candidate\", \"query\", \"documents\": [...]} per line")
    _add_parallelism_argument(sub_refine)
    sub_refine.set_defaults(func=main_eval_refinement)

    # curate =================================================================
    sub_curate = _sub("curate", "hard-negative prompt building, model output parsing, corpus composition")
    su_curate = sub_curate.add_argument_group("CURATE")
    su_curate.add_argument("--action", type=str, default="prompt", choices=["prompt", "parse", "stats"],
                           required=False, help="prompt: build a prompt from --query/--document; "
                                                "parse: parse the model output in --raw; "
                                                "stats: check the source fractions of --corpus. default prompt")
    su_curate.add_argument("--query", "-q", action="store", type=str, default=None, required=False)
    su_curate.add_argument("--document", "-d", action="store", type=str, default=None, required=False,
                           help="the most relevant document of the query")
    su_curate.add_argument("--title", action="store", type=str, default=None, required=False)
    su_curate.add_argument("--style", type=str, default="encyclopedic", choices=["encyclopedic", "blog"],
                           required=False, help="style of the relevant document, default encyclopedic")
    su_curate.add_argument("--raw", action="store", type=str, default=None, required=False,
                           help="file holding a raw model output")
    su_curate.add_argument("--strict", action="store", type=str, default="yes", required=False,
                           help="reject fields other than title/document. default yes")
    su_curate.add_argument("--corpus", "-i", action="store", type=str, default=None, required=False,
                           help="annotated corpus, JSONL")
    su_curate.add_argument("--tolerance", type=float, default=0.01, required=False,
                           help="allowed deviation of a source fraction, default 0.01")
    sub_curate.set_defaults(func=main_curate)

    # bench ==================================================================
    sub_bench = _sub("bench", "p50/p95/p99/mean latency of the gen, emb and ensemble paths")
    add_bench_arguments(sub_bench)
    sub_bench.set_defaults(func=main_bench)

    # serve ==================================================================
    sub_serve = _sub("serve", "run the HTTP scoring service")
    sub_serve.add_argument("--listen", action="store", type=str, default=None, required=False,
                           help="host:port, overrides the config file, default 127.0.0.1:8000")
    sub_serve.set_defaults(func=main_serve)

    args = parser.parse_args(argv)
    if not hasattr(args, 'func'):
        parser.print_help()
        return EXIT_OK
    try:
        args.func(args)
    except BackendError as e:
        print("[error] {}: {}".format(e.kind, e), file=sys.stderr)
        return EXIT_BACKEND
    except PipelineError as e:
        print("[error] batch pipeline: {}".format(e), file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError) as e:
        print("[error] {}".format(e), file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
