"""
score query-document pairs: in-process batch scoring, snippet/document comparison, ranking of
the documents retrieved for a query, and a multi-process pipeline over JSONL files.
output record of the pipeline: pair_id, mode, s_gen, s_emb, s_final, gold
(or pair_id, error{kind, message, retryable} for a failed line)
"""

from __future__ import absolute_import

import argparse
import json
import os
import sys
import time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import torch.multiprocessing as mp
try:
    mp.set_start_method('spawn')
except RuntimeError:
    pass

from torch.multiprocessing import Queue

from .core import InvalidInputError
from .core import QueryDocPair
from .core import RelevanceScore
from .backend import BackendError
from .config import DEFAULT_SNIPPET_THRESHOLDS
from .config import build_scoring_config
from .config import load_service_config
from .config import service_config_from_dict
from .config import service_config_to_dict
from .metrics import DEFAULT_KS
from .metrics import RankedList
from .metrics import ranking_metrics
from .scoring import score_pair
from .utils.json_formater import dumps_record
from .utils.json_formater import error_slot
from .utils.json_formater import scored_pair_to_dict
from .utils.process_utils import default_nproc
from .utils.process_utils import count_line_num
from .utils.process_utils import display_args

queue_size_border = 100


class BatchItemError(namedtuple("BatchItemError", ["pair_id", "error"])):
    """a failed slot of a batch, in place of its ScoredPair"""
    __slots__ = ()

    @property
    def kind(self):
        return getattr(self.error, "kind", "invalid_input")

    @property
    def retryable(self):
        return bool(getattr(self.error, "retryable", False))


def pair_from_dict(obj):
    """{"query", "document", "title"?, "pair_id"?, "source"?} -> QueryDocPair"""
    if not isinstance(obj, dict):
        raise InvalidInputError("a pair must be a JSON object")
    for field in ("query", "document"):
        if field not in obj:
            raise InvalidInputError("pair misses '{}'".format(field))
    return QueryDocPair(obj["query"], obj["document"], obj.get("title"), obj.get("pair_id"),
                        obj.get("source", "web"))


def _item_pair_id(item):
    if isinstance(item, QueryDocPair):
        return item.pair_id
    if isinstance(item, dict):
        return item.get("pair_id")
    return None


def _score_one(item, scfg):
    try:
        pair = item if isinstance(item, QueryDocPair) else pair_from_dict(item)
        return score_pair(pair, scfg)
    except (ValueError, BackendError) as e:
        return BatchItemError(_item_pair_id(item), e)


def check_parallelism(parallelism, backend_cfg):
    if int(parallelism) != parallelism or parallelism < 1:
        raise InvalidInputError("parallelism must be a positive integer, got {}".format(parallelism))
    if parallelism > backend_cfg.max_in_flight:
        raise InvalidInputError("parallelism {} exceeds the backend max_in_flight {}".format(
            parallelism, backend_cfg.max_in_flight))
    return int(parallelism)


def batch_score(items, scfg, parallelism=1):
    """
    score every item, failed items become a BatchItemError in their slot
    :param items: QueryDocPair or pair dicts
    :param scfg: ScoringConfig
    :param parallelism: threads, at most the backend max_in_flight
    :return: list in input order
    """
    parallelism = check_parallelism(parallelism, scfg.backend)
    items = list(items)
    if parallelism == 1:
        return [_score_one(item, scfg) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as executor:
        return list(executor.map(lambda item: _score_one(item, scfg), items))


def batch_result_to_dict(result):
    if isinstance(result, BatchItemError):
        return error_slot(result.pair_id, result.error)
    return scored_pair_to_dict(result)


def score_all(pairs, scfg, parallelism=1, golds=None):
    """like batch_score, but the first error is raised"""
    parallelism = check_parallelism(parallelism, scfg.backend)
    pairs = list(pairs)
    golds = [None] * len(pairs) if golds is None else list(golds)
    if parallelism == 1:
        return [score_pair(p, scfg, g) for p, g in zip(pairs, golds)]
    with ThreadPoolExecutor(max_workers=parallelism) as executor:
        return list(executor.map(lambda pg: score_pair(pg[0], scfg, pg[1]), zip(pairs, golds)))


# snippet check ==========================================================
class SnippetVerdict(namedtuple("SnippetVerdict", ["qd_score", "qs_score", "flagged"])):
    __slots__ = ()


def snippet_verdict(qd_score, qs_score, thresholds=DEFAULT_SNIPPET_THRESHOLDS):
    """flagged = (qd_score >= doc_high) and (qs_score <= snip_low)"""
    qd_score, qs_score = RelevanceScore(qd_score), RelevanceScore(qs_score)
    flagged = qd_score >= thresholds.doc_high and qs_score <= thresholds.snip_low
    return SnippetVerdict(qd_score, qs_score, flagged)


def compare_snippet(query, document, snippet, scfg, thresholds=DEFAULT_SNIPPET_THRESHOLDS, title=None):
    """
    score (query, document) and (query, snippet) as independent pairs and flag a snippet that
    misrepresents a relevant document
    :return: SnippetVerdict
    """
    qd = score_pair(QueryDocPair(query, document, title, source="web"), scfg)
    qs = score_pair(QueryDocPair(query, snippet, source="snippet"), scfg)
    return snippet_verdict(qd.s_final, qs.s_final, thresholds)


# ranking ================================================================
RankedDocument = namedtuple("RankedDocument", ["index", "document", "scored", "gain"])


def rank_documents(query, documents, scfg, gains=None, ks=DEFAULT_KS, parallelism=1):
    """
    order documents by descending s_final, the input order breaks ties
    :param documents: document texts
    :param gains: optional gold gains in input order
    :return: (list of RankedDocument, metrics or None); metrics hold the ranking by score
        and the "baseline" input order
    """
    documents = list(documents)
    if len(documents) == 0:
        raise InvalidInputError("at least one document is needed")
    if gains is not None and len(gains) != len(documents):
        raise InvalidInputError("{} gains for {} documents".format(len(gains), len(documents)))
    pairs = [QueryDocPair(query, d, pair_id=str(i)) for i, d in enumerate(documents)]
    scored = score_all(pairs, scfg, parallelism)
    order = sorted(range(len(documents)), key=lambda i: -float(scored[i].s_final))
    ranked = [RankedDocument(i, documents[i], scored[i], None if gains is None else float(gains[i]))
              for i in order]
    if gains is None:
        return ranked, None
    by_score = RankedList(query, [(g, float(sp.s_final)) for g, sp in zip(gains, scored)])
    # input order as the score: first document ranked first
    baseline = RankedList(query, [(g, float(-i)) for i, g in enumerate(gains)])
    ndcg, dcg = ranking_metrics([by_score], ks)
    b_ndcg, b_dcg = ranking_metrics([baseline], ks)
    return ranked, {"ndcg": ndcg, "dcg": dcg, "baseline": {"ndcg": b_ndcg, "dcg": b_dcg}}


def ranking_to_dict(ranked, metrics=None):
    out = {"ranking": [dict(scored_pair_to_dict(r.scored), index=r.index, document=r.document, gain=r.gain)
                       for r in ranked]}
    if metrics is not None:
        out["metrics"] = metrics
    return out


# multi-process pipeline over a JSONL file ================================
class PipelineError(RuntimeError):
    """a reader, scoring or writer process of the pipeline did not finish cleanly"""


def _read_pairs_file(pairs_file, lines_batch_q, batch_size=64, nproc=1):
    """
    :param pairs_file: JSONL of pairs, read as bytes and decoded per line by the scorers
    :param lines_batch_q: Queue of (batch index, [(line number, raw line)])
    :param batch_size:
    :param nproc: scoring processes to send "kill" to
    """
    print("read_pairs process-{} starts".format(os.getpid()))
    b_num = 0
    try:
        with open(pairs_file, "rb") as rf:
            lines = []
            for lineno, line in enumerate(rf, 1):
                if line.strip() == b"":
                    continue
                lines.append((lineno, line))
                if len(lines) == batch_size:
                    lines_batch_q.put((b_num, lines))
                    lines = []
                    b_num += 1
            if len(lines) > 0:
                lines_batch_q.put((b_num, lines))
                b_num += 1
    finally:
        for _ in range(nproc):
            lines_batch_q.put("kill")
    print("read_pairs process-{} ending, read {} batches".format(os.getpid(), b_num))


def _parse_line(lineno, line):
    try:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        return json.loads(line)
    except UnicodeDecodeError as e:
        raise InvalidInputError("line {}: not valid UTF-8 ({})".format(lineno, e))
    except ValueError as e:
        raise InvalidInputError("line {}: not valid JSON ({})".format(lineno, e))


def _dumps_result(lineno, result):
    try:
        return dumps_record(batch_result_to_dict(result))
    except ValueError as e:
        # pair_id is dropped, it may be what cannot be written
        return dumps_record(error_slot(None, InvalidInputError(
            "line {}: result is not JSON-serializable ({})".format(lineno, e))))


def _score_lines(lines, scfg, threads):
    items = []
    for lineno, line in lines:
        try:
            items.append(_parse_line(lineno, line))
        except InvalidInputError as e:
            items.append(BatchItemError(None, e))
    todo = [it for it in items if not isinstance(it, BatchItemError)]
    scored = iter(batch_score(todo, scfg, threads))
    return [_dumps_result(lineno, it if isinstance(it, BatchItemError) else next(scored))
            for (lineno, _), it in zip(lines, items)]


def _failed_lines(lines, e):
    out = []
    for lineno, _ in lines:
        slot = error_slot(None, "line {}: scoring failed ({}: {})".format(lineno, type(e).__name__, e))
        slot["error"]["kind"] = "internal"
        out.append(dumps_record(slot))
    return out


def _score_pairs_q(conf, mode, threads, lines_batch_q, pred_str_q):
    """
    subprocess for scoring
    :param conf: ServiceConfig as a dict
    :param lines_batch_q: Queue
    :param pred_str_q: Queue of (batch index, [JSON lines])
    """
    print('score process-{} starts'.format(os.getpid()))
    scfg = build_scoring_config(service_config_from_dict(conf, use_env=False), mode)
    batch_num_total = 0
    while True:
        lines_batch = lines_batch_q.get()
        if lines_batch == "kill":
            break
        b_idx, lines = lines_batch
        try:
            results = _score_lines(lines, scfg, threads)
        except Exception as e:
            print("score process-{} failed on batch {}: {}".format(os.getpid(), b_idx, e), file=sys.stderr)
            results = _failed_lines(lines, e)
        pred_str_q.put((b_idx, results))
        batch_num_total += 1
    print('score process-{} ending, proceed {} batches'.format(os.getpid(), batch_num_total))


def _write_predstr_to_file(write_fp, predstr_q):
    """batches arrive in any order and are written in input order"""
    print('write_process-{} starts'.format(os.getpid()))
    pending = {}
    next_idx = 0
    with open(write_fp, 'w', encoding="utf-8") as wf:
        while True:
            pred_str = predstr_q.get()
            if pred_str == "kill":
                break
            b_idx, lines = pred_str
            pending[b_idx] = lines
            while next_idx in pending:
                for one_pred_str in pending.pop(next_idx):
                    wf.write(one_pred_str + "\n")
                next_idx += 1
            wf.flush()
    if len(pending) > 0:
        raise PipelineError("batch {} never arrived, {} later batches not written".format(
            next_idx, len(pending)))
    print('write_process-{} finished'.format(os.getpid()))


def check_processes(procs, role):
    failed = ["{}({})".format(p.pid, p.exitcode) for p in procs if p.exitcode != 0]
    if len(failed) > 0:
        raise PipelineError("{} process(es) exited abnormally: {}".format(role, ", ".join(failed)))


def call_relevance(args):
    print("[main] call_relevance starts..")
    start = time.time()

    input_path = os.path.abspath(args.input_path)
    if not os.path.exists(input_path):
        raise ValueError("--input_path does not exist!")
    print("[main] {} lines to score".format(count_line_num(input_path)))
    if args.output is None:
        raise ValueError("--output is required for batch scoring!")
    scfg = load_service_config(args.config, args.backend, args.seed)
    # fail early on bad heads before starting processes
    build_scoring_config(scfg, args.mode)
    conf = service_config_to_dict(scfg)

    nproc = args.nproc if args.nproc is not None else default_nproc
    if nproc < 1:
        raise ValueError("--nproc must be >= 1!")
    nproc = min(nproc, scfg.backend.max_in_flight)
    threads = max(1, min(args.threads, scfg.backend.max_in_flight // nproc))

    lines_batch_q = Queue(maxsize=queue_size_border)
    pred_str_q = Queue(maxsize=queue_size_border)

    p_rf = mp.Process(target=_read_pairs_file, args=(input_path, lines_batch_q, args.batch_size, nproc))
    p_rf.daemon = True
    p_rf.start()

    score_procs = []
    for _ in range(nproc):
        p = mp.Process(target=_score_pairs_q, args=(conf, args.mode, threads, lines_batch_q, pred_str_q))
        p.daemon = True
        p.start()
        score_procs.append(p)

    p_w = mp.Process(target=_write_predstr_to_file, args=(args.output, pred_str_q))
    p_w.daemon = True
    p_w.start()

    for p in score_procs:
        p.join()
    pred_str_q.put("kill")
    if any(p.exitcode != 0 for p in score_procs):
        # nobody is left to drain the bounded queue the reader may block on
        p_rf.terminate()

    p_rf.join()
    p_w.join()

    check_processes(score_procs, "score")
    check_processes([p_rf], "read_pairs")
    check_processes([p_w], "write")
    print("[main] call_relevance costs %.2f seconds.." % (time.time() - start))


def add_batch_arguments(parser):
    p_input = parser.add_argument_group("INPUT")
    p_input.add_argument("--input_path", "-i", action="store", type=str, required=True,
                         help="JSONL file of pairs: {\"query\", \"document\", \"title\"?, \"pair_id\"?, "
                              "\"source\"?} per line")

    p_call = parser.add_argument_group("SCORING")
    p_call.add_argument("--mode", type=str, default="ensemble", choices=["ensemble", "gen", "emb"],
                        required=False, help="scorer to run, default ensemble")
    p_call.add_argument("--batch_size", "-b", default=64, type=int, required=False,
                        action="store", help="lines per batch handed to a process, default 64")
    p_call.add_argument("--nproc", "-p", action="store", type=int, default=None, required=False,
                        help="number of scoring processes, capped by backend max_in_flight, "
                             "default {}".format(default_nproc))
    p_call.add_argument("--threads", action="store", type=int, default=1, required=False,
                        help="scoring threads per process, default 1")


def add_global_arguments(parser):
    p_global = parser.add_argument_group("GLOBAL")
    p_global.add_argument("--config", action="store", type=str, default=None, required=False,
                          help="JSON config file")
    p_global.add_argument("--backend", action="store", type=str, default=None, required=False,
                          help="backend endpoint, 'stub' or an http(s) URL; overrides the config file "
                               "and QUPID_BACKEND_ENDPOINT")
    p_global.add_argument("--seed", action="store", type=int, default=None, required=False,
                          help="stub backend seed")
    p_global.add_argument("--output", "-o", action="store", type=str, default=None, required=False,
                          help="output file, stdout when not set (where allowed)")


def main():
    parser = argparse.ArgumentParser("score query-document pairs of a JSONL file")
    add_global_arguments(parser)
    add_batch_arguments(parser)

    args = parser.parse_args()
    display_args(args)

    call_relevance(args)


if __name__ == '__main__':
    sys.exit(main())
