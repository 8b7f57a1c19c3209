"""
annotated corpus handling: JSONL ingestion, three-annotator vote resolution,
source-composition checks, and the hard-negative prompt / output contract.
"""

from __future__ import absolute_import

import json
import os
import re
from collections import Counter
from collections import namedtuple

from .core import SOURCES
from .core import InvalidInputError
from .core import QueryDocPair
from .core import RelevanceLabel
from .core import UnresolvedRecordError
from .core import collapse_binary
from .utils.json_formater import JsonLineError
from .utils.json_formater import iter_jsonl
from .utils.json_formater import write_jsonl

N_VOTES = 3

# corpus composition of the curated training set
EXPECTED_SOURCE_FRACTIONS = {"web": 0.4870, "ugc": 0.1217, "snippet": 0.2462, "synthetic": 0.1451}
FRACTION_TOL = 1e-6

HARD_NEGATIVE_TEMPLATE = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                                      "templates", "hard_negative.v1.txt")
HARD_NEGATIVE_STYLES = {
    "encyclopedic": "If the most relevant document follows an encyclopedic format, "
                    "the generated document should also adopt a formal, academic style.",
    "blog": "If the most relevant document follows a blog-like format, "
            "the generated document should adopt a conversational and subjective style.",
}
HARD_NEGATIVE_CRITERIA = ("query_mismatch", "useful_but_irrelevant", "incomplete_information")

_CORPUS_FIELDS = ("pair_id", "query", "title", "document", "source", "votes", "adjudication")


class CorpusFormatError(InvalidInputError):
    def __init__(self, lineno, field, message):
        where = "line {}".format(lineno) if field is None else "line {}, field '{}'".format(lineno, field)
        super(CorpusFormatError, self).__init__("{}: {}".format(where, message))
        self.lineno = lineno
        self.field = field


class HardNegativeRejected(InvalidInputError):
    def __init__(self, reason):
        super(HardNegativeRejected, self).__init__("hard negative rejected: {}".format(reason))
        self.reason = reason


def _as_label(x, what):
    try:
        return RelevanceLabel(x)
    except ValueError:
        raise InvalidInputError("{} must be one of R/SR/I/NE, got {!r}".format(what, x))


class AnnotationRecord(namedtuple("AnnotationRecord", ["pair", "votes", "adjudication"])):
    """
    three annotator votes; the adjudication is present exactly when all three votes differ
    """
    __slots__ = ()

    def __new__(cls, pair, votes, adjudication=None):
        if not isinstance(pair, QueryDocPair):
            raise InvalidInputError("pair must be a QueryDocPair")
        if isinstance(votes, str) or len(votes) != N_VOTES:
            raise InvalidInputError("exactly {} votes are needed, got {!r}".format(N_VOTES, votes))
        votes = tuple(_as_label(v, "vote") for v in votes)
        if adjudication is not None:
            adjudication = _as_label(adjudication, "adjudication")
            if len(set(votes)) != N_VOTES:
                raise InvalidInputError("adjudication given although the votes have a majority")
        return super(AnnotationRecord, cls).__new__(cls, pair, votes, adjudication)

    @property
    def label(self):
        return resolve_votes(self)

    @property
    def excluded(self):
        """NotEvaluable after resolution, kept out of training and evaluation"""
        return not self.label.is_scoreable


def resolve_votes(rec):
    """
    majority of the three votes, the adjudication when all three differ
    :param rec: AnnotationRecord
    :return: RelevanceLabel
    """
    label, count = Counter(rec.votes).most_common(1)[0]
    if count >= 2:
        return label
    if rec.adjudication is None:
        raise UnresolvedRecordError("pair {!r}: votes {} all differ and no adjudication was given".format(
            rec.pair.pair_id, "/".join(v.value for v in rec.votes)))
    return rec.adjudication


# corpus JSONL ===========================================================
def _record_from_dict(obj, lineno):
    if not isinstance(obj, dict):
        raise CorpusFormatError(lineno, None, "expected a JSON object")
    for field in ("query", "document", "votes"):
        if field not in obj:
            raise CorpusFormatError(lineno, field, "missing")
    unknown = sorted(set(obj.keys()) - set(_CORPUS_FIELDS))
    if unknown:
        raise CorpusFormatError(lineno, unknown[0], "unknown field")
    votes = obj["votes"]
    if not isinstance(votes, list) or len(votes) != N_VOTES:
        raise CorpusFormatError(lineno, "votes", "exactly {} votes are needed, got {!r}".format(N_VOTES, votes))
    for field in ("votes", "adjudication"):
        values = obj.get(field) if field == "votes" else [obj.get(field)]
        for v in values:
            if v is not None and v not in [lb.value for lb in RelevanceLabel]:
                raise CorpusFormatError(lineno, field, "label must be one of R/SR/I/NE, got {!r}".format(v))
    for field in ("query", "document"):
        if not isinstance(obj[field], str) or obj[field].strip() == "":
            raise CorpusFormatError(lineno, field, "must be non-empty text")
    if obj.get("title") is not None and not isinstance(obj["title"], str):
        raise CorpusFormatError(lineno, "title", "must be text or null")
    if obj.get("source", "web") not in SOURCES:
        raise CorpusFormatError(lineno, "source", "must be one of {}, got {!r}".format(SOURCES, obj["source"]))
    pair = QueryDocPair(obj["query"], obj["document"], obj.get("title"), obj.get("pair_id"),
                        obj.get("source", "web"))
    try:
        rec = AnnotationRecord(pair, votes, obj.get("adjudication"))
        resolve_votes(rec)
    except (UnresolvedRecordError, InvalidInputError) as e:
        raise CorpusFormatError(lineno, "adjudication", str(e))
    return rec


def ingest_corpus(corpus_path):
    """
    :param corpus_path: JSONL, one annotated pair per line
    :return: list of AnnotationRecord in file order; use rec.excluded for NotEvaluable ones
    """
    records = []
    try:
        for lineno, obj in iter_jsonl(corpus_path):
            records.append(_record_from_dict(obj, lineno))
    except JsonLineError as e:
        raise CorpusFormatError(e.lineno, None, str(e).split(": ", 1)[-1])
    return records


def record_to_dict(rec):
    return {"pair_id": rec.pair.pair_id,
            "query": rec.pair.query,
            "title": rec.pair.doc_title,
            "document": rec.pair.document,
            "source": rec.pair.source,
            "votes": [v.value for v in rec.votes],
            "adjudication": None if rec.adjudication is None else rec.adjudication.value}


def write_corpus(records, corpus_path):
    write_jsonl([record_to_dict(rec) for rec in records], corpus_path)


def labeled_pairs(records):
    """(pair, resolved label) of the scoreable records"""
    return [(rec.pair, rec.label) for rec in records if not rec.excluded]


# corpus composition =====================================================
class CorpusStats(namedtuple("CorpusStats", ["fractions", "total"])):
    __slots__ = ()

    def __new__(cls, fractions, total=0):
        fractions = dict(fractions)
        unknown = set(fractions.keys()) - set(SOURCES)
        if unknown:
            raise InvalidInputError("unknown sources {}".format(sorted(unknown)))
        fractions = dict((s, float(fractions.get(s, 0.0))) for s in SOURCES)
        if any(f < 0.0 for f in fractions.values()):
            raise InvalidInputError("source fractions must be >= 0")
        if abs(sum(fractions.values()) - 1.0) > FRACTION_TOL:
            raise InvalidInputError("source fractions must sum to 1, got {}".format(sum(fractions.values())))
        return super(CorpusStats, cls).__new__(cls, fractions, int(total))


EXPECTED_CORPUS_STATS = CorpusStats(EXPECTED_SOURCE_FRACTIONS)


def corpus_stats(records):
    """source fractions over the scoreable records"""
    kept = [rec for rec in records if not rec.excluded]
    if len(kept) == 0:
        raise InvalidInputError("no scoreable records to compute corpus stats on")
    counts = Counter(rec.pair.source for rec in kept)
    return CorpusStats(dict((s, float(counts.get(s, 0)) / len(kept)) for s in SOURCES), len(kept))


def validate_corpus_stats(records, expected=EXPECTED_CORPUS_STATS, tolerance=0.01):
    """
    report only: a corpus with no scoreable record fails every source instead of raising
    :return: {"total", "excluded", "passed", "sources": {src: {"observed", "expected", "deviation", "flagged"}}}
    """
    total = sum(1 for rec in records if not rec.excluded)
    if total > 0:
        observed = corpus_stats(records).fractions
    else:
        observed = dict((s, 0.0) for s in SOURCES)
    sources = {}
    for src in SOURCES:
        dev = observed[src] - expected.fractions[src]
        sources[src] = {"observed": observed[src],
                        "expected": expected.fractions[src],
                        "deviation": dev,
                        "flagged": total == 0 or abs(dev) > tolerance}
    return {"total": total,
            "excluded": len(records) - total,
            "tolerance": tolerance,
            "passed": not any(v["flagged"] for v in sources.values()),
            "sources": sources}


def label_counts(records):
    """resolved four-class and binary label counts"""
    four = Counter(rec.label.value for rec in records)
    binary = Counter(collapse_binary(rec.label).value for rec in records)
    return {"labels": dict(four), "binary": dict(binary)}


# hard negatives =========================================================
class HardNegativeOutput(namedtuple("HardNegativeOutput", ["title", "document", "criterion"])):
    __slots__ = ()

    def __new__(cls, title, document, criterion=None):
        for name, v in (("title", title), ("document", document)):
            if not isinstance(v, str) or v.strip() == "":
                raise HardNegativeRejected("'{}' must be non-empty text".format(name))
        if criterion is not None and criterion not in HARD_NEGATIVE_CRITERIA:
            raise HardNegativeRejected("unknown criterion {!r}".format(criterion))
        return super(HardNegativeOutput, cls).__new__(cls, title, document, criterion)


def load_hard_negative_template(template_path=HARD_NEGATIVE_TEMPLATE):
    with open(template_path, "r", encoding="utf-8") as rf:
        return rf.read()


def build_hard_negative_prompt(pair, style="encyclopedic", template=None):
    """
    :param pair: QueryDocPair holding the query and its most relevant document
    :param style: encyclopedic or blog, selects the style-matching clause
    :param template: template text with {query}, {relevant_document} and {style_clause}
    :return: prompt text
    """
    if style not in HARD_NEGATIVE_STYLES:
        raise InvalidInputError("style must be one of {}, got {!r}".format(sorted(HARD_NEGATIVE_STYLES), style))
    if template is None:
        template = load_hard_negative_template()
    return template.format(query=pair.query,
                           relevant_document=pair.document_segment(),
                           style_clause=HARD_NEGATIVE_STYLES[style])


_fence = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _json_objects(text):
    """every top-level JSON object embedded in text, in order"""
    decoder = json.JSONDecoder()
    objs = []
    i = 0
    while True:
        i = text.find("{", i)
        if i < 0:
            return objs
        try:
            obj, end = decoder.raw_decode(text, i)
        except ValueError:
            i += 1
            continue
        if isinstance(obj, dict):
            objs.append(obj)
        i = end


def parse_hard_negative_output(raw, strict=True):
    """
    pull exactly one {"title", "document"} object out of a model answer, bare or in a
    ``` fence with prose around it. non-strict mode also accepts a "criterion" tag and
    ignores other extra fields.
    :return: HardNegativeOutput
    """
    if not isinstance(raw, str) or raw.strip() == "":
        raise HardNegativeRejected("empty output")
    fenced = _fence.findall(raw)
    candidates = []
    for block in fenced:
        candidates.extend(_json_objects(block))
    if not fenced:
        candidates = _json_objects(raw)
    if len(candidates) == 0:
        raise HardNegativeRejected("no JSON object found")
    if len(candidates) > 1:
        raise HardNegativeRejected("{} JSON objects found, expected exactly one".format(len(candidates)))
    obj = candidates[0]
    missing = [f for f in ("title", "document") if f not in obj]
    if missing:
        raise HardNegativeRejected("missing field(s) {}".format(missing))
    extra = sorted(set(obj.keys()) - {"title", "document"})
    if strict and extra:
        raise HardNegativeRejected("unexpected field(s) {}".format(extra))
    return HardNegativeOutput(obj["title"], obj["document"], None if strict else obj.get("criterion"))
