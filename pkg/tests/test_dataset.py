import itertools
import json
from collections import Counter

import pytest

from qd_relevance.core import InvalidInputError
from qd_relevance.core import QueryDocPair
from qd_relevance.core import RelevanceLabel
from qd_relevance.core import UnresolvedRecordError
from qd_relevance.dataset import HARD_NEGATIVE_STYLES
from qd_relevance.dataset import AnnotationRecord
from qd_relevance.dataset import CorpusFormatError
from qd_relevance.dataset import CorpusStats
from qd_relevance.dataset import HardNegativeRejected
from qd_relevance.dataset import build_hard_negative_prompt
from qd_relevance.dataset import corpus_stats
from qd_relevance.dataset import ingest_corpus
from qd_relevance.dataset import label_counts
from qd_relevance.dataset import labeled_pairs
from qd_relevance.dataset import parse_hard_negative_output
from qd_relevance.dataset import resolve_votes
from qd_relevance.dataset import validate_corpus_stats
from qd_relevance.dataset import write_corpus

CODES = ["R", "SR", "I", "NE"]
PAIR = QueryDocPair("q", "d")


# vote resolution ========================================================
def test_resolve_votes_examples():
    assert resolve_votes(AnnotationRecord(PAIR, ["R", "R", "I"])) is RelevanceLabel.RELEVANT
    assert resolve_votes(AnnotationRecord(PAIR, ["I", "SR", "I"])) is RelevanceLabel.IRRELEVANT
    assert resolve_votes(AnnotationRecord(PAIR, ["R", "SR", "I"], "SR")) is RelevanceLabel.SOMEWHAT_RELEVANT
    assert AnnotationRecord(PAIR, ["NE", "NE", "R"]).excluded


def test_all_vote_combinations():
    for votes in itertools.product(CODES, repeat=3):
        counts = Counter(votes)
        top, n = counts.most_common(1)[0]
        adjudication = None if n >= 2 else votes[1]
        expected = RelevanceLabel(top if n >= 2 else adjudication)
        for perm in set(itertools.permutations(votes)):
            assert resolve_votes(AnnotationRecord(PAIR, perm, adjudication)) is expected


def test_split_votes_without_adjudication():
    with pytest.raises(UnresolvedRecordError):
        resolve_votes(AnnotationRecord(PAIR, ["R", "SR", "I"]))


def test_annotation_record_validation():
    with pytest.raises(InvalidInputError):
        AnnotationRecord(PAIR, ["R", "R"])
    with pytest.raises(InvalidInputError):
        AnnotationRecord(PAIR, ["R", "R", "I"], "I")
    with pytest.raises(InvalidInputError):
        AnnotationRecord(PAIR, ["R", "R", "X"])


# ingestion ==============================================================
def _line(**kwargs):
    obj = {"pair_id": "p", "query": "q", "title": None, "document": "d", "source": "web",
           "votes": ["R", "R", "I"], "adjudication": None}
    obj.update(kwargs)
    return json.dumps(obj)


def _write(tmp_path, lines):
    path = str(tmp_path / "corpus.jsonl")
    with open(path, "w") as wf:
        wf.write("\n".join(lines) + "\n")
    return path


def test_ingest_empty_and_single(tmp_path):
    assert ingest_corpus(_write(tmp_path, [""])) == []
    records = ingest_corpus(_write(tmp_path, [_line()]))
    assert len(records) == 1
    assert records[0].label is RelevanceLabel.RELEVANT


@pytest.mark.parametrize("bad,field", [
    (_line(votes=["R", "I"]), "votes"),
    (_line(votes=["R", "R", "maybe"]), "votes"),
    (_line(source="forum"), "source"),
    (_line(query=""), "query"),
    (_line(votes=["R", "SR", "I"]), "adjudication"),
    (_line(adjudication="I"), "adjudication"),
    (_line(extra=1), "extra"),
])
def test_ingest_errors_name_line_and_field(tmp_path, bad, field):
    with pytest.raises(CorpusFormatError) as e:
        ingest_corpus(_write(tmp_path, [_line(), bad]))
    assert e.value.lineno == 2
    assert e.value.field == field


def test_ingest_malformed_json(tmp_path):
    with pytest.raises(CorpusFormatError) as e:
        ingest_corpus(_write(tmp_path, [_line(), _line(), "{not json"]))
    assert e.value.lineno == 3


def test_ingest_undecodable_line(tmp_path):
    path = str(tmp_path / "corpus.jsonl")
    with open(path, "wb") as wf:
        wf.write(_line().encode("utf-8") + b"\n" + b'{"query": "\xff\xfe"}\n' + _line().encode("utf-8") + b"\n")
    with pytest.raises(CorpusFormatError) as e:
        ingest_corpus(path)
    assert e.value.lineno == 2
    assert "UTF-8" in str(e.value)


def test_ingest_keeps_excluded_records(tmp_path):
    records = ingest_corpus(_write(tmp_path, [_line(), _line(votes=["NE", "NE", "I"])]))
    assert [r.excluded for r in records] == [False, True]
    assert len(labeled_pairs(records)) == 1


def test_write_then_ingest(make_corpus, tmp_path):
    path, records = make_corpus(25, seed=3, ne_every=6)
    again = str(tmp_path / "again.jsonl")
    write_corpus(ingest_corpus(path), again)
    assert ingest_corpus(again) == records


def test_label_counts(make_corpus):
    _, records = make_corpus(20, ne_every=5)
    counts = label_counts(records)
    assert counts["labels"]["NE"] == 4
    assert sum(counts["binary"].values()) == 20


# corpus composition =====================================================
def _records(counts):
    records = []
    for source, n in counts.items():
        for i in range(n):
            records.append(AnnotationRecord(QueryDocPair("q", "d{}".format(i), source=source), ["R", "R", "I"]))
    return records


def test_exact_fractions_pass():
    report = validate_corpus_stats(_records({"web": 4870, "ugc": 1217, "snippet": 2462, "synthetic": 1451}))
    assert report["passed"]
    assert report["total"] == 10000
    assert report["sources"]["web"]["deviation"] == pytest.approx(0.0, abs=1e-12)


def test_small_deviation_passes():
    report = validate_corpus_stats(_records({"web": 4900, "ugc": 1200, "snippet": 2450, "synthetic": 1450}))
    assert report["passed"]


def test_single_source_corpus_is_flagged():
    report = validate_corpus_stats(_records({"web": 100}))
    assert not report["passed"]
    assert all(report["sources"][s]["flagged"] for s in ("web", "ugc", "snippet", "synthetic"))


def test_excluded_records_do_not_count():
    records = _records({"web": 1, "ugc": 1})
    records.append(AnnotationRecord(QueryDocPair("q", "x", source="synthetic"), ["NE", "NE", "NE"]))
    stats = corpus_stats(records)
    assert stats.fractions["synthetic"] == 0.0
    assert stats.total == 2
    assert validate_corpus_stats(records)["excluded"] == 1


def test_corpus_stats_must_sum_to_one():
    with pytest.raises(InvalidInputError):
        CorpusStats({"web": 0.5, "ugc": 0.4})
    with pytest.raises(InvalidInputError):
        CorpusStats({"web": 0.5, "forum": 0.5})
    assert CorpusStats({"web": 0.5, "ugc": 0.5}).total == 0


def test_stats_of_a_corpus_without_scoreable_records():
    records = [AnnotationRecord(QueryDocPair("q", "x"), ["NE", "NE", "I"])]
    for recs in (records, []):
        report = validate_corpus_stats(recs)
        assert report["total"] == 0
        assert report["excluded"] == len(recs)
        assert not report["passed"]


# hard negatives =========================================================
def test_prompt_contents():
    pair = QueryDocPair("how do volcanoes form", "Volcanoes form when magma rises.", "Volcano")
    prompt = build_hard_negative_prompt(pair, "encyclopedic")
    assert "AI search system" in prompt
    assert "must not align with the query's intent" in prompt
    assert "formal, academic style" in prompt
    assert "how do volcanoes form" in prompt
    assert "Volcano\nVolcanoes form when magma rises." in prompt
    assert '"title"' in prompt and '"document"' in prompt
    assert "conversational and subjective style" in build_hard_negative_prompt(pair, "blog")


def test_prompt_keeps_braces_in_input():
    pair = QueryDocPair("json {key}", "body with {braces} and }{")
    prompt = build_hard_negative_prompt(pair)
    assert "json {key}" in prompt
    assert "body with {braces} and }{" in prompt


def test_prompt_is_complete_for_any_pair():
    for i in range(20):
        pair = QueryDocPair("query {}".format(i), "document text {}".format(i * 7))
        for style in HARD_NEGATIVE_STYLES:
            prompt = build_hard_negative_prompt(pair, style)
            assert pair.query in prompt and pair.document in prompt
            assert HARD_NEGATIVE_STYLES[style] in prompt
            assert "{query}" not in prompt and "{relevant_document}" not in prompt


def test_prompt_unknown_style():
    with pytest.raises(InvalidInputError):
        build_hard_negative_prompt(PAIR, "poetic")


def test_parse_bare_object():
    out = parse_hard_negative_output('{"title": "Lava lamps", "document": "A lava lamp is..."}')
    assert out.title == "Lava lamps"


def test_parse_fenced_with_prose():
    raw = 'Here is the document:\n```json\n{"title": "t", "document": "d"}\n```\nHope this helps!'
    assert parse_hard_negative_output(raw).document == "d"


@pytest.mark.parametrize("raw", [
    '{"title": "t"}',
    '{"title": "t", "document": "d"} {"title": "u", "document": "e"}',
    "no json at all",
    "",
    '{"title": "", "document": "d"}',
    '{"title": "t", "document": "d", "criterion": "query_mismatch"}',
])
def test_parse_rejections(raw):
    with pytest.raises(HardNegativeRejected):
        parse_hard_negative_output(raw)


def test_parse_non_strict_accepts_criterion():
    raw = '{"title": "t", "document": "d", "criterion": "query_mismatch", "notes": "x"}'
    assert parse_hard_negative_output(raw, strict=False).criterion == "query_mismatch"
    with pytest.raises(HardNegativeRejected):
        parse_hard_negative_output('{"title": "t", "document": "d", "criterion": "other"}', strict=False)
