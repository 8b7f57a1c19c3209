"""
for parsing and writing line-based JSON files, and for turning results into JSON records
"""

from __future__ import absolute_import

import json


class JsonLineError(ValueError):
    def __init__(self, lineno, message):
        super(JsonLineError, self).__init__("line {}: {}".format(lineno, message))
        self.lineno = lineno


def iter_jsonl(filepath):
    """
    :param filepath:
    :return: (1-based line number, parsed object) for every non-blank line
    """
    with open(filepath, "rb") as rf:
        for lineno, line in enumerate(rf, 1):
            if line.strip() == b"":
                continue
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as e:
                raise JsonLineError(lineno, "not valid UTF-8 ({})".format(e))
            try:
                yield lineno, json.loads(line)
            except ValueError as e:
                raise JsonLineError(lineno, "not valid JSON ({})".format(e))


def dumps_record(record):
    # sorted keys, no NaN: identical inputs give byte-identical lines
    return json.dumps(record, sort_keys=True, ensure_ascii=False, allow_nan=False)


def write_jsonl(records, filepath):
    with open(filepath, "w", encoding="utf-8") as wf:
        for record in records:
            wf.write(dumps_record(record) + "\n")


def write_json(obj, filepath=None):
    """write a report to filepath, or return its text when filepath is None"""
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    if filepath is None:
        return text
    with open(filepath, "w", encoding="utf-8") as wf:
        wf.write(text + "\n")
    return text


def load_json(filepath):
    with open(filepath, "r", encoding="utf-8") as rf:
        try:
            return json.load(rf)
        except ValueError as e:
            raise ValueError("{} is not valid JSON: {}".format(filepath, e))


def _opt(x):
    return None if x is None else float(x)


def pair_to_dict(pair):
    return {"pair_id": pair.pair_id, "query": pair.query, "title": pair.doc_title,
            "document": pair.document, "source": pair.source}


def scored_pair_to_dict(sp):
    return {"pair_id": sp.pair.pair_id,
            "mode": sp.mode,
            "s_gen": _opt(sp.s_gen),
            "s_emb": _opt(sp.s_emb),
            "s_final": _opt(sp.s_final),
            "gold": None if sp.gold is None else sp.gold.value}


def error_slot(pair_id, error):
    """the in-place record of a failed batch item"""
    return {"pair_id": pair_id,
            "error": {"kind": getattr(error, "kind", "invalid_input"),
                      "message": str(error),
                      "retryable": bool(getattr(error, "retryable", False))}}
