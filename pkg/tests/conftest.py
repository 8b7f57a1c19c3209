from __future__ import absolute_import

import hashlib
import struct

import numpy as np
import pytest

from qd_relevance.backend import ENV_BACKEND_ENDPOINT
from qd_relevance.backend import BackendConfig
from qd_relevance.backend import close_backends
from qd_relevance.config import ServiceConfig
from qd_relevance.config import build_scoring_config
from qd_relevance.core import SOURCES
from qd_relevance.core import QueryDocPair
from qd_relevance.dataset import AnnotationRecord
from qd_relevance.dataset import write_corpus

WORDS = ["river", "museum", "battery", "recipe", "tax", "guitar", "orbit", "vaccine", "bridge", "coffee",
         "election", "garden", "marathon", "volcano", "piano", "satellite"]


@pytest.fixture(autouse=True)
def _isolated_backends(monkeypatch):
    monkeypatch.delenv(ENV_BACKEND_ENDPOINT, raising=False)
    yield
    close_backends()


@pytest.fixture
def unit_hash():
    """independent rendition of the stub hash: (seed, query, document, slot) -> [0, 1)"""
    def _u(seed, query, document, slot):
        qb, db = query.encode("utf-8"), document.encode("utf-8")
        payload = (struct.pack("<q", seed) + struct.pack("<Q", len(qb)) + qb +
                   struct.pack("<Q", len(db)) + db + struct.pack("<Q", slot))
        return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little") / 2.0 ** 64
    return _u


@pytest.fixture
def stub_cfg():
    return BackendConfig(seed=42)


@pytest.fixture
def scoring(stub_cfg):
    return build_scoring_config(ServiceConfig(backend=stub_cfg))


@pytest.fixture
def pairs():
    return [QueryDocPair("query {}".format(i % 7),
                         "document number {} about topic {}".format(i, i % 5),
                         "title {}".format(i) if i % 3 == 0 else None,
                         pair_id="p{}".format(i))
            for i in range(100)]


def _votes_for(rng, label):
    if label == "split":
        return ["R", "SR", "I"], ["R", "SR", "I"][rng.randint(3)]
    other = ["R", "SR", "I", "NE"][rng.randint(4)]
    votes = [label, label, other]
    rng.shuffle(votes)
    return votes, None


@pytest.fixture
def make_corpus(tmp_path):
    """
    write a random annotated corpus and return (path, records); every source and
    both binary classes are present once n >= 16
    """
    def _make(n=40, seed=0, name="corpus.jsonl", ne_every=0):
        rng = np.random.RandomState(seed)
        records = []
        for i in range(n):
            if ne_every and i % ne_every == ne_every - 1:
                label = "NE"
            else:
                label = ["R", "I", "SR", "I", "split"][i % 5]
            votes, adjudication = _votes_for(rng, label)
            words = rng.choice(WORDS, size=5)
            pair = QueryDocPair("{} {}".format(WORDS[i % 4], WORDS[4 + i % 3]),
                                " ".join(words),
                                "about {}".format(words[0]) if i % 2 else None,
                                "r{:04d}".format(i),
                                SOURCES[i % len(SOURCES)])
            records.append(AnnotationRecord(pair, votes, adjudication))
        path = str(tmp_path / name)
        write_corpus(records, path)
        return path, records
    return _make
