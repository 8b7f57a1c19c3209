"""
inference backends producing the raw model signals:
label-token log-probabilities (generative path) and token hidden states (embedding path).
"stub" is a deterministic pure function of (seed, query, document); anything else is a
remote server spoken to with JSON over HTTP.
"""

from __future__ import absolute_import

import hashlib
import os
import struct
import threading
import time
import uuid
from collections import namedtuple

import httpx
import numpy as np

from .core import K
from .core import InvalidInputError

ENV_BACKEND_ENDPOINT = "QUPID_BACKEND_ENDPOINT"
STUB_ENDPOINT = "stub"

GEN_LOGPROBS_PATH = "/v1/gen_logprobs"
HIDDEN_STATES_PATH = "/v1/hidden_states"
REQUEST_ID_HEADER = "X-Request-Id"

STUB_N_TOKENS = 8
STUB_D_H = 16
STUB_LOGPROB_SPAN = 4.0

DEFAULT_LABEL_TOKENS = ("<|relevant|>", "<|somewhat_relevant|>", "<|irrelevant|>")


class BackendError(RuntimeError):
    kind = "backend"
    retryable = False


class TransportError(BackendError):
    kind = "transport"
    retryable = True


class ProtocolError(BackendError):
    kind = "protocol"
    retryable = False


class PromptSpec(namedtuple("PromptSpec", ["task_prefix_token", "query_tag", "document_tag"])):
    __slots__ = ()

    def __new__(cls, task_prefix_token="<|task_prefix|>", query_tag="query:", document_tag="document:"):
        return super(PromptSpec, cls).__new__(cls, task_prefix_token, query_tag, document_tag)


def build_prompt(pair, spec=PromptSpec()):
    """
    "<task_prefix> <query_tag> <query> <document_tag> <title\\nbody>"
    :param pair: QueryDocPair
    :param spec: PromptSpec
    :return: prompt text, tokenization is left to the backend
    """
    return " ".join([spec.task_prefix_token, spec.query_tag, pair.query,
                     spec.document_tag, pair.document_segment()])


class GenSignal(namedtuple("GenSignal", ["logprobs"])):
    __slots__ = ()

    def __new__(cls, logprobs):
        try:
            arr = np.asarray(logprobs, dtype=np.float64)
        except (TypeError, ValueError):
            raise ProtocolError("logprobs must be a list of reals")
        if arr.ndim != 1 or len(arr) != K:
            raise ProtocolError("expected {} label logprobs, got shape {}".format(K, arr.shape))
        if not np.all(np.isfinite(arr)):
            raise ProtocolError("logprobs contain non-finite values")
        return super(GenSignal, cls).__new__(cls, tuple(float(x) for x in arr))


class EmbSignal(namedtuple("EmbSignal", ["hidden_states"])):
    """hidden_states: read-only float64 array of shape (n, d_h)"""
    __slots__ = ()

    def __new__(cls, hidden_states):
        if hidden_states is None or len(hidden_states) == 0:
            raise ProtocolError("hidden state sequence is empty")
        try:
            dims = set(len(h) for h in hidden_states)
        except TypeError:
            raise ProtocolError("hidden states must be a sequence of vectors")
        if len(dims) != 1:
            raise ProtocolError("ragged hidden states, dimensions {}".format(sorted(dims)))
        try:
            arr = np.array(hidden_states, dtype=np.float64)
        except (TypeError, ValueError):
            raise ProtocolError("hidden states must be lists of reals")
        if arr.ndim != 2 or arr.shape[1] == 0:
            raise ProtocolError("hidden states must be n vectors of dimension d_h >= 1")
        if not np.all(np.isfinite(arr)):
            raise ProtocolError("hidden states contain non-finite values")
        arr.flags.writeable = False
        return super(EmbSignal, cls).__new__(cls, arr)

    @property
    def n(self):
        return self.hidden_states.shape[0]

    @property
    def d_h(self):
        return self.hidden_states.shape[1]


class BackendConfig(namedtuple("BackendConfig", ["endpoint", "timeout_ms", "max_in_flight", "prompt",
                                                 "seed", "stub_delay_ms", "labels"])):
    __slots__ = ()

    def __new__(cls, endpoint=STUB_ENDPOINT, timeout_ms=5000, max_in_flight=8, prompt=PromptSpec(),
                seed=42, stub_delay_ms=0.0, labels=DEFAULT_LABEL_TOKENS):
        if endpoint != STUB_ENDPOINT and not str(endpoint).startswith(("http://", "https://")):
            raise InvalidInputError("backend endpoint must be 'stub' or an http(s) URL, got {!r}".format(endpoint))
        if not timeout_ms > 0:
            raise InvalidInputError("backend timeout must be > 0 ms, got {}".format(timeout_ms))
        if int(max_in_flight) != max_in_flight or max_in_flight < 1:
            raise InvalidInputError("max_in_flight must be a positive integer, got {}".format(max_in_flight))
        if stub_delay_ms < 0:
            raise InvalidInputError("stub_delay_ms must be >= 0")
        labels = tuple(labels)
        if len(labels) != K:
            raise InvalidInputError("exactly {} label tokens are needed, got {}".format(K, len(labels)))
        return super(BackendConfig, cls).__new__(cls, endpoint, float(timeout_ms), int(max_in_flight),
                                                 prompt, int(seed), float(stub_delay_ms), labels)

    @property
    def is_stub(self):
        return self.endpoint == STUB_ENDPOINT


def backend_config_from_dict(conf, use_env=True):
    """
    build a BackendConfig from the "backend" block of a config file,
    QUPID_BACKEND_ENDPOINT (if set) overrides the endpoint in the file
    """
    conf = dict(conf or {})
    prompt = PromptSpec(**conf.pop("prompt", {}))
    if use_env and os.environ.get(ENV_BACKEND_ENDPOINT):
        conf["endpoint"] = os.environ[ENV_BACKEND_ENDPOINT]
    unknown = set(conf.keys()) - set(BackendConfig._fields)
    if unknown:
        raise InvalidInputError("unknown backend config keys: {}".format(sorted(unknown)))
    return BackendConfig(prompt=prompt, **conf)


def backend_config_to_dict(cfg):
    conf = cfg._asdict()
    conf["prompt"] = cfg.prompt._asdict()
    conf["labels"] = list(cfg.labels)
    return conf


# stub backend ===========================================================
def stub_unit(seed, query, document, slot):
    """
    seeded 64-bit hash of (seed, query bytes, document bytes, slot) mapped to [0, 1]
    """
    qb = query.encode("utf-8")
    db = document.encode("utf-8")
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", seed))
    h.update(struct.pack("<Q", len(qb)))
    h.update(qb)
    h.update(struct.pack("<Q", len(db)))
    h.update(db)
    h.update(struct.pack("<Q", slot))
    return int.from_bytes(h.digest(), "little") / 2.0 ** 64


def stub_head_params(seed, d_h=STUB_D_H):
    """W[k][j] = 2u(seed, "", "", k*d_h + j) - 1, b = 0"""
    w = [[2.0 * stub_unit(seed, "", "", k * d_h + j) - 1.0 for j in range(d_h)] for k in range(K)]
    return w, [0.0] * K


class StubBackend(object):
    """reentrant and lock-free, outputs depend only on (seed, query, document segment)"""

    def __init__(self, cfg):
        self._seed = cfg.seed
        self._delay_s = cfg.stub_delay_ms / 1000.0

    def _wait(self):
        if self._delay_s > 0:
            time.sleep(self._delay_s)

    def gen_signal(self, pair):
        self._wait()
        doc = pair.document_segment()
        return GenSignal([-STUB_LOGPROB_SPAN * stub_unit(self._seed, pair.query, doc, k) for k in range(K)])

    def emb_signal(self, pair):
        self._wait()
        doc = pair.document_segment()
        states = [[2.0 * stub_unit(self._seed, pair.query, doc, K + i * STUB_D_H + j) - 1.0
                   for j in range(STUB_D_H)]
                  for i in range(STUB_N_TOKENS)]
        return EmbSignal(states)

    def close(self):
        pass


# remote backend =========================================================
class HttpBackend(object):
    """
    JSON-over-HTTP client, shareable across threads.
    never more than max_in_flight requests are outstanding at once.
    """

    def __init__(self, cfg, transport=None):
        self._cfg = cfg
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)
        self._client = httpx.Client(base_url=cfg.endpoint,
                                    timeout=cfg.timeout_ms / 1000.0,
                                    limits=httpx.Limits(max_connections=cfg.max_in_flight,
                                                        max_keepalive_connections=cfg.max_in_flight),
                                    transport=transport)

    def _post(self, path, payload):
        request_id = uuid.uuid4().hex
        with self._slots:
            try:
                resp = self._client.post(path, json=payload, headers={REQUEST_ID_HEADER: request_id})
            except httpx.TimeoutException as e:
                raise TransportError("{} timed out after {} ms: {}".format(path, self._cfg.timeout_ms, e))
            except httpx.TransportError as e:
                raise TransportError("{} failed: {}".format(path, e))
            except httpx.RequestError as e:
                # undecodable body, redirect loop and the like
                raise ProtocolError("{} answered unusably: {}: {}".format(path, type(e).__name__, e))
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError("{} answered HTTP {}".format(path, resp.status_code))
        if resp.status_code != 200:
            raise ProtocolError("{} answered HTTP {}".format(path, resp.status_code))
        echoed = resp.headers.get(REQUEST_ID_HEADER)
        if echoed is not None and echoed != request_id:
            raise ProtocolError("correlation id mismatch on {}: sent {}, got {}".format(path, request_id, echoed))
        try:
            body = resp.json()
        except ValueError:
            raise ProtocolError("{} returned a body that is not JSON".format(path))
        if not isinstance(body, dict):
            raise ProtocolError("{} returned {} instead of a JSON object".format(path, type(body).__name__))
        return body

    def gen_signal(self, pair):
        body = self._post(GEN_LOGPROBS_PATH, {"prompt": build_prompt(pair, self._cfg.prompt),
                                              "labels": list(self._cfg.labels)})
        if not isinstance(body.get("logprobs"), list):
            raise ProtocolError("response has no 'logprobs' list")
        return GenSignal(body["logprobs"])

    def emb_signal(self, pair):
        body = self._post(HIDDEN_STATES_PATH, {"prompt": build_prompt(pair, self._cfg.prompt)})
        states = body.get("hidden_states")
        if not isinstance(states, list) or not all(isinstance(h, list) for h in states):
            raise ProtocolError("response has no 'hidden_states' list of lists")
        return EmbSignal(states)

    def close(self):
        self._client.close()


_backends = {}
_backends_lock = threading.Lock()


def get_backend(cfg):
    """one shared backend instance per config"""
    with _backends_lock:
        backend = _backends.get(cfg)
        if backend is None:
            backend = StubBackend(cfg) if cfg.is_stub else HttpBackend(cfg)
            _backends[cfg] = backend
        return backend


def close_backends():
    with _backends_lock:
        for backend in _backends.values():
            backend.close()
        _backends.clear()


def fetch_gen_signal(pair, cfg):
    return get_backend(cfg).gen_signal(pair)


def fetch_emb_signal(pair, cfg):
    return get_backend(cfg).emb_signal(pair)
