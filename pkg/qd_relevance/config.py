"""
resolved runtime configuration: JSON config file < QUPID_BACKEND_ENDPOINT < command-line flags
"""

from __future__ import absolute_import

from collections import namedtuple

from .core import DEFAULT_LABEL_WEIGHTS
from .core import InvalidInputError
from .core import LabelWeights
from .backend import BackendConfig
from .backend import backend_config_from_dict
from .backend import backend_config_to_dict
from .models import load_head
from .models import stub_head
from .scoring import DEFAULT_TEMPERATURE
from .scoring import EnsembleWeights
from .scoring import ScoringConfig
from .scoring import Temperature
from .utils.json_formater import load_json

DEFAULT_LISTEN = "127.0.0.1:8000"

_CONFIG_KEYS = ("listen", "backend", "gen_endpoints", "head_paths", "weights", "label_weights",
                "temperature", "snippet_thresholds")


class SnippetThresholds(namedtuple("SnippetThresholds", ["doc_high", "snip_low"])):
    __slots__ = ()

    def __new__(cls, doc_high=0.6, snip_low=0.4):
        doc_high, snip_low = float(doc_high), float(snip_low)
        if not (0.0 <= snip_low <= 1.0 and 0.0 <= doc_high <= 1.0):
            raise InvalidInputError("snippet thresholds must lie in [0, 1]")
        if not doc_high > snip_low:
            raise InvalidInputError("doc_high ({}) must be greater than snip_low ({})".format(doc_high, snip_low))
        return super(SnippetThresholds, cls).__new__(cls, doc_high, snip_low)


DEFAULT_SNIPPET_THRESHOLDS = SnippetThresholds()


class ServiceConfig(namedtuple("ServiceConfig", ["listen", "backend", "gen_endpoints", "head_paths", "weights",
                                                 "label_weights", "temperature", "snippet_thresholds"])):
    """
    gen_endpoints: extra generative backends, each a BackendConfig; empty means the main backend
    head_paths: classifier-head files; empty means the stub head, which needs the stub backend
    """
    __slots__ = ()

    def __new__(cls, listen=DEFAULT_LISTEN, backend=BackendConfig(), gen_endpoints=(), head_paths=(),
                weights=EnsembleWeights(), label_weights=DEFAULT_LABEL_WEIGHTS, temperature=DEFAULT_TEMPERATURE,
                snippet_thresholds=DEFAULT_SNIPPET_THRESHOLDS):
        host, _, port = str(listen).rpartition(":")
        if host == "" or not port.isdigit():
            raise InvalidInputError("listen must be host:port, got {!r}".format(listen))
        return super(ServiceConfig, cls).__new__(cls, str(listen), backend, tuple(gen_endpoints), tuple(head_paths),
                                                 weights, label_weights, temperature, snippet_thresholds)

    @property
    def host(self):
        return self.listen.rpartition(":")[0]

    @property
    def port(self):
        return int(self.listen.rpartition(":")[2])


def _gen_backend(entry, base):
    """a gen_endpoints entry is a URL / "stub", or a partial backend block merged onto the main one"""
    conf = backend_config_to_dict(base)
    if isinstance(entry, dict):
        conf.update(entry)
    else:
        conf["endpoint"] = entry
    return backend_config_from_dict(conf, use_env=False)


def service_config_from_dict(conf, use_env=True):
    conf = dict(conf or {})
    unknown = set(conf.keys()) - set(_CONFIG_KEYS)
    if unknown:
        raise InvalidInputError("unknown config keys: {}".format(sorted(unknown)))
    backend = backend_config_from_dict(conf.get("backend", {}), use_env=use_env)
    weights = conf.get("weights", {})
    if not isinstance(weights, dict):
        raise InvalidInputError("weights must be an object {\"w_gen\", \"w_emb\"}")
    if "w_gen" in weights and "w_emb" not in weights:
        weights = {"w_gen": weights["w_gen"], "w_emb": 1.0 - float(weights["w_gen"])}
    thresholds = conf.get("snippet_thresholds", {})
    if not isinstance(thresholds, dict):
        raise InvalidInputError("snippet_thresholds must be an object {\"doc_high\", \"snip_low\"}")
    try:
        return ServiceConfig(listen=conf.get("listen", DEFAULT_LISTEN),
                             backend=backend,
                             gen_endpoints=[_gen_backend(e, backend) for e in conf.get("gen_endpoints", [])],
                             head_paths=conf.get("head_paths", []),
                             weights=EnsembleWeights(**weights),
                             label_weights=LabelWeights(conf.get("label_weights", DEFAULT_LABEL_WEIGHTS.y)),
                             temperature=Temperature(conf.get("temperature", DEFAULT_TEMPERATURE.t)),
                             snippet_thresholds=SnippetThresholds(**thresholds))
    except TypeError as e:
        raise InvalidInputError("malformed config: {}".format(e))


def service_config_to_dict(scfg):
    return {"listen": scfg.listen,
            "backend": backend_config_to_dict(scfg.backend),
            "gen_endpoints": [backend_config_to_dict(g) for g in scfg.gen_endpoints],
            "head_paths": list(scfg.head_paths),
            "weights": scfg.weights._asdict(),
            "label_weights": list(scfg.label_weights.y),
            "temperature": scfg.temperature.t,
            "snippet_thresholds": scfg.snippet_thresholds._asdict()}


def load_service_config(config_path=None, backend=None, seed=None, overrides=None):
    """
    :param config_path: JSON config file, or None for the defaults
    :param backend: --backend, wins over the environment and the file
    :param seed: --seed
    :param overrides: other top-level keys set on the command line
    :return: ServiceConfig
    """
    conf = load_json(config_path) if config_path is not None else {}
    if not isinstance(conf, dict):
        raise InvalidInputError("config file {} must hold a JSON object".format(config_path))
    conf = dict(conf)
    conf.update(dict((k, v) for k, v in (overrides or {}).items() if v is not None))
    block = dict(conf.get("backend", {}))
    use_env = True
    if backend is not None:
        block["endpoint"] = backend
        use_env = False
    if seed is not None:
        block["seed"] = seed
    conf["backend"] = block
    return service_config_from_dict(conf, use_env=use_env)


def build_scoring_config(scfg, mode="ensemble"):
    """
    load the heads and expand the generative instances of a ServiceConfig
    :return: ScoringConfig
    """
    if scfg.head_paths:
        heads = [load_head(p) for p in scfg.head_paths]
    elif scfg.backend.is_stub:
        heads = [stub_head(scfg.backend.seed)]
    elif mode == "gen":
        heads = []
    else:
        raise InvalidInputError("a classifier-head file is required with a remote backend")
    return ScoringConfig(scfg.backend, heads,
                         gen_backends=scfg.gen_endpoints or None,
                         label_weights=scfg.label_weights,
                         temperature=scfg.temperature,
                         weights=scfg.weights,
                         mode=mode)
