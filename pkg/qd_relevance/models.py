#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
linear classification head of the embedding scorer: softmax(W . h_agg + b).
weights are trained elsewhere and loaded from a JSON file.
"""

from __future__ import absolute_import

import json

import numpy as np
import torch
import torch.nn as nn

from .core import K
from .core import InvalidInputError
from .backend import STUB_D_H
from .backend import stub_head_params
from .utils.constants_torch import head_dtype
from .utils.constants_torch import device


class ClassifierHead(nn.Module):
    """
    K x d_h linear layer over a mean-pooled hidden state, in float64
    """
    def __init__(self, d_h, num_classes=K):
        super(ClassifierHead, self).__init__()
        if int(d_h) != d_h or d_h < 1:
            raise InvalidInputError("d_h must be a positive integer, got {}".format(d_h))
        if num_classes != K:
            raise InvalidInputError("the head must have K={} classes, got {}".format(K, num_classes))
        self.d_h = int(d_h)
        self.num_classes = num_classes

        self.fc = nn.Linear(self.d_h, self.num_classes).to(device=device, dtype=head_dtype)
        self.softmax = nn.Softmax(dim=-1)

    def forward(self, pooled):
        if pooled.shape[-1] != self.d_h:
            raise InvalidInputError("pooled vector has dimension {}, head expects {}".format(pooled.shape[-1],
                                                                                          self.d_h))
        out = self.fc(pooled)
        return out, self.softmax(out)

    @property
    def W(self):
        return self.fc.weight.detach().cpu().numpy().copy()

    @property
    def b(self):
        return self.fc.bias.detach().cpu().numpy().copy()


def head_from_params(w, b):
    """
    :param w: K rows of d_h reals
    :param b: K reals
    :return: ClassifierHead in eval mode
    """
    try:
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
    except (TypeError, ValueError):
        raise InvalidInputError("W and b must be numeric")
    if w.ndim != 2 or w.shape[0] != K:
        raise InvalidInputError("W must be a {} x d_h matrix, got shape {}".format(K, w.shape))
    if b.shape != (K,):
        raise InvalidInputError("b must have {} entries, got shape {}".format(K, b.shape))
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise InvalidInputError("head parameters contain non-finite values")
    head = ClassifierHead(w.shape[1])
    with torch.no_grad():
        head.fc.weight.copy_(torch.from_numpy(w))
        head.fc.bias.copy_(torch.from_numpy(b))
    head.eval()
    return head


def load_head(head_path):
    """
    read {"d_h": int, "K": 3, "W": [[real x d_h] x 3], "b": [real x 3]}
    """
    with open(head_path, "r") as rf:
        try:
            params = json.load(rf)
        except ValueError as e:
            raise InvalidInputError("head file {} is not valid JSON: {}".format(head_path, e))
    if not isinstance(params, dict):
        raise InvalidInputError("head file {} must hold a JSON object".format(head_path))
    for key in ("d_h", "K", "W", "b"):
        if key not in params:
            raise InvalidInputError("head file {} misses '{}'".format(head_path, key))
    if params["K"] != K:
        raise InvalidInputError("head file {} has K={}, expected {}".format(head_path, params["K"], K))
    if not isinstance(params["W"], list) or any(not isinstance(row, list) or len(row) != params["d_h"]
                                                for row in params["W"]):
        raise InvalidInputError("head file {}: every W row must have d_h={} entries".format(head_path,
                                                                                          params["d_h"]))
    return head_from_params(params["W"], params["b"])


def save_head(head, head_path):
    with open(head_path, "w") as wf:
        json.dump({"d_h": head.d_h, "K": head.num_classes,
                   "W": head.W.tolist(), "b": head.b.tolist()}, wf)


def stub_head(seed, d_h=STUB_D_H):
    w, b = stub_head_params(seed, d_h)
    return head_from_params(w, b)
