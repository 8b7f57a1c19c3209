import json

import numpy as np
import pytest
import torch

from qd_relevance.backend import stub_head_params
from qd_relevance.core import InvalidInputError
from qd_relevance.models import ClassifierHead
from qd_relevance.models import head_from_params
from qd_relevance.models import load_head
from qd_relevance.models import save_head
from qd_relevance.models import stub_head


def test_stub_head_parameters(unit_hash):
    head = stub_head(42)
    assert head.d_h == 16
    assert head.W.shape == (3, 16)
    assert head.W[1][4] == 2.0 * unit_hash(42, "", "", 1 * 16 + 4) - 1.0
    assert list(head.b) == [0.0, 0.0, 0.0]


def test_head_forward_gives_a_distribution():
    w, b = stub_head_params(3, d_h=4)
    head = head_from_params(w, b)
    with torch.no_grad():
        logits, probs = head(torch.tensor([0.1, -0.2, 0.3, 0.0], dtype=torch.float64))
    assert logits.shape == (3,)
    assert float(probs.sum()) == pytest.approx(1.0, abs=1e-12)


def test_head_file(tmp_path):
    path = str(tmp_path / "head.json")
    save_head(stub_head(5), path)
    loaded = load_head(path)
    assert np.array_equal(loaded.W, stub_head(5).W)
    assert np.array_equal(loaded.b, stub_head(5).b)


@pytest.mark.parametrize("params", [
    {"d_h": 2, "K": 2, "W": [[0.0, 0.0], [0.0, 0.0]], "b": [0.0, 0.0]},
    {"d_h": 2, "K": 3, "W": [[0.0, 0.0], [0.0, 0.0], [0.0]], "b": [0.0, 0.0, 0.0]},
    {"d_h": 2, "K": 3, "W": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]},
    {"d_h": 2, "K": 3, "W": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], "b": [0.0, 0.0]},
])
def test_bad_head_files(tmp_path, params):
    path = str(tmp_path / "head.json")
    with open(path, "w") as wf:
        json.dump(params, wf)
    with pytest.raises(InvalidInputError):
        load_head(path)


def test_head_shape_validation():
    with pytest.raises(InvalidInputError):
        ClassifierHead(0)
    with pytest.raises(InvalidInputError):
        ClassifierHead(4, num_classes=2)
    with pytest.raises(InvalidInputError):
        head_from_params([[float("nan")] * 2] * 3, [0.0] * 3)
