# Copyright 2026 The SparsestMax Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
import numpy as np
import pytest

import sparsestmax as sm


def test_softmax_reference():
    p = sm.softmax(np.array([0.5, 0.3, 0.2]))
    np.testing.assert_allclose(
        p, [0.39069383326981566, 0.31987305633591967, 0.2894331103942646], atol=1e-12)


def test_sparsemax_sums_to_one():
    p = sm.sparsemax(np.array([2.0, 0.1, -1.0]))
    np.testing.assert_allclose(p, [1.0, 0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("r, expected, stage", [
    (0.3, [0.5647883582764712, 0.2870423283447058, 0.14816931337882308], "Circle"),
    (0.6, [0.8109126351029605, 0.18908736489703953, 0.0], "Face"),
])
def test_sparsestmax_k3(r, expected, stage):
    out = sm.sparsestmax(np.array([0.5, 0.3, 0.2]), r)
    np.testing.assert_allclose(out["p"], expected, atol=1e-12)
    assert out["stage"] == stage


def test_vertex_at_circumradius():
    g = sm.geometry(3)
    out = sm.sparsestmax(np.array([0.5, 0.3, 0.2]), g["r_circum"])
    np.testing.assert_array_equal(out["p"], [1.0, 0.0, 0.0])
    assert out["stage"] == "Vertex"


def test_vjp_matches_finite_differences():
    rng = np.random.default_rng(3)
    z = np.array([0.45, 0.35, 0.2])
    g = rng.normal(size=3)
    got = sm.sparsestmax_vjp(z, 0.2, g)
    h = 1e-6
    fd = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd[i] = g @ (sm.sparsestmax(z + e, 0.2)["p"] - sm.sparsestmax(z - e, 0.2)["p"]) / (2 * h)
    np.testing.assert_allclose(got, fd, atol=1e-7)


def test_invalid_input_is_value_error():
    with pytest.raises(ValueError):
        sm.sparsestmax(np.array([0.5, 0.5]), -1.0)


def test_gradcheck_passes():
    assert sm.gradcheck(seed=0, trials=50, k=3)["passed"]


def test_ssn_forward_one_hot_is_instance_norm():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 4, 4))
    y = sm.ssn_forward(x, np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = x.var(axis=(2, 3), keepdims=True)
    np.testing.assert_allclose(y, (x - mu) / np.sqrt(var + 1e-5), atol=1e-10)


def test_default_training_run():
    out = sm.train()
    assert out["all_one_hot"]
    assert out["final_accuracy"] >= 0.9
    assert out["final_loss"] < out["initial_loss"]
