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
"""SparsestMax projections and sparse switchable normalization."""

from sparsestmax._sparsestmax import (
    Error,
    InvalidInput,
    InvalidState,
    NotConverged,
    TrainingFailed,
    argmax_onehot,
    geometry,
    gradcheck,
    schedule_radius,
    softmax,
    sparsemax,
    sparsemax_jacobian,
    sparsestmax,
    sparsestmax_vjp,
    ssn_forward,
    train,
)

__all__ = [
    "Error",
    "InvalidInput",
    "InvalidState",
    "NotConverged",
    "TrainingFailed",
    "argmax_onehot",
    "geometry",
    "gradcheck",
    "schedule_radius",
    "softmax",
    "sparsemax",
    "sparsemax_jacobian",
    "sparsestmax",
    "sparsestmax_vjp",
    "ssn_forward",
    "train",
]
