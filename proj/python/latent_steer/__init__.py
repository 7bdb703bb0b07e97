# Copyright 2026 The latent-steer Authors. All Rights Reserved.
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

"""Attribute steering over the analytic toy generator."""

from ._core import (
    ATTRIBUTE_NAMES,
    LATENT_DIM,
    NUM_ATTRIBUTES,
    ConfigError,
    DimensionError,
    PreconditionError,
    Steering,
    clip_delta,
    default_config,
    disc_loss,
    discriminate,
    generate,
    identity_similarity,
    invert,
    oracle_attributes,
    oracle_direction,
    reg_loss,
    regress,
    run_cli,
    sample_epsilon,
    total_loss,
    train,
)

__all__ = [
    "ATTRIBUTE_NAMES",
    "LATENT_DIM",
    "NUM_ATTRIBUTES",
    "ConfigError",
    "DimensionError",
    "PreconditionError",
    "Steering",
    "clip_delta",
    "default_config",
    "disc_loss",
    "discriminate",
    "generate",
    "identity_similarity",
    "invert",
    "oracle_attributes",
    "oracle_direction",
    "reg_loss",
    "regress",
    "run_cli",
    "sample_epsilon",
    "total_loss",
    "train",
]
