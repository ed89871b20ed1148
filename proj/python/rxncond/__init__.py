#
# Project rxncond
# SPDX-License-Identifier: Apache-2.0
#
"""Reaction condition recommendation with graph neural networks."""

from ._core import (
    Dictionary,
    Error,
    Model,
    ParseError,
    aer,
    build_dictionary,
    categorical_accuracy,
    featurize,
    load_checkpoint,
    parse_smiles,
    render_svg,
    split_dataset,
    train,
)

__all__ = [
    "Dictionary",
    "Error",
    "Model",
    "ParseError",
    "aer",
    "build_dictionary",
    "categorical_accuracy",
    "featurize",
    "load_checkpoint",
    "parse_smiles",
    "render_svg",
    "split_dataset",
    "train",
]
