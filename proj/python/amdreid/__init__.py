"""Attribute-guided metric distillation for person re-identification.

Thin wrapper over the C++ core: low-level numeric operations work on numpy
arrays, pipeline commands mirror the ``amd`` CLI subcommands and return
parsed report dicts.
"""

import json as _json

from ._core import (  # noqa: F401
    AmdConfigError,
    AmdDataError,
    AmdStateError,
    RunConfig,
    avg_attention,
    conv2d,
    elementwise_mask,
    euclidean_distance,
    gen_data,
    generalized_mean_pool,
    l2_normalize_and_distance,
    lambda_bound,
    metric_distillation_loss,
    pairwise_xor,
    pepu,
    train_interpreter,
    train_target,
    warmup_lr,
)
from ._core import evaluate as _evaluate
from ._core import explain as _explain
from ._core import total_loss as _total_loss


def total_loss(d, components, a_ij, alpha=10.0, beta=50.0, upsilon=0.5):
    """Loss breakdown for one pair as a dict (L_d, L_p1, L_p2, total, ...)."""
    return _json.loads(_total_loss(d, components, a_ij, alpha, beta, upsilon))


def explain(config, query_record, gallery_record):
    """Pairwise explanation report as a dict; also written under out_dir."""
    return _json.loads(_explain(config, query_record, gallery_record))


def evaluate(config, with_reweight=False):
    """Full metrics report as a dict; also written under out_dir."""
    return _json.loads(_evaluate(config, with_reweight))


def config(**kwargs):
    """RunConfig from keyword arguments."""
    cfg = RunConfig()
    for key, value in kwargs.items():
        if not hasattr(cfg, key):
            raise AttributeError(f"unknown config key: {key}")
        setattr(cfg, key, value)
    return cfg


__all__ = [
    "AmdConfigError",
    "AmdDataError",
    "AmdStateError",
    "RunConfig",
    "avg_attention",
    "config",
    "conv2d",
    "elementwise_mask",
    "euclidean_distance",
    "evaluate",
    "explain",
    "gen_data",
    "generalized_mean_pool",
    "l2_normalize_and_distance",
    "lambda_bound",
    "metric_distillation_loss",
    "pairwise_xor",
    "pepu",
    "total_loss",
    "train_interpreter",
    "train_target",
    "warmup_lr",
]
