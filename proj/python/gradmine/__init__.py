"""Importance-sampled SGD for recurrent models."""

from ._core import (
    DivergenceError,
    GradmineError,
    SamplingDistribution,
    bound_ratio,
    cli,
    gen_seqclass,
    gradient_variance,
    importance_probs,
    lipschitz_distribution,
    mine_importance,
    optimal_distribution,
    svm_lipschitz_bound,
    train,
)

__all__ = [
    "DivergenceError",
    "GradmineError",
    "SamplingDistribution",
    "bound_ratio",
    "cli",
    "gen_seqclass",
    "gradient_variance",
    "importance_probs",
    "lipschitz_distribution",
    "mine_importance",
    "optimal_distribution",
    "svm_lipschitz_bound",
    "train",
]
