"""Moderate positive mining with a regularized Mahalanobis metric."""

from ._core import (
    __version__,
    cmc_from_distances,
    command,
    contrastive_loss,
    distance,
    generate_synthetic,
    metric_matrix,
    mine_distances,
    mine_hardest_negative,
    mine_moderate_positive,
    regularizer,
    regularizer_grad,
    render_config,
    run_ablation,
    run_experiment,
    spectrum,
)

__all__ = [
    "cmc_from_distances",
    "command",
    "contrastive_loss",
    "distance",
    "generate_synthetic",
    "metric_matrix",
    "mine_distances",
    "mine_hardest_negative",
    "mine_moderate_positive",
    "regularizer",
    "regularizer_grad",
    "render_config",
    "run_ablation",
    "run_experiment",
    "spectrum",
]
