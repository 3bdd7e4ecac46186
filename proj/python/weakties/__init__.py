"""Collaboration-network diversity pipeline.

Thin wrapper over the native extension: event ingestion, interaction
networks, walk-based embeddings, diversity metrics, PCA, and fixed-effects
regression, plus a seeded synthetic-corpus generator for end-to-end checks.
"""

from ._core import (
    ConfigError,
    DataError,
    NumericError,
    __version__,
    generate_corpus,
    ols,
    pairwise_distinctness,
    pca,
    run_pipeline,
    train_embeddings,
    triangle_census,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "__version__",
    "generate_corpus",
    "ols",
    "pairwise_distinctness",
    "pca",
    "run_pipeline",
    "train_embeddings",
    "triangle_census",
]
