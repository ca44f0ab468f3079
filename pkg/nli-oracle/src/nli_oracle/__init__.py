"""Reference entailment oracle server for seqscore semantic clustering."""

from .app import (
    DEFAULT_MODEL,
    ModelLoadError,
    NliClassifier,
    OracleConfig,
    TransformersNliClassifier,
    create_app,
    serve,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "ModelLoadError",
    "NliClassifier",
    "OracleConfig",
    "TransformersNliClassifier",
    "create_app",
    "serve",
    "__version__",
]
