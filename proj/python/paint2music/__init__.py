"""Python bindings for the paint2music toolkit."""

from ._core import (
    EMOTIONS,
    Error,
    IoError,
    ValidationError,
    __version__,
    clap_score,
    fad,
    inception_score,
    kl,
    kl_divergence,
    predict_emotion,
    run_cli,
    sha256_file,
    thd,
)

__all__ = [
    "EMOTIONS",
    "Error",
    "IoError",
    "ValidationError",
    "__version__",
    "clap_score",
    "fad",
    "inception_score",
    "kl",
    "kl_divergence",
    "predict_emotion",
    "run_cli",
    "sha256_file",
    "thd",
]
