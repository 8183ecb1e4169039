"""LLM backends: the HTTP client and the deterministic offline mock."""

from .base import (
    NEG_SENTINEL,
    Backend,
    BackendCapabilities,
    PromptRequest,
    ScoreMap,
    ScoringPath,
)
from .http import HttpBackend
from .mock import MockBackend

__all__ = [
    "NEG_SENTINEL",
    "Backend",
    "BackendCapabilities",
    "HttpBackend",
    "MockBackend",
    "PromptRequest",
    "ScoreMap",
    "ScoringPath",
]
