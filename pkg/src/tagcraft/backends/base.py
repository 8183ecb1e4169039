"""Backend abstraction: free-text completion plus per-candidate label scoring."""

from __future__ import annotations

import abc
import enum
from dataclasses import dataclass
from typing import Sequence

from ..errors import NoCandidatesError
from ..model import name_key

# Finite stand-in for "impossible" in fallback scoring (scores must stay finite).
NEG_SENTINEL = -1.0e9


class ScoringPath(str, enum.Enum):
    """How a ScoreMap was produced, kept for auditability."""

    LOG_PROB = "logprob"
    FALLBACK_COMPLETION = "fallback_completion"
    MOCK = "mock"


@dataclass(frozen=True)
class PromptRequest:
    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.user_text or not self.user_text.strip():
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ScoreMap:
    """One finite score per requested candidate; higher means more likely.

    ``detail`` records the fallback match method ("exact"/"substring") when
    scoring went through a plain completion.
    """

    scores: dict[str, float]
    path: ScoringPath
    detail: str | None = None


@dataclass(frozen=True)
class BackendCapabilities:
    supports_label_scoring: bool
    model_id: str


class Backend(abc.ABC):
    """An instruction-following LLM client.

    Implementations must be safe to share across concurrent callers; each
    call is independent and stateless.
    """

    @abc.abstractmethod
    def complete(self, request: PromptRequest) -> str:
        """Return the raw completion text for the request; no parsing."""

    @abc.abstractmethod
    def score_labels(self, request: PromptRequest, candidates: Sequence[str]) -> ScoreMap:
        """Return exactly one finite score per candidate name."""

    @abc.abstractmethod
    def capabilities(self) -> BackendCapabilities:
        ...


def check_candidates(candidates: Sequence[str]) -> list[str]:
    """Validate a candidate list: non-empty, names unique case-insensitively."""
    if not candidates:
        raise NoCandidatesError("score_labels requires at least one candidate")
    keys = [name_key(c) for c in candidates]
    if len(set(keys)) != len(keys):
        raise ValueError("candidate names must be unique (case-insensitively)")
    return list(candidates)
