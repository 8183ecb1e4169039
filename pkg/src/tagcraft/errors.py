"""Exception hierarchy shared across the package.

Precondition violations on plain arguments raise ``ValueError`` directly;
the classes below cover contract-level failures callers may want to
distinguish (I/O, schema, backend transport, parsing, taxonomy identity).
"""

from __future__ import annotations


class TagcraftError(Exception):
    """Base class for all package-specific errors."""


class EmptyNameError(TagcraftError, ValueError):
    """A category name is empty after normalization."""


class FileIOError(TagcraftError):
    """A file could not be read or written."""


class SchemaError(TagcraftError):
    """A persisted file does not match its expected schema."""


class BackendError(TagcraftError):
    """Base class for LLM backend failures."""


class TransportError(BackendError):
    """Network-level failure or server error; retryable."""


class RateLimitedError(BackendError):
    """HTTP 429; retryable with backoff."""


class BackendRejectedError(BackendError):
    """Non-retryable 4xx rejection from the backend."""


class NoCandidatesError(BackendError, ValueError):
    """score_labels was called with an empty candidate list."""


class FallbackParseError(BackendError):
    """Completion-based label scoring matched no candidate (or several)."""


class UnboundPlaceholderError(TagcraftError, KeyError):
    """A prompt template placeholder was left unbound."""

    def __init__(self, placeholder: str):
        super().__init__(placeholder)
        self.placeholder = placeholder

    def __str__(self) -> str:
        return f"unbound template placeholder: {self.placeholder!r}"


class DescriptorParseError(TagcraftError):
    """No usable descriptor JSON could be extracted from a completion."""


class ContrastDroppedAllError(TagcraftError):
    """A contrast reply matched none of the existing category names."""


class NoDocumentsError(TagcraftError, ValueError):
    """An operation that needs documents received none."""


class UnknownGoldLabelError(TagcraftError):
    """A validation document's gold label is not a taxonomy category."""

    def __init__(self, document_id: str, label: str | None = None):
        super().__init__(document_id, label)
        self.document_id = document_id
        self.label = label

    def __str__(self) -> str:
        return f"document {self.document_id!r} has unknown gold label {self.label!r}"


class MissingSamplesError(TagcraftError):
    """A validation outcome lacks the samples needed for pair adaptation."""


class DuplicateNameError(TagcraftError):
    """A category with this name (case-insensitively) already exists."""


class UnknownCategoryError(TagcraftError):
    """The named category does not exist in the taxonomy."""


class EmptyTaxonomyError(TagcraftError):
    """Classification was requested against a taxonomy with no categories."""


class PromptBudgetError(TagcraftError):
    """A classification prompt exceeded the configured character budget.

    Descriptions are never truncated for classification; the operation
    fails loudly instead.
    """


class ClassificationError(TagcraftError):
    """A document could not be classified."""

    def __init__(self, document_id: str, message: str):
        super().__init__(document_id, message)
        self.document_id = document_id
        self.message = message

    def __str__(self) -> str:
        return f"classification failed for document {self.document_id!r}: {self.message}"


class MalformedRowError(TagcraftError):
    """A dataset CSV row could not be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(line, message)
        self.line = line
        self.message = message

    def __str__(self) -> str:
        return f"malformed row at line {self.line}: {self.message}"


class InsufficientDocsError(TagcraftError):
    """A class does not have enough documents for the requested split."""

    def __init__(self, label: str, needed: int, available: int):
        super().__init__(label, needed, available)
        self.label = label
        self.needed = needed
        self.available = available

    def __str__(self) -> str:
        return (
            f"class {self.label!r} needs {self.needed} documents "
            f"but only {self.available} are available"
        )


class RefinementAbortedError(TagcraftError):
    """The refinement loop failed partway; partial iteration records are kept.

    The underlying stage error is available as ``__cause__``.
    """

    def __init__(self, message: str, iterations: list):
        super().__init__(message)
        self.iterations = iterations
