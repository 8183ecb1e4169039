"""Prompt templates for every pipeline stage, plus rendering helpers.

Templates ship as versioned text resources under ``tagcraft/templates`` and
can be overridden per-template by dropping a file with the same name into a
templates directory (``{placeholder}`` syntax, ``{{``/``}}`` for literal
braces). Rendering is a pure function of (template, bindings).
"""

from __future__ import annotations

import enum
import string
from functools import lru_cache
from importlib.resources import files
from pathlib import Path
from typing import Iterable, Mapping

from .backends.base import PromptRequest
from .errors import UnboundPlaceholderError

# Characters of one rendered sample line before truncation.
SAMPLE_CHAR_BUDGET = 500


class TemplateId(enum.Enum):
    """One id per pipeline prompt; the value is the resource file stem."""

    TAG_GENERATION = "tag_generation"
    CONTRAST = "contrast"
    INTER_CLASS_ADAPT = "inter_class_adapt"
    MISCLASS_REFINE = "misclass_refine"
    INTRA_CLASS_DIFF = "intra_class_diff"
    CLASSIFY = "classify"


# Generous default completion budgets per stage; classification only needs
# to emit a single category name.
_DEFAULT_MAX_TOKENS = {
    TemplateId.TAG_GENERATION: 512,
    TemplateId.CONTRAST: 2048,
    TemplateId.INTER_CLASS_ADAPT: 512,
    TemplateId.MISCLASS_REFINE: 512,
    TemplateId.INTRA_CLASS_DIFF: 512,
    TemplateId.CLASSIFY: 32,
}


@lru_cache(maxsize=None)
def _template_text(template: TemplateId, templates_dir: str | None) -> str:
    if templates_dir is not None:
        override = Path(templates_dir) / f"{template.value}.txt"
        if override.is_file():
            return override.read_text(encoding="utf-8")
    resource = files("tagcraft").joinpath("templates", f"{template.value}.txt")
    return resource.read_text(encoding="utf-8")


class _Strict(dict):
    def __missing__(self, key: str):
        raise UnboundPlaceholderError(key)


def render(
    template: TemplateId,
    bindings: Mapping[str, str],
    *,
    templates_dir: str | Path | None = None,
    temperature: float = 0.0,
    max_output_tokens: int | None = None,
) -> PromptRequest:
    """Substitute bindings into the template and wrap the result in a
    PromptRequest. Unused bindings are ignored; an unbound placeholder
    raises UnboundPlaceholderError.
    """
    text = _template_text(template, str(templates_dir) if templates_dir else None)
    try:
        rendered = string.Formatter().vformat(text, (), _Strict(bindings))
    except IndexError as err:
        raise UnboundPlaceholderError(str(err)) from err
    return PromptRequest(
        user_text=rendered.strip() + "\n",
        temperature=temperature,
        max_output_tokens=max_output_tokens or _DEFAULT_MAX_TOKENS[template],
    )


def format_sample_block(texts: Iterable[str], char_budget: int = SAMPLE_CHAR_BUDGET) -> str:
    """Render sample documents one per line ("- <text>"), squashing internal
    newlines and truncating each to the character budget. Empty input
    renders as "(none)".
    """
    lines = []
    for text in texts:
        flattened = " ".join(text.split())
        if len(flattened) > char_budget:
            flattened = flattened[:char_budget]
        lines.append(f"- {flattened}")
    return "\n".join(lines) if lines else "(none)"
