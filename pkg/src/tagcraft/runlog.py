"""JSON-lines run log for pipeline events."""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import IO


def prompt_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class RunLog:
    """Appends one JSON record per event:
    {ts, stage, iteration, category, accuracy?, pair?, prompt_sha256?, ok}.
    """

    def __init__(self, handle: IO[str]):
        self._handle = handle

    @classmethod
    def open(cls, path: str | Path) -> "RunLog":
        return cls(Path(path).open("a", encoding="utf-8"))

    def emit(
        self,
        stage: str,
        *,
        iteration: int | None = None,
        category: str | None = None,
        accuracy: float | None = None,
        pair: tuple[str, str] | None = None,
        prompt_hash: str | None = None,
        ok: bool = True,
    ) -> None:
        record = {
            "ts": time.time(),
            "stage": stage,
            "iteration": iteration,
            "category": category,
            "ok": ok,
        }
        if accuracy is not None:
            record["accuracy"] = accuracy
        if pair is not None:
            record["pair"] = list(pair)
        if prompt_hash is not None:
            record["prompt_sha256"] = prompt_hash
        self._handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "RunLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
