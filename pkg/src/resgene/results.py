"""Run result files: one JSON document per (model, trait) evaluation.

Serialization is canonical (sorted keys, fixed separators, trailing
newline) so identical runs produce identical bytes.  Wall-clock timing is
environment noise and therefore stays null unless explicitly requested.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

SCHEMA = "resgene.run/1"


@dataclass
class RunResult:
    """Cross-validated evaluation of one model on one trait."""

    model: str
    trait: str
    config: dict
    fold_pccs: list[float | None]
    mean_pcc: float | None
    undefined_folds: int
    loss_traces: list[list[float]]
    seed: int
    version: str
    wall_clock_seconds: float | None = None
    schema: str = SCHEMA

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "model": self.model,
            "trait": self.trait,
            "config": self.config,
            "fold_pccs": self.fold_pccs,
            "mean_pcc": self.mean_pcc,
            "undefined_folds": self.undefined_folds,
            "loss_traces": self.loss_traces,
            "seed": self.seed,
            "version": self.version,
            "wall_clock_seconds": self.wall_clock_seconds,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ": "), indent=2) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunResult":
        if doc.get("schema") != SCHEMA:
            raise DataError(
                f"unsupported run result schema {doc.get('schema')!r}"
            )
        return cls(
            model=doc["model"],
            trait=doc["trait"],
            config=doc["config"],
            fold_pccs=doc["fold_pccs"],
            mean_pcc=doc["mean_pcc"],
            undefined_folds=doc["undefined_folds"],
            loss_traces=doc["loss_traces"],
            seed=doc["seed"],
            version=doc["version"],
            wall_clock_seconds=doc["wall_clock_seconds"],
        )

    @classmethod
    def load(cls, path) -> "RunResult":
        text = Path(path).read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))
