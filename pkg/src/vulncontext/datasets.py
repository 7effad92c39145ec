"""Line-delimited file formats: function records, pair manifests, verdicts.

A dataset file carries one JSON object per line with fields ``id``, ``code``,
and optionally ``label`` (vulnerable | benign) and ``language`` (default c).
A pair manifest lists ``pair_id``, ``vulnerable_id``, ``benign_id`` per line,
making the pairing explicit and auditable.  Verdict files are produced by the
analyze step: a leading meta record, then one record per function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetFormatError
from .evaluation import PairRecord
from .graphs import SourceFunction

__all__ = ["VerdictRecord", "load_functions", "load_pairs", "load_verdicts"]


@dataclass(frozen=True)
class VerdictRecord:
    id: str
    label: str | None  # None when the judgment call failed outright
    degraded_paths: tuple[str, ...] = ()
    parse_failure: bool = False
    error: str | None = None


def _read_jsonl(path: str | Path) -> list[dict]:
    records = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise DatasetFormatError(f"{path}:{lineno}: expected an object per line")
        records.append(record)
    return records


def load_functions(path: str | Path) -> list[SourceFunction]:
    functions: list[SourceFunction] = []
    seen: set[str] = set()
    for record in _read_jsonl(path):
        if record.get("record") == "meta":
            continue
        try:
            fn = SourceFunction(
                id=str(record["id"]),
                code=record["code"],
                language=record.get("language", "c"),
                label=record.get("label"),
            )
        except (KeyError, ValueError) as exc:
            raise DatasetFormatError(f"{path}: bad function record: {exc}") from exc
        if fn.id in seen:
            raise DatasetFormatError(f"{path}: duplicate function id {fn.id!r}")
        seen.add(fn.id)
        functions.append(fn)
    if not functions:
        raise DatasetFormatError(f"{path}: no function records")
    return functions


def load_pairs(path: str | Path) -> list[PairRecord]:
    pairs: list[PairRecord] = []
    for record in _read_jsonl(path):
        if record.get("record") == "meta":
            continue
        try:
            pairs.append(
                PairRecord(
                    pair_id=str(record["pair_id"]),
                    vulnerable_id=str(record["vulnerable_id"]),
                    benign_id=str(record["benign_id"]),
                )
            )
        except KeyError as exc:
            raise DatasetFormatError(f"{path}: bad pair record: missing {exc}") from exc
    if not pairs:
        raise DatasetFormatError(f"{path}: no pair records")
    return pairs


def load_verdicts(path: str | Path) -> dict[str, VerdictRecord]:
    verdicts: dict[str, VerdictRecord] = {}
    for record in _read_jsonl(path):
        if record.get("record") == "meta":
            continue
        if record.get("record") not in (None, "verdict"):
            continue
        try:
            verdict = VerdictRecord(
                id=str(record["id"]),
                label=record.get("label"),
                degraded_paths=tuple(record.get("degraded_paths", ())),
                parse_failure=bool(record.get("parse_failure", False)),
                error=record.get("error"),
            )
        except KeyError as exc:
            raise DatasetFormatError(f"{path}: bad verdict record: missing {exc}") from exc
        verdicts[verdict.id] = verdict
    if not verdicts:
        raise DatasetFormatError(f"{path}: no verdict records")
    return verdicts
