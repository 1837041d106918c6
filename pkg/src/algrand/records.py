"""Result records: JSON Lines files with a CSV summary alongside."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Union

from . import __version__

CSV_FIELDS = ("generator", "family", "index", "orientation", "test", "value", "repetitions", "error")


def fmt_real(v: Any) -> str:
    """17 significant digits for floats; ints and None pass through."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class ResultRecord:
    generator: str
    index: int
    orientation: str
    test: str
    value: Optional[Union[int, float]]
    family: str = "prng"
    detail: dict = field(default_factory=dict)
    error: Optional[str] = None
    suite_version: str = __version__
    manifest_digest: str = ""

    @property
    def key(self) -> tuple[str, int, str, str]:
        return (self.generator, self.index, self.orientation, self.test)

    def to_json(self) -> str:
        return json.dumps({"record": "result", **asdict(self)}, sort_keys=True)

    def csv_row(self) -> list[str]:
        return [
            self.generator,
            self.family,
            str(self.index),
            self.orientation,
            self.test,
            fmt_real(self.value),
            fmt_real(self.detail.get("repetitions")),
            self.error or "",
        ]


@dataclass
class ResultFile:
    header: dict
    records: list[ResultRecord]

    @property
    def tests(self) -> set[str]:
        return {r.test for r in self.records}


def write_results(
    path: Union[str, os.PathLike],
    header: dict,
    records: Iterable[ResultRecord],
    csv_path: Union[str, os.PathLike, None] = None,
) -> int:
    """Write header + records as JSON Lines (and CSV when ``csv_path`` is set)."""
    count = 0
    seen: set = set()
    path = Path(path)
    csv_fh = open(csv_path, "w", newline="") if csv_path else None
    try:
        writer = csv.writer(csv_fh) if csv_fh else None
        if writer:
            writer.writerow(CSV_FIELDS)
        with path.open("w") as fh:
            fh.write(json.dumps({"record": "header", **header}, sort_keys=True) + "\n")
            for rec in records:
                if rec.key in seen:
                    raise ValueError(f"duplicate result record {rec.key}")
                seen.add(rec.key)
                fh.write(rec.to_json() + "\n")
                if writer:
                    writer.writerow(rec.csv_row())
                count += 1
    finally:
        if csv_fh:
            csv_fh.close()
    return count


def iter_records(path: Union[str, os.PathLike]) -> Iterator[dict]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed record") from exc


def read_results(path: Union[str, os.PathLike]) -> ResultFile:
    header: Optional[dict] = None
    records: list[ResultRecord] = []
    for obj in iter_records(path):
        kind = obj.pop("record", None)
        if kind == "header":
            header = obj
        elif kind == "result":
            records.append(ResultRecord(**obj))
        else:
            raise ValueError(f"{path}: unknown record type {kind!r}")
    if header is None:
        raise ValueError(f"{path}: missing header line")
    return ResultFile(header, records)


def read_csv_summary(path: Union[str, os.PathLike]) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
