"""Dataset ingestion: manifests, feature matrices, and calendar dates.

A manifest is UTF-8 text with one JSON object per line (keys: ``id``,
``split``, optional ``label``, optional ``date`` as ``YYYY-MM-DD``).
Feature matrices arrive either in the ``FMAT`` binary format or as CSV
with an ``item_id`` first column.  All loaded structures are immutable
in practice and safe to share across threads.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicateItem,
    FormatError,
    LabelOutOfRange,
    NonFiniteFeature,
    ParseError,
)

SPLITS = ("train", "validation", "test")

# Cumulative days before each month, non-leap convention.  Feb 29 lands on
# day 60 and Dec 31 of a leap year on day 365, so every date maps into 1..365.
_CUM_DAYS = (0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334)

_FMAT_MAGIC = b"FMAT"


@dataclass(frozen=True)
class ItemRecord:
    """One dataset item: id, split, optional class label and capture date."""

    item_id: str
    split: str
    label: Optional[int] = None
    capture_date: Optional[datetime.date] = None

    @property
    def day(self) -> Optional[int]:
        """Day-of-year index of the capture date, or None when undated."""
        if self.capture_date is None:
            return None
        return day_of_year(self.capture_date)


@dataclass
class FeatureMatrix:
    """Dense float32 feature rows for a named source, aligned to item ids."""

    source_name: str
    values: np.ndarray          # (rows, cols) float32
    row_ids: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise FormatError("feature values must be a 2-D matrix")
        if self.values.shape[0] != len(self.row_ids):
            raise FormatError(
                f"{self.values.shape[0]} rows but {len(self.row_ids)} row ids"
            )
        if self.values.shape[1] < 1:
            raise FormatError("feature matrix needs at least one column")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteFeature(f"non-finite value in source {self.source_name!r}")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise FormatError("duplicate item id in feature matrix")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def index_of(self) -> dict[str, int]:
        return {item_id: i for i, item_id in enumerate(self.row_ids)}


def day_of_year(date: datetime.date) -> int:
    """Day-of-year in 1..365 under the non-leap convention."""
    return min(_CUM_DAYS[date.month - 1] + date.day, 365)


def date_for_day(day: int, year: int = 2015) -> datetime.date:
    """Inverse of day_of_year for a non-leap year."""
    if not 1 <= day <= 365:
        raise ValueError(f"day {day} outside 1..365")
    month = 12
    while _CUM_DAYS[month - 1] >= day:
        month -= 1
    return datetime.date(year, month, day - _CUM_DAYS[month - 1])


def _parse_date(text: str) -> datetime.date:
    date = datetime.date.fromisoformat(text)
    # fromisoformat also accepts e.g. "2015-3-7" on newer Pythons; pin the
    # zero-padded form so manifests round-trip byte-for-byte.
    if date.isoformat() != text:
        raise ValueError(f"date {text!r} not in YYYY-MM-DD form")
    return date


def parse_manifest(text: str, n_classes: Optional[int] = None) -> list[ItemRecord]:
    """Parse manifest text into records, preserving line order.

    Raises ParseError (with line number) for malformed JSON, fields, or
    dates; DuplicateItem for a repeated id; LabelOutOfRange when a label
    is not below `n_classes` (checked only if `n_classes` is given).
    """
    records: list[ItemRecord] = []
    seen: set[str] = set()
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_number) from exc
        if not isinstance(obj, dict):
            raise ParseError("manifest line is not a JSON object", line_number)

        item_id = obj.get("id")
        if not isinstance(item_id, str) or not item_id:
            raise ParseError("missing or empty 'id'", line_number)
        if item_id in seen:
            raise DuplicateItem(f"duplicate item id {item_id!r} (line {line_number})")
        seen.add(item_id)

        split = obj.get("split")
        if split not in SPLITS:
            raise ParseError(f"invalid split {split!r}", line_number)

        label = obj.get("label")
        if label is not None:
            if isinstance(label, bool) or not isinstance(label, int) or label < 0:
                raise ParseError(f"invalid label {label!r}", line_number)
            if n_classes is not None and label >= n_classes:
                raise LabelOutOfRange(
                    f"label {label} >= class count {n_classes} (line {line_number})"
                )

        date_text = obj.get("date")
        capture_date = None
        if date_text is not None:
            if not isinstance(date_text, str):
                raise ParseError(f"invalid date {date_text!r}", line_number)
            try:
                capture_date = _parse_date(date_text)
            except ValueError as exc:
                raise ParseError(f"invalid date {date_text!r}", line_number) from exc

        records.append(ItemRecord(item_id, split, label, capture_date))
    return records


def serialize_manifest(records: Sequence[ItemRecord]) -> str:
    """Inverse of parse_manifest; omits absent optional fields."""
    lines = []
    for rec in records:
        obj: dict = {"id": rec.item_id, "split": rec.split}
        if rec.label is not None:
            obj["label"] = rec.label
        if rec.capture_date is not None:
            obj["date"] = rec.capture_date.isoformat()
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def load_manifest(path, n_classes: Optional[int] = None) -> list[ItemRecord]:
    with open(path, encoding="utf-8") as handle:
        return parse_manifest(handle.read(), n_classes=n_classes)


def save_manifest(path, records: Sequence[ItemRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_manifest(records))


# --- binary FMAT format -----------------------------------------------------
#
# magic "FMAT" | u32 rows | u32 cols | u32 name length | name bytes
# | rows*cols little-endian f32, row-major | per row: u32 id length, id bytes


def write_feature_matrix(path, matrix: FeatureMatrix) -> None:
    name = matrix.source_name.encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(_FMAT_MAGIC)
        handle.write(struct.pack("<III", matrix.rows, matrix.cols, len(name)))
        handle.write(name)
        handle.write(np.ascontiguousarray(matrix.values, dtype="<f4").tobytes())
        for item_id in matrix.row_ids:
            raw = item_id.encode("utf-8")
            handle.write(struct.pack("<I", len(raw)))
            handle.write(raw)


def _read_exact(handle: io.BufferedReader, count: int, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise FormatError(f"truncated file while reading {what}")
    return data


def load_feature_matrix(path) -> FeatureMatrix:
    """Load a feature matrix from FMAT or CSV, sniffing by magic bytes."""
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic == _FMAT_MAGIC:
            return _load_fmat(handle)
    return _load_feature_csv(path)


def _load_fmat(handle: io.BufferedReader) -> FeatureMatrix:
    rows, cols, name_len = struct.unpack("<III", _read_exact(handle, 12, "header"))
    if cols < 1:
        raise FormatError("feature matrix declares zero columns")
    name = _read_exact(handle, name_len, "source name").decode("utf-8")
    payload = _read_exact(handle, rows * cols * 4, "float payload")
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
    row_ids = []
    for _ in range(rows):
        (id_len,) = struct.unpack("<I", _read_exact(handle, 4, "id length"))
        row_ids.append(_read_exact(handle, id_len, "item id").decode("utf-8"))
    trailing = handle.read(1)
    if trailing:
        raise FormatError("trailing bytes after item ids")
    if not np.all(np.isfinite(values)):
        raise NonFiniteFeature(f"non-finite value in source {name!r}")
    return FeatureMatrix(name, values, row_ids)


def _load_feature_csv(path) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV file") from None
        if not header or header[0] != "item_id":
            raise FormatError("CSV header must start with 'item_id'")
        if len(header) < 2:
            raise FormatError("CSV needs at least one feature column")
        cols = len(header) - 1
        row_ids: list[str] = []
        data: list[list[float]] = []
        for line_number, row in enumerate(reader, start=2):
            if len(row) != cols + 1:
                raise FormatError(f"row {line_number}: expected {cols + 1} fields")
            row_ids.append(row[0])
            try:
                values = [float(field) for field in row[1:]]
            except ValueError as exc:
                raise FormatError(f"row {line_number}: {exc}") from exc
            if not all(np.isfinite(values)):
                raise NonFiniteFeature(f"row {line_number}: non-finite feature")
            data.append(values)
    name = Path(path).stem
    values = np.asarray(data, dtype=np.float32).reshape(len(row_ids), cols)
    return FeatureMatrix(name, values, row_ids)
