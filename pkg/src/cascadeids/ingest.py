"""Zeek conn.log parsing and the flow preprocessing chain.

Records come out of :func:`parse_conn_log` with missing fields as ``None``;
:func:`impute` fills them, :class:`EncoderVocab` label-encodes the categorical
columns and :func:`encode` produces the numeric :class:`Dataset`.
"""

from __future__ import annotations

import csv
import ipaddress
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, TextIO

import numpy as np

from cascadeids.core import BENIGN, MALICIOUS, Dataset

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"-", "(empty)", ""})
UNKNOWN = "unknown"

CATEGORICAL_FIELDS = ("protocol", "service", "conn_state", "history")
COUNT_FIELDS = (
    "orig_bytes",
    "resp_bytes",
    "missed_bytes",
    "orig_pkts",
    "orig_ip_bytes",
    "resp_pkts",
    "resp_ip_bytes",
)

FEATURE_NAMES = (
    "origin_host_numeric",
    "response_host_binary",
    "origin_port",
    "response_port",
    "protocol",
    "service",
    "conn_state",
    "history",
    "duration",
    *COUNT_FIELDS,
    "year",
    "month",
    "day",
    "hour",
)

# conn.log column name -> FlowRecord attribute
_COLUMN_ALIASES = {
    "id.orig_h": "orig_host",
    "id.resp_h": "resp_host",
    "id.orig_p": "orig_port",
    "id.resp_p": "resp_port",
    "proto": "protocol",
}


class ConnLogFormatError(ValueError):
    """Raised when a conn.log stream cannot be parsed at all."""


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class FlowRecord:
    ts: float | None
    orig_host: str | None
    resp_host: str | None
    orig_port: int | None
    resp_port: int | None
    protocol: str | None
    service: str | None
    conn_state: str | None
    history: str | None
    duration: float | None
    orig_bytes: int | None
    resp_bytes: int | None
    missed_bytes: int | None
    orig_pkts: int | None
    orig_ip_bytes: int | None
    resp_pkts: int | None
    resp_ip_bytes: int | None
    label: int
    detailed_label: str | None = None


@dataclass
class ParseResult:
    records: list[FlowRecord]
    skipped: int = 0
    errors: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def label_code(text: str) -> int:
    return BENIGN if "benign" in text.lower() else MALICIOUS


def _opt(raw: str) -> str | None:
    return None if raw in MISSING_TOKENS else raw


def _opt_port(raw: str) -> int | None:
    v = _opt(raw)
    if v is None:
        return None
    port = int(v)
    if not 0 <= port <= 65535:
        raise ValueError(f"port {port} out of range")
    return port


def _opt_count(raw: str) -> int | None:
    v = _opt(raw)
    if v is None:
        return None
    n = int(v)
    if n < 0:
        raise ValueError(f"negative count {n}")
    return n


def _opt_float(raw: str) -> float | None:
    v = _opt(raw)
    if v is None:
        return None
    x = float(v)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {raw!r}")
    return x


def _split_fields(line: str, separator: str) -> list[str]:
    parts = line.split(separator)
    # IoT-23 labeled logs separate the last three columns with runs of spaces
    if separator == "\t" and len(parts) and "   " in parts[-1]:
        parts = parts[:-1] + [p for p in parts[-1].split() if p]
    return parts


def parse_conn_log(stream: TextIO | Iterable[str]) -> ParseResult:
    """Parse a labeled conn.log stream into flow records.

    Malformed data lines are skipped and counted rather than aborting the
    whole file; a stream without a ``#fields`` header is a format error.
    """
    columns: list[str] | None = None
    separator = "\t"
    result = ParseResult(records=[])
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#separator"):
                token = line.split(maxsplit=1)[1] if " " in line else "\\x09"
                separator = token.encode().decode("unicode_escape")
            elif line.startswith("#fields"):
                columns = _split_fields(line, separator)[1:]
                columns = [c for part in columns for c in part.split()]
            continue
        if columns is None:
            raise ConnLogFormatError(f"line {lineno}: data line before any #fields header")
        values = _split_fields(line, separator)
        if len(values) != len(columns):
            result.skipped += 1
            result.errors.append(f"line {lineno}: expected {len(columns)} fields, got {len(values)}")
            continue
        row = {_COLUMN_ALIASES.get(c, c): v for c, v in zip(columns, values)}
        try:
            record = _record_from_row(row)
        except (KeyError, ValueError) as exc:
            result.skipped += 1
            result.errors.append(f"line {lineno}: {exc}")
            continue
        result.records.append(record)
    if columns is None:
        raise ConnLogFormatError("line 1: missing #fields header")
    if result.skipped:
        log.warning("skipped %d malformed conn.log lines", result.skipped)
    return result


def _record_from_row(row: dict[str, str]) -> FlowRecord:
    if "label" not in row:
        raise KeyError("no label column")
    detailed = row.get("detailed-label", row.get("detailed_label"))
    return FlowRecord(
        ts=_opt_float(row.get("ts", "-")),
        orig_host=_opt(row.get("orig_host", "-")),
        resp_host=_opt(row.get("resp_host", "-")),
        orig_port=_opt_port(row.get("orig_port", "-")),
        resp_port=_opt_port(row.get("resp_port", "-")),
        protocol=_opt(row.get("protocol", "-")),
        service=_opt(row.get("service", "-")),
        conn_state=_opt(row.get("conn_state", "-")),
        history=_opt(row.get("history", "-")),
        duration=_opt_float(row.get("duration", "-")),
        **{name: _opt_count(row.get(name, "-")) for name in COUNT_FIELDS},
        label=label_code(row["label"]),
        detailed_label=None if detailed is None else _opt(detailed),
    )


def read_conn_log(path) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse_conn_log(fh)


def impute(record: FlowRecord) -> FlowRecord:
    """Missing categoricals become "unknown", missing numerics become 0."""
    changes = {}
    for name in CATEGORICAL_FIELDS:
        if getattr(record, name) is None:
            changes[name] = UNKNOWN
    for name in ("ts", "duration"):
        if getattr(record, name) is None:
            changes[name] = 0.0
    for name in ("orig_port", "resp_port", *COUNT_FIELDS):
        if getattr(record, name) is None:
            changes[name] = 0
    for name in ("orig_host", "resp_host"):
        if getattr(record, name) is None:
            changes[name] = "0.0.0.0"
    return replace(record, **changes) if changes else record


def ip_to_number(address: str) -> float:
    """Integer value of an IPv4/IPv6 address (IPv6 values exceed 2**53 and lose precision)."""
    return float(int(ipaddress.ip_address(address.strip())))


class EncoderVocab:
    """Label encoder for the categorical flow fields.

    Codes are assigned in lexicographic order of the categories seen at fit
    time, after the reserved ``"unknown"`` code 0. The mapping is frozen once
    fitted; unseen categories encode as ``"unknown"``.
    """

    def __init__(self, mapping: dict[str, dict[str, int]] | None = None):
        self._mapping = None if mapping is None else {k: dict(v) for k, v in mapping.items()}

    @classmethod
    def fit(cls, records: Iterable[FlowRecord]) -> EncoderVocab:
        seen: dict[str, set[str]] = {name: set() for name in CATEGORICAL_FIELDS}
        for rec in records:
            for name in CATEGORICAL_FIELDS:
                value = getattr(rec, name)
                seen[name].add(UNKNOWN if value is None else value)
        mapping = {}
        for name, values in seen.items():
            ordered = [UNKNOWN] + sorted(values - {UNKNOWN})
            mapping[name] = {v: i for i, v in enumerate(ordered)}
        return cls(mapping)

    @property
    def fitted(self) -> bool:
        return self._mapping is not None

    def code(self, column: str, value: str | None) -> int:
        if self._mapping is None:
            raise RuntimeError("EncoderVocab used before fit")
        table = self._mapping[column]
        return table.get(UNKNOWN if value is None else value, table[UNKNOWN])

    def to_dict(self) -> dict[str, dict[str, int]]:
        if self._mapping is None:
            raise RuntimeError("EncoderVocab used before fit")
        return {k: dict(v) for k, v in self._mapping.items()}

    @classmethod
    def from_dict(cls, data: dict[str, dict[str, int]]) -> EncoderVocab:
        return cls({k: {str(c): int(i) for c, i in v.items()} for k, v in data.items()})

    def __eq__(self, other):
        return isinstance(other, EncoderVocab) and self._mapping == other._mapping


def encode(records, vocab: EncoderVocab, row_ids=None) -> Dataset:
    records = list(records)
    X = np.zeros((len(records), len(FEATURE_NAMES)), dtype=np.float64)
    y = np.zeros(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        rec = impute(rec)
        try:
            orig = ip_to_number(rec.orig_host)
        except ValueError:
            raise EncodingError(f"row {i}: invalid IP address {rec.orig_host!r}") from None
        try:
            resp = ip_to_number(rec.resp_host)
        except ValueError:
            raise EncodingError(f"row {i}: invalid IP address {rec.resp_host!r}") from None
        when = datetime.fromtimestamp(rec.ts, tz=timezone.utc)
        X[i] = (
            orig,
            resp,
            rec.orig_port,
            rec.resp_port,
            *(vocab.code(name, getattr(rec, name)) for name in CATEGORICAL_FIELDS),
            rec.duration,
            *(getattr(rec, name) for name in COUNT_FIELDS),
            when.year,
            when.month,
            when.day,
            when.hour,
        )
        y[i] = rec.label
    return Dataset(X, y, FEATURE_NAMES, row_ids)


@dataclass(frozen=True)
class RobustScaler:
    """Per-column median / IQR scaler; zero IQR is stored as 1."""

    feature_names: tuple[str, ...]
    median: np.ndarray
    iqr: np.ndarray

    @classmethod
    def fit(cls, train: Dataset) -> RobustScaler:
        X = train.features
        if X.shape[0] == 0:
            raise ValueError("cannot fit a scaler on an empty dataset")
        q1, med, q3 = np.quantile(X, [0.25, 0.5, 0.75], axis=0, method="linear")
        iqr = q3 - q1
        iqr = np.where(iqr > 0, iqr, 1.0)
        return cls(tuple(train.feature_names), med, iqr)

    def apply(self, ds: Dataset) -> Dataset:
        if ds.feature_names != self.feature_names:
            raise ValueError("dataset columns do not match the fitted scaler")
        return ds.with_features((ds.features - self.median) / self.iqr)

    def to_dict(self) -> dict:
        return {"feature_names": list(self.feature_names), "median": self.median.tolist(), "iqr": self.iqr.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> RobustScaler:
        return cls(tuple(data["feature_names"]), np.asarray(data["median"], float), np.asarray(data["iqr"], float))


def robust_fit(train: Dataset) -> RobustScaler:
    return RobustScaler.fit(train)


def robust_apply(scaler: RobustScaler | None, ds: Dataset) -> Dataset:
    if scaler is None:
        raise RuntimeError("robust_apply called before robust_fit")
    return scaler.apply(ds)


def write_dataset_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*ds.feature_names, "label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: last CSV column must be 'label'")
        rows = [r for r in reader if r]
    X = np.array([[float(v) for v in r[:-1]] for r in rows], dtype=np.float64).reshape(len(rows), len(header) - 1)
    y = np.array([int(float(r[-1])) for r in rows], dtype=np.int64)
    return Dataset(X, y, tuple(header[:-1]))
