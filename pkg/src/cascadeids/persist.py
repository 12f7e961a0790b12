"""Versioned, self-describing JSON model archives.

Layout::

    {
      "format": "cascadeids-archive",
      "version": 1,
      "sha256": "<digest of the canonical payload>",
      "payload": {"kind": ..., "vocab": ..., "scaler": ..., "model": ..., "metadata": ...}
    }

Floats are written with ``repr`` precision, so a loaded model predicts
bit-identically to the one that was saved.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from cascadeids.baselines import LogisticModel
from cascadeids.cascade import CascadeModel
from cascadeids.forests import DecisionTree
from cascadeids.ingest import EncoderVocab, RobustScaler

ARCHIVE_FORMAT = "cascadeids-archive"
ARCHIVE_VERSION = 1

MODEL_KINDS = {
    "deep-forest": CascadeModel,
    "decision-tree": DecisionTree,
    "logreg": LogisticModel,
}


class ArchiveError(ValueError):
    """The file is not a loadable model archive."""


@dataclass
class ModelArchive:
    kind: str
    model: object
    vocab: EncoderVocab | None = None
    scaler: RobustScaler | None = None
    feature_names: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    def predict_proba(self, X):
        return self.model.predict_proba(X)

    def payload(self) -> dict:
        if self.kind not in MODEL_KINDS:
            raise ArchiveError(f"unknown model kind {self.kind!r}")
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "vocab": None if self.vocab is None else self.vocab.to_dict(),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "model": self.model.to_dict(),
            "metadata": self.metadata,
        }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(archive: ModelArchive) -> str:
    payload = archive.payload()
    doc = {"format": ARCHIVE_FORMAT, "version": ARCHIVE_VERSION, "sha256": digest(payload), "payload": payload}
    return canonical_json(doc)


def loads(text: str) -> ModelArchive:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"archive is not valid JSON (truncated or corrupted?): {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != ARCHIVE_FORMAT:
        raise ArchiveError("not a cascadeids model archive")
    version = doc.get("version")
    if version != ARCHIVE_VERSION:
        raise ArchiveError(f"unsupported archive version {version!r}; this build reads version {ARCHIVE_VERSION}")
    payload = doc.get("payload")
    if not isinstance(payload, dict) or digest(payload) != doc.get("sha256"):
        raise ArchiveError("archive checksum mismatch; the file is corrupted")
    kind = payload.get("kind")
    if kind not in MODEL_KINDS:
        raise ArchiveError(f"unknown model kind {kind!r}")
    try:
        model = MODEL_KINDS[kind].from_dict(payload["model"])
        vocab = None if payload["vocab"] is None else EncoderVocab.from_dict(payload["vocab"])
        scaler = None if payload["scaler"] is None else RobustScaler.from_dict(payload["scaler"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ArchiveError(f"malformed {kind} archive: {exc}") from None
    return ModelArchive(kind, model, vocab, scaler, tuple(payload.get("feature_names", ())), payload.get("metadata", {}))


def save_model(archive: ModelArchive, path) -> None:
    atomic_write_text(path, dumps(archive))


def load_model(path) -> ModelArchive:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise ArchiveError(f"{path}: not a text archive") from None
    return loads(text)
