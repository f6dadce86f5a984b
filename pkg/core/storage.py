"""
On-disk formats.

- ERPB dataset: ``manifest.json`` + ``trials.bin`` (little-endian float32,
  one [channels x samples] record per trial, channel-major, in manifest order)
- Raw recording: ``recording.json`` + ``signal.bin`` (same sample encoding)
- Blob: magic, version, JSON header and a float32 payload; used for
  feature matrices and model checkpoints
- Results and split plans: JSON
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .exceptions import CorruptionError, StorageError, VersionError
from .recording import EventMarker, Recording, TrialSet

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
SAMPLE_DTYPE = np.dtype("<f4")
MANIFEST_NAME = "manifest.json"
TRIALS_NAME = "trials.bin"
RECORDING_NAME = "recording.json"
SIGNAL_NAME = "signal.bin"

BLOB_MAGIC = b"ERPBBLOB"
BLOB_VERSION = 1
_BLOB_PREFIX = struct.Struct("<8sIQ")


def expected_data_size(n_trials: int, n_channels: int, n_samples: int) -> int:
    """Byte size of ``trials.bin`` for the given dataset shape."""
    return int(n_trials) * int(n_channels) * int(n_samples) * SAMPLE_DTYPE.itemsize


def _write_json(path: Path, data: Any) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
    except OSError as e:
        raise StorageError(f"Cannot write {path}: {e}") from e


def _read_json(path: Path) -> Any:
    if not path.exists():
        raise StorageError(f"File not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise StorageError(f"Malformed JSON in {path}: {e}") from e


# ---------------------------------------------------------------------------
# ERPB datasets
# ---------------------------------------------------------------------------

@dataclass
class ErpbManifest:
    """Description of an ERPB data file."""
    dataset_name: str
    fs: float
    channel_labels: List[str]
    class_names: List[str]
    n_samples: int
    trials: List[Dict[str, Any]] = field(default_factory=list)
    format_version: int = FORMAT_VERSION
    processing: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_channels(self) -> int:
        return len(self.channel_labels)

    @property
    def record_size(self) -> int:
        return expected_data_size(1, self.n_channels, self.n_samples)

    @property
    def data_size(self) -> int:
        return self.record_size * len(self.trials)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": self.format_version,
            "dataset_name": self.dataset_name,
            "fs": self.fs,
            "channel_labels": list(self.channel_labels),
            "class_names": list(self.class_names),
            "n_channels": self.n_channels,
            "n_samples": self.n_samples,
            "processing": dict(self.processing),
            "trials": list(self.trials),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ErpbManifest":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionError(f"Unsupported ERPB format_version {version}", version=version)
        return cls(
            dataset_name=data["dataset_name"],
            fs=float(data["fs"]),
            channel_labels=list(data["channel_labels"]),
            class_names=list(data["class_names"]),
            n_samples=int(data["n_samples"]),
            trials=list(data["trials"]),
            format_version=version,
            processing=dict(data.get("processing", {})),
        )

    def check(self) -> None:
        """Validate trial offsets and class indices."""
        record = self.record_size
        previous = -1
        for i, trial in enumerate(self.trials):
            offset = int(trial["byte_offset"])
            if offset <= previous or (record and offset % record):
                raise CorruptionError(f"Trial {i} has misaligned or non-increasing byte_offset {offset}")
            if record and offset // record >= len(self.trials):
                raise CorruptionError(f"Trial {i} byte_offset {offset} lies beyond the described data")
            if not 0 <= int(trial["class_index"]) < len(self.class_names):
                raise CorruptionError(f"Trial {i} has class_index {trial['class_index']} outside class_names")
            previous = offset


def write_erpb(ts: TrialSet, directory: str, dataset_name: Optional[str] = None) -> ErpbManifest:
    """
    Write a TrialSet as an ERPB dataset.

    Args:
        ts: Trials to store
        directory: Output directory (created if needed)
        dataset_name: Name recorded in the manifest

    Returns:
        The written manifest
    """
    out = Path(directory)
    channel_labels = ts.channel_labels or [f"ch{i}" for i in range(ts.n_channels)]
    manifest = ErpbManifest(
        dataset_name=dataset_name or ts.meta.get("dataset_name") or out.name,
        fs=float(ts.fs),
        channel_labels=list(channel_labels),
        class_names=list(ts.class_names),
        n_samples=ts.n_samples,
        processing={
            k: v for k, v in ts.meta.items()
            if k != "dataset_name" and isinstance(v, (int, float, str))
        },
    )
    record = manifest.record_size
    manifest.trials = [
        {"subject_id": sid, "class_index": int(label), "byte_offset": i * record}
        for i, (sid, label) in enumerate(zip(ts.subject_ids, ts.labels))
    ]

    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / TRIALS_NAME, "wb") as f:
            f.write(np.ascontiguousarray(ts.trials, dtype=SAMPLE_DTYPE).tobytes())
    except OSError as e:
        raise StorageError(f"Cannot write ERPB data to {out}: {e}") from e
    _write_json(out / MANIFEST_NAME, manifest.to_dict())

    logger.info(f"Wrote ERPB dataset '{manifest.dataset_name}' ({ts.n_trials} trials) to {out}")
    return manifest


def read_erpb_manifest(directory: str) -> ErpbManifest:
    manifest = ErpbManifest.from_dict(_read_json(Path(directory) / MANIFEST_NAME))
    manifest.check()
    return manifest


def read_erpb(directory: str) -> TrialSet:
    """
    Read an ERPB dataset.

    Raises:
        VersionError: unknown format_version
        CorruptionError: data file size differs from the manifest
    """
    path = Path(directory)
    manifest = read_erpb_manifest(directory)
    data_path = path / TRIALS_NAME
    if not data_path.exists():
        raise StorageError(f"File not found: {data_path}")

    expected = manifest.data_size
    actual = data_path.stat().st_size
    if actual != expected:
        raise CorruptionError(
            f"{data_path} holds {actual} bytes, manifest describes {expected}",
            expected=expected,
            actual=actual,
        )

    raw = np.fromfile(data_path, dtype=SAMPLE_DTYPE)
    n = len(manifest.trials)
    records = raw.reshape(n, manifest.n_channels, manifest.n_samples) if n else \
        np.zeros((0, manifest.n_channels, manifest.n_samples), dtype=SAMPLE_DTYPE)
    if n and manifest.record_size:
        order = [int(t["byte_offset"]) // manifest.record_size for t in manifest.trials]
        records = records[order]

    logger.debug(f"Read ERPB dataset '{manifest.dataset_name}' ({n} trials) from {path}")
    return TrialSet(
        trials=records.astype(np.float64),
        labels=np.array([int(t["class_index"]) for t in manifest.trials], dtype=np.int64),
        subject_ids=[str(t["subject_id"]) for t in manifest.trials],
        fs=manifest.fs,
        class_names=list(manifest.class_names),
        channel_labels=list(manifest.channel_labels),
        meta=dict(manifest.processing, dataset_name=manifest.dataset_name),
    )


# ---------------------------------------------------------------------------
# Raw recordings
# ---------------------------------------------------------------------------

def write_recording(rec: Recording, directory: str) -> None:
    """Store a continuous recording as ``recording.json`` + ``signal.bin``."""
    out = Path(directory)
    header = {
        "format_version": FORMAT_VERSION,
        "subject_id": rec.subject_id,
        "fs": rec.fs,
        "channel_labels": list(rec.channel_labels),
        "channel_types": list(rec.channel_types) if rec.channel_types else None,
        "bad_channels": [int(b) for b in rec.bad_channels],
        "n_samples": rec.n_samples,
        "events": [{"sample_index": int(e.sample_index), "label": e.label} for e in rec.events],
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / SIGNAL_NAME, "wb") as f:
            f.write(np.ascontiguousarray(rec.data, dtype=SAMPLE_DTYPE).tobytes())
    except OSError as e:
        raise StorageError(f"Cannot write recording to {out}: {e}") from e
    _write_json(out / RECORDING_NAME, header)


def read_recording(directory: str) -> Recording:
    path = Path(directory)
    header = _read_json(path / RECORDING_NAME)
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"Unsupported recording format_version {version}", version=version)

    n_channels = len(header["channel_labels"])
    n_samples = int(header["n_samples"])
    data_path = path / SIGNAL_NAME
    if not data_path.exists():
        raise StorageError(f"File not found: {data_path}")
    expected = expected_data_size(1, n_channels, n_samples)
    actual = data_path.stat().st_size
    if actual != expected:
        raise CorruptionError(f"{data_path} holds {actual} bytes, expected {expected}", expected, actual)

    data = np.fromfile(data_path, dtype=SAMPLE_DTYPE).reshape(n_channels, n_samples)
    return Recording(
        data=data.astype(np.float64),
        fs=float(header["fs"]),
        channel_labels=list(header["channel_labels"]),
        events=[EventMarker(int(e["sample_index"]), str(e["label"])) for e in header["events"]],
        subject_id=str(header["subject_id"]),
        channel_types=header.get("channel_types"),
        bad_channels=[int(b) for b in header.get("bad_channels", [])],
    )


def find_recordings(root: Path) -> List[Path]:
    """Sorted recording directories under ``root``."""
    return sorted(p.parent for p in Path(root).rglob(RECORDING_NAME))


# ---------------------------------------------------------------------------
# Blobs: features and checkpoints
# ---------------------------------------------------------------------------

def write_blob(path: str, header: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> None:
    """
    Write named arrays as float32 after a JSON header.

    Layout: magic (8 bytes), uint32 version, uint64 header length, UTF-8
    JSON header, then each array row-major in header order.
    """
    index = []
    offset = 0
    payload = []
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype=SAMPLE_DTYPE)
        index.append({"name": name, "shape": list(data.shape), "offset": offset})
        payload.append(data.tobytes())
        offset += data.nbytes

    full_header = dict(header, arrays=index)
    header_bytes = json.dumps(full_header, ensure_ascii=False).encode("utf-8")
    out = Path(path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "wb") as f:
            f.write(_BLOB_PREFIX.pack(BLOB_MAGIC, BLOB_VERSION, len(header_bytes)))
            f.write(header_bytes)
            for chunk in payload:
                f.write(chunk)
    except OSError as e:
        raise StorageError(f"Cannot write {out}: {e}") from e


def read_blob(path: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Read a blob written by ``write_blob``.

    Returns:
        Tuple of (header, arrays as float64)
    """
    src = Path(path)
    if not src.exists():
        raise StorageError(f"File not found: {src}")
    raw = src.read_bytes()
    if len(raw) < _BLOB_PREFIX.size:
        raise CorruptionError(f"{src} is too short to be a blob", _BLOB_PREFIX.size, len(raw))
    magic, version, header_len = _BLOB_PREFIX.unpack_from(raw, 0)
    if magic != BLOB_MAGIC:
        raise StorageError(f"{src} is not a blob file")
    if version != BLOB_VERSION:
        raise VersionError(f"Unsupported blob version {version}", version=version)

    start = _BLOB_PREFIX.size
    header = json.loads(raw[start:start + header_len].decode("utf-8"))
    payload = memoryview(raw)[start + header_len:]

    arrays = {}
    expected = sum(int(np.prod(a["shape"], dtype=np.int64)) * SAMPLE_DTYPE.itemsize for a in header["arrays"])
    if len(payload) != expected:
        raise CorruptionError(f"{src} payload holds {len(payload)} bytes, header describes {expected}",
                              expected, len(payload))
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(payload, dtype=SAMPLE_DTYPE, count=count, offset=entry["offset"])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float64)
    return header, arrays


def write_features(fm, path: str) -> None:
    """Store a FeatureMatrix (values as a row-major float32 matrix)."""
    header = {
        "kind": "features",
        "layout": fm.layout.to_dict(),
        "class_names": list(fm.class_names),
        "channel_labels": list(fm.channel_labels) if fm.channel_labels else None,
        "labels": [int(v) for v in fm.labels],
        "subject_ids": list(fm.subject_ids),
    }
    write_blob(path, header, {"values": fm.values})
    logger.info(f"Wrote feature matrix {fm.values.shape} to {path}")


def read_features(path: str):
    from .features import FeatureLayout, FeatureMatrix

    header, arrays = read_blob(path)
    if header.get("kind") != "features":
        raise StorageError(f"{path} does not hold a feature matrix")
    return FeatureMatrix(
        values=arrays["values"],
        layout=FeatureLayout.from_dict(header["layout"]),
        labels=np.asarray(header["labels"], dtype=np.int64),
        subject_ids=header["subject_ids"],
        class_names=header["class_names"],
        channel_labels=header.get("channel_labels"),
    )


def save_linear_model(model, path: str) -> None:
    """Linear-model checkpoint: weights, bias and standardization statistics."""
    header = {
        "kind": "linear_model",
        "class_names": list(model.class_names),
        "history": model.history.to_dict(),
    }
    write_blob(path, header, {
        "weights": model.weights,
        "bias": model.bias,
        "feature_mean": model.feature_mean,
        "feature_std": model.feature_std,
    })
    logger.info(f"Saved linear model to {path}")


def load_linear_model(path: str):
    from .classifier import LinearModel, TrainingHistory

    header, arrays = read_blob(path)
    if header.get("kind") != "linear_model":
        raise StorageError(f"{path} does not hold a linear model")
    return LinearModel(
        weights=arrays["weights"],
        bias=arrays["bias"],
        feature_mean=arrays["feature_mean"],
        feature_std=arrays["feature_std"],
        class_names=header["class_names"],
        history=TrainingHistory(**header.get("history", {})),
    )


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def write_split(plan, path: str) -> None:
    _write_json(Path(path), plan.to_dict())


def read_split(path: str):
    from .splits import SplitPlan

    return SplitPlan.from_dict(_read_json(Path(path)))


def write_results(document: Dict[str, Any], path: str) -> None:
    """Write a results document ({"runs": [...], "aggregate": {...}})."""
    _write_json(Path(path), document)
    logger.info(f"Results written to {path}")


def read_results(path: str) -> Dict[str, Any]:
    document = _read_json(Path(path))
    if "runs" not in document:
        raise StorageError(f"{path} is not a results file (no 'runs' key)")
    return document


def write_json(data: Any, path: str) -> None:
    _write_json(Path(path), data)


def read_json(path: str) -> Any:
    return _read_json(Path(path))
