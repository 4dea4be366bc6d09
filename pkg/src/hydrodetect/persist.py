"""Versioned model files and atomic, deterministic report writing.

Model files are self-describing JSON: format version, model kind, feature
names, scaler parameters, a kind-specific payload and the training
manifest. Floats survive the JSON round trip exactly (shortest-repr), so
save -> load -> predict is bitwise identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fingerprint_paths(paths) -> str:
    """64-bit hash of the raw input bytes, hex-encoded."""
    h = hashlib.blake2b(digest_size=8)
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def save_model_file(path, kind: str, payload: dict, feature_names, scaler_params,
                    manifest: dict) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "feature_names": list(feature_names),
        "scaler": None if scaler_params is None else scaler_params.to_dict(),
        "payload": payload,
        "manifest": manifest,
    }
    atomic_write_text(path, dumps(doc))


def load_model_file(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{path}: cannot read model file: {exc}") from exc
    version = doc.get("format_version")
    if not isinstance(version, int):
        raise ModelFileError(f"{path}: missing format_version")
    if version > FORMAT_VERSION:
        raise ModelFileError(
            f"{path}: format version {version} is newer than supported {FORMAT_VERSION}"
        )
    return doc
