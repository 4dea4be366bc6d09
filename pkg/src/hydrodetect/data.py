"""Ingestion and splitting of hourly water-network SCADA telemetry.

The input format is the public BATADAL training-file layout: comma-separated
text with a DATETIME column, 43 sensor channels and a binary attack flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

# Canonical channel order of the water-network telemetry: 7 tank levels,
# 11 pump flows, the valve flow, 12 junction pressures, 11 pump statuses
# and the valve status.
LEVEL_SENSORS = tuple(f"L_T{i}" for i in range(1, 8))
FLOW_SENSORS = tuple(f"F_PU{i}" for i in range(1, 12)) + ("F_V2",)
PRESSURE_SENSORS = (
    "P_J280", "P_J269", "P_J300", "P_J256", "P_J289", "P_J415",
    "P_J302", "P_J306", "P_J307", "P_J317", "P_J14", "P_J422",
)
STATUS_SENSORS = tuple(f"S_PU{i}" for i in range(1, 12)) + ("S_V2",)
SENSOR_COLUMNS = LEVEL_SENSORS + FLOW_SENSORS + PRESSURE_SENSORS + STATUS_SENSORS

DATETIME_COLUMN = "DATETIME"
FLAG_ALIASES = ("ATT_FLAG", "Attack Flag")
DATETIME_FORMATS = ("%d/%m/%y %H", "%d/%m/%Y %H:%M")


class SchemaError(ValueError):
    """Raised when an input file does not match the expected layout."""


@dataclass
class TimeSeriesFrame:
    """Timestamp-indexed table of named sensor channels plus attack labels."""

    timestamps: np.ndarray          # datetime64[s], one entry per row
    channel_names: list[str]
    X: np.ndarray                   # float64, shape (n_rows, n_channels)
    y: np.ndarray                   # int64 in {0, 1}
    file_boundaries: list[int] = field(default_factory=list)  # start row of each source file

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        n = len(self.timestamps)
        if self.X.shape != (n, len(self.channel_names)):
            raise ValueError(
                f"shape mismatch: {self.X.shape} vs {n} rows x {len(self.channel_names)} channels"
            )
        if len(self.y) != n:
            raise ValueError("labels and timestamps differ in length")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise ValueError("channel names are not unique")
        if not np.isin(self.y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        for start, stop in zip(self.segment_starts(), self.segment_stops()):
            ts = self.timestamps[start:stop]
            if len(ts) > 1 and not (np.diff(ts.astype("datetime64[s]").astype(np.int64)) > 0).all():
                raise ValueError("timestamps not strictly increasing within a source file")

    def __len__(self) -> int:
        return len(self.timestamps)

    def segment_starts(self) -> list[int]:
        return self.file_boundaries if self.file_boundaries else [0]

    def segment_stops(self) -> list[int]:
        starts = self.segment_starts()
        return starts[1:] + [len(self)]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.channel_names.index(name)]

    def with_columns(self, names: list[str], values: np.ndarray) -> "TimeSeriesFrame":
        """Return a copy extended with extra columns (originals untouched)."""
        return TimeSeriesFrame(
            timestamps=self.timestamps,
            channel_names=self.channel_names + list(names),
            X=np.hstack([self.X, values]),
            y=self.y,
            file_boundaries=list(self.file_boundaries),
        )


def _normalize_header(columns) -> dict[str, str]:
    """Map raw header names to canonical ones (whitespace-trimmed)."""
    return {c: c.strip() for c in columns}


def _parse_datetimes(raw: pd.Series, path) -> np.ndarray:
    for fmt in DATETIME_FORMATS:
        try:
            parsed = pd.to_datetime(raw, format=fmt)
            return parsed.to_numpy().astype("datetime64[s]")
        except (ValueError, TypeError):
            continue
    raise SchemaError(f"{path}: unparseable DATETIME values (tried {DATETIME_FORMATS})")


def _load_one(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty file") from None
    if df.empty:
        raise SchemaError(f"{path}: no data rows")
    df = df.rename(columns=_normalize_header(df.columns))

    missing = [c for c in (DATETIME_COLUMN,) + SENSOR_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required column(s): {', '.join(missing)}")
    flag_col = next((a for a in FLAG_ALIASES if a in df.columns), None)
    if flag_col is None:
        raise SchemaError(
            f"{path}: missing required column(s): attack flag "
            f"(expected one of {FLAG_ALIASES})"
        )

    timestamps = _parse_datetimes(df[DATETIME_COLUMN], path)

    X = np.empty((len(df), len(SENSOR_COLUMNS)), dtype=np.float64)
    for j, name in enumerate(SENSOR_COLUMNS):
        col = pd.to_numeric(df[name], errors="coerce").to_numpy(dtype=np.float64)
        if np.isnan(col).any():
            bad = int(np.flatnonzero(np.isnan(col))[0])
            raise SchemaError(f"{path}: non-numeric value in column {name} at data row {bad}")
        X[:, j] = col

    # Coerce the flag to {0, 1}: exactly 1 marks an attack hour, anything
    # else (0 or an unlabeled sentinel such as -999) counts as normal.
    flag = pd.to_numeric(df[flag_col], errors="coerce").to_numpy(dtype=np.float64)
    if np.isnan(flag).any():
        raise SchemaError(f"{path}: non-numeric value in attack-flag column")
    y = (flag == 1).astype(np.int64)
    return timestamps, X, y


def load_batadal(paths) -> TimeSeriesFrame:
    """Load and concatenate BATADAL-format files in the given order."""
    paths = [Path(p) for p in paths]
    if not paths:
        raise SchemaError("no input files given")
    parts = [_load_one(p) for p in paths]
    boundaries, offset = [], 0
    for ts, _, _ in parts:
        boundaries.append(offset)
        offset += len(ts)
    return TimeSeriesFrame(
        timestamps=np.concatenate([p[0] for p in parts]),
        channel_names=list(SENSOR_COLUMNS),
        X=np.vstack([p[1] for p in parts]),
        y=np.concatenate([p[2] for p in parts]),
        file_boundaries=boundaries,
    )


def save_batadal(frame: TimeSeriesFrame, path) -> None:
    """Write a frame back out in the input file format."""
    df = pd.DataFrame(frame.X, columns=frame.channel_names)
    df.insert(0, DATETIME_COLUMN, pd.Series(frame.timestamps).dt.strftime("%d/%m/%y %H"))
    df["ATT_FLAG"] = frame.y
    df.to_csv(path, index=False)


def class_balance(frame: TimeSeriesFrame) -> tuple[int, int, float]:
    """Return (normal count, attack count, minority fraction)."""
    if len(frame) == 0:
        raise ValueError("empty frame")
    count1 = int(frame.y.sum())
    count0 = len(frame) - count1
    return count0, count1, min(count0, count1) / len(frame)


@dataclass
class SplitIndices:
    """Disjoint, exhaustive train/validation row-index sets."""

    train: np.ndarray
    valid: np.ndarray
    seed: int
    ratio: float


def stratified_split(frame: TimeSeriesFrame, ratio: float, seed: int) -> SplitIndices:
    """Seeded random split preserving per-class proportions to rounding."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train_parts, valid_parts = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(frame.y == cls)
        if len(idx) == 0:
            raise ValueError(f"class {cls} has no members")
        idx = rng.permutation(idx)
        n_train = round(ratio * len(idx))
        train_parts.append(idx[:n_train])
        valid_parts.append(idx[n_train:])
    return SplitIndices(
        train=np.sort(np.concatenate(train_parts)),
        valid=np.sort(np.concatenate(valid_parts)),
        seed=seed,
        ratio=ratio,
    )
