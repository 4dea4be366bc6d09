"""Deterministic synthetic telemetry in the BATADAL training-file layout.

This is a statistical fixture generator (daily/weekly cycles, AR(1) noise,
pump duty cycles, linear pressure mixes), not a hydraulic simulation. It
reproduces the public corpus shape exactly: two files of 8,761 and 4,177
hourly rows (12,938 total) with 488 attack-labeled rows in the second
file, and plants attack effects on the channels that dominate the real
data's importance ranking. Some effects are level shifts visible in a
single row; others (tank drift, pressure-variance bursts) only show up
through temporal context.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .data import SENSOR_COLUMNS

FILE1_ROWS = 8761
FILE2_ROWS = 4177
N_ATTACK_ROWS = 488

# (start hour in file 2, length, kind)
ATTACKS = (
    (310, 60, "pump_override"),
    (820, 92, "valve_manipulation"),
    (1400, 40, "stealth_drift"),
    (1905, 81, "pressure_tamper"),
    (2500, 70, "pump_override"),
    (3050, 85, "stealth_drift"),
    (3640, 60, "valve_manipulation"),
)

ALWAYS_OFF_PUMPS = (3, 9)           # constant channels exercise degenerate scaling


def _ar1(rng, n, rho=0.9, scale=1.0):
    e = rng.normal(0.0, scale * np.sqrt(1 - rho**2), size=n)
    out = np.empty(n)
    acc = 0.0
    for t in range(n):
        acc = rho * acc + e[t]
        out[t] = acc
    return out


def _simulate(n: int, rng: np.random.Generator, attacks=()):
    h = np.arange(n)
    daily = np.sin(2 * np.pi * h / 24.0)
    weekly = np.sin(2 * np.pi * h / 168.0)
    demand = 1.0 + 0.35 * daily + 0.12 * weekly + 0.15 * _ar1(rng, n, 0.85)

    attack_mask = np.zeros(n, dtype=bool)
    kind_mask = {k: np.zeros(n, dtype=bool) for k in
                 ("pump_override", "valve_manipulation", "stealth_drift", "pressure_tamper")}
    for start, length, kind in attacks:
        attack_mask[start:start + length] = True
        kind_mask[kind][start:start + length] = True

    cols = {}

    # tank levels
    for i in range(1, 8):
        phase = 3.1 * i
        amp = 0.8 + 0.1 * i
        level = 3.5 + amp * np.sin(2 * np.pi * (h + phase) / 24.0) + 0.4 * _ar1(rng, n, 0.95)
        if i == 1:
            # stealthy drift: ramp up inside the attack window, values stay in range
            drift = np.zeros(n)
            for start, length, kind in attacks:
                if kind == "stealth_drift":
                    drift[start:start + length] = np.linspace(0.0, 1.4, length)
            level = level + drift
        cols[f"L_T{i}"] = np.clip(level, 0.2, 7.5)

    # pump statuses and flows
    for i in range(1, 12):
        if i in ALWAYS_OFF_PUMPS:
            status = np.zeros(n)
            flow = np.zeros(n)
        else:
            theta = 0.55 + 0.08 * ((i * 7) % 5)
            drive = demand + 0.25 * _ar1(rng, n, 0.7)
            status = (drive > theta).astype(np.float64)
            base = 12.0 + 2.5 * i
            flow = status * (base + 9.0 * demand + rng.normal(0, 1.2, n))
            flow = np.maximum(flow, 0.0)
        if i == 6:
            m = kind_mask["pump_override"]
            status = np.where(m, 1.0, status)
            flow = np.where(m, 52.0 + rng.normal(0, 2.5, n), flow)
        if i == 7:
            m = kind_mask["stealth_drift"]
            flow = np.where(m, flow * 0.62, flow)
        cols[f"F_PU{i}"] = flow
        cols[f"S_PU{i}"] = status

    valve = 10.0 + 3.0 * daily + 0.8 * _ar1(rng, n, 0.8)
    valve = valve + np.where(kind_mask["valve_manipulation"], 4.5 + rng.normal(0, 0.8, n), 0.0)
    cols["F_V2"] = np.maximum(valve, 0.0)
    cols["S_V2"] = (cols["F_V2"] > 6.0).astype(np.float64)

    # junction pressures: base + linear mixes of flows/demand + noise
    press_noise = {name: rng.normal(0, 0.6, n) for name in
                   ("P_J280", "P_J269", "P_J300", "P_J256", "P_J289", "P_J415",
                    "P_J302", "P_J306", "P_J307", "P_J317", "P_J14", "P_J422")}
    cols["P_J280"] = 52.0 + 0.06 * cols["F_PU1"] - 1.5 * demand + press_noise["P_J280"] \
        + np.where(attack_mask, 0.9, 0.0)
    cols["P_J269"] = 48.0 + 0.05 * cols["F_PU2"] - 1.2 * demand + press_noise["P_J269"]
    cols["P_J300"] = 40.0 + 0.04 * cols["F_PU4"] - 0.8 * demand + press_noise["P_J300"]
    cols["P_J256"] = 36.0 + 0.05 * cols["F_PU5"] - 1.0 * demand + press_noise["P_J256"]
    cols["P_J289"] = 44.0 + 0.03 * cols["F_PU8"] - 0.9 * demand + press_noise["P_J289"]
    cols["P_J306"] = 39.0 + 0.05 * cols["F_PU10"] - 1.1 * demand + press_noise["P_J306"]
    cols["P_J422"] = 33.0 + 0.04 * cols["F_PU11"] - 0.7 * demand + press_noise["P_J422"]

    # attack-bearing pressures
    burst = np.where(kind_mask["stealth_drift"], rng.normal(0, 2.4, n), 0.0)
    cols["P_J415"] = 42.0 - 1.0 * demand + press_noise["P_J415"] + burst
    cols["P_J317"] = 45.0 - 1.3 * demand + press_noise["P_J317"] \
        + np.where(kind_mask["pump_override"], 2.6, 0.0) \
        + np.where(kind_mask["pressure_tamper"], 1.8, 0.0)
    cols["P_J302"] = 38.0 - 0.9 * demand + press_noise["P_J302"] \
        + np.where(kind_mask["valve_manipulation"], -1.7, 0.0) \
        + np.where(kind_mask["pressure_tamper"], 1.6, 0.0)
    cols["P_J307"] = 41.0 - 1.1 * demand + press_noise["P_J307"] \
        + np.where(kind_mask["pressure_tamper"], 2.2, 0.0)
    cols["P_J14"] = 30.0 - 0.6 * demand + press_noise["P_J14"] \
        + np.where(kind_mask["valve_manipulation"], 2.1, 0.0)

    X = np.column_stack([cols[name] for name in SENSOR_COLUMNS])
    return X, attack_mask.astype(np.int64)


def _write(path: Path, X: np.ndarray, y: np.ndarray, start: str, flag_name: str):
    times = pd.date_range(start=start, periods=len(X), freq="h")
    df = pd.DataFrame(np.round(X, 4), columns=list(SENSOR_COLUMNS))
    df.insert(0, "DATETIME", times.strftime("%d/%m/%y %H"))
    df[flag_name] = y
    df.to_csv(path, index=False)


def generate_dataset(out_dir, seed: int = 7) -> tuple[Path, Path]:
    """Write the two training files and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    X1, y1 = _simulate(FILE1_ROWS, rng, attacks=())
    X2, y2 = _simulate(FILE2_ROWS, rng, attacks=ATTACKS)
    assert int(y2.sum()) == N_ATTACK_ROWS

    p1 = out_dir / "training_dataset_1.csv"
    p2 = out_dir / "training_dataset_2.csv"
    # the two public files differ in header hygiene; mirror that
    _write(p1, X1, y1, "2014-01-01 00:00", " ATT_FLAG")
    _write(p2, X2, y2, "2016-07-04 00:00", "ATT_FLAG")
    return p1, p2
