"""File formats: JSON systems and reports, CSV trajectories and rate curves.

Every writer goes through a temporary file in the target directory followed
by ``os.replace``, so readers never see a half-written artifact.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .sysmodel import DisturbanceProfile, SwitchedAffineSystem


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps(obj))


def load_system(path) -> SwitchedAffineSystem:
    with open(path) as fh:
        return SwitchedAffineSystem.from_dict(json.load(fh))


def save_system(path, system: SwitchedAffineSystem) -> Path:
    return write_json(path, system.to_dict())


def load_disturbance(path) -> DisturbanceProfile:
    with open(path) as fh:
        return DisturbanceProfile.from_dict(json.load(fh))


def trajectory_csv(traj) -> str:
    """Header ``t,x1..xn,sigma,v``; sigma is reported 1-based."""
    n = traj.states.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *[f"x{i + 1}" for i in range(n)], "sigma", "v"])
    for t, x, s, v in zip(traj.times, traj.states, traj.modes, traj.lyapunov):
        w.writerow([repr(float(t)), *[repr(float(c)) for c in x], int(s) + 1, repr(float(v))])
    return buf.getvalue()


def write_trajectory(path, traj) -> Path:
    return atomic_write_text(path, trajectory_csv(traj))


def read_trajectory(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {"header": header, "t": body[:, 0], "states": body[:, 1:-2],
            "sigma": body[:, -2].astype(int), "v": body[:, -1]}


def write_events(path, events) -> Path:
    text = "".join(json.dumps(_jsonable(e), sort_keys=True) + "\n" for e in events)
    return atomic_write_text(path, text)


def rate_csv(rows) -> str:
    """Rows of ``(r, beta, epsilon, alpha)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "beta", "epsilon", "alpha"])
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_rate_curve(path, rows) -> Path:
    return atomic_write_text(path, rate_csv(rows))
