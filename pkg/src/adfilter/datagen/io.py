"""Dataset persistence: ``meta.json`` plus ``truth.csv`` / ``obs.csv`` per trajectory."""
import csv
import json
from pathlib import Path

import numpy as np

from ..dynamics.systems import CWSystem, GLVSystem, L96System
from .generate import SPLITS, Dataset, Trajectory
from .plans import ObservationPlan


def _fmt(v):
    return repr(float(v))


def _traj_dir(root, split, i):
    return Path(root) / split / f"traj_{i:03d}"


def save_trajectory(traj, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    d = traj.truth.shape[1]
    with open(path / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{j}" for j in range(d)])
        for t, row in enumerate(traj.truth):
            w.writerow([t] + [_fmt(v) for v in row])
    d_y = len(traj.plan.indices[0]) if traj.T else 0
    with open(path / "obs.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"idx{j}" for j in range(d_y)] + [f"y{j}" for j in range(d_y)])
        for t in range(traj.T):
            w.writerow([t + 1] + [int(i) for i in traj.plan.indices[t]] + [_fmt(v) for v in traj.obs[t]])


def save_dataset(ds, root):
    """Write ``ds`` under ``root``; rewriting the same dataset gives identical bytes."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(ds.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for split in SPLITS:
        for i, traj in enumerate(ds.split(split)):
            save_trajectory(traj, _traj_dir(root, split, i))
    return root


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def load_trajectory(path, meta):
    path = Path(path)
    _, rows = _read_rows(path / "truth.csv")
    truth = np.array([[float(v) for v in r[1:]] for r in rows])
    header, rows = _read_rows(path / "obs.csv")
    d_y = (len(header) - 1) // 2
    idx = [np.array([int(v) for v in r[1:1 + d_y]], dtype=np.intp) for r in rows]
    obs = [np.array([float(v) for v in r[1 + d_y:]]) for r in rows]
    if meta["obs_mode"] != "time-varying" and idx:
        idx = [idx[0]] * len(idx)
    plan = ObservationPlan(meta["obs_mode"], meta["ratio"], idx)
    return Trajectory(truth, obs, plan, meta["r_scale"])


def system_from_meta(meta):
    if meta["system"] == "cw":
        return CWSystem()
    if meta["system"] == "l96":
        return L96System(dim=meta["dim"], dt=meta["dt"])
    return GLVSystem(meta["dim"], meta["dt"], x_s_true=np.asarray(meta["x_s_true"]))


def load_dataset(root):
    root = Path(root)
    with open(root / "meta.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    groups = {}
    for split in SPLITS:
        groups[split] = [load_trajectory(_traj_dir(root, split, i), meta) for i in range(meta["splits"][split])]
    return Dataset(system_from_meta(meta), groups["train"], groups["val"], groups["test"], meta)
