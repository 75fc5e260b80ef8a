"""Trajectory datasets, CSV ingestion, preprocessing and model files.

CSV layout
----------
Optional ``# key: value`` metadata lines, then a header row. ``traj_id``
splits trajectories, ``t`` is time in seconds, columns prefixed ``u_`` are
inputs and everything else is state. Input row ``m`` is the command held
over ``[t_m, t_{m+1})``; the final row of a trajectory may leave inputs
blank. Logs with an input on every row have the last one dropped.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dictionary import Dictionary
from .edmd import Decomposition, KoopmanModel

MODEL_FORMAT = "koopman-lift-model"
MODEL_FORMAT_VERSION = 1


class DataFormatError(ValueError):
    """Malformed dataset or model file."""


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.states, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        U = np.asarray(self.inputs, dtype=float)
        if U.ndim == 1:
            U = U[:, None] if U.size else np.zeros((max(len(X) - 1, 0), 0))
        if len(X) < 2:
            raise DataFormatError(f"trajectory needs at least 2 samples, got {len(X)}")
        if len(U) == len(X):
            U = U[:-1]
        if len(U) != len(X) - 1:
            raise DataFormatError(f"{len(U)} input rows for {len(X)} states")
        object.__setattr__(self, "states", X)
        object.__setattr__(self, "inputs", U)

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class TrajectoryDataset:
    """Trajectories sharing one sampling period and column layout."""

    trajectories: tuple
    dt: float
    state_names: tuple
    input_names: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(self, "input_names", tuple(self.input_names))
        if not self.dt > 0:
            raise DataFormatError("sampling period must be positive")
        for k, tr in enumerate(trajs):
            if tr.states.shape[1] != len(self.state_names):
                raise DataFormatError(f"trajectory {k}: state width {tr.states.shape[1]}")
            if tr.inputs.shape[1] != len(self.input_names):
                raise DataFormatError(f"trajectory {k}: input width {tr.inputs.shape[1]}")

    def __len__(self):
        return len(self.trajectories)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryDataset):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.state_names == other.state_names
            and self.input_names == other.input_names
            and len(self) == len(other)
            and all(
                np.array_equal(a.states, b.states) and np.array_equal(a.inputs, b.inputs)
                for a, b in zip(self.trajectories, other.trajectories)
            )
        )

    @property
    def state_dim(self) -> int:
        return len(self.state_names)

    @property
    def input_dim(self) -> int:
        return len(self.input_names)

    @property
    def n_pairs(self) -> int:
        return sum(len(t) - 1 for t in self.trajectories)

    def subset(self, indices) -> "TrajectoryDataset":
        return TrajectoryDataset(
            tuple(self.trajectories[i] for i in indices),
            self.dt,
            self.state_names,
            self.input_names,
            dict(self.metadata),
        )

    def split(self, validation_fraction: float = 0.2, seed: int = 0):
        """Random train/validation split by whole trajectories."""
        n = len(self)
        n_val = int(round(validation_fraction * n))
        if n < 2 or not 0 < n_val < n:
            raise ValueError("split needs at least one trajectory on each side")
        order = np.random.default_rng(seed).permutation(n)
        return self.subset(sorted(order[n_val:])), self.subset(sorted(order[:n_val]))


def _fmt(v: float) -> str:
    return repr(float(v))


def export_csv(dataset: TrajectoryDataset, path) -> None:
    """Write ``dataset`` in the CSV layout described in the module docstring.

    Floats use their shortest round-trip representation, so re-ingesting
    reproduces every value exactly.
    """
    buf = io.StringIO()
    meta = {"dt": _fmt(dataset.dt), **{k: str(v) for k, v in sorted(dataset.metadata.items())}}
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["traj_id", "t", *dataset.state_names, *(f"u_{n}" for n in dataset.input_names)]
    )
    for k, tr in enumerate(dataset.trajectories):
        for i, x in enumerate(tr.states):
            u = tr.inputs[i] if i < len(tr.inputs) else [None] * dataset.input_dim
            writer.writerow(
                [k, _fmt(i * dataset.dt), *map(_fmt, x), *("" if v is None else _fmt(v) for v in u)]
            )
    Path(path).write_text(buf.getvalue())


def read_csv_metadata(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
    return meta


def ingest_csv(
    path,
    state_columns=None,
    input_columns=None,
    dt: float | None = None,
    traj_column: str = "traj_id",
) -> TrajectoryDataset:
    """Read one CSV file into a :class:`TrajectoryDataset`.

    Without an explicit schema, ``u_*`` columns are inputs and every column
    other than ``traj_id`` and ``t`` is state. ``dt`` falls back to the
    ``# dt:`` metadata line, then to the spacing of the ``t`` column.
    """
    path = Path(path)
    meta = read_csv_metadata(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows:
        raise DataFormatError(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataFormatError(f"{path}: no data rows")
    if state_columns is None:
        state_columns = [
            h for h in header if h not in (traj_column, "t") and not h.startswith("u_")
        ]
    if input_columns is None:
        input_columns = [h for h in header if h.startswith("u_")]
    missing = [c for c in (*state_columns, *input_columns) if c not in header]
    if missing:
        raise DataFormatError(f"{path}: missing columns {missing}")

    def column(name, allow_blank_last=False):
        j = header.index(name)
        out = np.empty(len(body))
        for i, row in enumerate(body):
            cell = row[j].strip() if j < len(row) else ""
            if cell == "" and allow_blank_last:
                out[i] = np.nan
                continue
            try:
                out[i] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: non-numeric cell {cell!r} at row {i + 2}, column '{name}'"
                ) from None
        return out

    X = np.column_stack([column(c) for c in state_columns]) if state_columns else None
    if X is None:
        raise DataFormatError(f"{path}: no state columns")
    U = (
        np.column_stack([column(c, allow_blank_last=True) for c in input_columns])
        if input_columns
        else np.zeros((len(body), 0))
    )
    if traj_column in header:
        ids = column(traj_column)
        order = list(dict.fromkeys(ids.tolist()))
        groups = [np.flatnonzero(ids == i) for i in order]
    else:
        groups = [np.arange(len(body))]

    if dt is None:
        if "dt" in meta:
            dt = float(meta["dt"])
        elif "t" in header:
            t = column("t")[groups[0]]
            if len(t) < 2:
                raise DataFormatError(f"{path}: trajectory needs at least 2 samples")
            dt = float(np.median(np.diff(t)))
        else:
            raise DataFormatError(f"{path}: sampling period unknown; pass dt")

    trajectories = []
    for g in groups:
        if len(g) < 2:
            raise DataFormatError(f"{path}: trajectory needs at least 2 samples, got {len(g)}")
        u = U[g]
        blank = np.isnan(u).any(axis=1)
        if blank[:-1].any():
            bad = int(g[np.flatnonzero(blank[:-1])[0]]) + 2
            raise DataFormatError(f"{path}: blank input cell at row {bad}")
        u = u[:-1]
        trajectories.append(Trajectory(X[g], u))

    names_in = tuple(c[2:] if c.startswith("u_") else c for c in input_columns)
    meta.pop("dt", None)
    meta.setdefault("source", str(path))
    return TrajectoryDataset(tuple(trajectories), dt, tuple(state_columns), names_in, meta)


def moving_average(dataset: TrajectoryDataset, window: int) -> TrajectoryDataset:
    """Centered moving average of every state column.

    Near the ends the window shrinks symmetrically, so sample ``i`` averages
    ``2h + 1`` values with ``h = min(window // 2, i, n - 1 - i)``. Inputs are
    left untouched.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    shortest = min(len(t) for t in dataset.trajectories)
    if window > shortest:
        raise ValueError(f"window {window} exceeds shortest trajectory ({shortest})")
    half = window // 2
    out = []
    for tr in dataset.trajectories:
        X = tr.states
        n = len(X)
        i = np.arange(n)
        h = np.minimum(half, np.minimum(i, n - 1 - i))
        acc = X.copy()
        for k in range(1, half + 1):
            use = (h >= k)[:, None]
            acc += np.where(use, X[np.clip(i - k, 0, n - 1)] + X[np.clip(i + k, 0, n - 1)], 0.0)
        out.append(Trajectory(acc / (2 * h + 1)[:, None], tr.inputs))
    meta = dict(dataset.metadata)
    meta["moving_average"] = window
    return TrajectoryDataset(tuple(out), dataset.dt, dataset.state_names, dataset.input_names, meta)


def _encode_matrix(a) -> dict:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {
            "shape": list(a.shape),
            "real": [float(v) for v in a.real.ravel()],
            "imag": [float(v) for v in a.imag.ravel()],
        }
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _decode_matrix(d: dict) -> np.ndarray:
    shape = tuple(d["shape"])
    if "data" in d:
        return np.array(d["data"], dtype=float).reshape(shape)
    return (np.array(d["real"]) + 1j * np.array(d["imag"])).reshape(shape)


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def model_to_dict(model: KoopmanModel) -> dict:
    payload = {
        "K": _encode_matrix(model.K),
        "B": _encode_matrix(model.B),
        "state_dictionary": model.state_dict.descriptor(),
        "input_dictionary": model.input_dict.descriptor(),
        "dt": model.dt,
        "rel_tol": model.rel_tol,
        "decomposition": None,
    }
    dec = model.decomposition
    if dec is not None:
        payload["decomposition"] = {
            "eigenvalues": _encode_matrix(dec.eigenvalues.astype(complex)),
            "eigenfunctions": _encode_matrix(dec.eigenfunctions.astype(complex)),
            "left": _encode_matrix(dec.left.astype(complex)),
            "modes": _encode_matrix(dec.modes.astype(complex)),
        }
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "payload": payload,
        "sha256": _checksum(payload),
    }


def model_from_dict(doc: dict) -> KoopmanModel:
    if doc.get("format") != MODEL_FORMAT:
        raise DataFormatError(f"not a model file (format={doc.get('format')!r})")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataFormatError(f"unsupported model format version {doc.get('format_version')!r}")
    payload = doc["payload"]
    if _checksum(payload) != doc.get("sha256"):
        raise DataFormatError("model checksum mismatch")
    try:
        state_dict = Dictionary.from_descriptor(payload["state_dictionary"])
        input_dict = Dictionary.from_descriptor(payload["input_dictionary"])
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc
    dec = None
    if payload["decomposition"] is not None:
        d = payload["decomposition"]
        dec = Decomposition(
            _decode_matrix(d["eigenvalues"]),
            _decode_matrix(d["eigenfunctions"]),
            _decode_matrix(d["left"]),
            _decode_matrix(d["modes"]),
        )
    return KoopmanModel(
        _decode_matrix(payload["K"]),
        _decode_matrix(payload["B"]),
        state_dict,
        input_dict,
        payload["dt"],
        payload["rel_tol"],
        dec,
    )


def save_model(model: KoopmanModel, path) -> None:
    """Write a self-describing JSON model file; floats round-trip exactly."""
    text = json.dumps(model_to_dict(model), sort_keys=True, indent=1)
    Path(path).write_text(text + "\n")


def load_model(path) -> KoopmanModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(doc)
