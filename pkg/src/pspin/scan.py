"""Parallel (k, alpha)-grid evaluation of scalar diagnostics with
deterministic per-cell seeding and resumable, atomically written checkpoints.

Every grid cell is a pure function of (spec, i, j), so tables are
bit-identical across parallelism degrees and across checkpoint/resume
boundaries.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import multiprocessing
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chaos import chaotic_area, max_lyapunov_over_seeds, phase_space_similarity
from .floquet import SpinRepresentation
from .params import ModelParams
from .qchaos import (fit_quantum_lyapunov, floquet_gamma, localization_delta,
                     otoc_series)

__all__ = [
    "ScanSpec", "ScanTable", "run_scan", "checkpoint", "resume", "cell_seed",
    "CheckpointError", "CorruptCheckpointError", "CheckpointVersionError",
    "METRICS",
]

log = logging.getLogger(__name__)

_MAGIC = b"PSPNSCN1"
_VERSION = 1


class CheckpointError(Exception):
    """Base class for checkpoint persistence failures."""


class CorruptCheckpointError(CheckpointError):
    """The checkpoint file is truncated, altered, or not a checkpoint."""


class CheckpointVersionError(CheckpointError):
    """The checkpoint was written by an incompatible format version."""


# metric name -> (defaults for the metric-specific settings)
METRICS: dict[str, dict] = {
    "lyapunov": {"n_steps": 100_000, "n_transient": 1000, "n_seeds": 8},
    "area": {"n_tot": 10_000, "d_min": 0.06,
             "t_max_min": 120, "t_max_max": 140},
    "similarity": {"d_alpha": 5e-4, "d_k": 0.0, "n_tot": 1500, "n_kicks": 200},
    "gamma": {"n_spins": 512},
    "delta": {"n_spins": 512},
    "otoc_lyapunov": {"n_spins": 512, "n_max": 60, "coe_samples": 20},
}


@dataclass(frozen=True)
class ScanSpec:
    """Definition of a (k, alpha) scan of one scalar metric.

    k_range and alpha_range are (min, max, count) with count >= 1; values
    is an alpha-major grid (rows = alpha, columns = k). settings carries the
    metric-specific knobs; missing entries are filled with the documented
    defaults at construction so that the canonical encoding (and hence the
    checkpoint digest) is unambiguous.
    """

    metric: str
    p: int
    k_range: tuple[float, float, int]
    alpha_range: tuple[float, float, int]
    root_seed: int = 0
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; "
                             f"choose from {sorted(METRICS)}")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        for name, rng in (("k_range", self.k_range),
                          ("alpha_range", self.alpha_range)):
            lo, hi, count = rng
            if count < 1:
                raise ValueError(f"{name} count must be >= 1")
            if hi < lo:
                raise ValueError(f"{name} must be ordered (min <= max)")
        merged = dict(METRICS[self.metric])
        unknown = set(self.settings) - set(merged)
        if unknown:
            raise ValueError(f"unknown settings for metric {self.metric!r}: "
                             f"{sorted(unknown)}")
        merged.update(self.settings)
        object.__setattr__(self, "k_range",
                           (float(self.k_range[0]), float(self.k_range[1]),
                            int(self.k_range[2])))
        object.__setattr__(self, "alpha_range",
                           (float(self.alpha_range[0]), float(self.alpha_range[1]),
                            int(self.alpha_range[2])))
        object.__setattr__(self, "settings", merged)

    @property
    def k_values(self) -> np.ndarray:
        lo, hi, count = self.k_range
        return np.linspace(lo, hi, count)

    @property
    def alpha_values(self) -> np.ndarray:
        lo, hi, count = self.alpha_range
        return np.linspace(lo, hi, count)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.alpha_range[2], self.k_range[2])

    def to_json(self) -> str:
        payload = {"metric": self.metric, "p": self.p,
                   "k_range": list(self.k_range),
                   "alpha_range": list(self.alpha_range),
                   "root_seed": self.root_seed,
                   "settings": self.settings}
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ScanSpec":
        d = json.loads(text)
        return cls(metric=d["metric"], p=int(d["p"]),
                   k_range=tuple(d["k_range"]),
                   alpha_range=tuple(d["alpha_range"]),
                   root_seed=int(d["root_seed"]),
                   settings=d["settings"])

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_json().encode()).digest()


@dataclass
class ScanTable:
    """Grid of metric values plus the completion bitmap; failures recorded
    per cell (and logged), never marked complete."""

    spec: ScanSpec
    values: np.ndarray
    done: np.ndarray
    failures: dict[tuple[int, int], str] = field(default_factory=dict)

    @classmethod
    def empty(cls, spec: ScanSpec) -> "ScanTable":
        shape = spec.shape
        return cls(spec=spec, values=np.full(shape, np.nan),
                   done=np.zeros(shape, dtype=bool))

    @property
    def complete(self) -> bool:
        return bool(self.done.all())


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def cell_seed(root_seed: int, i: int, j: int) -> int:
    """Stable 64-bit per-cell seed: splitmix64 mixing of the root seed and
    the cell indices, independent of execution order."""
    h = _mix64((root_seed + _GOLDEN) & _MASK64)
    h = _mix64((h + (i + 1) * _GOLDEN) & _MASK64)
    h = _mix64((h + (j + 1) * _GOLDEN) & _MASK64)
    return h


def _evaluate_cell(spec: ScanSpec, i: int, j: int) -> float:
    """Metric value of cell (i, j); pure in (spec, i, j)."""
    alpha = float(spec.alpha_values[i])
    k = float(spec.k_values[j])
    params = ModelParams(p=spec.p, k=k, alpha=alpha)
    s = spec.settings
    metric = spec.metric
    if metric == "lyapunov":
        return max_lyapunov_over_seeds(params, n_steps=s["n_steps"],
                                       n_transient=s["n_transient"],
                                       n_seeds=s["n_seeds"])
    if metric == "area":
        t_list = range(s["t_max_min"], s["t_max_max"] + 1)
        return chaotic_area(params, n_tot=s["n_tot"], d_min=s["d_min"],
                            t_max_list=t_list).a_ch
    if metric == "similarity":
        return phase_space_similarity(params, d_alpha=s["d_alpha"],
                                      d_k=s["d_k"], n_tot=s["n_tot"],
                                      n_kicks=s["n_kicks"]).s_bar
    rep = SpinRepresentation(s["n_spins"])
    if metric == "gamma":
        _, gamma = floquet_gamma(params, rep)
        return gamma
    if metric == "delta":
        return localization_delta(params, rep)
    if metric == "otoc_lyapunov":
        series = otoc_series(params, rep, n_max=s["n_max"],
                             coe_samples=s["coe_samples"],
                             rng_seed=cell_seed(spec.root_seed, i, j))
        fit = fit_quantum_lyapunov(series)
        # 0 encodes the no-window (non-chaotic) outcome
        return fit.lam_q if fit is not None else 0.0
    raise ValueError(f"unknown metric {metric!r}")


def _cell_task(args) -> tuple[int, int, float, str | None]:
    spec_json, i, j = args
    spec = ScanSpec.from_json(spec_json)
    try:
        return (i, j, _evaluate_cell(spec, i, j), None)
    except Exception as exc:  # per-cell failures never abort the scan
        return (i, j, math.nan, f"{type(exc).__name__}: {exc}")


def run_scan(spec: ScanSpec, parallelism: int = 1,
             table: ScanTable | None = None,
             checkpoint_path=None, checkpoint_every: int | None = None,
             max_cells: int | None = None) -> ScanTable:
    """Evaluate every incomplete cell of the grid.

    parallelism > 1 distributes cells over worker processes; results are
    identical to a serial run because each cell depends only on (spec, i, j).
    Pass a table from resume() to continue an interrupted scan; max_cells
    limits how many cells this call evaluates (for incremental operation);
    checkpoint_path (with optional checkpoint_every cells, default 64)
    persists progress as the scan runs.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if table is None:
        table = ScanTable.empty(spec)
    elif table.spec.digest() != spec.digest():
        raise ValueError("resumed table was produced by a different spec")

    todo = [(i, j) for i in range(spec.shape[0]) for j in range(spec.shape[1])
            if not table.done[i, j]]
    if max_cells is not None:
        todo = todo[:max_cells]
    if not todo:
        if checkpoint_path is not None:
            checkpoint(table, checkpoint_path)
        return table

    spec_json = spec.to_json()
    args = [(spec_json, i, j) for (i, j) in todo]
    if checkpoint_every is None:
        checkpoint_every = 64

    def _store(result, since_checkpoint):
        i, j, value, error = result
        if error is None:
            table.values[i, j] = value
            table.done[i, j] = True
        else:
            table.failures[(i, j)] = error
            log.warning("scan cell (%d, %d) failed: %s", i, j, error)
        since_checkpoint += 1
        if checkpoint_path is not None and since_checkpoint >= checkpoint_every:
            checkpoint(table, checkpoint_path)
            since_checkpoint = 0
        return since_checkpoint

    since = 0
    if parallelism == 1:
        for a in args:
            since = _store(_cell_task(a), since)
    else:
        # spawned workers: forking is unsafe once the threaded kernels have
        # initialized their OpenMP runtime in this process
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=parallelism, mp_context=ctx) as pool:
            for result in pool.map(_cell_task, args):
                since = _store(result, since)
    if checkpoint_path is not None:
        checkpoint(table, checkpoint_path)
    return table


def checkpoint(table: ScanTable, path) -> None:
    """Atomically persist spec + completion bitmap + value grid.

    Layout (little-endian): magic, u32 version, 32-byte sha256 of the
    canonical spec JSON, u32 spec length, spec JSON, one byte per cell
    (bitmap), then the float64 grid (row-major).
    """
    spec_json = table.spec.to_json().encode()
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(hashlib.sha256(spec_json).digest())
        fh.write(struct.pack("<I", len(spec_json)))
        fh.write(spec_json)
        fh.write(table.done.astype(np.uint8).tobytes())
        fh.write(table.values.astype("<f8").tobytes())
    os.replace(tmp, path)


def resume(path) -> ScanTable:
    """Load a checkpoint into a ScanTable (possibly partially complete).

    Raises CheckpointVersionError on a format-version mismatch and
    CorruptCheckpointError for anything malformed.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(_MAGIC) + 4 + 32 + 4:
        raise CorruptCheckpointError("checkpoint file is too short")
    if raw[:len(_MAGIC)] != _MAGIC:
        raise CorruptCheckpointError("bad magic; not a scan checkpoint")
    off = len(_MAGIC)
    (version,) = struct.unpack_from("<I", raw, off)
    off += 4
    if version != _VERSION:
        raise CheckpointVersionError(
            f"checkpoint format version {version}, expected {_VERSION}")
    digest = raw[off:off + 32]
    off += 32
    (spec_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    spec_json = raw[off:off + spec_len]
    off += spec_len
    if len(spec_json) != spec_len:
        raise CorruptCheckpointError("truncated spec block")
    if hashlib.sha256(spec_json).digest() != digest:
        raise CorruptCheckpointError("spec digest mismatch (corrupted file)")
    try:
        spec = ScanSpec.from_json(spec_json.decode())
    except (ValueError, KeyError) as exc:
        raise CorruptCheckpointError(f"unreadable spec block: {exc}") from exc
    n_cells = spec.shape[0] * spec.shape[1]
    expected = n_cells + n_cells * 8
    if len(raw) - off != expected:
        raise CorruptCheckpointError("payload size does not match the grid")
    done = np.frombuffer(raw[off:off + n_cells], dtype=np.uint8)
    done = done.reshape(spec.shape).astype(bool)
    values = np.frombuffer(raw[off + n_cells:], dtype="<f8").reshape(spec.shape)
    values = values.copy()
    values[~done] = np.nan
    return ScanTable(spec=spec, values=values, done=done.copy())
