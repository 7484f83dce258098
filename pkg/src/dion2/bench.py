"""Optimizer step-time micro-benchmark and the data-parallel sync volume model."""

from __future__ import annotations

import csv
import enum
import io
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import optimizers as opt
from .errors import ConfigError
from .optimizers import Algorithm, OptimizerConfig, ParamState, Selection
from .orthonorm import NewtonSchulzParams
from .rng import DOMAIN_BENCH, Rng
from .selection import select_count

CSV_HEADER = ("algorithm", "rows", "cols", "alpha", "mean_step_ns", "std_step_ns")

# name -> (algorithm, selection)
BENCH_ALGORITHMS = {
    "muon": (Algorithm.MUON, Selection.L1),
    "dion2-l1": (Algorithm.DION2, Selection.L1),
    "dion2-random": (Algorithm.DION2, Selection.RANDOM),
}


@dataclass(frozen=True)
class BenchConfig:
    """Muon does not depend on alpha and is timed once per shape (alpha=1)."""

    dims: tuple[tuple[int, int], ...] = ((1024, 1024), (2048, 2048))
    alphas: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125)
    warmup_steps: int = 80
    measured_steps: int = 20
    repeats: int = 3
    algorithms: tuple[str, ...] = ("muon", "dion2-l1", "dion2-random")
    # float32 is for timing realism only; correctness tests run in float64.
    dtype: str = "float64"
    ns_params: NewtonSchulzParams = field(default_factory=NewtonSchulzParams.quintic)
    seed: int = 0
    threads: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple((int(r), int(c)) for r, c in self.dims))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if any(r < 1 or c < 1 for r, c in self.dims):
            raise ConfigError("dimensions must be positive", key="dims")
        for a in self.alphas:
            if not 0.0 < a <= 1.0:
                raise ConfigError(f"must be in (0, 1], got {a}", key="alphas")
        if self.warmup_steps < 0:
            raise ConfigError("must be >= 0", key="warmup_steps")
        if self.measured_steps < 1:
            raise ConfigError("must be >= 1", key="measured_steps")
        if self.repeats < 1:
            raise ConfigError("must be >= 1", key="repeats")
        unknown = set(self.algorithms) - set(BENCH_ALGORITHMS)
        if unknown:
            raise ConfigError(f"unknown algorithms {sorted(unknown)}", key="algorithms")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError(f"must be 'float64' or 'float32', got {self.dtype!r}", key="dtype")


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    rows: int
    cols: int
    alpha: float
    mean_step_ns: float
    std_step_ns: float
    repeat_means_ns: tuple[float, ...] = ()

    @property
    def median_repeat_ns(self) -> float:
        return float(statistics.median(self.repeat_means_ns))


def _time_repeat(shape, alpha, name, cfg: BenchConfig, repeat: int) -> list[int]:
    algorithm, selection = BENCH_ALGORITHMS[name]
    ocfg = OptimizerConfig(
        algorithm=algorithm, alpha=alpha, selection=selection, ns_params=cfg.ns_params, seed=cfg.seed
    )
    dtype = np.dtype(cfg.dtype)
    rng = Rng.for_stream(cfg.seed, repeat, 0, DOMAIN_BENCH)
    w = (rng.normal(shape) / np.sqrt(shape[1])).astype(dtype)
    state = ParamState.zeros_like(w)
    times = []
    for i in range(cfg.warmup_steps + cfg.measured_steps):
        g = rng.normal(shape).astype(dtype)
        t0 = time.perf_counter_ns()
        opt.step(w, g, state, ocfg)
        dt = time.perf_counter_ns() - t0
        if i >= cfg.warmup_steps:
            times.append(dt)
    return times


def bench_step_time(cfg: BenchConfig) -> list[BenchRow]:
    """Time optimizer steps on synthetic Gaussian gradients.

    Rows come out ordered by shape, then algorithm (config order), then
    alpha (config order). Gradient generation is outside the timed region.
    """
    out = []
    for shape in cfg.dims:
        for name in cfg.algorithms:
            alphas = (1.0,) if name == "muon" else cfg.alphas
            for alpha in alphas:
                jobs = range(cfg.repeats)
                if cfg.threads and cfg.repeats > 1:
                    with ThreadPoolExecutor(max_workers=cfg.repeats) as pool:
                        per_repeat = list(pool.map(lambda r: _time_repeat(shape, alpha, name, cfg, r), jobs))
                else:
                    per_repeat = [_time_repeat(shape, alpha, name, cfg, r) for r in jobs]
                flat = [t for ts in per_repeat for t in ts]
                std = statistics.stdev(flat) if len(flat) > 1 else 0.0
                out.append(
                    BenchRow(
                        name, shape[0], shape[1], alpha,
                        float(statistics.fmean(flat)), float(std),
                        tuple(float(statistics.fmean(ts)) for ts in per_repeat),
                    )
                )
    return out


def _row_values(r: BenchRow) -> list:
    return [r.algorithm, r.rows, r.cols, r.alpha, r.mean_step_ns, r.std_step_ns]


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.algorithm, r.rows, r.cols, format(r.alpha, ".17g"),
                         format(r.mean_step_ns, ".17g"), format(r.std_step_ns, ".17g")])
    return buf.getvalue()


def rows_to_json(rows: list[BenchRow]) -> str:
    return json.dumps([dict(zip(CSV_HEADER, _row_values(r))) for r in rows], indent=2) + "\n"


class SyncMode(enum.Enum):
    FULL_MOMENTUM = "full_momentum"
    SELECTED_SUBMATRIX = "selected_submatrix"


INDEX_BYTES = 8


def comm_volume(
    rows: int,
    cols: int,
    alpha: float | None,
    bytes_per_elem: int,
    sync: SyncMode,
    selection: Selection = Selection.L1,
) -> int:
    """Bytes one data-parallel sync of a ``rows x cols`` momentum moves.

    Submatrix sync selects along the shorter dimension. l1 selection must
    also ship the ``k`` chosen indices; seeded random selection ships none
    because every replica draws the same mask.
    """
    if rows < 1 or cols < 1 or bytes_per_elem < 1:
        raise ConfigError("dimensions and element size must be positive")
    if sync is SyncMode.FULL_MOMENTUM:
        return rows * cols * bytes_per_elem
    if alpha is None:
        raise ConfigError("alpha is required for submatrix sync", key="alpha")
    short, long = min(rows, cols), max(rows, cols)
    k = select_count(alpha, short)
    total = k * long * bytes_per_elem
    if selection is Selection.L1:
        total += k * INDEX_BYTES
    return total

