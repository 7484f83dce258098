"""Multi-seed training comparisons on the fixed benchmark task."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .optimizers import Algorithm, OptimizerConfig, Selection
from .trainer import RunConfig, Task, run

BENCHMARK_TASK = Task(dims=(256, 128), noise_std=0.01, batch_size=64)
BENCHMARK_STEPS = 2000
SEEDS = (0, 1, 2, 3, 4)


def named_configs() -> dict[str, OptimizerConfig]:
    cfgs = {"muon": OptimizerConfig(algorithm=Algorithm.MUON)}
    for alpha in (0.5, 0.25, 0.125):
        cfgs[f"dion2-l1-{alpha}"] = OptimizerConfig(algorithm=Algorithm.DION2, alpha=alpha)
        cfgs[f"dion2-random-{alpha}"] = OptimizerConfig(
            algorithm=Algorithm.DION2, alpha=alpha, selection=Selection.RANDOM
        )
    cfgs["dion2-fulldecay-l1-0.25"] = OptimizerConfig(algorithm=Algorithm.DION2_FULL_DECAY, alpha=0.25)
    cfgs["dion-baseline-0.25"] = OptimizerConfig(algorithm=Algorithm.DION_BASELINE, rank_fraction=0.25)
    return cfgs


def final_loss(task: Task, cfg: OptimizerConfig, seed: int, total_steps: int = BENCHMARK_STEPS) -> float:
    """Final-step train loss; ``seed`` drives both the dataset and the optimizer."""
    run_cfg = RunConfig(
        task=replace(task, dataset_seed=seed),
        optimizer=replace(cfg, seed=seed),
        total_steps=total_steps,
        eval_every=total_steps,
    )
    return run(run_cfg)[-1].train_loss


def final_losses(task: Task, cfg: OptimizerConfig, seeds=SEEDS, total_steps: int = BENCHMARK_STEPS) -> np.ndarray:
    return np.array([final_loss(task, cfg, s, total_steps) for s in seeds])


@dataclass(frozen=True)
class Comparison:
    """``a`` vs ``b`` over the same seeds. ``diff = mean(b) - mean(a)``;
    ``se`` is the standard error of the mean paired difference."""

    mean_a: float
    mean_b: float
    diff: float
    se: float

    @property
    def z(self) -> float:
        if self.se > 0:
            return self.diff / self.se
        return 0.0 if self.diff == 0 else math.copysign(math.inf, self.diff)


def compare(a: np.ndarray, b: np.ndarray) -> Comparison:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("paired comparison needs two equal-length samples of size >= 2")
    d = b - a
    se = float(np.std(d, ddof=1) / math.sqrt(d.size))
    return Comparison(float(a.mean()), float(b.mean()), float(d.mean()), se)


def significantly_lower(a, b, n_se: float = 2.0) -> tuple[bool, Comparison]:
    """True when ``mean(a)`` is below ``mean(b)`` by more than ``n_se`` standard errors."""
    c = compare(a, b)
    return c.diff > n_se * c.se, c


def not_worse(a, b, n_se: float = 2.0) -> tuple[bool, Comparison]:
    """One-sided ``mean(a) <= mean(b)``: fails only if ``a`` exceeds ``b`` by more than ``n_se`` SE."""
    c = compare(a, b)
    return -c.diff <= n_se * c.se, c


def parity(a, b, n_se: float = 2.0) -> tuple[bool, Comparison]:
    """Means differ by less than ``n_se`` standard errors (identical samples count as equal)."""
    c = compare(a, b)
    return c.diff == 0 or abs(c.diff) < n_se * c.se, c
