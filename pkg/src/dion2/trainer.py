"""Desk-scale training harness on synthetic regression tasks.

Two teacher-student tasks with hand-derived gradients stand in for a
language model: what the optimizer sees is still a set of dense weight
matrices and their gradients, but there is no autograd or data pipeline in
the way, and every run is reproducible bit for bit.
"""

from __future__ import annotations

import csv
import enum
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import optimizers as opt
from .errors import ConfigError, NumericalError
from .optimizers import OptimizerConfig, ParamState
from .rng import DOMAIN_BATCH, DOMAIN_INIT, DOMAIN_TEACHER, Rng

CSV_HEADER = ("step", "train_loss", "lr", "optimizer_time_ns", "selected_fraction")


class TaskKind(enum.Enum):
    TEACHER_STUDENT_LINEAR = "teacher_student_linear"
    TWO_LAYER_MLP = "two_layer_mlp"


@dataclass(frozen=True)
class Task:
    """``dims`` lists layer widths from input to output.

    Linear: ``[fan_in, fan_out]``; MLP: ``[fan_in, hidden, fan_out]``.
    """

    kind: TaskKind = TaskKind.TEACHER_STUDENT_LINEAR
    dims: tuple[int, ...] = (256, 128)
    dataset_seed: int = 0
    batch_size: int = 64
    noise_std: float = 0.01

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        want = 2 if self.kind is TaskKind.TEACHER_STUDENT_LINEAR else 3
        if len(dims) != want:
            raise ConfigError(f"{self.kind.value} needs {want} layer widths, got {list(dims)}", key="dims")
        if any(d < 2 for d in dims):
            raise ConfigError(f"all layer widths must be >= 2, got {list(dims)}", key="dims")
        if self.batch_size < 1:
            raise ConfigError(f"must be >= 1, got {self.batch_size}", key="batch_size")
        if not self.noise_std >= 0:
            raise ConfigError(f"must be >= 0, got {self.noise_std}", key="noise_std")

    @property
    def fan_in(self) -> int:
        return self.dims[0]

    @property
    def fan_out(self) -> int:
        return self.dims[-1]


@dataclass(frozen=True)
class RunConfig:
    task: Task = field(default_factory=Task)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    total_steps: int = 2000
    eval_every: int = 100
    log_path: str | None = None

    def __post_init__(self):
        if self.total_steps < 4:
            raise ConfigError(f"must be >= 4, got {self.total_steps}", key="total_steps")
        if self.eval_every < 1:
            raise ConfigError(f"must be >= 1, got {self.eval_every}", key="eval_every")


@dataclass(frozen=True)
class StepReport:
    step: int
    train_loss: float
    lr: float
    optimizer_time_ns: int
    selected_fraction: float


def _init_matrix(rows: int, cols: int, rng: Rng) -> np.ndarray:
    return rng.normal((rows, cols)) / np.sqrt(cols)


def init_params(task: Task, seed: int, domain: int = DOMAIN_INIT) -> dict[str, np.ndarray]:
    """Gaussian / sqrt(fan_in) weights, zero biases."""
    if task.kind is TaskKind.TEACHER_STUDENT_LINEAR:
        d_in, d_out = task.dims
        return {"W": _init_matrix(d_out, d_in, Rng.for_stream(seed, 0, 0, domain))}
    d_in, hidden, d_out = task.dims
    return {
        "W1": _init_matrix(hidden, d_in, Rng.for_stream(seed, 0, 0, domain)),
        "b1": np.zeros(hidden),
        "W2": _init_matrix(d_out, hidden, Rng.for_stream(seed, 1, 0, domain)),
    }


def teacher_params(task: Task) -> dict[str, np.ndarray]:
    params = init_params(task, task.dataset_seed, DOMAIN_TEACHER)
    if "b1" in params:
        params["b1"] = 0.5 * Rng.for_stream(task.dataset_seed, 2, 0, DOMAIN_TEACHER).normal(params["b1"].shape)
    return params


def forward(task: Task, params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    if task.kind is TaskKind.TEACHER_STUDENT_LINEAR:
        return params["W"] @ x
    h = np.tanh(params["W1"] @ x + params["b1"][:, None])
    return params["W2"] @ h


def gen_batch(task: Task, step: int, rng: Rng | None = None, teacher: dict | None = None):
    """Inputs ``x`` (fan_in x batch) with unit-RMS columns and teacher targets.

    The stream defaults to ``(dataset_seed, step)``, so a batch depends only
    on the task and the step index.
    """
    if rng is None:
        rng = Rng.for_stream(task.dataset_seed, 0, step, DOMAIN_BATCH)
    if teacher is None:
        teacher = teacher_params(task)
    x = rng.normal((task.fan_in, task.batch_size))
    x /= np.sqrt(np.mean(x * x, axis=0, keepdims=True))
    y = forward(task, teacher, x) + task.noise_std * rng.normal((task.fan_out, task.batch_size))
    return x, y


def loss_and_grads(task: Task, params: dict[str, np.ndarray], batch) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over all output entries, with exact gradients."""
    x, y = batch
    n = y.size
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grads = _mse_and_grads(task, params, x, y, n)
    if not np.isfinite(loss):
        raise NumericalError("non-finite loss")
    return loss, grads


def _mse_and_grads(task, params, x, y, n):
    if task.kind is TaskKind.TEACHER_STUDENT_LINEAR:
        r = params["W"] @ x - y
        loss = float(np.sum(r * r) / n)
        grads = {"W": (2.0 / n) * (r @ x.T)}
    else:
        h = np.tanh(params["W1"] @ x + params["b1"][:, None])
        r = params["W2"] @ h - y
        loss = float(np.sum(r * r) / n)
        dout = (2.0 / n) * r
        dz = (params["W2"].T @ dout) * (1.0 - h * h)
        grads = {"W1": dz @ x.T, "b1": dz.sum(axis=1), "W2": dout @ h.T}
    return loss, grads


class Trainer:
    """Holds parameters and per-parameter optimizer state for one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.task = cfg.task
        self.teacher = teacher_params(cfg.task)
        self.params = init_params(cfg.task, cfg.optimizer.seed)
        self.states = {
            name: ParamState.zeros_like(p, param_id=i) for i, (name, p) in enumerate(self.params.items())
        }
        self.step_index = 0
        # Hook for tests: called as on_update(name, w_before, g, state_before_momentum, outcome).
        self.on_update = None

    def train_step(self) -> StepReport:
        cfg = self.cfg
        t = self.step_index
        batch = gen_batch(self.task, t, teacher=self.teacher)
        try:
            loss, grads = loss_and_grads(self.task, self.params, batch)
        except NumericalError as exc:
            raise NumericalError(f"step {t}: {exc}") from exc
        lr = opt.lr_schedule(t, cfg.total_steps, cfg.optimizer.eta)
        elapsed = 0
        fractions = []
        for name, w in self.params.items():
            state = self.states[name]
            snapshot = (w.copy(), state.momentum.copy()) if self.on_update else None
            try:
                t0 = time.perf_counter_ns()
                outcome = opt.step(w, grads[name], state, cfg.optimizer, lr=lr)
                elapsed += time.perf_counter_ns() - t0
            except NumericalError as exc:
                raise NumericalError(f"step {t}, parameter {name!r}: {exc}") from exc
            if w.ndim == 2:
                fractions.append(outcome.selected_fraction)
            if self.on_update:
                self.on_update(name, snapshot[0], grads[name], snapshot[1], outcome)
        self.step_index += 1
        frac = float(np.mean(fractions)) if fractions else 1.0
        return StepReport(t, loss, lr, elapsed, frac)


def run(cfg: RunConfig) -> list[StepReport]:
    """Train for ``total_steps``; report every ``eval_every`` steps and the last step."""
    trainer = Trainer(cfg)
    reports = []
    for t in range(cfg.total_steps):
        report = trainer.train_step()
        if t % cfg.eval_every == 0 or t == cfg.total_steps - 1:
            reports.append(report)
    if cfg.log_path:
        write_reports_csv(reports, cfg.log_path)
    return reports


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def reports_to_csv(reports: list[StepReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow([_fmt(r.step), _fmt(r.train_loss), _fmt(r.lr), _fmt(r.optimizer_time_ns), _fmt(r.selected_fraction)])
    return buf.getvalue()


def write_reports_csv(reports: list[StepReport], path) -> None:
    Path(path).write_text(reports_to_csv(reports), newline="")
