"""Muon, Dion2, the Dion low-rank baseline and momentum SGD.

Each step function mutates the parameter ``w`` and its :class:`ParamState`
in place and returns an :class:`UpdateOutcome` describing what was applied.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateInputError, NumericalError, ShapeError
from .linalg import gram_schmidt
from .orthonorm import DEFAULT_NS, NewtonSchulzParams, newton_schulz_auto
from .rng import DOMAIN_SELECT, DOMAIN_SUBSPACE, Rng
from .selection import (
    Axis,
    SelectionMask,
    gather,
    scale_rows_inplace,
    scatter_update,
    select_count,
    select_l1,
    select_random,
)

log = logging.getLogger(__name__)


class Algorithm(enum.Enum):
    MUON = "muon"
    DION2 = "dion2"
    DION_BASELINE = "dion_baseline"
    DION2_FULL_DECAY = "dion2_full_decay"
    MOMENTUM_SGD = "momentum_sgd"


class Selection(enum.Enum):
    L1 = "l1"
    RANDOM = "random"


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: Algorithm = Algorithm.MUON
    eta: float = 0.02
    mu: float = 0.95
    alpha: float = 1.0
    selection: Selection = Selection.L1
    axis: Axis = Axis.AUTO
    ns_params: NewtonSchulzParams = DEFAULT_NS
    rank_fraction: float = 0.25
    seed: int = 0
    # Scale sub-updates by the submatrix's own sqrt(fan-out / fan-in).
    submatrix_scale: bool = False
    # Reserved; Nesterov momentum is not implemented.
    nesterov: bool = False

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"must be a positive finite number, got {self.eta}", key="eta")
        if not (0.0 <= self.mu < 1.0):
            raise ConfigError(f"must be in [0, 1), got {self.mu}", key="mu")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"must be in (0, 1], got {self.alpha}", key="alpha")
        if not (0.0 < self.rank_fraction <= 1.0):
            raise ConfigError(f"must be in (0, 1], got {self.rank_fraction}", key="rank_fraction")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"must be a 64-bit unsigned integer, got {self.seed}", key="seed")
        if self.nesterov:
            raise ConfigError("Nesterov momentum is reserved and not implemented", key="nesterov")

    def with_(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


@dataclass
class ParamState:
    momentum: np.ndarray
    step: int = 0
    param_id: int = 0
    subspace: np.ndarray | None = None

    @classmethod
    def zeros_like(cls, w: np.ndarray, param_id: int = 0) -> "ParamState":
        return cls(momentum=np.zeros_like(w), param_id=param_id)


@dataclass
class UpdateOutcome:
    """What a step applied: ``w[mask] -= scale * orthonormalized``.

    ``mask`` is None for full-matrix updates. ``selected_fraction`` is
    ``k / d`` for Dion2, ``r / min(rows, cols)`` for the Dion baseline, 1
    otherwise.
    """

    mask: SelectionMask | None
    orthonormalized: np.ndarray
    scale: float
    selected_fraction: float = 1.0
    extra: dict = field(default_factory=dict)

    def applied_update(self, shape: tuple[int, int]) -> np.ndarray:
        """The full-size matrix that was subtracted from the parameter."""
        if self.mask is None:
            return self.scale * self.orthonormalized
        out = np.zeros(shape, dtype=self.orthonormalized.dtype)
        if self.mask.axis is Axis.ROWS:
            out[self.mask.indices, :] = self.scale * self.orthonormalized
        else:
            out[:, self.mask.indices] = self.scale * self.orthonormalized
        return out


def update_scale(eta: float, shape: tuple[int, int]) -> float:
    rows, cols = shape
    return eta * math.sqrt(rows / cols)


def _check(w: np.ndarray, g: np.ndarray, state: ParamState, matrix: bool = True) -> None:
    if matrix and w.ndim != 2:
        raise ShapeError(f"expected a matrix parameter, got shape {w.shape}")
    if w.shape != g.shape or state.momentum.shape != w.shape:
        raise ShapeError(
            f"shape mismatch: param {w.shape}, grad {g.shape}, momentum {state.momentum.shape}"
        )
    if not np.all(np.isfinite(g)):
        raise NumericalError(f"non-finite gradient at step {state.step}")


def muon_step(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None = None) -> UpdateOutcome:
    """Heavy-ball momentum, orthonormalise the whole momentum, full update."""
    _check(w, g, state)
    eta = cfg.eta if lr is None else lr
    m = state.momentum
    m *= cfg.mu
    m += g
    o = newton_schulz_auto(m, cfg.ns_params)
    scale = update_scale(eta, w.shape)
    w -= scale * o
    state.step += 1
    return UpdateOutcome(None, o, scale)


def _select(m: np.ndarray, state: ParamState, cfg: OptimizerConfig) -> SelectionMask:
    axis = cfg.axis.resolve(m.shape)
    if cfg.selection is Selection.L1:
        return select_l1(m, cfg.alpha, axis)
    d = m.shape[0] if axis is Axis.ROWS else m.shape[1]
    rng = Rng.for_stream(cfg.seed, state.param_id, state.step, DOMAIN_SELECT)
    return select_random(cfg.alpha, d, rng, axis)


def _dion2(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None, full_decay: bool) -> UpdateOutcome:
    _check(w, g, state)
    eta = cfg.eta if lr is None else lr
    m = state.momentum
    m += g
    mask = _select(m, state, cfg)
    o = newton_schulz_auto(gather(m, mask), cfg.ns_params)
    if full_decay:
        m *= cfg.mu
    else:
        scale_rows_inplace(m, mask, cfg.mu)
    scale = update_scale(eta, o.shape if cfg.submatrix_scale else w.shape)
    scatter_update(w, mask, o, scale)
    state.step += 1
    return UpdateOutcome(mask, o, scale, mask.fraction)


def dion2_step(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None = None) -> UpdateOutcome:
    """Accumulate, select, orthonormalise the selection, decay only the
    selected momentum, and update only the selected rows/columns of ``w``."""
    return _dion2(w, g, state, cfg, lr, full_decay=False)


def dion2_fulldecay_step(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None = None) -> UpdateOutcome:
    """Ablation: as :func:`dion2_step` but the whole momentum is decayed."""
    return _dion2(w, g, state, cfg, lr, full_decay=True)


def dion_rank(shape: tuple[int, int], rank_fraction: float) -> int:
    return select_count(rank_fraction, min(shape))


def init_subspace(shape: tuple[int, int], rank: int, seed: int, param_id: int, step: int = 0) -> np.ndarray:
    """Random ``cols x rank`` orthonormal basis."""
    rng = Rng.for_stream(seed, param_id, step, DOMAIN_SUBSPACE)
    while True:
        try:
            return gram_schmidt(rng.normal((shape[1], rank)))
        except DegenerateInputError:  # pragma: no cover - measure-zero event
            continue


def dion_baseline_step(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None = None) -> UpdateOutcome:
    """Low-rank orthonormalised update with error feedback.

    ``P = M V``, ``O = NS(P) V^T``, ``M -= (1 - mu) P V^T``, then one
    power-iteration refresh ``V <- orth(M^T P)``.
    """
    _check(w, g, state)
    eta = cfg.eta if lr is None else lr
    r = dion_rank(w.shape, cfg.rank_fraction)
    if state.subspace is None:
        state.subspace = init_subspace(w.shape, r, cfg.seed, state.param_id)
    v = state.subspace
    if v.shape != (w.shape[1], r):
        raise ShapeError(f"subspace shape {v.shape} does not match ({w.shape[1]}, {r})")
    m = state.momentum
    m += g
    p = m @ v
    o = newton_schulz_auto(p, cfg.ns_params) @ v.T
    m -= (1.0 - cfg.mu) * (p @ v.T)
    scale = update_scale(eta, w.shape)
    w -= scale * o
    try:
        state.subspace = gram_schmidt(m.T @ p)
    except DegenerateInputError as exc:
        log.warning("param %d step %d: subspace refresh degenerate (%s); reinitialising", state.param_id, state.step, exc)
        state.subspace = init_subspace(w.shape, r, cfg.seed, state.param_id, state.step + 1)
    state.step += 1
    return UpdateOutcome(None, o, scale, r / min(w.shape))


def momentum_sgd_step(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None = None) -> UpdateOutcome:
    _check(w, g, state, matrix=False)
    eta = cfg.eta if lr is None else lr
    m = state.momentum
    m *= cfg.mu
    m += g
    w -= eta * m
    state.step += 1
    return UpdateOutcome(None, m.copy(), eta)


_STEPS = {
    Algorithm.MUON: muon_step,
    Algorithm.DION2: dion2_step,
    Algorithm.DION2_FULL_DECAY: dion2_fulldecay_step,
    Algorithm.DION_BASELINE: dion_baseline_step,
    Algorithm.MOMENTUM_SGD: momentum_sgd_step,
}


def step(w, g, state: ParamState, cfg: OptimizerConfig, lr: float | None = None) -> UpdateOutcome:
    """Dispatch on ``cfg.algorithm``; non-matrix parameters always use momentum SGD."""
    if w.ndim != 2:
        return momentum_sgd_step(w, g, state, cfg, lr)
    return _STEPS[cfg.algorithm](w, g, state, cfg, lr)


def lr_schedule(step: int, total_steps: int, base_eta: float) -> float:
    """Constant, then linear decay over the final 25% of steps.

    Steps before ``ceil(0.75 * total_steps)`` use ``base_eta``; from there the
    rate is ``base_eta * (total_steps - step) / (0.25 * total_steps)``, so the
    last step trains at ``base_eta / (0.25 * total_steps)``, never zero.
    """
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps})")
    start = math.ceil(0.75 * total_steps)
    if step < start:
        return base_eta
    return base_eta * (total_steps - step) / (0.25 * total_steps)
