"""Row/column selection for sparse orthonormalised updates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .rng import Rng


class Axis(enum.Enum):
    ROWS = "rows"
    COLUMNS = "columns"
    AUTO = "auto"

    def resolve(self, shape: tuple[int, int]) -> "Axis":
        """AUTO picks the shorter dimension; a square matrix selects rows."""
        if self is not Axis.AUTO:
            return self
        rows, cols = shape
        return Axis.ROWS if rows <= cols else Axis.COLUMNS


def axis_length(shape: tuple[int, int], axis: Axis) -> int:
    axis = axis.resolve(shape)
    return shape[0] if axis is Axis.ROWS else shape[1]


@dataclass(frozen=True)
class SelectionMask:
    axis: Axis
    indices: np.ndarray
    d: int

    def __post_init__(self):
        if self.axis is Axis.AUTO:
            raise ValueError("SelectionMask axis must be resolved (ROWS or COLUMNS)")
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("SelectionMask needs a non-empty 1-D index list")
        if idx[0] < 0 or idx[-1] >= self.d or np.any(np.diff(idx) <= 0):
            raise ValueError("SelectionMask indices must be strictly increasing within [0, d)")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return int(self.indices.size)

    @property
    def fraction(self) -> float:
        return self.k / self.d

    @classmethod
    def full(cls, axis: Axis, d: int) -> "SelectionMask":
        return cls(axis, np.arange(d), d)


def select_count(alpha: float, d: int) -> int:
    """``max(1, round_half_up(alpha * d))``."""
    if not (0.0 < alpha <= 1.0) or math.isnan(alpha):
        raise ConfigError(f"alpha must be in (0, 1], got {alpha}", key="alpha")
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    return min(d, max(1, math.floor(alpha * d + 0.5)))


def select_l1(m: np.ndarray, alpha: float, axis: Axis = Axis.AUTO) -> SelectionMask:
    """Top-k rows (or columns) by l1 norm; ties go to the lower index."""
    axis = axis.resolve(m.shape)
    norms = np.abs(m).sum(axis=1 if axis is Axis.ROWS else 0)
    d = norms.size
    k = select_count(alpha, d)
    if k == d:
        return SelectionMask.full(axis, d)
    top = np.argsort(-norms, kind="stable")[:k]
    return SelectionMask(axis, np.sort(top), d)


def select_random(alpha: float, d: int, rng: Rng, axis: Axis = Axis.ROWS) -> SelectionMask:
    """``k`` indices uniformly without replacement (partial Fisher-Yates)."""
    k = select_count(alpha, d)
    if k == d:
        return SelectionMask.full(axis, d)
    perm = np.arange(d)
    swaps = rng.integers(np.arange(k), d)
    for i, j in enumerate(swaps.tolist()):
        perm[i], perm[j] = perm[j], perm[i]
    return SelectionMask(axis, np.sort(perm[:k]), d)


def _check_mask(m: np.ndarray, mask: SelectionMask) -> None:
    size = m.shape[0] if mask.axis is Axis.ROWS else m.shape[1]
    if size != mask.d:
        raise ShapeError(f"mask over {mask.d} {mask.axis.value} does not fit matrix {m.shape}")


def gather(m: np.ndarray, mask: SelectionMask) -> np.ndarray:
    _check_mask(m, mask)
    if mask.axis is Axis.ROWS:
        return m[mask.indices, :]
    return m[:, mask.indices]


def scatter_update(target: np.ndarray, mask: SelectionMask, values: np.ndarray, scale: float) -> None:
    """In place: ``target[K] -= scale * values``. Unselected entries are never written."""
    _check_mask(target, mask)
    expected = (mask.k, target.shape[1]) if mask.axis is Axis.ROWS else (target.shape[0], mask.k)
    if values.shape != expected:
        raise ShapeError(f"values shape {values.shape} does not match selection {expected}")
    if scale == 0:
        return
    if mask.axis is Axis.ROWS:
        target[mask.indices, :] -= scale * values
    else:
        target[:, mask.indices] -= scale * values


def scale_rows_inplace(target: np.ndarray, mask: SelectionMask, factor: float) -> None:
    """In place: ``target[K] *= factor`` along the mask's axis."""
    _check_mask(target, mask)
    if mask.axis is Axis.ROWS:
        target[mask.indices, :] *= factor
    else:
        target[:, mask.indices] *= factor
