import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dion2.errors import ConfigError, ShapeError
from dion2.rng import Rng, stream_key
from dion2.selection import (
    Axis,
    SelectionMask,
    gather,
    scatter_update,
    select_count,
    select_l1,
    select_random,
)


@pytest.mark.parametrize("alpha,d,k", [(0.125, 2048, 256), (1.0, 7, 7), (0.25, 10, 3), (0.01, 5, 1), (0.5, 3, 2)])
def test_select_count(alpha, d, k):
    assert select_count(alpha, d) == k


@pytest.mark.parametrize("alpha", [0.0, 1.5, -0.1, float("nan")])
def test_select_count_rejects_alpha(alpha):
    with pytest.raises(ConfigError, match="alpha"):
        select_count(alpha, 4)


def test_axis_auto():
    assert Axis.AUTO.resolve((3, 5)) is Axis.ROWS
    assert Axis.AUTO.resolve((5, 3)) is Axis.COLUMNS
    assert Axis.AUTO.resolve((4, 4)) is Axis.ROWS
    assert Axis.COLUMNS.resolve((3, 5)) is Axis.COLUMNS


def test_mask_validation():
    with pytest.raises(ValueError):
        SelectionMask(Axis.ROWS, np.array([2, 1]), 4)
    with pytest.raises(ValueError):
        SelectionMask(Axis.ROWS, np.array([], dtype=int), 4)
    with pytest.raises(ValueError):
        SelectionMask(Axis.AUTO, np.array([0]), 4)
    mask = SelectionMask(Axis.ROWS, [0, 3], 4)
    with pytest.raises(ValueError):
        mask.indices[0] = 1


class TestL1:
    def test_hand_example(self):
        m = np.array([[5.0, 0], [1, 0], [4, -5], [0, 9]])
        mask = select_l1(m, 0.5, Axis.ROWS)
        assert mask.indices.tolist() == [2, 3]

    def test_full(self, gen):
        assert select_l1(gen.standard_normal((6, 9)), 1.0).indices.tolist() == list(range(6))

    def test_auto_picks_columns_of_tall(self, gen):
        m = gen.standard_normal((64, 32))
        mask = select_l1(m, 0.25)
        norms = np.abs(m).sum(axis=0)
        oracle = sorted(range(32), key=lambda j: (-norms[j], j))[:8]
        assert mask.axis is Axis.COLUMNS and mask.indices.tolist() == sorted(oracle)

    def test_ties_prefer_lower_index(self):
        m = np.ones((6, 2))
        assert select_l1(m, 0.5, Axis.ROWS).indices.tolist() == [0, 1, 2]

    def test_oracle_suite(self):
        gen = np.random.default_rng(2024)
        for case in range(1000):
            rows, cols = gen.integers(1, 12, size=2)
            if case % 3 == 0:
                # Small integers force duplicate norms.
                m = gen.integers(-2, 3, size=(rows, cols)).astype(float)
            else:
                m = gen.standard_normal((rows, cols))
            alpha = float(gen.choice([0.125, 0.25, 0.5, 0.75, 1.0, gen.uniform(0.01, 1)]))
            axis = [Axis.ROWS, Axis.COLUMNS, Axis.AUTO][case % 3]
            mask = select_l1(m, alpha, axis)
            resolved = axis.resolve(m.shape)
            norms = [sum(abs(x) for x in line) for line in (m if resolved is Axis.ROWS else m.T)]
            k = select_count(alpha, len(norms))
            oracle = sorted(sorted(range(len(norms)), key=lambda i: (-norms[i], i))[:k])
            assert mask.axis is resolved
            assert mask.indices.tolist() == oracle, case


class TestRandom:
    def test_alpha_one_is_identity(self):
        for seed in range(5):
            assert select_random(1.0, 9, Rng(seed)).indices.tolist() == list(range(9))

    def test_reproducible(self):
        a = select_random(0.5, 4, Rng(3, stream_key(1, 2)))
        b = select_random(0.5, 4, Rng(3, stream_key(1, 2)))
        assert a.k == 2 and np.array_equal(a.indices, b.indices)

    def test_binomial_bound(self):
        counts = np.zeros(100)
        for step in range(100_000):
            counts[select_random(0.25, 100, Rng(0, stream_key(0, step))).indices] += 1
        bound = 3 * np.sqrt(25_000 * 0.75)
        assert np.all(np.abs(counts - 25_000) <= bound)

    def test_chi_squared_uniform(self):
        d, draws = 64, 100_000
        counts = np.zeros(d)
        for seed in range(draws):
            counts[select_random(0.25, d, Rng(seed, stream_key(5, 0))).indices] += 1
        expected = draws * 16 / d
        # Each draw picks 16 of 64 indices, so per-index counts are binomial;
        # the variance correction keeps the chi-squared calibrated.
        chi2 = np.sum((counts - expected) ** 2 / (expected * (1 - 16 / d)))
        assert stats.chi2.sf(chi2, d - 1) > 0.001

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 200), st.floats(0.001, 1.0), st.integers(0, 2**63))
    def test_mask_shape(self, d, alpha, seed):
        mask = select_random(alpha, d, Rng(seed))
        assert mask.k == select_count(alpha, d)
        assert np.all(np.diff(mask.indices) > 0) and mask.indices[-1] < d


class TestGatherScatter:
    def test_full_gather_copies(self, gen):
        m = gen.standard_normal((3, 4))
        out = gather(m, SelectionMask.full(Axis.ROWS, 3))
        assert np.array_equal(out, m) and out is not m

    def test_first_row(self):
        m = np.arange(6.0).reshape(3, 2)
        assert gather(m, SelectionMask(Axis.ROWS, [0], 3)).tolist() == [[0.0, 1.0]]

    def test_columns(self):
        m = np.arange(6.0).reshape(2, 3)
        assert gather(m, SelectionMask(Axis.COLUMNS, [0, 2], 3)).tolist() == [[0, 2], [3, 5]]

    @pytest.mark.parametrize("axis", [Axis.ROWS, Axis.COLUMNS])
    def test_round_trip(self, gen, axis):
        m = gen.standard_normal((7, 7))
        mask = SelectionMask(axis, [1, 4, 5], 7)
        out = np.zeros_like(m)
        scatter_update(out, mask, -gather(m, mask), 1.0)
        selected = np.zeros(m.shape, bool)
        if axis is Axis.ROWS:
            selected[[1, 4, 5], :] = True
        else:
            selected[:, [1, 4, 5]] = True
        assert np.array_equal(out[selected], m[selected])
        assert not out[~selected].any()

    def test_scale_zero_bit_exact(self, gen):
        t = gen.standard_normal((5, 5))
        before = t.copy()
        scatter_update(t, SelectionMask(Axis.ROWS, [0, 2], 5), np.full((2, 5), np.nan), 0.0)
        assert before.tobytes() == t.tobytes()

    def test_full_mask_subtracts(self, gen):
        t, v = gen.standard_normal((4, 3)), gen.standard_normal((4, 3))
        want = t - v
        scatter_update(t, SelectionMask.full(Axis.ROWS, 4), v, 1.0)
        assert np.array_equal(t, want)

    def test_unselected_bitwise(self, gen):
        for _ in range(20):
            t = gen.standard_normal((16, 16))
            before = t.copy()
            mask = select_random(0.25, 16, Rng(int(gen.integers(1 << 32))), Axis.ROWS)
            scatter_update(t, mask, gen.standard_normal((mask.k, 16)), 0.37)
            changed = np.any(t.view(np.uint64) != before.view(np.uint64), axis=1)
            assert set(np.flatnonzero(changed)) <= set(mask.indices.tolist())

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            scatter_update(np.zeros((4, 3)), SelectionMask(Axis.ROWS, [0], 4), np.zeros((2, 3)), 1.0)
        with pytest.raises(ShapeError):
            gather(np.zeros((4, 3)), SelectionMask(Axis.ROWS, [0], 5))
