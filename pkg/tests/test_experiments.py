import math

import numpy as np
import pytest

from dion2.experiments import BENCHMARK_TASK, compare, final_loss, named_configs, not_worse, parity, significantly_lower
from dion2.optimizers import Algorithm


def test_benchmark_task_shape():
    # Teacher is 128 x 256: dims list input width first.
    assert BENCHMARK_TASK.dims == (256, 128) and BENCHMARK_TASK.noise_std == 0.01 and BENCHMARK_TASK.batch_size == 64


def test_named_configs():
    cfgs = named_configs()
    assert cfgs["dion2-random-0.125"].alpha == 0.125
    assert cfgs["dion2-fulldecay-l1-0.25"].algorithm is Algorithm.DION2_FULL_DECAY


def test_compare_is_paired():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    b = a + np.array([0.10, 0.11, 0.09, 0.10])
    c = compare(a, b)
    assert c.diff == pytest.approx(0.1)
    assert c.se == pytest.approx(np.std([0.10, 0.11, 0.09, 0.10], ddof=1) / 2)
    # Seed-to-seed spread cancels, so the shift is highly significant.
    assert significantly_lower(a, b)[0]
    assert not parity(a, b)[0]


def test_not_worse_one_sided():
    a = np.array([1.0, 1.1, 0.9])
    assert not_worse(a, a + 5)[0]
    assert not_worse(a, a + np.array([0.01, -0.01, 0.0]))[0]
    assert not not_worse(a + 5, a + np.array([0.01, -0.01, 0.0]))[0]


def test_identical_samples():
    a = np.array([1.0, 2.0])
    c = compare(a, a)
    assert c.se == 0 and c.z == 0 and parity(a, a)[0] and not significantly_lower(a, a)[0]
    assert math.isinf(compare(a, a + 1).z)


def test_compare_needs_pairs():
    with pytest.raises(ValueError):
        compare(np.ones(1), np.ones(1))
    with pytest.raises(ValueError):
        compare(np.ones(3), np.ones(2))


def test_final_loss_seed_drives_everything():
    cfg = named_configs()["dion2-random-0.25"]
    a = final_loss(BENCHMARK_TASK, cfg, 3, total_steps=8)
    assert a == final_loss(BENCHMARK_TASK, cfg, 3, total_steps=8)
    assert a != final_loss(BENCHMARK_TASK, cfg, 4, total_steps=8)
