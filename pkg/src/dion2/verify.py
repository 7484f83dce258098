"""Invariant verification battery behind ``dion2 verify``.

Every suite returns ``(passed, detail)``; details are deterministic so two
runs print identical output. ``quick`` keeps oracle sizes at 64 or below;
``full`` adds 256-512 oracle sizes and the multi-seed training orderings.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy import stats

from . import optimizers as opt
from .bench import SyncMode, comm_volume
from .experiments import (
    BENCHMARK_TASK,
    final_losses,
    named_configs,
    not_worse,
    parity,
    significantly_lower,
)
from .linalg import frobenius_norm, gram_schmidt, jacobi_svd, matmul, spectral_norm_estimate
from .optimizers import Algorithm, OptimizerConfig, ParamState, Selection
from .orthonorm import newton_schulz, newton_schulz_auto, rms_to_rms_norm
from .rng import Rng
from .selection import Axis, SelectionMask, scatter_update, select_l1, select_random
from .trainer import RunConfig, Task, TaskKind, Trainer, gen_batch, init_params, loss_and_grads


def _gen(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag])


def suite_matmul(level, seed):
    g = _gen(seed, 1)
    worst = 0.0
    for m, k, n in [(7, 5, 3), (16, 9, 12)] + ([(64, 33, 48)] if level == "full" else []):
        a, b = g.standard_normal((m, k)), g.standard_normal((k, n))
        ref = np.array([[sum(a[i, p] * b[p, j] for p in range(k)) for j in range(n)] for i in range(m)])
        worst = max(worst, float(np.abs(matmul(a, b) - ref).max()))
    return worst <= 1e-12, f"max |err| {worst:.1e}"


def suite_jacobi(level, seed):
    g = _gen(seed, 2)
    shapes = [(20, 12), (12, 20), (64, 64), (64, 17)]
    if level == "full":
        shapes += [(256, 256), (512, 256)]
    worst = 0.0
    for shape in shapes:
        a = g.standard_normal(shape)
        s = jacobi_svd(a)
        worst = max(worst, abs(np.sum(s * s) - frobenius_norm(a) ** 2) / frobenius_norm(a) ** 2)
    return worst <= 1e-9, f"sum sigma^2 vs ||A||_F^2 rel {worst:.1e}"


def suite_spectral_estimate(level, seed):
    g = _gen(seed, 3)
    a = g.standard_normal((50, 30))
    est = spectral_norm_estimate(a, 100, Rng(seed))
    top = jacobi_svd(a)[0]
    rel = abs(est - top) / top
    return est <= top + 1e-9 and rel <= 1e-6, f"rel err {rel:.1e}"


def suite_gram_schmidt(level, seed):
    g = _gen(seed, 4)
    worst = 0.0
    for shape in [(40, 8), (64, 64)] + ([(512, 128)] if level == "full" else []):
        q = gram_schmidt(g.standard_normal(shape))
        worst = max(worst, float(np.abs(q.T @ q - np.eye(shape[1])).max()))
    return worst <= 1e-10, f"max |Q^T Q - I| {worst:.1e}"


def _random_shape(g, max_rows, max_cols):
    rows, cols = int(g.integers(1, max_rows + 1)), int(g.integers(1, max_cols + 1))
    return (rows, cols) if g.random() < 0.5 else (cols, rows)


def suite_ns_sigma_range(level, seed):
    g = _gen(seed, 5)
    if level == "full":
        shapes = [_random_shape(g, 128, 512) for _ in range(200)] + [(256, 256), (512, 256)]
    else:
        shapes = [_random_shape(g, 64, 64) for _ in range(40)]
    lo, hi = math.inf, -math.inf
    for shape in shapes:
        s = jacobi_svd(newton_schulz_auto(g.standard_normal(shape)))
        lo, hi = min(lo, s.min()), max(hi, s.max())
    return lo >= 0.6 and hi <= 1.1, f"{len(shapes)} matrices, sigma in [{lo:.4f}, {hi:.4f}]"


def suite_ns_lowrank(level, seed):
    g = _gen(seed, 6)
    worst = 0.0
    for (m, n), r in [((32, 32), 8), ((48, 16), 4)]:
        for _ in range(25):
            mat = g.standard_normal((m, n))
            v = gram_schmidt(g.standard_normal((n, r)))
            lhs = newton_schulz(mat @ v @ v.T)
            rhs = newton_schulz(mat @ v) @ v.T
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst <= 1e-8, f"max |NS(MVV^T) - NS(MV)V^T| {worst:.1e}"


def suite_ns_scale(level, seed):
    g = _gen(seed, 7)
    worst = 0.0
    for shape in [(16, 16), (24, 40)]:
        mat = g.standard_normal(shape)
        base = newton_schulz(mat)
        for c in (1e-3, 0.5, 3.0, 1e3):
            worst = max(worst, float(np.abs(newton_schulz(c * mat) - base).max()))
    return worst <= 1e-8, f"max deviation {worst:.1e}"


def suite_select_l1(level, seed):
    g = _gen(seed, 8)
    cases = 1000 if level == "full" else 200
    for _ in range(cases):
        shape = (int(g.integers(1, 20)), int(g.integers(1, 20)))
        mat = g.integers(-3, 4, size=shape).astype(float)
        alpha = float(g.choice([0.125, 0.25, 0.3, 0.5, 0.77, 1.0]))
        axis = Axis(g.choice(["rows", "columns", "auto"]))
        mask = select_l1(mat, alpha, axis)
        resolved = axis.resolve(shape)
        norms = np.abs(mat).sum(axis=1 if resolved is Axis.ROWS else 0)
        ranked = sorted(range(norms.size), key=lambda i: (-norms[i], i))
        expect = sorted(ranked[: mask.k])
        if mask.indices.tolist() != expect or mask.axis is not resolved:
            return False, f"mismatch on shape {shape}, alpha {alpha}"
    return True, f"{cases} cases"


def suite_select_random(level, seed):
    d, alpha = 64, 0.25
    draws = 100_000 if level == "full" else 10_000
    counts = np.zeros(d)
    for t in range(draws):
        counts[select_random(alpha, d, Rng.for_stream(seed, 0, t)).indices] += 1
    expected = counts.sum() / d
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    crit = float(stats.chi2.ppf(0.999, d - 1))
    same = np.array_equal(
        select_random(0.5, 4, Rng.for_stream(seed, 3, 7)).indices,
        select_random(0.5, 4, Rng.for_stream(seed, 3, 7)).indices,
    )
    full = select_random(1.0, 10, Rng(seed)).indices.tolist() == list(range(10))
    return chi2 < crit and same and full, f"chi2 {chi2:.1f} < {crit:.1f} over {draws} draws"


def suite_scatter(level, seed):
    g = _gen(seed, 9)
    for _ in range(20):
        target = g.standard_normal((16, 16))
        before = target.copy()
        idx = np.sort(g.choice(16, size=int(g.integers(1, 17)), replace=False))
        axis = Axis.ROWS if g.random() < 0.5 else Axis.COLUMNS
        mask = SelectionMask(axis, idx, 16)
        vals = g.standard_normal((mask.k, 16) if axis is Axis.ROWS else (16, mask.k))
        scatter_update(target, mask, vals, float(g.random()))
        changed = before.view(np.uint64) != target.view(np.uint64)
        allowed = np.zeros((16, 16), dtype=bool)
        if axis is Axis.ROWS:
            allowed[idx, :] = True
        else:
            allowed[:, idx] = True
        if np.any(changed & ~allowed):
            return False, "unselected entry modified"
    return True, "20 random masks, unselected entries bitwise unchanged"


def _trajectory(task, cfg, steps):
    trainer = Trainer(RunConfig(task=task, optimizer=cfg, total_steps=max(steps, 4), eval_every=steps))
    ws = []
    for _ in range(steps):
        trainer.train_step()
        ws.append(trainer.params["W"].copy())
    return ws


def suite_muon_equivalence(level, seed):
    task = BENCHMARK_TASK if level == "full" else Task(dims=(64, 32), batch_size=32)
    task = replace(task, dataset_seed=seed)
    steps = 100 if level == "full" else 30
    base = OptimizerConfig(seed=seed)
    ref = _trajectory(task, base, steps)
    worst = 0.0
    for sel in Selection:
        other = _trajectory(task, base.with_(algorithm=Algorithm.DION2, alpha=1.0, selection=sel), steps)
        worst = max(worst, max(float(np.abs(a - b).max()) for a, b in zip(ref, other)))
    return worst <= 1e-9, f"{steps} steps, max |W_muon - W_dion2| {worst:.1e}"


def suite_dion2_sparsity(level, seed):
    task = BENCHMARK_TASK if level == "full" else Task(dims=(64, 32), batch_size=32)
    task = replace(task, dataset_seed=seed)
    steps = 100 if level == "full" else 40
    failures = []
    for sel, axis in [(Selection.L1, Axis.AUTO), (Selection.RANDOM, Axis.COLUMNS)]:
        cfg = OptimizerConfig(algorithm=Algorithm.DION2, alpha=0.25, selection=sel, axis=axis, seed=seed)
        trainer = Trainer(RunConfig(task=task, optimizer=cfg, total_steps=steps, eval_every=steps))

        def check(name, w_before, g, m_before, outcome, trainer=trainer):
            keep = np.ones(w_before.shape, dtype=bool)
            if outcome.mask.axis is Axis.ROWS:
                keep[outcome.mask.indices, :] = False
            else:
                keep[:, outcome.mask.indices] = False
            w_after = trainer.params[name]
            m_after = trainer.states[name].momentum
            if not np.array_equal(w_after[keep], w_before[keep]):
                failures.append("weights")
            if not np.array_equal(m_after[keep], (m_before + g)[keep]):
                failures.append("momentum")

        trainer.on_update = check
        for _ in range(steps):
            trainer.train_step()
    return not failures, f"{steps} steps x 2 variants" + (f", violations: {sorted(set(failures))}" if failures else "")


MIXED_CYCLE = (
    OptimizerConfig(algorithm=Algorithm.MUON),
    OptimizerConfig(algorithm=Algorithm.DION2, alpha=0.25),
    OptimizerConfig(algorithm=Algorithm.DION2, alpha=0.5, selection=Selection.RANDOM, axis=Axis.COLUMNS),
    OptimizerConfig(algorithm=Algorithm.DION2_FULL_DECAY, alpha=0.25),
    OptimizerConfig(algorithm=Algorithm.DION_BASELINE, rank_fraction=0.25),
)


def mixed_run_update_norms(steps: int, seed: int = 0) -> list[tuple[float, float]]:
    """(applied rms->rms norm, lr) for every matrix update in a run cycling algorithms."""
    task = Task(kind=TaskKind.TWO_LAYER_MLP, dims=(48, 32, 24), dataset_seed=seed, batch_size=64)
    params = init_params(task, seed)
    states = {n: ParamState.zeros_like(p, param_id=i) for i, (n, p) in enumerate(params.items())}
    out = []
    for t in range(steps):
        cfg = MIXED_CYCLE[t % len(MIXED_CYCLE)].with_(seed=seed)
        _, grads = loss_and_grads(task, params, gen_batch(task, t))
        lr = opt.lr_schedule(t, steps, cfg.eta)
        for name, w in params.items():
            outcome = opt.step(w, grads[name], states[name], cfg, lr=lr)
            if w.ndim == 2 and np.any(outcome.orthonormalized):
                out.append((rms_to_rms_norm(outcome.applied_update(w.shape)), lr))
    return out


def suite_update_norm(level, seed):
    steps = 500 if level == "full" else 100
    norms = mixed_run_update_norms(steps, seed)
    ratios = np.array([n / lr for n, lr in norms])
    ok = bool(np.all((ratios >= 0.6) & (ratios <= 1.1)))
    return ok, f"{len(ratios)} updates, norm/eta in [{ratios.min():.4f}, {ratios.max():.4f}]"


def suite_dion_subspace(level, seed):
    task = replace(Task(dims=(64, 32), batch_size=32), dataset_seed=seed)
    cfg = OptimizerConfig(algorithm=Algorithm.DION_BASELINE, rank_fraction=0.25, seed=seed)
    trainer = Trainer(RunConfig(task=task, optimizer=cfg, total_steps=50, eval_every=50))
    worst = 0.0
    for _ in range(50):
        trainer.train_step()
        v = trainer.states["W"].subspace
        worst = max(worst, float(np.abs(v.T @ v - np.eye(v.shape[1])).max()))
    return worst <= 1e-8, f"max |V^T V - I| {worst:.1e}"


def _fd_check(task, params, batch, h=1e-5):
    _, grads = loss_and_grads(task, params, batch)
    worst = 0.0
    for name, p in params.items():
        fd = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up, _ = loss_and_grads(task, params, batch)
            p[idx] = old - h
            down, _ = loss_and_grads(task, params, batch)
            p[idx] = old
            fd[idx] = (up - down) / (2 * h)
        scale = max(np.abs(fd).max(), 1e-12)
        worst = max(worst, float(np.abs(fd - grads[name]).max() / scale))
    return worst


def suite_gradients(level, seed):
    lin = Task(dims=(6, 4), dataset_seed=seed, batch_size=5, noise_std=0.1)
    mlp = Task(kind=TaskKind.TWO_LAYER_MLP, dims=(5, 8, 3), dataset_seed=seed, batch_size=7, noise_std=0.1)
    worst = max(_fd_check(t, init_params(t, seed + 1), gen_batch(t, 0)) for t in (lin, mlp))
    return worst <= 1e-4, f"max rel err {worst:.1e}"


def suite_arithmetic(level, seed):
    lr_ok = (
        opt.lr_schedule(0, 1000, 0.02) == 0.02
        and opt.lr_schedule(750, 1000, 0.02) == 0.02
        and math.isclose(opt.lr_schedule(875, 1000, 0.02), 0.01)
    )
    full = comm_volume(1024, 1024, None, 4, SyncMode.FULL_MOMENTUM)
    rnd = comm_volume(1024, 1024, 0.25, 4, SyncMode.SELECTED_SUBMATRIX, Selection.RANDOM)
    l1 = comm_volume(1024, 1024, 0.25, 4, SyncMode.SELECTED_SUBMATRIX, Selection.L1)
    vol_ok = full == 4_194_304 and rnd == 1_048_576 and l1 == rnd + 256 * 8
    return lr_ok and vol_ok, "lr schedule and sync volumes"


def _orderings(seed):
    cfgs = named_configs()
    seeds = tuple(range(seed, seed + 5))
    losses = {name: final_losses(BENCHMARK_TASK, cfgs[name], seeds) for name in cfgs if name != "dion-baseline-0.25"}
    return losses


def suite_training_orderings(level, seed):
    losses = _orderings(seed)
    lines, ok = [], True
    passed, c = significantly_lower(losses["dion2-l1-0.25"], losses["dion2-fulldecay-l1-0.25"])
    ok &= passed
    lines.append(f"ablation z={c.z:+.2f} ({'ok' if passed else 'FAIL'})")
    chain = ["muon", "dion2-l1-0.5", "dion2-l1-0.25", "dion2-l1-0.125"]
    for lo, hi in zip(chain, chain[1:]):
        passed, c = not_worse(losses[lo], losses[hi])
        ok &= passed
        lines.append(f"{lo}<={hi} z={c.z:+.2f} ({'ok' if passed else 'FAIL'})")
    for alpha in (0.5, 0.25, 0.125):
        passed, c = parity(losses[f"dion2-l1-{alpha}"], losses[f"dion2-random-{alpha}"])
        ok &= passed
        lines.append(f"l1~random@{alpha} z={c.z:+.2f} ({'ok' if passed else 'FAIL'})")
    return ok, "; ".join(lines)


QUICK_SUITES = [
    ("matmul vs triple-loop oracle", suite_matmul),
    ("jacobi SVD Frobenius identity", suite_jacobi),
    ("spectral norm estimate", suite_spectral_estimate),
    ("gram-schmidt orthonormality", suite_gram_schmidt),
    ("newton-schulz sigma range", suite_ns_sigma_range),
    ("newton-schulz low-rank commutation", suite_ns_lowrank),
    ("newton-schulz scale invariance", suite_ns_scale),
    ("l1 selection vs sort oracle", suite_select_l1),
    ("random selection uniformity", suite_select_random),
    ("scatter touches only the mask", suite_scatter),
    ("muon == dion2(alpha=1)", suite_muon_equivalence),
    ("dion2 sparsity contract", suite_dion2_sparsity),
    ("update rms->rms norm", suite_update_norm),
    ("dion subspace orthonormality", suite_dion_subspace),
    ("gradients vs finite differences", suite_gradients),
    ("lr schedule and sync volume", suite_arithmetic),
]
FULL_ONLY_SUITES = [("training orderings (5 seeds)", suite_training_orderings)]


def run_suites(level: str = "quick", seed: int = 0, echo=print) -> bool:
    suites = QUICK_SUITES + (FULL_ONLY_SUITES if level == "full" else [])
    all_ok = True
    for name, fn in suites:
        try:
            ok, detail = fn(level, seed)
        except Exception as exc:  # a crashing suite counts as a failure
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    echo(f"{'ALL PASS' if all_ok else 'FAILURES'} ({len(suites)} suites, level={level})")
    return all_ok
