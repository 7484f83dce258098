"""Strict JSON config loading for training runs and benchmarks.

Keys mirror the dataclass fields one-for-one. Unknown keys, wrong types and
out-of-range values are errors that name the file and the dotted key.
"""

from __future__ import annotations

import json
from pathlib import Path

from .bench import BenchConfig
from .errors import ConfigError
from .optimizers import Algorithm, OptimizerConfig, Selection
from .orthonorm import NewtonSchulzParams
from .selection import Axis
from .trainer import RunConfig, Task, TaskKind

OPTIMIZER_KEYS = {
    "algorithm", "eta", "mu", "alpha", "selection", "axis", "ns_params",
    "rank_fraction", "seed", "submatrix_scale", "nesterov",
}
TASK_KEYS = {"kind", "dims", "dataset_seed", "batch_size", "noise_std"}
RUN_KEYS = {"task", "optimizer", "total_steps", "eval_every", "log_path"}
BENCH_KEYS = {
    "dims", "alphas", "warmup_steps", "measured_steps", "repeats",
    "algorithms", "dtype", "ns_params", "seed", "threads",
}
NS_PRESETS = {"default": NewtonSchulzParams.default, "quintic5": NewtonSchulzParams.quintic}


class _Reader:
    def __init__(self, path):
        self.path = str(path)

    def fail(self, key, msg):
        raise ConfigError(msg, key=key, path=self.path)

    def obj(self, value, key, allowed):
        if not isinstance(value, dict):
            self.fail(key or None, f"expected an object, got {type(value).__name__}")
        for k in value:
            if k not in allowed:
                self.fail(f"{key}.{k}" if key else k, "unknown key")
        return value

    def number(self, value, key):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"expected a number, got {value!r}")
        return float(value)

    def integer(self, value, key, minimum=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(key, f"must be >= {minimum}, got {value}")
        return value

    def boolean(self, value, key):
        if not isinstance(value, bool):
            self.fail(key, f"expected true/false, got {value!r}")
        return value

    def enum(self, value, key, cls):
        try:
            return cls(value)
        except ValueError:
            self.fail(key, f"expected one of {[m.value for m in cls]}, got {value!r}")

    def build(self, factory, key_prefix, **kwargs):
        # Dataclass validation errors name the bare field; re-raise with path.
        try:
            return factory(**kwargs)
        except ConfigError as exc:
            key = f"{key_prefix}.{exc.key}" if key_prefix and exc.key else (exc.key or key_prefix)
            msg = str(exc).split(": ", 1)[-1] if exc.key else str(exc)
            raise ConfigError(msg, key=key, path=self.path) from None


def _ns_params(r: _Reader, value, key) -> NewtonSchulzParams:
    r.obj(value, key, {"preset", "coefficients", "eps"})
    if "preset" in value:
        if "coefficients" in value:
            r.fail(key, "give either 'preset' or 'coefficients', not both")
        preset = value["preset"]
        if preset not in NS_PRESETS:
            r.fail(f"{key}.preset", f"expected one of {sorted(NS_PRESETS)}, got {preset!r}")
        params = NS_PRESETS[preset]()
        if "eps" in value:
            params = NewtonSchulzParams(params.coefficients, r.number(value["eps"], f"{key}.eps"))
        return params
    coeffs = value.get("coefficients")
    if not isinstance(coeffs, list) or not coeffs:
        r.fail(f"{key}.coefficients", "expected a non-empty list of [a, b, c] triples")
    triples = []
    for i, abc in enumerate(coeffs):
        if not isinstance(abc, list) or len(abc) != 3:
            r.fail(f"{key}.coefficients[{i}]", "expected [a, b, c]")
        triples.append(tuple(r.number(x, f"{key}.coefficients[{i}]") for x in abc))
    eps = r.number(value.get("eps", 1e-7), f"{key}.eps")
    if not eps > 0:
        r.fail(f"{key}.eps", f"must be positive, got {eps}")
    return NewtonSchulzParams(tuple(triples), eps)


def _optimizer(r: _Reader, doc: dict, key: str) -> OptimizerConfig:
    r.obj(doc, key, OPTIMIZER_KEYS)
    k = (lambda name: f"{key}.{name}") if key else (lambda name: name)
    kwargs = {}
    if "algorithm" in doc:
        kwargs["algorithm"] = r.enum(doc["algorithm"], k("algorithm"), Algorithm)
    for name in ("eta", "mu", "alpha", "rank_fraction"):
        if name in doc:
            kwargs[name] = r.number(doc[name], k(name))
    if "selection" in doc:
        kwargs["selection"] = r.enum(doc["selection"], k("selection"), Selection)
    if "axis" in doc:
        kwargs["axis"] = r.enum(doc["axis"], k("axis"), Axis)
    if "ns_params" in doc:
        kwargs["ns_params"] = _ns_params(r, doc["ns_params"], k("ns_params"))
    if "seed" in doc:
        kwargs["seed"] = r.integer(doc["seed"], k("seed"), minimum=0)
    for name in ("submatrix_scale", "nesterov"):
        if name in doc:
            kwargs[name] = r.boolean(doc[name], k(name))
    return r.build(OptimizerConfig, key, **kwargs)


def _task(r: _Reader, doc: dict) -> Task:
    r.obj(doc, "task", TASK_KEYS)
    kwargs = {}
    if "kind" in doc:
        kwargs["kind"] = r.enum(doc["kind"], "task.kind", TaskKind)
    if "dims" in doc:
        dims = doc["dims"]
        if not isinstance(dims, list):
            r.fail("task.dims", "expected a list of layer widths")
        kwargs["dims"] = tuple(r.integer(d, "task.dims") for d in dims)
    if "dataset_seed" in doc:
        kwargs["dataset_seed"] = r.integer(doc["dataset_seed"], "task.dataset_seed", minimum=0)
    if "batch_size" in doc:
        kwargs["batch_size"] = r.integer(doc["batch_size"], "task.batch_size")
    if "noise_std" in doc:
        kwargs["noise_std"] = r.number(doc["noise_std"], "task.noise_std")
    return r.build(Task, "task", **kwargs)


def run_config_from_dict(doc: dict, path="<dict>") -> RunConfig:
    """Optimizer fields may also appear at top level as a shorthand."""
    r = _Reader(path)
    r.obj(doc, "", RUN_KEYS | OPTIMIZER_KEYS)
    flat = {k: v for k, v in doc.items() if k in OPTIMIZER_KEYS}
    if flat and "optimizer" in doc:
        r.fail(sorted(flat)[0], "optimizer fields must go either under 'optimizer' or at top level, not both")
    optimizer = _optimizer(r, doc.get("optimizer", flat), "optimizer" if "optimizer" in doc else "")
    task = _task(r, doc["task"]) if "task" in doc else Task()
    kwargs = {}
    for name in ("total_steps", "eval_every"):
        if name in doc:
            kwargs[name] = r.integer(doc[name], name)
    if "log_path" in doc:
        if doc["log_path"] is not None and not isinstance(doc["log_path"], str):
            r.fail("log_path", "expected a string or null")
        kwargs["log_path"] = doc["log_path"]
    return r.build(RunConfig, "", task=task, optimizer=optimizer, **kwargs)


def bench_config_from_dict(doc: dict, path="<dict>") -> BenchConfig:
    r = _Reader(path)
    r.obj(doc, "", BENCH_KEYS)
    kwargs = {}
    if "dims" in doc:
        dims = doc["dims"]
        if not isinstance(dims, list):
            r.fail("dims", "expected a list of [rows, cols] pairs")
        pairs = []
        for i, rc in enumerate(dims):
            if not isinstance(rc, list) or len(rc) != 2:
                r.fail(f"dims[{i}]", "expected [rows, cols]")
            pairs.append(tuple(r.integer(x, f"dims[{i}]", minimum=1) for x in rc))
        kwargs["dims"] = tuple(pairs)
    if "alphas" in doc:
        if not isinstance(doc["alphas"], list):
            r.fail("alphas", "expected a list of numbers")
        kwargs["alphas"] = tuple(r.number(a, "alphas") for a in doc["alphas"])
    for name in ("warmup_steps", "measured_steps", "repeats", "seed"):
        if name in doc:
            kwargs[name] = r.integer(doc[name], name)
    if "algorithms" in doc:
        algs = doc["algorithms"]
        if not isinstance(algs, list) or not all(isinstance(a, str) for a in algs):
            r.fail("algorithms", "expected a list of algorithm names")
        kwargs["algorithms"] = tuple(algs)
    if "dtype" in doc:
        kwargs["dtype"] = doc["dtype"]
    if "ns_params" in doc:
        kwargs["ns_params"] = _ns_params(r, doc["ns_params"], "ns_params")
    if "threads" in doc:
        kwargs["threads"] = r.boolean(doc["threads"], "threads")
    return r.build(BenchConfig, "", **kwargs)


def load_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config file not found", path=str(path))
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}", path=str(path)) from None


def parse_config(path, kind: str = "run") -> RunConfig | BenchConfig:
    """Load a ``run`` (training) or ``bench`` config from a JSON file."""
    doc = load_json(path)
    if kind == "run":
        return run_config_from_dict(doc, path)
    if kind == "bench":
        return bench_config_from_dict(doc, path)
    raise ValueError(f"unknown config kind {kind!r}")
