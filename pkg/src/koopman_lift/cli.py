"""Command-line front end: simulate -> fit -> predict -> eval -> compare.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure, 4 file or format problems.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import comparators, edmd, evaluation, systems
from .data import DataFormatError, TrajectoryDataset, export_csv, ingest_csv, load_model, moving_average, save_model
from .linalg import DEFAULT_REL_TOL, NumericalError
from .predict import DivergenceError, mse, rollout
from .topology import TopologyError, parse_topology

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class ProtocolConfig:
    n_trajectories: int = 100
    duration: float = 50.0
    dt: float = 0.1
    input_mean: list = field(default_factory=lambda: [0.0, 0.0])
    input_std: list = field(default_factory=lambda: [9.0, 9.0])
    substeps: int = 10
    hold: int = 1


@dataclass
class FitConfig:
    topology: str | None = None
    rel_tol: float = DEFAULT_REL_TOL
    window: int = 1
    method: str = "acd"
    decompose: bool = True


@dataclass
class CompareConfig:
    methods: list = field(default_factory=lambda: list(evaluation.METHODS))
    test: str = "circle"
    sparsity: float = 1e-3
    derivative: str = "central"
    validation_rollouts: int = 20
    validation_length: int = 50


@dataclass
class RunConfig:
    system: str = "diffdrive"
    seed: int = 0
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)


_SECTIONS = {"protocol": ProtocolConfig, "fit": FitConfig, "compare": CompareConfig}
_SYSTEM_DEFAULTS = {
    "diffdrive": dict(n_trajectories=100, duration=50.0, dt=0.1, input_mean=[0.0, 0.0], input_std=[9.0, 9.0]),
    "arm": dict(n_trajectories=100, duration=2.0, dt=0.01, input_mean=[0.0, 0.0], input_std=[1.0, 1.0]),
    "softleg": dict(n_trajectories=20, duration=4.0, dt=0.02, input_mean=[0.0, 0.0], input_std=[6.0, 6.0], hold=25),
}


def _check_type(path: str, value, expected):
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if expected is list and isinstance(value, list):
        return value
    if expected in (int, str, bool) and type(value) is expected:
        return value
    if expected is float and isinstance(value, float):
        return value
    raise ConfigError(f"{path}: expected {expected.__name__}, got {type(value).__name__}")


def _section_from_dict(cls, data: dict, prefix: str, base=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix}: expected an object")
    obj = base if base is not None else cls()
    hints = {f: type(getattr(cls(), f)) for f in cls.__dataclass_fields__}
    for key, value in data.items():
        if key not in hints:
            raise ConfigError(f"{prefix}.{key}: unknown key")
        expected = hints[key]
        if expected is type(None):
            expected = str
        setattr(obj, key, value if value is None else _check_type(f"{prefix}.{key}", value, expected))
    return obj


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig`; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    cfg = RunConfig()
    system = data.get("system", cfg.system)
    if system not in _SYSTEM_DEFAULTS:
        raise ConfigError(f"system: unknown system {system!r}")
    cfg.protocol = ProtocolConfig(**_SYSTEM_DEFAULTS[system])
    for key, value in data.items():
        if key in _SECTIONS:
            setattr(cfg, key, _section_from_dict(_SECTIONS[key], value, key, getattr(cfg, key)))
        elif key == "system":
            cfg.system = _check_type("system", value, str)
        elif key == "seed":
            cfg.seed = _check_type("seed", value, int)
        else:
            raise ConfigError(f"{key}: unknown key")
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    p = cfg.protocol
    if p.n_trajectories < 1:
        raise ConfigError("protocol.n_trajectories: must be >= 1")
    if not p.duration > 0:
        raise ConfigError("protocol.duration: must be positive")
    if not p.dt > 0:
        raise ConfigError("protocol.dt: must be positive")
    if len(p.input_mean) != len(p.input_std):
        raise ConfigError("protocol.input_std: length must match protocol.input_mean")
    if any(s < 0 for s in p.input_std):
        raise ConfigError("protocol.input_std: must be non-negative")
    if p.substeps < 1:
        raise ConfigError("protocol.substeps: must be >= 1")
    if p.hold < 1:
        raise ConfigError("protocol.hold: must be >= 1")
    steps = p.duration / p.dt
    if abs(steps - round(steps)) > 1e-9 * steps:
        raise ConfigError("protocol.duration: must be an integer multiple of protocol.dt")
    f = cfg.fit
    if not 0 < f.rel_tol < 1:
        raise ConfigError("fit.rel_tol: must lie in (0, 1)")
    if f.window < 1 or f.window % 2 == 0:
        raise ConfigError("fit.window: must be a positive odd integer")
    if f.method not in ("acd", "hermite"):
        raise ConfigError("fit.method: must be 'acd' or 'hermite'")
    if f.topology is not None:
        try:
            parse_topology(f.topology)
        except TopologyError as exc:
            raise ConfigError(f"fit.topology: {exc}") from exc
    c = cfg.compare
    unknown = [m for m in c.methods if m not in evaluation.METHODS]
    if unknown or not c.methods:
        raise ConfigError(f"compare.methods: unknown or empty {unknown}")
    if c.test not in ("circle", "quadrant", "validation"):
        raise ConfigError("compare.test: must be circle, quadrant or validation")
    if c.derivative not in ("central", "forward"):
        raise ConfigError("compare.derivative: must be 'central' or 'forward'")
    if c.sparsity < 0:
        raise ConfigError("compare.sparsity: must be >= 0")


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        *head, last = dotted.split(".")
        for part in head:
            node = node.setdefault(part, {})
        node[last] = value
    return config_from_dict(data)


def _protocol(cfg: RunConfig) -> systems.SimProtocol:
    p = cfg.protocol
    return systems.SimProtocol(
        p.n_trajectories, p.duration, p.dt, tuple(p.input_mean), tuple(p.input_std), cfg.seed, p.substeps, p.hold
    )


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}") from None


def _write_table(rows: list[dict], path: str | None, extra: dict | None = None) -> str:
    keys = list(dict.fromkeys(k for r in rows for k in r))
    if path and path.endswith(".json"):
        text = json.dumps({"rows": rows, **(extra or {})}, indent=1, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})
        text = buf.getvalue()
    if path:
        Path(path).write_text(text)
    return text


def cmd_simulate(args) -> int:
    cfg = load_config(
        args.config,
        {
            "system": args.system,
            "seed": args.seed,
            "protocol.n_trajectories": args.trajectories,
            "protocol.duration": args.duration,
            "protocol.dt": args.dt,
        },
    )
    system = systems.get_system(cfg.system)
    data = systems.generate_dataset(system, _protocol(cfg))
    meta = dict(data.metadata)
    meta["protocol"] = json.dumps(asdict(cfg.protocol), sort_keys=True)
    data = TrajectoryDataset(data.trajectories, data.dt, data.state_names, data.input_names, meta)
    export_csv(data, args.out)
    print(
        f"simulated {len(data)} trajectories x {len(data.trajectories[0])} samples "
        f"(system={cfg.system}, seed={cfg.seed}) -> {args.out}"
    )
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(
        args.config,
        {"fit.topology": args.topology, "fit.rel_tol": args.rel_tol, "fit.window": args.window, "fit.method": args.method},
    )
    data = ingest_csv(args.dataset)
    if cfg.fit.window > 1:
        data = moving_average(data, cfg.fit.window)
    start = time.perf_counter()
    if cfg.fit.method == "acd":
        model = edmd.fit_acd(data, cfg.fit.topology, cfg.fit.rel_tol)
    else:
        model = comparators.fit_baseline(data, cfg.fit.rel_tol)
    elapsed = time.perf_counter() - start
    if cfg.fit.decompose and not args.no_decompose:
        try:
            model = edmd.decompose(model)
        except NumericalError as exc:
            print(f"warning: decomposition skipped ({exc})", file=sys.stderr)
    save_model(model, args.out)
    d = model.diagnostics
    print(
        f"fitted {cfg.fit.method}: N_x={d['N_x']} N_u={d['N_u']} K={model.K.shape[0]}x{model.K.shape[1]} "
        f"M={d['M']} J={d['residual']:.6g} time={elapsed:.3f}s -> {args.out}"
    )
    return EXIT_OK


def _rollout_csv(states: np.ndarray, dt: float | None, names) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *names])
    step = dt if dt else 1.0
    for k, x in enumerate(states):
        w.writerow([repr(k * step), *(repr(float(v)) for v in x)])
    return buf.getvalue()


def cmd_predict(args) -> int:
    model = load_model(args.model)
    x0 = _vector(args.x0)
    if args.inputs:
        with open(args.inputs, newline="") as fh:
            rows = [r for r in csv.reader(l for l in fh if not l.startswith("#")) if r]
        header, body = rows[0], rows[1:]
        cols = [i for i, h in enumerate(header) if h.startswith("u_")] or list(range(len(header)))
        try:
            u = np.array([[float(r[i]) for i in cols] for r in body if all(r[i].strip() for i in cols)])
        except ValueError as exc:
            raise DataFormatError(f"{args.inputs}: {exc}") from exc
        u = u.reshape(len(body) and -1, len(cols))
    elif args.input is not None:
        u = np.tile(_vector(args.input), (args.steps, 1))
    else:
        u = np.zeros((args.steps, model.input_dim))
    ro = rollout(model, x0, u)
    text = _rollout_csv(ro.states, model.dt, model.state_dict.names)
    if args.out:
        Path(args.out).write_text(text)
        print(f"predicted {len(u)} steps -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    truth = ingest_csv(args.truth)
    topo = args.topology or truth.metadata.get("topology") or str(model.space)
    mask = parse_topology(topo).angle_mask
    if len(mask) != truth.state_dim:
        raise ConfigError(f"topology {topo!r} does not match {truth.state_dim} state columns")
    rows = []
    for k, tr in enumerate(truth.trajectories):
        ro = rollout(model, tr.states[0], tr.inputs)
        err = mse(ro.states, tr.states, mask)
        rows.append({"trajectory": k, **{f"mse_{n}": float(v) for n, v in zip(truth.state_names, err)}})
    if len(rows) > 1:
        med = {f"mse_{n}": float(np.median([r[f"mse_{n}"] for r in rows])) for n in truth.state_names}
        rows.append({"trajectory": "median", **med})
    sys.stdout.write(_write_table(rows, args.out))
    return EXIT_OK


def cmd_compare(args) -> int:
    methods = args.methods.split(",") if args.methods else None
    cfg = load_config(
        args.config,
        {"system": args.system, "seed": args.seed, "compare.methods": methods, "compare.test": args.test},
    )
    system = systems.get_system(cfg.system)
    protocol = _protocol(cfg)
    data = systems.generate_dataset(system, protocol)
    c = cfg.compare
    if c.test == "validation":
        rows = []
        for method in c.methods:
            row = {"method": method}
            try:
                pred = evaluation.train(method, data, cfg.fit.topology, cfg.fit.rel_tol, c.sparsity, c.derivative)
                row["train_seconds"] = pred.train_seconds
                errs = evaluation.validation_mse(pred, system, protocol, c.validation_rollouts, c.validation_length)
                row.update({f"mse_{n}": float(v) for n, v in zip(system.state_names, np.median(errs, axis=0))})
                row["error"] = None
            except Exception as exc:  # noqa: BLE001
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    else:
        if c.test == "circle":
            inputs = evaluation.circle_inputs()
        else:
            inputs = evaluation.quadrant_inputs(system, protocol.dt)
        rows = evaluation.compare(
            data, system, inputs, c.methods, cfg.fit.topology, cfg.fit.rel_tol, c.sparsity, c.derivative
        )
    sys.stdout.write(_write_table(rows, args.out, {"config": asdict(cfg)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koopman-lift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a random-input training dataset")
    p.add_argument("--system", choices=sorted(systems.SYSTEMS))
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a Koopman model to a dataset CSV")
    p.add_argument("dataset")
    p.add_argument("--config")
    p.add_argument("--topology")
    p.add_argument("--method", choices=["acd", "hermite"])
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--no-decompose", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="roll out a model under an input sequence")
    p.add_argument("model")
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--inputs", help="CSV file of inputs (u_* columns)")
    g.add_argument("--input", help="constant comma-separated input, used with --steps")
    p.add_argument("--steps", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="MSE of a model against logged trajectories")
    p.add_argument("model")
    p.add_argument("truth")
    p.add_argument("--topology", help="topology used to decide which columns are angles")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="train all methods on one protocol and tabulate MSE")
    p.add_argument("--system", choices=sorted(systems.SYSTEMS))
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma-separated subset of acd,hermite,sindy")
    p.add_argument("--test", choices=["circle", "quadrant", "validation"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TopologyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DivergenceError, comparators.ConvergenceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, DataFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
