"""Evaluation protocols: test rollouts, validation MSE and method comparison.

MSE values are in SI units squared (m^2, rad^2) and average over the
``L`` predicted samples, excluding the shared initial state.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .comparators import fit_baseline, sindy_fit, sindy_rollout
from .edmd import fit_acd
from .linalg import DEFAULT_REL_TOL
from .predict import mse, rollout
from .systems import SimProtocol, System, random_inputs
from .topology import parse_topology

CIRCLE_INPUT = (12.1369, 6.7310)  # wheel speeds [rad/s]
CIRCLE_STEPS = 50
QUADRANT_TORQUE = (-1.0, 0.0)  # joint torques [N m]
METHODS = ("acd", "hermite", "sindy")


def circle_inputs(steps: int = CIRCLE_STEPS) -> np.ndarray:
    return np.tile(np.asarray(CIRCLE_INPUT), (steps, 1))


def quadrant_inputs(system: System, dt: float = 0.01, max_steps: int = 1000) -> np.ndarray:
    """Constant ``QUADRANT_TORQUE`` until the first link, released from the
    horizontal, first reaches the downward vertical."""
    u = np.tile(np.asarray(QUADRANT_TORQUE), (max_steps, 1))
    truth = system.simulate(u, dt=dt)
    below = np.flatnonzero(truth[:, 0] <= -np.pi / 2)
    if below.size == 0:
        raise RuntimeError("arm never reached the vertical within max_steps")
    return u[: below[0]]


def angle_mask(system: System) -> np.ndarray:
    return parse_topology(system.topology).angle_mask


@dataclass
class Predictor:
    """A trained model wrapped behind ``predict(x0, inputs) -> states``."""

    method: str
    model: object
    train_seconds: float

    def predict(self, x0, inputs) -> np.ndarray:
        if self.method == "sindy":
            return sindy_rollout(self.model, x0, inputs).states
        return rollout(self.model, x0, inputs).states


def train(method: str, dataset, topology=None, rel_tol: float = DEFAULT_REL_TOL,
          sparsity: float = 1e-3, derivative: str = "central") -> Predictor:
    """Fit one method on ``dataset`` and record its wall-clock training time.

    ``derivative`` only affects SINDy. With zero-order-hold inputs a central
    difference straddles two different commands; ``"forward"`` avoids that.
    """
    start = time.perf_counter()
    if method == "acd":
        model = fit_acd(dataset, topology, rel_tol)
    elif method == "hermite":
        model = fit_baseline(dataset, rel_tol)
    elif method == "sindy":
        model = sindy_fit(dataset, sparsity, derivative)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return Predictor(method, model, time.perf_counter() - start)


def rollout_mse(predictor: Predictor, system: System, inputs, dt: float, x0=None) -> np.ndarray:
    """MSE of ``predictor`` against the simulated truth for one input sequence."""
    x0 = np.asarray(system.x0 if x0 is None else x0, dtype=float)
    truth = system.simulate(inputs, x0=x0, dt=dt)
    pred = predictor.predict(x0, inputs)
    return mse(pred, truth, angle_mask(system))


def validation_mse(
    predictor: Predictor,
    system: System,
    protocol: SimProtocol,
    n_rollouts: int = 20,
    length: int = 50,
    seed_offset: int = 10_000,
) -> np.ndarray:
    """Per-rollout MSE on fresh random inputs drawn like the training set.

    Validation streams use trajectory indices from ``seed_offset`` on, so
    they never coincide with training inputs. Returns shape
    ``(n_rollouts, state_dim)``.
    """
    out = []
    for k in range(n_rollouts):
        u = random_inputs(protocol, seed_offset + k, length)
        out.append(rollout_mse(predictor, system, u, protocol.dt))
    return np.array(out)


def compare(dataset, system: System, inputs, methods=METHODS, topology=None,
            rel_tol: float = DEFAULT_REL_TOL, sparsity: float = 1e-3,
            derivative: str = "central") -> list[dict]:
    """Train each method on ``dataset`` and score it on one test input sequence.

    A failing method yields a row with ``error`` set instead of aborting.
    """
    rows = []
    for method in methods:
        row = {"method": method}
        try:
            pred = train(method, dataset, topology, rel_tol, sparsity, derivative)
            row["train_seconds"] = pred.train_seconds
            err = rollout_mse(pred, system, inputs, dataset.dt)
            row.update({f"mse_{n}": float(v) for n, v in zip(system.state_names, err)})
            row["error"] = None
        except Exception as exc:  # noqa: BLE001 - isolate per-method failures
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
