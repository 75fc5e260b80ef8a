"""Multi-step rollouts of a fitted Koopman model under logged inputs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edmd import KoopmanModel


class DivergenceError(FloatingPointError):
    """A rollout or integration produced non-finite values."""

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time


@dataclass(frozen=True)
class Rollout:
    x0: np.ndarray
    inputs: np.ndarray
    states: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        if len(self.states) != len(self.inputs) + 1:
            raise ValueError("a rollout holds one more state than inputs")

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.states)) * (self.dt if self.dt else 1.0)


def _as_inputs(model: KoopmanModel, inputs, steps: int | None = None) -> np.ndarray:
    m = model.input_dim
    if inputs is None:
        return np.zeros((steps or 0, m))
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, m) if m else np.zeros((len(u), 0))
    if u.shape[1] != m:
        raise ValueError(f"model expects {m} inputs per step, got {u.shape[1]}")
    return u


def step(model: KoopmanModel, x, u=None) -> np.ndarray:
    """Advance one sampling period: ``unembed(D(x, u) @ K @ B)``."""
    if u is None:
        u = np.zeros(model.input_dim)
    embedded = model.lift(x, u) @ model.K @ model.B
    if not np.all(np.isfinite(embedded)):
        raise DivergenceError("prediction became non-finite", step=0)
    return model.space.unembed(embedded)


def rollout(model: KoopmanModel, x0, inputs=None, steps: int | None = None) -> Rollout:
    """Iterate :func:`step`, re-lifting from the recovered raw state each time.

    Autonomous models may pass ``steps`` instead of an (L, 0) input array.
    """
    x0 = np.asarray(x0, dtype=float)
    u = _as_inputs(model, inputs, steps)
    KB = model.K @ model.B
    states = np.empty((len(u) + 1, x0.shape[-1]))
    states[0] = x0
    for k in range(len(u)):
        with np.errstate(over="ignore", invalid="ignore"):  # checked just below
            embedded = model.lift(states[k], u[k]) @ KB
        if not np.all(np.isfinite(embedded)):
            raise DivergenceError(f"rollout diverged at step {k}", step=k)
        states[k + 1] = model.space.unembed(embedded)
    return Rollout(x0, u, states, model.dt)


def linear_state_step(model: KoopmanModel, x) -> np.ndarray:
    """Autonomous one-step prediction in embedded coordinates, ``D(x) @ K_s @ B``."""
    return model.state_dict.evaluate(x) @ model.state_operator() @ model.B


def spectral_state_step(model: KoopmanModel, x) -> np.ndarray:
    """Mode-sum prediction ``sum_n v_n lambda_n phi_n(x)`` in embedded coordinates.

    Requires a decomposed model. Imaginary parts cancel for real ``K`` and
    are discarded.
    """
    dec = model.decomposition
    if dec is None:
        raise ValueError("model has no decomposition; call edmd.decompose() first")
    phi = model.state_dict.evaluate(x) @ dec.eigenfunctions
    return np.real((phi * dec.eigenvalues) @ dec.modes)


def wrapped_difference(a, b) -> np.ndarray:
    """``a - b`` wrapped into (-pi, pi]."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(d == -np.pi, np.pi, d)


def mse(predicted, truth, angle_mask=None, include_initial: bool = False) -> np.ndarray:
    """Per-component mean squared error over a trajectory.

    Rows are time samples. The initial sample is skipped by default, so a
    rollout of ``L`` steps averages over ``L`` predicted states. Components
    flagged in ``angle_mask`` are compared modulo ``2 pi``.
    """
    p = np.asarray(predicted, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: predicted {p.shape} vs truth {t.shape}")
    if not include_initial:
        p, t = p[1:], t[1:]
    if len(p) == 0:
        raise ValueError("no samples to compare")
    d = p - t
    if angle_mask is not None:
        mask = np.asarray(angle_mask, dtype=bool)
        d[:, mask] = wrapped_difference(p[:, mask], t[:, mask])
    return np.mean(d * d, axis=0)
