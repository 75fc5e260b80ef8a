"""Ground-truth simulators and random-input training protocols.

Derivative functions accept a leading batch axis so whole datasets are
integrated at once: ``state`` has shape (..., n) and ``u`` (..., m).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import Trajectory, TrajectoryDataset
from .predict import DivergenceError


@dataclass(frozen=True)
class DiffDriveParams:
    r: float = 0.062  # wheel radius [m]
    L: float = 0.228  # wheel separation [m]

    def __post_init__(self):
        if not (self.r > 0 and self.L > 0):
            raise ValueError("wheel radius and separation must be positive")


@dataclass(frozen=True)
class ArmParams:
    m1: float = 1.0
    m2: float = 1.0
    L1: float = 1.0
    L2: float = 1.0
    g: float = 9.81

    def __post_init__(self):
        if min(self.m1, self.m2, self.L1, self.L2) <= 0:
            raise ValueError("arm masses and lengths must be strictly positive")
        if self.g < 0:  # g = 0 allowed: gravity-free energy checks
            raise ValueError("gravity must be non-negative")


def diffdrive_deriv(p: DiffDriveParams, state, u) -> np.ndarray:
    """Unicycle kinematics of a differential-drive base.

    ``state = (x, y, phi)``, ``u = (omega_r, omega_l)`` in rad/s.
    """
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    v = 0.5 * p.r * (u[..., 0] + u[..., 1])
    phi = state[..., 2]
    return np.stack(
        [v * np.cos(phi), v * np.sin(phi), p.r / p.L * (u[..., 0] - u[..., 1])], axis=-1
    )


def arm_mass_matrix(p: ArmParams, theta2) -> np.ndarray:
    c2 = np.cos(theta2)
    m11 = p.m1 * p.L1**2 + p.m2 * (p.L1**2 + 2 * p.L1 * p.L2 * c2 + p.L2**2)
    m12 = p.m2 * (p.L1 * p.L2 * c2 + p.L2**2)
    m22 = p.m2 * p.L2**2 * np.ones_like(c2)
    return np.stack([np.stack([m11, m12], -1), np.stack([m12, m22], -1)], -2)


def arm_coriolis(p: ArmParams, theta2, dtheta1, dtheta2) -> np.ndarray:
    k = p.m2 * p.L1 * p.L2 * np.sin(theta2)
    return np.stack([-k * (2 * dtheta1 * dtheta2 + dtheta2**2), k * dtheta1**2], -1)


def arm_gravity(p: ArmParams, theta1, theta2) -> np.ndarray:
    c12 = np.cos(theta1 + theta2)
    return np.stack(
        [(p.m1 + p.m2) * p.L1 * p.g * np.cos(theta1) + p.m2 * p.g * p.L2 * c12, p.m2 * p.g * p.L2 * c12],
        -1,
    )


def arm_deriv(p: ArmParams, state, tau) -> np.ndarray:
    """Planar two-link arm; ``state = (th1, th2, dth1, dth2)``, ``tau`` in N m.

    Angles are measured from the horizontal, so gravity torque vanishes
    when a link hangs vertically.
    """
    state = np.asarray(state, dtype=float)
    tau = np.asarray(tau, dtype=float)
    t1, t2, d1, d2 = (state[..., i] for i in range(4))
    M = arm_mass_matrix(p, t2)
    rhs = tau - arm_coriolis(p, t2, d1, d2) - arm_gravity(p, t1, t2)
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if np.any(np.abs(det) < 1e-12):
        raise ValueError("arm mass matrix is singular")
    a1 = (M[..., 1, 1] * rhs[..., 0] - M[..., 0, 1] * rhs[..., 1]) / det
    a2 = (M[..., 0, 0] * rhs[..., 1] - M[..., 1, 0] * rhs[..., 0]) / det
    return np.stack([d1, d2, a1, a2], -1)


def arm_energy(p: ArmParams, state) -> np.ndarray:
    """Kinetic plus gravitational potential energy (zero at the horizontal)."""
    state = np.asarray(state, dtype=float)
    t1, t2, d1, d2 = (state[..., i] for i in range(4))
    M = arm_mass_matrix(p, t2)
    dq = np.stack([d1, d2], -1)
    kinetic = 0.5 * np.einsum("...i,...ij,...j->...", dq, M, dq)
    potential = p.g * (
        (p.m1 + p.m2) * p.L1 * np.sin(t1) + p.m2 * p.L2 * np.sin(t1 + t2)
    )
    return kinetic + potential


def integrate(deriv: Callable, params, x0, inputs, dt: float, substeps: int = 10) -> np.ndarray:
    """Fixed-step RK4 under zero-order-hold inputs.

    ``inputs`` has shape (L, m) (or (batch, L, m) with ``x0`` of shape
    (batch, n)); each input row is held for one period ``dt`` split into
    ``substeps`` RK4 steps. Returns the L + 1 samples, including ``x0``.
    """
    x = np.array(x0, dtype=float)
    u = np.asarray(inputs, dtype=float)
    time_axis = u.ndim - 2
    n_steps = u.shape[time_axis]
    h = dt / substeps
    out = np.empty(x.shape[:-1] + (n_steps + 1, x.shape[-1]))
    out[..., 0, :] = x
    for k in range(n_steps):
        uk = u[..., k, :]
        for _ in range(substeps):
            k1 = deriv(params, x, uk)
            k2 = deriv(params, x + 0.5 * h * k1, uk)
            k3 = deriv(params, x + 0.5 * h * k2, uk)
            k4 = deriv(params, x + h * k3, uk)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            where = ""
            if x.ndim > 1:
                rows = np.flatnonzero(~np.isfinite(x).all(axis=-1))
                where = f" in trajectories {rows.tolist()}"
            raise DivergenceError(
                f"integration diverged at t = {(k + 1) * dt:g} s{where}",
                step=k,
                time=(k + 1) * dt,
            )
        out[..., k + 1, :] = x
    return out


@dataclass(frozen=True)
class System:
    """A simulated platform: dynamics, names and its configuration topology."""

    name: str
    deriv: Callable
    params: object
    state_names: tuple
    input_names: tuple
    topology: str
    x0: tuple

    def simulate(self, inputs, x0=None, dt: float = 0.1, substeps: int = 10) -> np.ndarray:
        start = self.x0 if x0 is None else x0
        return integrate(self.deriv, self.params, start, inputs, dt, substeps)


def diffdrive_system(params: DiffDriveParams | None = None) -> System:
    return System(
        "diffdrive",
        diffdrive_deriv,
        params or DiffDriveParams(),
        ("x", "y", "phi"),
        ("omega_r", "omega_l"),
        "R^2 x S^1",
        (0.0, 0.0, 0.0),
    )


def arm_system(params: ArmParams | None = None) -> System:
    # Joint rates are part of the state, so they ride along as R^2.
    return System(
        "arm",
        arm_deriv,
        params or ArmParams(),
        ("theta1", "theta2", "dtheta1", "dtheta2"),
        ("tau1", "tau2"),
        "S^1 x S^1 x R^2",
        (0.0, 0.0, 0.0, 0.0),
    )


@dataclass(frozen=True)
class SoftLegParams:
    """First-order tip response of a pneumatic leg surrogate (lengths in m)."""

    rest: tuple = (0.0, -0.12)
    gain: tuple = ((0.004, 0.0015), (0.0012, -0.003))
    bend_coupling: float = 0.02
    time_constant: float = 0.25


def soft_leg_deriv(p: SoftLegParams, state, u) -> np.ndarray:
    """Synthetic stand-in for a soft leg's tip ``(y, z)`` under valve voltages.

    The tip relaxes toward an input-dependent equilibrium; the bending gain
    grows with the tip's extension, giving a mild state-input coupling.
    """
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    G = np.asarray(p.gain)
    target = np.asarray(p.rest) + u @ G.T
    bend = p.bend_coupling * (state[..., 1] - p.rest[1]) * u[..., 0]
    target = target + np.stack([bend, np.zeros_like(bend)], -1)
    return (target - state) / p.time_constant


def soft_leg_system(params: SoftLegParams | None = None) -> System:
    params = params or SoftLegParams()
    return System(
        "softleg",
        soft_leg_deriv,
        params,
        ("y", "z"),
        ("u1", "u2"),
        "R^2",
        tuple(params.rest),
    )


SYSTEMS = {"diffdrive": diffdrive_system, "arm": arm_system, "softleg": soft_leg_system}


def get_system(name: str) -> System:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None


@dataclass(frozen=True)
class SimProtocol:
    """Random-input data-generation protocol (normal inputs, diagonal covariance)."""

    n_trajectories: int
    duration: float
    dt: float
    input_mean: tuple
    input_std: tuple
    seed: int = 0
    substeps: int = 10
    hold: int = 1  # sampling intervals each random draw is held for
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or round(steps) < 1:
            raise ValueError("duration must be a positive integer multiple of dt")
        if len(self.input_mean) != len(self.input_std):
            raise ValueError("input mean and std must have the same length")
        if any(s < 0 for s in self.input_std):
            raise ValueError("input standard deviations must be non-negative")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.hold < 1:
            raise ValueError("hold must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def diffdrive_protocol(seed: int = 0, **overrides) -> SimProtocol:
    """100 trajectories of 50 s at 0.1 s, wheel speeds ~ N(0, 9^2) rad/s."""
    kw = dict(n_trajectories=100, duration=50.0, dt=0.1, input_mean=(0.0, 0.0), input_std=(9.0, 9.0))
    kw.update(overrides)
    return SimProtocol(seed=seed, **kw)


def arm_protocol(seed: int = 0, **overrides) -> SimProtocol:
    """100 trajectories of 2 s at 0.01 s, torques ~ N(0, 1) N m."""
    kw = dict(n_trajectories=100, duration=2.0, dt=0.01, input_mean=(0.0, 0.0), input_std=(1.0, 1.0))
    kw.update(overrides)
    return SimProtocol(seed=seed, **kw)


def random_inputs(protocol: SimProtocol, index: int, n_steps: int | None = None) -> np.ndarray:
    """Zero-order-hold input sequence for trajectory ``index``.

    Each trajectory draws from its own stream keyed by ``(seed, index)``;
    every draw is held for ``protocol.hold`` sampling intervals.
    """
    rng = np.random.default_rng([protocol.seed, index])
    n = protocol.n_steps if n_steps is None else n_steps
    draws = -(-n // protocol.hold)
    u = rng.normal(protocol.input_mean, protocol.input_std, size=(draws, len(protocol.input_mean)))
    return np.repeat(u, protocol.hold, axis=0)[:n]


def generate_dataset(system: System | str, protocol: SimProtocol) -> TrajectoryDataset:
    """Simulate ``protocol.n_trajectories`` runs from the system's rest state."""
    if isinstance(system, str):
        system = get_system(system)
    if len(protocol.input_mean) != len(system.input_names):
        raise ValueError(
            f"{system.name} takes {len(system.input_names)} inputs, "
            f"protocol provides {len(protocol.input_mean)}"
        )
    U = np.stack([random_inputs(protocol, k) for k in range(protocol.n_trajectories)])
    x0 = np.tile(np.asarray(system.x0, dtype=float), (protocol.n_trajectories, 1))
    X = integrate(system.deriv, system.params, x0, U, protocol.dt, protocol.substeps)
    trajectories = tuple(Trajectory(X[k], U[k]) for k in range(protocol.n_trajectories))
    meta = {"system": system.name, "seed": protocol.seed, "topology": system.topology}
    return TrajectoryDataset(trajectories, protocol.dt, system.state_names, system.input_names, meta)
