"""Baselines: direct-sum Hermite EDMD and SINDy with a LASSO fit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import hermite_sum_dictionary
from .edmd import KoopmanModel, assemble_snapshots, fit
from .linalg import DEFAULT_REL_TOL
from .predict import DivergenceError, Rollout
from .systems import integrate

SINDY_LIBRARY_VERSION = 1


class ConvergenceError(RuntimeError):
    pass


def baseline_hermite_dictionary(state_dim: int, input_dim: int, order: int = 2):
    """State and input dictionaries for the direct-sum Hermite baseline.

    Combined, they give ``[1, He1(z1), He2(z1), ..., He1(u_m), He2(u_m)]``
    over raw coordinates (angles are not embedded), width
    ``1 + order * (state_dim + input_dim)``.
    """
    return hermite_sum_dictionary(state_dim, order), hermite_sum_dictionary(input_dim, order)


def fit_baseline(dataset, rel_tol: float = DEFAULT_REL_TOL, order: int = 2) -> KoopmanModel:
    sd = hermite_sum_dictionary(dataset.state_dim, order, dataset.state_names)
    ud = hermite_sum_dictionary(dataset.input_dim, order, dataset.input_names)
    return fit(assemble_snapshots(dataset, sd, ud), rel_tol)


def sindy_library(z) -> np.ndarray:
    """Candidate functions ``[1, z, z**2, sin(z), cos(z)]``, each block over all of ``z``."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return np.hstack([np.ones((len(z), 1)), z, z**2, np.sin(z), np.cos(z)])


def sindy_labels(names) -> list[str]:
    names = list(names)
    return (
        ["1"]
        + names
        + [f"{n}^2" for n in names]
        + [f"sin({n})" for n in names]
        + [f"cos({n})" for n in names]
    )


def lasso_objective(gram, corr, yy, coef, lam) -> float:
    """``0.5 * mean((y - X c)^2) + lam * |c|_1`` from precomputed moments."""
    return float(0.5 * (yy - 2 * corr @ coef + coef @ gram @ coef) + lam * np.abs(coef).sum())


def lasso_cd(
    X,
    y,
    lam: float,
    tol: float = 1e-8,
    max_sweeps: int = 100_000,
    history: list | None = None,
) -> np.ndarray:
    """Cyclic coordinate descent with soft-thresholding.

    Minimises ``(1 / 2M) |y - X c|^2 + lam |c|_1``. Stops when the largest
    coefficient change in a sweep is below ``tol`` times the largest
    coefficient magnitude. When ``history`` is a list the objective after
    every sweep is appended to it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    M = X.shape[0]
    gram = X.T @ X / M
    corr = X.T @ y / M
    yy = float(y @ y / M)
    diag = np.diag(gram).copy()
    p = X.shape[1]
    coef = np.zeros(p)
    active = diag > 0
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if not active[j]:
                continue
            old = coef[j]
            rho = corr[j] - gram[j] @ coef + diag[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / diag[j]
            if new != old:
                coef[j] = new
                max_delta = max(max_delta, abs(new - old))
        if history is not None:
            history.append(lasso_objective(gram, corr, yy, coef, lam))
        scale = np.max(np.abs(coef))
        if max_delta <= tol * scale or scale == 0.0:
            return coef
    raise ConvergenceError(f"LASSO did not converge in {max_sweeps} sweeps")


def estimate_derivatives(states, dt: float, method: str = "central") -> np.ndarray:
    """Finite-difference time derivatives of one trajectory's states.

    ``"central"`` uses central differences inside and one-sided ones at the
    ends. ``"forward"`` returns ``(x_{m+1} - x_m) / dt`` for every sample but
    the last, which matches zero-order-hold inputs applied over
    ``[t_m, t_{m+1})``.
    """
    X = np.asarray(states, dtype=float)
    if method == "central":
        return np.gradient(X, dt, axis=0)
    if method == "forward":
        return np.diff(X, axis=0) / dt
    raise ValueError(f"unknown derivative method {method!r}")


@dataclass(frozen=True)
class SindyModel:
    coef: np.ndarray  # (library width, state_dim)
    state_dim: int
    input_dim: int
    dt: float
    sparsity: float
    derivative: str = "central"

    @property
    def nonzeros(self) -> int:
        return int(np.count_nonzero(self.coef))

    def rhs(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        z = np.concatenate([x, u], axis=-1)
        return (sindy_library(z.reshape(-1, z.shape[-1])) @ self.coef).reshape(x.shape)


def sindy_regression_data(dataset, derivative: str = "central"):
    """Stack ``(Theta, Xdot)`` over all trajectories of ``dataset``."""
    thetas, dots = [], []
    for tr in dataset.trajectories:
        d = estimate_derivatives(tr.states, dataset.dt, derivative)
        n = len(tr.inputs)  # one row per held input interval
        z = np.hstack([tr.states[:n], tr.inputs])
        thetas.append(sindy_library(z))
        dots.append(d[:n])
    return np.vstack(thetas), np.vstack(dots)


def sindy_fit_arrays(
    theta,
    xdot,
    sparsity: float,
    state_dim: int,
    input_dim: int,
    dt: float,
    derivative: str = "exact",
    threshold: float = 1e-6,
    tol: float = 1e-8,
    max_sweeps: int = 100_000,
) -> SindyModel:
    """Solve ``Xdot = Theta Xi`` column by column, then hard-threshold."""
    if sparsity < 0:
        raise ValueError("sparsity must be >= 0")
    xdot = np.atleast_2d(np.asarray(xdot, dtype=float))
    if xdot.shape[0] != np.shape(theta)[0]:
        xdot = xdot.T
    coef = np.column_stack(
        [lasso_cd(theta, xdot[:, i], sparsity, tol, max_sweeps) for i in range(xdot.shape[1])]
    )
    coef[np.abs(coef) < threshold] = 0.0
    return SindyModel(coef, state_dim, input_dim, dt, sparsity, derivative)


def sindy_fit(
    dataset,
    sparsity: float = 1e-3,
    derivative: str = "central",
    threshold: float = 1e-6,
    tol: float = 1e-8,
    max_sweeps: int = 100_000,
) -> SindyModel:
    theta, xdot = sindy_regression_data(dataset, derivative)
    return sindy_fit_arrays(
        theta,
        xdot,
        sparsity,
        dataset.state_dim,
        dataset.input_dim,
        dataset.dt,
        derivative,
        threshold,
        tol,
        max_sweeps,
    )


def _sindy_deriv(model: SindyModel, x, u):
    return model.rhs(x, u)


def sindy_rollout(model: SindyModel, x0, inputs=None, steps: int | None = None, substeps: int = 10) -> Rollout:
    """Integrate the identified ODE with RK4 under zero-order-hold inputs."""
    x0 = np.asarray(x0, dtype=float)
    if inputs is None:
        u = np.zeros((steps or 0, model.input_dim))
    elif model.input_dim == 0:
        u = np.zeros((len(inputs), 0))
    else:
        u = np.asarray(inputs, dtype=float).reshape(-1, model.input_dim)
    try:
        states = integrate(_sindy_deriv, model, x0, u, model.dt, substeps)
    except DivergenceError as exc:
        raise DivergenceError(f"SINDy rollout diverged at step {exc.step}", step=exc.step) from exc
    return Rollout(x0, u, states, model.dt)
