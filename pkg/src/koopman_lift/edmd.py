"""Finite-dimensional Koopman operator estimation from snapshot pairs.

The regressor for pair ``m`` is the combined lift of ``(x_m, u_m)`` and the
target is the state-only lift of ``x_{m+1}``, so with inputs the operator
``K`` is rectangular: ``(N_x * N_u) x N_x``. Row-vector convention
throughout: ``D(x_{m+1}) ~ D(x_m, u_m) @ K``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .dictionary import (
    Dictionary,
    build_input_dictionary,
    build_state_dictionary,
    evaluate_combined,
    selection_matrix,
    state_block_rows,
)
from .linalg import DEFAULT_REL_TOL, EigenSystem, eig_with_left, pinv_truncated

_CHUNK = 2048


@dataclass(frozen=True)
class SnapshotPairs:
    """Lifted regressor/target rows; ``offsets[k]`` is where trajectory k starts."""

    regressors: np.ndarray
    targets: np.ndarray
    offsets: np.ndarray
    state_dict: Dictionary
    input_dict: Dictionary
    dt: float | None = None

    @property
    def M(self) -> int:
        return self.regressors.shape[0]


def assemble_snapshots(dataset, state_dict: Dictionary, input_dict: Dictionary) -> SnapshotPairs:
    """Lift every consecutive pair within each trajectory of ``dataset``.

    Pairs never straddle two trajectories. ``u_m`` is the input held over
    ``[t_m, t_{m+1})``.
    """
    trajectories = list(dataset.trajectories)
    if not trajectories:
        raise ValueError("dataset is empty")
    starts, ends, inputs, offsets = [], [], [], []
    count = 0
    for k, traj in enumerate(trajectories):
        X = np.asarray(traj.states, dtype=float)
        U = np.asarray(traj.inputs, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        if X.shape[0] < 2:
            raise ValueError(f"trajectory {k} needs at least 2 samples, has {X.shape[0]}")
        if U.shape[0] != X.shape[0] - 1:
            raise ValueError(
                f"trajectory {k}: {U.shape[0]} input rows for {X.shape[0]} states "
                "(expected one fewer)"
            )
        offsets.append(count)
        starts.append(X[:-1])
        ends.append(X[1:])
        inputs.append(U)
        count += X.shape[0] - 1
    regressors = evaluate_combined(state_dict, input_dict, np.vstack(starts), np.vstack(inputs))
    targets = state_dict.evaluate(np.vstack(ends))
    return SnapshotPairs(
        regressors,
        targets,
        np.asarray(offsets),
        state_dict,
        input_dict,
        getattr(dataset, "dt", None),
    )


def _pairwise_gram(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``left.T @ right`` accumulated over row chunks with a pairwise tree."""
    parts = [
        left[i : i + _CHUNK].T @ right[i : i + _CHUNK] for i in range(0, left.shape[0], _CHUNK)
    ]
    while len(parts) > 1:
        merged = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def gram_matrices(pairs: SnapshotPairs) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(G, A)`` averaged over the ``M`` pairs."""
    M = pairs.M
    if M < 1:
        raise ValueError("need at least one snapshot pair")
    G = _pairwise_gram(pairs.regressors, pairs.regressors) / M
    A = _pairwise_gram(pairs.regressors, pairs.targets) / M
    return G, A


def residual(pairs: SnapshotPairs, K: np.ndarray) -> float:
    """Half the summed squared one-step lifting error."""
    err = pairs.targets - pairs.regressors @ K
    return 0.5 * float(np.sum(err * err))


@dataclass(frozen=True)
class Decomposition:
    """Spectral data of the state-to-state block.

    ``eigenfunctions[:, n]`` holds the coefficients of ``phi_n`` so that
    ``phi_n(x) = D(x) @ eigenfunctions[:, n]``; ``modes[n]`` is ``v_n``.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    left: np.ndarray
    modes: np.ndarray


@dataclass(frozen=True)
class KoopmanModel:
    K: np.ndarray
    B: np.ndarray
    state_dict: Dictionary
    input_dict: Dictionary
    dt: float | None = None
    rel_tol: float = DEFAULT_REL_TOL
    decomposition: Decomposition | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def space(self):
        return self.state_dict.space

    @property
    def state_dim(self) -> int:
        return self.state_dict.raw_dim

    @property
    def input_dim(self) -> int:
        return self.input_dict.raw_dim

    def state_operator(self) -> np.ndarray:
        """Square block of ``K`` with the input dictionary frozen at its constant."""
        return self.K[state_block_rows(self.state_dict, self.input_dict)]

    def lift(self, x, u=None) -> np.ndarray:
        return evaluate_combined(self.state_dict, self.input_dict, x, u)


def fit(pairs: SnapshotPairs, rel_tol: float = DEFAULT_REL_TOL) -> KoopmanModel:
    """Least-squares Koopman estimate ``K = pinv(G) @ A``."""
    G, A = gram_matrices(pairs)
    K = pinv_truncated(G, rel_tol) @ A
    sv = np.linalg.svd(G, compute_uv=False)
    diagnostics = {
        "M": pairs.M,
        "N_x": pairs.state_dict.size,
        "N_u": pairs.input_dict.size,
        "residual": residual(pairs, K),
        "rank": int(np.sum(sv >= rel_tol * sv[0])) if sv[0] > 0 else 0,
        "cond_G": float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf"),
    }
    return KoopmanModel(
        K,
        selection_matrix(pairs.state_dict),
        pairs.state_dict,
        pairs.input_dict,
        pairs.dt,
        rel_tol,
        None,
        diagnostics,
    )


def decompose(model: KoopmanModel, min_conditioning: float = 1e-10) -> KoopmanModel:
    """Attach eigenvalues, eigenfunctions and modes of the state block.

    With ``K_s = sum_n lambda_n xi_n w_n^T``, the one-step predictor
    ``D(x) @ K_s @ B`` equals ``sum_n lambda_n phi_n(x) v_n`` where
    ``phi_n(x) = D(x) @ xi_n`` and ``v_n = B^T w_n``.
    """
    eig: EigenSystem = eig_with_left(model.state_operator(), min_conditioning)
    modes = (model.B.T @ eig.left).T
    dec = Decomposition(eig.values, eig.right, eig.left, modes)
    return dataclasses.replace(model, decomposition=dec)


def eigenfunctions(model: KoopmanModel, x) -> np.ndarray:
    """Evaluate every ``phi_n`` at ``x`` (single state or batch)."""
    if model.decomposition is None:
        raise ValueError("model has no decomposition; call decompose() first")
    return model.state_dict.evaluate(x) @ model.decomposition.eigenfunctions


def fit_acd(dataset, topology=None, rel_tol: float = DEFAULT_REL_TOL) -> KoopmanModel:
    """Build the Kronecker dictionaries for ``dataset`` and fit ``K``.

    ``topology`` defaults to the dataset's ``topology`` metadata entry.
    """
    if topology is None:
        topology = dataset.metadata.get("topology")
        if topology is None:
            raise ValueError("no topology given and none recorded in the dataset")
    state_dict = build_state_dictionary(topology, dataset.state_names)
    input_dict = build_input_dictionary(dataset.input_dim, dataset.input_names)
    return fit(assemble_snapshots(dataset, state_dict, input_dict), rel_tol)
