"""Lifting dictionaries built from probabilist's Hermite polynomials.

Two kinds are provided:

``"acd"``
    Kronecker product of ``[He0(v), He1(v)] = [1, v]`` over every embedded
    coordinate ``v``, folded left in topology order. Over an embedded
    dimension ``d`` this yields ``2**d`` functions, starting with the
    constant and containing every coordinate on its own.
``"hermite-sum"``
    Direct sum ``[1, He1(z1), ..., He_k(z1), He1(z2), ...]`` over raw
    coordinates with one shared constant. This is the classical baseline.

Index convention for ``kron(a, b)``: entry ``i * len(b) + j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import DimensionError, Euclidean, TopologySpace, parse_topology

HERMITE_CONVENTION = "probabilist"
ORDERING_VERSION = 1
ACD = "acd"
HERMITE_SUM = "hermite-sum"


def hermite_pair(v):
    """Return ``(He0(v), He1(v)) = (1, v)``."""
    return (np.ones_like(v, dtype=float) if np.ndim(v) else 1.0), v


def hermite(order: int, v, max_order: int = 2):
    """Probabilist's Hermite polynomial ``He_order(v)``.

    Uses the three-term recurrence ``He_{n+1} = v He_n - n He_{n-1}``.
    """
    if order < 0 or order > max_order:
        raise ValueError(f"Hermite order must be in [0, {max_order}], got {order}")
    v = np.asarray(v, dtype=float)
    prev, cur = np.ones_like(v), v
    if order == 0:
        return prev if prev.ndim else float(prev)
    for n in range(1, order):
        prev, cur = cur, v * cur - n * prev
    return cur if cur.ndim else float(cur)


@dataclass(frozen=True)
class Dictionary:
    """An ordered set of lifting functions over a raw vector.

    ``space`` is the topology the raw vector lives in. Input dictionaries
    are bound to ``R^m`` (or to nothing when ``m == 0``).
    """

    kind: str
    space: TopologySpace | None
    order: int = 1
    names: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (ACD, HERMITE_SUM):
            raise ValueError(f"unknown dictionary kind {self.kind!r}")
        if self.kind == ACD and self.order != 1:
            raise ValueError("ACD dictionaries use zero- and first-order terms only")
        if self.kind == HERMITE_SUM and self.space is not None:
            if self.space.angle_mask.any():
                raise ValueError("hermite-sum dictionaries act on raw Euclidean coordinates")
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"x{i}" for i in range(self.raw_dim)))
        elif len(self.names) != self.raw_dim:
            raise DimensionError(f"expected {self.raw_dim} names, got {len(self.names)}")
        else:
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def raw_dim(self) -> int:
        return 0 if self.space is None else self.space.raw_dim

    @property
    def variable_dim(self) -> int:
        """Number of scalar variables the polynomials act on."""
        if self.space is None:
            return 0
        return self.space.embedded_dim if self.kind == ACD else self.space.raw_dim

    @property
    def size(self) -> int:
        d = self.variable_dim
        return 2**d if self.kind == ACD else 1 + self.order * d

    def variables(self) -> list[str]:
        if self.space is None:
            return []
        if self.kind == ACD:
            return self.space.embedded_labels(self.names)
        return list(self.names)

    @property
    def labels(self) -> list[str]:
        """Symbolic descriptors of the functions, in evaluation order."""
        vs = self.variables()
        if self.kind == HERMITE_SUM:
            out = ["1"]
            for v in vs:
                out += [v if k == 1 else f"He{k}({v})" for k in range(1, self.order + 1)]
            return out
        out = ["1"]
        for v in vs:
            out = [_mul(a, b) for a in out for b in ("1", v)]
        return out

    def variable_index(self, j: int) -> int:
        """Index of the entry equal to variable ``j`` on its own."""
        d = self.variable_dim
        if not 0 <= j < d:
            raise IndexError(j)
        if self.kind == ACD:
            return 2 ** (d - 1 - j)
        return 1 + self.order * j

    def variable_values(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if point.ndim == 0:
            point = point[None]
        if point.shape[-1] != self.raw_dim:
            raise DimensionError(
                f"dictionary expects length {self.raw_dim}, got {point.shape[-1]}"
            )
        if self.space is None:
            return point
        if self.kind == ACD:
            return self.space.embed(point)
        return point

    def evaluate(self, point) -> np.ndarray:
        """Lift ``point``; accepts a single vector or a (M, raw_dim) batch."""
        z = self.variable_values(point)
        if self.kind == ACD:
            return _kron_fold(z)
        return _direct_sum(z, self.order)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "topology": None if self.space is None else str(self.space),
            "order": self.order,
            "names": list(self.names),
            "hermite": HERMITE_CONVENTION,
            "ordering_version": ORDERING_VERSION,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "Dictionary":
        if desc.get("hermite") != HERMITE_CONVENTION:
            raise ValueError(f"unsupported Hermite convention {desc.get('hermite')!r}")
        if desc.get("ordering_version") != ORDERING_VERSION:
            raise ValueError(
                f"unknown dictionary ordering version {desc.get('ordering_version')!r}"
            )
        topo = desc["topology"]
        space = None if topo is None else parse_topology(topo)
        return cls(desc["kind"], space, desc["order"], tuple(desc["names"]))


def _mul(a: str, b: str) -> str:
    if a == "1":
        return b
    if b == "1":
        return a
    return f"{a}*{b}"


def _kron_fold(z: np.ndarray) -> np.ndarray:
    batch = z.shape[:-1]
    out = np.ones(batch + (1,))
    for j in range(z.shape[-1]):
        v = z[..., j][..., None]
        out = np.stack([out, out * v], axis=-1).reshape(batch + (-1,))
    return out


def _direct_sum(z: np.ndarray, order: int) -> np.ndarray:
    batch = z.shape[:-1]
    cols = [np.ones(batch)]
    for j in range(z.shape[-1]):
        cols += [hermite(k, z[..., j], max_order=order) for k in range(1, order + 1)]
    return np.stack(cols, axis=-1)


def build_state_dictionary(space, names=None) -> Dictionary:
    """ACD dictionary over a topology (string or :class:`TopologySpace`)."""
    return Dictionary(ACD, parse_topology(space), 1, names)


def build_input_dictionary(input_dim: int, names=None) -> Dictionary:
    if input_dim < 0:
        raise ValueError("input_dim must be >= 0")
    space = TopologySpace((Euclidean(input_dim),)) if input_dim else None
    if names is None:
        names = tuple(f"u{i + 1}" for i in range(input_dim))
    return Dictionary(ACD, space, 1, names)


def hermite_sum_dictionary(dim: int, order: int = 2, names=None) -> Dictionary:
    if dim < 0:
        raise ValueError("dim must be >= 0")
    space = TopologySpace((Euclidean(dim),)) if dim else None
    return Dictionary(HERMITE_SUM, space, order, names)


def evaluate(dictionary: Dictionary, point) -> np.ndarray:
    return dictionary.evaluate(point)


def combined_size(state_dict: Dictionary, input_dict: Dictionary) -> int:
    if state_dict.kind == ACD:
        return state_dict.size * input_dict.size
    return state_dict.size + input_dict.size - 1


def evaluate_combined(state_dict: Dictionary, input_dict: Dictionary, x, u) -> np.ndarray:
    """Lift a (state, input) pair into the regressor space.

    For ACD dictionaries this is ``kron(D(x), D(u))``; for the
    hermite-sum baseline it is the direct sum over the concatenated vector.
    """
    if state_dict.kind != input_dict.kind:
        raise ValueError("state and input dictionaries must be of the same kind")
    px = state_dict.evaluate(x)
    if input_dict.raw_dim == 0:
        u = np.zeros(px.shape[:-1] + (0,))
    pu = input_dict.evaluate(u)
    if px.shape[:-1] != pu.shape[:-1]:
        raise DimensionError(
            f"state batch {px.shape[:-1]} does not match input batch {pu.shape[:-1]}"
        )
    if state_dict.kind == ACD:
        return (px[..., :, None] * pu[..., None, :]).reshape(px.shape[:-1] + (-1,))
    return np.concatenate([px, pu[..., 1:]], axis=-1)


def state_block_rows(state_dict: Dictionary, input_dict: Dictionary) -> np.ndarray:
    """Regressor rows where every input function sits at its constant term."""
    if state_dict.kind == ACD:
        return np.arange(state_dict.size) * input_dict.size
    return np.arange(state_dict.size)


def selection_matrix(state_dict: Dictionary) -> np.ndarray:
    """0/1 matrix ``B`` with ``D(x) @ B`` equal to the embedded state."""
    d = state_dict.variable_dim
    B = np.zeros((state_dict.size, d))
    for j in range(d):
        B[state_dict.variable_index(j), j] = 1.0
    return B
