"""Configuration-space topologies and their Euclidean embeddings.

A space is a left-to-right Cartesian product of atoms. Euclidean atoms
``R^n`` pass their ``n`` coordinates through unchanged; each circle atom
``S^1`` consumes one angle and emits the pair ``(sin, cos)``.

>>> space = parse_topology("R^2 x S^1")
>>> space.raw_dim, space.embedded_dim
(3, 4)
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


class TopologyError(ValueError):
    """Raised for malformed or unsupported topology expressions."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class DimensionError(ValueError):
    """Raised when a vector does not match the dimension of its space."""


class DegenerateAngleError(ValueError):
    """Raised when an embedded (sin, cos) pair is (0, 0)."""


@dataclass(frozen=True)
class Euclidean:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise TopologyError(f"Euclidean dimension must be >= 1, got {self.n}")

    def __str__(self):
        return f"R^{self.n}"


@dataclass(frozen=True)
class Circle:
    def __str__(self):
        return "S^1"


Atom = Union[Euclidean, Circle]


@dataclass(frozen=True)
class TopologySpace:
    """Cartesian product of atoms, ordered like the raw state vector."""

    atoms: tuple

    def __post_init__(self):
        if not self.atoms:
            raise TopologyError("topology must contain at least one atom")
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def __str__(self):
        return " x ".join(str(a) for a in self.atoms)

    @property
    def raw_dim(self) -> int:
        return sum(a.n if isinstance(a, Euclidean) else 1 for a in self.atoms)

    @property
    def embedded_dim(self) -> int:
        return sum(a.n if isinstance(a, Euclidean) else 2 for a in self.atoms)

    @property
    def angle_mask(self) -> np.ndarray:
        """Boolean mask over raw coordinates, True where the coordinate is an angle."""
        mask = []
        for a in self.atoms:
            mask.extend([False] * a.n if isinstance(a, Euclidean) else [True])
        return np.array(mask, dtype=bool)

    def embedded_labels(self, names=None) -> list[str]:
        names = list(names) if names is not None else [f"x{i}" for i in range(self.raw_dim)]
        if len(names) != self.raw_dim:
            raise DimensionError(f"expected {self.raw_dim} names, got {len(names)}")
        labels = []
        for name, is_angle in zip(names, self.angle_mask):
            labels.extend([f"sin({name})", f"cos({name})"] if is_angle else [name])
        return labels

    def embed(self, raw) -> np.ndarray:
        return embed(self, raw)

    def unembed(self, embedded) -> np.ndarray:
        return unembed(self, embedded)


_ATOM_RE = re.compile(r"\s*([A-Za-z])\s*\^\s*(\d+)\s*")


def parse_topology(text: str) -> TopologySpace:
    """Parse an expression such as ``"R^2 x S^1"``.

    Grammar: ``space := atom ('x' atom)*`` with ``atom := 'R^'n | 'E^'n | 'S^1'``.
    ``E`` is an alias of ``R``. Higher spheres are rejected; express chart
    angles as products of circles instead.
    """
    if isinstance(text, TopologySpace):
        return text
    atoms = []
    pos = 0
    while True:
        m = _ATOM_RE.match(text, pos)
        if m is None:
            raise TopologyError(f"expected an atom like 'R^2' or 'S^1' in {text!r}", pos)
        letter, power = m.group(1), int(m.group(2))
        if letter in "RE":
            if power < 1:
                raise TopologyError(f"Euclidean dimension must be >= 1 in {text!r}", m.start(1))
            atoms.append(Euclidean(power))
        elif letter == "S" and power == 1:
            atoms.append(Circle())
        else:
            raise TopologyError(
                f"unsupported atom '{letter}^{power}' in {text!r}", m.start(1)
            )
        pos = m.end()
        if pos == len(text):
            break
        sep = re.compile(r"x", re.IGNORECASE).match(text, pos)
        if sep is None:
            raise TopologyError(f"expected 'x' between atoms in {text!r}", pos)
        pos = sep.end()
    return TopologySpace(tuple(atoms))


def _check_last_axis(arr: np.ndarray, expected: int, what: str):
    if arr.ndim == 0 or arr.shape[-1] != expected:
        got = arr.shape[-1] if arr.ndim else "a scalar"
        raise DimensionError(f"{what}: expected length {expected}, got {got}")


def embed(space: TopologySpace, raw) -> np.ndarray:
    """Map raw coordinates to Euclidean ones; works on (..., raw_dim) arrays."""
    raw = np.asarray(raw, dtype=float)
    _check_last_axis(raw, space.raw_dim, "embed")
    mask = space.angle_mask
    if not mask.any():
        return raw.copy()
    cols = []
    for i, is_angle in enumerate(mask):
        v = raw[..., i]
        if is_angle:
            cols.extend([np.sin(v), np.cos(v)])
        else:
            cols.append(v)
    return np.stack(cols, axis=-1)


def unembed(space: TopologySpace, embedded) -> np.ndarray:
    """Inverse of :func:`embed`; angles come back in (-pi, pi] via atan2.

    The (sin, cos) pairs need not be unit norm.
    """
    emb = np.asarray(embedded, dtype=float)
    _check_last_axis(emb, space.embedded_dim, "unembed")
    cols = []
    j = 0
    for is_angle in space.angle_mask:
        if is_angle:
            s, c = emb[..., j], emb[..., j + 1]
            if np.any((s == 0.0) & (c == 0.0)):
                raise DegenerateAngleError(
                    f"cannot recover angle from (sin, cos) = (0, 0) at embedded index {j}"
                )
            ang = np.arctan2(s, c)
            # atan2(-0.0, c<0) gives -pi; keep the half-open range (-pi, pi]
            cols.append(np.where(ang == -np.pi, np.pi, ang))
            j += 2
        else:
            cols.append(emb[..., j])
            j += 1
    return np.stack(cols, axis=-1)
