"""Koopman lifting dictionaries built from configuration-space topology.

Typical use::

    from koopman_lift import systems, edmd, predict

    data = systems.generate_dataset("diffdrive", systems.diffdrive_protocol(seed=0))
    model = edmd.fit_acd(data)             # topology comes from the dataset
    traj = predict.rollout(model, [0, 0, 0], [[12.1, 6.7]] * 50)
"""
from .dictionary import (
    Dictionary,
    build_input_dictionary,
    build_state_dictionary,
    evaluate,
    evaluate_combined,
    hermite,
    hermite_pair,
)
from .edmd import KoopmanModel, assemble_snapshots, decompose, fit, fit_acd
from .linalg import eig_with_left, pinv_truncated
from .predict import Rollout, rollout, step
from .topology import TopologySpace, embed, parse_topology, unembed

__version__ = "0.1.0"

__all__ = [
    "Dictionary",
    "KoopmanModel",
    "Rollout",
    "TopologySpace",
    "assemble_snapshots",
    "build_input_dictionary",
    "build_state_dictionary",
    "decompose",
    "eig_with_left",
    "embed",
    "evaluate",
    "evaluate_combined",
    "fit",
    "fit_acd",
    "hermite",
    "hermite_pair",
    "parse_topology",
    "pinv_truncated",
    "rollout",
    "step",
    "unembed",
]
