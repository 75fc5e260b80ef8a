import numpy as np
import pytest

from koopman_lift.data import Trajectory, TrajectoryDataset


def linear_dataset(a=0.5, x0s=(1.0, -2.0, 3.0), length=6, noise=0.0, seed=0):
    """1-D autonomous trajectories of x_{m+1} = a x_m (+ optional process noise)."""
    rng = np.random.default_rng(seed)
    trajs = []
    for x0 in x0s:
        x = [x0]
        for _ in range(length - 1):
            x.append(a * x[-1] + noise * rng.standard_normal())
        trajs.append(Trajectory(np.array(x)[:, None], np.zeros((length - 1, 0))))
    return TrajectoryDataset(tuple(trajs), 1.0, ("x",), (), {"topology": "R^1"})


@pytest.fixture
def small_diffdrive():
    from koopman_lift import systems

    return systems.generate_dataset("diffdrive", systems.diffdrive_protocol(0, n_trajectories=10, duration=10.0))
