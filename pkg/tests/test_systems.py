import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koopman_lift import systems
from koopman_lift.predict import DivergenceError
from koopman_lift.systems import (
    ArmParams,
    DiffDriveParams,
    SimProtocol,
    arm_deriv,
    arm_energy,
    arm_gravity,
    arm_mass_matrix,
    diffdrive_deriv,
    generate_dataset,
    integrate,
)

DD = DiffDriveParams()
ARM = ArmParams()


def test_diffdrive_straight_and_spin():
    d = diffdrive_deriv(DD, [0, 0, 0.4], [3.0, 3.0])
    assert d[2] == 0.0
    assert np.hypot(d[0], d[1]) == pytest.approx(DD.r * 3.0, rel=1e-15)
    spin = diffdrive_deriv(DD, [1, 2, 0.4], [2.0, -2.0])
    assert spin[0] == 0.0 and spin[1] == 0.0 and spin[2] != 0.0


def test_diffdrive_circle_input_rates():
    d = diffdrive_deriv(DD, [0, 0, 0], [12.1369, 6.7310])
    assert d[0] == pytest.approx(0.031 * 18.8679, abs=1e-12)
    assert d[0] == pytest.approx(0.5849, abs=1e-4)
    assert d[2] == pytest.approx(0.062 / 0.228 * 5.4059, abs=1e-12)
    assert d[2] == pytest.approx(1.4700, abs=1e-4)


def test_params_validated():
    with pytest.raises(ValueError):
        DiffDriveParams(r=0.0)
    with pytest.raises(ValueError):
        ArmParams(m1=-1.0)
    ArmParams(g=0.0)


def test_arm_gravity_compensation():
    rng = np.random.default_rng(0)
    for _ in range(20):
        t1, t2 = rng.uniform(-np.pi, np.pi, 2)
        tau = arm_gravity(ARM, t1, t2)
        acc = arm_deriv(ARM, [t1, t2, 0, 0], tau)
        np.testing.assert_allclose(acc, 0.0, atol=1e-12)


def test_arm_hanging_equilibrium():
    np.testing.assert_allclose(arm_deriv(ARM, [-np.pi / 2, 0, 0, 0], [0, 0]), 0.0, atol=1e-12)


def test_arm_mass_matrix_spd():
    theta2 = np.random.default_rng(1).uniform(-np.pi, np.pi, 1000)
    M = arm_mass_matrix(ARM, theta2)
    np.testing.assert_array_equal(M, np.swapaxes(M, -1, -2))
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_straight_line_integration():
    w = 7.5
    out = integrate(diffdrive_deriv, DD, [0, 0, 0], np.full((10, 2), w), 0.1)
    assert out.shape == (11, 3)
    assert out[-1, 0] == pytest.approx(DD.r * w * 1.0, abs=1e-9)
    assert abs(out[-1, 1]) < 1e-15


def test_arm_at_rest_stays_put():
    out = systems.arm_system().simulate(np.zeros((50, 2)), x0=[-np.pi / 2, 0, 0, 0], dt=0.01)
    np.testing.assert_allclose(out, np.broadcast_to(out[0], out.shape), atol=1e-9)  # cos(-pi/2) is 6e-17, not 0


def test_step_refinement():
    u = np.tile([12.1369, 6.7310], (50, 1))
    coarse = integrate(diffdrive_deriv, DD, [0, 0, 0], u, 0.1, substeps=10)
    fine = integrate(diffdrive_deriv, DD, [0, 0, 0], u, 0.1, substeps=20)
    assert np.abs(coarse[-1] - fine[-1]).max() < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(1, 15), st.floats(1, 15))
def test_constant_input_traces_circle(wr, wl):
    if abs(wr - wl) < 0.5:
        return
    radius = DD.L / 2 * (wr + wl) / (wr - wl)
    out = integrate(diffdrive_deriv, DD, [0, 0, 0], np.tile([wr, wl], (60, 1)), 0.1)
    dist = np.hypot(out[:, 0], out[:, 1] - radius)
    np.testing.assert_allclose(dist, abs(radius), rtol=1e-3)


def test_arm_kinetic_energy_conserved_without_gravity():
    p = ArmParams(g=0.0)
    rng = np.random.default_rng(2)
    x0 = np.concatenate([rng.uniform(-1, 1, 2), rng.uniform(-2, 2, 2)])
    out = integrate(arm_deriv, p, x0, np.zeros((200, 2)), 0.01)
    e = arm_energy(p, out)
    assert np.abs(e / e[0] - 1).max() < 1e-6


def test_arm_total_energy_conserved_with_gravity():
    out = integrate(arm_deriv, ARM, [0, 0, 0, 0], np.zeros((200, 2)), 0.01)
    e = arm_energy(ARM, out)
    scale = (ARM.m1 + ARM.m2) * ARM.g * ARM.L1
    assert np.abs(e - e[0]).max() < 1e-8 * scale


def test_protocol_shapes_and_determinism():
    dd = generate_dataset("diffdrive", systems.diffdrive_protocol(3))
    assert len(dd) == 100 and all(len(t) == 501 for t in dd.trajectories)
    U = np.concatenate([t.inputs for t in dd.trajectories])
    assert abs(U.mean()) < 0.1 and abs(U.std() - 9.0) < 0.1
    again = generate_dataset("diffdrive", systems.diffdrive_protocol(3))
    assert all(a.states.tobytes() == b.states.tobytes() for a, b in zip(dd.trajectories, again.trajectories))
    arm = generate_dataset("arm", systems.arm_protocol(0))
    assert len(arm) == 100 and len(arm.trajectories[0]) == 201
    assert np.concatenate([t.inputs for t in arm.trajectories]).std() == pytest.approx(1.0, abs=0.02)


def test_trajectory_streams_independent_of_count():
    small = generate_dataset("diffdrive", systems.diffdrive_protocol(5, n_trajectories=3, duration=1.0))
    big = generate_dataset("diffdrive", systems.diffdrive_protocol(5, n_trajectories=6, duration=1.0))
    for a, b in zip(small.trajectories, big.trajectories):
        np.testing.assert_array_equal(a.inputs, b.inputs)


def test_minimal_protocol():
    data = generate_dataset("softleg", SimProtocol(1, 0.1, 0.1, (0, 0), (1, 1)))
    assert len(data) == 1 and len(data.trajectories[0]) == 2 and data.n_pairs == 1


@pytest.mark.parametrize(
    "kw",
    [
        dict(n_trajectories=0),
        dict(duration=-1.0),
        dict(duration=0.15),
        dict(input_std=(1.0, -1.0)),
        dict(input_std=(1.0,)),
    ],
)
def test_protocol_validation(kw):
    base = dict(n_trajectories=2, duration=1.0, dt=0.1, input_mean=(0.0, 0.0), input_std=(1.0, 1.0))
    with pytest.raises(ValueError):
        SimProtocol(**{**base, **kw})


@pytest.mark.filterwarnings("ignore:overflow")
def test_divergence_names_time():
    def explode(p, x, u):
        return x * 1e200

    with pytest.raises(DivergenceError) as info:
        integrate(explode, None, [[1.0], [0.0]], np.zeros((2, 5, 0)), 0.1)
    assert info.value.time is not None and "trajectories [0]" in str(info.value)


def test_unknown_system():
    with pytest.raises(ValueError):
        systems.get_system("pendulum")


def test_input_hold_repeats_draws():
    p = SimProtocol(1, 1.0, 0.1, (0.0,), (1.0,), seed=2, hold=4)
    u = systems.random_inputs(p, 0)
    assert u.shape == (10, 1)
    np.testing.assert_array_equal(u[:4], np.repeat(u[:1], 4, axis=0))
    assert u[3, 0] != u[4, 0]
    with pytest.raises(ValueError):
        SimProtocol(1, 1.0, 0.1, (0.0,), (1.0,), hold=0)
