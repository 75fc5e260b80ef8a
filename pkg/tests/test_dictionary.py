import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite_e import hermeval

from koopman_lift.dictionary import (
    Dictionary,
    build_input_dictionary,
    build_state_dictionary,
    combined_size,
    evaluate,
    evaluate_combined,
    hermite,
    hermite_pair,
    hermite_sum_dictionary,
    selection_matrix,
    state_block_rows,
)
from koopman_lift.edmd import SnapshotPairs, gram_matrices
from koopman_lift.topology import embed, parse_topology

TABLE_ROWS = ["R^1", "R^2", "R^3", "S^1 x S^1", "R^1 x S^1", "R^2 x S^1"]


def all_products_oracle(z):
    """Every product of a subset of ``z``; subset bits read most-significant first."""
    d = len(z)
    out = np.empty(2**d)
    for bits in itertools.product((0, 1), repeat=d):
        idx = sum(b << (d - 1 - j) for j, b in enumerate(bits))
        val = 1.0
        for j, b in enumerate(bits):
            if b:
                val *= z[j]
        out[idx] = val
    return out


@pytest.mark.parametrize("v, expect", [(0.0, (1, 0)), (2.5, (1, 2.5)), (-1.0, (1, -1))])
def test_hermite_pair(v, expect):
    assert tuple(hermite_pair(v)) == expect


@pytest.mark.parametrize("order, v, expect", [(2, 0.0, -1.0), (2, 2.0, 3.0), (1, 7.0, 7.0), (0, 5.0, 1.0)])
def test_hermite_values(order, v, expect):
    assert hermite(order, v) == expect


@given(st.floats(-20, 20), st.integers(0, 2))
def test_hermite_matches_numpy(v, order):
    coef = np.zeros(order + 1)
    coef[order] = 1
    assert hermite(order, v) == pytest.approx(hermeval(v, coef), rel=1e-12, abs=1e-12)


def test_hermite_order_limit():
    with pytest.raises(ValueError):
        hermite(3, 1.0)


def test_gaussian_orthogonality():
    rng = np.random.default_rng(1)
    z = rng.standard_normal(200_000)
    H = np.stack([hermite(k, z) for k in range(3)])
    for i in range(3):
        for j in range(3):
            prod = H[i] * H[j]
            est, se = prod.mean(), prod.std(ddof=1) / math.sqrt(len(z))
            target = math.factorial(i) if i == j else 0.0
            assert abs(est - target) <= 3 * se + 1e-15, (i, j, est, se)


@pytest.mark.parametrize(
    "topo, size", [("R^2 x S^1", 16), ("R^1", 2), ("S^1 x S^1", 16), ("R^3", 8), ("R^1 x S^1", 8)]
)
def test_state_dictionary_sizes(topo, size):
    d = build_state_dictionary(topo)
    assert d.size == size == len(d.labels)


def test_labels():
    assert build_state_dictionary("R^1", ["x"]).labels == ["1", "x"]
    assert build_state_dictionary("S^1 x S^1", ["a", "b"]).labels[:4] == ["1", "cos(b)", "sin(b)", "sin(b)*cos(b)"]
    assert build_input_dictionary(2).labels == ["1", "u2", "u1", "u1*u2"]
    assert build_input_dictionary(0).labels == ["1"]
    assert build_input_dictionary(1).labels == ["1", "u1"]


def test_evaluate_examples():
    np.testing.assert_array_equal(evaluate(build_state_dictionary("R^2"), [2.0, 3.0]), [1, 3, 2, 6])
    np.testing.assert_array_equal(evaluate(build_state_dictionary("S^1"), [0.0]), [1, 1, 0, 0])
    np.testing.assert_array_equal(evaluate(hermite_sum_dictionary(1), [2.0]), [1, 2, 3])
    np.testing.assert_array_equal(evaluate(build_input_dictionary(0), np.zeros(0)), [1])


def test_combined_examples():
    x_dict, u_dict = build_state_dictionary("R^1"), build_input_dictionary(1)
    np.testing.assert_array_equal(evaluate_combined(x_dict, u_dict, [2.0], [3.0]), [1, 3, 2, 6])
    sd = build_state_dictionary("R^2 x S^1")
    ud = build_input_dictionary(2)
    assert evaluate_combined(sd, ud, [0.1, 0.2, 0.3], [1.0, 2.0]).shape == (64,)
    assert combined_size(sd, ud) == 64
    auto = build_input_dictionary(0)
    x = [0.1, 0.2, 0.3]
    np.testing.assert_array_equal(evaluate_combined(sd, auto, x, None), evaluate(sd, x))


@pytest.mark.parametrize("topo", TABLE_ROWS)
def test_oracle_equivalence_1000_points(topo):
    space = parse_topology(topo)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-3, 3, size=(1000, space.raw_dim))
    d = build_state_dictionary(space)
    batch = d.evaluate(pts)
    for p, row in zip(pts, batch):
        np.testing.assert_allclose(row, all_products_oracle(embed(space, p)), rtol=0, atol=1e-12)
        np.testing.assert_array_equal(d.evaluate(p), row)


@settings(max_examples=50)
@given(
    st.sampled_from(TABLE_ROWS),
    st.integers(0, 3),
    st.integers(0, 2**31 - 1),
)
def test_kronecker_bilinearity(topo, m, seed):
    rng = np.random.default_rng(seed)
    sd, ud = build_state_dictionary(topo), build_input_dictionary(m)
    x = rng.uniform(-2, 2, sd.raw_dim)
    u = rng.uniform(-2, 2, m)
    c = evaluate_combined(sd, ud, x, u)
    px, pu = sd.evaluate(x), ud.evaluate(u)
    for i in range(sd.size):
        for j in range(ud.size):
            assert c[i * ud.size + j] == px[i] * pu[j]
    rows = state_block_rows(sd, ud)
    np.testing.assert_array_equal(c[rows], px)


@given(st.sampled_from(TABLE_ROWS), st.integers(0, 2**31 - 1))
def test_selection_recovers_embedding(topo, seed):
    space = parse_topology(topo)
    d = build_state_dictionary(space)
    x = np.random.default_rng(seed).uniform(-np.pi, np.pi, space.raw_dim)
    B = selection_matrix(d)
    assert set(np.unique(B)) <= {0.0, 1.0}
    np.testing.assert_array_equal(d.evaluate(x) @ B, embed(space, x))


def test_hermite_sum_layout():
    sd = hermite_sum_dictionary(3, names=("x", "y", "phi"))
    ud = hermite_sum_dictionary(2, names=("wr", "wl"))
    assert combined_size(sd, ud) == 11
    x, u = np.array([0.5, -1.0, 2.0]), np.array([3.0, -0.5])
    z = np.concatenate([x, u])
    expect = [1.0] + [f(v) for v in z for f in (lambda t: t, lambda t: t * t - 1)]
    np.testing.assert_allclose(evaluate_combined(sd, ud, x, u), expect, rtol=1e-15)
    assert hermite_sum_dictionary(1, names=("x",)).labels == ["1", "x", "He2(x)"]
    np.testing.assert_array_equal(sd.evaluate(x) @ selection_matrix(sd), x)


def test_mixed_kinds_rejected():
    with pytest.raises(ValueError):
        evaluate_combined(build_state_dictionary("R^1"), hermite_sum_dictionary(1), [1.0], [1.0])


def test_descriptor_round_trip_and_version_guard():
    d = build_state_dictionary("R^2 x S^1", ("x", "y", "phi"))
    desc = d.descriptor()
    assert desc["hermite"] == "probabilist" and desc["ordering_version"] == 1
    assert Dictionary.from_descriptor(desc) == d
    with pytest.raises(ValueError, match="ordering version"):
        Dictionary.from_descriptor({**desc, "ordering_version": 2})
    with pytest.raises(ValueError, match="Hermite"):
        Dictionary.from_descriptor({**desc, "hermite": "physicist"})


def test_gram_nearly_diagonal_for_gaussian_states():
    rng = np.random.default_rng(0)
    M = 100_000
    x = rng.standard_normal((M, 1))
    sd, ud = build_state_dictionary("R^1"), build_input_dictionary(0)
    reg = evaluate_combined(sd, ud, x, None)
    pairs = SnapshotPairs(reg, sd.evaluate(x), np.array([0]), sd, ud)
    G, _ = gram_matrices(pairs)
    off = np.abs(G - np.diag(np.diag(G))).max()
    assert off / np.abs(np.diag(G)).max() < 0.05
