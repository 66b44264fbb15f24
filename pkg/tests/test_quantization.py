import numpy as np
import pytest
from hypothesis import given, strategies as st

from tada.errors import ConfigError, EmptySequenceError, TooFewMeasuresError, TooLargeKError
from tada.quantization import (DEFAULT_RADIUS, Measure, MeasureSequence, QuantizeConfig, atol_batch,
                               atol_minibatch, default_t_max, minibatch_step, quantization_cost)

from .oracles import optimal_quantization_cost


def line_measures():
    return MeasureSequence([[[0, 0]], [[10, 0]]])


def test_one_center_goes_to_the_barycenter():
    cs = atol_batch(line_measures(), QuantizeConfig(k=1, n_start=1, t_max=5))
    assert cs.centers.tolist() == [[5, 0]]
    costs, flags = cs.trajectories[0]
    assert costs[-1] == 25.0 and not any(flags)


def test_two_centers_fixed_point_has_zero_cost():
    cs = atol_batch(line_measures(), QuantizeConfig(k=2, n_start=3))
    assert sorted(cs.centers.tolist()) == [[0, 0], [10, 0]]
    assert cs.final_cost == 0.0


def test_three_atom_example_reaches_the_optimal_partition():
    seq = MeasureSequence([[[0, 0]], [[0, 1]], [[10, 0]]])
    cs = atol_batch(seq, QuantizeConfig(k=2, n_start=10, t_max=20))
    assert sorted(cs.centers.tolist()) == [[0, 0.5], [10, 0]]
    assert cs.final_cost == pytest.approx(2 * 0.25 / 3, abs=1e-15)


@pytest.mark.parametrize("centers, expected", [
    ([[0, 0], [0, 1], [10, 0]], 0.0),
    ([[0, 0.5], [10, 0]], 2 * 0.25 / 3),
])
def test_quantization_cost_examples(centers, expected):
    seq = MeasureSequence([[[0, 0]], [[0, 1]], [[10, 0]]])
    assert quantization_cost(seq, centers) == pytest.approx(expected, abs=1e-15)


def test_cost_single_atom_at_distance_two():
    assert quantization_cost(MeasureSequence([[[2, 0]]]), [[0, 0]]) == 4.0


def test_mean_measure_merges_duplicate_atoms():
    atoms, masses = MeasureSequence([[[1, 2], [1, 2]], [[1, 2], [3, 4]]]).mean_measure()
    assert atoms.tolist() == [[1, 2], [3, 4]]
    assert masses.tolist() == [1.5, 0.5]


def test_measure_sequence_bounds():
    with pytest.raises(ConfigError):
        MeasureSequence([[[5, 0]]], radius=1.0)
    with pytest.raises(ConfigError):
        MeasureSequence([([[0, 0]], [3.0])], mass_bound=2.0)
    with pytest.raises(ConfigError):
        MeasureSequence([[[0, 0], [1, 1]]], support_bound=1)
    with pytest.raises(EmptySequenceError):
        MeasureSequence([]).mean_measure()


def test_k_larger_than_support():
    with pytest.raises(TooLargeKError):
        atol_batch(line_measures(), QuantizeConfig(k=3))


def test_default_t_max():
    assert default_t_max(1) == 1
    assert default_t_max(100) == 2 * 5


def test_config_validation():
    for bad in (dict(k=0), dict(t_max=0), dict(minibatch_q=0), dict(n_start=0), dict(r_projection=0),
                dict(spacing_mode="sparse")):
        with pytest.raises(ConfigError):
            QuantizeConfig(**bad)


def random_sequence(rng, n=20, max_atoms=6, spread=1.0):
    return MeasureSequence([rng.uniform(0, spread, size=(rng.integers(1, max_atoms + 1), 2)) for _ in range(n)])


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_lloyd_cost_never_increases_without_resampling(seed, k):
    seq = random_sequence(np.random.default_rng(seed), n=8)
    cs = atol_batch(seq, QuantizeConfig(k=k, n_start=3, seed=seed, t_max=15))
    for costs, flags in cs.trajectories:
        for i, resampled in enumerate(flags):
            if not resampled:
                assert costs[i + 1] <= costs[i] * (1 + 1e-12) + 1e-15


@given(st.integers(0, 2**32 - 1))
def test_batch_centers_lie_in_support_hull_box(seed):
    seq = random_sequence(np.random.default_rng(seed))
    atoms, _ = seq.mean_measure()
    cs = atol_batch(seq, QuantizeConfig(k=3, n_start=2, seed=seed))
    assert np.all(cs.centers >= atoms.min(axis=0) - 1e-12)
    assert np.all(cs.centers <= atoms.max(axis=0) + 1e-12)


def test_determinism(rng):
    seq = random_sequence(rng)
    a = atol_batch(seq, QuantizeConfig(k=4, seed=11))
    b = atol_batch(seq, QuantizeConfig(k=4, seed=11))
    assert np.array_equal(a.centers, b.centers) and a.final_cost == b.final_cost
    c = atol_minibatch(seq, QuantizeConfig(k=4, seed=11, minibatch_q=2))
    d = atol_minibatch(seq, QuantizeConfig(k=4, seed=11, minibatch_q=2))
    assert np.array_equal(c.centers, d.centers)


def test_small_instances_reach_global_optimum():
    hits = 0
    for trial in range(40):
        rng = np.random.default_rng(1000 + trial)
        n_atoms, k = int(rng.integers(3, 7)), int(rng.integers(1, 4))
        atoms = rng.uniform(0, 2, size=(n_atoms, 2))
        seq = MeasureSequence([atoms[i:i + 1] for i in range(n_atoms)])
        cs = atol_batch(seq, QuantizeConfig(k=k, n_start=10, seed=trial, t_max=50))
        hits += abs(cs.final_cost - optimal_quantization_cost(atoms, np.full(n_atoms, 1 / n_atoms), k)) <= 1e-9
    assert hits >= 38


# minibatch

def test_minibatch_constant_sequence():
    seq = MeasureSequence([[[1, 0]]] * 8)
    for q in (1, 2, 4):
        cs = atol_minibatch(seq, QuantizeConfig(k=1, minibatch_q=q, n_start=1))
        assert cs.centers.tolist() == [[1, 0]]


def test_minibatch_step_zero_mass_cell_is_carried_over():
    centers = np.array([[0.0, 0.0], [5.0, 5.0]])
    new = minibatch_step(centers, [[[0.1, 0.0]]], [[[0.1, 0.0]]], radius=10)
    assert new[1].tolist() == [5.0, 5.0]
    assert new[0].tolist() == [0.1, 0.0]


def test_minibatch_step_mixes_batches_and_projects():
    mass_batch = [Measure(np.array([[0.0, 0.0]]), np.array([2.0]))]
    numerator_batch = [Measure(np.array([[1.0, 0.0]]), np.array([4.0]))]
    assert minibatch_step([[0.0, 0.0]], mass_batch, numerator_batch, radius=10).tolist() == [[2.0, 0.0]]
    assert minibatch_step([[0.0, 0.0]], mass_batch, numerator_batch, radius=1).tolist() == [[1.0, 0.0]]


@given(st.integers(0, 2**32 - 1), st.sampled_from(["dense", "spaced"]))
def test_minibatch_centers_in_ball(seed, spacing):
    seq = random_sequence(np.random.default_rng(seed), n=24, spread=3.0)
    cs = atol_minibatch(seq, QuantizeConfig(k=3, minibatch_q=2, r_projection=DEFAULT_RADIUS,
                                            n_start=2, seed=seed, spacing_mode=spacing))
    assert np.all(np.linalg.norm(cs.centers, axis=1) <= DEFAULT_RADIUS + 1e-12)


def test_minibatch_too_few_measures():
    seq = MeasureSequence([[[0, 0], [1, 1]]] * 15)
    with pytest.raises(TooFewMeasuresError):
        atol_minibatch(seq, QuantizeConfig(k=2, minibatch_q=5, spacing_mode="spaced"))
    atol_minibatch(seq, QuantizeConfig(k=2, minibatch_q=5, spacing_mode="dense"))


def test_minibatch_close_to_batch_on_clustered_data(rng):
    blobs = np.array([[0.2, 0.5], [1.0, 1.5], [0.5, 1.8]])
    seq = MeasureSequence([blobs + 0.01 * rng.standard_normal((3, 2)) for _ in range(400)])
    b = atol_batch(seq, QuantizeConfig(k=3))
    m = atol_minibatch(seq, QuantizeConfig(k=3, minibatch_q=10))
    order = lambda c: c[np.lexsort(c.T[::-1])]
    np.testing.assert_allclose(order(m.centers), order(b.centers), atol=0.01)
