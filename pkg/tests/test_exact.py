"""The three inference routes are checked against each other and against
small hand-counted facts.  Brute-force enumeration is the anchor: it sums
the same event walk the other engines factorize, so agreement here is a
real cross-check rather than a reimplementation of one formula twice.
"""

import numpy as np
import pytest
from scipy.special import logsumexp

import hscrf
from hscrf.configurations import enumerate_transition_sequences, is_valid_configuration
from hscrf.exact import (
    SliceChain,
    brute_force_posterior,
    draw_categorical,
    exact_marginals,
    read_marginals,
    sample_states_given_e,
    tree_log_sum,
    tree_state_marginals,
    write_marginals,
)
from hscrf.model import ModelParams, ObservationSequence

from conftest import random_instance


def all_e_rows(topo, length):
    return [
        np.asarray(row, dtype=np.int64)
        for row in enumerate_transition_sequences(topo.depth, length, topo.root_persists)
    ]


class TestAgainstHandCounts:
    def test_log_partition_of_smallest_model(self):
        # four configurations, all with zero potential
        topo = hscrf.fully_connected_topology((1, 2))
        params = ModelParams.zeros(topo, 2)
        obs = ObservationSequence(np.array([0, 1]), 2)
        ms = exact_marginals(params, topo, obs)
        assert ms.log_partition == pytest.approx(np.log(4.0), abs=1e-12)

    def test_uniform_marginals_at_zero_weights(self):
        topo = hscrf.fully_connected_topology((1, 3, 2))
        params = ModelParams.zeros(topo, 2)
        obs = ObservationSequence(np.array([0, 1, 0]), 2)
        ms = exact_marginals(params, topo, obs)
        np.testing.assert_allclose(ms.state[1], 1.0 / 3.0, atol=1e-12)
        np.testing.assert_allclose(ms.state[2], 0.5, atol=1e-12)

    def test_admissible_tuple_count(self):
        # fully connected (1,2,4,7): one path choice per level product
        topo = hscrf.fully_connected_topology((1, 2, 4, 7))
        params = ModelParams.zeros(topo, 3)
        chain = SliceChain.from_model(params, topo)
        assert chain.num_tuples == 56

    def test_slice_state_cap(self):
        topo = hscrf.fully_connected_topology((1, 2, 4, 7))
        params = ModelParams.zeros(topo, 3)
        assert SliceChain.from_model(params, topo, slice_cap=224) is not None
        with pytest.raises(ValueError, match="collapsed exact inference"):
            SliceChain.from_model(params, topo, slice_cap=223)


class TestBruteForce:
    def test_zero_weights_uniform(self):
        topo = hscrf.fully_connected_topology((1, 2, 2))
        params = ModelParams.zeros(topo, 2)
        obs = ObservationSequence(np.array([0, 1, 1]), 2)
        bp = brute_force_posterior(params, topo, obs)
        n = len(bp.configurations)
        np.testing.assert_allclose(bp.probabilities(), 1.0 / n, atol=1e-12)
        assert bp.log_partition == pytest.approx(np.log(n), abs=1e-12)

    def test_probabilities_normalize(self, rng):
        topo, params, obs = random_instance(rng, max_length=4)
        bp = brute_force_posterior(params, topo, obs)
        assert bp.probabilities().sum() == pytest.approx(1.0, abs=1e-12)


def test_chain_matches_brute_force(rng):
    for _ in range(20):
        topo, params, obs = random_instance(rng, max_length=4)
        ms = exact_marginals(params, topo, obs)
        bm = brute_force_posterior(params, topo, obs).marginals()
        assert ms.log_partition == pytest.approx(bm.log_partition, abs=1e-8)
        for lev in range(topo.depth):
            np.testing.assert_allclose(ms.state[lev], bm.state[lev], atol=1e-8)
        np.testing.assert_allclose(ms.transition, bm.transition, atol=1e-8)


def test_marginal_rows_normalize(rng):
    topo, params, obs = random_instance(rng, max_length=5, scale=2.0)
    ms = exact_marginals(params, topo, obs)
    for table in ms.state:
        np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-9)
    if obs.length > 1:
        np.testing.assert_allclose(ms.transition.sum(axis=1), 1.0, atol=1e-9)


class TestRestrictedSums:
    def test_chain_and_tree_agree_per_row(self, rng):
        for _ in range(8):
            topo, params, obs = random_instance(rng, max_length=4)
            chain = SliceChain.from_model(params, topo)
            for e in all_e_rows(topo, obs.length):
                a = chain.restricted_log_mass(obs, e)
                b = tree_log_sum(params, topo, obs, e)
                assert a == pytest.approx(b, abs=1e-8)

    def test_rows_sum_to_partition(self, rng):
        for _ in range(8):
            topo, params, obs = random_instance(rng, max_length=4)
            ms = exact_marginals(params, topo, obs)
            logs = [
                tree_log_sum(params, topo, obs, e)
                for e in all_e_rows(topo, obs.length)
            ]
            assert logsumexp(logs) == pytest.approx(ms.log_partition, abs=1e-8)

    def test_boundary_marginals_from_restricted_rows(self, rng):
        topo, params, obs = random_instance(rng, max_length=4)
        ms = exact_marginals(params, topo, obs)
        rows = all_e_rows(topo, obs.length)
        logs = np.array([tree_log_sum(params, topo, obs, e) for e in rows])
        probs = np.exp(logs - ms.log_partition)
        for t in range(obs.length - 1):
            for lev in range(topo.depth):
                mass = sum(p for p, e in zip(probs, rows) if e[t] == lev)
                assert ms.transition[t, lev] == pytest.approx(mass, abs=1e-8)

    def test_zero_weight_row_mass_counts_grids(self):
        topo = hscrf.fully_connected_topology((1, 2, 2))
        params = ModelParams.zeros(topo, 2)
        obs = ObservationSequence(np.array([0, 1, 0]), 2)
        # e=(2,2): bottom splits into three segments, middle stays whole
        value = tree_log_sum(params, topo, obs, np.array([2, 2]))
        assert value == pytest.approx(np.log(2**3 * 2), abs=1e-12)
        # e=(1,1): both child levels split everywhere
        value = tree_log_sum(params, topo, obs, np.array([1, 1]))
        assert value == pytest.approx(np.log(2**3 * 2**3), abs=1e-12)


def test_linear_chain_oracle(rng):
    # depth 2 with a pinned root is an ordinary linear-chain model; an
    # inline forward recursion over bottom states is a fully independent
    # route to the same partition function
    size = 3
    topo = hscrf.fully_connected_topology((1, size))
    params = ModelParams.random(topo, 2, rng, scale=1.2)
    length = 6
    obs = ObservationSequence(rng.integers(0, 2, size=length), 2)

    alpha = params.init[0][0] + params.obs[:, obs.symbols[0]]
    for t in range(1, length):
        alpha = (
            logsumexp(alpha[:, None] + params.trans[0][0], axis=0)
            + params.obs[:, obs.symbols[t]]
        )
    expected = (
        logsumexp(alpha + params.end[0][0])
        + params.root_init[0]
        + params.root_end[0]
    )

    ms = exact_marginals(params, topo, obs)
    assert ms.log_partition == pytest.approx(expected, abs=1e-9)
    e = np.ones(length - 1, dtype=np.int64)
    assert tree_log_sum(params, topo, obs, e) == pytest.approx(expected, abs=1e-9)


class TestTreePosteriors:
    def test_matches_conditioned_brute_force(self, rng):
        for _ in range(6):
            topo, params, obs = random_instance(rng, max_length=4)
            bp = brute_force_posterior(params, topo, obs)
            probs = bp.probabilities()
            for e in all_e_rows(topo, obs.length):
                keep = [
                    i
                    for i, cfg in enumerate(bp.configurations)
                    if np.array_equal(cfg.e, e)
                ]
                weight = probs[keep]
                weight = weight / weight.sum()
                tables = tree_state_marginals(params, topo, obs, e)
                for lev in range(topo.depth):
                    acc = np.zeros((obs.length, topo.sizes[lev]))
                    for w, i in zip(weight, keep):
                        x = bp.configurations[i].x
                        acc[np.arange(obs.length), x[lev]] += w
                    np.testing.assert_allclose(tables[lev], acc, atol=1e-8)

    def test_constant_within_segments(self, rng):
        topo, params, obs = random_instance(rng, max_length=5)
        for e in all_e_rows(topo, obs.length)[:6]:
            tables = tree_state_marginals(params, topo, obs, e)
            for lev in range(topo.depth):
                cuts = np.flatnonzero(e <= lev)
                starts = np.concatenate(([0], cuts + 1))
                ends = np.concatenate((cuts, [obs.length - 1]))
                for a, b in zip(starts, ends):
                    span = tables[lev][a : b + 1]
                    np.testing.assert_allclose(span - span[0], 0.0, atol=1e-12)

    def test_chain_posterior_equals_tree_posterior(self, rng):
        # the sampler's fast accumulation path against the tree passes
        for _ in range(8):
            topo, params, obs = random_instance(rng, max_length=5, scale=1.5)
            chain = SliceChain.from_model(params, topo)
            em = chain.emissions(obs)
            for e in all_e_rows(topo, obs.length)[:8]:
                posterior = chain.restricted_state_posterior(em, e)
                tables = [posterior @ proj for proj in chain.projectors]
                trees = tree_state_marginals(params, topo, obs, e)
                for lev in range(topo.depth):
                    np.testing.assert_allclose(tables[lev], trees[lev], atol=1e-10)

    def test_uniform_at_zero_weights(self):
        topo = hscrf.fully_connected_topology((1, 2, 3))
        params = ModelParams.zeros(topo, 2)
        obs = ObservationSequence(np.array([0, 1, 0, 1]), 2)
        tables = tree_state_marginals(params, topo, obs, np.array([2, 1, 2]))
        np.testing.assert_allclose(tables[1], 0.5, atol=1e-12)
        np.testing.assert_allclose(tables[2], 1.0 / 3.0, atol=1e-12)


class TestStateSampling:
    def test_draws_are_valid(self, rng):
        topo, params, obs = random_instance(rng, max_length=5)
        e = all_e_rows(topo, obs.length)[0]
        for _ in range(25):
            x = sample_states_given_e(params, topo, obs, e, rng)
            cfg = hscrf.Configuration(x, e)
            assert is_valid_configuration(cfg, topo)

    def test_frequencies_follow_posterior(self):
        rng = np.random.default_rng(5)
        topo = hscrf.fully_connected_topology((1, 2, 2))
        params = ModelParams.random(topo, 2, rng, scale=1.0)
        obs = ObservationSequence(np.array([0, 1, 1]), 2)
        e = np.array([2, 1])
        tables = tree_state_marginals(params, topo, obs, e)
        counts = [np.zeros_like(t) for t in tables]
        n = 1200
        for _ in range(n):
            x = sample_states_given_e(params, topo, obs, e, rng)
            for lev in range(topo.depth):
                counts[lev][np.arange(obs.length), x[lev]] += 1.0
        for lev in range(topo.depth):
            np.testing.assert_allclose(counts[lev] / n, tables[lev], atol=0.06)


def test_draw_categorical_is_inverse_cdf():
    class FixedUniform:
        def __init__(self, u):
            self.u = u

        def random(self):
            return self.u

    p = np.array([0.2, 0.5, 0.3])
    assert draw_categorical(p, FixedUniform(0.10)) == 0
    assert draw_categorical(p, FixedUniform(0.69)) == 1
    assert draw_categorical(p, FixedUniform(0.71)) == 2
    assert draw_categorical(p, FixedUniform(0.9999999)) == 2


def test_marginals_file_round_trip(rng, tmp_path):
    topo, params, obs = random_instance(rng, max_length=5)
    ms = exact_marginals(params, topo, obs)
    state = tmp_path / "state.csv"
    trans = tmp_path / "transition.csv"
    meta = tmp_path / "meta.json"
    write_marginals(ms, state, trans, meta)
    again = read_marginals(state, trans, meta)
    assert again.log_partition == ms.log_partition
    for lev in range(topo.depth):
        np.testing.assert_array_equal(again.state[lev], ms.state[lev])
    np.testing.assert_array_equal(again.transition, ms.transition)
