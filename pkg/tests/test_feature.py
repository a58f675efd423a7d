import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldanneal.errors import DimensionError, ParameterError
from ldanneal.feature import (
    FeatureSpec,
    ProtocolParams,
    as_mask,
    build_feature_hamiltonian,
    build_hfm,
    lambda_at,
    monotone_path,
    select_samples,
    update_mask,
)
from ldanneal.samplers import SampleSet, exact_enumerate
from ldanneal.spin_model import SpinGlassInstance, conjugate, energies, energy, q_f
from oracles import all_states, brute_q_f, random_instance, random_state


def hfm_energy_oracle(instance, ref, mask, lam, s):
    """Energy of the masked mixture written straight from its term rules."""
    e = 0.0
    for (i, j), J in instance.couplers.items():
        if mask[i] and mask[j]:
            e += (1 - lam) * J * s[i] * s[j]
            if J * ref[i] * ref[j] < 0:
                k = -(abs(J) / 2) * (ref[i] * ref[j] * s[i] * s[j] + ref[i] * s[i] + ref[j] * s[j])
                e += lam * k
        else:
            e += J * s[i] * s[j]
    for i, h in instance.biases.items():
        if mask[i] and h * ref[i] >= 0:
            e += (1 - lam) * h * s[i]
        else:
            e += h * s[i]
    return e


# -- feature Hamiltonian -----------------------------------------------------


def test_feature_hamiltonian_two_site_spectrum():
    inst = SpinGlassInstance(2, {(0, 1): -1.0})
    hf = build_feature_hamiltonian(inst, [1, 1])
    assert energy(hf, [1, 1]) == -1.5
    for s in ([1, -1], [-1, 1], [-1, -1]):
        assert energy(hf, s) == 0.5


def test_feature_hamiltonian_empty_when_nothing_satisfied():
    inst = SpinGlassInstance(3, {(0, 1): 1.0, (1, 2): 1.0}, {0: 1.0})
    hf = build_feature_hamiltonian(inst, [1, 1, 1])
    assert not hf.couplers and not hf.biases
    assert all(energy(hf, s) == 0.0 for s in all_states(3))


def test_feature_hamiltonian_matches_k_expansion(rng):
    for _ in range(30):
        n = int(rng.integers(2, 9))
        inst = random_instance(rng, n)
        a = random_state(rng, n)
        hf = build_feature_hamiltonian(inst, a)
        full = np.ones(n, dtype=np.uint8)
        for s in all_states(n):
            assert energy(hf, s) == pytest.approx(hfm_energy_oracle(inst, a, full, 1.0, s), abs=1e-12)


def test_feature_gap_is_twice_coupler_strength():
    # flipping one end of a satisfied, aligned coupler costs exactly 2|J|
    for J in (-0.75, 0.6, -1.0, 3 / 7):
        inst = SpinGlassInstance(2, {(0, 1): J})
        a = np.array([1, 1] if J < 0 else [1, -1])
        hf = build_feature_hamiltonian(inst, a)
        b = a.copy()
        b[1] = -b[1]
        assert energy(hf, b) - energy(hf, a) == pytest.approx(2 * abs(J), abs=1e-15)


def test_reference_is_feature_ground_state(rng):
    for _ in range(40):
        n = int(rng.integers(2, 11))
        inst = random_instance(rng, n, discrete=bool(rng.random() < 0.5))
        a = random_state(rng, n)
        hf = build_feature_hamiltonian(inst, a)
        ex = exact_enumerate(hf, 1)
        assert ex.info["ground_energy"] == pytest.approx(energy(hf, a), abs=1e-12)


# -- masked mixture ----------------------------------------------------------


def test_hfm_degenerations(rng):
    for _ in range(50):
        n = int(rng.integers(2, 12))
        inst = random_instance(rng, n)
        a = random_state(rng, n)
        mask = rng.integers(0, 2, size=n)
        assert build_hfm(inst, FeatureSpec(a, mask, 0.0)) == inst
        assert build_hfm(inst, FeatureSpec(a, np.zeros(n, int), float(rng.random()))) == inst
        assert build_hfm(inst, FeatureSpec(a, np.ones(n, int), 1.0)) == build_feature_hamiltonian(inst, a)


def test_hfm_matches_term_rules(rng):
    for _ in range(40):
        n = int(rng.integers(2, 8))
        inst = random_instance(rng, n)
        a = random_state(rng, n)
        mask = rng.integers(0, 2, size=n)
        lam = float(rng.random())
        h = build_hfm(inst, FeatureSpec(a, mask, lam))
        for s in all_states(n):
            assert energy(h, s) == pytest.approx(hfm_energy_oracle(inst, a, mask, lam, s), abs=1e-12)


def test_feature_spec_validation():
    with pytest.raises(ParameterError):
        FeatureSpec([1, 1], [1, 1], 1.5)
    with pytest.raises(ParameterError):
        FeatureSpec([1, 1], [1, 2], 0.5)
    with pytest.raises(DimensionError):
        FeatureSpec([1, 1], [1, 1, 1], 0.5)
    inst = SpinGlassInstance(3, {(0, 1): 1.0})
    with pytest.raises(DimensionError):
        build_hfm(inst, FeatureSpec([1, 1], [1, 1], 0.5))
    with pytest.raises(DimensionError):
        build_feature_hamiltonian(inst, [1, 1])


def test_as_mask_rejects_non_binary():
    with pytest.raises(ParameterError):
        as_mask([[1, 0]])


# -- schedule and params -----------------------------------------------------


def test_lambda_schedule_examples():
    p = ProtocolParams(lambda_start=0.2, lambda_end=1.0, local_iterations=8)
    assert lambda_at(0, p) == pytest.approx(0.2)
    assert lambda_at(7, p) == pytest.approx(1.0)
    p3 = ProtocolParams(lambda_start=0.1, lambda_end=1.0, local_iterations=3)
    assert lambda_at(1, p3) == pytest.approx(0.1 * math.sqrt(10), abs=1e-12)
    assert lambda_at(1, p3) == pytest.approx(0.31623, abs=1e-5)
    pc = ProtocolParams(lambda_start=0.5, lambda_end=0.5, local_iterations=5)
    assert all(lambda_at(i, pc) == pytest.approx(0.5) for i in range(5))
    p1 = ProtocolParams(lambda_start=0.3, lambda_end=0.9, local_iterations=1)
    assert lambda_at(0, p1) == 0.3
    with pytest.raises(ParameterError):
        lambda_at(8, p)


def test_lambda_schedule_is_geometric():
    p = ProtocolParams(lambda_start=0.05, lambda_end=0.8, local_iterations=9)
    vals = [lambda_at(i, p) for i in range(9)]
    ratios = [vals[i + 1] / vals[i] for i in range(8)]
    assert max(ratios) - min(ratios) < 1e-12


def test_protocol_params_validation():
    with pytest.raises(ParameterError):
        ProtocolParams(n_samples=5, n_select=5)
    with pytest.raises(ParameterError):
        ProtocolParams(lambda_start=0.0)
    with pytest.raises(ParameterError):
        ProtocolParams(lambda_end=-1.0)
    with pytest.raises(ParameterError):
        ProtocolParams(q_select=1.5)
    with pytest.raises(ParameterError):
        ProtocolParams(local_iterations=0)


# -- selection ---------------------------------------------------------------


def select_oracle(instance, states, n_select, q_select, exclusions=()):
    """Reference greedy pass over already-sorted ``states``."""
    held = []
    for c in states:
        if len(held) > n_select - 1:
            break
        if any(brute_q_f(instance, x, c) > qx for x, qx in exclusions):
            continue
        if any(brute_q_f(instance, b, c) > q_select for b in held):
            continue
        held.append(c)
    return held


def test_select_examples(three_site):
    one = SampleSet.from_states(three_site, [[1, 1, -1]])
    assert len(select_samples(three_site, one, 3, 0.5)) == 1
    twins = SampleSet.from_states(three_site, [[1, 1, -1], [1, 1, -1]])
    assert len(select_samples(three_site, twins, 3, 0.99)) == 1
    pair = SampleSet.from_states(three_site, [[1, 1, -1], [1, 1, 1]])
    assert [list(s) for s in pair.states] == [[1, 1, -1], [1, 1, 1]]
    chosen = select_samples(three_site, pair, 2, 0.9)
    assert len(chosen) == 2
    assert np.array_equal(chosen.states[0], [1, 1, -1])
    empty = SampleSet.empty(3)
    assert len(select_samples(three_site, empty, 2, 0.9)) == 0


def test_select_matches_oracle(rng):
    for _ in range(40):
        n = int(rng.integers(3, 10))
        inst = random_instance(rng, n)
        raw = np.array([random_state(rng, n) for _ in range(30)])
        samples = SampleSet.from_states(inst, raw)
        nt = int(rng.integers(1, 6))
        qt = float(rng.uniform(0.3, 1.0))
        excl = [(random_state(rng, n), float(rng.uniform(0.3, 1.0)))]
        got = select_samples(inst, samples, nt, qt, excl)
        want = select_oracle(inst, samples.states, nt, qt, excl)
        assert len(got) == len(want)
        assert all(np.array_equal(g, w) for g, w in zip(got.states, want))
        assert len(got) <= nt
        for a in range(len(got)):
            for b in range(a + 1, len(got)):
                assert q_f(inst, got.states[a], got.states[b]) <= qt


def test_select_resorts_under_original_instance(rng):
    inst = random_instance(rng, 6)
    other = random_instance(rng, 6)
    raw = np.array([random_state(rng, 6) for _ in range(20)])
    wrong = SampleSet.from_states(other, raw)
    got = select_samples(inst, wrong, 3, 1.0)
    assert np.all(np.diff(got.energies) >= 0)
    assert np.array_equal(got.energies, energies(inst, got.states))


# -- mask update -------------------------------------------------------------


def test_update_mask_examples():
    assert list(update_mask([[1, -1, 1]])) == [1, 1, 1]
    m = update_mask([[1, 1, -1], [1, -1, -1]])
    assert list(m[::-1]) == [1, 0, 1]
    s = np.array([1, -1, 1, 1])
    assert not update_mask([s, conjugate(s)]).any()
    with pytest.raises(ParameterError):
        update_mask(np.empty((0, 3)))


@settings(max_examples=100)
@given(st.integers(1, 12).flatmap(lambda n: st.lists(
    st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n), min_size=2, max_size=8)))
def test_update_mask_adding_states_only_clears_bits(rows):
    s = np.array(rows)
    before = update_mask(s[:-1])
    after = update_mask(s)
    assert np.all(after <= before)
    for i in range(s.shape[1]):
        assert after[i] == int(abs(s[:, i].sum()) == s.shape[0])


# -- monotone path -----------------------------------------------------------


def test_monotone_path_examples(rng):
    inst = random_instance(rng, 4)
    a = random_state(rng, 4)
    hf = build_feature_hamiltonian(inst, a)
    assert monotone_path(inst, a, a) == [pytest.approx(energy(hf, a), abs=1e-12)]
    path = monotone_path(inst, a, conjugate(a))
    assert len(path) == 5
    assert all(path[k] <= path[k + 1] for k in range(4))
    cur = a.copy()
    direct = [energy(hf, cur)]
    for k in range(4):
        cur[k] = -cur[k]
        direct.append(energy(hf, cur))
    assert path == pytest.approx(direct, abs=1e-12)


def test_monotone_path_length_checked(three_site):
    with pytest.raises(DimensionError):
        monotone_path(three_site, [1, 1, 1], [1, 1])
