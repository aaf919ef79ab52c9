import numpy as np
import pytest
from hypothesis import given, strategies as st

from botarena import rng

keys_st = st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=20)


def test_seed_keys_are_stable_and_distinct():
    assert rng.seed_key(7) == rng.seed_key(7)
    assert len({int(rng.seed_key(s)) for s in range(200)}) == 200
    with pytest.raises(ValueError):
        rng.seed_key(-1)


@given(keys_st, st.integers(0, 1000))
def test_draws_do_not_depend_on_batch_layout(keys, pick):
    keys = np.array(keys, dtype=np.uint64)
    i = pick % keys.size
    whole = rng.normal(keys, (3, 2))
    alone = rng.normal(keys[i:i + 1], (3, 2))
    assert np.array_equal(whole[i], alone[0])
    assert np.array_equal(rng.uniform(keys, (5,))[i], rng.uniform(keys[i:i + 1], (5,))[0])


def test_fold_path_order_matters():
    k = np.array([rng.seed_key(1)])
    assert rng.fold(k, 1, 2)[0] != rng.fold(k, 2, 1)[0]
    assert rng.fold(k, rng.SPAWN)[0] != rng.fold(k, rng.NOISE)[0]


def test_fold_broadcasts_array_counters():
    k = np.full(4, rng.seed_key(3), dtype=np.uint64)
    steps = np.arange(4)
    batched = rng.fold(k, rng.SCENARIO, steps)
    single = [rng.fold(k[:1], rng.SCENARIO, int(s))[0] for s in steps]
    assert np.array_equal(batched, single)


def test_uniform_moments():
    u = rng.uniform([rng.seed_key(0)], (200_000,))[0]
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(u.var() - 1 / 12) < 0.002


def test_normal_moments():
    z = rng.normal([rng.seed_key(0)], (200_000,))[0]
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


@given(st.integers(1, 50), st.integers(0, 2**32))
def test_integers_in_range(high, seed):
    v = rng.integers([rng.seed_key(seed)], high, (100,))
    assert v.min() >= 0 and v.max() < high


@given(st.integers(1, 40), st.integers(0, 2**32))
def test_permutation_is_a_permutation(n, seed):
    p = rng.permutation(rng.seed_key(seed), n)
    assert sorted(p.tolist()) == list(range(n))


def test_golden_bits():
    # pins the generator so a refactor cannot silently change every episode
    k = rng.seed_key(0)
    assert int(k) == 15793235383387715774
    assert rng.bits([k], (3,))[0].tolist() == [429404410292939812, 7378380503522490360, 4335997937186670675]
    assert rng.uniform([k], (2,))[0].tolist() == [0.023278059725723055, 0.3999828085671886]
