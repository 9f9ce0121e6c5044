import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mascots.borf import BorfTransform, auto_configure, dense_counts, matrix_from, transform_dataset, transform_one
from mascots.dataset_io import Dataset, TimeSeries
from mascots.errors import SeriesTooShort, ShapeError, UnknownHash, WindowTooLarge
from mascots.symbolic import SaxConfig, Word

import oracles


def random_configs(rng, m, count):
    configs = []
    while len(configs) < count:
        # a one-symbol word is the standardized mean, which sits exactly on the
        # middle cut for even alphabets, so it is left out of the oracle comparison
        l = int(rng.choice([2, 3, 4]))
        w = l * int(rng.integers(1, 5))
        dilation = int(rng.integers(1, 3))
        if (w - 1) * dilation + 1 > m:
            continue
        configs.append(SaxConfig(w, l, int(rng.choice([2, 3, 4, 5])), int(rng.integers(1, 4)), dilation, len(configs)))
    return configs


def as_oracle_key(transform, flat):
    j, _ = transform.split_index(flat)
    word = transform.word(flat)
    return (j, word.config_id, word.symbols)


def test_auto_configure_examples():
    configs = auto_configure(1, 150)
    assert sorted({c.window for c in configs}) == [8, 16, 32, 64, 128]
    assert len(configs) == 10
    assert all(c.alphabet == 3 and c.dilation == 1 and c.stride == c.window // c.word_length for c in configs)
    assert len(auto_configure(1, 24)) == 4
    assert BorfTransform.auto(1, 128).vocab_size == 5 * (9 + 81) == 450
    assert BorfTransform.auto(3, 128).vocab_size == 3 * 450
    with pytest.raises(SeriesTooShort):
        auto_configure(1, 7)


def test_hand_example():
    t = BorfTransform((SaxConfig(4, 2, 3, 2),), 1)
    z = transform_one(TimeSeries([0, 0, 1, 1, 0, 0]), t)
    words = {t.word(k).symbols: v for k, v in z.counts.items()}
    assert words == {(0, 2): 1, (2, 0): 1}
    assert z.occurrences[2] == [(0, 0)] and z.occurrences[6] == [(0, 2)]


def test_constant_series_single_center_word():
    t = BorfTransform.auto(1, 64)
    z = transform_one(np.full(64, 3.5), t)
    total = sum(c.n_windows(64) for c in t.configs)
    assert sum(z.counts.values()) == total
    for k in z.contained():
        assert set(t.word(k).symbols) == {1}
    assert len(z.counts) == len(t.configs)


def test_counts_sum_and_sparsity_bound(rng):
    t = BorfTransform.auto(2, 40)
    x = rng.standard_normal((2, 40))
    z = transform_one(x, t)
    windows = 2 * sum(c.n_windows(40) for c in t.configs)
    assert sum(z.counts.values()) == windows
    assert len(z.counts) <= windows
    assert sum(len(v) for v in z.occurrences.values()) == windows


def test_dataset_rows_independent_and_permutation(rng):
    t = BorfTransform.auto(1, 32)
    X = rng.standard_normal((3, 1, 32))
    M = transform_dataset(Dataset(X, [0, 1, 0], ("a", "b")), t)
    assert len(M) == 3
    for i in range(3):
        assert M[i].counts == transform_one(X[i], t).counts
    perm = [2, 0, 1]
    P = transform_dataset(X[perm], t)
    for i, p in enumerate(perm):
        assert P[i].counts == M[p].counts
    np.testing.assert_array_equal(M.to_dense(), dense_counts(X, t))
    np.testing.assert_array_equal(matrix_from(M.rows), M.to_dense())


def test_translation_covariance(rng):
    cfg = SaxConfig(8, 2, 3, 4)
    t = BorfTransform((cfg,), 1)
    x = rng.standard_normal(64)
    shift = 2 * cfg.stride
    y = np.concatenate([rng.standard_normal(shift), x[:-shift]])
    zx, zy = transform_one(x, t), transform_one(y, t)
    for k, occ in zx.occurrences.items():
        for _, s in occ:
            if s + shift + cfg.span <= 64:
                assert (0, s + shift) in zy.occurrences[k]


def test_oracle_equivalence_small():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n, d, m = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(8, 40))
        X = rng.standard_normal((n, d, m))
        configs = random_configs(rng, m, int(rng.integers(1, 4)))
        t = BorfTransform(tuple(configs), d)
        cdicts = [c.to_dict() for c in configs]
        for i, row in enumerate(transform_dataset(X, t)):
            got = {as_oracle_key(t, k): v for k, v in row.counts.items()}
            assert got == dict(oracles.brute_borf(X[i].tolist(), cdicts))


def test_transform_round_trip():
    t = BorfTransform((SaxConfig(4, 2, 3, 2), SaxConfig(8, 4, 5, 1, 2, 1)), 2)
    back = BorfTransform.from_dict(t.to_dict())
    assert back.configs == t.configs and back.vocab_size == t.vocab_size == 2 * (9 + 625)


def test_index_helpers():
    t = BorfTransform((SaxConfig(4, 2, 3, 2), SaxConfig(8, 2, 2, 1, 1, 1)), 2)
    h = t.words_per_channel
    assert h == 13
    assert t.split_index(t.flat_index(1, 10)) == (1, 10)
    assert t.word(h + 9) == Word((0, 0), 1)
    assert list(t.config_range(1, 1)) == list(range(h + 9, 2 * h))
    with pytest.raises(UnknownHash):
        t.split_index(2 * h)


def test_errors():
    t = BorfTransform.auto(1, 64)
    with pytest.raises(WindowTooLarge):
        transform_one(np.zeros(32), t)
    with pytest.raises(ShapeError):
        transform_one(np.zeros((2, 64)), t)
    with pytest.raises(ShapeError):
        BorfTransform((SaxConfig(4, 2, config_id=1),), 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    d, m = int(rng.integers(1, 3)), int(rng.integers(8, 33))
    x = rng.standard_normal((d, m)) * rng.uniform(0.1, 5)
    if rng.random() < 0.3:
        x[0] = 1.25
    configs = random_configs(rng, m, 2)
    t = BorfTransform(tuple(configs), d)
    got = {as_oracle_key(t, k): v for k, v in transform_one(x, t).counts.items()}
    assert got == dict(oracles.brute_borf(x.tolist(), [c.to_dict() for c in configs]))
