import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from scripts._plateau.core import (
    Bitstring,
    InstanceTransform,
    RandomSource,
    apply_transform,
    complement,
    count_ones,
    hamming,
    pack_rows,
    popcount_rows,
    replication_seed,
    stable_uint64_from_str,
    unpack_rows,
)

bit_lists = st.lists(st.integers(0, 1), min_size=1, max_size=70)


def test_from_string_counts_and_prints():
    x = Bitstring.from_string("1011")
    assert len(x) == 4
    assert count_ones(x) == 3
    assert str(x) == "1011"


def test_rejects_bad_bits_and_empty():
    with pytest.raises(ValueError):
        Bitstring.from_bits([0, 2, 1])
    with pytest.raises(ValueError):
        Bitstring.from_string("")


def test_hamming_length_mismatch():
    with pytest.raises(ValueError):
        hamming(Bitstring.zeros(3), Bitstring.zeros(4))


@given(bit_lists)
def test_complement_and_hamming(bits):
    x = Bitstring.from_bits(bits)
    y = complement(x)
    assert count_ones(x) + count_ones(y) == x.n
    assert hamming(x, y) == x.n
    assert hamming(x, x) == 0


@given(st.lists(st.lists(st.integers(0, 1), min_size=13, max_size=13), min_size=1, max_size=6))
def test_packed_matrix_popcount(rows):
    bits = np.asarray(rows, dtype=np.uint8)
    words = pack_rows(bits)
    assert np.array_equal(unpack_rows(words, 13), bits)
    assert popcount_rows(words).tolist() == bits.sum(axis=1).tolist()


def test_replication_seed_is_sha1_of_base_and_index():
    assert replication_seed(7, 3) == stable_uint64_from_str("7:3")
    assert replication_seed(7, 3) == replication_seed(7, 3)
    assert replication_seed(7, 3) != replication_seed(7, 4)
    assert 0 <= replication_seed(0, 0) < 2**64


def test_random_source_reproducible():
    a, b = RandomSource(5), RandomSource(5)
    assert np.array_equal(a.integers(0, 100, size=20), b.integers(0, 100, size=20))
    assert RandomSource.for_replication(1, 2).seed == replication_seed(1, 2)


def test_random_source_streams_match_for_ten_thousand_draws():
    a, b = RandomSource(11), RandomSource(11)
    assert np.array_equal(a.random(10_000), b.random(10_000))
    assert np.array_equal(a.integers(0, 2**31, size=10_000), b.integers(0, 2**31, size=10_000))


def test_random_source_integers_are_uniform():
    counts = np.bincount(RandomSource(12).integers(0, 10, size=10_000), minlength=10)
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_random_source_rejects_out_of_range_seed(seed):
    with pytest.raises(ValueError):
        RandomSource(seed)


def test_transform_example():
    t = InstanceTransform.from_lists([1, 0, 0], [2, 0, 1])
    assert str(apply_transform(t, Bitstring.from_string("100"))) == "110"


def test_transform_rotation_example():
    t = InstanceTransform.from_lists([0, 0, 0], [1, 2, 0])
    assert str(apply_transform(t, Bitstring.from_string("100"))) == "001"


def test_identity_transform():
    t = InstanceTransform.identity(9)
    assert t.is_identity()
    x = Bitstring.from_string("101100111")
    assert apply_transform(t, x) == x


def test_transform_rejects_non_bijection():
    with pytest.raises(ValueError):
        InstanceTransform.from_lists([0, 0, 0], [0, 0, 1])
    with pytest.raises(ValueError):
        apply_transform(InstanceTransform.identity(3), Bitstring.zeros(4))


@given(st.integers(1, 40), st.integers(0, 2**32))
def test_transform_inverse_and_count_mask(n, seed):
    rng = RandomSource(seed)
    t = InstanceTransform.random(n, rng)
    x = Bitstring.random(n, rng)
    y = apply_transform(t, x)
    assert apply_transform(t.inverse(), y) == x
    # isometry of the cube
    z = Bitstring.random(n, rng)
    assert hamming(apply_transform(t, z), y) == hamming(z, x)
    assert int(popcount_rows(np.bitwise_xor(x.packed, t.count_mask()))) == count_ones(y)


@given(st.integers(1, 70), st.integers(0, 2**32))
def test_hamming_is_a_metric(n, seed):
    rng = RandomSource(seed)
    x, y, z = (Bitstring.random(n, rng) for _ in range(3))
    assert hamming(x, x) == 0
    assert hamming(x, y) == hamming(y, x)
    assert hamming(x, z) <= hamming(x, y) + hamming(y, z)
