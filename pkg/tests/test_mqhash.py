import numpy as np
import pytest

from boltlab.errors import DimensionMismatch, PreconditionError
from boltlab.gf2 import BitMatrix, BitVector
from boltlab.mqhash import (
    HashKey,
    bilinear_rows,
    digest_table,
    eval_digest,
    fiber_counts,
    keygen,
    preimage_indices,
    preimages,
    quadratic_offsets,
)


def _worked_key():
    # single 2x2 matrix [[1,1],[0,0]]: f(x) = x0 + x0 x1
    return HashKey(1, 2, (BitMatrix.from_bits([[1, 1], [0, 0]]),))


def _zero_key(n, m):
    return HashKey(n, m, tuple(BitMatrix.zeros(m, m) for _ in range(n)))


def _eval_reference(key, x):
    """Independent oracle: dense integer arithmetic, then mod 2."""
    xs = np.array(x.to_tuple(), dtype=np.int64)
    out = 0
    for i, a in enumerate(key.mats):
        out |= (int(xs @ a.to_array().astype(np.int64) @ xs) & 1) << i
    return BitVector(out, key.n)


def test_keygen_shapes_and_triangularity():
    rng = np.random.default_rng(0)
    key = keygen(1, 2, rng)
    assert key.mats[0].entry(1, 0) == 0
    key = keygen(2, 12, rng)
    assert len(key.mats) == 2
    for a in key.mats:
        assert a.nrows == a.cols == 12
        for i in range(12):
            for j in range(i):
                assert a.entry(i, j) == 0


def test_keygen_determinism():
    k1 = keygen(2, 12, np.random.default_rng(42))
    k2 = keygen(2, 12, np.random.default_rng(42))
    assert k1 == k2
    assert k1.to_json() == k2.to_json()


def test_keygen_distinct_seeds_differ():
    keys = [keygen(2, 12, np.random.default_rng(s)) for s in range(100)]
    blobs = {str(k.to_json()) for k in keys}
    assert len(blobs) == 100


def test_keygen_rejects_bad_sizes():
    with pytest.raises(PreconditionError):
        keygen(3, 3, np.random.default_rng(0))


def test_eval_zero_input_gives_zero():
    rng = np.random.default_rng(1)
    key = keygen(3, 9, rng)
    assert eval_digest(key, BitVector.zero(9)).is_zero()


def test_eval_worked_example():
    key = _worked_key()
    assert eval_digest(key, BitVector.from_bits([1, 1])).bits == 0
    assert eval_digest(key, BitVector.from_bits([1, 0])).bits == 1


def test_eval_matches_reference_oracle():
    rng = np.random.default_rng(2)
    for n, m in [(1, 4), (2, 12), (3, 7)]:
        key = keygen(n, m, rng)
        for _ in range(40):
            x = BitVector.random(m, rng)
            assert eval_digest(key, x) == _eval_reference(key, x)


def test_eval_length_mismatch():
    key = _worked_key()
    with pytest.raises(DimensionMismatch):
        eval_digest(key, BitVector.zero(3))


def test_bilinear_rows_zero_delta():
    rng = np.random.default_rng(3)
    key = keygen(2, 6, rng)
    assert bilinear_rows(key, BitVector.zero(6)).rows == (0, 0)


def test_bilinear_rows_worked_example():
    key = _worked_key()
    b = bilinear_rows(key, BitVector.from_bits([1, 0]))
    assert b.rows == (0b10,)  # row (0, 1): diagonal doubles vanish mod 2


def test_polarization_identity_exhaustive():
    # f(x) + f(x - delta) = B_delta x + delta^T A delta, for every x, at m <= 12
    rng = np.random.default_rng(4)
    for n, m in [(1, 6), (2, 12)]:
        key = keygen(n, m, rng)
        tab = digest_table(key)
        idx = np.arange(1 << m, dtype=np.int64)
        for _ in range(6):
            delta = BitVector.random(m, rng)
            if delta.is_zero():
                continue
            lhs = tab ^ tab[idx ^ delta.bits]
            b = bilinear_rows(key, delta)
            rhs = np.zeros_like(idx)
            for i in range(n):
                rhs |= ((np.bitwise_count(idx.astype(np.uint64) & np.uint64(b.rows[i])) & 1)
                        .astype(np.int64)) << i
            rhs ^= quadratic_offsets(key, delta).bits
            assert (lhs == rhs).all()


def test_quadratic_offsets_equals_eval():
    rng = np.random.default_rng(5)
    key = keygen(2, 10, rng)
    for _ in range(50):
        d = BitVector.random(10, rng)
        assert quadratic_offsets(key, d) == eval_digest(key, d)
    assert quadratic_offsets(_worked_key(), BitVector.from_bits([1, 0])).bits == 1


def test_preimages_zero_key():
    key = _zero_key(2, 6)
    assert len(preimages(key, BitVector.zero(2))) == 64
    assert preimages(key, BitVector.from_bits([1, 0])) == []


def test_preimages_partition_domain():
    rng = np.random.default_rng(6)
    key = keygen(2, 8, rng)
    seen = set()
    for yv in range(4):
        pts = preimages(key, BitVector(yv, 2))
        for p in pts:
            assert eval_digest(key, p).bits == yv
            seen.add(p.bits)
    assert len(seen) == 256


def test_fiber_counting_identity():
    rng = np.random.default_rng(7)
    key = keygen(2, 12, rng)
    counts = fiber_counts(key)
    assert counts.sum() == 1 << 12
    assert counts.mean() == 2**10  # average fiber size over all 2^n digests


def test_digest_table_matches_pointwise_eval():
    rng = np.random.default_rng(8)
    key = keygen(2, 9, rng)
    tab = digest_table(key)
    for _ in range(60):
        x = BitVector.random(9, rng)
        assert tab[x.bits] == eval_digest(key, x).bits


def test_preimage_indices_sorted():
    rng = np.random.default_rng(9)
    key = keygen(2, 10, rng)
    idx = preimage_indices(key, BitVector(1, 2))
    assert (np.diff(idx) > 0).all()


def test_key_json_round_trip():
    rng = np.random.default_rng(10)
    key = keygen(3, 11, rng)
    doc = key.to_json(seed=10)
    assert doc["seed"] == 10
    assert HashKey.from_json(doc) == key


def test_key_rejects_below_diagonal_entries():
    bad = BitMatrix.from_bits([[1, 0], [1, 0]])
    with pytest.raises(PreconditionError):
        HashKey(1, 2, (bad,))
