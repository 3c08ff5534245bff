"""Degree-2 multivariate hash over GF(2) and its derived bilinear data.

The hash is keyed by n upper-triangular m x m bit matrices; component i of
the digest is the quadratic form x^T A_i x mod 2.  Diagonal entries act as
linear terms because x^2 = x over GF(2), so no separate linear-term storage
is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, EnumerationCapExceeded, PreconditionError
from .gf2 import ENUMERATION_CAP, BitMatrix, BitVector, _parity

Digest = BitVector


@dataclass(frozen=True)
class HashKey:
    """n output bits, m input bits, one upper-triangular matrix per output bit."""

    n: int
    m: int
    mats: tuple  # of BitMatrix, each m x m, strictly zero below the diagonal

    def __post_init__(self):
        if not 1 <= self.n < self.m:
            raise PreconditionError(f"need 1 <= n < m, got n={self.n}, m={self.m}")
        if len(self.mats) != self.n:
            raise PreconditionError("need exactly n matrices")
        for a in self.mats:
            if a.nrows != self.m or a.cols != self.m:
                raise DimensionMismatch("matrix shape is not m x m")
            for j in range(self.m):
                if a.rows[j] & ((1 << j) - 1):
                    raise PreconditionError("matrix has entries below the diagonal")

    def to_json(self, seed=None) -> dict:
        nbytes = (self.m + 7) // 8
        mats = [
            b"".join(r.to_bytes(nbytes, "little") for r in a.rows).hex()
            for a in self.mats
        ]
        doc = {"n": self.n, "m": self.m, "mats": mats}
        if seed is not None:
            doc["seed"] = seed
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "HashKey":
        n, m = int(doc["n"]), int(doc["m"])
        nbytes = (m + 7) // 8
        mats = []
        for hexdata in doc["mats"]:
            data = bytes.fromhex(hexdata)
            rows = tuple(
                int.from_bytes(data[i * nbytes : (i + 1) * nbytes], "little")
                for i in range(m)
            )
            mats.append(BitMatrix(rows, m))
        return cls(n, m, tuple(mats))


def keygen(n: int, m: int, rng: np.random.Generator) -> HashKey:
    """Key with i.i.d. uniform bits on and above the diagonal."""
    if not 1 <= n < m:
        raise PreconditionError(f"need 1 <= n < m, got n={n}, m={m}")
    mats = []
    for _ in range(n):
        rows = []
        for j in range(m):
            r = BitVector.random(m, rng).bits
            rows.append(r & ~((1 << j) - 1))  # clear entries below the diagonal
        mats.append(BitMatrix(tuple(rows), m))
    return HashKey(n, m, tuple(mats))


def eval_digest(key: HashKey, x: BitVector) -> Digest:
    """y_i = x^T A_i x mod 2."""
    if x.n != key.m:
        raise DimensionMismatch(f"input has length {x.n}, key expects {key.m}")
    out = 0
    for i, a in enumerate(key.mats):
        acc = 0
        xb = x.bits
        j = 0
        while xb:
            if xb & 1:
                acc ^= a.rows[j]
            xb >>= 1
            j += 1
        out |= _parity(acc & x.bits) << i
    return BitVector(out, key.n)


def _sym_rows(a: BitMatrix) -> tuple:
    """Rows of A + A^T (diagonal cancels mod 2)."""
    m = a.cols
    cols = a.transpose().rows
    return tuple((a.rows[j] ^ cols[j]) & ~(1 << j) for j in range(m))


def bilinear_rows(key: HashKey, delta: BitVector) -> BitMatrix:
    """n x m matrix whose row i is delta^T (A_i + A_i^T)."""
    if delta.n != key.m:
        raise DimensionMismatch(f"delta has length {delta.n}, key expects {key.m}")
    rows = []
    for a in key.mats:
        sym = _sym_rows(a)
        acc = 0
        db = delta.bits
        j = 0
        while db:
            if db & 1:
                acc ^= sym[j]
            db >>= 1
            j += 1
        rows.append(acc)
    return BitMatrix(tuple(rows), key.m)


def quadratic_offsets(key: HashKey, delta: BitVector) -> BitVector:
    """Component i is delta^T A_i delta, i.e. the hash evaluated at delta."""
    return eval_digest(key, delta)


@lru_cache(maxsize=32)
def digest_table(key: HashKey) -> np.ndarray:
    """Digest of every input, as packed ints indexed by basis index.

    Built by doubling: f(x + e_j) = f(x) + x . sym_col_j + A_jj for x with
    bit j clear, so each output bit fills in m vectorized passes.
    """
    m, n = key.m, key.n
    if m > ENUMERATION_CAP:
        raise EnumerationCapExceeded(f"m={m} exceeds enumeration cap {ENUMERATION_CAP}")
    size = 1 << m
    table = np.zeros(size, dtype=np.uint32)
    for i, a in enumerate(key.mats):
        sym = _sym_rows(a)
        ti = np.zeros(size, dtype=np.uint8)
        for j in range(m):
            half = 1 << j
            block = np.arange(half, dtype=np.uint64)
            lin = (np.bitwise_count(block & np.uint64(sym[j])) & 1).astype(np.uint8)
            diag = a.entry(j, j)
            ti[half : 2 * half] = ti[:half] ^ lin ^ diag
        table |= ti.astype(np.uint32) << i
    table.flags.writeable = False
    return table


def fiber_counts(key: HashKey) -> np.ndarray:
    """Number of preimages of each digest value (index = packed digest)."""
    return np.bincount(digest_table(key), minlength=1 << key.n)


def preimages(key: HashKey, y: Digest) -> list:
    """All x with digest y, ascending by basis index."""
    if y.n != key.n:
        raise DimensionMismatch(f"digest has length {y.n}, key expects {key.n}")
    idx = np.flatnonzero(digest_table(key) == y.bits)
    return [BitVector(int(i), key.m) for i in idx]


def preimage_indices(key: HashKey, y: Digest) -> np.ndarray:
    """Preimage set as raw basis indices (ascending)."""
    if y.n != key.n:
        raise DimensionMismatch(f"digest has length {y.n}, key expects {key.n}")
    return np.flatnonzero(digest_table(key) == y.bits)
