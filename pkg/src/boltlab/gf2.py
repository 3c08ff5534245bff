"""Bit-packed linear algebra over GF(2).

Vectors and matrix rows are packed into Python ints: coordinate ``j`` is bit
``j`` (LSB first).  Hex serialization pads each row to whole bytes with
little-endian bit order inside each byte, which is exactly what
``int.to_bytes(..., "little")`` produces.

All values are immutable after construction; subspaces are canonicalized to
reduced row-echelon form so subspace equality is plain equality of basis
matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import DimensionMismatch, EnumerationCapExceeded, PreconditionError

ENUMERATION_CAP = 22  # largest affine-space dimension enumerate_affine materializes


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class BitVector:
    """Vector in GF(2)^n, packed into an int (coordinate j = bit j)."""

    bits: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError("BitVector length must be >= 1")
        if self.bits < 0 or self.bits >> self.n:
            raise PreconditionError("bits outside of declared length")

    @classmethod
    def from_bits(cls, coords) -> "BitVector":
        coords = list(coords)
        value = 0
        for j, c in enumerate(coords):
            value |= (int(c) & 1) << j
        return cls(value, len(coords))

    @classmethod
    def zero(cls, n: int) -> "BitVector":
        return cls(0, n)

    @classmethod
    def unit(cls, n: int, j: int) -> "BitVector":
        return cls(1 << j, n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitVector":
        nbytes = (n + 7) // 8
        value = int.from_bytes(rng.bytes(nbytes), "little") & ((1 << n) - 1)
        return cls(value, n)

    def __getitem__(self, j: int) -> int:
        return (self.bits >> j) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise DimensionMismatch("vector lengths differ")
        return BitVector(self.bits ^ other.bits, self.n)

    __add__ = __xor__
    __sub__ = __xor__  # subtraction is addition over GF(2)

    def dot(self, other: "BitVector") -> int:
        if self.n != other.n:
            raise DimensionMismatch("vector lengths differ")
        return _parity(self.bits & other.bits)

    def is_zero(self) -> bool:
        return self.bits == 0

    def to_tuple(self) -> tuple:
        return tuple((self.bits >> j) & 1 for j in range(self.n))

    def to_hex(self) -> str:
        return self.bits.to_bytes((self.n + 7) // 8, "little").hex()

    @classmethod
    def from_hex(cls, s: str, n: int) -> "BitVector":
        value = int.from_bytes(bytes.fromhex(s), "little")
        if value >> n:
            raise PreconditionError("hex string has bits beyond declared length")
        return cls(value, n)

    def __str__(self):
        return "".join(str((self.bits >> j) & 1) for j in range(self.n))


@dataclass(frozen=True)
class BitMatrix:
    """Dense GF(2) matrix; each row packed into an int."""

    rows: tuple
    cols: int

    def __post_init__(self):
        mask = (1 << self.cols) - 1 if self.cols else 0
        for r in self.rows:
            if r < 0 or r & ~mask:
                raise PreconditionError("row has bits beyond declared width")

    @classmethod
    def from_rows(cls, rows, cols: int) -> "BitMatrix":
        return cls(tuple(int(r) for r in rows), cols)

    @classmethod
    def from_bits(cls, entries) -> "BitMatrix":
        entries = [list(row) for row in entries]
        cols = len(entries[0]) if entries else 0
        packed = []
        for row in entries:
            if len(row) != cols:
                raise DimensionMismatch("ragged rows")
            packed.append(BitVector.from_bits(row).bits if cols else 0)
        return cls(tuple(packed), cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(tuple(1 << j for j in range(n)), n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls((0,) * rows, cols)

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls(tuple(BitVector.random(cols, rng).bits for _ in range(rows)), cols)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def row(self, i: int) -> BitVector:
        return BitVector(self.rows[i], self.cols)

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def transpose(self) -> "BitMatrix":
        cols = []
        for j in range(self.cols):
            c = 0
            for i, r in enumerate(self.rows):
                c |= ((r >> j) & 1) << i
            cols.append(c)
        return BitMatrix(tuple(cols), self.nrows)

    def mv(self, v: BitVector) -> BitVector:
        """Matrix-vector product M v."""
        if v.n != self.cols:
            raise DimensionMismatch(f"matrix has {self.cols} cols, vector has {v.n}")
        out = 0
        for i, r in enumerate(self.rows):
            out |= _parity(r & v.bits) << i
        return BitVector(out, self.nrows)

    def vm(self, v: BitVector) -> BitVector:
        """Row-vector product v^T M (equals XOR of rows selected by v)."""
        if v.n != self.nrows:
            raise DimensionMismatch(f"matrix has {self.nrows} rows, vector has {v.n}")
        acc = 0
        for i in range(self.nrows):
            if (v.bits >> i) & 1:
                acc ^= self.rows[i]
        return BitVector(acc, self.cols)

    def matmul(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.nrows:
            raise DimensionMismatch("inner dimensions differ")
        out = []
        for r in self.rows:
            acc = 0
            i = 0
            rr = r
            while rr:
                if rr & 1:
                    acc ^= other.rows[i]
                rr >>= 1
                i += 1
            out.append(acc)
        return BitMatrix(tuple(out), other.cols)

    def stack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise DimensionMismatch("column counts differ")
        return BitMatrix(self.rows + other.rows, self.cols)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.cols):
                out[i, j] = (r >> j) & 1
        return out

    @classmethod
    def from_array(cls, a: np.ndarray) -> "BitMatrix":
        return cls.from_bits(a.tolist())

    def to_json(self) -> dict:
        nbytes = (self.cols + 7) // 8
        data = b"".join(r.to_bytes(nbytes, "little") for r in self.rows)
        return {"rows": self.nrows, "cols": self.cols, "data": data.hex()}

    @classmethod
    def from_json(cls, doc: dict) -> "BitMatrix":
        nrows, cols = int(doc["rows"]), int(doc["cols"])
        data = bytes.fromhex(doc["data"])
        nbytes = (cols + 7) // 8
        if len(data) != nrows * nbytes:
            raise PreconditionError("packed data length does not match shape")
        rows = tuple(
            int.from_bytes(data[i * nbytes : (i + 1) * nbytes], "little")
            for i in range(nrows)
        )
        return cls(rows, cols)


def rref(m: BitMatrix) -> tuple:
    """Reduced row-echelon form; returns (nonzero rows tuple, pivot column list)."""
    work = list(m.rows)
    pivots = []
    head = 0
    for col in range(m.cols):
        piv = None
        for i in range(head, len(work)):
            if (work[i] >> col) & 1:
                piv = i
                break
        if piv is None:
            continue
        work[head], work[piv] = work[piv], work[head]
        for i in range(len(work)):
            if i != head and ((work[i] >> col) & 1):
                work[i] ^= work[head]
        pivots.append(col)
        head += 1
        if head == len(work):
            break
    return tuple(work[: len(pivots)]), pivots


def rank(m: BitMatrix) -> int:
    """Row rank over GF(2) via Gaussian elimination."""
    return len(rref(m)[1])


def nullspace(m: BitMatrix) -> BitMatrix:
    """Basis of {x : M x = 0}, one row per free column (rows already in RREF)."""
    reduced, pivots = rref(m)
    pivset = set(pivots)
    free = [c for c in range(m.cols) if c not in pivset]
    basis = []
    for f in free:
        vec = 1 << f
        for row, col in zip(reduced, pivots):
            if (row >> f) & 1:
                vec |= 1 << col
        basis.append(vec)
    return BitMatrix(tuple(basis), m.cols)


@dataclass(frozen=True)
class AffineSpace:
    """offset + row-span(basis); basis rows are linearly independent."""

    offset: BitVector
    basis: BitMatrix

    def __post_init__(self):
        if self.basis.cols != self.offset.n:
            raise DimensionMismatch("basis width differs from offset length")
        if rank(self.basis) != self.basis.nrows:
            raise PreconditionError("basis rows must be linearly independent")

    @property
    def dim(self) -> int:
        return self.basis.nrows

    @property
    def n(self) -> int:
        return self.offset.n

    def contains(self, v: BitVector) -> bool:
        shifted = v ^ self.offset
        stacked = BitMatrix(self.basis.rows + (shifted.bits,), self.n)
        return rank(stacked) == self.basis.nrows

    def element(self, coeffs: int) -> BitVector:
        acc = self.offset.bits
        for i in range(self.basis.nrows):
            if (coeffs >> i) & 1:
                acc ^= self.basis.rows[i]
        return BitVector(acc, self.n)


def solve_affine(m: BitMatrix, b: BitVector) -> Optional[AffineSpace]:
    """Full solution set of M x = b, or None when the system is inconsistent."""
    if m.nrows != b.n:
        raise DimensionMismatch(f"matrix has {m.nrows} rows, rhs has {b.n}")
    work = [(m.rows[i], (b.bits >> i) & 1) for i in range(m.nrows)]
    pivots = []
    head = 0
    for col in range(m.cols):
        piv = None
        for i in range(head, len(work)):
            if (work[i][0] >> col) & 1:
                piv = i
                break
        if piv is None:
            continue
        work[head], work[piv] = work[piv], work[head]
        for i in range(len(work)):
            if i != head and ((work[i][0] >> col) & 1):
                work[i] = (work[i][0] ^ work[head][0], work[i][1] ^ work[head][1])
        pivots.append(col)
        head += 1
        if head == len(work):
            break
    for row, rhs in work[head:]:
        if row == 0 and rhs == 1:
            return None
    offset = 0
    for (row, rhs), col in zip(work, pivots):
        if rhs:
            offset |= 1 << col
    basis = nullspace(m)
    return AffineSpace(BitVector(offset, m.cols), basis)


def enumerate_affine(space: AffineSpace) -> list:
    """All 2^dim elements of the space (dim capped at ENUMERATION_CAP)."""
    if space.dim > ENUMERATION_CAP:
        raise EnumerationCapExceeded(
            f"affine space has dimension {space.dim} > cap {ENUMERATION_CAP}"
        )
    out = []
    for coeffs in range(1 << space.dim):
        out.append(space.element(coeffs))
    return out


def span_canonical(m: BitMatrix) -> BitMatrix:
    """Canonical (RREF) basis of the row span; equal spans give equal matrices."""
    reduced, _ = rref(m)
    return BitMatrix(reduced, m.cols)


def subspace_contains(outer: BitMatrix, inner: BitMatrix) -> bool:
    if outer.cols != inner.cols:
        raise DimensionMismatch("ambient dimensions differ")
    return rank(outer.stack(inner)) == rank(outer)


def dual_space(s: BitMatrix) -> BitMatrix:
    """Basis of S^perp = {x : x . y = 0 for all y in S}; input rows must be independent."""
    if rank(s) != s.nrows:
        raise PreconditionError("input rows must be linearly independent")
    return nullspace(s)


def random_subspace(n: int, d: int, rng: np.random.Generator) -> BitMatrix:
    """Uniformly random d-dimensional subspace of GF(2)^n, canonical RREF basis.

    Rejection sampling: a uniform full-rank d x n matrix has uniform row span
    (every subspace has the same number of ordered bases).
    """
    if d > n:
        raise PreconditionError(f"subspace dimension {d} exceeds ambient {n}")
    if d == 0:
        return BitMatrix((), n)
    while True:
        cand = BitMatrix.random(d, n, rng)
        if rank(cand) == d:
            return span_canonical(cand)


def random_subspace_between(
    lower: BitMatrix, upper: BitMatrix, d: int, rng: np.random.Generator
) -> BitMatrix:
    """Uniform d-dimensional subspace S with lower <= S <= upper.

    Works in the quotient upper/lower: subspaces between the two correspond
    bijectively to subspaces of the quotient, so uniform sampling there lifts
    to uniform sampling here.
    """
    lo = span_canonical(lower)
    up = span_canonical(upper)
    if not subspace_contains(up, lo):
        raise PreconditionError("lower subspace is not contained in the upper one")
    dl, du = lo.nrows, up.nrows
    if not dl <= d <= du:
        raise PreconditionError(f"dimension {d} outside [{dl}, {du}]")
    # coordinates of lower inside upper: solve row_i(lo) = c . up
    upt = up.transpose()
    lo_in_up = []
    for i in range(dl):
        sol = solve_affine(upt, lo.row(i))
        lo_in_up.append(sol.offset.bits)
    lo_coords = BitMatrix(tuple(lo_in_up), du)
    reduced, pivots = rref(lo_coords)
    free = [c for c in range(du) if c not in set(pivots)]
    w = random_subspace(du - dl, d - dl, rng)
    lifted = []
    for i in range(w.nrows):
        vec = 0
        for j in range(du - dl):
            if w.entry(i, j):
                vec |= 1 << free[j]
        lifted.append(vec)
    combined = BitMatrix(tuple(lo_coords.rows) + tuple(lifted), du)
    # map back from upper-coordinates to ambient coordinates
    ambient = [BitVector(r, du) for r in combined.rows]
    rows = tuple(up.vm(v).bits for v in ambient)
    return span_canonical(BitMatrix(rows, up.cols))


def all_subspaces(n: int, d: int) -> list:
    """Every d-dimensional subspace of GF(2)^n (exhaustive; desk scale only)."""
    if d == 0:
        return [BitMatrix((), n)]
    seen = {}
    for packed in range(1 << (n * d)):
        rows = tuple((packed >> (n * i)) & ((1 << n) - 1) for i in range(d))
        m = BitMatrix(rows, n)
        if rank(m) != d:
            continue
        canon = span_canonical(m)
        seen[canon.rows] = canon
    return list(seen.values())


def subspace_elements(s: BitMatrix) -> Iterator[int]:
    """All 2^dim member ints of the row span."""
    for coeffs in range(1 << s.nrows):
        acc = 0
        for i in range(s.nrows):
            if (coeffs >> i) & 1:
                acc ^= s.rows[i]
        yield acc


def intersection_dim(a: BitMatrix, b: BitMatrix) -> int:
    """dim(span(a) & span(b)) via rank(a) + rank(b) - rank(a stacked on b)."""
    if a.cols != b.cols:
        raise DimensionMismatch("ambient dimensions differ")
    return rank(a) + rank(b) - rank(a.stack(b))
