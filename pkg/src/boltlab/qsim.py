"""Dense pure-state simulator over qubits.

Basis convention: qubit j is bit j of the basis index (LSB first), so a
GF(2) vector packed into an int *is* its basis index.  ``tensor(a, b)``
puts ``a`` in the high-order bits.  States are immutable; every operation
returns a new state.  Gates do not renormalize, so norm drift stays visible
to the hygiene tests; measurements and projections renormalize their outputs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, PreconditionError, QubitCapExceeded
from .gf2 import BitVector

DEFAULT_QUBIT_CAP = 26

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def qubit_cap() -> int:
    env = os.environ.get("LF_QUBIT_CAP")
    return int(env) if env else DEFAULT_QUBIT_CAP


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise PreconditionError("need at least one qubit")
        if self.num_qubits > qubit_cap():
            raise QubitCapExceeded(
                f"{self.num_qubits} qubits exceeds cap {qubit_cap()}"
            )
        if self.amps.shape != (1 << self.num_qubits,):
            raise DimensionMismatch("amplitude array length is not 2^num_qubits")
        nrm = float(np.linalg.norm(self.amps))
        if abs(nrm - 1.0) > 1e-6:
            raise PreconditionError(f"state norm {nrm} too far from 1")
        self.amps.flags.writeable = False

    @classmethod
    def from_amplitudes(cls, num_qubits: int, amps, normalize: bool = False) -> "StateVector":
        arr = np.asarray(amps, dtype=np.complex128).copy()
        if normalize:
            nrm = np.linalg.norm(arr)
            if nrm == 0:
                raise PreconditionError("cannot normalize the zero vector")
            arr = arr / nrm
        return cls(num_qubits, arr)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass(frozen=True)
class MeasurementOutcome:
    value: BitVector
    probability: float
    post_state: StateVector


def basis_state(num_qubits: int, index: int) -> StateVector:
    if not 0 <= index < (1 << num_qubits):
        raise PreconditionError("basis index out of range")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def uniform_over(points: Sequence[int], num_qubits: int) -> StateVector:
    """Equal amplitude 1/sqrt(len(points)) on each listed basis index."""
    pts = np.asarray(list(points), dtype=np.int64)
    if pts.size == 0:
        raise PreconditionError("point list is empty")
    if len(np.unique(pts)) != pts.size:
        raise PreconditionError("duplicate basis indices")
    if pts.min() < 0 or pts.max() >= (1 << num_qubits):
        raise PreconditionError("basis index out of range")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[pts] = 1.0 / np.sqrt(pts.size)
    return StateVector(num_qubits, amps)


def hadamard(state: StateVector, qubit_index: int) -> StateVector:
    if not 0 <= qubit_index < state.num_qubits:
        raise PreconditionError("qubit index out of range")
    shape = (-1, 2, 1 << qubit_index)
    a = state.amps.reshape(shape)
    out = np.empty_like(a)
    out[:, 0, :] = (a[:, 0, :] + a[:, 1, :]) * _SQRT_HALF
    out[:, 1, :] = (a[:, 0, :] - a[:, 1, :]) * _SQRT_HALF
    return StateVector(state.num_qubits, out.reshape(-1))


def hadamard_all(state: StateVector) -> StateVector:
    """Hadamard on every qubit: the GF(2) quantum Fourier transform."""
    out = state
    for q in range(state.num_qubits):
        out = hadamard(out, q)
    return out


def apply_phase(state: StateVector, f: Callable[[np.ndarray], np.ndarray]) -> StateVector:
    """amp(x) <- (-1)^{f(x)} amp(x); f maps an index array to a 0/1 array."""
    idx = np.arange(state.amps.size, dtype=np.int64)
    bits = np.asarray(f(idx)) & 1
    signs = 1.0 - 2.0 * bits.astype(np.float64)
    return StateVector(state.num_qubits, state.amps * signs)


def apply_bijection(state: StateVector, pi: Callable[[np.ndarray], np.ndarray]) -> StateVector:
    """amp'(pi(x)) = amp(x); pi maps an index array to an index array.

    pi only needs to be injective on the support; a collision among relabeled
    support indices raises.
    """
    idx = np.arange(state.amps.size, dtype=np.int64)
    target = np.asarray(pi(idx), dtype=np.int64)
    if target.min() < 0 or target.max() >= state.amps.size:
        raise PreconditionError("bijection maps outside the register")
    support = np.flatnonzero(np.abs(state.amps) > 0)
    tgt = target[support]
    if len(np.unique(tgt)) != tgt.size:
        raise PreconditionError("map is not injective on the support")
    amps = np.zeros_like(state.amps)
    amps[tgt] = state.amps[support]
    return StateVector(state.num_qubits, amps)


def _register_values(size: int, qubit_indices: Sequence[int]) -> np.ndarray:
    idx = np.arange(size, dtype=np.int64)
    out = np.zeros(size, dtype=np.int64)
    for j, q in enumerate(qubit_indices):
        out |= ((idx >> q) & 1) << j
    return out


def _check_register(state: StateVector, qubit_indices: Sequence[int]):
    if len(set(qubit_indices)) != len(qubit_indices):
        raise PreconditionError("duplicate qubit indices")
    for q in qubit_indices:
        if not 0 <= q < state.num_qubits:
            raise PreconditionError("qubit index out of range")


def measure_distribution(state: StateVector, qubit_indices: Sequence[int]) -> List[MeasurementOutcome]:
    """Exact outcome table for a partial computational-basis measurement.

    Outcomes with exactly zero probability are omitted.  Bit j of each
    outcome value is the measured value of qubit_indices[j].
    """
    _check_register(state, qubit_indices)
    vals = _register_values(state.amps.size, qubit_indices)
    probs = np.abs(state.amps) ** 2
    table = np.bincount(vals, weights=probs, minlength=1 << len(qubit_indices))
    outcomes = []
    for v in np.flatnonzero(table > 0.0):
        sel = vals == v
        post = np.where(sel, state.amps, 0.0)
        post = post / np.sqrt(table[v])
        outcomes.append(
            MeasurementOutcome(
                value=BitVector(int(v), max(len(qubit_indices), 1)),
                probability=float(table[v]),
                post_state=StateVector(state.num_qubits, post),
            )
        )
    return outcomes


def measure_register(
    state: StateVector, qubit_indices: Sequence[int], rng: np.random.Generator
) -> MeasurementOutcome:
    """Sample one outcome with Born probabilities and collapse."""
    _check_register(state, qubit_indices)
    vals = _register_values(state.amps.size, qubit_indices)
    probs = np.abs(state.amps) ** 2
    table = np.bincount(vals, weights=probs, minlength=1 << len(qubit_indices))
    table = table / table.sum()
    v = int(rng.choice(table.size, p=table))
    sel = vals == v
    post = np.where(sel, state.amps, 0.0)
    post = post / np.linalg.norm(post)
    return MeasurementOutcome(
        value=BitVector(v, max(len(qubit_indices), 1)),
        probability=float(table[v]),
        post_state=StateVector(state.num_qubits, post),
    )


def orthonormalize(states: Sequence[StateVector], drop_tol: float = 1e-10) -> List[np.ndarray]:
    """Modified Gram-Schmidt; vectors with residual norm below drop_tol are dropped."""
    basis: List[np.ndarray] = []
    for s in states:
        v = s.amps.copy()
        for e in basis:
            v -= np.vdot(e, v) * e
        # second pass guards against cancellation in nearly dependent sets
        for e in basis:
            v -= np.vdot(e, v) * e
        nrm = np.linalg.norm(v)
        if nrm > drop_tol:
            basis.append(v / nrm)
    return basis


def project_onto_span(
    state: StateVector, basis_states: Sequence[StateVector]
) -> Tuple[float, Optional[StateVector]]:
    """Probability of projecting onto span(basis_states) and the projected state."""
    if not basis_states:
        raise PreconditionError("span basis is empty")
    for b in basis_states:
        if b.num_qubits != state.num_qubits:
            raise DimensionMismatch("basis state dimension differs from input")
    if np.linalg.norm(state.amps) == 0:
        raise PreconditionError("cannot project the zero state")
    basis = orthonormalize(basis_states)
    proj = np.zeros_like(state.amps)
    for e in basis:
        proj += np.vdot(e, state.amps) * e
    prob = float(np.linalg.norm(proj) ** 2)
    if prob <= 1e-300:
        return 0.0, None
    return prob, StateVector(state.num_qubits, proj / np.sqrt(prob))


def project_block_span(
    state: StateVector,
    block_start: int,
    block_qubits: int,
    basis_states: Sequence[StateVector],
) -> Tuple[float, Optional[StateVector]]:
    """Project one contiguous qubit block onto span(basis_states), identity elsewhere.

    The block occupies qubits [block_start, block_start + block_qubits).
    """
    for b in basis_states:
        if b.num_qubits != block_qubits:
            raise DimensionMismatch("basis state does not match block size")
    basis = orthonormalize(basis_states)
    lo = 1 << block_start
    blk = 1 << block_qubits
    hi = state.amps.size // (lo * blk)
    a = state.amps.reshape(hi, blk, lo)
    coeffs = np.einsum("kb,hbl->khl", np.conj(np.stack(basis)), a)
    proj = np.einsum("khl,kb->hbl", coeffs, np.stack(basis)).reshape(-1)
    prob = float(np.linalg.norm(proj) ** 2)
    if prob <= 1e-300:
        return 0.0, None
    return prob, StateVector(state.num_qubits, proj / np.sqrt(prob))


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2."""
    if a.num_qubits != b.num_qubits:
        raise DimensionMismatch("states have different qubit counts")
    return float(np.abs(np.vdot(a.amps, b.amps)) ** 2)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Product state with a in the high-order register."""
    total = a.num_qubits + b.num_qubits
    if total > qubit_cap():
        raise QubitCapExceeded(f"{total} qubits exceeds cap {qubit_cap()}")
    return StateVector(total, np.kron(a.amps, b.amps))


def measure_function(
    state: StateVector, values: np.ndarray
) -> List[Tuple[int, float, StateVector]]:
    """Exact measurement of a classical function of the basis index.

    ``values[i]`` is the function value on basis state i; returns
    (value, probability, post_state) for every value with nonzero mass.
    """
    if values.shape != state.amps.shape:
        raise DimensionMismatch("function table length differs from state size")
    probs = np.abs(state.amps) ** 2
    table = np.bincount(values.astype(np.int64), weights=probs)
    out = []
    for v in np.flatnonzero(table > 0.0):
        sel = values == v
        post = np.where(sel, state.amps, 0.0) / np.sqrt(table[v])
        out.append((int(v), float(table[v]), StateVector(state.num_qubits, post)))
    return out


def state_dump(state: StateVector, tol: float = 1e-12) -> dict:
    """Sparse JSON form: entries (index hex, re, im) with |amp| > tol."""
    entries = []
    for i in np.flatnonzero(np.abs(state.amps) > tol):
        a = state.amps[i]
        entries.append([format(int(i), "x"), float(a.real), float(a.imag)])
    return {"num_qubits": state.num_qubits, "entries": entries}


def state_load(doc: dict) -> StateVector:
    q = int(doc["num_qubits"])
    amps = np.zeros(1 << q, dtype=np.complex128)
    for idx_hex, re, im in doc["entries"]:
        amps[int(idx_hex, 16)] = complex(float(re), float(im))
    return StateVector(q, amps)
