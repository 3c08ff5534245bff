"""Subspace-state quantum money over GF(2) with oracle membership tests.

A note is the uniform superposition over a hidden half-dimensional subspace
S.  Verification measures S-membership, applies the global Hadamard (which
maps the note onto the dual subspace's superposition), measures
S-perp-membership, and undoes the Hadamard.  Adversaries only ever receive
membership closures, never the basis; the serial number is an opaque handle
naming that closure pair (a single-note mini-scheme, so serial equality is
handle identity and the games score only the state projections).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import PreconditionError
from .gf2 import BitMatrix, dual_space, random_subspace, random_subspace_between, span_canonical, subspace_elements
from . import qsim
from .qsim import StateVector


def _membership_mask(basis: BitMatrix, n: int) -> np.ndarray:
    """Boolean membership table over all 2^n indices, via dual parity checks."""
    checks = dual_space(span_canonical(basis)) if basis.nrows else BitMatrix.identity(n)
    idx = np.arange(1 << n, dtype=np.uint64)
    ok = np.ones(1 << n, dtype=bool)
    for row in checks.rows:
        ok &= (np.bitwise_count(idx & np.uint64(row)) & 1) == 0
    return ok


@dataclass(frozen=True)
class MembershipOracles:
    """Harness-held closures over the secret basis; all an adversary gets."""

    serial: str
    primal: Callable[[np.ndarray], np.ndarray]
    dual: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MoneyNote:
    subspace: BitMatrix  # secret in-game; the harness keeps it for scoring
    serial: str
    state: StateVector
    oracles: MembershipOracles


def subspace_state(basis: BitMatrix, n: int) -> StateVector:
    return qsim.uniform_over(sorted(subspace_elements(basis)), n)


def money_gen(n: int, rng: np.random.Generator) -> MoneyNote:
    """Random half-dimensional subspace, its superposition, and oracle handles."""
    if n % 2 != 0:
        raise PreconditionError("need an even number of qubits")
    if n > 20:
        raise PreconditionError("desk-scale cap is n <= 20")
    s = random_subspace(n, n // 2, rng)
    return note_for_subspace(s, n, rng)


def note_for_subspace(s: BitMatrix, n: int, rng: np.random.Generator) -> MoneyNote:
    s = span_canonical(s)
    mask_s = _membership_mask(s, n)
    mask_d = _membership_mask(dual_space(s), n)
    serial = "note-" + rng.bytes(8).hex()
    oracles = MembershipOracles(
        serial=serial,
        primal=lambda idx, _m=mask_s: _m[np.asarray(idx, dtype=np.int64)],
        dual=lambda idx, _m=mask_d: _m[np.asarray(idx, dtype=np.int64)],
    )
    return MoneyNote(subspace=s, serial=serial, state=subspace_state(s, n), oracles=oracles)


def _project_mask(state: StateVector, keep: np.ndarray) -> Tuple[float, Optional[StateVector]]:
    masked = np.where(keep, state.amps, 0.0)
    p = float(np.linalg.norm(masked) ** 2)
    if p <= 1e-300:
        return 0.0, None
    return p, StateVector(state.num_qubits, masked / np.sqrt(p))


def money_verify_analysis(
    note_state: StateVector, oracles: MembershipOracles
) -> Tuple[float, Optional[StateVector]]:
    """Exact acceptance probability and post-state of the two-test verifier.

    Membership in S is measured in the computational basis, membership in
    S-perp after the global Hadamard; the Hadamard is undone at the end.
    """
    n = note_state.num_qubits
    idx = np.arange(1 << n, dtype=np.int64)
    p0, mid = _project_mask(note_state, oracles.primal(idx))
    if mid is None:
        return 0.0, None
    mid = qsim.hadamard_all(mid)
    p1, out = _project_mask(mid, oracles.dual(idx))
    if out is None:
        return 0.0, None
    return p0 * p1, qsim.hadamard_all(out)


def money_verify(
    note_state: StateVector, oracles: MembershipOracles, rng: np.random.Generator
) -> Tuple[bool, Optional[StateVector]]:
    """Sampled verification; the post-state accompanies an accept."""
    n = note_state.num_qubits
    idx = np.arange(1 << n, dtype=np.int64)
    p0, mid = _project_mask(note_state, oracles.primal(idx))
    if mid is None or rng.random() >= p0:
        return False, None
    mid = qsim.hadamard_all(mid)
    p1, out = _project_mask(mid, oracles.dual(idx))
    if out is None or rng.random() >= p1:
        return False, None
    return True, qsim.hadamard_all(out)


def projective_verify(note_state: StateVector, subspace: BitMatrix) -> Tuple[float, Optional[StateVector]]:
    """Ideal projector onto the single honest note state."""
    honest = subspace_state(subspace, note_state.num_qubits)
    return qsim.project_onto_span(note_state, [honest])


# -- adversaries ----------------------------------------------------------------

Adversary = Callable[[StateVector, MembershipOracles, np.random.Generator], Tuple[StateVector, StateVector]]


def measure_and_copy(
    state: StateVector, oracles: MembershipOracles, rng: np.random.Generator
) -> Tuple[StateVector, StateVector]:
    """Measure the note and output the observed basis state twice."""
    out = qsim.measure_register(state, list(range(state.num_qubits)), rng)
    copy = qsim.basis_state(state.num_qubits, out.value.bits)
    return copy, qsim.basis_state(state.num_qubits, out.value.bits)


def fixed_guess(
    state: StateVector, oracles: MembershipOracles, rng: np.random.Generator
) -> Tuple[StateVector, StateVector]:
    """Ignore the note; output |0...0> twice (0 is in every subspace)."""
    z = qsim.basis_state(state.num_qubits, 0)
    return z, z


def honest_forwarding(
    state: StateVector, oracles: MembershipOracles, rng: np.random.Generator
) -> Tuple[StateVector, StateVector]:
    """Return the untouched note plus |0...0> as the second output."""
    return state, qsim.basis_state(state.num_qubits, 0)


BUILTIN_ADVERSARIES = {
    "measure-copy": measure_and_copy,
    "fixed-guess": fixed_guess,
    "honest-forward": honest_forwarding,
}


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> Tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class CounterfeitStats:
    n: int
    trials: int
    successes: int
    success_rate: float
    wilson_95: tuple
    mean_f2: float  # average of the exact per-trial squared-fidelity products
    per_trial_f2_sd: float


def counterfeit_experiment(
    n: int,
    adversary: Adversary,
    trials: int,
    rng: np.random.Generator,
    t0: Optional[BitMatrix] = None,
    t1: Optional[BitMatrix] = None,
) -> CounterfeitStats:
    """Challenger loop for the single-note counterfeiting game.

    Per trial a fresh subspace is drawn (uniform, or between t1-perp and t0
    when those hybrid walls are supplied), the adversary gets the note state
    and oracle access only, and success means both returned states pass the
    projective verification onto the honest note.  The exact per-trial
    product of projection probabilities is the trial's squared fidelity.
    """
    if n % 2 != 0:
        raise PreconditionError("need an even number of qubits")
    successes = 0
    f2s = []
    streams = rng.spawn(trials)
    for t in range(trials):
        trng = streams[t]
        if t0 is not None and t1 is not None:
            s = random_subspace_between(dual_space(t1), t0, n // 2, trng)
            note = note_for_subspace(s, n, trng)
        else:
            note = money_gen(n, trng)
        out0, out1 = adversary(note.state, note.oracles, trng)
        p0, _ = projective_verify(out0, note.subspace)
        p1, _ = projective_verify(out1, note.subspace)
        f2 = p0 * p1
        f2s.append(f2)
        if trng.random() < p0 and trng.random() < p1:
            successes += 1
    arr = np.array(f2s) if f2s else np.zeros(1)
    return CounterfeitStats(
        n=n,
        trials=trials,
        successes=successes,
        success_rate=successes / trials if trials else 0.0,
        wilson_95=wilson_interval(successes, trials),
        mean_f2=float(arr.mean()),
        per_trial_f2_sd=float(arr.std(ddof=1)) if len(f2s) > 1 else 0.0,
    )
