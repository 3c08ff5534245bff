"""Quantum lightning over the degree-2 hash: bolts, verification, games.

A bolt is k+1 registers, each ideally the uniform superposition psi_y over
the preimages of one digest y (the serial number).  Verification projects
each register onto span{phi_r} = span{psi_z} (the two families span the
same space), then measures the hash to read the serial.

Two generation modes: ``idealized-product`` builds psi_y^(k+1) directly
from the preimage enumeration; ``joint-micro`` runs the four-step faithful
generation (superposed difference vectors, colliding-space construction,
hash measurement, register remap) and is feasible only at micro sizes.

Two verification strategies: ``oracle`` applies the ideal span projector;
``circuit`` runs the coherent extraction from .extraction, which at desk
scale rejects a sizable rank-deficient fraction of honest mass (see that
module's docstring; the games below report the exact rates).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np

from .attacks import colliding_space_for_deltas, find_affine_collision_space, is_nonaffine
from .errors import PreconditionError, QubitCapExceeded
from .extraction import CircuitVerifyAnalysis, circuit_span_analysis, phi_state
from .gf2 import BitVector, enumerate_affine
from .mqhash import (
    Digest,
    HashKey,
    digest_table,
    eval_digest,
    fiber_counts,
    keygen,
    preimage_indices,
)
from . import qsim
from .qsim import StateVector

MODE_PRODUCT = "idealized-product"
MODE_JOINT = "joint-micro"

ORACLE = "oracle"
CIRCUIT = "circuit"

ACCEPTED = "accepted"
SPAN_REJECT = "span_reject"
RANK_DEFICIENT = "rank_deficient"
SERIAL_MISMATCH = "serial_mismatch"


@dataclass(frozen=True)
class LightningParams:
    n: int
    m: int
    k: int
    u: int
    label: str = "desk"

    def __post_init__(self):
        if not self.n < self.m:
            raise PreconditionError("need n < m")
        if self.m < self.u * (self.n + 1):
            raise PreconditionError("need m >= u(n+1) for the extraction rounds")
        if self.u < self.n:
            raise PreconditionError("need u >= n rounds to determine the phase vector")
        if self.k < 1:
            raise PreconditionError("need k >= 1")

    @classmethod
    def desk(cls) -> "LightningParams":
        return cls(n=2, m=12, k=2, u=3, label="desk")

    @classmethod
    def micro(cls, m: int = 4) -> "LightningParams":
        return cls(n=1, m=m, k=1, u=2, label="micro")


@dataclass(frozen=True)
class Bolt:
    serial: Digest
    mode: str
    registers: tuple  # product: k+1 StateVectors over m qubits; joint: one joint state
    m: int
    k: int

    def register_block(self, j: int) -> Tuple[int, int]:
        """Qubit block of register j inside the joint state (register 0 is x)."""
        return (self.k - j) * self.m, self.m


def setup(params: LightningParams, rng: np.random.Generator) -> HashKey:
    return keygen(params.n, params.m, rng)


def psi_state(key: HashKey, y: Digest) -> StateVector:
    """Uniform superposition over the preimages of y."""
    idx = preimage_indices(key, y)
    if idx.size == 0:
        raise PreconditionError(f"digest {y} has no preimages")
    return qsim.uniform_over(idx, key.m)


@lru_cache(maxsize=16)
def span_states(key: HashKey) -> tuple:
    """The 2^n phase states phi_r (not generally orthogonal)."""
    return tuple(phi_state(key, r) for r in range(1 << key.n))


@lru_cache(maxsize=16)
def _span_matrix(key: HashKey) -> np.ndarray:
    basis = qsim.orthonormalize(span_states(key))
    return np.stack(basis)


def span_projection(key: HashKey, state: StateVector) -> Tuple[float, Optional[StateVector]]:
    """Exact probability and post-state of the ideal span projector."""
    e = _span_matrix(key)
    coeffs = e.conj() @ state.amps
    proj = coeffs @ e
    prob = float(np.linalg.norm(proj) ** 2)
    if prob <= 1e-300:
        return 0.0, None
    return prob, StateVector(key.m, proj / np.sqrt(prob))


@dataclass(frozen=True)
class MiniVerifyResult:
    accepted: bool
    reject_kind: Optional[str] = None
    serial: Optional[Digest] = None
    post: Optional[StateVector] = None


def _measure_serial(
    key: HashKey, state: StateVector, rng: np.random.Generator
) -> Tuple[Digest, StateVector]:
    outcomes = qsim.measure_function(state, digest_table(key))
    probs = np.array([p for _, p, _ in outcomes])
    pick = int(rng.choice(len(outcomes), p=probs / probs.sum()))
    y, _, post = outcomes[pick]
    return BitVector(y, key.n), post


def mini_verify(
    key: HashKey,
    params: LightningParams,
    register: StateVector,
    rng: np.random.Generator,
    strategy: str = ORACLE,
) -> MiniVerifyResult:
    """Span test first, then the hash measurement that reads the serial."""
    if register.num_qubits != key.m:
        raise PreconditionError("register does not match the key's input length")
    if strategy == ORACLE:
        prob, post = span_projection(key, register)
        if rng.random() >= prob:
            return MiniVerifyResult(False, reject_kind=SPAN_REJECT)
    elif strategy == CIRCUIT:
        analysis = circuit_span_analysis(key, params.u, register)
        if rng.random() >= analysis.rank_ok_probability:
            return MiniVerifyResult(False, reject_kind=RANK_DEFICIENT)
        if rng.random() >= analysis.zero_probability:
            return MiniVerifyResult(False, reject_kind=SPAN_REJECT)
        post = analysis.post_state
    else:
        raise PreconditionError(f"unknown strategy {strategy!r}")
    serial, post = _measure_serial(key, post, rng)
    return MiniVerifyResult(True, serial=serial, post=post)


def mini_verify_acceptance(
    key: HashKey, params: LightningParams, register: StateVector, strategy: str = ORACLE
) -> float:
    """Exact acceptance probability of the strategy's measurement."""
    if strategy == ORACLE:
        return span_projection(key, register)[0]
    if strategy == CIRCUIT:
        return circuit_span_analysis(key, params.u, register).accept_probability
    raise PreconditionError(f"unknown strategy {strategy!r}")


def circuit_analysis(
    key: HashKey, params: LightningParams, register: StateVector
) -> CircuitVerifyAnalysis:
    return circuit_span_analysis(key, params.u, register)


@dataclass(frozen=True)
class FullVerifyResult:
    outcome: str
    serial: Optional[Digest] = None
    bolt: Optional[Bolt] = None
    reject_kinds: tuple = ()

    @property
    def accepted(self) -> bool:
        return self.outcome == ACCEPTED


def full_verify(
    key: HashKey,
    params: LightningParams,
    bolt: Bolt,
    rng: np.random.Generator,
    strategy: str = ORACLE,
) -> FullVerifyResult:
    """Mini-verify every register; accept iff all pass with one common serial."""
    if bolt.mode == MODE_JOINT:
        return _full_verify_joint(key, params, bolt, rng, strategy)
    serials: List[Digest] = []
    posts: List[StateVector] = []
    kinds: List[str] = []
    for reg in bolt.registers:
        res = mini_verify(key, params, reg, rng, strategy=strategy)
        if not res.accepted:
            return FullVerifyResult(
                res.reject_kind or SPAN_REJECT, reject_kinds=(res.reject_kind,)
            )
        serials.append(res.serial)
        posts.append(res.post)
        kinds.append("ok")
    if len({s.bits for s in serials}) != 1:
        return FullVerifyResult(SERIAL_MISMATCH, reject_kinds=tuple(kinds))
    post_bolt = replace(bolt, serial=serials[0], registers=tuple(posts))
    return FullVerifyResult(ACCEPTED, serial=serials[0], bolt=post_bolt)


def _full_verify_joint(
    key: HashKey,
    params: LightningParams,
    bolt: Bolt,
    rng: np.random.Generator,
    strategy: str,
) -> FullVerifyResult:
    if strategy != ORACLE:
        raise PreconditionError("joint-micro bolts support the oracle strategy only")
    state = bolt.registers[0]
    tab = digest_table(key)
    serials: List[Digest] = []
    for j in range(bolt.k + 1):
        start, width = bolt.register_block(j)
        prob, post = qsim.project_block_span(state, start, width, list(span_states(key)))
        if post is None or rng.random() >= prob:
            return FullVerifyResult(SPAN_REJECT, reject_kinds=(SPAN_REJECT,))
        idx = np.arange(post.amps.size, dtype=np.int64)
        vals = tab[(idx >> start) & ((1 << width) - 1)]
        outcomes = qsim.measure_function(post, vals)
        probs = np.array([p for _, p, _ in outcomes])
        pick = int(rng.choice(len(outcomes), p=probs / probs.sum()))
        y, _, state = outcomes[pick]
        serials.append(BitVector(y, key.n))
    if len({s.bits for s in serials}) != 1:
        return FullVerifyResult(SERIAL_MISMATCH)
    post_bolt = replace(bolt, serial=serials[0], registers=(state,))
    return FullVerifyResult(ACCEPTED, serial=serials[0], bolt=post_bolt)


def full_verify_acceptance(
    key: HashKey, params: LightningParams, bolt: Bolt, strategy: str = ORACLE
) -> float:
    """Exact probability that every register passes its span test.

    Product bolts only: registers are unentangled so probabilities multiply.
    """
    if bolt.mode != MODE_PRODUCT:
        raise PreconditionError("exact product acceptance needs a product bolt")
    p = 1.0
    for reg in bolt.registers:
        p *= mini_verify_acceptance(key, params, reg, strategy)
    return p


# -- generation --------------------------------------------------------------


def gen_bolt(
    key: HashKey,
    params: LightningParams,
    rng: np.random.Generator,
    mode: str = MODE_PRODUCT,
) -> Bolt:
    if mode == MODE_PRODUCT:
        x = BitVector.random(key.m, rng)
        y = eval_digest(key, x)
        reg = psi_state(key, y)
        return Bolt(
            serial=y,
            mode=mode,
            registers=tuple(reg for _ in range(params.k + 1)),
            m=key.m,
            k=params.k,
        )
    if mode == MODE_JOINT:
        return _gen_bolt_joint(key, params, rng)
    raise PreconditionError(f"unknown bolt mode {mode!r}")


def _delta_combos(m: int, k: int):
    for combo in itertools.product(range(1 << m), repeat=k):
        yield combo


def joint_delta_survey(key: HashKey, params: LightningParams) -> dict:
    """Exhaustive classification of every difference tuple.

    Returns counts of tuples whose colliding space has the generic dimension
    m - nk, a histogram of dimensions, and the unsolvable count.  The mass of
    non-generic tuples is the deviation budget for the idealized product form.
    """
    m, k, n = key.m, params.k, key.n
    generic = m - n * k
    dims = {}
    unsolvable = 0
    for combo in _delta_combos(m, k):
        deltas = [BitVector(d, m) for d in combo if d != 0]
        if deltas:
            space = colliding_space_for_deltas(key, deltas)
            if space is None:
                unsolvable += 1
                continue
            dim = space.dim
        else:
            dim = m  # zero differences constrain nothing
        dims[dim] = dims.get(dim, 0) + 1
    total = 1 << (m * k)
    bad = total - dims.get(generic, 0)
    return {
        "total_tuples": total,
        "generic_dim": generic,
        "dim_histogram": {str(d): c for d, c in sorted(dims.items())},
        "unsolvable": unsolvable,
        "nongeneric_mass": bad / total,
    }


def _gen_bolt_joint(key: HashKey, params: LightningParams, rng: np.random.Generator) -> Bolt:
    m, k = key.m, params.k
    total_qubits = (k + 1) * m
    if total_qubits + k * m > qsim.qubit_cap():
        raise QubitCapExceeded(
            f"joint generation needs {(k + 1) * m + k * m} qubits of budget"
        )
    amps = np.zeros(1 << total_qubits, dtype=np.complex128)
    base = 1.0 / np.sqrt(1 << (k * m))
    for combo in _delta_combos(m, k):
        deltas = [BitVector(d, m) for d in combo if d != 0]
        if deltas:
            space = colliding_space_for_deltas(key, deltas)
            if space is None:
                continue  # unsolvable tuple: dropped, renormalized below
            elems = [e.bits for e in enumerate_affine(space)]
        else:
            elems = list(range(1 << m))  # zero differences constrain nothing
        amp = base / np.sqrt(len(elems))
        dpack = 0
        for j, d in enumerate(combo):
            dpack |= d << ((k - 1 - j) * m)
        for x in elems:
            amps[(x << (k * m)) | dpack] += amp
    nrm = np.linalg.norm(amps)
    state = StateVector(total_qubits, amps / nrm)
    # measure the hash of the x register
    tab = digest_table(key)
    idx = np.arange(amps.size, dtype=np.int64)
    xvals = tab[idx >> (k * m)]
    outcomes = qsim.measure_function(state, xvals)
    probs = np.array([p for _, p, _ in outcomes])
    pick = int(rng.choice(len(outcomes), p=probs / probs.sum()))
    y, _, state = outcomes[pick]
    # relabel (x, d1..dk) -> (x, x-d1, ..., x-dk)
    def remap(indices: np.ndarray) -> np.ndarray:
        x = indices >> (k * m)
        out = x << (k * m)
        for j in range(k):
            shift = (k - 1 - j) * m
            d = (indices >> shift) & ((1 << m) - 1)
            out |= (x ^ d) << shift
        return out

    state = qsim.apply_bijection(state, remap)
    return Bolt(
        serial=BitVector(y, key.n), mode=MODE_JOINT, registers=(state,), m=m, k=k
    )


def ideal_product_state(key: HashKey, y: Digest, copies: int) -> StateVector:
    """psi_y tensored `copies` times (micro sizes only)."""
    reg = psi_state(key, y)
    out = reg
    for _ in range(copies - 1):
        out = qsim.tensor(out, reg)
    return out


# -- collapsing experiment ----------------------------------------------------


def collapsing_experiment(
    key: HashKey, params: LightningParams, b: int, rng: np.random.Generator
) -> int:
    """One run of the distinguisher: 1 iff the span test accepts.

    b=0 hands it the superposition of preimages of a hashed random input;
    b=1 hands it the measured input itself.
    """
    x = BitVector.random(key.m, rng)
    if b == 0:
        state = psi_state(key, eval_digest(key, x))
    else:
        state = qsim.basis_state(key.m, x.bits)
    prob, _ = span_projection(key, state)
    return 1 if rng.random() < prob else 0


def collapsing_advantage_exact(key: HashKey) -> dict:
    """Exact Pr[out=1 | b] for both branches and their difference.

    For b=0 the state is always in the span (probability 1).  For b=1 the
    basis state |x> projects with probability 1/|fiber(f(x))|, so averaging
    over uniform x gives (#nonempty fibers) / 2^m exactly.
    """
    counts = fiber_counts(key)
    nonempty = int((counts > 0).sum())
    p1 = nonempty / float(1 << key.m)
    return {"p_accept_b0": 1.0, "p_accept_b1": p1, "advantage": 1.0 - p1}


# -- storms and games ----------------------------------------------------------

Storm = Callable[[HashKey, LightningParams, np.random.Generator], Tuple[Bolt, Bolt]]


def classical_state_storm(
    key: HashKey, params: LightningParams, rng: np.random.Generator
) -> Tuple[Bolt, Bolt]:
    """Measured-input cheat: both bolts are |x>^(k+1) for one random x."""
    x = BitVector.random(key.m, rng)
    reg = qsim.basis_state(key.m, x.bits)
    y = eval_digest(key, x)
    bolt = Bolt(y, MODE_PRODUCT, tuple(reg for _ in range(params.k + 1)), key.m, params.k)
    return bolt, bolt


def cheat_duplicate_storm(
    key: HashKey, params: LightningParams, rng: np.random.Generator
) -> Tuple[Bolt, Bolt]:
    """Simulator-only amplitude copy of one honest bolt.

    Physically illegal (it clones a quantum state); it exists to exhibit
    exactly the event the non-affine multi-collision assumption forbids.
    """
    bolt = gen_bolt(key, params, rng)
    clone = Bolt(
        bolt.serial,
        bolt.mode,
        tuple(StateVector(r.num_qubits, r.amps.copy()) for r in bolt.registers),
        bolt.m,
        bolt.k,
    )
    return bolt, clone


def affine_attack_storm(
    key: HashKey, params: LightningParams, rng: np.random.Generator
) -> Tuple[Bolt, Bolt]:
    """Same-serial bolt pair seeded by the affine collision-space attack.

    The attack classically pins a digest y carrying an r-dimensional affine
    space of colliding inputs; both bolts are then built as in-span preimage
    superpositions for that y.  The state construction uses desk-scale fiber
    enumeration (the idealized generator's machinery): a uniform superposition
    over the certified affine subspace alone would fail the span test with
    overwhelming probability, since it is supported on a strict subset of the
    fiber.
    """
    r = params.k + 1
    while key.m < r * key.n + max(0, r - key.n):
        r -= 1
    if r < 1:
        raise PreconditionError("no feasible affine-space dimension at these parameters")
    _, y, _, _ = find_affine_collision_space(key, r, rng)

    def build() -> Bolt:
        reg = psi_state(key, y)
        return Bolt(y, MODE_PRODUCT, tuple(reg for _ in range(params.k + 1)), key.m, params.k)

    return build(), build()


BUILTIN_STORMS = {
    "classical": classical_state_storm,
    "cheat-duplicate": cheat_duplicate_storm,
    "affine-attack": affine_attack_storm,
}


@dataclass(frozen=True)
class GameStats:
    trials: int
    accepts: int
    witness_count: int
    accept_rate: float
    witness_rate: Optional[float]
    serial_counts: dict


def uniqueness_game(
    key: HashKey,
    params: LightningParams,
    storm: Storm,
    trials: int,
    rng: np.random.Generator,
    strategy: str = ORACLE,
) -> GameStats:
    """Challenger loop: verify both bolts, accept on matching serials.

    On acceptance all 2(k+1) post-verification registers are measured; the
    witness counter records whether the points form a non-affine
    multi-collision, i.e. the classical object an accepting pair surrenders.
    """
    accepts = 0
    witness = 0
    serial_counts: dict = {}
    streams = rng.spawn(trials)
    for t in range(trials):
        trng = streams[t]
        b0, b1 = storm(key, params, trng)
        r0 = full_verify(key, params, b0, trng, strategy=strategy)
        r1 = full_verify(key, params, b1, trng, strategy=strategy)
        if not (r0.accepted and r1.accepted and r0.serial == r1.serial):
            continue
        accepts += 1
        shex = r0.serial.to_hex()
        serial_counts[shex] = serial_counts.get(shex, 0) + 1
        points = []
        for res in (r0, r1):
            for j in range(res.bolt.k + 1):
                points.append(_measure_register_point(res.bolt, j, key, trng))
        distinct = len({p.bits for p in points}) == len(points)
        same_digest = len({eval_digest(key, p).bits for p in points}) == 1
        if distinct and same_digest and is_nonaffine(points):
            witness += 1
    return GameStats(
        trials=trials,
        accepts=accepts,
        witness_count=witness,
        accept_rate=accepts / trials if trials else 0.0,
        witness_rate=(witness / accepts) if accepts else None,
        serial_counts=serial_counts,
    )


def _measure_register_point(
    bolt: Bolt, j: int, key: HashKey, rng: np.random.Generator
) -> BitVector:
    if bolt.mode == MODE_JOINT:
        start, width = bolt.register_block(j)
        out = qsim.measure_register(bolt.registers[0], list(range(start, start + width)), rng)
        return BitVector(out.value.bits, width)
    reg = bolt.registers[j]
    out = qsim.measure_register(reg, list(range(reg.num_qubits)), rng)
    return BitVector(out.value.bits, reg.num_qubits)


BoltProducer = Callable[[HashKey, LightningParams, np.random.Generator], Bolt]


def honest_producer(key: HashKey, params: LightningParams, rng: np.random.Generator) -> Bolt:
    return gen_bolt(key, params, rng)


def constant_serial_producer(key: HashKey, params: LightningParams, rng: np.random.Generator) -> Bolt:
    """Always emits the bolt for the digest of the all-zero input."""
    y = eval_digest(key, BitVector.zero(key.m))
    reg = psi_state(key, y)
    return Bolt(y, MODE_PRODUCT, tuple(reg for _ in range(params.k + 1)), key.m, params.k)


def classical_point_producer(key: HashKey, params: LightningParams, rng: np.random.Generator) -> Bolt:
    """Basis-state bolt; essentially never verifies."""
    return classical_state_storm(key, params, rng)[0]


@dataclass(frozen=True)
class MinEntropyReport:
    trials: int
    accepted: int
    estimate: Optional[float]
    serial_counts: dict


def minentropy_probe(
    key: HashKey,
    params: LightningParams,
    producer: BoltProducer,
    trials: int,
    rng: np.random.Generator,
    strategy: str = ORACLE,
) -> MinEntropyReport:
    """Empirical -log2 of the modal serial frequency among accepted bolts."""
    if trials < 1:
        raise PreconditionError("need at least one trial")
    counts: dict = {}
    accepted = 0
    streams = rng.spawn(trials)
    for t in range(trials):
        trng = streams[t]
        bolt = producer(key, params, trng)
        res = full_verify(key, params, bolt, trng, strategy=strategy)
        if not res.accepted:
            continue
        accepted += 1
        shex = res.serial.to_hex()
        counts[shex] = counts.get(shex, 0) + 1
    estimate = None
    if accepted:
        estimate = -float(np.log2(max(counts.values()) / accepted))
    return MinEntropyReport(trials, accepted, estimate, counts)


def exact_digest_minentropy(key: HashKey) -> float:
    counts = fiber_counts(key)
    return -float(np.log2(counts.max() / counts.sum()))


# -- bolt serialization ---------------------------------------------------------


def bolt_to_json(bolt: Bolt) -> dict:
    return {
        "serial": bolt.serial.to_hex(),
        "serial_bits": bolt.serial.n,
        "mode": bolt.mode,
        "m": bolt.m,
        "k": bolt.k,
        "registers": [qsim.state_dump(r) for r in bolt.registers],
    }


def bolt_from_json(doc: dict) -> Bolt:
    return Bolt(
        serial=BitVector.from_hex(doc["serial"], int(doc["serial_bits"])),
        mode=doc["mode"],
        registers=tuple(qsim.state_load(d) for d in doc["registers"]),
        m=int(doc["m"]),
        k=int(doc["k"]),
    )
