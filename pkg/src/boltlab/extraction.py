"""Coherent phase-vector extraction for the circuit verification strategy.

The verifier decides whether an m-qubit register lies in the span of the
phase states  phi_r = 2^{-m/2} sum_x (-1)^{r.f(x)} |x>  by running the
round-based extraction: each round Hadamards the leading qubit of the
current block (turning its value into one linear equation on r), relabels
the rest of the block so the support becomes a full cube again, and leaves
the equation data (c_t, ell_t) in transcript qubits.  All measurements are
deferred: transcript bits stay coherent, the accumulated linear system is
solved into an ancilla register, the state-preparation circuit is
uncomputed, and a single all-zeros test on the register decides acceptance.

Desk-scale caveat, visible in every experiment here: with u rounds the
transcript rows are u uniform vectors in GF(2)^n, so the linear system is
rank-deficient with probability ~0.34 at (n=2, u=3).  Rank deficiency is a
reject, so the circuit strategy accepts honest registers far less often
than the ideal span projector.  The exact rates are reported, not hidden.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import PreconditionError
from .gf2 import BitVector
from .mqhash import HashKey, digest_table
from .qsim import StateVector

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def phi_amplitudes(key: HashKey, r: int) -> np.ndarray:
    """Amplitudes of phi_r = 2^{-m/2} sum_x (-1)^{r . f(x)} |x>."""
    tab = digest_table(key)
    signs = 1.0 - 2.0 * (np.bitwise_count(tab & np.uint32(r)) & 1).astype(np.float64)
    return signs.astype(np.complex128) / np.sqrt(tab.size)


def phi_state(key: HashKey, r: int) -> StateVector:
    return StateVector(key.m, phi_amplitudes(key, r))


def _parity_arr(x: np.ndarray, mask: int) -> np.ndarray:
    return (np.bitwise_count(x & np.uint64(mask)) & 1).astype(np.uint8)


def _wht_pass(amps: np.ndarray, q: int) -> np.ndarray:
    a = amps.reshape(-1, 2, 1 << q)
    out = np.empty_like(a)
    out[:, 0, :] = (a[:, 0, :] + a[:, 1, :]) * _SQRT_HALF
    out[:, 1, :] = (a[:, 0, :] - a[:, 1, :]) * _SQRT_HALF
    return out.reshape(-1)


def _wht_all(amps: np.ndarray, m: int) -> np.ndarray:
    out = amps
    for q in range(m):
        out = _wht_pass(out, q)
    return out


@dataclass
class _Node:
    """Round data for one transcript prefix."""

    varcount: int  # block width v including the leading qubit
    alive: bool
    qrows: tuple = ()  # n packed rows of the linear forms, width v-1
    qconst: int = 0
    pivot_cols: tuple = ()
    free_cols: tuple = ()
    transform: tuple = ()  # row-op matrix T with T.qmat in RREF, rows packed over n bits
    kernel: tuple = ()  # nullspace basis rows, width v-1
    particular: tuple = ()  # particular solution for each of the 2^n ell values

    def describe(self) -> dict:
        return {
            "varcount": self.varcount,
            "alive": self.alive,
            "pivot_cols": list(self.pivot_cols),
            "free_cols": list(self.free_cols),
        }


def _solve_rows(rows: List[int], rhs: List[int], width: int):
    """RREF a packed system; returns (rank, pivot_cols, solution-with-free=0) or rank info."""
    work = [(rows[i], rhs[i]) for i in range(len(rows))]
    pivots = []
    head = 0
    for col in range(width):
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
    sol = 0
    for (row, b), col in zip(work[:head], pivots):
        if b:
            sol |= 1 << col
    return len(pivots), tuple(pivots), sol


class ExtractionPlan:
    """Precomputed per-prefix round maps for one (key, u) pair.

    Rounds are numbered 1..u; round t occupies qubits
    [(t-1)(n+1), t(n+1)): one c qubit then n ell qubits.  The residual block
    is everything above u(n+1).
    """

    def __init__(self, key: HashKey, u: int):
        n, m = key.n, key.m
        if u < n:
            raise PreconditionError(f"need u >= n rounds, got u={u}")
        if m < u * (n + 1):
            raise PreconditionError(f"m={m} cannot host u={u} rounds of {n + 1} qubits")
        self.key = key
        self.u = u
        self.n = n
        self.m = m
        self.transcript_qubits = u * (n + 1)
        self.nodes: List[Dict[int, _Node]] = [dict() for _ in range(u + 1)]
        root_u = np.stack([a.to_array() for a in key.mats]).astype(np.uint8)
        root_c = np.zeros(n, dtype=np.uint8)
        self._build(1, 0, root_u, root_c)
        self._classify_transcripts()

    # -- plan construction ------------------------------------------------

    def _build(self, t: int, prefix: int, polys: np.ndarray, consts: np.ndarray):
        n = self.n
        v = self.m - (t - 1) * (n + 1)
        w = v - 1
        qrows = []
        for i in range(n):
            row = 0
            for k in range(w):
                row |= int(polys[i, 0, k + 1]) << k
            qrows.append(row)
        qconst = 0
        for i in range(n):
            qconst |= int(polys[i, 0, 0]) << i
        rank_q, _, _ = _solve_rows(list(qrows), [0] * n, w)
        if rank_q < n:
            self.nodes[t][prefix] = _Node(varcount=v, alive=False)
            return
        # eliminate again, tracking row operations in an identity sidecar
        work = [(qrows[i], 1 << i) for i in range(n)]
        pivcols = []
        head = 0
        for col in range(w):
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
            pivcols.append(col)
            head += 1
        reduced = [w0 for w0, _ in work]
        transform = [t0 for _, t0 in work]
        pivset = set(pivcols)
        free = [c for c in range(w) if c not in pivset]
        kernel = []
        for f in free:
            vec = 1 << f
            for row, col in zip(reduced, pivcols):
                if (row >> f) & 1:
                    vec |= 1 << col
            kernel.append(vec)
        # particular solution for every ell (free coordinates = 0)
        particular = []
        for ell in range(1 << n):
            rhs = ell ^ qconst
            sol = 0
            for k, col in enumerate(pivcols):
                b = 0
                trow = transform[k]
                for i in range(n):
                    if (trow >> i) & 1:
                        b ^= (rhs >> i) & 1
                if b:
                    sol |= 1 << col
            particular.append(sol)
        node = _Node(
            varcount=v,
            alive=True,
            qrows=tuple(qrows),
            qconst=qconst,
            pivot_cols=tuple(pivcols),
            free_cols=tuple(free),
            transform=tuple(transform),
            kernel=tuple(kernel),
            particular=tuple(particular),
        )
        self.nodes[t][prefix] = node
        if t == self.u:
            return
        # substitute x' = particular(ell) + kernel^T a into the P polynomials
        p_polys = polys[:, 1:, 1:].astype(np.int64)
        p_sym = (p_polys + p_polys.transpose(0, 2, 1)) % 2
        tmat = np.zeros((w, len(free)), dtype=np.int64)
        for j, vec in enumerate(kernel):
            for b in range(w):
                tmat[b, j] = (vec >> b) & 1
        for ell in range(1 << self.n):
            t0 = np.array([(particular[ell] >> b) & 1 for b in range(w)], dtype=np.int64)
            child_u = np.zeros((self.n, len(free), len(free)), dtype=np.uint8)
            child_c = np.zeros(self.n, dtype=np.uint8)
            for i in range(self.n):
                raw = (tmat.T @ p_polys[i] @ tmat) % 2
                upper = np.triu((raw + raw.T) % 2, 1)
                np.fill_diagonal(upper, np.diag(raw))
                lin = (tmat.T @ ((p_sym[i] @ t0) % 2)) % 2
                diag = (np.diag(upper) + lin) % 2
                np.fill_diagonal(upper, diag)
                child_u[i] = upper.astype(np.uint8)
                child_c[i] = (int(t0 @ p_polys[i] @ t0) + int(consts[i])) % 2
            self._build(t + 1, prefix | (ell << (self.n * (t - 1))), child_u, child_c)

    # -- transcript classification ----------------------------------------

    def _classify_transcripts(self):
        n, u = self.n, self.u
        size = 1 << self.transcript_qubits
        self.flag_ok = np.zeros(size, dtype=bool)
        self.solved_r = np.zeros(size, dtype=np.int64)
        self.path_alive = np.zeros(size, dtype=bool)
        for tau in range(size):
            cs, ells = self._transcript_fields(tau)
            prefix = 0
            alive = True
            for t in range(1, u + 1):
                node = self.nodes[t].get(prefix)
                if node is None or not node.alive:
                    alive = False
                    break
                prefix |= ells[t - 1] << (n * (t - 1))
            self.path_alive[tau] = alive
            if not alive:
                continue
            rank_l, pivots, sol = _solve_rows(list(map(int, ells)), list(map(int, cs)), n)
            if rank_l == n:
                self.flag_ok[tau] = True
                self.solved_r[tau] = sol

    def _transcript_fields(self, tau: int) -> Tuple[list, list]:
        n = self.n
        cs, ells = [], []
        for t in range(self.u):
            o = t * (n + 1)
            cs.append((tau >> o) & 1)
            ells.append((tau >> (o + 1)) & ((1 << n) - 1))
        return cs, ells

    def round_descriptions(self) -> list:
        out = []
        for t in range(1, self.u + 1):
            out.append(
                {
                    "round": t,
                    "block_start": (t - 1) * (self.n + 1),
                    "prefixes": {
                        format(p, "x"): node.describe()
                        for p, node in sorted(self.nodes[t].items())
                    },
                }
            )
        return out

    # -- state transforms ---------------------------------------------------

    def _prefix_values(self, idx: np.ndarray, t: int) -> np.ndarray:
        n = self.n
        out = np.zeros_like(idx)
        for s in range(1, t):
            o = (s - 1) * (n + 1)
            out |= ((idx >> (o + 1)) & ((1 << n) - 1)) << (n * (s - 1))
        return out

    def _apply_round_perm(self, amps: np.ndarray, t: int, inverse: bool) -> np.ndarray:
        n, m = self.n, self.m
        o = (t - 1) * (n + 1)
        v = m - o
        w = v - 1
        idx = np.arange(amps.size, dtype=np.int64)
        prefixes = self._prefix_values(idx, t)
        target = idx.copy()
        keep = (1 << (o + 1)) - 1  # earlier transcript bits plus this round's c
        for prefix, node in self.nodes[t].items():
            mask = prefixes == prefix
            if not node.alive or not mask.any():
                continue
            sub = idx[mask]
            low = sub & keep
            if not inverse:
                xp = (sub >> (o + 1)) & ((1 << w) - 1)
                ell = np.zeros_like(sub)
                for i in range(n):
                    ell |= (_parity_arr(xp.astype(np.uint64), node.qrows[i]).astype(np.int64)
                            ^ ((node.qconst >> i) & 1)) << i
                a = np.zeros_like(sub)
                for j, f in enumerate(node.free_cols):
                    a |= ((xp >> f) & 1) << j
                target[mask] = low | (ell << (o + 1)) | (a << (o + 1 + n))
            else:
                ell = (sub >> (o + 1)) & ((1 << n) - 1)
                a = (sub >> (o + 1 + n)) & ((1 << (w - n)) - 1)
                part = np.array(node.particular, dtype=np.int64)[ell]
                xp = part
                for j, vec in enumerate(node.kernel):
                    xp = xp ^ (((a >> j) & 1) * vec)
                target[mask] = low | (xp << (o + 1))
        out = np.zeros_like(amps)
        out[target] = amps
        return out

    def extract(self, amps: np.ndarray) -> np.ndarray:
        out = amps
        for t in range(1, self.u + 1):
            out = _wht_pass(out, (t - 1) * (self.n + 1))
            out = self._apply_round_perm(out, t, inverse=False)
        return out

    def unextract(self, amps: np.ndarray) -> np.ndarray:
        out = amps
        for t in range(self.u, 0, -1):
            out = self._apply_round_perm(out, t, inverse=True)
            out = _wht_pass(out, (t - 1) * (self.n + 1))
        return out

    def index_flags(self) -> np.ndarray:
        idx = np.arange(1 << self.m, dtype=np.int64)
        return self.flag_ok[idx & ((1 << self.transcript_qubits) - 1)]

    def index_solutions(self) -> np.ndarray:
        idx = np.arange(1 << self.m, dtype=np.int64)
        return self.solved_r[idx & ((1 << self.transcript_qubits) - 1)]


@lru_cache(maxsize=16)
def get_plan(key: HashKey, u: int) -> ExtractionPlan:
    return ExtractionPlan(key, u)


@dataclass(frozen=True)
class CircuitVerifyAnalysis:
    """Exact acceptance decomposition of the circuit-strategy measurement."""

    accept_probability: float
    rank_ok_probability: float
    zero_probability: float  # conditioned on the rank flag passing
    post_state: Optional[StateVector]

    @property
    def reject_rank_probability(self) -> float:
        return 1.0 - self.rank_ok_probability

    @property
    def reject_span_probability(self) -> float:
        return self.rank_ok_probability * (1.0 - self.zero_probability)


def circuit_span_analysis(key: HashKey, u: int, state: StateVector) -> CircuitVerifyAnalysis:
    """Run the deferred-measurement circuit on a register, exactly.

    Sequence: extract; measure the solvability flag (reject on rank
    deficiency); copy the solved phase vector into an ancilla; uncompute the
    extraction; uncompute the |0> -> phi_r preparation controlled on the
    ancilla; test the register for all-zeros; recompute forward.  The
    returned post state discards the ancilla as if its uncomputation were
    perfect, which is exact on in-span inputs up to the rank-deficient mass.
    """
    plan = get_plan(key, u)
    n, m = key.n, key.m
    psi = plan.extract(state.amps.astype(np.complex128))
    flags = plan.index_flags()
    p_rank = float(np.linalg.norm(psi[flags]) ** 2)
    if p_rank <= 1e-300:
        return CircuitVerifyAnalysis(0.0, 0.0, 0.0, None)
    kept = np.where(flags, psi, 0.0) / np.sqrt(p_rank)
    rsol = plan.index_solutions()
    joint = np.zeros((1 << n, 1 << m), dtype=np.complex128)
    idx = np.arange(1 << m)
    joint[rsol, idx] = kept
    tab = digest_table(key)
    for r in range(1 << n):
        row = plan.unextract(joint[r])
        signs = 1.0 - 2.0 * (np.bitwise_count(tab & np.uint32(r)) & 1).astype(np.float64)
        joint[r] = _wht_all(row * signs, m)
    beta = joint[:, 0]
    p_zero = float(np.linalg.norm(beta) ** 2)
    if p_zero <= 1e-300:
        return CircuitVerifyAnalysis(0.0, p_rank, 0.0, None)
    beta = beta / np.sqrt(p_zero)
    post = np.zeros(1 << m, dtype=np.complex128)
    for r in range(1 << n):
        if beta[r] != 0:
            post += beta[r] * phi_amplitudes(key, r)
    post = post / np.linalg.norm(post)
    return CircuitVerifyAnalysis(
        accept_probability=p_rank * p_zero,
        rank_ok_probability=p_rank,
        zero_probability=p_zero,
        post_state=StateVector(m, post),
    )


@dataclass(frozen=True)
class RoundRecord:
    c: int
    ell: BitVector
    remap: dict


@dataclass(frozen=True)
class ExtractionTranscript:
    rounds: tuple  # of RoundRecord
    solved_r: Optional[BitVector]
    rank: int


def measured_variant_run(
    key: HashKey, u: int, state: StateVector, rng: np.random.Generator
) -> Tuple[bool, ExtractionTranscript, Optional[StateVector]]:
    """Literal-measurement reading of the extraction: sample the transcript.

    Measuring (c_t, ell_t) collapses the register, so honest inputs are both
    perturbed and mostly rejected; this variant exists for side-by-side
    comparison with the coherent reading.
    """
    plan = get_plan(key, u)
    n, m = key.n, key.m
    psi = plan.extract(state.amps.astype(np.complex128))
    tq = plan.transcript_qubits
    idx = np.arange(1 << m, dtype=np.int64)
    tvals = idx & ((1 << tq) - 1)
    probs = np.bincount(tvals, weights=np.abs(psi) ** 2, minlength=1 << tq)
    probs = probs / probs.sum()
    tau = int(rng.choice(probs.size, p=probs))
    cs, ells = plan._transcript_fields(tau)
    records = []
    prefix = 0
    for t in range(1, u + 1):
        node = plan.nodes[t].get(prefix)
        records.append(
            RoundRecord(
                c=cs[t - 1],
                ell=BitVector(ells[t - 1], n),
                remap=node.describe() if node else {"alive": False},
            )
        )
        prefix |= ells[t - 1] << (n * (t - 1))
    rank_l, _, sol = _solve_rows(list(map(int, ells)), list(map(int, cs)), n)
    transcript = ExtractionTranscript(
        rounds=tuple(records),
        solved_r=BitVector(sol, n) if rank_l == n and plan.flag_ok[tau] else None,
        rank=rank_l,
    )
    if not plan.flag_ok[tau]:
        return False, transcript, None
    collapsed = np.where(tvals == tau, psi, 0.0)
    collapsed /= np.linalg.norm(collapsed)
    row = plan.unextract(collapsed)
    tab = digest_table(key)
    r = int(transcript.solved_r.bits)
    signs = 1.0 - 2.0 * (np.bitwise_count(tab & np.uint32(r)) & 1).astype(np.float64)
    unprep = _wht_all(row * signs, m)
    p_zero = float(np.abs(unprep[0]) ** 2)
    if rng.random() >= p_zero:
        return False, transcript, None
    return True, transcript, phi_state(key, r)
