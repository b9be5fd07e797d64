"""Stochastic-Pauli statevector simulation of composed rounds.

Every member of a round is simulated in its own small statevector, batched
over shots.  Members only influence each other through the crosstalk term:
a cx gate's error probability ``eps * gamma**k`` grows with the number ``k``
of cx gates of *other* members that run at the same time within
``hop_threshold`` hops.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import CircuitIR, GateOp
from .clifford import CLIFFORD_GATES, conj_bits
from .compose import ComposedRound, TimedGate, schedule_asap
from .hardware import HardwareModel

MAX_QUBITS = 14
PROB_FLOOR = 1e-9
COVERAGE = 0.99
_CHUNK_AMPLITUDES = 1 << 20


class CapacityError(ValueError):
    """Circuit too wide for the statevector backend."""


# ---------------------------------------------------------------- gate matrices

def _u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -np.exp(1j * lam) * s],
                     [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]])


_FIXED = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
    "t": np.diag([1, np.exp(1j * math.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * math.pi / 4)]),
    "sx": np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]) / 2,
}


def gate_matrix(g: GateOp) -> np.ndarray:
    """2x2 unitary of a one-qubit gate."""
    if g.name in _FIXED:
        return _FIXED[g.name]
    p = [a.value for a in g.params]
    if g.name == "u1":
        return np.diag([1, np.exp(1j * p[0])])
    if g.name == "rz":
        return np.diag([np.exp(-0.5j * p[0]), np.exp(0.5j * p[0])])
    if g.name == "u2":
        return _u3(math.pi / 2, p[0], p[1])
    if g.name == "u3":
        return _u3(*p)
    raise ValueError(f"{g.name} is not a one-qubit gate")


# ------------------------------------------------------------ batched states
# A batch has shape (shots, 2, ..., 2); axis 1 + q belongs to qubit q.

def _zero_batch(shots: int, n: int) -> np.ndarray:
    psi = np.zeros((shots,) + (2,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1.0
    return psi


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(psi, u, axes=([1 + q], [1])), -1, 1 + q)


def _apply_cx(psi: np.ndarray, c: int, t: int) -> np.ndarray:
    idx = [slice(None)] * psi.ndim
    idx[1 + c] = 1
    idx = tuple(idx)
    axis = 1 + t if t < c else t  # control axis is gone in the slice
    psi[idx] = np.flip(psi[idx], axis=axis).copy()
    return psi


def _apply_pauli(psi: np.ndarray, rows: np.ndarray, q: int, x: np.ndarray, z: np.ndarray):
    """Apply X^x Z^z on qubit ``q`` to the shots ``rows`` (global phases dropped)."""
    fx, fz = rows[x], rows[z]
    if fz.size:
        idx = [slice(None)] * psi.ndim
        idx[0], idx[1 + q] = fz, 1
        psi[tuple(idx)] *= -1
    if fx.size:
        psi[fx] = np.flip(psi[fx], axis=1 + q)


def statevector(c: CircuitIR) -> np.ndarray:
    """Noiseless final state as an array of shape (2,)*n, axis q = qubit q."""
    if c.n_qubits > MAX_QUBITS:
        raise CapacityError(f"{c.n_qubits} qubits exceed the statevector bound of {MAX_QUBITS}")
    psi = _zero_batch(1, c.n_qubits)
    for g in c.gates:
        if g.name == "cx":
            psi = _apply_cx(psi, *g.qubits)
        elif g.is_unitary:
            psi = _apply_1q(psi, gate_matrix(g), g.qubits[0])
    return psi[0]


def _check_terminal_measurements(gates) -> dict[int, int]:
    """clbit -> qubit, rejecting any unitary gate after a qubit was measured."""
    measured: dict[int, int] = {}
    done: set[int] = set()
    for g in gates:
        if g.name == "measure":
            measured[g.clbit] = g.qubits[0]
            done.add(g.qubits[0])
        elif g.is_unitary and done.intersection(g.qubits):
            raise ValueError("only terminal measurements are supported")
    return measured


def _bitstrings(outcomes: np.ndarray, n: int, clbit_to_qubit: dict[int, int], n_clbits: int) -> list[str]:
    """Render sampled basis indices as strings with clbit 0 rightmost."""
    cols = []
    for cb in reversed(range(n_clbits)):
        q = clbit_to_qubit.get(cb)
        cols.append(np.zeros(len(outcomes), dtype=np.int64) if q is None else (outcomes >> (n - 1 - q)) & 1)
    if not cols:
        return [""] * len(outcomes)
    digits = np.stack(cols, axis=1).astype(np.uint8) + ord("0")
    return [row.tobytes().decode() for row in digits]


def ideal_outputs(c: CircuitIR) -> dict[str, float]:
    """Exact outcome distribution over the classical register (entries above 1e-9)."""
    clmap = _check_terminal_measurements(c.gates)
    probs = np.abs(statevector(c).reshape(-1)) ** 2
    idx = np.nonzero(probs > PROB_FLOOR)[0]
    out: dict[str, float] = {}
    for s, p in zip(_bitstrings(idx, c.n_qubits, clmap, c.n_clbits), probs[idx]):
        out[s] = out.get(s, 0.0) + float(p)
    return dict(sorted(out.items()))


def correct_set(dist: dict[str, float], coverage: float = COVERAGE) -> frozenset[str]:
    """Smallest set of most likely strings holding at least ``coverage`` of the mass."""
    chosen, mass = [], 0.0
    for s, p in sorted(dist.items(), key=lambda kv: (-kv[1], kv[0])):
        if mass >= coverage - 1e-12:
            break
        chosen.append(s)
        mass += p
    return frozenset(chosen)


# --------------------------------------------------------------- noise model

@dataclass(frozen=True)
class NoiseModel:
    hardware: HardwareModel
    gamma: float = 3.0
    hop_threshold: int = 1
    idle_rate: float = 0.0

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("crosstalk factor gamma must be >= 1")
        if self.hop_threshold < 0 or self.idle_rate < 0:
            raise ValueError("hop threshold and idle rate must be non-negative")

    @classmethod
    def noiseless(cls, h: HardwareModel) -> "NoiseModel":
        return cls(h.with_uniform_errors(0.0), gamma=1.0)

    def params(self) -> dict:
        return {"gamma": self.gamma, "hop_threshold": self.hop_threshold, "idle_rate": self.idle_rate}


def crosstalk_counts(timed: list[TimedGate], h: HardwareModel, hop_threshold: int) -> dict[int, int]:
    """For every cx (by position in ``timed``): overlapping cx of other members within the hop threshold."""
    pos = [i for i, t in enumerate(timed) if t.gate.name == "cx"]
    if not pos:
        return {}
    start = np.array([timed[i].start for i in pos])
    end = np.array([timed[i].end for i in pos])
    owner = np.array([timed[i].member for i in pos])
    a = np.array([timed[i].gate.qubits[0] for i in pos])
    b = np.array([timed[i].gate.qubits[1] for i in pos])
    D = h.distances
    pair = np.minimum.reduce([D[a[:, None], a[None, :]], D[a[:, None], b[None, :]],
                              D[b[:, None], a[None, :]], D[b[:, None], b[None, :]]])
    overlap = (start[:, None] < end[None, :]) & (start[None, :] < end[:, None])
    other = owner[:, None] != owner[None, :]
    k = (overlap & other & (pair <= hop_threshold)).sum(axis=1)
    return {i: int(n) for i, n in zip(pos, k)}


# ----------------------------------------------------------------- reports

@dataclass(frozen=True)
class ShotCounts:
    names: tuple[str, ...]
    counts: tuple[dict[str, int], ...]
    shots: int

    def __post_init__(self):
        for c in self.counts:
            if sum(c.values()) != self.shots:
                raise ValueError("member counts must sum to the shot total")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["member", "bitstring", "count"])
        for name, c in zip(self.names, self.counts):
            for s, n in sorted(c.items()):
                w.writerow([name, s, n])
        return buf.getvalue()


def pst(counts: ShotCounts, ideal: list[frozenset[str]] | tuple) -> list[float]:
    """Fraction of shots whose string lies in the member's correct set."""
    out = []
    for c, good in zip(counts.counts, ideal):
        total = sum(c.values())
        if total == 0:
            raise ValueError("empty counts")
        out.append(sum(n for s, n in c.items() if s in good) / total)
    return out


@dataclass
class SimReport:
    names: tuple[str, ...]
    pst: list[float]
    ideal: list[frozenset[str]]
    seed: int
    noise: dict
    counts: ShotCounts
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "noise": self.noise,
            "members": [
                {"name": n, "pst": p, "ideal": sorted(i), "counts": dict(sorted(c.items()))}
                for n, p, i, c in zip(self.names, self.pst, self.ideal, self.counts.counts)
            ],
            "skipped": self.skipped,
        }


# ---------------------------------------------------------------- simulation

@dataclass
class _Event:
    kind: str  # "gate" | "idle"
    qubits: tuple[int, ...]  # local qubits
    prob: float
    gate: GateOp | None = None


def _member_program(cr: ComposedRound, i: int, timed: list[TimedGate], nm: NoiseModel,
                    ks: dict[int, int]) -> tuple[list[_Event], dict[int, tuple[int, int]]]:
    """Ordered local events of member ``i`` and its clbit -> (local qubit, physical qubit) readout map."""
    h = nm.hardware
    m = cr.members[i]
    local = {p: q for q, p in enumerate(m.layout.physical)}
    last_end: dict[int, int] = {}
    events: list[_Event] = []
    readout: dict[int, tuple[int, int]] = {}
    measured: set[int] = set()
    for k in m.gate_span:
        t = timed[k]
        g = t.gate
        if g.name == "barrier":
            continue
        phys = g.qubits
        lq = tuple(local[p] for p in phys)
        if g.is_unitary and measured.intersection(lq):
            raise ValueError("only terminal measurements are supported")
        if nm.idle_rate > 0:
            for p, q in zip(phys, lq):
                gap = t.start - last_end.get(p, t.start)
                if gap > 0:
                    events.append(_Event("idle", (q,), 1.0 - math.exp(-nm.idle_rate * gap)))
        for p in phys:
            last_end[p] = t.end
        if g.name == "measure":
            readout[g.clbit - m.clbits.start] = (lq[0], phys[0])
            measured.add(lq[0])
            continue
        if g.name == "cx":
            prob = min(1.0, h.error(*phys) * nm.gamma ** ks.get(k, 0))
        else:
            prob = h.sq_error[phys[0]]
        events.append(_Event("gate", lq, prob, g.remap(local)))
    return events, readout


def _pauli_codes(u: np.ndarray, n_operands: int) -> np.ndarray:
    """Uniform non-identity Pauli codes; bits 2j, 2j+1 are the X and Z parts on operand j."""
    n_paulis = 4 ** n_operands - 1
    return 1 + np.minimum((u * n_paulis).astype(np.int64), n_paulis - 1)


def _sample(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-cdf sampling of basis indices, one row of ``probs`` per entry of ``u``."""
    cdf = np.cumsum(probs, axis=-1)
    if cdf.ndim == 1:
        return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1)
    return np.minimum((cdf <= (u * cdf[:, -1])[:, None]).sum(axis=1), cdf.shape[1] - 1)


def _frame_outcomes(events: list[_Event], n: int, hit_u, pauli_u, sample_u) -> np.ndarray:
    """Outcomes of an all-Clifford member by propagating each injected Pauli to the end.

    The final state is the ideal one times a Pauli; its X part flips the
    ideal measurement outcome.
    """
    shots = len(sample_u)
    rows = [(1 << q, 0) for q in range(n)] + [(0, 1 << q) for q in range(n)]

    def image(x, z):
        ox = oz = 0
        for q in range(n):
            if x >> q & 1:
                ox, oz = ox ^ rows[q][0], oz ^ rows[q][1]
            if z >> q & 1:
                ox, oz = ox ^ rows[n + q][0], oz ^ rows[n + q][1]
        return ox, oz

    def flat(x):  # qubit bitmask -> flat-index bit pattern (qubit 0 most significant)
        return sum(((x >> q) & 1) << (n - 1 - q) for q in range(n))

    flips = np.zeros(shots, dtype=np.int64)
    for i in reversed(range(len(events))):
        ev = events[i]
        if ev.prob > 0:
            hits = np.nonzero(hit_u[i] < ev.prob)[0]
            if hits.size:
                k = len(ev.qubits)
                table = np.zeros(4 ** k, dtype=np.int64)
                for code in range(1, 4 ** k):
                    x = z = 0
                    for j, q in enumerate(ev.qubits):
                        x |= ((code >> 2 * j) & 1) << q
                        z |= ((code >> (2 * j + 1)) & 1) << q
                    table[code] = flat(image(x, z)[0])
                flips[hits] ^= table[_pauli_codes(pauli_u[i, hits], k)]
        if ev.kind == "gate":
            g = ev.gate
            rows = [image(*conj_bits(g.name, g.qubits, x, z)) for x, z in
                    [(1 << q, 0) for q in range(n)] + [(0, 1 << q) for q in range(n)]]
    ideal = CircuitIR(n, 0, tuple(ev.gate for ev in events if ev.kind == "gate"))
    probs = np.abs(statevector(ideal).reshape(-1)) ** 2
    return _sample(probs, sample_u) ^ flips


def _run_member(events: list[_Event], readout: dict[int, tuple[int, int]], n: int, n_clbits: int,
                h: HardwareModel, shots: int, rng: np.random.Generator,
                fast_clifford: bool = True) -> dict[str, int]:
    # all randomness is drawn up front so results do not depend on chunking
    n_noisy = len(events)
    hit_u = rng.random((n_noisy, shots))
    pauli_u = rng.random((n_noisy, shots))
    sample_u = rng.random(shots)
    flip_u = rng.random((n_clbits, shots))

    if fast_clifford and all(ev.gate.name in CLIFFORD_GATES for ev in events if ev.kind == "gate"):
        outcomes = _frame_outcomes(events, n, hit_u, pauli_u, sample_u)
    else:
        outcomes = _state_outcomes(events, n, hit_u, pauli_u, sample_u)
    return _readout_counts(outcomes, readout, n, n_clbits, h, flip_u)


def _state_outcomes(events: list[_Event], n: int, hit_u, pauli_u, sample_u) -> np.ndarray:
    shots = len(sample_u)
    chunk = max(1, _CHUNK_AMPLITUDES >> n)
    outcomes = np.empty(shots, dtype=np.int64)
    for lo in range(0, shots, chunk):
        hi = min(shots, lo + chunk)
        psi = _zero_batch(hi - lo, n)
        for e_i, ev in enumerate(events):
            if ev.kind == "gate":
                g = ev.gate
                if g.name == "cx":
                    psi = _apply_cx(psi, *g.qubits)
                else:
                    psi = _apply_1q(psi, gate_matrix(g), g.qubits[0])
            if ev.prob <= 0:
                continue
            rows = np.nonzero(hit_u[e_i, lo:hi] < ev.prob)[0]
            if not rows.size:
                continue
            code = _pauli_codes(pauli_u[e_i, lo:hi][rows], len(ev.qubits))
            for j, q in enumerate(ev.qubits):
                pq = (code >> (2 * j)) & 3  # 0=I 1=X 2=Z 3=Y
                _apply_pauli(psi, rows, q, (pq & 1).astype(bool), (pq >> 1).astype(bool))
        outcomes[lo:hi] = _sample(np.abs(psi.reshape(hi - lo, -1)) ** 2, sample_u[lo:hi])
    return outcomes


def _readout_counts(outcomes, readout, n, n_clbits, h, flip_u) -> dict[str, int]:
    shots = len(outcomes)
    cols = []
    for cb in reversed(range(n_clbits)):
        if cb in readout:
            q, phys = readout[cb]
            bit = (outcomes >> (n - 1 - q)) & 1
            bit ^= (flip_u[cb] < h.readout_error[phys]).astype(np.int64)
        else:
            bit = np.zeros(shots, dtype=np.int64)
        cols.append(bit)
    if not cols:
        return {"": shots}
    digits = np.stack(cols, axis=1).astype(np.uint8) + ord("0")
    keys, counts = np.unique(digits.view(f"S{n_clbits}").ravel(), return_counts=True)
    return {k.decode(): int(v) for k, v in zip(keys, counts)}


def member_rng(seed: int, member: int) -> np.random.Generator:
    return np.random.default_rng([seed, member])


def simulate_round(cr: ComposedRound, nm: NoiseModel, shots: int, seed: int,
                   max_qubits: int = MAX_QUBITS, fast_clifford: bool = True,
                   stream_ids: Sequence[int] | None = None) -> ShotCounts:
    """Noisy counts for every member of a composed round.

    Member ``i`` draws from its own stream seeded by ``(seed, stream_ids[i])``
    (``stream_ids`` defaults to the member positions), so a member simulated
    alone with the same stream id sees the same random numbers.
    """
    if stream_ids is None:
        stream_ids = range(len(cr.members))
    if shots < 1:
        raise ValueError("shots must be >= 1")
    h = nm.hardware
    timed = schedule_asap(cr, h)
    ks = crosstalk_counts(timed, h, nm.hop_threshold) if nm.gamma != 1 else {}
    counts = []
    for i, m in enumerate(cr.members):
        n = m.circuit.n_qubits
        if n > max_qubits:
            raise CapacityError(f"member '{m.name}' has {n} qubits, bound is {max_qubits}")
        events, readout = _member_program(cr, i, timed, nm, ks)
        counts.append(_run_member(events, readout, n, m.circuit.n_clbits, h, shots, member_rng(seed, stream_ids[i]),
                                  fast_clifford))
    return ShotCounts(tuple(m.name for m in cr.members), tuple(counts), shots)


def run_round(cr: ComposedRound, nm: NoiseModel, shots: int, seed: int) -> SimReport:
    """Simulate a round and score every member against its ideal outputs."""
    counts = simulate_round(cr, nm, shots, seed)
    ideal = [correct_set(ideal_outputs(m.circuit)) for m in cr.members]
    return SimReport(counts.names, pst(counts, ideal), ideal, seed, nm.params(), counts)
