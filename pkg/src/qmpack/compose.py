"""Merging a round's placed circuits into one device-wide circuit, plus timing."""
from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx

from .circuit import CircuitIR, GateOp
from .hardware import HardwareModel
from .layout import BatchPlan, LayoutMap, RoundDraft
from .qasm import SourceProgram, emit_qasm


@dataclass(frozen=True)
class Member:
    name: str
    layout: LayoutMap
    clbits: range  # slice of the composed classical register
    gate_span: tuple[int, ...]  # positions of this member's gates in the composed circuit
    circuit: CircuitIR


@dataclass(frozen=True)
class ComposedRound:
    circuit: CircuitIR
    members: tuple[Member, ...]

    def member_gates(self, i: int) -> list[GateOp]:
        return [self.circuit.gates[k] for k in self.members[i].gate_span]


@dataclass(frozen=True)
class TimedGate:
    gate: GateOp
    start: int
    end: int
    member: int


def _swap(p: int, q: int) -> list[GateOp]:
    return [GateOp("cx", (p, q)), GateOp("cx", (q, p)), GateOp("cx", (p, q))]


def _route(h: HardwareModel, a: int, b: int, own: frozenset[int]) -> list[int]:
    sub = h.graph.subgraph(sorted(own))
    if not nx.has_path(sub, a, b):
        raise RuntimeError(f"no route between qubits {a} and {b} inside the circuit's own qubits")
    return nx.shortest_path(sub, a, b)


def route_member(c: CircuitIR, layout: LayoutMap, h: HardwareModel, clbit_offset: int = 0) -> list[GateOp]:
    """Member gates on physical qubits; a cx on uncoupled qubits first swaps its control next to the target.

    Swaps stay inside the member's own qubits and are not undone: later
    gates and measurements follow each program qubit to where it now is.
    """
    own = layout.image
    where = list(layout.physical)  # program qubit -> current physical qubit
    holder = {p: q for q, p in enumerate(where)}  # physical qubit -> program qubit
    out: list[GateOp] = []
    for g in c.gates:
        if g.name == "cx" and where[g.qubits[1]] not in h.adjacency[where[g.qubits[0]]]:
            path = _route(h, where[g.qubits[0]], where[g.qubits[1]], own)
            for p, q in zip(path[:-2], path[1:-1]):
                out += _swap(p, q)
                qp, qq = holder[p], holder[q]
                where[qp], where[qq] = q, p
                holder[p], holder[q] = qq, qp
        out.append(g.remap(where, clbit_offset))
    return out


def compose_round(r: RoundDraft, h: HardwareModel) -> ComposedRound:
    """Rewrite every member through its layout onto a device-wide register.

    Members are concatenated in placement order; since they act on disjoint
    qubits this fixes only the intra-member order.  Every emitted cx sits on
    a coupler (see :func:`route_member`).
    """
    seen: set[int] = set()
    for p in r.placements:
        image = p.layout.image
        if image & seen or any(q >= h.n_qubits for q in image):
            raise RuntimeError(f"layout of '{p.circuit.name}' collides with another member or leaves the device")
        seen |= image
    gates: list[GateOp] = []
    members = []
    offset = 0
    for p in r.placements:
        start = len(gates)
        gates += route_member(p.circuit, p.layout, h, offset)
        members.append(Member(p.circuit.name, p.layout, range(offset, offset + p.circuit.n_clbits),
                              tuple(range(start, len(gates))), p.circuit))
        offset += p.circuit.n_clbits
    return ComposedRound(CircuitIR(h.n_qubits, offset, tuple(gates), "round"), tuple(members))


def schedule_asap(c: ComposedRound, h: HardwareModel) -> list[TimedGate]:
    """Start every gate as soon as all its qubits are free.

    A barrier takes no time but synchronises the qubits it spans.
    """
    owner = {}
    for i, m in enumerate(c.members):
        for k in m.gate_span:
            owner[k] = i
    ready = [0] * h.n_qubits
    out = []
    for k, g in enumerate(c.circuit.gates):
        start = max((ready[q] for q in g.qubits), default=0)
        end = start + h.durations.of(g.name)
        for q in g.qubits:
            ready[q] = end
        out.append(TimedGate(g, start, end, owner.get(k, -1)))
    return out


def round_duration(timed: list[TimedGate]) -> int:
    return max((t.end for t in timed), default=0)


@dataclass(frozen=True)
class ExecutionEstimate:
    durations: tuple[int, ...]
    usage: tuple[float, ...]
    shots: int = 1

    @property
    def total(self) -> int:
        return sum(self.durations)

    @property
    def mean_usage(self) -> float:
        return sum(self.usage) / len(self.usage) if self.usage else 0.0

    @property
    def total_with_shots(self) -> int:
        return self.total * self.shots

    def to_dict(self) -> dict:
        return {
            "round_durations_dt": list(self.durations),
            "total_duration_dt": self.total,
            "total_duration_with_shots_dt": self.total_with_shots,
            "round_usage": list(self.usage),
            "mean_usage": self.mean_usage,
        }


def estimate(plan: BatchPlan, h: HardwareModel, shots: int = 1) -> ExecutionEstimate:
    durations, usage = [], []
    for r in plan.rounds:
        durations.append(round_duration(schedule_asap(compose_round(r, h), h)))
        usage.append(r.used_qubits / h.n_qubits)
    return ExecutionEstimate(tuple(durations), tuple(usage), shots)


def sidecar(c: ComposedRound) -> dict:
    """Member -> physical image and classical slice, for the emitted round QASM."""
    return {
        "members": [
            {
                "name": m.name,
                "layout": list(m.layout.physical),
                "clbits": [m.clbits.start, m.clbits.stop],
            }
            for m in c.members
        ]
    }


def export_round(c: ComposedRound) -> tuple[SourceProgram, str]:
    return emit_qasm(c.circuit), json.dumps(sidecar(c), indent=2, sort_keys=True)
