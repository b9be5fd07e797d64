"""Circuit intermediate representation.

A :class:`CircuitIR` is an ordered list of :class:`GateOp` acting on flat
qubit / classical-bit indices.  Besides the container itself this module
builds the gate dependency DAG, the cx depth used to order the compilation
queue, and the weighted interaction graph of a circuit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx

ONE_QUBIT_GATES = frozenset({"u1", "u2", "u3", "rz", "sx", "x", "h", "t", "tdg", "s", "sdg"})
GATE_KINDS = ONE_QUBIT_GATES | {"cx", "barrier", "measure"}

# number of angle parameters taken by each parametrised gate
PARAM_COUNT = {"u1": 1, "u2": 2, "u3": 3, "rz": 1}


@dataclass(frozen=True)
class Angle:
    """A gate angle.

    ``pi_multiple`` is set when the angle is an exact rational multiple of
    pi; otherwise only ``value`` (radians) is meaningful.
    """

    value: float
    pi_multiple: Fraction | None = None

    @classmethod
    def of_pi(cls, coeff: Fraction | int) -> "Angle":
        coeff = Fraction(coeff)
        return cls(float(coeff) * math.pi, coeff)

    @classmethod
    def real(cls, value: float) -> "Angle":
        return cls(float(value), None)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Angle):
            return NotImplemented
        if self.pi_multiple is not None or other.pi_multiple is not None:
            return self.pi_multiple == other.pi_multiple
        return self.value == other.value

    def __hash__(self) -> int:
        return hash(self.pi_multiple if self.pi_multiple is not None else self.value)

    def to_qasm(self) -> str:
        c = self.pi_multiple
        if c is None:
            return repr(self.value)
        if c == 0:
            return "0"
        sign = "-" if c < 0 else ""
        num, den = abs(c.numerator), c.denominator
        head = "pi" if num == 1 else f"{num}*pi"
        return f"{sign}{head}" if den == 1 else f"{sign}{head}/{den}"


@dataclass(frozen=True)
class GateOp:
    name: str
    qubits: tuple[int, ...]
    params: tuple[Angle, ...] = ()
    clbit: int | None = None

    def __post_init__(self):
        if self.name not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.name!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.name} acts twice on the same qubit: {self.qubits}")
        if self.name == "cx" and len(self.qubits) != 2:
            raise ValueError("cx needs exactly two qubits")
        if self.name in ONE_QUBIT_GATES and len(self.qubits) != 1:
            raise ValueError(f"{self.name} is a one-qubit gate")
        if len(self.params) != PARAM_COUNT.get(self.name, 0):
            raise ValueError(f"{self.name} takes {PARAM_COUNT.get(self.name, 0)} parameters")
        if self.name == "measure":
            if len(self.qubits) != 1 or self.clbit is None:
                raise ValueError("measure needs one qubit and a classical target")
        elif self.clbit is not None:
            raise ValueError("only measure has a classical target")

    @property
    def is_unitary(self) -> bool:
        return self.name not in ("barrier", "measure")

    def remap(self, qubit_map, clbit_offset: int = 0) -> "GateOp":
        """Return the gate with qubits sent through ``qubit_map``."""
        clbit = None if self.clbit is None else self.clbit + clbit_offset
        return GateOp(self.name, tuple(qubit_map[q] for q in self.qubits), self.params, clbit)


@dataclass(frozen=True)
class CircuitIR:
    n_qubits: int
    n_clbits: int
    gates: tuple[GateOp, ...]
    name: str = field(default="circuit", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 0 or self.n_clbits < 0:
            raise ValueError("register sizes must be non-negative")
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"{g.name} operand out of range for {self.n_qubits} qubits")
            if g.clbit is not None and not 0 <= g.clbit < self.n_clbits:
                raise ValueError(f"measure target c[{g.clbit}] out of range")

    @property
    def cx_count(self) -> int:
        return sum(1 for g in self.gates if g.name == "cx")

    @property
    def gate_count(self) -> int:
        """Number of unitary gates (barriers and measurements excluded)."""
        return sum(1 for g in self.gates if g.is_unitary)

    @property
    def measured_qubits(self) -> list[int]:
        return [g.qubits[0] for g in self.gates if g.name == "measure"]

    def with_name(self, name: str) -> "CircuitIR":
        return CircuitIR(self.n_qubits, self.n_clbits, self.gates, name)


def circuit(n_qubits: int, ops: Iterable[tuple], n_clbits: int = 0, name: str = "circuit") -> CircuitIR:
    """Terse constructor used by tests and generators.

    ``ops`` items are ``(name, qubits...)``; ``("measure", q, c)`` for
    measurements and ``(name, (angles...), qubits...)`` for parametrised
    gates, where angles are Fractions (multiples of pi) or floats.
    """
    gates = []
    for op in ops:
        name_, *rest = op
        if name_ == "measure":
            gates.append(GateOp("measure", (rest[0],), clbit=rest[1]))
            continue
        params: tuple[Angle, ...] = ()
        if rest and isinstance(rest[0], tuple):
            params = tuple(
                Angle.of_pi(a) if isinstance(a, (int, Fraction)) else Angle.real(a) for a in rest[0]
            )
            rest = rest[1:]
        gates.append(GateOp(name_, tuple(rest), params))
    return CircuitIR(n_qubits, n_clbits, tuple(gates), name)


def build_dag(c: CircuitIR) -> nx.DiGraph:
    """Dependency DAG: node i is ``c.gates[i]``; i -> j when j is the next gate sharing a qubit with i."""
    dag = nx.DiGraph()
    dag.add_nodes_from(range(len(c.gates)))
    last: dict[int, int] = {}
    for i, g in enumerate(c.gates):
        for q in g.qubits:
            if q in last:
                dag.add_edge(last[q], i)
            last[q] = i
    return dag


def cx_depth(c: CircuitIR) -> int:
    """Longest DAG path counting only cx nodes."""
    dag = build_dag(c)
    best = [0] * len(c.gates)
    for i in range(len(c.gates)):  # gate-list order is a topological order
        own = 1 if c.gates[i].name == "cx" else 0
        best[i] = own + max((best[p] for p in dag.predecessors(i)), default=0)
    return max(best, default=0)


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected program-qubit graph weighted by cx count per pair."""

    n_nodes: int
    weights: dict[tuple[int, int], int]

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())

    def weight(self, a: int, b: int) -> int:
        return self.weights.get((min(a, b), max(a, b)), 0)

    def neighbors(self, q: int) -> list[int]:
        out = []
        for a, b in self.weights:
            if a == q:
                out.append(b)
            elif b == q:
                out.append(a)
        return sorted(out)

    def heaviest_edge(self, among: Sequence[int] | None = None) -> tuple[int, int] | None:
        """Max-weight edge (ties: lexicographically smallest), optionally within ``among``."""
        allowed = None if among is None else set(among)
        best = None
        for (a, b), w in sorted(self.weights.items()):
            if allowed is not None and (a not in allowed or b not in allowed):
                continue
            if best is None or w > best[1]:
                best = ((a, b), w)
        return None if best is None else best[0]


def interaction_graph(c: CircuitIR) -> InteractionGraph:
    weights: dict[tuple[int, int], int] = {}
    for g in c.gates:
        if g.name == "cx":
            a, b = sorted(g.qubits)
            weights[(a, b)] = weights.get((a, b), 0) + 1
    return InteractionGraph(c.n_qubits, weights)
