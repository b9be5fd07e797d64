"""Device topology, calibration loading and buffer geometry."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

UNREACHABLE = math.inf

DEFAULT_DURATIONS = {"1q_gate_dt": 36, "cx_dt": 160, "measure_dt": 1200}
_TOP_LEVEL = {"name", "n_qubits", "coupling", "cx_error", "sq_error", "readout_error", "durations"}

PRESETS = {"falcon27": "falcon27.json", "hummingbird65": "hummingbird65.json"}


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class Durations:
    one_qubit: int = DEFAULT_DURATIONS["1q_gate_dt"]
    cx: int = DEFAULT_DURATIONS["cx_dt"]
    measure: int = DEFAULT_DURATIONS["measure_dt"]

    def __post_init__(self):
        if min(self.one_qubit, self.cx, self.measure) <= 0:
            raise CalibrationError("gate durations must be positive")

    def of(self, gate_name: str) -> int:
        if gate_name == "cx":
            return self.cx
        if gate_name == "measure":
            return self.measure
        if gate_name == "barrier":
            return 0
        return self.one_qubit

    def to_dict(self) -> dict:
        return {"1q_gate_dt": self.one_qubit, "cx_dt": self.cx, "measure_dt": self.measure}


def edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class HardwareModel:
    name: str
    n_qubits: int
    edges: tuple[tuple[int, int], ...]
    cx_error: Mapping[tuple[int, int], float]
    sq_error: tuple[float, ...]
    readout_error: tuple[float, ...]
    durations: Durations = field(default_factory=Durations)

    def __post_init__(self):
        edges = tuple(sorted({edge_key(a, b) for a, b in self.edges}))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "cx_error", {edge_key(*k): float(v) for k, v in self.cx_error.items()})
        for a, b in edges:
            if a == b:
                raise CalibrationError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise CalibrationError(f"coupling {a}-{b} references a qubit outside 0..{self.n_qubits - 1}")
        if set(self.cx_error) != set(edges):
            missing = sorted(set(edges) - set(self.cx_error))
            extra = sorted(set(self.cx_error) - set(edges))
            raise CalibrationError(f"cx_error must cover exactly the coupling edges (missing {missing}, extra {extra})")
        if len(self.sq_error) != self.n_qubits or len(self.readout_error) != self.n_qubits:
            raise CalibrationError("per-qubit error lists must have one entry per qubit")
        for what, values in (("cx_error", self.cx_error.values()), ("sq_error", self.sq_error),
                             ("readout_error", self.readout_error)):
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise CalibrationError(f"{what} value {v} outside [0, 1]")

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_qubits))
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs hop distance matrix; unreachable pairs hold ``inf``."""
        d = np.full((self.n_qubits, self.n_qubits), np.inf)
        for src, lengths in nx.all_pairs_shortest_path_length(self.graph):
            for dst, n in lengths.items():
                d[src, dst] = n
        return d

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        return {q: tuple(sorted(self.graph.neighbors(q))) for q in range(self.n_qubits)}

    def hop_distance(self, a: int, b: int) -> float:
        return hop_distance(self, a, b)

    def error(self, a: int, b: int) -> float:
        return self.cx_error[edge_key(a, b)]

    def fresh_state(self) -> "HardwareState":
        return HardwareState(self, frozenset(range(self.n_qubits)))

    def with_uniform_errors(self, cx: float, sq: float = 0.0, readout: float = 0.0) -> "HardwareModel":
        return HardwareModel(self.name, self.n_qubits, self.edges, {e: cx for e in self.edges},
                             (sq,) * self.n_qubits, (readout,) * self.n_qubits, self.durations)

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "coupling": [list(e) for e in self.edges],
            "cx_error": {f"{a}-{b}": self.cx_error[(a, b)] for a, b in self.edges},
            "sq_error": list(self.sq_error),
            "readout_error": list(self.readout_error),
            "durations": self.durations.to_dict(),
        }


def _per_qubit(doc_value, n: int, what: str) -> tuple[float, ...]:
    if doc_value is None:
        return (0.0,) * n
    if isinstance(doc_value, list):
        if len(doc_value) != n:
            raise CalibrationError(f"{what} lists {len(doc_value)} values for {n} qubits")
        return tuple(float(v) for v in doc_value)
    if isinstance(doc_value, dict):
        out = [0.0] * n
        for k, v in doc_value.items():
            q = int(k)
            if not 0 <= q < n:
                raise CalibrationError(f"{what} references dangling qubit {q}")
            out[q] = float(v)
        return tuple(out)
    raise CalibrationError(f"{what} must be a list or an object")


def load_calibration(doc: Mapping | str | Path) -> HardwareModel:
    """Build a :class:`HardwareModel` from a calibration document.

    ``doc`` may be an already-decoded mapping, a path to a JSON file, or a
    preset name (``falcon27``, ``hummingbird65``).
    """
    if isinstance(doc, (str, Path)):
        if str(doc) in PRESETS:
            return load_preset(str(doc))
        try:
            doc = json.loads(Path(doc).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"malformed calibration file {doc}: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise CalibrationError("calibration document must be an object")
    unknown = set(doc) - _TOP_LEVEL
    if unknown:
        raise CalibrationError(f"unknown calibration fields: {sorted(unknown)}")
    for key in ("n_qubits", "coupling", "cx_error"):
        if key not in doc:
            raise CalibrationError(f"calibration document lacks '{key}'")
    n = doc["n_qubits"]
    if not isinstance(n, int) or n < 1:
        raise CalibrationError("n_qubits must be a positive integer")
    edges = []
    for pair in doc["coupling"]:
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise CalibrationError(f"bad coupling entry {pair!r}")
        a, b = int(pair[0]), int(pair[1])
        if not (0 <= a < n and 0 <= b < n):
            raise CalibrationError(f"coupling {a}-{b} references a dangling qubit")
        if a == b:
            raise CalibrationError(f"self-loop on qubit {a}")
        edges.append(edge_key(a, b))
    cx_error: dict[tuple[int, int], float] = {}
    for key, value in doc["cx_error"].items():
        try:
            a, b = (int(x) for x in key.split("-"))
        except ValueError as exc:
            raise CalibrationError(f"bad cx_error key {key!r}; expected 'a-b'") from exc
        k = edge_key(a, b)
        if k in cx_error and cx_error[k] != float(value):
            raise CalibrationError(f"conflicting cx_error entries for {key}")
        cx_error[k] = float(value)
    dur = dict(DEFAULT_DURATIONS)
    if "durations" in doc:
        unknown = set(doc["durations"]) - set(DEFAULT_DURATIONS)
        if unknown:
            raise CalibrationError(f"unknown duration fields: {sorted(unknown)}")
        dur.update(doc["durations"])
    durations = Durations(int(dur["1q_gate_dt"]), int(dur["cx_dt"]), int(dur["measure_dt"]))
    return HardwareModel(
        name=str(doc.get("name", "device")),
        n_qubits=n,
        edges=tuple(edges),
        cx_error=cx_error,
        sq_error=_per_qubit(doc.get("sq_error"), n, "sq_error"),
        readout_error=_per_qubit(doc.get("readout_error"), n, "readout_error"),
        durations=durations,
    )


def load_preset(name: str) -> HardwareModel:
    if name not in PRESETS:
        raise CalibrationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    text = resources.files("qmpack").joinpath("data", "devices", PRESETS[name]).read_text(encoding="utf-8")
    return load_calibration(json.loads(text))


def line_device(n: int, errors: Iterable[float] | float = 0.01, name: str | None = None) -> HardwareModel:
    """Linear chain 0-1-...-(n-1); handy for tests and examples."""
    edges = [(i, i + 1) for i in range(n - 1)]
    errs = [errors] * len(edges) if isinstance(errors, (int, float)) else list(errors)
    return HardwareModel(name or f"line{n}", n, tuple(edges), dict(zip(edges, errs)), (0.0,) * n, (0.0,) * n)


@dataclass(frozen=True)
class ReliabilityGraph:
    model: HardwareModel
    weights: dict[tuple[int, int], float]

    def r(self, a: int, b: int) -> float:
        return self.weights[edge_key(a, b)]


def reliability_graph(h: HardwareModel) -> ReliabilityGraph:
    return ReliabilityGraph(h, {e: 1.0 - eps for e, eps in h.cx_error.items()})


@dataclass(frozen=True)
class HardwareState:
    model: HardwareModel
    available: frozenset[int]

    def __post_init__(self):
        if not self.available <= frozenset(range(self.model.n_qubits)):
            raise ValueError("available qubits must belong to the device")


def connected_components(s: HardwareState) -> list[list[int]]:
    """Maximal connected sets of the subgraph induced by the available qubits, ordered by smallest member."""
    sub = s.model.graph.subgraph(s.available)
    return sorted((sorted(c) for c in nx.connected_components(sub)), key=lambda c: c[0])


def remove_with_buffer(s: HardwareState, used: Iterable[int], d: int) -> HardwareState:
    """Drop ``used`` and every available qubit within ``d`` hops of it (full device graph)."""
    used = frozenset(used)
    if not used <= s.available:
        raise ValueError(f"qubits {sorted(used - s.available)} are not available")
    if not used:
        return s
    dist = s.model.distances[sorted(used)].min(axis=0)
    keep = frozenset(q for q in s.available if q not in used and dist[q] > d)
    return HardwareState(s.model, keep)


def hop_distance(h: HardwareModel, a: int, b: int) -> float:
    return float(h.distances[a, b])
