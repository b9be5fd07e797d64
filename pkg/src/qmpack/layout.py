"""Greedy reliability-driven placement of queued circuits with a physical buffer.

:func:`physical_distance_layout` packs a queue of circuits into rounds of
concurrent execution.  Each circuit is placed by :func:`allocate_one`,
which seeds its heaviest interaction on the most reliable free coupler
and grows outwards; after placement every qubit within ``d`` hops of the
circuit is taken out of the round so later circuits keep their distance.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .circuit import CircuitIR, InteractionGraph, cx_depth, interaction_graph
from .hardware import (
    HardwareModel,
    HardwareState,
    ReliabilityGraph,
    connected_components,
    reliability_graph,
    remove_with_buffer,
)

log = logging.getLogger(__name__)


class NoRoom(Exception):
    """The circuit cannot be placed on the current hardware state."""


@dataclass(frozen=True)
class LayoutMap:
    """Program qubit ``i`` runs on physical qubit ``physical[i]``."""

    physical: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.physical)) != len(self.physical):
            raise ValueError(f"layout is not injective: {self.physical}")

    def __getitem__(self, q: int) -> int:
        return self.physical[q]

    def __len__(self) -> int:
        return len(self.physical)

    @property
    def image(self) -> frozenset[int]:
        return frozenset(self.physical)

    def as_dict(self) -> dict[int, int]:
        return dict(enumerate(self.physical))


@dataclass(frozen=True)
class Placement:
    circuit: CircuitIR
    layout: LayoutMap


@dataclass(frozen=True)
class RoundDraft:
    placements: tuple[Placement, ...]
    state: HardwareState

    @property
    def used_qubits(self) -> int:
        return sum(len(p.layout) for p in self.placements)


@dataclass
class BatchPlan:
    rounds: list[RoundDraft]
    buffer: int
    device: str
    leftover: list[CircuitIR] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    allow_exact_fit: bool = False

    @property
    def placed(self) -> list[CircuitIR]:
        return [p.circuit for r in self.rounds for p in r.placements]


def _fits(component_size: int, n: int, allow_exact_fit: bool) -> bool:
    return component_size >= n if allow_exact_fit else component_size > n


def layout_score(graph: InteractionGraph, layout: LayoutMap, rel: ReliabilityGraph) -> tuple[int, float]:
    """(cx weight landing on physical couplers, sum of w*log r over those couplers)."""
    adj = rel.model.adjacency
    sat, logr = 0, 0.0
    for (a, b), w in graph.weights.items():
        pa, pb = layout[a], layout[b]
        if pb in adj[pa]:
            sat += w
            logr += w * math.log(max(rel.r(pa, pb), 1e-300))
    return sat, logr


class _Grower:
    """Places the program qubits of one circuit inside one hardware component."""

    def __init__(self, graph: InteractionGraph, comp: Sequence[int], state: HardwareState,
                 rel: ReliabilityGraph):
        self.g = graph
        self.comp = set(comp)
        self.free = set(comp)
        self.model = state.model
        self.rel = rel
        self.placed: dict[int, int] = {}

    def put(self, prog: int, hw: int):
        self.placed[prog] = hw
        self.free.discard(hw)

    def frontier(self) -> list[int]:
        adj = self.model.adjacency
        images = self.placed.values()
        return sorted({n for p in images for n in adj[p] if n in self.free})

    def nearest(self, candidates: Iterable[int]) -> list[int]:
        """Candidates ordered by hop distance to the placed image (ascending)."""
        cands = list(candidates)
        if not self.placed:
            return cands
        dist = self.model.distances
        images = list(self.placed.values())
        return sorted(cands, key=lambda q: min(dist[q, p] for p in images))

    def reseed(self, a: int, b: int):
        """Place a fresh program edge (a, b) on the nearest most reliable free coupler."""
        dist = self.model.distances
        images = list(self.placed.values())
        best = None
        for e in self.model.edges:
            if e[0] in self.free and e[1] in self.free:
                near = min(min(dist[e[0], p], dist[e[1], p]) for p in images) if images else 0
                key = (near, -self.rel.r(*e), e)
                if best is None or key < best[0]:
                    best = (key, e)
        if best is None:
            raise NoRoom("no free coupler left for a disconnected interaction component")
        x, y = best[1]
        self.put(a, x)
        self.put(b, y)

    def place_isolated(self, q: int):
        cands = self.frontier() or self.nearest(sorted(self.free))
        if not cands:
            raise NoRoom("component exhausted")
        if self.placed and not self.frontier():
            dist = self.model.distances
            images = list(self.placed.values())
            near = min(min(dist[c, p] for p in images) for c in cands)
            cands = [c for c in cands if min(dist[c, p] for p in images) == near]
        ro = self.model.readout_error
        self.put(q, min(cands, key=lambda c: (ro[c], c)))

    def grow(self):
        g = self.g
        adj = self.model.adjacency
        while len(self.placed) < g.n_nodes:
            unplaced = [q for q in range(g.n_nodes) if q not in self.placed]
            conn = {q: sum(g.weight(q, p) for p in self.placed) for q in unplaced}
            q = max(unplaced, key=lambda u: (conn[u], -u))
            if conn[q] == 0:
                e = g.heaviest_edge(unplaced)
                if e is not None:
                    self.reseed(*e)
                else:
                    self.place_isolated(q)
                continue
            cands = self.frontier()
            if not cands:
                raise NoRoom("no free qubit adjacent to the placed image")
            best = None
            for c in cands:
                sat, logr, link = 0, 0.0, 0.0
                for p, hw in self.placed.items():
                    if hw in adj[c]:
                        r = self.rel.r(hw, c)
                        link = max(link, r)
                        w = g.weight(q, p)
                        if w:
                            sat += w
                            logr += w * math.log(max(r, 1e-300))
                key = (sat, logr, link, -c)
                if best is None or key > best[0]:
                    best = (key, c)
            self.put(q, best[1])

    def layout(self) -> LayoutMap:
        return LayoutMap(tuple(self.placed[q] for q in range(self.g.n_nodes)))


def _qualifying(s: HardwareState, n: int, allow_exact_fit: bool) -> list[list[int]]:
    return [c for c in connected_components(s) if _fits(len(c), n, allow_exact_fit)]


def best_seed_edge(s: HardwareState, rel: ReliabilityGraph, n: int,
                   allow_exact_fit: bool = False) -> tuple[int, int] | None:
    """Most reliable coupler inside a component large enough for ``n`` qubits (ties: smallest edge)."""
    comp_of = {}
    for c in _qualifying(s, n, allow_exact_fit):
        for q in c:
            comp_of[q] = id(c)
    best = None
    for e in rel.model.edges:
        a, b = e
        if a in comp_of and b in comp_of:
            key = (rel.r(a, b), (-a, -b))
            if best is None or key > best[0]:
                best = (key, e)
    return None if best is None else best[1]


def allocate_one(g: InteractionGraph, s: HardwareState, r: ReliabilityGraph,
                 allow_exact_fit: bool = False) -> LayoutMap:
    """Greedy placement of one circuit's interaction graph on the free hardware.

    Raises :class:`NoRoom` when no component is large enough or the growth
    runs out of free neighbours.
    """
    comps = _qualifying(s, g.n_nodes, allow_exact_fit)
    if not comps:
        raise NoRoom(f"no connected region holds {g.n_nodes} qubits")

    if not g.weights:
        ro = s.model.readout_error
        adj = s.model.adjacency

        def link(q):  # best coupler reliability touching q inside the free region
            return max((r.r(q, n) for n in adj[q] if n in s.available), default=0.0)

        start = min((q for c in comps for q in c), key=lambda q: (ro[q], -link(q), q))
        comp = next(c for c in comps if start in c)
        grower = _Grower(g, comp, s, r)
        if g.n_nodes:
            grower.put(0, start)
        for q in range(1, g.n_nodes):
            grower.place_isolated(q)
        return grower.layout()

    seed_hw = best_seed_edge(s, r, g.n_nodes, allow_exact_fit)
    if seed_hw is None:
        raise NoRoom("no coupler inside a large enough region")
    comp = next(c for c in comps if seed_hw[0] in c)
    pa, pb = g.heaviest_edge()
    attempts = []
    for ha, hb in (seed_hw, seed_hw[::-1]):
        grower = _Grower(g, comp, s, r)
        grower.put(pa, ha)
        grower.put(pb, hb)
        try:
            grower.grow()
        except NoRoom as exc:
            attempts.append(exc)
            continue
        lay = grower.layout()
        attempts.append((layout_score(g, lay, r), lay))
    done = [a for a in attempts if not isinstance(a, NoRoom)]
    if not done:
        raise attempts[0]
    best = done[0]
    for cand in done[1:]:
        if cand[0] > best[0]:
            best = cand
    return best[1]


def sort_queue(queue: Iterable[CircuitIR]) -> list[CircuitIR]:
    """Deepest circuits first; equal cx depth keeps queue order."""
    return sorted(queue, key=cx_depth, reverse=True)


def physical_distance_layout(queue: Sequence[CircuitIR], h: HardwareModel, d: int,
                             allow_exact_fit: bool = False) -> BatchPlan:
    """Pack ``queue`` into rounds of concurrently executed circuits.

    Circuits are taken deepest-first.  A circuit joins the current round
    when the largest free connected region is strictly larger than it (or
    at least as large with ``allow_exact_fit``); otherwise the round is
    closed and the circuit retried on a fresh device.  A circuit that does
    not fit a fresh device is reported in ``leftover``.
    """
    if d < 0:
        raise ValueError("buffer distance must be non-negative")
    rel = reliability_graph(h)
    plan = BatchPlan([], d, h.name, allow_exact_fit=allow_exact_fit)
    pending = deque(sort_queue(queue))
    graphs = {id(c): interaction_graph(c) for c in pending}
    fresh = h.fresh_state()
    state = fresh
    draft: list[Placement] = []

    while pending:
        c = pending.popleft()
        layout = None
        comps = connected_components(state)
        if comps and _fits(max(len(x) for x in comps), c.n_qubits, allow_exact_fit):
            try:
                layout = allocate_one(graphs[id(c)], state, rel, allow_exact_fit)
            except NoRoom:
                layout = None
        if layout is not None:
            draft.append(Placement(c, layout))
            state = remove_with_buffer(state, layout.image, d)
            continue
        if not draft:
            msg = f"circuit '{c.name}' ({c.n_qubits} qubits) cannot be placed on {h.name}"
            log.warning(msg)
            plan.warnings.append(msg)
            plan.leftover.append(c)
            continue
        pending.appendleft(c)
        plan.rounds.append(RoundDraft(tuple(draft), state))
        draft, state = [], fresh

    if draft:
        plan.rounds.append(RoundDraft(tuple(draft), state))
    return plan


def min_inter_circuit_distance(round_: RoundDraft, h: HardwareModel) -> float:
    """Smallest hop distance between qubits of different circuits in a round (inf for one circuit)."""
    best = math.inf
    images = [sorted(p.layout.image) for p in round_.placements]
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            sub = h.distances[images[i]][:, images[j]]
            best = min(best, float(sub.min()))
    return best
