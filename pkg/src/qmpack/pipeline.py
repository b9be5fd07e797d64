"""Compile, simulate and sweep: the end-to-end flows behind the command line."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .characterization import gain
from .circuit import CircuitIR
from .compose import ComposedRound, ExecutionEstimate, compose_round, estimate
from .hardware import HardwareModel
from .layout import BatchPlan, physical_distance_layout
from .simulator import MAX_QUBITS, NoiseModel, SimReport, correct_set, ideal_outputs, pst, simulate_round

log = logging.getLogger(__name__)


@dataclass
class PlanRun:
    plan: BatchPlan
    estimate: ExecutionEstimate
    rounds: list[SimReport] = field(default_factory=list)
    round_indices: list[int] = field(default_factory=list)  # plan round of each simulated round
    skipped: list[dict] = field(default_factory=list)

    @property
    def pst(self) -> list[float]:
        return [p for r in self.rounds for p in r.pst]

    @property
    def mean_pst(self) -> float:
        values = self.pst
        return float(np.mean(values)) if values else float("nan")


def round_seed(seed: int, round_index: int) -> int:
    return int(np.random.SeedSequence([seed, round_index]).generate_state(1)[0])


def simulate_plan(plan: BatchPlan, nm: NoiseModel, shots: int, seed: int,
                  max_qubits: int = MAX_QUBITS) -> PlanRun:
    """Simulate every round; members above the statevector bound are skipped and listed."""
    h = nm.hardware
    run = PlanRun(plan, estimate(plan, h, shots))
    ideal_cache: dict[int, frozenset[str]] = {}
    for ri, r in enumerate(plan.rounds):
        cr = compose_round(r, h)
        too_big = [m.name for m in cr.members if m.circuit.n_qubits > max_qubits]
        for name in too_big:
            run.skipped.append({"round": ri, "member": name,
                                "reason": f"more than {max_qubits} qubits for the statevector backend"})
        if too_big:
            cr = _without(cr, set(too_big))
            if not cr.members:
                continue
        counts = simulate_round(cr, nm, shots, round_seed(seed, ri), max_qubits)
        ideal = []
        for m in cr.members:
            key = id(m.circuit)
            if key not in ideal_cache:
                ideal_cache[key] = correct_set(ideal_outputs(m.circuit))
            ideal.append(ideal_cache[key])
        run.round_indices.append(ri)
        run.rounds.append(SimReport(counts.names, pst(counts, ideal), ideal, round_seed(seed, ri),
                                    nm.params(), counts))
    return run


def _without(cr: ComposedRound, names: set[str]) -> ComposedRound:
    # Dropping a member leaves the others' gate positions valid.
    return ComposedRound(cr.circuit, tuple(m for m in cr.members if m.name not in names))


def compile_and_simulate(queue: Sequence[CircuitIR], nm: NoiseModel, d: int, shots: int, seed: int,
                         allow_exact_fit: bool = False) -> PlanRun:
    plan = physical_distance_layout(queue, nm.hardware, d, allow_exact_fit)
    return simulate_plan(plan, nm, shots, seed)


@dataclass
class SweepPoint:
    gamma: float
    buffer: int
    seed: int
    mean_pst: float
    rounds: int
    total_duration: int
    mean_usage: float


def buffer_sweep(queue: Sequence[CircuitIR], h: HardwareModel, buffers: Sequence[int], seeds: Sequence[int],
                 gamma: float, shots: int, hop_threshold: int = 1, idle_rate: float = 0.0,
                 allow_exact_fit: bool = False) -> list[SweepPoint]:
    if len(set(buffers)) < 2 or 0 not in buffers:
        raise ValueError("a sweep needs at least two buffer values including 0")
    nm = NoiseModel(h, gamma, hop_threshold, idle_rate)
    points = []
    for d in buffers:
        plan = physical_distance_layout(queue, h, d, allow_exact_fit)
        for s in seeds:
            run = simulate_plan(plan, nm, shots, s)
            points.append(SweepPoint(gamma, d, s, run.mean_pst, len(plan.rounds),
                                     run.estimate.total, run.estimate.mean_usage))
    return points


def sweep_gain(points: Sequence[SweepPoint]) -> float:
    """Gain from seed-averaged mean PST per buffer."""
    by_d: dict[int, list[float]] = {}
    for p in points:
        by_d.setdefault(p.buffer, []).append(p.mean_pst)
    return gain(by_d)
