"""Bundled benchmark circuits and workload generators."""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .circuit import CircuitIR, circuit
from .qasm import SourceProgram, parse_qasm

BENCHMARK_NAMES = ("deutsch", "grover", "linearsolver", "toffoli", "fredkin", "adder", "error_correctiond3")


class ManifestMismatch(RuntimeError):
    """A bundled benchmark no longer parses to its recorded size."""


def _data():
    return resources.files("qmpack").joinpath("data", "benchmarks")


def manifest() -> dict:
    return json.loads(_data().joinpath("manifest.json").read_text(encoding="utf-8"))


def load_benchmark(name: str) -> CircuitIR:
    entry = manifest()[name]
    text = _data().joinpath(entry["file"]).read_text(encoding="utf-8")
    c = parse_qasm(SourceProgram(text, entry["file"])).with_name(name)
    got = (c.n_qubits, c.gate_count, c.cx_count)
    want = (entry["qubits"], entry["gates"], entry["cx"])
    if got != want:
        raise ManifestMismatch(f"{name}: parsed qubits/gates/cx {got}, manifest records {want}")
    return c


def load_benchmarks() -> dict[str, CircuitIR]:
    return {name: load_benchmark(name) for name in BENCHMARK_NAMES}


def workload(n: int = 100, seed: int = 0) -> list[CircuitIR]:
    """``n`` circuits drawn uniformly (with replacement) from the bundled set."""
    pool = load_benchmarks()
    names = list(BENCHMARK_NAMES)
    picks = np.random.default_rng(seed).integers(len(names), size=n)
    return [pool[names[i]].with_name(f"{names[i]}_{k}") for k, i in enumerate(picks)]


# One Toffoli (controls 0 and 1, target 2) routed onto the line 0-1-2: the
# 0-2 interactions of the textbook decomposition go through swaps, leaving
# ten cx gates that all depend on each other.
_CHAIN_TOFFOLI = [
    ("h", 2), ("cx", 2, 1), ("cx", 1, 2), ("tdg", 1), ("cx", 0, 1), ("t", 1), ("cx", 2, 1),
    ("tdg", 1), ("cx", 0, 1), ("t", 2), ("t", 1), ("h", 1), ("cx", 1, 2), ("cx", 2, 1),
    ("cx", 1, 2), ("cx", 0, 1), ("t", 0), ("tdg", 1), ("cx", 0, 1),
]


def toffoli_chain(repeats: int = 1, name: str | None = None) -> CircuitIR:
    """``repeats`` line-routed Toffolis on |110>, measured; 10 serial cx per Toffoli."""
    ops: list[tuple] = [("x", 0), ("x", 1)]
    for _ in range(repeats):
        ops += _CHAIN_TOFFOLI
    ops += [("measure", q, q) for q in range(3)]
    return circuit(3, ops, n_clbits=3, name=name or f"toffoli_chain_{10 * repeats}cx")
