"""Regenerate the synthetic device presets shipped in src/qmpack/data/devices."""
import json
from pathlib import Path

import numpy as np

FALCON27 = [(0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10), (8, 9), (8, 11),
            (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16), (15, 18), (16, 19), (17, 18),
            (18, 21), (19, 20), (19, 22), (21, 23), (22, 25), (23, 24), (24, 25), (25, 26)]


def hummingbird65():
    rows = [list(range(0, 10)), list(range(13, 24)), list(range(27, 38)), list(range(41, 52)),
            list(range(55, 65))]
    edges = [(r[i], r[i + 1]) for r in rows for i in range(len(r) - 1)]
    bridges = [(0, 10, 13), (4, 11, 17), (8, 12, 21),
               (15, 24, 29), (19, 25, 33), (23, 26, 37),
               (27, 38, 41), (31, 39, 45), (35, 40, 49),
               (43, 52, 56), (47, 53, 60), (51, 54, 64)]
    for a, m, b in bridges:
        edges += [(a, m), (m, b)]
    return sorted(edges)


def synthetic(name, n, edges, seed):
    rng = np.random.default_rng(seed)
    cx = np.clip(rng.lognormal(np.log(0.01), 0.3, len(edges)), 0.004, 0.04)
    sq = np.clip(rng.lognormal(np.log(3e-4), 0.3, n), 1e-4, 2e-3)
    ro = np.clip(rng.lognormal(np.log(0.02), 0.4, n), 0.005, 0.1)
    return {
        "name": name,
        "n_qubits": n,
        "coupling": [list(e) for e in edges],
        "cx_error": {f"{a}-{b}": float(f"{e:.5g}") for (a, b), e in zip(edges, cx)},
        "sq_error": [float(f"{v:.4g}") for v in sq],
        "readout_error": [float(f"{v:.4g}") for v in ro],
        "durations": {"1q_gate_dt": 36, "cx_dt": 160, "measure_dt": 1200},
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "qmpack" / "data" / "devices"
    for fname, doc in (("falcon27.json", synthetic("falcon27", 27, FALCON27, 27)),
                       ("hummingbird65.json", synthetic("hummingbird65", 65, hummingbird65(), 65))):
        (out / fname).write_text(json.dumps(doc, indent=1) + "\n")
