import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmpack.hardware import (CalibrationError, HardwareState, connected_components, hop_distance, line_device,
                             load_calibration, load_preset, reliability_graph, remove_with_buffer)

from strategies import random_device


def doc(**over):
    base = {"name": "t", "n_qubits": 3, "coupling": [[0, 1], [1, 2]], "cx_error": {"0-1": 0.01, "1-2": 0.02}}
    base.update(over)
    return base


def test_presets():
    assert load_preset("falcon27").n_qubits == 27
    assert load_calibration("hummingbird65").graph.number_of_nodes() == 65
    for name in ("falcon27", "hummingbird65"):
        h = load_preset(name)
        assert np.isfinite(h.distances).all()


def test_loader_defaults_and_round_trip(tmp_path):
    h = load_calibration(doc())
    assert h.readout_error == (0.0, 0.0, 0.0) and h.sq_error == (0.0, 0.0, 0.0)
    assert (h.durations.one_qubit, h.durations.cx, h.durations.measure) == (36, 160, 1200)
    p = tmp_path / "dev.json"
    p.write_text(json.dumps(h.to_document()))
    assert load_calibration(p).to_document() == h.to_document()


@pytest.mark.parametrize("bad", [
    doc(cx_error={"0-1": 1.5, "1-2": 0.02}),
    doc(coupling=[[0, 1], [1, 3]]),
    doc(coupling=[[0, 0], [1, 2]]),
    doc(cx_error={"0-1": 0.01}),
    doc(extra_field=1),
    doc(readout_error=[0.1]),
    doc(durations={"cx_dt": 0}),
])
def test_loader_rejects(bad):
    with pytest.raises(CalibrationError):
        load_calibration(bad)


def test_malformed_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(CalibrationError):
        load_calibration(p)


def test_reliability_examples():
    h = line_device(3, [0.0, 0.02])
    r = reliability_graph(h)
    assert r.r(0, 1) == 1.0 and r.r(2, 1) == 0.98


def test_reliability_identity_on_random_model():
    h = random_device(np.random.default_rng(1), 12, 4)
    r = reliability_graph(h)
    assert all(r.r(*e) == 1 - h.cx_error[e] for e in h.edges)
    assert {e: 1 - w for e, w in r.weights.items()} == pytest.approx(h.cx_error, abs=1e-15)


def test_components():
    h = line_device(5)
    assert connected_components(h.fresh_state()) == [[0, 1, 2, 3, 4]]
    assert connected_components(HardwareState(h, frozenset({0, 1, 3, 4}))) == [[0, 1], [3, 4]]
    assert connected_components(HardwareState(h, frozenset())) == []


def test_remove_with_buffer_examples():
    s = line_device(5).fresh_state()
    assert remove_with_buffer(s, {2}, 0).available == {0, 1, 3, 4}
    assert remove_with_buffer(s, {2}, 1).available == {0, 4}
    assert remove_with_buffer(s, {0}, 4).available == frozenset()


def test_buffer_measured_on_full_graph():
    h = line_device(5)
    s = HardwareState(h, frozenset({0, 1, 3, 4}))
    # qubit 4 is three hops from 1 on the device even though 2 is gone
    assert remove_with_buffer(s, {1}, 2).available == {4}


def test_hop_distance_examples():
    h = line_device(5)
    assert hop_distance(h, 3, 3) == 0 and hop_distance(h, 1, 2) == 1 and hop_distance(h, 0, 4) == 4


def bfs(h, a):
    dist = {a: 0}
    frontier = [a]
    while frontier:
        nxt = []
        for q in frontier:
            for p in h.adjacency[q]:
                if p not in dist:
                    dist[p] = dist[q] + 1
                    nxt.append(p)
        frontier = nxt
    return dist


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 16), st.data())
def test_state_properties(seed, n, data):
    rng = np.random.default_rng(seed)
    h = random_device(rng, n, int(rng.integers(0, 4)))
    for a in range(n):
        assert all(h.distances[a, b] == d for b, d in bfs(h, a).items())
    avail = frozenset(data.draw(st.sets(st.integers(0, n - 1))))
    s = HardwareState(h, avail)
    comps = connected_components(s)
    flat = [q for c in comps for q in c]
    assert len(flat) == len(set(flat)) and set(flat) == avail
    for c in comps:
        assert all(h.graph.subgraph(c).degree(q) > 0 for q in c) or len(c) == 1
    used = frozenset(data.draw(st.sets(st.sampled_from(sorted(avail)))) if avail else set())
    previous = None
    for d in range(4):
        left = remove_with_buffer(s, used, d).available
        assert left <= avail - used
        if used:
            assert all(h.distances[q, list(used)].min() > d for q in left)
        if previous is not None:
            assert left <= previous
        previous = left
