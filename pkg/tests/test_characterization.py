from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import curve_fit

from qmpack.characterization import (RBConfig, _rb_circuit, aligned_round, characterize, coefficient_of_variation,
                                     crosstalk_presence, cx_error_from_alpha, epc_from_alpha, fit_decay, gain,
                                     gen_rb_circuit, matching_patterns, rb_words, run_rb)
from qmpack.clifford import cx_count_distribution
from qmpack.compose import compose_round
from qmpack.hardware import line_device, load_preset
from qmpack.layout import LayoutMap, Placement, RoundDraft
from qmpack.simulator import NoiseModel, gate_matrix, simulate_round

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
PAULIS2 = [np.kron(a, b) for a in (I2, X, Y, Z) for b in (I2, X, Y, Z)][1:]
CX01 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CX10 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)


def density_survival(circ, p: float) -> float:
    """Exact probability of '00' with a uniform 15-Pauli error of probability p after every cx."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1
    for g in circ.gates:
        if g.name == "cx":
            u = CX01 if g.qubits == (0, 1) else CX10
            rho = u @ rho @ u.conj().T
            rho = (1 - p) * rho + p / 15 * sum(P @ rho @ P.conj().T for P in PAULIS2)
        elif g.is_unitary:
            ops = [I2, I2]
            ops[g.qubits[0]] = gate_matrix(g)
            u = reduce(np.kron, ops)
            rho = u @ rho @ u.conj().T
    return float(np.real(rho[0, 0]))


def run_single(circ, h, shots, seed):
    cr = compose_round(RoundDraft((Placement(circ, LayoutMap((0, 1))),), h.fresh_state()), h)
    return simulate_round(cr, NoiseModel(h, gamma=1.0), shots, seed).counts[0].get("00", 0) / shots


def test_rb_config_validation():
    with pytest.raises(ValueError):
        RBConfig(lengths=(1, 2))
    with pytest.raises(ValueError):
        RBConfig(samples=0)


@pytest.mark.parametrize("seed", range(3))
def test_noiseless_sequences_return_to_zero(seed):
    h = line_device(2, 0.0)
    for m in (1, 5):
        circ, expect = gen_rb_circuit((0, 1), m, seed)
        assert expect == "00"
        assert run_single(circ, h, 256, seed) == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_m16_survival_matches_density_matrix(seed):
    p, shots = 0.01, 40_000
    h = line_device(2, p)
    circ, _ = gen_rb_circuit((0, 1), 16, seed)
    exact = density_survival(circ, p)
    got = run_single(circ, h, shots, seed)
    assert abs(got - exact) < 4 * np.sqrt(exact * (1 - exact) / shots)


def test_twirled_decay_per_clifford():
    # averaged over many sequences, survival follows 1/4 + 3/4 * prod of per-Clifford decays
    p = 0.02
    a = 1 - 16 * p / 15
    rng = np.random.default_rng(5)
    ms, exact, twirl = 8, [], []
    for _ in range(60):
        words = rb_words(2, ms, rng)
        circ = _rb_circuit(words, 2, "rb")
        exact.append(density_survival(circ, p))
        ks = [sum(g == "cx" for g, _ in w) for w in words]
        twirl.append(0.25 + 0.75 * a ** sum(ks))
    assert np.mean(exact) == pytest.approx(np.mean(twirl), abs=0.01)


def test_fit_recovers_synthetic_decay():
    m = np.array([1, 2, 4, 8, 16, 32, 64, 128])
    y = 0.75 * 0.95 ** m + 0.25
    fit = fit_decay(m, y)
    assert fit.ok and abs(fit.alpha - 0.95) < 1e-6 and abs(fit.A - 0.75) < 1e-6 and abs(fit.B - 0.25) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_fit_agrees_with_scipy(seed):
    rng = np.random.default_rng(seed)
    m = np.array([1, 2, 4, 8, 16, 32, 64, 128], dtype=float)
    alpha = rng.uniform(0.9, 0.995)
    y = 0.7 * alpha ** m + 0.27 + rng.normal(0, 0.005, m.size)
    ours = fit_decay(m, y)
    ref, _ = curve_fit(lambda x, A, al, B: A * al ** x + B, m, y, p0=[0.7, 0.95, 0.25], maxfev=10_000)
    assert ours.alpha == pytest.approx(ref[1], abs=1e-5)
    assert ours.A == pytest.approx(ref[0], abs=1e-4) and ours.B == pytest.approx(ref[2], abs=1e-4)


def test_fit_edge_cases():
    flat = fit_decay([1, 2, 4], [1.0, 1.0, 1.0])
    assert flat.alpha == 1.0 and flat.ok
    rising = fit_decay([1, 2, 4, 8], [0.5, 0.6, 0.7, 0.8])
    assert not rising.ok


def test_epc_and_cx_error_inversion():
    assert epc_from_alpha(0.9, 2) == pytest.approx(0.75 * 0.1)
    assert epc_from_alpha(0.9, 1) == pytest.approx(0.05)
    dist = cx_count_distribution(2)
    for p in (0.001, 0.01, 0.05):
        a = 1 - 16 * p / 15
        alpha = sum(w * a ** k for k, w in dist.items())
        assert cx_error_from_alpha(alpha) == pytest.approx(p, rel=1e-9)
    assert cx_error_from_alpha(1.0) == 0.0


def test_run_rb_noiseless():
    h = line_device(4, 0.0)
    cfg = RBConfig(lengths=(1, 4, 16), samples=2, shots=128)
    for r in run_rb([(0, 1), (2, 3)], True, cfg, NoiseModel.noiseless(h)):
        assert abs(r.alpha - 1) < 1e-3 and r.epc < 1e-3


def test_run_rb_rejects_overlap_and_non_couplers():
    h = line_device(4, 0.01)
    cfg = RBConfig(lengths=(1, 2, 4), samples=1, shots=16)
    with pytest.raises(ValueError):
        run_rb([(0, 1), (1, 2)], True, cfg, NoiseModel(h))
    with pytest.raises(ValueError):
        run_rb([(0, 2)], False, cfg, NoiseModel(h))


def test_simrb_adjacent_pairs_see_crosstalk():
    h = line_device(4, 0.01)
    nm = NoiseModel(h, gamma=3.0)
    iso, sim = [], []
    for seed in range(5):
        cfg = RBConfig((1, 2, 4, 8, 16, 32), 3, 512, seed)
        iso.append([r.epc for r in run_rb([(0, 1), (2, 3)], False, cfg, nm)])
        sim.append([r.epc for r in run_rb([(0, 1), (2, 3)], True, cfg, nm)])
    assert (np.mean(sim, axis=0) > np.mean(iso, axis=0)).all()


def test_simrb_distant_pairs_match_isolated():
    h = line_device(6, 0.01)
    cfg = RBConfig(lengths=(1, 4, 16), samples=2, shots=256)
    nm = NoiseModel(h, gamma=3.0)
    iso = run_rb([(0, 1), (4, 5)], False, cfg, nm)
    sim = run_rb([(0, 1), (4, 5)], True, cfg, nm)
    assert [r.survival for r in iso] == [r.survival for r in sim]


def test_aligned_round_layers_share_barriers():
    h = line_device(4)
    rng = np.random.default_rng(0)
    words = [rb_words(2, 3, rng), rb_words(2, 3, rng)]
    cr = aligned_round([(0, 1), (2, 3)], words, h)
    barriers = [g for g in cr.circuit.gates if g.name == "barrier"]
    assert len(barriers) == 4 and all(b.qubits == (0, 1, 2, 3) for b in barriers)
    assert [m.clbits for m in cr.members] == [range(0, 2), range(2, 4)]


def test_cv_examples():
    rep = crosstalk_presence([0.01, 0.01], [0.01, 0.03])
    assert rep.cv_rb == 0 and rep.cv_simrb == pytest.approx(0.5) and rep.ct == pytest.approx(0.5)
    assert crosstalk_presence([0.02, 0.05], [0.02, 0.05]).ct == 0
    assert coefficient_of_variation([0.3, 0.3, 0.3])[2] == 0
    with pytest.raises(ValueError):
        coefficient_of_variation([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-4, 1.0), min_size=1, max_size=30), st.floats(1e-3, 1e3))
def test_cv_scale_invariance(values, k):
    assert coefficient_of_variation([k * v for v in values])[2] == pytest.approx(
        coefficient_of_variation(values)[2], rel=1e-9, abs=1e-12)


def test_gain_examples():
    assert gain({0: [0.6], 2: [0.6], 3: [0.6]}) == 0
    assert gain({0: [0.60], 2: [0.68], 3: [0.66]}) == pytest.approx(0.08)
    with pytest.raises(ValueError):
        gain({2: [0.5]})
    with pytest.raises(ValueError):
        gain({0: [0.5], 1: [0.6]})


def test_matching_patterns_partition_couplers():
    h = load_preset("falcon27")
    pats = matching_patterns(h)
    flat = [e for p in pats for e in p]
    assert sorted(flat) == sorted(h.edges)
    for p in pats:
        qs = [q for e in p for q in e]
        assert len(qs) == len(set(qs))


def test_characterize_without_crosstalk_gives_zero_ct():
    h = line_device(6, 0.01)
    cfg = RBConfig(lengths=(1, 4, 16), samples=2, shots=256)
    rep = characterize(h, NoiseModel(h, gamma=1.0), cfg)
    assert rep.ct == 0.0
    csv = rep.survival_csv().splitlines()
    assert csv[0] == "target,length,sample,survival" and any("@simrb0" in line for line in csv)
