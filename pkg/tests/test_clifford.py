from collections import Counter, deque
from functools import reduce

import numpy as np
import pytest
from scipy import stats

from qmpack.circuit import GateOp
from qmpack.clifford import (GROUP_SIZE, CliffordTableau, circuit_tableau, clifford_from_index, conj_bits,
                             cx_count_distribution, decomposition_table, gate_tableau, pauli_mul, random_clifford)
from qmpack.simulator import gate_matrix

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0 + 0j, -1.0])


def pauli_matrix(p, n):
    """i^e X^x Z^z with qubit 0 most significant."""
    e, x, z = p
    xs = reduce(np.kron, [X if x >> q & 1 else I2 for q in range(n)])
    zs = reduce(np.kron, [Z if z >> q & 1 else I2 for q in range(n)])
    return (1j ** e) * xs @ zs


def gate_unitary(name, qubits, n):
    if name == "cx":
        c, t = qubits
        p0 = [I2] * n
        p0[c] = np.diag([1, 0])
        p1 = [I2] * n
        p1[c] = np.diag([0, 1])
        p1[t] = X
        return reduce(np.kron, p0) + reduce(np.kron, p1)
    ops = [I2] * n
    ops[qubits[0]] = gate_matrix(GateOp(name, tuple(qubits)))
    return reduce(np.kron, ops)


def word_unitary(word, n):
    u = np.eye(2 ** n, dtype=complex)
    for name, q in word:
        u = gate_unitary(name, q, n) @ u
    return u


def matches_unitary(t: CliffordTableau, u: np.ndarray) -> bool:
    n = t.n
    gens = CliffordTableau.identity(n).rows
    return all(np.allclose(u @ pauli_matrix(g, n) @ u.conj().T, pauli_matrix(r, n)) for g, r in zip(gens, t.rows))


@pytest.mark.parametrize("name, qubits", [("h", (0,)), ("s", (1,)), ("sdg", (0,)), ("x", (1,)), ("sx", (0,)),
                                          ("cx", (0, 1)), ("cx", (1, 0))])
def test_gate_tableaux_match_unitaries(name, qubits):
    t = gate_tableau(name, qubits, 2)
    assert t.is_valid()
    assert matches_unitary(t, gate_unitary(name, qubits, 2))


def test_conj_bits_agrees_with_tableau():
    for name, qubits in [("h", (0,)), ("s", (1,)), ("sx", (0,)), ("x", (1,)), ("cx", (1, 0))]:
        t = gate_tableau(name, qubits, 2)
        for x in range(4):
            for z in range(4):
                _, ex, ez = t.conj((0, x, z))
                assert conj_bits(name, qubits, x, z) == (ex, ez)


def test_pauli_mul_matches_matrices():
    for a in range(4 ** 2):
        for b in range(4 ** 2):
            p, q = (0, a & 3, a >> 2), (1, b & 3, b >> 2)
            assert np.allclose(pauli_matrix(p, 2) @ pauli_matrix(q, 2), pauli_matrix(pauli_mul(p, q), 2))


def test_inverse_law_random_tableaux():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(1, 3))
        t = clifford_from_index(int(rng.integers(GROUP_SIZE[n])), n)
        ident = CliffordTableau.identity(n)
        assert t.then(t.inverse()) == ident and t.inverse().then(t) == ident


def closure(n):
    gens = [gate_tableau(g, q, n) for g, q in
            [(g, (q,)) for q in range(n) for g in ("h", "s")] + ([("cx", (0, 1))] if n == 2 else [])]
    start = CliffordTableau.identity(n)
    seen = {start.key()}
    todo = deque([start])
    while todo:
        t = todo.popleft()
        for g in gens:
            nxt = t.then(g)
            if nxt.key() not in seen:
                seen.add(nxt.key())
                todo.append(nxt)
    return seen


def test_group_closure_sizes():
    assert len(closure(1)) == 24
    group = closure(2)
    assert len(group) == 11520
    assert set(decomposition_table(2)) == group


def test_index_is_a_bijection_onto_the_group():
    group = closure(2)
    images = {clifford_from_index(i, 2).key() for i in range(GROUP_SIZE[2])}
    assert images == group


def test_decompositions_implement_their_tableau():
    rng = np.random.default_rng(3)
    for _ in range(200):
        t, word = random_clifford(2, rng)
        assert circuit_tableau(word, 2) == t
        assert matches_unitary(t, word_unitary(word, 2))


def test_cx_count_distribution():
    dist = cx_count_distribution(2)
    assert dist == pytest.approx({0: 576 / 11520, 1: 5184 / 11520, 2: 5184 / 11520, 3: 576 / 11520})


def test_one_qubit_uniformity():
    rng = np.random.default_rng(1)
    counts = Counter(random_clifford(1, rng)[0].key() for _ in range(100_000))
    assert len(counts) == 24
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


def test_two_qubit_sampler_covers_group_evenly():
    rng = np.random.default_rng(2)
    hist = Counter(sum(g == "cx" for g, _ in random_clifford(2, rng)[1]) for _ in range(20_000))
    expect = cx_count_distribution(2)
    obs = [hist.get(k, 0) for k in sorted(expect)]
    assert stats.chisquare(obs, [expect[k] * 20_000 for k in sorted(expect)]).pvalue > 1e-3


def test_rejects_three_qubits():
    with pytest.raises(ValueError):
        random_clifford(3, 0)
