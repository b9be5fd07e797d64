"""One- and two-qubit Clifford tableaux, uniform sampling and gate decomposition.

A Pauli operator is stored as ``(e, x, z)`` meaning ``i**e X^x Z^z`` with
``x``/``z`` bitmasks over qubits (bit j = qubit j).  A Clifford ``C`` is the
list of images ``C P C^dagger`` of ``X_0..X_{n-1}`` followed by
``Z_0..Z_{n-1}``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

Pauli = tuple[int, int, int]

CLIFFORD_GATES = frozenset({"h", "s", "sdg", "x", "sx", "cx"})
GROUP_SIZE = {1: 24, 2: 11520}


def pauli_mul(p: Pauli, q: Pauli) -> Pauli:
    e1, x1, z1 = p
    e2, x2, z2 = q
    return ((e1 + e2 + 2 * bin(z1 & x2).count("1")) % 4, x1 ^ x2, z1 ^ z2)


def is_hermitian(p: Pauli) -> bool:
    e, x, z = p
    return e % 2 == bin(x & z).count("1") % 2


@dataclass(frozen=True)
class CliffordTableau:
    n: int
    rows: tuple[Pauli, ...]  # images of X_0..X_{n-1}, Z_0..Z_{n-1}

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        return cls(n, tuple((0, 1 << j, 0) for j in range(n)) + tuple((0, 0, 1 << j) for j in range(n)))

    def conj(self, p: Pauli) -> Pauli:
        """Image ``C P C^dagger`` of an arbitrary Pauli."""
        e, x, z = p
        out: Pauli = (e, 0, 0)
        for j in range(self.n):
            if x >> j & 1:
                out = pauli_mul(out, self.rows[j])
        for j in range(self.n):
            if z >> j & 1:
                out = pauli_mul(out, self.rows[self.n + j])
        return out

    def then(self, other: "CliffordTableau") -> "CliffordTableau":
        """Apply ``self`` first and ``other`` afterwards."""
        return CliffordTableau(self.n, tuple(other.conj(r) for r in self.rows))

    def inverse(self) -> "CliffordTableau":
        # For each generator G find the Pauli P with C P C^dagger = i^f G, then undo the phase.
        n = self.n
        rows = []
        for g in self.identity(n).rows:
            for x in range(1 << n):
                for z in range(1 << n):
                    f, gx, gz = self.conj((0, x, z))
                    if (gx, gz) == (g[1], g[2]):
                        rows.append(((-f) % 4, x, z))
                        break
                else:
                    continue
                break
        return CliffordTableau(n, tuple(rows))

    def is_valid(self) -> bool:
        """Images are Hermitian and obey the Pauli commutation relations."""
        n = self.n

        def commute(p, q):
            return (bin(p[1] & q[2]).count("1") + bin(p[2] & q[1]).count("1")) % 2 == 0

        if not all(is_hermitian(r) for r in self.rows):
            return False
        for a in range(2 * n):
            for b in range(a + 1, 2 * n):
                anti = b == a + n
                if commute(self.rows[a], self.rows[b]) == anti:
                    return False
        return True

    def key(self) -> tuple:
        return self.rows


# ------------------------------------------------------------- basis gates

def gate_tableau(name: str, qubits: tuple[int, ...], n: int) -> CliffordTableau:
    rows = list(CliffordTableau.identity(n).rows)
    if name == "cx":
        c, t = qubits
        rows[c] = (0, (1 << c) | (1 << t), 0)
        rows[n + t] = (0, 0, (1 << c) | (1 << t))
        return CliffordTableau(n, tuple(rows))
    (q,) = qubits
    b = 1 << q
    image = {
        "h": ((0, 0, b), (0, b, 0)),
        "s": ((1, b, b), (0, 0, b)),
        "sdg": ((3, b, b), (0, 0, b)),
        "x": ((0, b, 0), (2, 0, b)),
        "sx": ((0, b, 0), (3, b, b)),
    }[name]
    rows[q], rows[n + q] = image
    return CliffordTableau(n, tuple(rows))


def conj_bits(name: str, qubits: tuple[int, ...], x: int, z: int) -> tuple[int, int]:
    """Pauli (x, z) bits after conjugation by a basis gate, phase dropped."""
    if name == "cx":
        c, t = qubits
        x ^= (x >> c & 1) << t
        z ^= (z >> t & 1) << c
        return x, z
    (q,) = qubits
    xb, zb = x >> q & 1, z >> q & 1
    if name == "h":
        x ^= (xb ^ zb) << q
        z ^= (xb ^ zb) << q
    elif name in ("s", "sdg"):
        z ^= xb << q
    elif name == "sx":
        x ^= zb << q
    elif name != "x":
        raise ValueError(f"{name} is not a Clifford basis gate")
    return x, z


def circuit_tableau(gates, n: int) -> CliffordTableau:
    """Tableau of a sequence of ``(name, qubits)`` basis gates."""
    t = CliffordTableau.identity(n)
    for name, qubits in gates:
        t = t.then(gate_tableau(name, tuple(qubits), n))
    return t


# -------------------------------------------------- symplectic sampling
# Index-based enumeration of the symplectic group; vectors use the
# interleaved layout (x_0, z_0, x_1, z_1, ...).

def _inner(v: np.ndarray, w: np.ndarray) -> int:
    return int((v[0::2] @ w[1::2] + w[0::2] @ v[1::2]) % 2)


def _transvection(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v + _inner(k, v) * k) % 2


def _bits(i: int, n: int) -> np.ndarray:
    return np.array([(i >> j) & 1 for j in range(n)], dtype=np.int64)


def _find_transvection(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectors h1, h2 whose transvections carry x to y."""
    zero = np.zeros_like(x)
    if np.array_equal(x, y):
        return zero, zero
    if _inner(x, y) == 1:
        return (x + y) % 2, zero
    z = np.zeros_like(x)
    m = len(x) // 2
    for i in range(m):
        a = 2 * i
        if (x[a] + x[a + 1]) != 0 and (y[a] + y[a + 1]) != 0:
            z[a], z[a + 1] = (x[a] + y[a]) % 2, (x[a + 1] + y[a + 1]) % 2
            if z[a] + z[a + 1] == 0:
                z[a + 1] = 1
                if x[a] != x[a + 1]:
                    z[a] = 1
            return (x + z) % 2, (z + y) % 2
    for i in range(m):
        a = 2 * i
        if (x[a] + x[a + 1]) != 0 and (y[a] + y[a + 1]) == 0:
            if x[a] == x[a + 1]:
                z[a + 1] = 1
            else:
                z[a + 1], z[a] = x[a], x[a + 1]
            break
    for i in range(m):
        a = 2 * i
        if (x[a] + x[a + 1]) == 0 and (y[a] + y[a + 1]) != 0:
            if y[a] == y[a + 1]:
                z[a + 1] = 1
            else:
                z[a + 1], z[a] = y[a], y[a + 1]
            break
    return (x + z) % 2, (z + y) % 2


def symplectic_order(n: int) -> int:
    out = 1 << (n * n)
    for j in range(1, n + 1):
        out *= (1 << (2 * j)) - 1
    return out


def symplectic(i: int, n: int) -> np.ndarray:
    """The ``i``-th element (0 <= i < symplectic_order(n)) of Sp(2n, 2); row r is the image of basis vector r."""
    nn = 2 * n
    s = (1 << nn) - 1
    k = (i % s) + 1
    i //= s
    f1 = _bits(k, nn)
    e1 = np.zeros(nn, dtype=np.int64)
    e1[0] = 1
    t1, t2 = _find_transvection(e1, f1)
    bits = _bits(i % (1 << (nn - 1)), nn - 1)
    eprime = e1.copy()
    eprime[2:] = bits[1:]
    h0 = _transvection(t2, _transvection(t1, eprime))
    if bits[0] == 1:
        f1 = f1 * 0
    g = np.eye(nn, dtype=np.int64)
    if n > 1:
        g[2:, 2:] = symplectic(i >> (nn - 1), n - 1)
    for j in range(nn):
        row = g[j]
        for v in (t1, t2, h0, f1):
            row = _transvection(v, row)
        g[j] = row
    return g


def _from_symplectic(mat: np.ndarray, signs: int, n: int) -> CliffordTableau:
    images = []
    for r in range(2 * n):
        x = sum(int(mat[r, 2 * j]) << j for j in range(n))
        z = sum(int(mat[r, 2 * j + 1]) << j for j in range(n))
        e = bin(x & z).count("1") % 2 + 2 * (signs >> r & 1)
        images.append((e % 4, x, z))
    # interleaved rows are X_0, Z_0, X_1, Z_1, ...; reorder to X..., Z...
    return CliffordTableau(n, tuple(images[0::2]) + tuple(images[1::2]))


def clifford_from_index(i: int, n: int) -> CliffordTableau:
    """Bijection between ``range(GROUP_SIZE[n])`` and the n-qubit Clifford group (phases dropped)."""
    signs, sp = divmod(i, symplectic_order(n))
    return _from_symplectic(symplectic(sp, n), signs, n)


# ------------------------------------------------------ decomposition table

def _generators(n: int) -> list[tuple[str, tuple[int, ...]]]:
    out = [(g, (q,)) for q in range(n) for g in ("h", "s", "sdg", "x", "sx")]
    if n == 2:
        out += [("cx", (0, 1)), ("cx", (1, 0))]
    return out


CX_COST = 10


@lru_cache(maxsize=None)
def decomposition_table(n: int) -> dict[tuple, tuple[tuple[str, tuple[int, ...]], ...]]:
    """Cheapest basis-gate word for every n-qubit Clifford (cx cost 10, one-qubit gate cost 1)."""
    gens = [(g, q, gate_tableau(g, q, n)) for g, q in _generators(n)]
    start = CliffordTableau.identity(n)
    best = {start.key(): (0, ())}
    heap = [(0, 0, start.rows, ())]
    counter = 1
    done: dict[tuple, tuple] = {}
    while heap:
        cost, _, rows, word = heapq.heappop(heap)
        if rows in done:
            continue
        done[rows] = word
        t = CliffordTableau(n, rows)
        for g, q, gt in gens:
            nxt = t.then(gt)
            c = cost + (CX_COST if g == "cx" else 1)
            k = nxt.key()
            if k not in done and (k not in best or c < best[k][0]):
                best[k] = (c, word + ((g, q),))
                heapq.heappush(heap, (c, counter, k, word + ((g, q),)))
                counter += 1
    return done


def decompose(t: CliffordTableau) -> tuple[tuple[str, tuple[int, ...]], ...]:
    return decomposition_table(t.n)[t.key()]


def cx_count_distribution(n: int) -> dict[int, float]:
    """Fraction of the n-qubit Clifford group whose table word uses k cx gates."""
    table = decomposition_table(n)
    hist: dict[int, int] = {}
    for word in table.values():
        k = sum(1 for g, _ in word if g == "cx")
        hist[k] = hist.get(k, 0) + 1
    return {k: v / len(table) for k, v in sorted(hist.items())}


def random_clifford(n: int, rng: np.random.Generator | int | None = None):
    """Uniformly random n-qubit Clifford (n in {1, 2}) and a basis-gate word implementing it."""
    if n not in GROUP_SIZE:
        raise ValueError("only one- and two-qubit Cliffords are supported")
    rng = np.random.default_rng(rng)
    t = clifford_from_index(int(rng.integers(GROUP_SIZE[n])), n)
    return t, decompose(t)
