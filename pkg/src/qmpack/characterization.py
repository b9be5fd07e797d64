"""Randomized benchmarking, simultaneous RB and crosstalk-presence metrics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import CircuitIR, GateOp
from .clifford import CliffordTableau, cx_count_distribution, decompose, random_clifford
from .compose import ComposedRound, Member
from .hardware import HardwareModel
from .layout import LayoutMap
from .simulator import NoiseModel, simulate_round

Target = tuple[int, ...]


@dataclass(frozen=True)
class RBConfig:
    lengths: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    samples: int = 5
    shots: int = 1024
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(sorted(set(int(m) for m in self.lengths))))
        if len(self.lengths) < 3:
            raise ValueError("RB needs at least three distinct sequence lengths")
        if self.lengths[0] < 1:
            raise ValueError("sequence lengths must be >= 1")
        if self.samples < 1 or self.shots < 1:
            raise ValueError("samples and shots must be >= 1")


# ------------------------------------------------------------------ sequences

Word = tuple[tuple[str, tuple[int, ...]], ...]


def rb_words(n: int, m: int, rng: np.random.Generator) -> list[Word]:
    """Gate words of ``m`` random Cliffords followed by the one undoing them all."""
    if m < 1:
        raise ValueError("sequence length must be >= 1")
    total = CliffordTableau.identity(n)
    words = []
    for _ in range(m):
        t, w = random_clifford(n, rng)
        total = total.then(t)
        words.append(w)
    words.append(decompose(total.inverse()))
    return words


def _rb_circuit(words: list[Word], n: int, name: str) -> CircuitIR:
    gates = []
    for w in words:
        gates += [GateOp(g, q) for g, q in w]
        gates.append(GateOp("barrier", tuple(range(n))))
    gates += [GateOp("measure", (q,), clbit=q) for q in range(n)]
    return CircuitIR(n, n, tuple(gates), name)


def gen_rb_circuit(target: Sequence[int], m: int, seed) -> tuple[CircuitIR, str]:
    """RB sequence of length ``m`` on a qubit or pair; the noiseless outcome is all zeros."""
    n = len(target)
    words = rb_words(n, m, np.random.default_rng(seed))
    name = f"rb_{'-'.join(map(str, target))}_m{m}"
    return _rb_circuit(words, n, name), "0" * n


def aligned_round(targets: Sequence[Target], words: Sequence[list[Word]], h: HardwareModel) -> ComposedRound:
    """All targets' sequences in one round, Clifford layers separated by a common barrier.

    The shared barrier keeps layer ``j`` of every target in the same time
    slot, so their cx gates overlap as much as the sequences allow.
    """
    everyone = tuple(sorted(q for t in targets for q in t))
    gates: list[GateOp] = []
    spans: list[list[int]] = [[] for _ in targets]
    for j in range(len(words[0])):
        for i, t in enumerate(targets):
            for g, q in words[i][j]:
                spans[i].append(len(gates))
                gates.append(GateOp(g, tuple(t[k] for k in q)))
        gates.append(GateOp("barrier", everyone))
    offset = 0
    members = []
    for i, t in enumerate(targets):
        for k, q in enumerate(t):
            spans[i].append(len(gates))
            gates.append(GateOp("measure", (q,), clbit=offset + k))
        local = _rb_circuit(words[i], len(t), f"rb_{'-'.join(map(str, t))}")
        members.append(Member(local.name, LayoutMap(tuple(t)), range(offset, offset + len(t)),
                              tuple(spans[i]), local))
        offset += len(t)
    return ComposedRound(CircuitIR(h.n_qubits, offset, tuple(gates), "rb_round"), tuple(members))


# ------------------------------------------------------------------- fitting

@dataclass(frozen=True)
class DecayFit:
    A: float
    alpha: float
    B: float
    residual: float
    ok: bool


def _project(theta: np.ndarray) -> np.ndarray:
    a, alpha, b = theta
    return np.array([a, min(max(alpha, 1e-9), 1.0), min(max(b, 0.0), 1.0)])


def fit_decay(lengths: Sequence[float], survival: Sequence[float], max_iter: int = 200) -> DecayFit:
    """Least-squares fit of ``A * alpha**m + B`` with damped Gauss-Newton steps.

    Starts from A = max - min, B = min and alpha from a log-linear fit of
    the data above B; alpha is kept in (0, 1] and B in [0, 1].
    """
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(survival, dtype=float)
    a0, b0 = float(y.max() - y.min()), float(y.min())
    increasing = y[np.argmax(m)] > y[np.argmin(m)] + 1e-12
    if a0 <= 1e-12:
        return DecayFit(0.0, 1.0, b0, 0.0, True)
    above = y - b0 > 1e-9
    if above.sum() >= 2:
        slope = np.polyfit(m[above], np.log(y[above] - b0), 1)[0]
        alpha0 = min(max(math.exp(slope), 1e-3), 1.0)
    else:
        alpha0 = 0.5

    def resid(th):
        return th[0] * th[1] ** m + th[2] - y

    def jac(th):
        return np.stack([th[1] ** m, th[0] * m * th[1] ** (m - 1), np.ones_like(m)], axis=1)

    theta = _project(np.array([a0, alpha0, b0]))
    r = resid(theta)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        J = jac(theta)
        JtJ = J.T @ J
        g = J.T @ r
        step_taken = False
        while lam < 1e12:
            lhs = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-12))
            try:
                delta = np.linalg.solve(lhs, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = _project(theta + delta)
            rt = resid(trial)
            ct = float(rt @ rt)
            if ct <= cost:
                done = cost - ct <= 1e-15 * max(cost, 1e-30) or np.max(np.abs(trial - theta)) < 1e-12
                theta, r, cost = trial, rt, ct
                lam = max(lam / 10, 1e-12)
                step_taken = True
                break
            lam *= 10
        if not step_taken or done:
            converged = True
            break
    return DecayFit(float(theta[0]), float(theta[1]), float(theta[2]), cost, converged and not increasing)


def epc_from_alpha(alpha: float, n: int) -> float:
    """Error per Clifford for the depolarizing decay parameter."""
    d = 2 ** n
    return (d - 1) / d * (1 - alpha)


def cx_error_from_alpha(alpha: float) -> float:
    """Per-cx uniform Pauli error that yields two-qubit decay ``alpha`` when only cx gates are noisy.

    A uniform 15-Pauli error with probability p depolarizes with
    parameter a = 1 - 16 p / 15; a Clifford whose word has k cx gates
    decays by a**k, averaged over the word table's cx distribution.
    """
    dist = cx_count_distribution(2)

    def mean_decay(a):
        return sum(w * a ** k for k, w in dist.items())

    lo, hi = 0.0, 1.0
    if alpha >= 1:
        return 0.0
    for _ in range(100):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if mean_decay(mid) < alpha else (lo, mid)
    return 15 / 16 * (1 - (lo + hi) / 2)


# --------------------------------------------------------------------- RB runs

@dataclass
class RBResult:
    target: Target
    lengths: tuple[int, ...]
    survival: list[list[float]]  # [length][sample]
    A: float
    alpha: float
    B: float
    epc: float
    residual: float
    ok: bool

    @property
    def mean_survival(self) -> list[float]:
        return [float(np.mean(s)) for s in self.survival]

    @property
    def cx_error(self) -> float | None:
        return cx_error_from_alpha(self.alpha) if len(self.target) == 2 else None

    def to_dict(self) -> dict:
        return {
            "target": list(self.target),
            "A": self.A, "alpha": self.alpha, "B": self.B,
            "epc": self.epc, "residual": self.residual, "ok": self.ok,
            "lengths": list(self.lengths), "mean_survival": self.mean_survival,
        }


def _check_disjoint(targets: Sequence[Target]):
    seen: set[int] = set()
    for t in targets:
        if len(set(t)) != len(t) or seen.intersection(t):
            raise ValueError(f"targets overlap: {targets}")
        seen |= set(t)


def _sim_seed(seed: int, li: int, s: int) -> int:
    return int(np.random.SeedSequence([seed, li, s]).generate_state(1)[0])


def run_rb(targets: Sequence[Sequence[int]], simultaneous: bool, cfg: RBConfig, nm: NoiseModel,
           h: HardwareModel | None = None, target_ids: Sequence[int] | None = None) -> list[RBResult]:
    """RB (each target alone) or SimRB (all targets in one aligned round) per target.

    Simultaneous targets must be pairwise disjoint.

    ``target_ids`` name the random streams of each target; a target keeps
    its sequences and noise draws across isolated and simultaneous runs
    when its id is the same, which makes the two directly comparable.
    """
    targets = [tuple(t) for t in targets]
    if simultaneous:
        _check_disjoint(targets)
    h = h or nm.hardware
    for t in targets:
        if len(t) == 2 and t[1] not in h.adjacency[t[0]]:
            raise ValueError(f"target {t} is not a coupler of {h.name}")
    ids = list(range(len(targets))) if target_ids is None else list(target_ids)
    surv = [[[0.0] * cfg.samples for _ in cfg.lengths] for _ in targets]
    for li, m in enumerate(cfg.lengths):
        for s in range(cfg.samples):
            words = [rb_words(len(t), m, np.random.default_rng([cfg.seed, ids[i], li, s]))
                     for i, t in enumerate(targets)]
            groups = [list(range(len(targets)))] if simultaneous else [[i] for i in range(len(targets))]
            for grp in groups:
                cr = aligned_round([targets[i] for i in grp], [words[i] for i in grp], h)
                counts = simulate_round(cr, nm, cfg.shots, _sim_seed(cfg.seed, li, s),
                                        stream_ids=[ids[i] for i in grp])
                for k, i in enumerate(grp):
                    surv[i][li][s] = counts.counts[k].get("0" * len(targets[i]), 0) / cfg.shots
    out = []
    for i, t in enumerate(targets):
        fit = fit_decay(cfg.lengths, [float(np.mean(x)) for x in surv[i]])
        out.append(RBResult(t, cfg.lengths, surv[i], fit.A, fit.alpha, fit.B,
                            epc_from_alpha(fit.alpha, len(t)), fit.residual, fit.ok))
    return out


# -------------------------------------------------------------- metrics

@dataclass
class CharacterizationReport:
    targets: list[Target]
    eps_rb: list[float]
    eps_simrb: list[float]
    mu_rb: float
    sigma_rb: float
    mu_simrb: float
    sigma_simrb: float
    cv_rb: float
    cv_simrb: float
    ct: float
    rb: list[RBResult] = field(default_factory=list)
    simrb: list[list[RBResult]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "targets": [list(t) for t in self.targets],
            "eps_rb": self.eps_rb, "eps_simrb": self.eps_simrb,
            "mu_rb": self.mu_rb, "sigma_rb": self.sigma_rb,
            "mu_simrb": self.mu_simrb, "sigma_simrb": self.sigma_simrb,
            "cv_rb": self.cv_rb, "cv_simrb": self.cv_simrb, "ct": self.ct,
        }

    def survival_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["target", "length", "sample", "survival"])
        for mode, results in [("rb", self.rb)] + [(f"simrb{k}", r) for k, r in enumerate(self.simrb)]:
            for r in results:
                label = f"{'-'.join(map(str, r.target))}@{mode}"
                for m, row in zip(r.lengths, r.survival):
                    for s, v in enumerate(row):
                        w.writerow([label, m, s, v])
        return buf.getvalue()


def coefficient_of_variation(values: Sequence[float]) -> tuple[float, float, float]:
    """(mean, population standard deviation, sigma / mu)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty error-rate list")
    mu = float(v.mean())
    if mu <= 0:
        raise ValueError("coefficient of variation is undefined for a non-positive mean")
    sigma = float(v.std())
    return mu, sigma, sigma / mu


def crosstalk_presence(isolated: Sequence[float], simultaneous: Sequence[float],
                       targets: Sequence[Target] | None = None) -> CharacterizationReport:
    if len(isolated) != len(simultaneous):
        raise ValueError("isolated and simultaneous lists must cover the same targets")
    mu_r, sd_r, cv_r = coefficient_of_variation(isolated)
    mu_s, sd_s, cv_s = coefficient_of_variation(simultaneous)
    targets = list(targets) if targets is not None else [(i,) for i in range(len(isolated))]
    return CharacterizationReport(targets, list(map(float, isolated)), list(map(float, simultaneous)),
                                  mu_r, sd_r, mu_s, sd_s, cv_r, cv_s, cv_s - cv_r)


def gain(pst_by_buffer: Mapping[int, Sequence[float]]) -> float:
    """Best improvement of mean PST of a buffered layout (d = 2 or 3) over the dense one (d = 0)."""
    if 0 not in pst_by_buffer:
        raise ValueError("gain needs PST values for buffer 0")
    buffered = [d for d in (2, 3) if d in pst_by_buffer]
    if not buffered:
        raise ValueError("gain needs PST values for buffer 2 or 3")
    base = float(np.mean(pst_by_buffer[0]))
    return max(float(np.mean(pst_by_buffer[d])) - base for d in buffered)


def matching_patterns(h: HardwareModel) -> list[list[tuple[int, int]]]:
    """Split every coupler into groups of pairwise disjoint couplers (greedy, in edge order)."""
    patterns: list[list[tuple[int, int]]] = []
    used: list[set[int]] = []
    for e in h.edges:
        for pat, busy in zip(patterns, used):
            if e[0] not in busy and e[1] not in busy:
                pat.append(e)
                busy.update(e)
                break
        else:
            patterns.append([e])
            used.append(set(e))
    return patterns


def characterize(h: HardwareModel, nm: NoiseModel, cfg: RBConfig,
                 patterns: Sequence[Sequence[Sequence[int]]] | None = None) -> CharacterizationReport:
    """Isolated RB on every target, SimRB per pattern, averaged per target, then ct."""
    patterns = [[tuple(t) for t in p] for p in (patterns or matching_patterns(h))]
    targets = sorted({t for p in patterns for t in p})
    index = {t: i for i, t in enumerate(targets)}
    rb = run_rb(targets, False, cfg, nm, h, target_ids=list(range(len(targets))))
    sims: dict[Target, list[float]] = {t: [] for t in targets}
    simrb = []
    for p in patterns:
        res = run_rb(p, True, cfg, nm, h, target_ids=[index[t] for t in p])
        simrb.append(res)
        for r in res:
            sims[r.target].append(r.epc)
    report = crosstalk_presence([r.epc for r in rb], [float(np.mean(sims[t])) for t in targets], targets)
    report.rb, report.simrb = rb, simrb
    return report
