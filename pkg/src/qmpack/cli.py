"""Command line entry point: ``qmpack compile|simulate|characterize|sweep``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .benchmarks import workload
from .characterization import RBConfig, characterize, matching_patterns
from .circuit import CircuitIR
from .compose import compose_round, estimate, export_round
from .hardware import PRESETS, CalibrationError, HardwareModel, load_calibration
from .layout import physical_distance_layout
from .pipeline import buffer_sweep, simulate_plan, sweep_gain
from .qasm import QasmError, load_qasm
from .report import estimate_section, new_report, plan_section, write_report
from .simulator import NoiseModel

log = logging.getLogger("qmpack")

DEFAULT_SHOTS = 8192


class UsageError(Exception):
    """Bad manifest values; reported on stderr with exit status 2."""


@dataclass
class RunManifest:
    command: str
    device: str
    circuits: list[str] = field(default_factory=list)
    workload: int | None = None
    buffer: int = 0
    shots: int = DEFAULT_SHOTS
    seed: int | None = None
    gamma: float = 3.0
    hop_threshold: int = 1
    idle_rate: float = 0.0
    allow_exact_fit: bool = False
    noiseless: bool = False
    buffers: list[int] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    gammas: list[float] = field(default_factory=list)
    lengths: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64])
    samples: int = 5
    targets: list[list[list[int]]] = field(default_factory=list)

    def check(self):
        if self.buffer < 0 or any(d < 0 for d in self.buffers):
            raise UsageError("buffer distances must be >= 0")
        if self.shots < 1:
            raise UsageError("--shots must be >= 1")
        if self.gamma < 1 or any(g < 1 for g in self.gammas):
            raise UsageError("--gamma must be >= 1")
        if self.device not in PRESETS and not Path(self.device).is_file():
            raise UsageError(f"device file {self.device} does not exist")
        for c in self.circuits:
            if not Path(c).exists():
                raise UsageError(f"circuit path {c} does not exist")
        for pattern in self.targets:
            qubits = [q for t in pattern for q in t]
            if len(qubits) != len(set(qubits)):
                raise UsageError(f"targets overlap in pattern {pattern}")

    def echo(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown manifest fields: {sorted(unknown)}")
        return cls(**doc)


# ------------------------------------------------------------------ inputs

def _circuit_files(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        files += sorted(p.glob("*.qasm")) if p.is_dir() else [p]
    return files


def resolve_circuits(m: RunManifest) -> list[CircuitIR]:
    if m.workload is not None:
        return workload(m.workload, 0 if m.seed is None else m.seed)
    files = _circuit_files(m.circuits)
    if not files:
        raise UsageError("no input circuits")
    out = []
    diagnostics = []
    for f in files:
        try:
            out.append(load_qasm(f).with_name(f.stem))
        except QasmError as exc:
            diagnostics += exc.diagnostics
    if diagnostics:
        raise QasmError(diagnostics)
    return out


def _noise(m: RunManifest, h: HardwareModel, gamma: float | None = None) -> NoiseModel:
    if m.noiseless:
        return NoiseModel.noiseless(h)
    return NoiseModel(h, m.gamma if gamma is None else gamma, m.hop_threshold, m.idle_rate)


def _seed(m: RunManifest) -> int:
    return 0 if m.seed is None else m.seed


# ---------------------------------------------------------------- commands

def cmd_compile(m: RunManifest, out: Path, h: HardwareModel) -> dict:
    queue = resolve_circuits(m)
    plan = physical_distance_layout(queue, h, m.buffer, m.allow_exact_fit)
    report = new_report("compile", m.echo(), h)
    report["plan"] = plan_section(plan, h)
    report["estimate"] = estimate_section(estimate(plan, h, m.shots))
    report["warnings"] += plan.warnings
    rounds_dir = out / "rounds"
    rounds_dir.mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(plan.rounds):
        src, side = export_round(compose_round(r, h))
        (rounds_dir / f"round_{i:03d}.qasm").write_text(src.text, encoding="utf-8")
        (rounds_dir / f"round_{i:03d}.json").write_text(side + "\n", encoding="utf-8")
    return report


def cmd_simulate(m: RunManifest, out: Path, h: HardwareModel) -> dict:
    queue = resolve_circuits(m)
    plan = physical_distance_layout(queue, h, m.buffer, m.allow_exact_fit)
    nm = _noise(m, h)
    run = simulate_plan(plan, nm, m.shots, _seed(m))
    report = new_report("simulate", m.echo(), h)
    report["plan"] = plan_section(plan, h)
    report["estimate"] = estimate_section(run.estimate)
    members = []
    csv_rows = ["round,member,bitstring,count"]
    for ri, rep in zip(run.round_indices, run.rounds):
        for name, p, ideal, counts in zip(rep.names, rep.pst, rep.ideal, rep.counts.counts):
            members.append({"round": ri, "name": name, "pst": p, "ideal": sorted(ideal)})
            csv_rows += [f"{ri},{name},{s},{n}" for s, n in sorted(counts.items())]
    report["simulation"] = {
        "shots": m.shots,
        "seed": _seed(m),
        "noise": dict(nm.params(), noiseless=m.noiseless),
        "members": members,
        "mean_pst": run.mean_pst if members else None,
        "skipped": run.skipped,
    }
    report["warnings"] += plan.warnings + [f"skipped {s['member']}: {s['reason']}" for s in run.skipped]
    out.mkdir(parents=True, exist_ok=True)
    (out / "counts.csv").write_text("\n".join(csv_rows) + "\n", encoding="utf-8")
    return report


def _patterns(m: RunManifest, h: HardwareModel):
    if m.targets:
        return [[tuple(t) for t in p] for p in m.targets]
    return matching_patterns(h)


def cmd_characterize(m: RunManifest, out: Path, h: HardwareModel) -> dict:
    cfg = RBConfig(tuple(m.lengths), m.samples, m.shots, _seed(m))
    rep = characterize(h, _noise(m, h), cfg, _patterns(m, h))
    report = new_report("characterize", m.echo(), h)
    report["characterization"] = dict(rep.to_dict(), rb=[r.to_dict() for r in rep.rb])
    out.mkdir(parents=True, exist_ok=True)
    (out / "survival.csv").write_text(rep.survival_csv(), encoding="utf-8")
    return report


def cmd_sweep(m: RunManifest, out: Path, h: HardwareModel) -> dict:
    if m.seed is None and not m.seeds:
        raise UsageError("sweep needs an explicit --seed or --seeds")
    buffers = m.buffers or [m.buffer]
    if len(set(buffers)) < 2 or 0 not in buffers:
        raise UsageError("sweep needs at least two --buffers values including 0")
    seeds = m.seeds or [m.seed]
    gammas = m.gammas or [m.gamma]
    queue = resolve_circuits(m)
    points, gains, crosstalk = [], {}, {}
    rows = ["gamma,buffer,seed,mean_pst,rounds,total_duration_dt,mean_usage"]
    for g in gammas:
        pts = buffer_sweep(queue, h, buffers, seeds, g, m.shots, m.hop_threshold, m.idle_rate, m.allow_exact_fit)
        points += [asdict(p) for p in pts]
        rows += [f"{p.gamma},{p.buffer},{p.seed},{p.mean_pst!r},{p.rounds},{p.total_duration},{p.mean_usage!r}"
                 for p in pts]
        has_gain_levels = any(d in buffers for d in (2, 3))
        if has_gain_levels:
            gains[repr(g)] = sweep_gain(pts)
        if len(gammas) > 1:
            cfg = RBConfig(tuple(m.lengths), m.samples, min(m.shots, 1024), seeds[0])
            crosstalk[repr(g)] = characterize(h, NoiseModel(h, g, m.hop_threshold, m.idle_rate), cfg,
                                              _patterns(m, h)).ct
    report = new_report("sweep", m.echo(), h)
    report["sweep"] = {"points": points, "gain": gains}
    if crosstalk:
        report["sweep"]["crosstalk"] = crosstalk
        scatter = ["gamma,ct,g"] + [f"{g},{crosstalk[g]!r},{gains.get(g)!r}" for g in crosstalk]
        out.mkdir(parents=True, exist_ok=True)
        (out / "scatter.csv").write_text("\n".join(scatter) + "\n", encoding="utf-8")
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return report


COMMANDS = {"compile": cmd_compile, "simulate": cmd_simulate, "characterize": cmd_characterize, "sweep": cmd_sweep}


# ------------------------------------------------------------------ parsing

def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _targets(text: str) -> list[list[list[int]]]:
    """'0-1,2-3;4-5' -> [[[0, 1], [2, 3]], [[4, 5]]]"""
    return [[[int(q) for q in t.split("-")] for t in pat.split(",") if t] for pat in text.split(";") if pat]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmpack", description="Multi-programming compiler and noise evaluation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--manifest", type=Path, help="re-run from a manifest or a previous report")
        p.add_argument("--device", help=f"calibration file or preset ({', '.join(sorted(PRESETS))})")
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--hop-threshold", type=int)
        p.add_argument("--idle-rate", type=float)
        p.add_argument("--noiseless", action="store_true", default=None)
        if name != "characterize":
            p.add_argument("--circuits", nargs="+", help="QASM files or directories")
            p.add_argument("--workload", type=int, help="draw N circuits from the bundled benchmarks")
            p.add_argument("--buffer", type=int)
            p.add_argument("--allow-exact-fit", action="store_true", default=None)
        if name in ("characterize", "sweep"):
            p.add_argument("--lengths", type=_int_list)
            p.add_argument("--samples", type=int)
            p.add_argument("--targets", type=_targets, help="SimRB patterns, e.g. '0-1,2-3;4-5,6-7'")
        if name == "sweep":
            p.add_argument("--buffers", type=_int_list)
            p.add_argument("--seeds", type=_int_list)
            p.add_argument("--gammas", type=_float_list)
    return parser


_FLAG_FIELDS = ("device", "circuits", "workload", "buffer", "shots", "seed", "gamma", "hop_threshold",
                "idle_rate", "allow_exact_fit", "noiseless", "buffers", "seeds", "gammas", "lengths",
                "samples", "targets")


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    base: dict = {}
    if args.manifest is not None:
        doc = json.loads(args.manifest.read_text(encoding="utf-8"))
        base = dict(doc.get("manifest", doc))
        if base.get("command", args.command) != args.command:
            raise UsageError(f"manifest is for '{base['command']}', not '{args.command}'")
    base["command"] = args.command
    for key in _FLAG_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            base[key] = [str(Path(c).resolve()) for c in value] if key == "circuits" else value
    if "device" not in base:
        raise UsageError("--device is required")
    if base["device"] not in PRESETS:
        base["device"] = str(Path(base["device"]).resolve())
    if base.get("circuits") is None:
        base["circuits"] = []
    if args.command != "characterize" and not base["circuits"] and base.get("workload") is None:
        raise UsageError("give --circuits or --workload")
    m = RunManifest.from_dict(base)
    m.check()
    return m


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        m = manifest_from_args(args)
        h = load_calibration(m.device)
        report = COMMANDS[m.command](m, args.out, h)
        path = write_report(report, args.out)
    except UsageError as exc:
        print(f"qmpack: error: {exc}", file=sys.stderr)
        return 2
    except QasmError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return 1
    except (CalibrationError, ValueError, OSError) as exc:
        print(f"qmpack: error: {exc}", file=sys.stderr)
        return 1
    for w in report["warnings"]:
        log.warning(w)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
