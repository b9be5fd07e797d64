"""JSON report layout, schema validation and deterministic serialization."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import jsonschema

from . import __version__
from .compose import ExecutionEstimate, compose_round, round_duration, schedule_asap
from .hardware import HardwareModel
from .layout import BatchPlan

SCHEMA_VERSION = "1.0"

_num = {"type": "number"}
_int = {"type": "integer"}
_str = {"type": "string"}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "tool", "command", "manifest", "device", "warnings"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "properties": {"name": _str, "version": _str},
        },
        "command": {"enum": ["compile", "simulate", "characterize", "sweep"]},
        "manifest": {"type": "object"},
        "device": {
            "type": "object",
            "required": ["name", "n_qubits", "sha256"],
            "properties": {"name": _str, "n_qubits": _int, "sha256": _str},
        },
        "warnings": {"type": "array", "items": _str},
        "plan": {
            "type": "object",
            "required": ["buffer", "rounds", "leftover"],
            "properties": {
                "buffer": _int,
                "allow_exact_fit": {"type": "boolean"},
                "leftover": {"type": "array", "items": _str},
                "rounds": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["index", "members", "used_qubits", "duration_dt"],
                        "properties": {
                            "index": _int,
                            "used_qubits": _int,
                            "duration_dt": _int,
                            "members": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "required": ["name", "layout"],
                                    "properties": {"name": _str, "layout": {"type": "array", "items": _int}},
                                },
                            },
                        },
                    },
                },
            },
        },
        "estimate": {
            "type": "object",
            "required": ["round_durations_dt", "total_duration_dt", "round_usage", "mean_usage"],
            "properties": {
                "round_durations_dt": {"type": "array", "items": _int},
                "total_duration_dt": _int,
                "total_duration_with_shots_dt": _int,
                "round_usage": {"type": "array", "items": _num},
                "mean_usage": _num,
            },
        },
        "simulation": {
            "type": "object",
            "required": ["shots", "seed", "noise", "members", "mean_pst", "skipped"],
            "properties": {
                "shots": _int,
                "seed": _int,
                "noise": {"type": "object"},
                "mean_pst": {"type": ["number", "null"]},
                "members": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["round", "name", "pst", "ideal"],
                        "properties": {
                            "round": _int,
                            "name": _str,
                            "pst": {"type": "number", "minimum": 0, "maximum": 1},
                            "ideal": {"type": "array", "items": _str},
                        },
                    },
                },
                "skipped": {"type": "array", "items": {"type": "object"}},
            },
        },
        "characterization": {
            "type": "object",
            "required": ["targets", "eps_rb", "eps_simrb", "cv_rb", "cv_simrb", "ct"],
        },
        "sweep": {
            "type": "object",
            "required": ["points", "gain"],
            "properties": {
                "points": {"type": "array", "items": {"type": "object"}},
                "gain": {"type": "object"},
                "crosstalk": {"type": "object"},
            },
        },
    },
}


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def device_section(h: HardwareModel) -> dict:
    doc = json.dumps(h.to_document(), sort_keys=True)
    return {"name": h.name, "n_qubits": h.n_qubits, "sha256": sha256_text(doc)}


def plan_section(plan: BatchPlan, h: HardwareModel) -> dict:
    rounds = []
    for i, r in enumerate(plan.rounds):
        cr = compose_round(r, h)
        rounds.append({
            "index": i,
            "used_qubits": r.used_qubits,
            "duration_dt": round_duration(schedule_asap(cr, h)),
            "members": [
                {"name": m.name, "layout": list(m.layout.physical), "clbits": [m.clbits.start, m.clbits.stop]}
                for m in cr.members
            ],
        })
    return {
        "buffer": plan.buffer,
        "allow_exact_fit": plan.allow_exact_fit,
        "rounds": rounds,
        "leftover": [c.name for c in plan.leftover],
    }


def estimate_section(est: ExecutionEstimate) -> dict:
    return est.to_dict()


def new_report(command: str, manifest: dict, h: HardwareModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "qmpack", "version": __version__},
        "command": command,
        "manifest": manifest,
        "device": device_section(h),
        "warnings": [],
    }


def validate(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: dict, out_dir: Path, name: str = "report.json") -> Path:
    validate(report)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(dumps(report), encoding="utf-8")
    return path
