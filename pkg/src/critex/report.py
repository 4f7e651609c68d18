"""Structured, byte-reproducible JSON reports and CSV sidecars."""

from __future__ import annotations

import json
import math

import numpy as np

from .sampling import global_seed

__all__ = ["FORMAT_VERSION", "build_report", "render_json", "write_trajectory_csv"]

FORMAT_VERSION = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return repr(obj)


def build_report(command: str, config_echo: dict, sections: dict,
                 tolerances: dict | None = None) -> dict:
    """Reports are byte-identical across runs for identical inputs: fixed
    seed, fixed reduction orders, sorted keys, no timestamps."""
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "seed": global_seed(),
        "config": _jsonable(config_echo),
        "tolerances": _jsonable(tolerances or {}),
        "sections": _jsonable(sections),
    }


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_trajectory_csv(traj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("r,v,dv_dr\n")
        for r, v, dv in zip(traj.r, traj.v, traj.dv_dr):
            fh.write(f"{float(r)!r},{float(v)!r},{float(dv)!r}\n")
