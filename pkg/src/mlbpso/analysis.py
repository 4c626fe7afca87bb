"""Post-processing of campaign fronts and KPI reports."""
from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .mopso import ParetoArchive, hypervolume
from .sim import KpiReport


def merge_fronts(fronts: dict[str, list[dict]]) -> list[dict]:
    """Non-dominated union of several labelled fronts, in input order."""
    archive = ParetoArchive()
    tagged = {}
    for label, rows in fronts.items():
        for row in rows:
            if archive.insert(row["params"], row["objectives"]):
                tagged[tuple(row["objectives"])] = row.get("label", label)
    return [{"label": tagged[f], "objectives": f, "params": p} for p, f in archive.entries]


def shared_reference(fronts: dict[str, list[dict]], margin: float = 0.01) -> tuple[float, float]:
    """Componentwise worst point of all fronts, pushed out by ``margin`` of its magnitude."""
    pts = np.array([r["objectives"] for rows in fronts.values() for r in rows], dtype=float)
    if pts.size == 0:
        raise InvalidInputError("no front points to derive a reference from")
    worst = pts.min(axis=0)
    return tuple(float(w - margin * max(abs(w), 1e-12)) for w in worst)


def compare_fronts(fronts: dict[str, list[dict]], reference=None) -> tuple[list[dict], tuple]:
    ref = tuple(reference) if reference is not None else shared_reference(fronts)
    table = []
    for label, rows in fronts.items():
        pts = [r["objectives"] for r in rows]
        table.append({"label": label, "n_points": len(pts),
                      "hypervolume": hypervolume(pts, ref) if pts else 0.0})
    return table, ref


def summarize_reports(reports: list[KpiReport], high: float = 0.9, low: float = 0.1) -> dict:
    """Load spread, load tails, ping-pong rate and P_access with a 95% CI."""
    if not reports:
        raise ValueError("no KPI reports to summarize")
    loads = np.mean([r.mean_loads for r in reports], axis=0)
    pacc = np.array([r.p_access for r in reports])
    thr = np.array([r.throughput_bps for r in reports])
    n = len(reports)
    half = 1.96 * pacc.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    handovers = sum(r.handovers for r in reports)
    pingpongs = sum(r.pingpongs for r in reports)
    return {
        "n_reports": n,
        "n_cells": len(loads),
        "load_mean": float(loads.mean()),
        "load_std": float(loads.std()),
        "cells_load_above_high": int(np.sum(loads > high)),
        "cells_load_below_low": int(np.sum(loads < low)),
        "handovers": int(handovers),
        "pingpongs": int(pingpongs),
        "pingpong_rate": pingpongs / handovers if handovers else 0.0,
        "throughput_mean_bps": float(thr.mean()),
        "p_access_mean": float(pacc.mean()),
        "p_access_ci_low": float(pacc.mean() - half),
        "p_access_ci_high": float(pacc.mean() + half),
        "p_access_ci_width": float(2 * half),
    }
