"""Command-line entry point: ``mlbpso <subcommand> ...``.

Exit codes: 0 success, 2 usage/configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import tables
from .analysis import compare_fronts, merge_fronts, summarize_reports
from .control import (DISABLED, DynamicSampler, FixedController, HmSurface,
                      constant_hm_matrix, sample_hm_matrix)
from .errors import ConfigurationError, InvalidInputError, SimulationError
from .harness import CampaignConfig, run_campaign
from .scenario import Scenario, generate_layout
from .sim import KpiReport, SimConfig, run

log = logging.getLogger("mlbpso")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_scenario(args) -> int:
    params = _load_json(args.config) if args.config else {}
    for key in ("sites", "isd_min", "isd_max", "clustering", "margin"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        sc = generate_layout(int(params.get("sites", 15)),
                             isd_min_km=float(params.get("isd_min", 1.5)),
                             isd_max_km=float(params.get("isd_max", 2.0)),
                             seed=int(params.get("seed", 0)),
                             clustering=float(params.get("clustering", 0.0)),
                             margin_km=params.get("margin"))
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from exc
    path = _outdir(args) / "scenario.json"
    sc.save(path)
    log.info("wrote %s (%d cells)", path, sc.n_cells)
    return EXIT_OK


def build_controller(block: dict, scenario: Scenario, hm0: float = 6.0):
    """Controller from a ``controller`` block of a simulate config.

    Types: ``flat`` (``hm``), ``disabled``, ``static`` (``surface``,
    ``params``, ``loads``) and ``dynamic`` (``surface``, ``params``,
    ``period``). Optional ``hm_min``/``hm_max`` clamp bounds.
    """
    n = scenario.n_cells
    kind = block.get("type", "flat")
    bounds = {k: block[k] for k in ("hm_min", "hm_max") if k in block}
    if kind == "flat":
        return FixedController(constant_hm_matrix(n, block.get("hm", hm0)))
    if kind == "disabled":
        return FixedController(np.full((n, n), DISABLED))
    if kind in ("static", "dynamic"):
        surface = HmSurface(block["surface"], block["params"], **bounds)
        if kind == "static":
            loads = block.get("loads")
            if loads is None or len(loads) != n:
                raise ConfigurationError("static controller needs a per-cell 'loads' list")
            return FixedController(sample_hm_matrix(surface, loads))
        return DynamicSampler(surface, block.get("period", 5.0), hm0,
                              initial_loads=block.get("initial_loads"))
    raise ConfigurationError(f"controller.type: unknown {kind!r}")


def _scenario_from(cfg: dict, base: Path) -> Scenario:
    sc = cfg.get("scenario")
    if isinstance(sc, str):
        path = Path(sc) if Path(sc).is_absolute() else base / sc
        if not path.exists():
            raise UsageError(f"scenario file not found: {path}")
        return Scenario.load(path)
    if isinstance(sc, dict):
        return Scenario.from_dict(sc)
    raise UsageError("config needs a 'scenario' path or object")


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    scenario = _scenario_from(cfg, Path(args.config).parent)
    sim_cfg = SimConfig.from_dict(cfg.get("sim", {}))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    label = args.label or cfg.get("label", "simulation")
    controller = build_controller(cfg.get("controller", {}), scenario, cfg.get("hm0", 6.0))
    report = run(scenario, controller, sim_cfg, seed)
    out = _outdir(args)
    (out / "kpi.json").write_text(report.dumps())
    tables.write_loads(out / "loads.csv", report.mean_loads, label)
    tables.write_histogram(out / "load_histogram.csv", report.mean_loads, tables.LOAD_BINS, label)
    tables.write_hm_best(out / "hm_best_neighbor.csv", report.hm_best_neighbor, label)
    tables.write_histogram(out / "hm_histogram.csv", [e["hm"] for e in report.hm_best_neighbor],
                           tables.HM_BINS, label)
    log.info("%s: throughput %.3f Mbit/s, P_access %.4f", label,
             report.throughput_bps / 1e6, report.p_access)
    return EXIT_OK


def cmd_optimize(args) -> int:
    raw = _load_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.label:
        raw["label"] = args.label
    config = CampaignConfig.from_dict(raw, base_dir=Path(args.config).parent)
    result = run_campaign(config)
    out = _outdir(args)
    name = config.name
    tables.write_archive(out / "baseline.csv", [((config.hm0,), result.baseline.objectives)],
                         "planning")
    (out / "baseline_kpi.json").write_text(result.baseline.reports[0].dumps())
    if result.swarm is not None:
        tables.write_archive(out / "archive.csv", result.archive.entries, name)
        tables.write_eval_log(out / "evaluations.csv", result.swarm.log)
        tables.write_archive_history(out / "archive_history.csv", result.swarm.archive_history)
    summary = {"label": name, "mode": config.mode, "evaluations": result.n_evaluations,
               "iterated_evaluations": result.n_iterated_evaluations,
               "archive_size": len(result.archive),
               "baseline_throughput_bps": result.baseline.objectives[0],
               "baseline_p_access": result.baseline.objectives[1]}
    (out / "campaign.json").write_text(json.dumps(summary, indent=2) + "\n")
    log.info("%s: %d evaluations, %d on the front", name, result.n_evaluations,
             len(result.archive))
    return EXIT_OK


def cmd_front(args) -> int:
    fronts: dict[str, list[dict]] = {}
    for path in args.archives:
        if not Path(path).exists():
            raise UsageError(f"archive not found: {path}")
        rows = tables.read_archive(path)
        label = rows[0]["label"] if rows else Path(path).stem
        if label in fronts:
            label = f"{label}:{path}"
        fronts[label] = rows
    if not fronts:
        raise UsageError("front needs at least one archive file")
    reference = None
    if args.ref:
        try:
            reference = tuple(float(v) for v in args.ref.split(","))
        except ValueError:
            reference = ()
        if len(reference) != 2:
            raise UsageError(f"--ref needs two comma-separated numbers, got {args.ref!r}")
    try:
        table, ref = compare_fronts(fronts, reference)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    merged = merge_fronts(fronts)
    out = _outdir(args)
    rows = [(m["label"], float(m["objectives"][0]), float(m["objectives"][1]),
             tables.fmt_params(m["params"])) for m in merged]
    tables.write_table(out / "front.csv", tables.ARCHIVE,
                       ("label", *tables.OBJECTIVE_COLUMNS, "params"), rows)
    tables.write_table(out / "hypervolume.csv", tables.FRONT_TABLE,
                       ("label", "n_points", "hypervolume", "ref_throughput_bps", "ref_p_access"),
                       [(t["label"], t["n_points"], float(t["hypervolume"]), ref[0], ref[1])
                        for t in table])
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        p = Path(path)
        if not p.exists():
            raise UsageError(f"KPI report not found: {p}")
        reports.append(KpiReport.loads(p.read_text()))
    if not reports:
        raise UsageError("report needs at least one KPI report")
    summary = summarize_reports(reports)
    out = _outdir(args)
    label = args.label or "report"
    tables.write_table(out / "summary.csv", tables.SUMMARY, ("label", "metric", "value"),
                       [(label, k, v) for k, v in summary.items()])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlbpso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--label", default=None, help="dataset label")
        p.add_argument("-v", "--verbose", action="count", default=0)

    p = sub.add_parser("gen-scenario", help="generate a jittered hexagonal layout")
    common(p)
    p.add_argument("--sites", type=int, default=None)
    p.add_argument("--isd-min", type=float, default=None, help="km")
    p.add_argument("--isd-max", type=float, default=None, help="km")
    p.add_argument("--clustering", type=float, default=None)
    p.add_argument("--margin", type=float, default=None, help="km around the sites")
    p.set_defaults(func=cmd_gen_scenario)

    p = sub.add_parser("simulate", help="run one simulation")
    common(p, config_required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="run an optimization campaign")
    common(p, config_required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("front", help="merge archives and compare hypervolumes")
    common(p)
    p.add_argument("archives", nargs="*")
    p.add_argument("--ref", default=None, help="reference point 'throughput,p_access'")
    p.set_defaults(func=cmd_front)

    p = sub.add_parser("report", help="summarize KPI reports")
    common(p)
    p.add_argument("reports", nargs="*")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mlbpso: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"mlbpso: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, OSError, RuntimeError) as exc:
        print(f"mlbpso: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
