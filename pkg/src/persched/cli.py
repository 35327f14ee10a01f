"""Batch command-line front-end.

Four subcommands over one YAML experiment file: ``run`` executes a single
solve and writes report.json, schedule.txt, and trace.csv; ``sweep`` runs a
(gamma, eta) grid into tradeoff.csv; ``compare`` scores the solver against
the random baseline and, when enabled, the exhaustive oracle into
compare.csv; ``validate`` checks the plant's standing assumptions. Outputs
are plain JSON/CSV for external plotting and are byte-for-byte reproducible
for a fixed config and seed. The PERSCHED_LOG environment variable sets the
log level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .admm import run as admm_run
from .admm import sweep as admm_sweep
from .baselines import exhaustive_search, random_baseline
from .config import ExperimentConfig, load_experiment
from .exceptions import BudgetError, ConfigError, PerschedError
from .model import validate_assumptions

__all__ = ["cmd_run", "cmd_sweep", "cmd_compare", "cmd_validate", "main", "console_main"]

logger = logging.getLogger(__name__)

_KIND_FOR_COMMAND = {
    "run": {"run"},
    "sweep": {"sweep"},
    "compare": {"compare", "oracle", "baseline"},
    "validate": {"validate"},
}


def _setup_logging() -> None:
    name = os.environ.get("PERSCHED_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _check_kind(cfg: ExperimentConfig, command: str) -> None:
    if cfg.kind is not None and cfg.kind not in _KIND_FOR_COMMAND[command]:
        raise ConfigError(f"config kind {cfg.kind!r} does not match command {command!r}")


def _require_admm(cfg: ExperimentConfig, command: str):
    if cfg.admm is None:
        raise ConfigError(f"admm section is required for {command}")
    return cfg.admm


def _out_dir(cfg: ExperimentConfig, out: Optional[str]) -> Path:
    path = Path(out if out is not None else (cfg.output or "out"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _format_eta(eta) -> str:
    if hasattr(eta, "__len__"):
        return ";".join(str(int(e)) for e in eta)
    return str(int(eta))


def cmd_run(config_path, out: Optional[str] = None, jobs: int = 1, seed: Optional[int] = None) -> int:
    """Single solve. Exit 0 on convergence, 2 with a result at the cap."""
    cfg = load_experiment(config_path)
    _check_kind(cfg, "run")
    admm_cfg = _require_admm(cfg, "run")
    report = admm_run(cfg.system, admm_cfg)

    out_dir = _out_dir(cfg, out)
    _write_json(out_dir / "report.json", report.to_dict())
    (out_dir / "schedule.txt").write_text(report.schedule.to_text() + "\n")
    _write_csv(
        out_dir / "trace.csv",
        ("iteration", "primal_residual", "g_change", "phi", "cardinality"),
        (
            (rec.iteration, rec.primal_residual, rec.g_change, rec.phi, rec.cardinality)
            for rec in report.trace
        ),
    )
    status = "converged" if report.converged else "hit the iteration cap"
    print(
        f"{status} after {report.iterations} iterations: "
        f"J_polished={report.j_polished:.6g}, "
        f"activations={report.schedule.total_activations}; results in {out_dir}"
    )
    return 0 if report.converged else 2


def cmd_sweep(config_path, out: Optional[str] = None, jobs: int = 1, seed: Optional[int] = None) -> int:
    """Grid of solves into tradeoff.csv plus one report JSON per cell."""
    cfg = load_experiment(config_path)
    _check_kind(cfg, "sweep")
    admm_cfg = _require_admm(cfg, "sweep")
    if cfg.sweep_gammas is None and cfg.sweep_etas is None:
        raise ConfigError("sweep section with gammas and/or etas is required for sweep")
    gammas = cfg.sweep_gammas if cfg.sweep_gammas is not None else (admm_cfg.gamma,)
    etas = cfg.sweep_etas if cfg.sweep_etas is not None else (admm_cfg.eta,)

    cells = admm_sweep(cfg.system, admm_cfg, gammas, etas, jobs=jobs)
    out_dir = _out_dir(cfg, out)
    rows = []
    for i, cell in enumerate(cells):
        if cell.report is None:
            rows.append((cell.gamma, _format_eta(cell.eta), "", "", "", "", "", cell.error))
            continue
        rep = cell.report
        rows.append(
            (
                cell.gamma,
                _format_eta(cell.eta),
                rep.schedule.total_activations,
                rep.j_raw,
                rep.j_polished,
                rep.iterations,
                rep.converged,
                "ok",
            )
        )
        _write_json(out_dir / f"cell_{i:03d}_report.json", rep.to_dict())
    _write_csv(
        out_dir / "tradeoff.csv",
        (
            "gamma",
            "eta",
            "total_activations",
            "j_raw",
            "j_polished",
            "iterations",
            "converged",
            "status",
        ),
        rows,
    )
    n_ok = sum(1 for cell in cells if cell.report is not None)
    print(f"swept {len(cells)} cells ({n_ok} succeeded); results in {out_dir}")
    if n_ok == len(cells):
        return 0
    return 2 if n_ok else 1


def cmd_compare(config_path, out: Optional[str] = None, jobs: int = 1, seed: Optional[int] = None) -> int:
    """Solver vs random baseline vs oracle, into compare.csv.

    The baseline matches the solver's total activation count (or the
    configured override). The oracle, when enabled, searches all schedules
    within the frequency bounds; a budget refusal is recorded as a note
    rather than failing the command.
    """
    cfg = load_experiment(config_path)
    _check_kind(cfg, "compare")
    admm_cfg = _require_admm(cfg, "compare")
    use_seed = seed if seed is not None else cfg.seed

    report = admm_run(cfg.system, admm_cfg)
    matched = (
        cfg.compare_total_activations
        if cfg.compare_total_activations is not None
        else report.schedule.total_activations
    )
    eta = admm_cfg.eta_tuple(cfg.system.n_sensors)

    rows = [
        (
            "admm_polished",
            report.j_polished,
            "",
            1,
            report.schedule.total_activations,
            "converged" if report.converged else "cap hit",
        )
    ]

    if cfg.compare_trials > 0:
        baseline = random_baseline(
            cfg.system,
            admm_cfg.period,
            eta,
            total_activations=matched,
            trials=cfg.compare_trials,
            seed=use_seed,
            jobs=jobs,
        )
        rows.append(
            ("random_baseline", baseline.mean, baseline.std, cfg.compare_trials, matched, "")
        )
    else:
        rows.append(("random_baseline", "", "", 0, "", "skipped: trials = 0"))

    if cfg.compare_oracle:
        try:
            oracle = exhaustive_search(
                cfg.system,
                admm_cfg.period,
                eta,
                total_activations=cfg.compare_total_activations,
                budget=cfg.compare_budget,
            )
            note = f"skipped {oracle.n_skipped} invalid" if oracle.n_skipped else ""
            rows.append(
                (
                    "oracle",
                    oracle.J,
                    "",
                    oracle.n_evaluated,
                    oracle.schedule.total_activations,
                    note,
                )
            )
        except BudgetError as exc:
            rows.append(("oracle", "", "", "", "", f"skipped: {exc}"))
    else:
        rows.append(("oracle", "", "", "", "", "skipped: oracle disabled"))

    out_dir = _out_dir(cfg, out)
    _write_csv(
        out_dir / "compare.csv",
        ("method", "J", "J_std", "count", "total_activations", "note"),
        rows,
    )
    print(f"compared {len(rows)} methods; results in {out_dir}")
    return 0


def cmd_validate(config_path, out: Optional[str] = None, jobs: int = 1, seed: Optional[int] = None) -> int:
    """Standing-assumption checks. Exit 0 when all pass."""
    cfg = load_experiment(config_path)
    _check_kind(cfg, "validate")
    report = validate_assumptions(cfg.system)
    print(report.summary())
    return 0 if report.all_ok else 1


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="persched",
        description="Joint design of periodic estimator gains and sparse sensor schedules.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "one solve: report.json, schedule.txt, trace.csv",
        "sweep": "grid of solves: tradeoff.csv",
        "compare": "solver vs baseline vs oracle: compare.csv",
        "validate": "check plant assumptions",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="experiment YAML file")
        p.add_argument("--out", default=None, help="output directory (default from config)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    commands = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "compare": cmd_compare,
        "validate": cmd_validate,
    }
    try:
        return commands[args.command](args.config, out=args.out, jobs=args.jobs, seed=args.seed)
    except (PerschedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
