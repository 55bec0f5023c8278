"""Seeded benchmark runs and CSV/JSON/figure reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from . import __version__
from .cuckoo import SolverParams, solve
from .errors import CPMPError
from .instance import Nest, ProblemInstance, build_distance_matrix, check_feasibility, reported_cost

log = logging.getLogger(__name__)

SUMMARY_HEADER = [
    "instance", "p", "best_cost", "mean_cost", "time_s", "best_known",
    "improvement", "gap", "dev_percent", "seed",
]
DETAIL_HEADER = ["median_node", "assigned_count", "supplied_demand"]


def read_best_known(source=None) -> dict[str, int]:
    """``instance,best_known`` CSV as a dict; the packaged table by default."""
    if source is None:
        text = resources.files("cpmp_cs").joinpath("data/best_known.csv").read_text()
    else:
        text = Path(source).read_text()
    table = {}
    for row in csv.DictReader(io.StringIO(text)):
        value = float(row["best_known"])
        if value <= 0:
            raise ValueError(f"best-known cost for {row['instance']} must be positive")
        table[row["instance"].strip()] = int(value) if value.is_integer() else value
    return table


def read_reported_results() -> list[dict]:
    text = resources.files("cpmp_cs").joinpath("data/reported_results.csv").read_text()
    return list(csv.DictReader(io.StringIO(text)))


@dataclass(frozen=True)
class MedianRow:
    median_node: int
    assigned_count: int
    supplied_demand: float


@dataclass
class RunReport:
    instance: str
    n: int
    p: int
    best_cost: int | None
    mean_cost: float | None
    wall_time_seconds: float
    best_known: float | None
    seed: int | None
    params: dict
    medians: list[MedianRow] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    seed_costs: list[float] = field(default_factory=list)
    seed_times: list[float] = field(default_factory=list)
    error: str | None = None
    # Kept for figures and solution files, not serialised into the summary.
    best_nest: Nest | None = field(default=None, repr=False)
    problem: ProblemInstance | None = field(default=None, repr=False)
    history_best: list[float] = field(default_factory=list, repr=False)
    history_mean: list[float] = field(default_factory=list, repr=False)

    @property
    def improvement(self) -> float | None:
        if self.best_cost is None or self.best_known is None:
            return None
        diff = self.best_known - self.best_cost
        return diff if diff > 0 else None

    @property
    def gap(self) -> float | None:
        if self.best_cost is None or self.best_known is None:
            return None
        diff = self.best_cost - self.best_known
        return diff if diff > 0 else None

    @property
    def dev_percent(self) -> float | None:
        # Relative to the cost found, not to the best-known value.
        if self.best_cost is None or self.best_known is None:
            return None
        if self.best_cost == 0:
            return 0.0 if self.best_known == 0 else math.inf
        return 100.0 * abs(self.best_known - self.best_cost) / self.best_cost


def median_rows(instance: ProblemInstance, nest: Nest) -> list[MedianRow]:
    groups = nest.clusters()
    return [
        MedianRow(m, len(groups[m]), math.fsum(instance.demands[groups[m]].tolist()))
        for m in nest.medians
    ]


def run_instance(instance: ProblemInstance, params: SolverParams, n_seeds: int = 1,
                 best_known: float | None = None) -> RunReport:
    """Solve with seeds ``params.seed .. params.seed + n_seeds - 1``."""
    dm = build_distance_matrix(instance, params.distance_mode)
    report = RunReport(
        instance=instance.name, n=instance.n, p=instance.p, best_cost=None, mean_cost=None,
        wall_time_seconds=0.0, best_known=best_known, seed=None, params=params.to_dict(),
        problem=instance,
    )
    best = None
    for k in range(n_seeds):
        seed = params.seed + k
        result = solve(instance, replace(params, seed=seed), dm)
        if not check_feasibility(instance, result.best):
            raise CPMPError(f"{instance.name}: solver returned an infeasible nest (seed {seed})")
        cost = reported_cost(result.best.cost)
        report.seeds.append(seed)
        report.seed_costs.append(cost)
        report.seed_times.append(result.wall_time)
        if best is None or result.best.cost < best.best.cost:
            best = result
            report.seed = seed
        log.info("%s seed=%d cost=%d time=%.2fs", instance.name, seed, cost, result.wall_time)
    report.best_nest = best.best
    report.best_cost = reported_cost(best.best.cost)
    report.mean_cost = math.fsum(report.seed_costs) / n_seeds
    report.wall_time_seconds = max(report.seed_times)
    report.medians = median_rows(instance, best.best)
    report.history_best = best.history_best
    report.history_mean = best.history_mean
    return report


def run_benchmark(suite, params: SolverParams, best_known: dict | None = None, n_seeds: int = 1,
                  fallback_best_known: dict | None = None) -> list[RunReport]:
    """Run every instance of ``suite``; solver errors are recorded per instance.

    ``fallback_best_known`` supplies reference values (e.g. from ORLibrary
    headers) for instances missing from ``best_known``.
    """
    best_known = best_known or {}
    fallback_best_known = fallback_best_known or {}
    reports = []
    for instance in sorted(suite, key=lambda s: s.name):
        ref = best_known.get(instance.name, fallback_best_known.get(instance.name))
        try:
            reports.append(run_instance(instance, params, n_seeds, ref))
        except CPMPError as exc:
            log.error("%s failed: %s", instance.name, exc)
            reports.append(RunReport(
                instance=instance.name, n=instance.n, p=instance.p, best_cost=None, mean_cost=None,
                wall_time_seconds=0.0, best_known=ref, seed=None, params=params.to_dict(),
                error=f"{type(exc).__name__}: {exc}", problem=instance,
            ))
    return reports


def _fmt(value, digits=None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if digits is not None:
            return f"{value:.{digits}f}"
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def summary_rows(reports, include_time: bool = False) -> list[list[str]]:
    rows = []
    for r in reports:
        rows.append([
            r.instance, str(r.p), _fmt(r.best_cost), _fmt(r.mean_cost, 2),
            _fmt(r.wall_time_seconds, 3) if include_time and r.error is None else "",
            _fmt(r.best_known), _fmt(r.improvement), _fmt(r.gap), _fmt(r.dev_percent, 2),
            _fmt(r.seed),
        ])
    return rows


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_reports(reports, out_dir, include_time: bool = False, figures: bool = True) -> dict:
    """Write summary, per-instance details, solutions, manifest and figures.

    Wall times go to ``timings.csv`` and the manifest.  The summary's
    ``time_s`` column stays empty unless ``include_time`` is set so that
    reruns with the same seed give byte-identical CSVs.
    """
    if not reports:
        raise ValueError("no reports to write")
    out = Path(out_dir)
    for sub in ("", "details", "solutions"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    paths = {"summary": out / "summary.csv", "details": [], "solutions": [], "figures": []}
    _write_csv(paths["summary"], SUMMARY_HEADER, summary_rows(reports, include_time))
    _write_csv(
        out / "timings.csv", ["instance", "seed", "best_cost", "time_s"],
        [[r.instance, str(s), _fmt(c), f"{t:.3f}"]
         for r in reports for s, c, t in zip(r.seeds, r.seed_costs, r.seed_times)],
    )
    for r in reports:
        if r.error is not None:
            continue
        detail = out / "details" / f"{r.instance}.csv"
        _write_csv(detail, DETAIL_HEADER,
                   [[str(m.median_node), str(m.assigned_count), _fmt(m.supplied_demand)] for m in r.medians])
        paths["details"].append(detail)
        sol = out / "solutions" / f"{r.instance}.json"
        doc = {"instance": r.instance, "distance_mode": r.params["distance_mode"], "seed": r.seed,
               **r.best_nest.to_dict()}
        sol.write_text(json.dumps(doc, indent=2) + "\n")
        paths["solutions"].append(sol)

    _write_comparison(out / "comparison.csv", reports)

    manifest = {
        "package": "cpmp_cs",
        "version": __version__,
        "python": platform.python_version(),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "params": reports[0].params,
        "instances": [
            {"instance": r.instance, "n": r.n, "p": r.p, "seeds": r.seeds, "seed_costs": r.seed_costs,
             "seed_times_s": [round(t, 4) for t in r.seed_times], "error": r.error}
            for r in reports
        ],
        "total_time_s": round(sum(sum(r.seed_times) for r in reports), 4),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    paths["manifest"] = out / "manifest.json"

    if figures:
        from .plotting import render_report_figures

        paths["figures"] = render_report_figures(reports, out / "figures")
    return paths


def _write_comparison(path: Path, reports) -> None:
    """Side-by-side with the published CS & K-means and GACO results, when known."""
    published = {row["instance"]: row for row in read_reported_results()}
    rows = []
    for r in reports:
        ref = published.get(r.instance)
        if ref is None:
            continue
        rows.append([r.instance, _fmt(r.best_cost), ref["best_known"], ref["cs_kmeans_best"],
                     ref["cs_kmeans_time_s"], ref["gaco_best"], ref["gaco_time_s"]])
    if rows:
        _write_csv(path, ["instance", "best_cost", "best_known", "reported_cs_kmeans_best",
                          "reported_cs_kmeans_time_s", "reported_gaco_best", "reported_gaco_time_s"], rows)
