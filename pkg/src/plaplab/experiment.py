"""Experiment configs and the solve -> weighted Hessian -> ladder -> exponents pipeline."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .errors import InvalidConfig
from .exponents import CZConstantModel, admissibility_report, default_nu, sobolev_exponent
from .fieldio import write_field
from .grid import build_grid
from .hessian import weighted_hessian
from .ladder import DEFAULT_P_CAP, LadderConfig, run_ladder
from .oracles import ORACLE_NAMES, oracle_case
from .solver import PDEProblem, SolverConfig, solve

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment", "p", "epsilon", "k", "resolution", "converged", "residual_sup", "sup_g",
               "ladder_limit", "ladder_gap", "max_ceff", "admissible", "truncated", "wall_ms")


@dataclass
class GridSpec:
    resolutions: list[int]
    dim: int = 2
    lo: list[float] | None = None
    hi: list[float] | None = None


@dataclass
class LadderSpec:
    R_prime: float
    center: list[float]
    steps: int = 8
    nu: float | None = None
    r: float | None = None
    p_cap: float = DEFAULT_P_CAP
    matrix_norm: str = "entrywise"


@dataclass
class ExponentSpec:
    l: float = 2.0
    cz_model: str = "heuristic"


@dataclass
class ExperimentConfig:
    experiment: str
    oracle: str
    p: list[float]
    epsilon: list[float]
    k: list[float]
    grid: GridSpec
    ladder: LadderSpec
    exponents: ExponentSpec = field(default_factory=ExponentSpec)
    solver: dict = field(default_factory=dict)
    output_dir: str = "results"
    dump_fields: bool = False
    deterministic: bool = True

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            problem = raw["problem"]
            cfg = cls(
                experiment=str(raw.get("experiment", "experiment")),
                oracle=problem["oracle"],
                p=[float(v) for v in problem["p"]],
                epsilon=[float(v) for v in problem["epsilon"]],
                k=[float(v) for v in problem["k"]],
                grid=GridSpec(**raw["grid"]),
                ladder=LadderSpec(**raw["ladder"]),
                exponents=ExponentSpec(**raw.get("exponents", {})),
                solver=dict(raw.get("solver", {})),
                output_dir=raw.get("output", {}).get("dir", "results"),
                dump_fields=bool(raw.get("output", {}).get("dump_fields", False)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"malformed config: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def validate(self):
        for name in ("p", "epsilon", "k"):
            if not getattr(self, name):
                raise InvalidConfig(f"{name} list empty")
        if not self.grid.resolutions:
            raise InvalidConfig("resolution list empty")
        if self.oracle not in ORACLE_NAMES:
            raise InvalidConfig(f"unknown oracle {self.oracle!r}; choose from {', '.join(ORACLE_NAMES)}")
        if self.grid.dim not in (2, 3):
            raise InvalidConfig("grid dim must be 2 or 3")
        if len(self.ladder.center) != self.grid.dim:
            raise InvalidConfig("ladder center dimension does not match grid dim")
        if self.grid.dim == 2 and self.ladder.r is None:
            raise InvalidConfig("two-dimensional runs need ladder.r (substitute Sobolev exponent)")
        try:
            SolverConfig(**self.solver)
            CZConstantModel.parse(self.exponents.cz_model)
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from exc

    def points(self):
        return list(itertools.product(self.p, self.epsilon, self.k, self.grid.resolutions))

    def nu(self) -> float:
        if self.ladder.nu is not None:
            return self.ladder.nu
        return default_nu(self.exponents.l, self.grid.dim, self.ladder.r)


def _point_id(p, eps, k, n):
    return f"p{p:g}_eps{eps:g}_k{k:g}_n{n}"


def run_point(cfg: ExperimentConfig, p: float, eps: float, k: float, n: int,
              with_ladder: bool = True, out_dir: Path | None = None, dump: bool = False) -> dict:
    """One sweep point. Never raises: failures are recorded in the row."""
    t0 = time.perf_counter()
    row: dict[str, Any] = {"experiment": cfg.experiment, "p": p, "epsilon": eps, "k": k, "resolution": n,
                           "converged": False, "residual_sup": None, "sup_g": None, "ladder_limit": None,
                           "ladder_gap": None, "max_ceff": None, "admissible": None, "truncated": None}
    extra: dict[str, Any] = {"error": None, "iterations": None, "ladder": None, "admissibility": None}
    try:
        grid = None
        if cfg.grid.lo is not None and cfg.grid.hi is not None:
            grid = build_grid(cfg.grid.lo, cfg.grid.hi, n, cfg.grid.dim)
        case = oracle_case(cfg.oracle, p, eps, n, cfg.grid.dim, grid=grid)
        problem = PDEProblem(case.grid, p, eps, case.forcing, case.dirichlet, k=k)
        result = solve(problem, SolverConfig(**cfg.solver))
        row["converged"] = result.converged
        row["residual_sup"] = result.residual_sup
        extra["iterations"] = result.iterations
        g = weighted_hessian(result.u, case.grid, eps, k, cfg.ladder.matrix_norm)
        if dump and out_dir is not None:
            stem = out_dir / "fields" / _point_id(p, eps, k, n)
            meta = {"p": p, "epsilon": eps, "k": k, "oracle": cfg.oracle}
            write_field(f"{stem}_u", result.u, case.grid, "u", **meta)
            write_field(f"{stem}_g", g.aggregate, case.grid, "g", **meta)
        if with_ladder:
            nu = cfg.nu()
            lc = LadderConfig(k=k, nu=nu, sobolev_exponent=sobolev_exponent(cfg.grid.dim, cfg.ladder.r),
                              R_prime=cfg.ladder.R_prime, steps=cfg.ladder.steps,
                              center=tuple(cfg.ladder.center), p_cap=cfg.ladder.p_cap)
            report = run_ladder(g, lc, case.grid)
            row.update(sup_g=report.direct_sup, ladder_limit=report.ladder_limit, ladder_gap=report.gap,
                       max_ceff=report.max_c_eff, truncated=report.truncated)
            extra["ladder"] = report.to_dict()
            budget = admissibility_report(k, cfg.exponents.l, cfg.grid.dim, nu, p,
                                          CZConstantModel.parse(cfg.exponents.cz_model), r=cfg.ladder.r)
            row["admissible"] = budget.admissible
            extra["admissibility"] = budget.to_dict()
    except Exception as exc:  # crash isolation: one bad point must not abort the sweep
        log.exception("sweep point %s failed", _point_id(p, eps, k, n))
        row["converged"] = False
        extra["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_ms"] = int(round(1000 * (time.perf_counter() - t0)))
    return {**row, **extra}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _worker(args):
    cfg, point, with_ladder, out_dir, dump = args
    return run_point(cfg, *point, with_ladder=with_ladder, out_dir=out_dir, dump=dump)


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1, with_ladder: bool = True,
                   dump: bool | None = None) -> tuple[int, list[dict]]:
    """Run every sweep point and write ``results.csv`` / ``results.json``.

    Returns ``(exit_code, rows)``; exit code 2 when any point did not converge.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump = cfg.dump_fields if dump is None else dump
    tasks = [(cfg, pt, with_ladder, out, dump) for pt in cfg.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_worker, tasks))
    else:
        rows = [_worker(t) for t in tasks]
    (out / "results.csv").write_text(rows_to_csv(rows))
    doc = {"experiment": cfg.experiment, "columns": list(CSV_COLUMNS), "config": asdict(cfg), "rows": rows}
    (out / "results.json").write_text(json.dumps(_json_safe(doc), indent=2, sort_keys=True))
    code = 0 if all(r["converged"] for r in rows) else 2
    return code, rows
