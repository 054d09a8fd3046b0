"""Command-line front end: ``plaplab {sweep,run,solve,ladder,exponents,oracle-check}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import InvalidConfig, PlaplabError
from .experiment import ExperimentConfig, _json_safe, run_experiment
from .exponents import CZConstantModel, admissibility_report, sobolev_exponent
from .fieldio import read_field
from .hessian import VALID_COLLAR, WeightedHessianField, weighted_hessian
from .ladder import DEFAULT_P_CAP, LadderConfig, run_ladder
from .oracles import identity_checks

log = logging.getLogger("plaplab")


def _jobs(value):
    if value is not None:
        return value
    env = os.environ.get("PLAPLAB_JOBS")
    return int(env) if env else 1


def _add_common(sp, config_required=True):
    sp.add_argument("--config", required=config_required, help="experiment config (JSON)")
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: $PLAPLAB_JOBS or 1)")
    sp.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plaplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("sweep", "full pipeline over every sweep point"),
                        ("run", "alias of sweep")):
        _add_common(sub.add_parser(name, help=help_))

    sp = sub.add_parser("solve", help="solve every sweep point and dump u and g (no ladder)")
    _add_common(sp)

    sp = sub.add_parser("ladder", help="run the norm ladder on a stored field dump")
    sp.add_argument("--field", required=True, help="sidecar JSON of a u or g dump")
    sp.add_argument("--config", help="take ladder settings from this experiment config")
    sp.add_argument("--k", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--r", type=float, help="substitute Sobolev exponent for n = 2")
    sp.add_argument("--R-prime", dest="R_prime", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--center", type=float, nargs="+")
    sp.add_argument("--p-cap", dest="p_cap", type=float, default=DEFAULT_P_CAP)
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--verbose", action="store_true")

    sp = sub.add_parser("exponents", help="admissibility report for one exponent tuple")
    sp.add_argument("--k", type=float, required=True)
    sp.add_argument("--l", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--r", type=float)
    sp.add_argument("--cz-model", default="heuristic", help="const:<C> | heuristic | table:<path>")
    sp.add_argument("--verbose", action="store_true")

    sp = sub.add_parser("oracle-check", help="verify closed-form oracle identities")
    sp.add_argument("--verbose", action="store_true")
    return parser


def _cmd_sweep(args, with_ladder=True):
    cfg = ExperimentConfig.load(args.config)
    code, rows = run_experiment(cfg, out_dir=args.out, jobs=_jobs(args.jobs), with_ladder=with_ladder,
                                dump=True if not with_ladder else None)
    out = args.out or cfg.output_dir
    failed = sum(not r["converged"] for r in rows)
    print(f"{len(rows)} point(s) written to {out}/results.csv ({failed} not converged)")
    return code


def _cmd_ladder(args):
    values, grid, info = read_field(args.field)
    meta = info.get("meta", {})
    settings = {}
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        settings = dict(nu=cfg.nu(), r=cfg.ladder.r, R_prime=cfg.ladder.R_prime, steps=cfg.ladder.steps,
                        center=cfg.ladder.center, p_cap=cfg.ladder.p_cap)
    for key in ("nu", "r", "R_prime", "steps", "center"):
        if getattr(args, key) is not None:
            settings[key] = getattr(args, key)
    settings.setdefault("p_cap", args.p_cap)
    k = args.k if args.k is not None else meta.get("k")
    missing = [key for key in ("nu", "R_prime", "steps", "center") if key not in settings]
    if k is None:
        missing.append("k")
    if missing:
        raise InvalidConfig(f"ladder settings missing: {', '.join(missing)}")
    if info["field"] == "u":
        eps = args.epsilon if args.epsilon is not None else meta.get("epsilon", 0.0)
        g = weighted_hessian(values, grid, eps, k)
    else:
        g = WeightedHessianField.from_aggregate(values, grid.collar_mask(VALID_COLLAR), k=k,
                                                epsilon=meta.get("epsilon", 0.0))
    lc = LadderConfig(k=k, nu=settings["nu"], sobolev_exponent=sobolev_exponent(grid.dim, settings.get("r")),
                      R_prime=settings["R_prime"], steps=settings["steps"], center=tuple(settings["center"]),
                      p_cap=settings["p_cap"])
    text = json.dumps(_json_safe(run_ladder(g, lc, grid).to_dict()), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def _cmd_exponents(args):
    try:
        model = CZConstantModel.parse(args.cz_model)
    except (ValueError, OSError) as exc:
        raise InvalidConfig(str(exc)) from exc
    rep = admissibility_report(args.k, args.l, args.n, args.nu, args.p, model, r=args.r)
    print(json.dumps(_json_safe(rep.to_dict()), indent=2, sort_keys=True))
    return 0


def _cmd_oracle_check(args):
    bad = 0
    for name, ok, detail in identity_checks():
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        bad += not ok
    return 1 if bad else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("sweep", "run"):
            return _cmd_sweep(args)
        if args.command == "solve":
            return _cmd_sweep(args, with_ladder=False)
        if args.command == "ladder":
            return _cmd_ladder(args)
        if args.command == "exponents":
            return _cmd_exponents(args)
        if args.command == "oracle-check":
            return _cmd_oracle_check(args)
    except (InvalidConfig, PlaplabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
