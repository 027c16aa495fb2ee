"""Command line entry point: ``pubpriv {gen,run,sweep,verify,bounds}``.

Exit codes: 0 ok, 1 usage error, 2 experiment failure, 3 verify failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import bounds
from .checks import verify_suite
from .errors import ExperimentError, PubPrivError
from .harness import ExperimentConfig, run_experiment, run_sweep, write_results
from .mechanisms import MechanismKind, MechanismSpec
from .models import (
    MeanModelParams,
    RegModelParams,
    RngSeed,
    dump_dataset,
    sample_mean_dataset,
    sample_mean_instance,
    sample_reg_dataset,
    sample_reg_instance,
)

EXIT_OK, EXIT_USAGE, EXIT_EXPERIMENT, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--problem", choices=("mean", "reg"))
    for name, typ in (("d", int), ("n", int), ("m", int), ("tau", float), ("trials", int), ("seed", int)):
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--mechanism", choices=[k.value for k in MechanismKind])
    p.add_argument("--clip", type=float, help="clip radius for the DP mechanisms")
    p.add_argument("--outputs", help="comma-separated statistics to aggregate")
    p.add_argument("--zprime-indices", type=int)
    p.add_argument("--zprime-source", choices=("private", "public", "all"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write results here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pubpriv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="sample one instance and write its dataset")
    gen.add_argument("--problem", choices=("mean", "reg"), default="mean")
    for name, typ, default in (("d", int, 2), ("n", int, 10), ("m", int, 10), ("tau", float, 0.0), ("seed", int, 0)):
        gen.add_argument(f"--{name}", type=typ, default=default)
    gen.add_argument("--out")

    _common(sub.add_parser("run", help="run one experiment"))
    sweep = sub.add_parser("sweep", help="run one experiment per value of a parameter")
    _common(sweep)
    sweep.add_argument("--axis", required=True, choices=("n", "m", "d", "tau", "eps", "trials"))
    sweep.add_argument("--values", required=True, help="comma-separated axis values")

    ver = sub.add_parser("verify", help="run the verification suite")
    ver.add_argument("--level", choices=("fast", "full"), default="fast")
    ver.add_argument("--out")

    bnd = sub.add_parser("bounds", help="print bound predictions for a parameter set")
    for name, typ, default in (("d", int, 10), ("n", int, 100), ("m", int, 100), ("tau", float, 0.0), ("eps", float, 1.0), ("alpha", float, 0.5), ("c", float, 1.0), ("sigma2", float, 1.0)):
        bnd.add_argument(f"--{name}", type=typ, default=default)
    bnd.add_argument("--json", action="store_true")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
    if args.problem:
        raw["problem"] = "regression" if args.problem == "reg" else "mean"
    raw.setdefault("problem", "mean")
    for key in ("d", "n", "m", "tau", "trials"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    if args.seed is not None:
        raw["root_seed"] = args.seed
    if args.outputs:
        raw["outputs"] = [s.strip() for s in args.outputs.split(",") if s.strip()]
    if args.zprime_indices is not None:
        raw["zprime_indices"] = args.zprime_indices
    if args.zprime_source is not None:
        raw["zprime_source"] = args.zprime_source
    for key in ("d", "n", "m"):
        if key not in raw:
            raise PubPrivError(f"--{key} is required (or set it in --config)")

    mech = dict(raw.get("mechanism") or {})
    if args.mechanism:
        mech["kind"] = args.mechanism
    mech.setdefault("kind", "BayesPosterior" if raw["problem"] == "mean" else "GlsPosterior")
    if args.eps is not None:
        mech["eps"] = args.eps
    if args.delta is not None:
        mech["delta"] = args.delta
    if args.clip is not None:
        mech["clip_radius"] = args.clip
    if MechanismKind(mech["kind"]).is_dp:
        mech.setdefault("eps", 1.0)
        mech.setdefault("delta", 1e-5)
    raw["mechanism"] = MechanismSpec.from_dict(mech)
    return ExperimentConfig.from_dict(raw)


def _cmd_gen(args) -> int:
    seed = RngSeed(args.seed, 0)
    if args.problem == "mean":
        params = MeanModelParams(d=args.d, n=args.n, m=args.m, tau=args.tau)
        ds = sample_mean_dataset(params, sample_mean_instance(params, seed.child(0)), seed.child(1))
    else:
        params = RegModelParams(d=args.d, n=args.n, m=args.m, tau=args.tau)
        ds = sample_reg_dataset(params, sample_reg_instance(params, seed.child(0)), seed.child(1))
    dump_dataset(ds, params, args.out if args.out else sys.stdout)
    return EXIT_OK


def _emit(table, args) -> None:
    text = write_results(table, args.out, args.format)
    if not args.out:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    _emit([(None, run_experiment(cfg, workers=args.workers))], args)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    _emit(run_sweep(cfg, args.axis, values, workers=args.workers), args)
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = verify_suite(args.level, progress=lambda r: print(r.line(), flush=True))
    print(f"{'OK' if report.ok else 'FAILED'} level={report.level} elapsed={report.elapsed:.1f}s")
    if args.out:
        payload = [{"name": r.name, "passed": r.passed, "measured": r.measured, "elapsed": r.elapsed} for r in report.results]
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)
    return EXIT_OK if report.ok else EXIT_VERIFY


def _cmd_bounds(args) -> int:
    params = MeanModelParams(d=args.d, n=args.n, m=args.m, tau=args.tau)
    pred = bounds.predict(params, args.eps, args.alpha, c=args.c, sigma2=args.sigma2).as_dict()
    regime = bounds.classify_regime(params) if args.m >= 1 else None
    pred["reg_upper_sum_z"] = bounds.reg_upper_bound(args.n, args.m, args.d, args.tau, args.eps, args.alpha, args.sigma2, args.c)
    pred["regime"] = regime.regime if regime else "no_public_data"
    pred["threshold_tau"] = regime.threshold_tau if regime else math.inf
    if args.json:
        print(json.dumps({k: (str(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in pred.items()}, indent=2))
    else:
        width = max(map(len, pred))
        for key, value in pred.items():
            print(f"{key.ljust(width)} = {value}")
    return EXIT_OK


_COMMANDS = {"gen": _cmd_gen, "run": _cmd_run, "sweep": _cmd_sweep, "verify": _cmd_verify, "bounds": _cmd_bounds}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    except (PubPrivError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
