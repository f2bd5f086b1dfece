"""Command-line entry point: ``rdpadmm <subcommand> ...``.

Subcommands: account, calibrate, generate-data, train, evaluate, sweep.
Any subcommand accepts ``--config FILE`` with ``key = value`` lines whose
keys are long option names (``batch = 64``, ``target-eps = 1.0``);
explicit flags override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import experiment
from .accounting import AccountingError, DpBudget, to_approx_dp
from .admm import SCHEDULES
from .data import Dataset, SyntheticSpec, generate_synthetic, load_csv, preprocess, save_csv
from .experiment import ALGOS, OUTPUT_ENV, SweepPlan, TrainSettings
from .losses import LossModel, objective
from .mechanisms import NoiseSource
from .metrics import XI_KS, accuracy, xi_profile
from . import dpsgd, mpadmm, ssadmm

log = logging.getLogger("rdpadmm")


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _strs(text: str) -> tuple[str, ...]:
    return tuple(v for v in str(text).replace(",", " ").split())


# ---------------------------------------------------------------- arguments

def _add_hyper(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--algo", choices=ALGOS, default="ssadmm")
    g.add_argument("--loss", choices=("logistic", "hsvm"), default="logistic")
    g.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    g.add_argument("--rho", type=float, help="default 0.25 (ssadmm) / 0.5 (mpadmm)")
    g.add_argument("--eta0", "--eta", dest="eta0", type=float, help="base step size (default 1.0)")
    g.add_argument("--schedule", choices=SCHEDULES, help="step schedule for ssadmm/dpsgd")
    g.add_argument("--batch", type=int, help="mini-batch size (default ceil(sqrt(n)))")
    g.add_argument("--iters", type=int, help="iterations (ssadmm/dpsgd)")
    g.add_argument("--epochs", type=float, default=10.0, help="expected epochs, or mpadmm epochs")
    g.add_argument("--clip", type=float, default=1.0)
    g.add_argument("--sigma", type=float, help="noise standard deviation; 0 disables privacy")
    g.add_argument("--target-eps", type=float, help="calibrate sigma to this epsilon")
    g.add_argument("--target-delta", "--delta", dest="delta", type=float, default=1e-8)
    g.add_argument("--max-alpha", type=int, default=64, help="orders 2..max-alpha are tracked")


def _add_data(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--data", required=required, help="CSV file")
    g.add_argument("--label-col", default="-1", help="label column index or header name")
    g.add_argument("--has-header", action="store_true")
    g.add_argument("--no-intercept", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdpadmm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key = value defaults file")
        return p

    p = add("account", "privacy spent by a configuration (no data needed)")
    _add_hyper(p)
    p.add_argument("--n", type=int, required=True, help="number of training records")
    p.add_argument("--curve-out", help="write the RDP curve as alpha,epsilon CSV ('-' for stdout)")

    p = add("calibrate", "noise scale reaching a target (epsilon, delta)")
    _add_hyper(p)
    p.add_argument("--n", type=int, required=True)

    p = add("generate-data", "write a synthetic correlated-Gaussian dataset")
    p.add_argument("--n", type=int, default=40_000)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("train", "train one model and emit its run report")
    _add_hyper(p)
    _add_data(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--no-trace", action="store_true")
    p.add_argument("--record-timing", action="store_true", help="include wall time (breaks byte-identity)")

    p = add("evaluate", "score a trained model on a dataset")
    _add_data(p)
    p.add_argument("--report", required=True, help="run report from 'train'")
    p.add_argument("--relevant", help="indices of truly relevant features (for xi_k)")

    p = add("sweep", "cross-validated sweep over algorithms, lambdas and privacy levels")
    _add_hyper(p)
    _add_data(p, required=False)
    p.add_argument("--synthetic-n", type=int, help="generate synthetic data of this size instead of --data")
    p.add_argument("--algos", default="ssadmm")
    p.add_argument("--lambdas", default="1e-4")
    p.add_argument("--sigmas", help="sigma grid, e.g. '0.5,1,2'")
    p.add_argument("--epsilons", help="epsilon grid (sigma calibrated per cell)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", help=f"default ${OUTPUT_ENV} or ./results")
    p.add_argument("--emit-plot-data", action="store_true")
    p.add_argument("--record-timing", action="store_true")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = {"lambda": "lam", "target_delta": "delta", "eta": "eta0"}.get(key, key)
            if dest not in known:
                parser.error(f"{args.config}: unknown option {key!r} for {args.command}")
            action = known[dest]
            if action.nargs == 0:
                defaults[dest] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[dest] = action.type(value) if action.type else value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- helpers

def _settings(args) -> TrainSettings:
    return TrainSettings(
        loss=args.loss, rho=args.rho, eta0=args.eta0, schedule=args.schedule,
        batch_size=args.batch, epochs=args.epochs, iterations=args.iters,
        clip=args.clip, delta=args.delta, alphas=tuple(float(a) for a in range(2, args.max_alpha + 1)),
    )


def _resolve_config(args, n: int):
    s = _settings(args)
    if args.target_eps is not None:
        cfg = experiment.build_config(args.algo, n, args.lam, 1.0, s)
        return experiment.calibrate_config(args.algo, n, cfg, DpBudget(args.target_eps, args.delta))
    if args.sigma is None:
        raise SystemExit("give --sigma or --target-eps")
    return experiment.build_config(args.algo, n, args.lam, args.sigma, s)


def _curve(algo: str, n: int, cfg):
    return {"ssadmm": ssadmm.ssadmm_curve, "mpadmm": mpadmm.mpadmm_curve, "dpsgd": dpsgd.dpsgd_curve}[algo](n, cfg)


def _load(args) -> Dataset:
    label = args.label_col
    label = int(label) if label.lstrip("-").isdigit() else label
    raw = load_csv(args.data, label, has_header=args.has_header)
    meta = Path(str(args.data) + ".meta.json")
    if meta.exists():
        relevant = json.loads(meta.read_text()).get("relevant")
        if relevant:
            raw = replace(raw, relevant=tuple(relevant))
    return preprocess(raw, add_intercept=not args.no_intercept)


def _emit(text: str, path: str | None) -> None:
    if path and path != "-":
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_account(args) -> int:
    cfg = _resolve_config(args, args.n)
    curve = _curve(args.algo, args.n, cfg)
    if curve is None:
        print(json.dumps({"algo": args.algo, "sigma": 0.0, "epsilon": None, "note": "sigma=0 is not private"}))
        return 0
    budget = to_approx_dp(curve, args.delta)
    print(json.dumps({"algo": args.algo, "n": args.n, "sigma": cfg.sigma, "epsilon": budget.epsilon,
                      "delta": budget.delta, "alpha_star": budget.alpha}, sort_keys=True))
    if args.curve_out:
        _emit(curve.to_csv(), args.curve_out)
    return 0


def cmd_calibrate(args) -> int:
    if args.target_eps is None:
        raise SystemExit("calibrate needs --target-eps")
    cfg = _resolve_config(args, args.n)
    budget = to_approx_dp(_curve(args.algo, args.n, cfg), args.delta)
    print(json.dumps({"algo": args.algo, "sigma": cfg.sigma, "epsilon": budget.epsilon,
                      "delta": args.delta, "alpha_star": budget.alpha}, sort_keys=True))
    return 0


def cmd_generate(args) -> int:
    spec = SyntheticSpec(n=args.n, p=args.p, seed=args.seed)
    data = generate_synthetic(spec)
    meta = {"generator": "correlated-gaussian-logistic", "spec": asdict(spec), "relevant": list(data.relevant)}
    save_csv(data, args.out, metadata=meta)
    return 0


def cmd_train(args) -> int:
    data = _load(args)
    cfg = _resolve_config(args, data.n)
    report = experiment.train(args.algo, data, LossModel(args.loss), cfg, NoiseSource(args.seed))
    rec = report.to_record(include_trace=not args.no_trace, include_timing=args.record_timing)
    rec["loss"] = LossModel(args.loss).kind
    rec["lambda"] = args.lam
    rec["n"] = data.n
    rec["feature_names"] = list(data.feature_names)
    _emit(json.dumps(rec, sort_keys=True) + "\n", args.out)
    return 0


def cmd_evaluate(args) -> int:
    data = _load(args)
    rec = json.loads(Path(args.report).read_text())
    model = np.asarray(rec["model"], dtype=float)
    loss = LossModel(rec.get("loss", "logistic"))
    out = {"accuracy": accuracy(model, data), "objective": objective(loss, model, data, rec.get("lambda", 0.0))}
    relevant = _floats(args.relevant) if args.relevant else data.relevant
    if relevant:
        out.update({f"xi_{k}": v for k, v in xi_profile(model, [int(i) for i in relevant], XI_KS).items()})
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    if args.synthetic_n:
        raw = generate_synthetic(SyntheticSpec(n=args.synthetic_n, seed=args.seed))
        data = preprocess(raw, add_intercept=not args.no_intercept)
    elif args.data:
        data = _load(args)
    else:
        raise SystemExit("sweep needs --data or --synthetic-n")
    plan = SweepPlan(
        algos=_strs(args.algos), lambdas=_floats(args.lambdas),
        sigmas=_floats(args.sigmas) if args.sigmas else (),
        epsilons=_floats(args.epsilons) if args.epsilons else (),
        folds=args.folds, reps=args.reps, seed=args.seed, settings=_settings(args),
    )
    out_dir = args.out_dir or os.environ.get(OUTPUT_ENV) or "results"
    records = experiment.run_experiment(plan, data, out_dir, jobs=args.jobs,
                                        emit_plot_data=args.emit_plot_data, record_timing=args.record_timing)
    failed = sum(r["status"] != "ok" for r in records)
    log.info("%d runs, %d failed; results in %s", len(records), failed, out_dir)
    return 0 if failed == 0 else 1


COMMANDS = {
    "account": cmd_account, "calibrate": cmd_calibrate, "generate-data": cmd_generate,
    "train": cmd_train, "evaluate": cmd_evaluate, "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (AccountingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
