"""Command-line front end: test, simulate, counterexample.

Exit codes: 0 success, 1 usage error (bad flags or incompatible options),
2 data error (unreadable or invalid input files). Output files are
byte-identical across reruns with the same flags and seed.
"""

import argparse
import csv
import sys

import numpy as np

from ihw import simulate
from ihw.engine import IhwConfig, IhwResult, run_ihw
from ihw.errors import IhwError, InvalidConfig, ValidationError
from ihw.learner import DEFAULT_LAMBDA_GRID, LearnerConfig
from ihw.procedures import weighted_pvalues
from ihw.table import RANDOM, USER_SUPPLIED, HypothesisTable

USAGE_EXIT = 1
DATA_EXIT = 2


class CliDataError(Exception):
    """Input file problem; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    value = float(value)
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def _read_table(path):
    """Parse the input CSV into a HypothesisTable; errors carry line numbers."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliDataError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CliDataError(f"{path}: empty input")
        fields = [f.strip() for f in reader.fieldnames]
        for required in ("pvalue", "covariate"):
            if required not in fields:
                raise CliDataError(f"{path}: missing required column '{required}'")
        has_fold = "fold" in fields
        pvalues, covariates, folds = [], [], []
        for line, row in enumerate(reader, start=2):
            raw_p = (row.get("pvalue") or "").strip()
            try:
                pvalues.append(float(raw_p))
            except ValueError:
                raise CliDataError(f"{path}:{line}: bad pvalue {raw_p!r}") from None
            raw_x = (row.get("covariate") or "").strip()
            if raw_x == "":
                raise CliDataError(f"{path}:{line}: empty covariate")
            try:
                covariates.append(float(raw_x))
            except ValueError:
                covariates.append(raw_x)
            if has_fold:
                raw_f = (row.get("fold") or "").strip()
                try:
                    folds.append(int(raw_f))
                except ValueError:
                    raise CliDataError(f"{path}:{line}: bad fold {raw_f!r}") from None
    if not pvalues:
        raise CliDataError(f"{path}: no data rows")
    try:
        return HypothesisTable.from_arrays(pvalues, covariates, folds if has_fold else None)
    except ValidationError as exc:
        raise CliDataError(f"{path}: {exc}") from exc


def _learner_from_args(args) -> LearnerConfig:
    if args.lam == "auto":
        grid = DEFAULT_LAMBDA_GRID
    else:
        try:
            grid = (float(args.lam),)
        except ValueError:
            raise InvalidConfig(f"--lambda must be 'auto' or a number, got {args.lam!r}") from None
    return LearnerConfig(alpha=args.alpha, n_bins=args.bins, lambda_grid=grid)


def _config_from_args(args, table: HypothesisTable) -> IhwConfig:
    strategy = args.fold_strategy
    if strategy is None:
        strategy = "column" if table.fold_labels is not None else "random"
    if strategy == "column":
        if table.fold_labels is None:
            raise CliDataError("--fold-strategy column needs a fold column in the input")
        folds = table.n_user_folds
        if args.folds is not None and args.folds != folds:
            raise InvalidConfig(
                f"--folds {args.folds} conflicts with the {folds} folds in the input column"
            )
        strategy = USER_SUPPLIED
    else:
        folds = args.folds if args.folds is not None else 5
        strategy = RANDOM
    return IhwConfig(
        alpha=args.alpha,
        procedure=args.procedure,
        K=folds,
        fold_strategy=strategy,
        seed=args.seed,
        B=args.splits,
        k=args.k,
        tau=args.tau,
        tau_prime=args.tau_prime,
        learner=_learner_from_args(args),
    )


def _write_test_output(path, table: HypothesisTable, result: IhwResult):
    q = weighted_pvalues(table.pvalues, result.weights)
    if result.partition is not None:
        fold_col = [str(int(f)) for f in result.partition.assignments]
    elif table.fold_labels is not None:
        fold_col = [str(int(f)) for f in table.fold_labels]
    else:
        fold_col = [""] * table.m
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["index", "pvalue", "covariate", "fold", "weight",
             "weighted_pvalue", "rejected", "threshold"]
        )
        for i in range(table.m):
            writer.writerow(
                [
                    str(i),
                    _fmt(table.pvalues[i]),
                    _fmt(table.covariates[i]),
                    fold_col[i],
                    _fmt(result.weights[i]),
                    _fmt(q[i]),
                    "1" if result.outcome.rejected[i] else "0",
                    _fmt(result.outcome.thresholds[i]),
                ]
            )


def _print_test_summary(table, config: IhwConfig, result: IhwResult):
    print(
        f"m={table.m} K={config.K} procedure={config.procedure} "
        f"alpha={config.alpha} discoveries={result.n_rejected}"
    )
    if config.effective_tau is not None:
        print(f"censoring tau={config.effective_tau}")
    if config.effective_tau_prime is not None:
        pi0 = result.diagnostics["storey_pi0"]
        print("storey tau_prime={} pi0={}".format(
            config.effective_tau_prime, " ".join(_fmt(v) for v in pi0)
        ))
    for b, split in enumerate(result.diagnostics["chosen_lambda"]):
        label = "fold lambdas" if len(result.diagnostics["chosen_lambda"]) == 1 else f"split {b + 1} fold lambdas"
        rendered = " ".join(
            f"{k + 1}={'uniform' if lam is None else _fmt(lam)}" for k, lam in enumerate(split)
        )
        print(f"{label}: {rendered}")


def cmd_test(args) -> int:
    table = _read_table(args.input)
    config = _config_from_args(args, table)
    result = run_ihw(table, config)
    _write_test_output(args.output, table, result)
    _print_test_summary(table, config, result)
    return 0


def cmd_simulate(args) -> int:
    try:
        scenario = simulate.load_scenario(args.scenario)
    except InvalidConfig as exc:
        raise CliDataError(str(exc)) from exc
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise InvalidConfig("--methods must name at least one method")
    learner = LearnerConfig(
        alpha=args.alpha,
        n_bins=args.bins,
        lambda_grid=DEFAULT_LAMBDA_GRID if args.lam == "auto" else (float(args.lam),),
    )
    reports = []
    for name in methods:
        method = simulate.make_method(
            name,
            args.alpha,
            n_folds=args.folds if args.folds is not None else 5,
            seed=args.seed,
            learner=learner,
            tau=args.tau,
            tau_prime=args.tau_prime,
        )
        reports.append(
            simulate.estimate_error_rates(
                scenario, method, args.reps, args.alpha, args.seed, procedure_name=name
            )
        )
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["scenario", "procedure", "alpha", "fdr", "fdr_se",
             "fwer", "fwer_se", "mean_discoveries", "reps"]
        )
        for r in reports:
            writer.writerow(
                [r.scenario, r.procedure, _fmt(r.alpha), _fmt(r.fdr), _fmt(r.fdr_se),
                 _fmt(r.fwer), _fmt(r.fwer_se), _fmt(r.mean_discoveries), str(r.reps)]
            )
    for r in reports:
        print(
            f"{r.scenario} {r.procedure}: fdr={r.fdr:.4f}({r.fdr_se:.4f}) "
            f"fwer={r.fwer:.4f}({r.fwer_se:.4f}) discoveries={r.mean_discoveries:.2f}"
        )
    return 0


def cmd_counterexample(args) -> int:
    analytic = simulate.counterexample_analytic_fwer(args.alpha)
    report = simulate.counterexample_naive_weighting(args.alpha, args.reps, args.seed)
    print(f"analytic fwer: {_fmt(analytic)}")
    print(f"monte carlo fwer: {report.fwer:.6f} (se {report.fwer_se:.6f}, reps {report.reps})")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="ihw", description="Covariate-weighted multiple testing")
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", parents=[], help="run a weighted procedure on a CSV of hypotheses")
    test.add_argument("input", help="CSV with columns pvalue, covariate and optional fold")
    test.add_argument("--output", required=True, help="per-hypothesis output CSV")
    test.add_argument("--alpha", type=float, default=0.05)
    test.add_argument(
        "--procedure",
        default="bh",
        choices=["bonferroni", "k_bonferroni", "holm", "sidak", "bh", "by", "ihwc", "ihwc_storey"],
    )
    test.add_argument("--k", type=int, default=1, help="k for k_bonferroni")
    test.add_argument("--folds", type=int, default=None)
    test.add_argument("--fold-strategy", choices=["column", "random"], default=None)
    test.add_argument("--seed", type=int, default=0)
    test.add_argument("--splits", type=int, default=1, help="random splits averaged (B)")
    test.add_argument("--bins", type=int, default=None)
    test.add_argument("--lambda", dest="lam", default="auto")
    test.add_argument("--tau", type=float, default=None)
    test.add_argument("--tau-prime", type=float, default=None)
    test.set_defaults(func=cmd_test)

    sim = sub.add_parser("simulate", help="estimate error rates on a simulated scenario")
    sim.add_argument("scenario", help="scenario configuration file (key = value)")
    sim.add_argument("--output", required=True, help="error-report CSV")
    sim.add_argument("--methods", default="bh,ihw-bh")
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--reps", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--folds", type=int, default=None)
    sim.add_argument("--bins", type=int, default=None)
    sim.add_argument("--lambda", dest="lam", default="auto")
    sim.add_argument("--tau", type=float, default=None)
    sim.add_argument("--tau-prime", type=float, default=None)
    sim.set_defaults(func=cmd_simulate)

    ce = sub.add_parser("counterexample", help="adversarial weighting FWER, analytic vs Monte Carlo")
    ce.add_argument("--alpha", type=float, default=0.2)
    ce.add_argument("--reps", type=int, default=1_000_000)
    ce.add_argument("--seed", type=int, default=0)
    ce.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliDataError as exc:
        print(f"ihw: {exc}", file=sys.stderr)
        return DATA_EXIT
    except InvalidConfig as exc:
        print(f"ihw: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValidationError as exc:
        print(f"ihw: {exc}", file=sys.stderr)
        return DATA_EXIT
    except IhwError as exc:
        print(f"ihw: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"ihw: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
