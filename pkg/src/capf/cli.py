"""Command line entry points.

Subcommands: ``simulate`` (emit the shared trajectory), ``filter`` (one
filter run), ``sweep`` (the full replicated grid), ``figures`` (render
plots from a records CSV). Exit codes: 0 success, 1 config or usage
error, 2 numerical failure at run time.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .errors import (
    AllWeightsZero,
    NotPositiveDefinite,
    NumericalBlowup,
    ParseError,
    ValidationError,
)
from .experiment import (
    LGSSM,
    SweepResult,
    filter_model_for,
    load_config,
    make_model,
    read_baselines_csv,
    run_sweep,
    trajectory_rng,
)
from .figures import emit_figures
from .metrics import read_records_csv
from .models import write_trajectory_csv
from .smc import COV_POLICIES, PROPOSALS, FilterConfig, run_filter, write_filter_csv

CONFIG_ERRORS = (ParseError, ValidationError, FileNotFoundError, IsADirectoryError)
NUMERICAL_ERRORS = (
    AllWeightsZero,
    NotPositiveDefinite,
    NumericalBlowup,
    FloatingPointError,
    np.linalg.LinAlgError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; our contract reserves 2 for
    numerical failures, so usage errors map to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="capf", description="particle filtering experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (default: config out_dir)")
        p.add_argument("--seed", type=int, help="override the config base_seed")
        if workers:
            p.add_argument("--workers", type=int, help="override the config worker count")

    common(sub.add_parser("simulate", help="write the shared trajectory CSV"))
    pf = sub.add_parser("filter", help="run one particle filter and write its CSV")
    common(pf)
    pf.add_argument("--proposal", choices=PROPOSALS, help="default: first in config")
    pf.add_argument("--policy", choices=COV_POLICIES, help="default: first in config")
    pf.add_argument("--eps", type=float, default=0.0, help="artificial noise magnitude")
    common(sub.add_parser("sweep", help="run the full replicated sweep"), workers=True)

    fig = sub.add_parser("figures", help="render figures from a records CSV")
    fig.add_argument("--out", required=True, help="directory holding records.csv")
    return parser


def _load(args):
    config = load_config(args.config)
    if args.out is not None:
        config = dataclasses.replace(config, out_dir=args.out)
    if args.seed is not None:
        if args.seed < 0:
            raise ValidationError(["--seed must be nonnegative"])
        config = dataclasses.replace(config, base_seed=args.seed)
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise ValidationError(["--workers must be positive"])
        config = dataclasses.replace(config, workers=args.workers)
    return config


def _cmd_simulate(args):
    config = _load(args)
    model = make_model(config)
    trajectory = model.simulate(config.T, trajectory_rng(config.base_seed))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "trajectory.csv"
    write_trajectory_csv(trajectory, path)
    print(f"wrote {path} (T={trajectory.T}, d={model.d})")
    return 0


def _cmd_filter(args):
    config = _load(args)
    if args.eps < 0:
        raise ValidationError(["--eps must be nonnegative"])
    model = make_model(config)
    trajectory = model.simulate(config.T, trajectory_rng(config.base_seed))
    model = filter_model_for(model, trajectory)
    filter_config = FilterConfig(
        n_particles=config.n_particles,
        eps=args.eps,
        cov_policy=args.policy or config.cov_policies[0],
        fixed_cov=config.fixed_cov,
        seed=config.base_seed,
    )
    proposal = args.proposal or config.proposals[0]
    output = run_filter(model, trajectory.observations, proposal, filter_config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "filter.csv"
    write_filter_csv(output, filter_config, path)
    print(f"wrote {path} (logZ={output.logZ:.6f}, min ESS={np.min(output.ess_trace):.2f})")
    return 0


def _cmd_sweep(args):
    config = _load(args)
    result = run_sweep(config)
    print(
        f"wrote {len(result.records)} records and {len(result.errors)} error "
        f"entries to {config.out_dir}"
    )
    return 0


def _cmd_figures(args):
    out_dir = Path(args.out)
    records_path = out_dir / "records.csv"
    if not records_path.exists():
        raise ValidationError([f"no records.csv in {out_dir}"])
    records = read_records_csv(records_path)
    if not records:
        raise ValidationError([f"{records_path} has no records"])
    baselines_path = out_dir / "baselines.csv"
    baselines = read_baselines_csv(baselines_path) if baselines_path.exists() else []
    result = SweepResult(records=records, errors=[], baselines=baselines)
    written = emit_figures(result, out_dir)
    print(f"wrote {len(written)} files to {out_dir}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "simulate": _cmd_simulate,
        "filter": _cmd_filter,
        "sweep": _cmd_sweep,
        "figures": _cmd_figures,
    }[args.command]
    try:
        return handler(args)
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
