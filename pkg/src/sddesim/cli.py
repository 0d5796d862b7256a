"""Command-line front end.

Commands: simulate, measure, phase, stability, bounds, verify, figures,
validate.  Exit codes: 0 success, 1 validation error, 2 runtime/internal
error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__, cli_runs
from .analysis import stability_report
from .config import (
    ConfigError,
    ExperimentConfig,
    config_warnings,
    load_config,
    load_preset,
    preset_names,
)
from .verification import AcceptanceSuite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INTERNAL = 2
EXIT_VERIFICATION = 3


def _workers_default() -> int:
    return int(os.environ.get("SDDESIM_WORKERS", "1"))


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required,
                   help="experiment config (JSON file or preset name)")
    p.add_argument("-o", "--override", action="append", default=[],
                   metavar="PATH=VALUE", help="dotted-path config override")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=_workers_default())
    p.add_argument("--seed", type=int, default=None,
                   help="override trajectory.seed")


def _load(args) -> ExperimentConfig:
    overrides = list(args.override)
    if getattr(args, "seed", None) is not None:
        overrides.append(f"trajectory.seed={args.seed}")
    if args.config in preset_names():
        return load_preset(args.config, overrides)
    return load_config(args.config, overrides)


def _out_dir(args, cfg: ExperimentConfig) -> str:
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    trajs = cli_runs.run_simulation(cfg, args.workers)
    path = cli_runs.write_timeseries(cfg, trajs, out)
    blown = [i for i, tr in enumerate(trajs) if tr.diagnostics.blow_down is not None]
    for i in blown:
        print(f"warning: trajectory {i} blew down at "
              f"t = {trajs[i].diagnostics.blow_down} (partial output)")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_measure(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    trajs = cli_runs.run_simulation(cfg, args.workers)
    path = cli_runs.write_histogram(cfg, trajs, out)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_phase(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    trajs = cli_runs.run_simulation(cfg, args.workers)
    for path in cli_runs.write_phase(cfg, trajs, out):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = _load(args)
    model = cfg.model
    if model is None:
        print("error: config lacks a model section", file=sys.stderr)
        return EXIT_VALIDATION
    rep = stability_report(model.gamma.value(0.0), model.r.value(0.0),
                           model.feedback, model.tau)
    for line in rep.lines():
        print(line)
    if args.out_file:
        with open(args.out_file, "w") as fh:
            fh.write(f"# sddesim v{__version__} config={cfg.hash}\n")
            fh.write(f"x_star={rep.x_star}\n")
            fh.write(f"theta={rep.theta}\n")
            fh.write(f"lambda_0={rep.lambda_0}\n")
            fh.write(f"tau_0={rep.tau_0}\n")
            fh.write(f"regime={rep.regime}\n")
            fh.write(f"global_periodic_condition={rep.global_periodic_condition}\n")
        print(f"wrote {args.out_file}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    path = cli_runs.run_bounds(cfg, out)
    print(f"wrote {path}")
    if "verification" in cfg.artifacts:
        rep, vpath = cli_runs.run_bound_verification(cfg, out)
        print(rep.summary())
        print(f"wrote {vpath}")
        if not rep.passed:
            return EXIT_VERIFICATION
    return EXIT_OK


def cmd_verify(args) -> int:
    only = None
    if args.only:
        only = {int(tok) for tok in args.only.replace(",", " ").split()}
    suite = AcceptanceSuite(workers=args.workers)
    results = suite.run(only=only)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    slow = [r for r in results if not r.within_runtime]
    for r in slow:
        print(f"note: criterion {r.criterion} exceeded its runtime budget "
              f"({r.seconds:.1f}s > {r.runtime_limit}s)")
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_VERIFICATION if failed else EXIT_OK


def cmd_figures(args) -> int:
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"trajectory.seed={args.seed}")
    cfg = load_preset(args.name, overrides)
    out = args.out or cfg.output_dir
    files = cli_runs.run_figures(args.name, out, workers=args.workers,
                                 overrides=overrides)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = None
    try:
        if args.config in preset_names():
            cfg = load_preset(args.config, args.override)
        else:
            cfg = load_config(args.config, args.override)
        diags = []
    except ConfigError as e:
        diags = e.diagnostics
    except (OSError, ValueError) as e:
        diags = [str(e)]
    for d in diags:
        print(d)
    if cfg is not None:
        for w in config_warnings(cfg):
            print(f"warning: {w}")
    if not diags:
        print("ok")
    return EXIT_VALIDATION if diags else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sddesim",
        description="Simulate stochastic delayed negative-feedback systems, "
                    "estimate their invariant measures, and verify tail bounds.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in [
        ("simulate", cmd_simulate, "run trajectories and export time series"),
        ("measure", cmd_measure, "estimate the stationary histogram"),
        ("phase", cmd_phase, "export the 2D phase-portrait measure"),
        ("bounds", cmd_bounds, "evaluate (and optionally MC-verify) tail bounds"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("stability", help="deterministic stability report")
    _add_common(p)
    p.add_argument("--out-file", default=None, help="machine-readable report file")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("verify", help="run the acceptance criteria (CI entry point)")
    p.add_argument("--only", default=None, help="comma-separated criterion ids")
    p.add_argument("--workers", type=int, default=_workers_default())
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figures", help="reproduce a shipped figure pipeline")
    p.add_argument("name", choices=[n for n in preset_names() if n.startswith("fig")])
    p.add_argument("-o", "--override", action="append", default=[])
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=_workers_default())
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("validate", help="check a config file, print diagnostics")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--override", action="append", default=[])
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        for d in e.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION if isinstance(e, ValueError) else EXIT_INTERNAL
    except Exception as e:  # internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
