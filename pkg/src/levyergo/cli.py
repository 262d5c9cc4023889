"""Command-line entry point: ``levyergo {check,simulate,moments,converge,invariant}``.

Exit codes: 0 success, 2 usage error, 3 admissibility failure, 4 convergence
failure, 5 insufficient data.
"""

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .ergodicity import convergence_experiment, estimate_invariant, moment_curve
from .exceptions import LevyErgoError, UsageError
from .io import default_threads, load_config, provenance_lines, write_csv, write_ensemble_csv
from .mild_solver import PathConfig, simulate_ensemble

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ADMISSIBILITY = 3
EXIT_CONVERGENCE = 4
EXIT_INSUFFICIENT = 5


def _path_config(cfg, horizon=None):
    horizon = cfg.horizon() if horizon is None else horizon
    return PathConfig(min(cfg.h, horizon), horizon, cfg.scheme)


def _x_list(cfg, model):
    out = []
    for i, x in enumerate(cfg.x_list):
        if isinstance(x, list):
            if len(x) != model.n_modes:
                raise UsageError(f"config.x_list[{i}]: expected {model.n_modes} coordinates")
            out.append(np.asarray(x, dtype=float))
        else:
            v = np.zeros(model.n_modes)
            v[0] = float(x)
            out.append(v)
    return out


def _single_x(cfg, model, command):
    xs = _x_list(cfg, model)
    if len(xs) != 1:
        raise UsageError(f"config.x_list: {command} takes exactly one initial condition")
    return xs[0]


def cmd_check(cfg, args):
    """Print the admissibility report."""
    model = cfg.build_model()
    print(model.report.as_table())
    return EXIT_OK if model.report.passed else EXIT_ADMISSIBILITY


def cmd_simulate(cfg, args):
    """Write ensemble snapshots as CSV."""
    model = cfg.build_model()
    x = _single_x(cfg, model, "simulate")
    times = cfg.times()
    ens = simulate_ensemble(model, x, _path_config(cfg), cfg.m_paths, cfg.seed, times=times,
                            n_jobs=args.threads)
    blown = ens[0].provenance["n_blown"]
    path = write_ensemble_csv(Path(cfg.output) / "ensemble.csv", ens,
                              provenance_lines("simulate", cfg,
                                               {"model_hash": model.fingerprint(),
                                                "n_blown": blown}))
    print(f"wrote {path} ({ens[0].m_paths} paths x {len(ens)} times, {blown} blown)")
    return EXIT_OK


def cmd_moments(cfg, args):
    """Write E|X_t|^p along the time grid."""
    model = cfg.build_model()
    x = _single_x(cfg, model, "moments")
    p = cfg.p_moment if cfg.p_moment is not None else (
        model.alpha / 2 if model.has_stable and model.alpha < 2 else 1.0)
    times = cfg.times()
    with warnings.catch_warnings():
        # reported once in the file header instead of once per snapshot
        warnings.simplefilter("ignore", RuntimeWarning)
        ests, snaps = moment_curve(model, x, _path_config(cfg), times, cfg.m_paths, cfg.seed,
                                   p, n_jobs=args.threads)
    rows = [[float(s.time), p, e.value, e.stderr] for s, e in zip(snaps, ests)]
    extra = {"model_hash": model.fingerprint()}
    if ests[0].warning:
        extra["warning"] = ests[0].warning
        print(f"warning: {ests[0].warning}", file=sys.stderr)
    out = Path(cfg.output)
    path = write_csv(out / "moments.csv", ["t", "p", "moment", "stderr"], rows,
                     provenance_lines("moments", cfg, extra))
    print(f"wrote {path}")
    if args.svg:
        _svg_lines(out / "moments.svg", {f"|x|={np.linalg.norm(x):g}": (
            [r[0] for r in rows], [r[2] for r in rows])}, "t", f"E|X_t|^{p:g}", log_y=False)
    return EXIT_OK


def cmd_converge(cfg, args):
    """TV-to-invariant curves and exponential rate fits."""
    model = cfg.build_model()
    xs = _x_list(cfg, model)
    if cfg.time_grid is None:
        raise UsageError("config.time_grid: required for converge")
    times = cfg.times()
    report = convergence_experiment(model, xs, times, cfg.m_paths, cfg.seed,
                                    config=_path_config(cfg), dims=tuple(cfg.dims),
                                    bins_per_dim=cfg.bins, t_ref=cfg.t_burn, p=cfg.p_moment,
                                    n_jobs=args.threads)
    cols = ["x_norm", "t", "tv", "tv_stderr_proxy", "beta", "log_c", "r2"]
    rows = [[r[c] for c in cols] for r in report.rows()]
    out = Path(cfg.output)
    header = provenance_lines("converge", cfg, {"model_hash": model.fingerprint(),
                                                "null_tv": repr(report.null_tv),
                                                "fit_floor": repr(report.floor)})
    write_csv(out / "converge.csv", cols, rows, header)
    summary = report.summary()
    (out / "converge_summary.txt").write_text(
        "".join(f"# {line}\n" for line in header) + summary + "\n")
    print(summary)
    if args.svg:
        curves = {f"|x|={xn:g}": (times, [e.value for e in report.tv[i]])
                  for i, xn in enumerate(report.x_norms)}
        _svg_lines(out / "converge.svg", curves, "t", "TV", log_y=True)
    if report.errors:
        return EXIT_INSUFFICIENT
    return EXIT_OK


def cmd_invariant(cfg, args):
    """Long-run ensemble with a stationarity diagnostic."""
    model = cfg.build_model()
    x = _single_x(cfg, model, "invariant")
    t_burn = cfg.t_burn if cfg.t_burn is not None else 20.0 / model.decay_rate
    ens = estimate_invariant(model, _path_config(cfg, t_burn), cfg.m_paths, t_burn, cfg.seed,
                             x=x, dims=tuple(cfg.dims), n_jobs=args.threads)
    prov = ens.provenance
    diag = {"model_hash": model.fingerprint(), "t_burn": repr(t_burn),
            "diagnostic_tv": repr(prov["diagnostic_tv"]),
            "diagnostic_threshold": repr(prov["diagnostic_threshold"]),
            "converged": prov["converged"], "n_blown": prov["n_blown"]}
    path = write_ensemble_csv(Path(cfg.output) / "invariant.csv", [ens],
                              provenance_lines("invariant", cfg, diag))
    status = "converged" if prov["converged"] else "NOT converged"
    print(f"wrote {path}; stationarity diagnostic {prov['diagnostic_tv']:.4g} "
          f"(threshold {prov['diagnostic_threshold']:.4g}): {status}")
    return EXIT_OK if prov["converged"] else EXIT_CONVERGENCE


def _svg_lines(path, curves, xlabel, ylabel, log_y):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageError("--svg needs matplotlib (pip install 'artifact[plot]')") from None
    matplotlib.rcParams["svg.hashsalt"] = "levyergo"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (xs, ys) in curves.items():
        ax.plot(xs, ys, marker="o", label=label)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "converge": cmd_converge,
    "invariant": cmd_invariant,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="levyergo",
        description="Simulate semilinear SDEs with stable and Gaussian noise on a spectral "
                    "truncation and check their ergodic behaviour.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.rstrip("."))
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=default_threads(),
                       help="worker threads (results do not depend on it)")
        p.add_argument("--scheme", choices=["exp_euler", "picard"])
        p.add_argument("--svg", action="store_true", help="also write SVG charts")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"seed": args.seed, "output": args.out, "scheme": args.scheme}
    try:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except LevyErgoError as exc:
        print(f"levyergo {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"levyergo {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
