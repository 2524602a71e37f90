"""Command-line pipeline: ``fcix {fcix,analyze,verify,lag-report,dynamics}``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
The worker count may come from ``FCIX_WORKERS``; nothing else is read from
the environment.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import platform
import sys
import time
import warnings
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__, dynamics, entropy, fracts, rpct, segment, textio, verify
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, FcixError, MisalignedSeries
from .panel import load_prices

log = logging.getLogger("fcix")

HINTS = {
    "IncompletePanel": "set drop_incomplete = true to drop tickers with missing dates",
    "NonPositivePrice": "check the input for zero, negative or corrupt prices",
    "LagTooLarge": "use a smaller lag or a longer price history",
    "EmptyPanel": "check the delimiter and that the header is date,ticker,price",
    "InfeasiblePartition": "lower segmentation.k_star or segmentation.min_size",
    "SeriesTooShort": "supply a longer series or disable this analysis",
    "MisalignedSeries": "pass two series files with identical date columns",
    "NoConvergence": "raise decomposition.max_iters or loosen decomposition.tol",
    "DegenerateParameters": "set dynamics.params = explicit with nonzero beta and gamma + theta",
}


def fixture_path() -> Path:
    return Path(str(resources.files("fcix") / "data" / "fixture_prices.csv"))


class StageError(FcixError):
    def __init__(self, stage: str, cause: FcixError):
        hint = HINTS.get(type(cause).__name__)
        msg = f"[{stage}] {type(cause).__name__}: {cause}"
        super().__init__(msg + (f" (hint: {hint})" if hint else ""))
        self.exit_code = cause.exit_code
        self.cause = cause


class Run:
    """Collects emitted files and per-stage timings for the run manifest."""

    def __init__(self, out_dir: Path, command: str, config: RunConfig | None):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.files: list[Path] = []
        self.timings: dict[str, float] = {}

    @contextlib.contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except FcixError as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)

    def columns(self, name: str, header, columns) -> Path:
        return self._add(textio.write_columns(self.out / name, header, columns))

    def json(self, name: str, obj) -> Path:
        return self._add(textio.write_json(self.out / name, obj))

    def _add(self, path: Path) -> Path:
        if path not in self.files:
            self.files.append(path)
        return path

    def manifest(self, extra: dict | None = None) -> dict:
        doc = {
            "command": self.command,
            "config": self.config.to_dict() if self.config else None,
            "versions": {
                "fcix": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "timings_seconds": self.timings,
            "artifacts": [
                {"file": p.name, "sha256": textio.sha256(p), "bytes": p.stat().st_size}
                for p in self.files
            ],
        }
        if extra:
            doc.update(extra)
        textio.write_json(self.out / "manifest.json", doc)
        return doc


def cmd_fcix(config: RunConfig, *, workers: int = 1) -> dict:
    """prices -> lag returns -> comparison tensor -> consensus -> FCIX (+ aggregate)."""
    if config.input is None:
        raise ConfigError("no input given (use --input PATH or --fixture)")
    src = Path(config.input)
    if not src.exists():
        raise DataError(f"input file not found: {src}")
    run = Run(Path(config.output), "fcix", config)
    opts = config.decomposition
    with run.stage("panel"):
        panel = load_prices(src, delimiter=config.delimiter, drop_incomplete=config.drop_incomplete)
    with run.stage("decomposition"):
        series, factors, tensor = rpct.compute_fcix(
            panel, config.lag, tol=opts.tol, max_iters=opts.max_iters, seed=opts.seed
        )
    run.columns("fcix_daily.csv", ["date", "psi", "psi_clamped"],
                [series.dates, series.psi, series.psi_clamped])
    run.columns("consensus_z.csv", ["date", "z"], [series.dates, factors.z])
    run.columns("consensus_xy.csv", ["ticker", "x", "y"], [panel.tickers, factors.x, factors.y])
    summary = {
        "lag": config.lag,
        "n_assets": tensor.n,
        "horizon": tensor.horizon,
        "rel_error": factors.rel_error,
        "iterations": factors.iterations,
        "converged": factors.converged,
        "negatives_clamped": series.negatives_clamped,
        "first_date": series.dates[0],
        "last_date": series.dates[-1],
    }
    with run.stage("regularity"):
        try:
            summary["regularity_apen"] = rpct.regularity(series, config.entropy.m, config.entropy.r_frac)
        except DataError as exc:
            summary["regularity_apen"] = None
            summary["regularity_error"] = str(exc)
    if config.aggregation != "daily":
        with run.stage("aggregate"):
            agg = rpct.aggregate(series, config.aggregation)
        run.columns(f"fcix_{config.aggregation}.csv", ["period", "psi", "psi_clamped"],
                    [agg.dates, agg.psi, agg.psi_clamped])
        summary["aggregated_periods"] = len(agg.dates)
        summary["aggregated_negatives_clamped"] = agg.negatives_clamped
    run.json("fcix_run.json", summary)
    return run.manifest({"input": str(src)})


def _load_series(paths: Sequence[str], column: str | None, delimiter: str):
    loaded = [textio.read_series(p, column, delimiter) for p in paths]
    if len(loaded) == 2 and loaded[0][0] != loaded[1][0]:
        raise MisalignedSeries("the two series must share an identical date column")
    return loaded


SINGLE = ("segmentation", "apen", "whittle", "acf")
PAIRED = ("xcf", "entropy", "var", "equilibrium", "dynamics")


def cmd_analyze(
    config: RunConfig,
    series_paths: Sequence[str],
    *,
    analyses: Sequence[str] | None = None,
    column: str | None = None,
) -> tuple[dict, list[dict]]:
    """Run the enabled analyses; each failure is recorded and the rest still run."""
    if not 1 <= len(series_paths) <= 2:
        raise ConfigError("analyze takes one or two series files")
    if analyses is None:
        analyses = SINGLE + (PAIRED if len(series_paths) == 2 else ())
    unknown = set(analyses) - set(SINGLE + PAIRED)
    if unknown:
        raise ConfigError(f"unknown analyses: {', '.join(sorted(unknown))}")
    paired_requested = [a for a in analyses if a in PAIRED]
    if paired_requested and len(series_paths) != 2:
        raise MisalignedSeries(
            f"{', '.join(paired_requested)} require two aligned series (got {len(series_paths)})"
        )

    run = Run(Path(config.output), "analyze", config)
    with run.stage("load"):
        loaded = _load_series(series_paths, column, config.delimiter)
    dates, f = loaded[0]
    v = loaded[1][1] if len(loaded) == 2 else None
    failures: list[dict] = []
    ent = config.entropy
    state: dict = {}

    def attempt(name, fn):
        if name not in analyses:
            return
        try:
            with run.stage(name):
                fn()
        except StageError as exc:
            failures.append({"analysis": name, "error": str(exc), "exit_code": exc.exit_code})
            log.error("%s", exc)

    def do_segmentation():
        seg = config.segmentation
        res = segment.detect_changepoints(f, seg.k_star, seg.gamma_value, min_size=seg.min_size)
        run.json("segmentation.json", res.to_dict())
        run.columns("segments.csv", ["date", "value", "segment"],
                    [dates, f, segment.segment_labels(len(f), res.changepoints)])

    def do_apen():
        sd = float(np.std(f, ddof=1))
        doc = {"m": ent.m, "r_frac": ent.r_frac, "apen": entropy.apen_relative(f, ent.m, ent.r_frac)}
        doc["mean_block_similarity"] = (
            entropy.mean_block_similarity(f, ent.m, ent.r_frac * sd) if sd > 0 else 1.0
        )
        run.json("apen.json", doc)

    def do_whittle():
        est = fracts.local_whittle(f, exponent=config.whittle.exponent)
        run.json("whittle.json", est.to_dict())

    def do_acf():
        max_lag = min(config.acf_max_lag, len(f) - 1)
        run.columns("acf.csv", ["lag", "acf"], [range(max_lag + 1), fracts.acf(f, max_lag)])
        freqs, ords = fracts.periodogram(f)
        run.columns("periodogram.csv", ["frequency", "ordinate"], [freqs, ords])

    def do_xcf():
        lags, vals = fracts.xcf(f, v, min(config.xcf_max_lag, len(f) - 1))
        run.columns("xcf.csv", ["lag", "xcf"], [lags, vals])

    def do_entropy():
        kw = dict(k=ent.order, bins=ent.bins, m=ent.m, r_frac=ent.r_frac,
                  n_shuffles=ent.n_shuffles, seed=ent.seed, log_base=ent.log_base)
        rep_f = entropy.information_report(f, v, **kw)
        rep_v = entropy.information_report(v, f, **kw)
        state["entropy"] = (rep_f, rep_v)
        run.json("information.json", {"first": rep_f.to_dict(), "second": rep_v.to_dict()})

    def do_var():
        model = fracts.var_fit(np.column_stack([f, v]), config.var.p)
        irf = fracts.orth_irf(model, config.var.horizon, m=ent.m, r_frac=ent.r_frac)
        state["irf"] = irf
        run.json("var.json", {"model": model.to_dict(), "irf_apen": irf.apen_per_path})
        cols = [range(irf.horizon + 1)]
        header = ["horizon"]
        for i in range(2):
            for j in range(2):
                header.append(f"resp{i + 1}_shock{j + 1}")
                cols.append(irf.path(i, j))
        run.columns("irf.csv", header, cols)

    def do_equilibrium():
        eq = config.equilibrium
        e = fracts.long_run_equilibrium(np.column_stack([f, v]), eq.beta_vector, eq.rho)
        run.columns("equilibrium.csv", ["date", "equilibrium"], [dates, e])

    def do_dynamics():
        dyn = config.dynamics
        if dyn.params == "explicit":
            params = dynamics.SystemParams(dyn.alpha, dyn.beta, dyn.gamma, dyn.delta, dyn.theta)
        else:
            if "entropy" not in state or "irf" not in state:
                raise DataError(
                    "computed dynamics parameters need successful entropy and var analyses; "
                    "fix those or set dynamics.params = explicit"
                )
            rep_f, rep_v = state["entropy"]
            params = dynamics.SystemParams(
                alpha=rep_v.transfer_source_to_target,
                beta=rep_f.transfer_source_to_target,
                gamma=rep_f.self_entropy,
                delta=rep_v.self_entropy,
                theta=float(state["irf"].apen_per_path[0, 1]),
            )
        run.json("dynamics.json", _dynamics_report(params))

    for name, fn in [
        ("segmentation", do_segmentation), ("apen", do_apen), ("whittle", do_whittle),
        ("acf", do_acf), ("xcf", do_xcf), ("entropy", do_entropy), ("var", do_var),
        ("equilibrium", do_equilibrium), ("dynamics", do_dynamics),
    ]:
        attempt(name, fn)
    run.json("analysis.json", {"analyses": list(analyses), "failures": failures,
                               "series": [str(p) for p in series_paths]})
    return run.manifest(), failures


def _dynamics_report(params: dynamics.SystemParams) -> dict:
    pts = dynamics.critical_points(params)
    return {
        "params": vars(params),
        "critical_points": [p.to_dict() for p in pts],
        "flow_edges": dynamics.flow_edges(params),
        "jacobian_printed_variant_at_interior": dynamics.jacobian(
            params, (pts[0].F, pts[0].V), form="printed"
        ),
    }


def cmd_dynamics(config: RunConfig, *, start=None, dt: float = 0.01, steps: int = 1000) -> dict:
    dyn = config.dynamics
    run = Run(Path(config.output), "dynamics", config)
    with run.stage("dynamics"):
        params = dynamics.SystemParams(dyn.alpha, dyn.beta, dyn.gamma, dyn.delta, dyn.theta)
        run.json("dynamics.json", _dynamics_report(params))
    if start is not None:
        status = "ok"
        try:
            path = dynamics.trajectory(params, start, dt, steps)
        except dynamics.Blowup as exc:
            path, status = exc.path, str(exc)
        run.columns("trajectory.csv", ["step", "F", "V"], [range(len(path)), path[:, 0], path[:, 1]])
        return run.manifest({"trajectory_status": status})
    return run.manifest()


def cmd_lag_report(config: RunConfig, lags: Sequence[int], *, workers: int = 1) -> dict:
    if config.input is None:
        raise ConfigError("no input given (use --input PATH or --fixture)")
    src = Path(config.input)
    if not src.exists():
        raise DataError(f"input file not found: {src}")
    run = Run(Path(config.output), "lag-report", config)
    opts = config.decomposition
    with run.stage("panel"):
        panel = load_prices(src, delimiter=config.delimiter, drop_incomplete=config.drop_incomplete)
    with run.stage("lag-report"):
        report = rpct.lag_scaling_report(
            panel, lags, tol=opts.tol, max_iters=opts.max_iters, seed=opts.seed,
            m=config.entropy.m, r_frac=config.entropy.r_frac, workers=workers,
        )
    run.json("lag_report.json", report)
    pts = report["points"]
    run.columns("lag_report.csv", ["lag", "epsilon", "psi_bar", "regularity"],
                [[p["lag"] for p in pts], [p["epsilon"] for p in pts],
                 [p["psi_bar"] for p in pts], [p["regularity"] for p in pts]])
    return run.manifest({"input": str(src)})


def cmd_verify(*, inject_perturbation: bool = False, n_cases: int = 200, seed: int = 0):
    return verify.identity_suite(n_cases, seed, inject_perturbation)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, with_input: bool = True):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", dest="output", help="output directory")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    if with_input:
        p.add_argument("--input", help="long-format date,ticker,price file")
        p.add_argument("--fixture", action="store_true",
                       help="use the bundled 10-asset x 120-day synthetic panel")
        p.add_argument("--lag", type=int)
        p.add_argument("--drop-incomplete", action="store_true", default=None)
        p.add_argument("--workers", type=int, help="worker cap (default: $FCIX_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fcix",
        description="Financial chaos index pipeline and its analytics.",
        epilog="exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fcix", help="compute the index from a price panel")
    _common(p)
    p.add_argument("--aggregation", choices=["daily", "monthly", "quarterly"])

    p = sub.add_parser("analyze", help="segmentation, memory, causality and dynamics reports")
    _common(p, with_input=False)
    p.add_argument("series", nargs="+", help="one or two date,value files (first = index, second = partner)")
    p.add_argument("--column", help="value column name (default: second column)")
    p.add_argument("--analyses", help=f"comma list from {','.join(SINGLE + PAIRED)}")

    p = sub.add_parser("verify", help="run the comparison-matrix identity self-check")
    p.add_argument("--inject-perturbation", action="store_true", help="negative control: must fail")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("lag-report", help="decomposition error and index level across lags")
    _common(p)
    p.add_argument("--lags", default="1,2,3,4,5", help="comma-separated lags")

    p = sub.add_parser("dynamics", help="critical points and trajectories of the flow system")
    _common(p, with_input=False)
    for name in ("alpha", "beta", "gamma", "delta", "theta"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--start", help="F,V starting point for a trajectory")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=1000)
    return parser


def _config_from_args(args) -> RunConfig:
    overrides: dict[str, object] = {}
    for item in getattr(args, "set", []):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    if getattr(args, "fixture", False):
        overrides["input"] = str(fixture_path())
    for key in ("input", "output", "lag", "aggregation", "drop_incomplete"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    for name in ("alpha", "beta", "gamma", "delta", "theta"):
        if getattr(args, name, None) is not None:
            overrides[f"dynamics.{name}"] = getattr(args, name)
    return load_config(getattr(args, "config", None), overrides)


def _workers(args) -> int:
    if getattr(args, "workers", None):
        return max(1, args.workers)
    env = os.environ.get("FCIX_WORKERS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"FCIX_WORKERS must be an integer, got {env!r}") from None


def _log_warning(message, category, filename, lineno, file=None, line=None):
    log.warning("%s: %s", category.__name__, message)


def main(argv: Sequence[str] | None = None) -> int:
    with warnings.catch_warnings():
        warnings.showwarning = _log_warning
        return _main(argv)


def _main(argv: Sequence[str] | None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors, --help and --version
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            checks = cmd_verify(inject_perturbation=args.inject_perturbation,
                                n_cases=args.cases, seed=args.seed)
            print(verify.format_table(checks))
            return 0 if all(c.passed for c in checks) else 3
        config = _config_from_args(args)
        if args.command == "fcix":
            manifest = cmd_fcix(config, workers=_workers(args))
        elif args.command == "lag-report":
            try:
                lags = [int(x) for x in args.lags.split(",") if x.strip()]
            except ValueError:
                raise ConfigError(f"--lags must be comma-separated integers, got {args.lags!r}") from None
            manifest = cmd_lag_report(config, lags, workers=_workers(args))
        elif args.command == "analyze":
            analyses = tuple(a.strip() for a in args.analyses.split(",")) if args.analyses else None
            manifest, failures = cmd_analyze(config, args.series, analyses=analyses, column=args.column)
            _print_artifacts(manifest)
            for fail in failures:
                print(f"failed: {fail['analysis']}: {fail['error']}", file=sys.stderr)
            return max((f["exit_code"] for f in failures), default=0)
        else:
            start = None
            if args.start:
                try:
                    start = [float(x) for x in args.start.split(",")]
                except ValueError:
                    start = []
                if len(start) != 2:
                    raise ConfigError("--start expects F,V")
            manifest = cmd_dynamics(config, start=start, dt=args.dt, steps=args.steps)
        _print_artifacts(manifest)
        return 0
    except FcixError as exc:
        print(f"fcix: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fcix: error: {exc}", file=sys.stderr)
        return 2


def _print_artifacts(manifest: dict) -> None:
    for art in manifest["artifacts"]:
        print(art["file"])


if __name__ == "__main__":
    sys.exit(main())
