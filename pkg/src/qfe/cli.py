"""Command-line interface: ``qfe {fisher,simulate,estimate,interpolate,campaign,crossover}``.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .bayes import EstimatorConfig, estimate_records
from .campaign import (
    ACQUIRE_STREAM,
    REFERENCE_STREAM,
    build_reference,
    crossover_point,
    measure,
    run_campaign,
    stream_key,
)
from .config import load_config
from .errors import DataError, NumericalError
from .functions import InterpolationMethod, delta_squared, interpolate, select_subset
from .io import (
    read_campaign_csv,
    read_counts,
    read_sampled_function,
    write_campaign,
    write_counts,
    write_estimates,
    write_sampled_function,
)
from .measurement import (
    PhasePoint,
    ProbeModel,
    crb_variance,
    effective_phase_fisher,
    effective_shots,
    fisher_matrix,
)
from .simulate import SeededRng, acquire_function, uniform_grid

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("qfe")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_fisher(args) -> int:
    probe = ProbeModel.from_name(args.probe)
    point = PhasePoint(args.phi, args.vis)
    fm = fisher_matrix(probe, point)
    print(f"effective_fisher = {effective_phase_fisher(probe, point):.6f}")
    print(f"f_pp = {fm.f_pp:.10g}")
    print(f"f_pv = {fm.f_pv:.10g}")
    print(f"f_vv = {fm.f_vv:.10g}")
    if args.resources is not None:
        n = effective_shots(probe, args.resources, args.convention)
        print(f"crb_variance = {crb_variance(probe, point, n):.10g}")
    return EXIT_OK


def _out_dir(args, run_config) -> Path:
    return Path(args.out) if args.out else run_config.output_dir


def cmd_simulate(args) -> int:
    run_config, _ = load_config(args.config)
    config = run_config.campaign()
    out = _out_dir(args, run_config)
    out.mkdir(parents=True, exist_ok=True)
    rng = SeededRng(config.seed)
    write_sampled_function(out / "reference.csv", build_reference(config, rng.substream(REFERENCE_STREAM)))
    xs = uniform_grid(config.n_points, config.response.domain)
    for probe in config.probes:
        for nr in config.n_resources_list:
            stream = rng.substream(ACQUIRE_STREAM, *stream_key(probe, nr))
            if config.mode == "full":
                records = acquire_function(config.response, xs, probe, nr, stream)
                write_counts(out / f"counts_{probe.name}_{nr}.csv", records)
            else:
                fn = measure(config, config.mode, probe, nr, xs, stream, f"{probe.name}_{nr}")
                write_sampled_function(out / f"points_{probe.name}_{nr}.csv", fn)
    print(out)
    return EXIT_OK


def _probe_from_filename(path: str) -> str | None:
    m = re.match(r"counts_([a-z0-9]+)_", Path(path).name)
    return m.group(1) if m else None


def cmd_estimate(args) -> int:
    probe_name = args.probe or _probe_from_filename(args.input)
    if probe_name is None:
        raise UsageError("cannot infer the probe from the file name; pass --probe")
    probe = ProbeModel.from_name(probe_name)
    support = None
    if (args.phi_lo is None) != (args.phi_hi is None):
        raise UsageError("--phi-lo and --phi-hi must be given together")
    if args.phi_lo is not None:
        support = (args.phi_lo, args.phi_hi)
    config = EstimatorConfig(phi_support=support, n_phi=args.n_phi, n_v=args.n_v)
    records = read_counts(args.input)
    _, summaries = estimate_records(records, probe, config)
    if args.out:
        write_estimates(args.out, records, summaries)
    else:
        write_estimates(sys.stdout, records, summaries)
    return EXIT_OK


def cmd_interpolate(args) -> int:
    points = read_sampled_function(args.points)
    reference = read_sampled_function(args.reference)
    if args.n_s is not None:
        points = select_subset(points, args.n_s)
    method = InterpolationMethod.from_name(args.method)
    estimate = interpolate(points, method, reference.xs)
    print(f"{delta_squared(estimate, reference):.17g}")
    return EXIT_OK


def cmd_campaign(args) -> int:
    run_config, text = load_config(args.config)
    config = run_config.campaign()
    workers = args.workers if args.workers is not None else run_config.workers
    result = run_campaign(config, workers=workers)
    paths = write_campaign(_out_dir(args, run_config), result, config_text=text)
    print(paths["campaign"])
    if result.failures:
        for f in result.failures:
            print(f"campaign task failed: {f}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_crossover(args) -> int:
    rows = read_campaign_csv(args.campaign)
    keys = list(dict.fromkeys((r.probe, r.n_resources, r.method) for r in rows))
    lines = []
    for key in keys:
        sel = sorted((r for r in rows if (r.probe, r.n_resources, r.method) == key), key=lambda r: r.n_s)
        s = crossover_point(
            [r.n_s for r in sel], [r.delta2_mean for r in sel], [r.delta2_std for r in sel], args.rtol
        )
        lines.append(f"{key[0]},{key[1]},{key[2]},{s.n_s_star},{s.floor:.6g},{s.floor_std:.3g},{int(s.low_confidence)}")
    print("probe,n_resources,method,n_s_star,floor,floor_err,low_confidence")
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qfe {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fisher", help="per-shot Fisher information of a probe")
    p.add_argument("--probe", required=True, help="noon2 or single")
    p.add_argument("--phi", type=float, required=True, help="phase [rad]")
    p.add_argument("--vis", type=float, required=True, help="visibility in [0, 1]")
    p.add_argument("--resources", type=int, help="also print the CRB variance for N_r resources")
    p.add_argument("--convention", default="per_shot", choices=("per_shot", "per_resource"))
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("simulate", help="write synthetic acquisitions for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="Bayesian estimates from a counts CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--probe", help="noon2 or single (default: from file name counts_<probe>_*.csv)")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--phi-lo", type=float)
    p.add_argument("--phi-hi", type=float)
    p.add_argument("--n-phi", type=int, default=512)
    p.add_argument("--n-v", type=int, default=256)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("interpolate", help="delta^2 of interpolated points against a reference")
    p.add_argument("--points", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--method", default="linear", help="linear or nearest")
    p.add_argument("--n-s", type=int, help="thin the points to N_s first")
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("campaign", help="run a full campaign from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("crossover", help="saturation point of every curve in campaign.csv")
    p.add_argument("--campaign", required=True)
    p.add_argument("--rtol", type=float, default=0.0)
    p.set_defaults(func=cmd_crossover)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qfe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"qfe: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"qfe: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
