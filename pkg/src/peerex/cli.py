"""Command-line front end.

Subcommands: simulate, estimate, calibrate, rewire, homophily, histogram.
Every command writes its outputs plus a manifest.json into --outdir; on
failure, partially written outputs are removed and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import __version__
from . import calibrator, estimator, homophily, simulator
from .cascade import (
    Cascade,
    activity_histogram,
    cascade_from_rows,
    read_activation_rows,
    read_cascade_csv,
    read_groups_csv,
    write_cascade_csv,
)
from .errors import PeerexError
from .graph import (
    Network,
    configuration_rewire,
    giant_component,
    read_attributes_csv,
    read_edge_csv,
    write_edge_csv,
    write_id_map_csv,
)
from .manifest import RunManifest

log = logging.getLogger(__name__)

DEFAULT_THREADS = int(os.environ.get("PEEREX_THREADS", "1"))


class _Outputs:
    """Tracks written files; a failing command leaves no partial outputs."""

    def __init__(self, outdir: str):
        self.dir = Path(outdir)
        self.written: list[Path] = []

    def __enter__(self) -> "_Outputs":
        self.dir.mkdir(parents=True, exist_ok=True)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is not None:
            for p in self.written:
                try:
                    p.unlink(missing_ok=True)
                except OSError:
                    pass

    def path(self, name: str) -> str:
        p = self.dir / name
        self.written.append(p)
        return str(p)

    def finish(self, manifest: RunManifest) -> None:
        for p in self.written:
            manifest.add_output(p.name, str(p))
        manifest_path = self.dir / "manifest.json"
        self.written.append(manifest_path)
        manifest.write(str(manifest_path))


def _load_network(args: argparse.Namespace) -> Network:
    net = read_edge_csv(args.network, header=not args.no_header)
    if getattr(args, "giant", False):
        net, _ = giant_component(net)
    return net


def _load_cascade(args: argparse.Namespace, net: Network) -> Cascade:
    clip = None
    if args.t_start is not None or args.t_end is not None:
        clip = (args.t_start, args.t_end)
    return read_cascade_csv(
        args.cascade,
        net,
        time_format=args.time_format,
        utc_offset=args.utc_offset,
        clip=clip,
    )


def _manifest(command: str, parameters: dict, seeds: dict | None = None) -> RunManifest:
    return RunManifest(
        command=command,
        version=__version__,
        parameters=parameters,
        seeds=seeds or {},
    )


# ---------------------------------------------------------------------------
# subcommands

def cmd_estimate(args: argparse.Namespace) -> int:
    net = _load_network(args)
    cascade = _load_cascade(args, net)
    params = estimator.PeerParams(p0=args.p0, decay=args.decay)
    series = estimator.influence_series(
        net, cascade, params, delta=args.delta, stride=args.stride, eval_at=args.eval_at
    )
    manifest = _manifest(
        "estimate",
        {
            "p0": args.p0,
            "lambda": args.decay,
            "delta": args.delta,
            "stride": series.stride,
            "eval_at": args.eval_at,
            "baseline": bool(args.baseline),
            "per_node": bool(args.per_node),
            "giant": bool(args.giant),
            "time_format": args.time_format,
            "utc_offset": args.utc_offset,
            "t_start": args.t_start,
            "t_end": args.t_end,
        },
    )
    manifest.add_input(args.network)
    manifest.add_input(args.cascade)
    with _Outputs(args.outdir) as out:
        estimator.write_series_csv(series, out.path("series.csv"))
        estimator.write_series_json(series, out.path("series.json"))
        if args.per_node:
            estimator.write_per_node_csv(series, net, out.path("per_node.csv"))
            estimator.write_per_node_json(series, net, out.path("per_node.json"))
        if args.baseline:
            estimator.write_baseline_csv(net, cascade, series, out.path("baseline.csv"))
        print(
            f"classified {series.classified_total} activations: "
            f"{series.peer_total} peer, {series.external_total} external"
            + (f" (stopped at t={series.saturated_at}: network saturated)" if series.saturated_at else "")
        )
        if args.ground_truth:
            manifest.add_input(args.ground_truth)
            truth, _ = simulator.read_labels_csv(args.ground_truth, net)
            predicted = series.labels()
            counts = estimator.confusion_counts(truth, predicted)
            print("confusion (truth -> predicted):")
            for (a, b), n in sorted(counts.items()):
                print(f"  {a} -> {b}: {n}")
            print(f"balanced accuracy: {estimator.balanced_accuracy(truth, predicted):.4f}")
        out.finish(manifest)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    net = _load_network(args)
    cfg = _resolve_sim_config(args, net)
    result = simulator.simulate(net, cfg)
    manifest = _manifest(
        "simulate",
        {
            "p0": cfg.peer.p0,
            "lambda_p": cfg.peer.decay,
            "spikes": [[s.fire_at, s.q0, s.decay] for s in cfg.spikes],
            "steps": cfg.steps,
            "seed_node": cfg.seed_node,
            "giant": bool(args.giant),
        },
        seeds={"rng_seed": cfg.rng_seed},
    )
    manifest.add_input(args.network)
    if args.config:
        manifest.add_input(args.config)
    with _Outputs(args.outdir) as out:
        write_cascade_csv(result.cascade, net, out.path("cascade.csv"))
        simulator.write_labels_csv(result, net, out.path("labels.csv"))
        n_ext = sum(1 for v in result.labels.values() if v == simulator.LABEL_EXTERNAL)
        n_peer = sum(1 for v in result.labels.values() if v == simulator.LABEL_PEER)
        print(
            f"activated {result.cascade.activated_count} of {net.node_count} nodes "
            f"({n_peer} peer, {n_ext} external, {len(result.both_fired)} with both hazards firing)"
        )
        out.finish(manifest)
    return 0


def _resolve_sim_config(args: argparse.Namespace, net: Network) -> simulator.SimConfig:
    file_cfg = simulator.read_config(args.config) if args.config else {}

    def pick(flag_value, key: str, cast, default):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return cast(file_cfg[key])
        return default

    p0 = pick(args.p0, "p0", float, simulator.DEFAULT_PEER.p0)
    decay = pick(args.decay_p, "lambda_p", float, simulator.DEFAULT_PEER.decay)
    steps = pick(args.steps, "steps", int, simulator.DEFAULT_STEPS)
    rng_seed = pick(args.seed, "rng_seed", int, 0)

    if args.spike:
        spikes = tuple(simulator.parse_spike_spec(s) for s in args.spike)
    elif "spikes" in file_cfg and args.fire_at is None:
        specs = [s for s in file_cfg["spikes"].split(";") if s.strip()]
        spikes = tuple(simulator.parse_spike_spec(s.strip()) for s in specs)
    else:
        q0 = pick(args.q0, "q0", float, simulator.DEFAULT_SPIKE_Q0)
        decay_e = pick(args.decay_e, "lambda_e", float, simulator.DEFAULT_SPIKE_DECAY)
        fire_raw = pick(args.fire_at, "fire_at", str, ",".join(str(s) for s in simulator.DEFAULT_SPIKE_STEPS))
        steps_list = [s for s in str(fire_raw).split(",") if s.strip()]
        spikes = tuple(simulator.ExternalSpike(q0=q0, decay=decay_e, fire_at=float(s)) for s in steps_list)

    seed_node_raw = args.seed_node if args.seed_node is not None else file_cfg.get("seed_node", "random")
    if seed_node_raw == "random":
        seed_node: int | str = "random"
    else:
        index = net.dense_index()
        if str(seed_node_raw) not in index:
            raise PeerexError(f"seed node {seed_node_raw!r} not in network")
        seed_node = index[str(seed_node_raw)]

    return simulator.SimConfig(
        peer=estimator.PeerParams(p0=p0, decay=decay),
        spikes=spikes,
        steps=steps,
        seed_node=seed_node,
        rng_seed=rng_seed,
    )


def cmd_rewire(args: argparse.Namespace) -> int:
    net = _load_network(args)
    rewired = configuration_rewire(net, swaps_per_edge=args.swaps_per_edge, seed=args.seed)
    manifest = _manifest(
        "rewire",
        {"swaps_per_edge": args.swaps_per_edge, "giant": bool(args.giant)},
        seeds={"seed": args.seed},
    )
    manifest.add_input(args.network)
    with _Outputs(args.outdir) as out:
        write_edge_csv(rewired, out.path("edges.csv"))
        write_id_map_csv(rewired, out.path("id_map.csv"))
        print(f"rewired {rewired.edge_count} edges across {rewired.node_count} nodes")
        out.finish(manifest)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    net = _load_network(args)
    cascade = _load_cascade(args, net)
    if args.period_start is not None:
        period = (args.period_start, args.period_start + args.period_length)
    else:
        period = calibrator.default_period(cascade, args.period_length)
    decay_values = _parse_float_list(args.decay_grid) if args.decay_grid else None
    p0_values = _parse_float_list(args.p0_grid) if args.p0_grid else None
    result = calibrator.sweep(
        net,
        cascade,
        decay_values,
        p0_values,
        period,
        target=args.target,
        delta=args.delta,
        tolerance=args.tolerance,
        threads=args.threads,
    )
    manifest = _manifest(
        "calibrate",
        {
            "target": args.target,
            "tolerance": args.tolerance,
            "delta": args.delta,
            "period": list(period),
            "lambda_grid": list(result.grid.decay_values),
            "p0_grid": list(result.grid.p0_values),
            "giant": bool(args.giant),
            "time_format": args.time_format,
            "utc_offset": args.utc_offset,
            "t_start": args.t_start,
            "t_end": args.t_end,
        },
    )
    manifest.add_input(args.network)
    manifest.add_input(args.cascade)
    with _Outputs(args.outdir) as out:
        _write_grid_csv(result, out.path("grid.csv"))
        if result.selected:
            print(f"{len(result.selected)} grid point(s) within {args.tolerance} of target {args.target}:")
            for lam, p0 in result.selected:
                print(f"  lambda={lam:g} p0={p0:g}")
        else:
            lam, p0 = result.nearest  # type: ignore[misc]
            print(
                f"no grid point within {args.tolerance} of target {args.target}; "
                f"nearest: lambda={lam:g} p0={p0:g}"
            )
        if args.robustness:
            dist = calibrator.robustness_max_l1(
                net, cascade, result.selected, delta=args.delta, curve_bin=args.curve_bin
            )
            if dist is None:
                print("robustness: fewer than two selected points, nothing to compare")
            else:
                print(f"robustness: max pairwise L1 between normalized peer curves = {dist:.4f}")
        out.finish(manifest)
    return 0


def _write_grid_csv(result: calibrator.SweepResult, path: str) -> None:
    grid = result.grid
    chosen = set(result.selected)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "p0", "peer_fraction", "selected"])
        for i, lam in enumerate(grid.decay_values):
            for j, p0 in enumerate(grid.p0_values):
                writer.writerow(
                    [repr(lam), repr(p0), repr(float(grid.results[i, j])), int((lam, p0) in chosen)]
                )


def cmd_homophily(args: argparse.Namespace) -> int:
    net = _load_network(args)
    attrs = read_attributes_csv(args.attributes, net)
    profile = homophily.homophily_profile(
        net, attrs, args.attribute, bins=args.bins, age_bin_width=args.age_bin
    )
    manifest = _manifest(
        "homophily",
        {"attribute": args.attribute, "bins": args.bins, "age_bin": args.age_bin, "giant": bool(args.giant)},
    )
    manifest.add_input(args.network)
    manifest.add_input(args.attributes)
    with _Outputs(args.outdir) as out:
        homophily.write_same_fraction_csv(profile.same_fraction, out.path("same_fraction.csv"))
        homophily.write_mixing_csv(profile.mixing, out.path("mixing_matrix.csv"))
        if profile.age_gaps is not None:
            homophily.write_age_gaps_csv(profile.age_gaps, out.path("age_gaps.csv"))
        sf = profile.same_fraction
        print(
            f"attribute {args.attribute!r}: {len(sf.fractions)} nodes scored "
            f"(excluded: {sf.excluded_missing} missing, {sf.excluded_zero_degree} isolated, "
            f"{sf.excluded_no_labeled_neighbors} without labeled neighbors); "
            f"assortativity {profile.mixing.assortativity:.4f}"
        )
        out.finish(manifest)
    return 0


def cmd_histogram(args: argparse.Namespace) -> int:
    rows = read_activation_rows(args.cascade, args.time_format, args.utc_offset)
    ids = sorted({orig for orig, _ in rows})
    index = {orig: k for k, orig in enumerate(ids)}
    pseudo = Network.from_edges([], len(ids), ids)
    clip = None
    if args.t_start is not None or args.t_end is not None:
        clip = (args.t_start, args.t_end)
    cascade = cascade_from_rows(rows, pseudo, clip=clip)
    subset = None
    if args.groups:
        if not args.group:
            raise PeerexError("--group is required when --groups is given")
        groups = read_groups_csv(args.groups)
        subset = {index[orig] for orig, g in groups.items() if g == args.group and orig in index}
    hist = activity_histogram(cascade, args.bin, subset=subset)
    manifest = _manifest(
        "histogram",
        {
            "bin": args.bin,
            "group": args.group,
            "time_format": args.time_format,
            "utc_offset": args.utc_offset,
            "t_start": args.t_start,
            "t_end": args.t_end,
        },
    )
    manifest.add_input(args.cascade)
    if args.groups:
        manifest.add_input(args.groups)
    with _Outputs(args.outdir) as out:
        with open(out.path("histogram.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_start", "count"])
            for start, count in hist:
                writer.writerow([repr(start), count])
        print(f"binned {sum(c for _, c in hist)} activation(s) into {len(hist)} bin(s)")
        out.finish(manifest)
    return 0


# ---------------------------------------------------------------------------
# parser assembly

def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise PeerexError(f"bad numeric list {text!r}") from None


def _add_common(p: argparse.ArgumentParser, network: bool = True) -> None:
    p.add_argument("-o", "--outdir", default=".", help="output directory (created if missing)")
    if network:
        p.add_argument("--network", required=True, help="edge-list CSV (source,target)")
        p.add_argument("--no-header", action="store_true", help="edge CSV has no header row")
        p.add_argument("--giant", action="store_true", help="restrict to the giant component after loading")


def _add_cascade_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cascade", required=True, help="activation CSV (id,timestamp)")
    p.add_argument("--time-format", choices=("epoch", "iso"), default="epoch")
    p.add_argument("--utc-offset", type=float, default=None, help="hours; applied to naive ISO timestamps")
    p.add_argument("--t-start", type=float, default=None, help="drop activations before this time")
    p.add_argument("--t-end", type=float, default=None, help="drop activations after this time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peerex",
        description="Decompose an activation cascade into peer-driven and externally-driven activations.",
    )
    parser.add_argument("--version", action="version", version=f"peerex {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="classify each activation as peer or external")
    _add_common(p)
    _add_cascade_input(p)
    p.add_argument("--p0", type=float, default=estimator.DEFAULT_P0, help="peer influence strength")
    p.add_argument("--lambda", dest="decay", type=float, default=estimator.DEFAULT_DECAY,
                   help="peer influence decay rate (per time unit)")
    p.add_argument("--delta", type=float, default=estimator.DEFAULT_DELTA, help="window length")
    p.add_argument("--stride", type=float, default=None, help="window spacing (default: delta, tumbling)")
    p.add_argument("--eval-at", choices=estimator.EVAL_MODES, default=estimator.EVAL_WINDOW_END,
                   help="evaluate probabilities at the window end or at each node's activation time")
    p.add_argument("--baseline", action="store_true", help="also write the no-activated-friends baseline series")
    p.add_argument("--per-node", action="store_true", help="also write per-node classifications")
    p.add_argument("--ground-truth", default=None, help="labels CSV from `simulate`; prints confusion counts")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="generate a labeled synthetic cascade")
    _add_common(p)
    p.add_argument("--config", default=None, help="flat key=value config file; flags override it")
    p.add_argument("--p0", type=float, default=None, help="peer influence strength")
    p.add_argument("--lambda-p", dest="decay_p", type=float, default=None, help="peer influence decay rate")
    p.add_argument("--q0", type=float, default=None, help="external spike strength")
    p.add_argument("--lambda-e", dest="decay_e", type=float, default=None, help="external spike decay rate")
    p.add_argument("--fire-at", default=None, help="comma-separated spike steps (with --q0/--lambda-e)")
    p.add_argument("--spike", action="append", default=None, metavar="FIRE_AT:Q0:DECAY",
                   help="explicit spike; repeatable, overrides --q0/--lambda-e/--fire-at")
    p.add_argument("--steps", type=int, default=None, help="number of simulation steps")
    p.add_argument("--seed-node", default=None, help='original node id, or "random"')
    p.add_argument("--seed", type=int, default=None, help="RNG seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rewire", help="degree-preserving configuration-model rewiring")
    _add_common(p)
    p.add_argument("--swaps-per-edge", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rewire)

    p = sub.add_parser("calibrate", help="grid-sweep (lambda, p0) against a target peer fraction")
    _add_common(p)
    _add_cascade_input(p)
    p.add_argument("--target", type=float, default=calibrator.DEFAULT_TARGET_FRACTION,
                   help="target first-period peer fraction")
    p.add_argument("--tolerance", type=float, default=calibrator.DEFAULT_SELECT_TOLERANCE)
    p.add_argument("--lambda-grid", dest="decay_grid", default=None, help="comma-separated decay values")
    p.add_argument("--p0-grid", default=None, help="comma-separated p0 values")
    p.add_argument("--delta", type=float, default=estimator.DEFAULT_DELTA, help="window length")
    p.add_argument("--period-start", type=float, default=None,
                   help="period start (default: first activation)")
    p.add_argument("--period-length", type=float, default=calibrator.DEFAULT_PERIOD_LENGTH)
    p.add_argument("--robustness", action="store_true",
                   help="report max pairwise L1 between selected points' peer curves")
    p.add_argument("--curve-bin", type=float, default=86400.0, help="bin for robustness peer curves")
    p.add_argument("--threads", type=int, default=DEFAULT_THREADS, help="worker cap for grid cells")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("homophily", help="attribute homophily profiles")
    _add_common(p)
    p.add_argument("--attributes", required=True, help="attributes CSV (id,vote,age,gender,locality)")
    p.add_argument("--attribute", default="vote", help="vote, gender, locality, or age_band")
    p.add_argument("--bins", type=int, default=10, help="bins for the same-fraction histogram")
    p.add_argument("--age-bin", type=float, default=1.0, help="bin width for age gaps")
    p.set_defaults(func=cmd_homophily)

    p = sub.add_parser("histogram", help="activation counts per time bin")
    _add_common(p, network=False)
    _add_cascade_input(p)
    p.add_argument("--bin", type=float, default=3600.0, help="bin width")
    p.add_argument("--groups", default=None, help="optional id,group CSV")
    p.add_argument("--group", default=None, help="group label selecting the subset")
    p.set_defaults(func=cmd_histogram)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (PeerexError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
