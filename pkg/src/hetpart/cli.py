"""
Command line front end.

    hetpart partition --config run.json [--scheme exact] [--N 1000] [-o out.csv]
    hetpart compare   --config run.json --schemes proportional,exact
    hetpart bench     --config run.json [--trials 50] [-o bench.json]
    hetpart learn     --observations obs.csv --cluster cluster.json --batches batches.json
    hetpart gen-records --count 1000 --distribution uniform --seed 1 -o recs.bin

Config files are JSON; command line flags override their fields. Exit codes:
0 success, 2 invalid input, 3 record cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .adaptive import LearnedCostModel, plan_batch, read_observations, run_batches
from .cost_model import CostFunction
from .errors import HetpartError, RecordCapExceeded
from .partition import (
    SCHEMES,
    ClusterSpec,
    Partition,
    check_scheme,
    compute,
    parse_speeds,
    read_partition_sizes,
)
from .simulator import SimParams, generate_records, run_paired_sort, simulate, write_records
from .simulator.records import check_cap, digest_hex, multiset_digest

log = logging.getLogger("hetpart")

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    cluster: ClusterSpec
    scheme: str = "exact"
    N: int = 0
    seed: int = 0
    output: str | None = None
    dp_granularity: int = 1
    trials: int = 1
    distribution: str = "uniform"
    oversample: int = 32
    throttle: str = "account"
    pairing: str = "concurrent"
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; valid schemes: {', '.join(SCHEMES)}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 0:
            raise ConfigError(f"N must be a nonnegative integer, got {self.N!r}")
        if self.dp_granularity < 1:
            raise ConfigError("dp_granularity must be a positive integer")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.pairing not in ("concurrent", "sequential"):
            raise ConfigError("pairing must be 'concurrent' or 'sequential'")
        check_scheme(self.scheme, self.cluster)


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def _cluster_from(raw: dict, args) -> ClusterSpec:
    cfg = dict(raw)
    if getattr(args, "speeds", None):
        cfg["speeds"] = [float(x) for x in args.speeds.split(",")]
    if getattr(args, "cost", None):
        cfg.pop("costs", None)
        cfg["cost"] = {"family": args.cost}
    if "speeds" not in cfg:
        raise ConfigError("cluster needs 'speeds'")
    try:
        return ClusterSpec.from_config(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid cluster: {exc}") from None


def load_config(args) -> RunConfig:
    raw = _load_json(args.config) if getattr(args, "config", None) else {}
    cluster = _cluster_from(raw.get("cluster", {}), args)
    cfg = RunConfig(
        cluster=cluster,
        scheme=raw.get("scheme", "exact"),
        N=raw.get("N", 0),
        seed=int(raw.get("seed", 0)),
        output=raw.get("output"),
        dp_granularity=int(raw.get("dp_granularity", 1)),
        trials=int(raw.get("trials", 1)),
        distribution=raw.get("distribution", "uniform"),
        oversample=int(raw.get("oversample", 32)),
        throttle=raw.get("throttle", "account"),
        pairing=raw.get("pairing", "concurrent"),
    )
    for name in ("scheme", "N", "seed", "output", "dp_granularity", "trials", "distribution",
                 "oversample", "throttle", "pairing"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    return cfg


# -- partition / compare ----------------------------------------------------

def _write_partition(cfg: RunConfig, part: Partition, figures: bool) -> None:
    spec = cfg.cluster
    if cfg.output is None:
        sys.stdout.write(part.to_csv(spec))
        return
    out = Path(cfg.output)
    out.write_text(part.to_json(spec) if out.suffix == ".json" else part.to_csv(spec))
    if figures:
        plotting.plot_partition(spec.speeds, part.sizes, part.projected_times,
                                plotting.figure_path(out), title=f"{part.scheme}, N={part.N}")
    print(f"wrote {out} (makespan={part.makespan!r})")


def cmd_partition(args) -> int:
    cfg = load_config(args)
    cfg.validate()
    part = compute(cfg.scheme, cfg.cluster, int(cfg.N), cfg.dp_granularity)
    _write_partition(cfg, part, not args.no_figures)
    if args.timeline:
        Path(args.timeline).write_text(simulate(cfg.cluster, part, SimParams()).to_json())
    return EXIT_OK


def compare_rows(cfg: RunConfig, schemes: list[str]) -> list[dict]:
    rows = []
    first = None
    for scheme in schemes:
        part = compute(scheme, cfg.cluster, int(cfg.N), cfg.dp_granularity)
        if first is None:
            first = part.makespan
        gain = 0.0 if first == 0 else (first - part.makespan) / first * 100.0
        rows.append({"scheme": scheme, "makespan": part.makespan, "improvement_pct": gain})
    return rows


def cmd_compare(args) -> int:
    cfg = load_config(args)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if len(schemes) < 2:
        raise ConfigError("compare needs at least two schemes")
    for s in schemes:
        cfg.scheme = s
        cfg.validate()
    rows = compare_rows(cfg, schemes)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["scheme", "makespan", "improvement_pct"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({"scheme": r["scheme"], "makespan": repr(r["makespan"]),
                    "improvement_pct": f"{r['improvement_pct']:.6f}"})
    sys.stdout.write(buf.getvalue())
    if cfg.output:
        out = Path(cfg.output)
        out.write_text(buf.getvalue())
        if not args.no_figures:
            plotting.plot_compare(rows, plotting.figure_path(out))
    return EXIT_OK


# -- bench ------------------------------------------------------------------

def _sign_test_p(wins: int, n: int) -> float:
    from scipy.stats import binomtest

    return float(binomtest(wins, n, 0.5, alternative="greater").pvalue) if n else 1.0


def paired_trial(spec: ClusterSpec, base: Partition, other: Partition, seed: int, cfg: RunConfig):
    """Sort the same records under both partitions; returns (base_result, other_result)."""
    batch = generate_records(base.N, cfg.distribution, seed)
    return run_paired_sort(spec, base, other, batch, concurrent=cfg.pairing == "concurrent",
                           oversample=cfg.oversample, throttle=cfg.throttle, verify=False)


def run_bench(cfg: RunConfig, other: Partition | None = None) -> dict:
    spec = cfg.cluster
    N = int(cfg.N)
    check_cap(N)
    base = compute("proportional", spec, N)
    if other is None:
        other = compute(cfg.scheme, spec, N, cfg.dp_granularity)
    trials = []
    for t in range(cfg.trials):
        seed = cfg.seed + t
        rb, ro = paired_trial(spec, base, other, seed, cfg)
        trials.append({
            "seed": seed,
            "proportional": rb.timeline.to_dict(),
            cfg.scheme: ro.timeline.to_dict(),
            "ratio": ro.makespan / rb.makespan if rb.makespan else 1.0,
        })
    ratios = [t["ratio"] for t in trials]
    wins = sum(r < 1 for r in ratios)
    return {
        "N": N,
        "speeds": list(spec.speeds),
        "scheme": cfg.scheme,
        "pairing": cfg.pairing,
        "sizes": {"proportional": list(base.sizes), cfg.scheme: list(other.sizes)},
        "trials": trials,
        "median_ratio": float(np.median(ratios)),
        "median_makespan": {
            "proportional": float(np.median([t["proportional"]["makespan"] for t in trials])),
            cfg.scheme: float(np.median([t[cfg.scheme]["makespan"] for t in trials])),
        },
        "wins": wins,
        "sign_test_p": _sign_test_p(wins, len(trials)),
    }


def cmd_bench(args) -> int:
    cfg = load_config(args)
    cfg.validate()
    other = None
    if args.partition:
        sizes = read_partition_sizes(Path(args.partition).read_text())
        if len(sizes) != cfg.cluster.p:
            raise ConfigError(f"{args.partition}: {len(sizes)} nodes, cluster has {cfg.cluster.p}")
        cfg.N = sum(sizes)
        other = Partition.from_sizes(cfg.cluster, sizes, cfg.scheme)
    check_cap(int(cfg.N))
    report = run_bench(cfg, other)
    text = json.dumps(report, indent=2)
    if cfg.output:
        out = Path(cfg.output)
        out.write_text(text)
        if not args.no_figures:
            from .simulator.timeline import SortTimeline

            first = report["trials"][0]
            plotting.plot_timelines(
                [SortTimeline.from_dict(first["proportional"]), SortTimeline.from_dict(first[cfg.scheme])],
                ["proportional", cfg.scheme], plotting.figure_path(out),
                ratios=[t["ratio"] for t in report["trials"]] if len(report["trials"]) > 1 else None)
        print(f"wrote {out}: median ratio {report['median_ratio']:.4f}, "
              f"{report['wins']}/{len(report['trials'])} wins, sign test p={report['sign_test_p']:.3g}")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


# -- learn ------------------------------------------------------------------

def _parse_batches(raw) -> tuple[list[int], object]:
    truth = None
    if isinstance(raw, dict):
        batches = raw.get("batches", [])
        if raw.get("truth") is not None:
            t = raw["truth"]
            truth = ([CostFunction.from_config(c) for c in t] if isinstance(t, list)
                     else CostFunction.from_config(t))
    else:
        batches = raw
    try:
        batches = [int(b) for b in batches]
    except (TypeError, ValueError):
        raise ConfigError("batches must be a list of integers") from None
    if any(b < 0 for b in batches):
        raise ConfigError("batch sizes must be nonnegative")
    return batches, truth


def cmd_learn(args) -> int:
    try:
        observations = read_observations(args.observations)
    except ValueError as exc:
        raise ConfigError(f"{args.observations}: {exc}") from None
    cluster_raw = _load_json(args.cluster)
    speeds = parse_speeds(cluster_raw.get("speeds", cluster_raw.get("cluster", {}).get("speeds", [])))
    if not speeds:
        raise ConfigError("cluster file needs 'speeds'")
    batches, truth = _parse_batches(_load_json(args.batches))

    model = LearnedCostModel.load(args.model) if args.resume and Path(args.model).exists() \
        else LearnedCostModel(update_strategy=args.strategy)
    for size, duration, speed in observations:
        model.observe(size, duration, speed)

    rows = []
    if truth is not None:
        plans = []
        for N in batches:
            plans.append(plan_batch(model, speeds, N).sizes)
            model, spans = run_batches(model, speeds, [N], truth)
            rows.append((N, plans[-1], spans[0]))
    else:
        for N in batches:
            part = plan_batch(model, speeds, N)
            proj = ClusterSpec(speeds, cost=model.as_cost_function())
            rows.append((N, part.sizes, Partition.from_sizes(proj, part.sizes).makespan))

    model.save(args.model)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["batch", "N", "sizes", "makespan"])
    for b, (N, sizes, span) in enumerate(rows):
        w.writerow([b, N, " ".join(map(str, sizes)), repr(span)])
    sys.stdout.write(buf.getvalue())
    if args.report:
        Path(args.report).write_text(buf.getvalue())
        if not args.no_figures:
            plotting.plot_learning(model.known_points, [r[2] for r in rows],
                                   plotting.figure_path(args.report))
    return EXIT_OK


def cmd_gen_records(args) -> int:
    if args.count < 0:
        raise ConfigError("count must be nonnegative")
    batch = generate_records(args.count, args.distribution, args.seed)
    write_records(args.output, batch)
    print(f"wrote {batch.count} records to {args.output} digest={digest_hex(multiset_digest(batch.data))}")
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def _common(p: argparse.ArgumentParser, figures: bool = True) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--speeds", help="comma separated speeds (overrides config)")
    p.add_argument("--cost", choices=["linear", "nlogn"], help="shared cost family (overrides config)")
    p.add_argument("--N", type=int, help="number of items")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("--dp-granularity", dest="dp_granularity", type=int)
    if figures:
        p.add_argument("--no-figures", action="store_true", help="skip the PNG next to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetpart", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="compute one partition")
    _common(p)
    p.add_argument("--scheme")
    p.add_argument("--timeline", help="also write the simulated sort timeline (JSON)")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("compare", help="projected makespan of several schemes")
    _common(p)
    p.add_argument("--schemes", required=True, help="comma separated, first is the baseline")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="paired real-sort trials: proportional vs a scheme")
    _common(p)
    p.add_argument("--scheme")
    p.add_argument("--trials", type=int)
    p.add_argument("--distribution", choices=["uniform", "sorted", "reverse", "few"])
    p.add_argument("--oversample", type=int)
    p.add_argument("--throttle", choices=["account", "sleep"])
    p.add_argument("--pairing", choices=["concurrent", "sequential"])
    p.add_argument("--partition", help="CSV/JSON partition to use for the scheme arm")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("learn", help="learn a cost model and plan batches")
    p.add_argument("--observations", required=True, help="CSV with size,duration,speed")
    p.add_argument("--cluster", required=True, help="JSON with speeds")
    p.add_argument("--batches", required=True, help="JSON list of batch sizes, or {batches, truth}")
    p.add_argument("--model", default="model.json")
    p.add_argument("--resume", action="store_true", help="start from an existing --model file")
    p.add_argument("--strategy", choices=["replace", "mean", "max"], default="mean")
    p.add_argument("--report")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("gen-records", help="write 100-byte records to a binary file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--distribution", choices=["uniform", "sorted", "reverse", "few"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_records)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RecordCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (HetpartError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
