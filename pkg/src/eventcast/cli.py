"""Command-line entry point.

Subcommands: compile | learn | run | evaluate | sweep | bench | generate.
Exit codes: 0 ok, 1 usage, 2 data error, 3 internal invariant violation.
All outputs land under ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .algebra import NoMatchingMintermError
from .engine import (
    MODE_REC,
    MODE_REC_FOR,
    MalformedEventError,
    MismatchedLogsError,
    benchmark_throughput,
    evaluate_forecasts,
    run_sharded,
    score_forecasts,
)
from .geo import UnknownNameError, builtin_registry, load_fishing_vessels, load_regions
from .pattern import ParseError, parse_extra_features, parse_pattern
from .pmc import (
    EmptyTrainingError,
    FinalStateQueryError,
    HorizonTooShortError,
    build_forecast_table,
    learn_matrix,
    load_pmc,
    save_pmc,
)
from .sfa import (
    DisambiguationLimitError,
    automaton_to_json,
    compile_snfa,
    determinize,
    disambiguate,
)
from .streams import (
    read_detections_csv,
    read_events,
    read_forecasts_csv,
    write_detections_csv,
    write_events_csv,
    write_forecasts_csv,
    write_report_json,
)
from .synth import (
    AttributeEmitter,
    ChainWalkSource,
    IidSource,
    MarkovSource,
    UninvertibleMintermError,
    generate_synthetic_stream,
)

log = logging.getLogger("eventcast")

_DATA_ERRORS = (
    ParseError,
    UnknownNameError,
    EmptyTrainingError,
    HorizonTooShortError,
    FinalStateQueryError,
    UninvertibleMintermError,
    MalformedEventError,
    MismatchedLogsError,
    DisambiguationLimitError,
    FileNotFoundError,
    IsADirectoryError,
    json.JSONDecodeError,
    ValueError,
    KeyError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pattern", required=True, help="pattern DSL file")
    p.add_argument("--order", type=int, default=None, help="override the pattern's order m")
    p.add_argument("--theta", type=float, default=None, help="override the confidence threshold")
    p.add_argument("--horizon", type=int, default=None, help="fixed forecast horizon (default: adaptive)")
    p.add_argument("--extras", default=None, help="override extra features, e.g. '[SpeedBetween(x, 0.0, 10.0)]'")
    p.add_argument("--regions", default=None, help="JSON file with named points/regions")
    p.add_argument("--fishing", default=None, help="file with fishing-vessel ids, one per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eventcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a pattern and dump the automaton")
    _add_common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("learn", help="estimate the transition model from a training stream")
    _add_common(p)
    p.add_argument("--train", required=True, help="training stream (CSV or NDJSON)")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("run", help="replay a stream, logging detections and forecasts")
    _add_common(p)
    p.add_argument("--test", required=True, help="stream to replay")
    p.add_argument("--train", default=None, help="training stream (when no --pmc)")
    p.add_argument("--pmc", default=None, help="previously saved model JSON")
    p.add_argument("--mode", choices=[MODE_REC, "recfor"], default="recfor")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="score forecasts against detections")
    p.add_argument("--out", default="out")
    p.add_argument("--forecasts", default=None)
    p.add_argument("--detections", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid evaluation over theta and order")
    _add_common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--thetas", default=None, help="comma list, e.g. 0.5,0.7,0.9")
    p.add_argument("--orders", default=None, help="comma list, e.g. 0,1")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="throughput with and without forecasting")
    _add_common(p)
    p.add_argument("--test", default=None, help="stream file (default: synthesize)")
    p.add_argument("--train", default=None)
    p.add_argument("--pmc", default=None)
    p.add_argument("--events", type=int, default=1_000_000)
    p.add_argument("--partitions", type=int, default=200)
    p.add_argument("--source", default=None, help="JSON minterm-source model")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="synthesize a stream for a pattern")
    _add_common(p)
    p.add_argument("--events", type=int, default=10_000)
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--source", default=None, help="JSON minterm-source model")
    p.add_argument("--pmc", default=None, help="walk a learned model instead")
    p.set_defaults(func=cmd_generate)

    return parser


# --- shared plumbing ---------------------------------------------------------


def _context(args):
    points, regions = ({}, {})
    if args.regions:
        points, regions = load_regions(args.regions)
    fishing = load_fishing_vessels(args.fishing) if args.fishing else frozenset()
    registry = builtin_registry(points, regions, fishing)
    return registry, points, regions, fishing


def _load_spec(args, registry):
    spec = parse_pattern(Path(args.pattern).read_text(), registry)
    if args.order is not None:
        spec = replace(spec, order=args.order)
    if args.theta is not None:
        spec = replace(spec, theta=args.theta)
    if args.extras is not None:
        spec = replace(spec, extras=parse_extra_features(args.extras, registry))
    return spec


def _compile(spec):
    nfa = compile_snfa(spec)
    dfa = determinize(nfa)
    dis = disambiguate(dfa, spec.order)
    return nfa, dfa, dis


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emitter(points, regions, fishing):
    return AttributeEmitter(
        points=points,
        regions=regions,
        fishing_vessels=fishing,
        attr_domains={"speed": (0.0, 40.0)},
    )


def _source_from_file(path, n_symbols):
    doc = json.loads(Path(path).read_text())
    order = int(doc.get("order", 0))
    if order == 0:
        probs = doc["probs"]
        if len(probs) != n_symbols:
            raise ValueError(
                f"source has {len(probs)} symbols but the alphabet has {n_symbols}"
            )
        return IidSource(probs)
    table = {
        tuple(int(x) for x in key.split(",")): row for key, row in doc["table"].items()
    }
    return MarkovSource(order, table, doc.get("marginal"))


def _partition_keys(n: int) -> list[str]:
    return [f"v{i:04d}" for i in range(n)]


# --- commands ----------------------------------------------------------------


def cmd_compile(args) -> int:
    registry, *_ = _context(args)
    spec = _load_spec(args, registry)
    nfa, dfa, dis = _compile(spec)
    out = _outdir(args)
    (out / "automaton.json").write_text(automaton_to_json(dis))
    print(
        f"minterms={len(dis.alphabet)} nfa-states={nfa.n_states} "
        f"dfa-states={dfa.n_states} disambiguated-states={dis.n_states} "
        f"(order={spec.order})"
    )
    return 0


def cmd_learn(args) -> int:
    registry, *_ = _context(args)
    spec = _load_spec(args, registry)
    _, _, dis = _compile(spec)
    events = read_events(args.train, spec.partition_attribute)
    pmc = learn_matrix(dis, events)
    out = _outdir(args)
    save_pmc(pmc, out / "pmc.json")
    print(
        f"states={pmc.n_states} finals={len(pmc.finals)} "
        f"unvisited={list(pmc.unvisited)}"
    )
    return 0


def _load_or_learn_pmc(args, spec, dis):
    if getattr(args, "pmc", None):
        return load_pmc(args.pmc)
    if getattr(args, "train", None):
        return learn_matrix(dis, read_events(args.train, spec.partition_attribute))
    raise ValueError("need --pmc or --train to obtain a transition model")


def cmd_run(args) -> int:
    registry, *_ = _context(args)
    spec = _load_spec(args, registry)
    _, _, dis = _compile(spec)
    forecasting = args.mode != MODE_REC
    table = None
    if forecasting:
        pmc = _load_or_learn_pmc(args, spec, dis)
        table = build_forecast_table(pmc, spec.theta, args.horizon)
    events = read_events(args.test, spec.partition_attribute)
    detections, forecasts, malformed = run_sharded(events, dis, table, args.workers)
    out = _outdir(args)
    write_detections_csv(out / "detections.csv", detections)
    flags = score_forecasts(forecasts, detections)
    write_forecasts_csv(out / "forecasts.csv", forecasts, flags)
    write_report_json(
        out / "run.json",
        {
            "detections": len(detections),
            "forecasts": len(forecasts),
            "malformed": malformed,
            "mode": MODE_REC_FOR if forecasting else MODE_REC,
        },
    )
    print(f"detections={len(detections)} forecasts={len(forecasts)} malformed={malformed}")
    return 0


def cmd_evaluate(args) -> int:
    out = _outdir(args)
    forecasts, _ = read_forecasts_csv(args.forecasts or out / "forecasts.csv")
    detections = read_detections_csv(args.detections or out / "detections.csv")
    report = evaluate_forecasts(forecasts, detections)
    write_report_json(out / "report.json", report)
    print(
        f"precision={report.precision:.4f} spread-mean={report.spread_mean:.2f} "
        f"scored={report.forecasts_scored} detections={report.detections}"
    )
    return 0


def _parse_list(text, cast):
    if text is None or text.strip() == "":
        return []
    return [cast(part) for part in text.split(",") if part.strip() != ""]


def cmd_sweep(args) -> int:
    registry, *_ = _context(args)
    spec = _load_spec(args, registry)
    thetas = _parse_list(args.thetas, float) if args.thetas is not None else [spec.theta]
    orders = _parse_list(args.orders, int) if args.orders is not None else [spec.order]
    variants = [("none", ())]
    if spec.extras:
        variants.append(("all", spec.extras))

    train = list(read_events(args.train, spec.partition_attribute))
    test = list(read_events(args.test, spec.partition_attribute))

    rows = []
    for m in orders:
        for label, extras in variants:
            variant = replace(spec, order=m, extras=extras)
            _, _, dis = _compile(variant)
            pmc = learn_matrix(dis, train)
            for theta in thetas:
                table = build_forecast_table(pmc, theta, args.horizon)
                detections, forecasts, _ = run_sharded(test, dis, table, args.workers)
                report = evaluate_forecasts(forecasts, detections)
                rows.append((theta, m, label, report.precision, report.spread_mean))

    out = _outdir(args)
    with open(out / "sweep.csv", "w") as fh:
        fh.write("theta,m,extras,precision,spread_mean\n")
        for theta, m, label, precision, spread in rows:
            fh.write(f"{theta!r},{m},{label},{precision!r},{spread!r}\n")
    for row in rows:
        print("theta={} m={} extras={} precision={:.4f} spread={:.2f}".format(*row))
    return 0


def _bench_stream(args, spec, dis, points, regions, fishing):
    if args.test:
        return list(read_events(args.test, spec.partition_attribute))
    source = (
        _source_from_file(args.source, len(dis.alphabet))
        if args.source
        else IidSource(np.full(len(dis.alphabet), 1.0 / len(dis.alphabet)))
    )
    return generate_synthetic_stream(
        source,
        dis.alphabet,
        _emitter(points, regions, fishing),
        args.events,
        args.seed,
        partition_keys=_partition_keys(args.partitions),
        partition_attribute=spec.partition_attribute,
    )


def cmd_bench(args) -> int:
    registry, points, regions, fishing = _context(args)
    spec = _load_spec(args, registry)
    _, _, dis = _compile(spec)
    events = _bench_stream(args, spec, dis, points, regions, fishing)
    if getattr(args, "pmc", None) or getattr(args, "train", None):
        pmc = _load_or_learn_pmc(args, spec, dis)
    else:
        pmc = learn_matrix(dis, events)
    table = build_forecast_table(pmc, spec.theta, args.horizon)

    rec = benchmark_throughput(events, dis, None, MODE_REC)
    recfor = benchmark_throughput(events, dis, table, MODE_REC_FOR)
    slowdown = (
        rec.events_per_second / recfor.events_per_second
        if recfor.events_per_second > 0
        else float("inf")
    )
    out = _outdir(args)
    write_report_json(
        out / "bench.json",
        {"rec": rec.to_dict(), "rec+for": recfor.to_dict(), "slowdown": slowdown},
    )
    print(f"rec: {rec.events_per_second:,.0f} events/s ({rec.events_processed} events)")
    print(f"rec+for: {recfor.events_per_second:,.0f} events/s ({recfor.events_processed} events)")
    print(f"slowdown={slowdown:.3f}x")
    return 0


def cmd_generate(args) -> int:
    registry, points, regions, fishing = _context(args)
    spec = _load_spec(args, registry)
    _, _, dis = _compile(spec)
    if args.pmc:
        pmc = load_pmc(args.pmc)
        source = ChainWalkSource.from_chain(dis, pmc.symbol_counts)
    elif args.source:
        source = _source_from_file(args.source, len(dis.alphabet))
    else:
        source = IidSource(np.full(len(dis.alphabet), 1.0 / len(dis.alphabet)))
    events = generate_synthetic_stream(
        source,
        dis.alphabet,
        _emitter(points, regions, fishing),
        args.events,
        args.seed,
        partition_keys=_partition_keys(args.partitions),
        partition_attribute=spec.partition_attribute,
    )
    out = _outdir(args)
    write_events_csv(out / "stream.csv", events)
    print(f"wrote {len(events)} events to {out / 'stream.csv'}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NoMatchingMintermError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
