"""Command-line front end: certify, train-iris, bounds."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from relucert.data import ingest_iris
from relucert.network import load_network, save_network
from relucert.regions import EmptyRegionError, load_region, preact_bounds
from relucert.relaxation import load_safety
from relucert.runner import (
    STRATEGY_GRAMMAR,
    StrategyError,
    certify_record,
    figure_series,
    network_hash,
    parse_strategy,
    write_figure_csv,
    RunReport,
)
from relucert.sdp import SdpSettings
from relucert.training import TrainConfig, train_one_layer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relucert",
        description="Certify ReLU network robustness via partitioned LP/SDP relaxations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cert = sub.add_parser("certify", help="bound c @ z over an input region per strategy")
    cert.add_argument("--network", required=True, help="network JSON file")
    cert.add_argument("--region", required=True, help="region JSON file")
    cert.add_argument("--safety", required=True, help="safety spec JSON file")
    cert.add_argument(
        "--strategy",
        default="none",
        help=f"comma-separated strategies; grammar: {STRATEGY_GRAMMAR}",
    )
    cert.add_argument("--solver", choices=("lp", "sdp"), default="lp")
    cert.add_argument("--sdp-eps", type=float, default=1e-5)
    cert.add_argument("--sdp-max-iters", type=int, default=50_000)
    cert.add_argument("--out", help="write the JSON report here")
    cert.add_argument("--csv", help="write the comparison-series CSV here")

    train = sub.add_parser("train-iris", help="train the one-layer Iris classifier")
    train.add_argument("--csv", required=True, help="Iris CSV path")
    train.add_argument("--out", required=True, help="write the network JSON here")
    train.add_argument("--seed", type=int, default=42)
    train.add_argument("--epochs", type=int, default=2000)
    train.add_argument("--lr", type=float, default=0.1)
    train.add_argument("--hidden", type=int, default=None, help="optional hidden layer width")

    bounds = sub.add_parser("bounds", help="print per-layer preactivation bounds")
    bounds.add_argument("--network", required=True)
    bounds.add_argument("--region", required=True)
    bounds.add_argument("--mode", choices=("lp_tight", "interval"), default="lp_tight")

    return parser


def _cmd_certify(args) -> int:
    with open(args.network, "rb") as fh:
        net = load_network(fh.read())
    with open(args.region, "rb") as fh:
        region = load_region(fh.read())
    with open(args.safety, "rb") as fh:
        safety = load_safety(fh.read())
    strategies = [s.strip() for s in args.strategy.split(",") if s.strip()]
    if not strategies:
        print("error: no strategies given", file=sys.stderr)
        return 2
    for s in strategies:
        parse_strategy(s)  # surface grammar errors before solving anything
    settings = SdpSettings(eps=args.sdp_eps, max_iters=args.sdp_max_iters)

    record = certify_record(net, region, safety, strategies, solver=args.solver, sdp_settings=settings)
    report = RunReport(
        records=[record],
        network_hash=network_hash(net),
        strategies=tuple(strategies),
        solver=args.solver,
        tolerances={"ordering": 1e-7, "sdp_eps": args.sdp_eps if args.solver == "sdp" else None},
    )
    for entry in record.entries:
        verdict = "SAFE" if entry.safe else "not certified"
        print(f"{entry.strategy:>14}: bound {entry.bound:+.6f}  [{verdict}]")
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(report.to_json())
        print(f"report written to {args.out}")
    if args.csv:
        series = figure_series(net, region, safety)
        series.update(point_index=0, epsilon=float(np.max(region.upper - region.lower)) / 2.0, label="")
        write_figure_csv(args.csv, [series])
        print(f"comparison series written to {args.csv}")
    return 0 if all(e.safe for e in record.entries) else 1


def _cmd_train_iris(args) -> int:
    data = ingest_iris(args.csv, seed=args.seed)
    config = TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, seed=args.seed, hidden=args.hidden
    )
    result = train_one_layer(data, config)
    with open(args.out, "wb") as fh:
        fh.write(save_network(result.network))
    print(
        f"train accuracy {result.train_accuracy:.3f}, test accuracy {result.test_accuracy:.3f}"
        + ("" if result.reached_target else "  [below 0.90 target]")
    )
    print(f"network written to {args.out}")
    return 0


def _cmd_bounds(args) -> int:
    with open(args.network, "rb") as fh:
        net = load_network(fh.read())
    with open(args.region, "rb") as fh:
        region = load_region(fh.read())
    bounds = preact_bounds(net, region, args.mode)
    doc = {
        "mode": args.mode,
        "layers": [
            {
                "lower": lb.lower.tolist(),
                "upper": lb.upper.tolist(),
                "stability": list(lb.stability),
            }
            for lb in bounds.layers
        ],
    }
    print(json.dumps(doc, indent=1))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "train-iris":
            return _cmd_train_iris(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
    except StrategyError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except EmptyRegionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
