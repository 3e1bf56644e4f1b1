"""oracle-service command line: train a bundle, serve it over stdio or TCP."""

from __future__ import annotations

import argparse
import json
import sys

from .serve import ModelOracle, serve_stdio, serve_tcp
from .train import TrainConfig, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="oracle-service")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("train", help="train a classifier on a regrobust JSONL dataset")
    sub.add_argument("--data", required=True)
    sub.add_argument("--arch", default="lstm", choices=["lstm", "transformer"])
    sub.add_argument("--out", required=True)
    sub.add_argument("--hidden", type=int, default=64)
    sub.add_argument("--d-model", dest="d_model", type=int, default=64)
    sub.add_argument("--heads", type=int, default=2)
    sub.add_argument("--layers", type=int, default=2)
    sub.add_argument("--dropout", type=float, default=0.1)
    sub.add_argument("--lr", type=float, default=1e-3)
    sub.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    sub.add_argument("--max-steps", dest="max_steps", type=int, default=50_000)
    sub.add_argument("--seed", type=int, default=0)

    sub = subs.add_parser("serve", help="serve a trained bundle over the oracle protocol")
    sub.add_argument("--model", required=True)
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--stdio", action="store_true")
    group.add_argument("--tcp", help="host:port or :port")

    args = parser.parse_args(argv)
    if args.command == "train":
        cfg = TrainConfig(
            architecture=args.arch,
            hidden_size=args.hidden,
            d_model=args.d_model,
            nhead=args.heads,
            num_layers=args.layers,
            dropout=args.dropout,
            learning_rate=args.lr,
            batch_size=args.batch_size,
            max_steps=args.max_steps,
            seed=args.seed,
        )
        bundle = train(args.data, cfg, out_path=args.out)
        print(json.dumps({"out": args.out, "manifest": bundle["manifest"]}, indent=2))
        return 0
    oracle = ModelOracle(args.model)
    if args.stdio:
        serve_stdio(oracle)
        return 0
    host, _, port = args.tcp.rpartition(":")
    serve_tcp(oracle, host or "127.0.0.1", int(port))
    return 0


if __name__ == "__main__":
    sys.exit(main())
