"""``nest`` command line: gen-data, train, eval, predict, inspect.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from ..config import Config, ConfigError
from ..numerics import CheckpointError, NumericError
from ..scenario import KINDS, ScenarioError, generate_synthetic, load_scenarios, save_scenarios
from .evaluate import evaluate, hypergraph_records, load_checkpoint, prediction_records, write_jsonl
from .train import train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("nest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _params(pairs: list[str]) -> dict:
    out = {}
    for item in pairs:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got '{item}'")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[key] = tuple(value) if isinstance(value, list) else value
    return out


def _config(path, overrides: dict) -> Config:
    cfg = Config.load(path) if path else Config()
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg


def cmd_gen_data(args) -> int:
    try:
        scenarios = generate_synthetic(args.kind, args.count, args.seed, _params(args.param))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_scenarios(args.out, scenarios)
    print(f"wrote {len(scenarios)} {args.kind} scenarios to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args.config, {"steps": args.steps, "seed": args.seed})
    result = train(cfg, args.data, args.out, log_every=args.log_every)
    final = result.losses[-1] if result.losses else float("nan")
    print(f"trained {len(result.losses)} steps, final loss {final:.6f}")
    print(f"checkpoint {result.checkpoint}")
    print(f"loss curve {result.curve}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = Config.load(args.config) if args.config else None
    report = evaluate(args.ckpt, args.data, cfg, timing=not args.no_timing)
    doc = report.to_json()
    text = json.dumps(doc, indent=2)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    params, cfg = load_checkpoint(args.ckpt, Config.load(args.config) if args.config else None)
    records = prediction_records(params, cfg, load_scenarios(args.data))
    write_jsonl(args.out, records)
    print(f"wrote {len(records)} predictions to {args.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    params, cfg = load_checkpoint(args.ckpt, Config.load(args.config) if args.config else None)
    if not cfg.hypergraph:
        raise UsageError("inspect needs a checkpoint trained with hypergraph=true")
    records = hypergraph_records(params, cfg, load_scenarios(args.data))
    write_jsonl(args.out, records)
    print(f"wrote {len(records)} hypergraphs to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nest", description="Hypergraph trajectory prediction toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic scenario file")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="generator parameter override (JSON value), repeatable")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a model and write a checkpoint")
    t.add_argument("--config", help="JSON config file (defaults if omitted)")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--steps", type=int, help="override config steps")
    t.add_argument("--seed", type=int, help="override config seed")
    t.add_argument("--log-every", type=int, default=100)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="compute metrics and timing for a checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--config", help="config whose hash must match the checkpoint")
    e.add_argument("--report", help="write the JSON report here")
    e.add_argument("--no-timing", action="store_true", help="skip the timing measurement")
    e.set_defaults(func=cmd_eval)

    for name, func, what in (("predict", cmd_predict, "predictions"),
                             ("inspect", cmd_inspect, "formed hypergraphs")):
        q = sub.add_parser(name, help=f"write {what} as JSONL")
        q.add_argument("--ckpt", required=True)
        q.add_argument("--data", required=True)
        q.add_argument("--out", required=True)
        q.add_argument("--config", help="config whose hash must match the checkpoint")
        q.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"nest: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"nest: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, CheckpointError, OSError, json.JSONDecodeError) as exc:
        print(f"nest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
