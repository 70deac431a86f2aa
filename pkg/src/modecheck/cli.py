"""Command line: ``run``, ``replay`` and ``compare``.

Exit codes: 0 completed, 1 configuration error, 2 a fault-free profiling
flight was unsafe, 3 replay diverged.  ``MODECHECK_OUT`` overrides the
output directory.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from .campaign import (
    CampaignConfig,
    GoldenRunViolation,
    compare_strategies,
    comparison_table,
    dumps,
    find_record,
    replay,
    resolve_out_dir,
    run_campaign,
)
from .monitor import ConfigError
from .runner import ReplayDivergence

EXIT_OK, EXIT_CONFIG, EXIT_GOLDEN, EXIT_DIVERGED = 0, 1, 2, 3


def load_config(path) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    data = yaml.safe_load(text) if str(path).endswith((".yaml", ".yml")) else json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return data


def _build(args, **overrides) -> CampaignConfig:
    data = load_config(args.config)
    for key in ("strategy", "budget", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "out", None):
        data["out_dir"] = args.out
    data.update(overrides)
    return CampaignConfig.from_dict(data)


def cmd_run(args) -> int:
    cfg = _build(args)
    if resolve_out_dir(cfg) is None:
        cfg = cfg.replace(out_dir="modecheck-out")
    report = run_campaign(cfg)
    t = report["totals"]
    print(f"{cfg.strategy}: {t['simulations']} simulations, {t['unsafe']} unsafe, bugs: {', '.join(t['distinct_bugs']) or '-'}")
    print(f"report: {resolve_out_dir(cfg) / 'report.json'}")
    return EXIT_OK


def cmd_replay(args) -> int:
    report = json.loads(Path(args.report).read_text())
    data = dict(report["config"])
    cfg = CampaignConfig.from_dict(data)
    record = find_record(report, args.scenario)
    verdict = replay(record, cfg, jitter_seed=args.jitter_seed)
    print(json.dumps({"scenario": args.scenario, "recorded": record["verdict"], "replayed": verdict.to_json()}, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _build(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    result = compare_strategies(cfg, strategies, args.budget)
    print(comparison_table(result))
    out = resolve_out_dir(cfg)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        summary = {k: v for k, v in result.items() if k != "reports"}
        (out / "comparison.json").write_text(dumps(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modecheck", description="Mode-boundary sensor fault injection for the reference firmware.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="profile, search within a budget, write a report")
    r.add_argument("--config")
    r.add_argument("--strategy")
    r.add_argument("--budget", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="re-fly one scenario from a report")
    rp.add_argument("--report", required=True)
    rp.add_argument("--scenario", type=int, required=True)
    rp.add_argument("--jitter-seed", type=int, default=None)
    rp.set_defaults(func=cmd_replay)

    c = sub.add_parser("compare", help="run several strategies with the same budget and seeds")
    c.add_argument("--config")
    c.add_argument("--strategies", default="sabre,bfs,dfs,random")
    c.add_argument("--budget", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, yaml.YAMLError, json.JSONDecodeError, FileNotFoundError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GoldenRunViolation as exc:
        print(f"golden run violation: {exc}", file=sys.stderr)
        return EXIT_GOLDEN
    except ReplayDivergence as exc:
        print(f"replay divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
