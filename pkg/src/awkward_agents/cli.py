"""Command-line entry: ``run``, ``validate`` and ``trace``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from awkward_agents.arena_sim import SimConfig
from awkward_agents.harness import Assets, default_config, load_agent_inputs, run_experiment, run_trial


def _config(path: str | None) -> SimConfig:
    if path is None:
        return default_config()
    return SimConfig.from_json(Path(path).read_text(encoding="utf-8"))


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _arm_list(text: str) -> list[str]:
    arms = [part.strip() for part in text.split(",") if part.strip()]
    if not arms or any(a not in ("on", "off") for a in arms):
        raise argparse.ArgumentTypeError(f"arms must be 'on' and/or 'off', got {text!r}")
    return arms


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="simulation config JSON (default: packaged)")
    p.add_argument("--plans", help="directory holding the Position 5 *.plan.json (default: packaged)")
    p.add_argument("--org", help="directory with roles.json, scenes.json, norms.json (default: packaged)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="awkward-agents", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the gold-divergence experiment")
    _add_inputs(run)
    run.add_argument("--seeds", type=_int_list, default=[1, 2, 3, 4, 5])
    run.add_argument("--arms", type=_arm_list, default=["on", "off"])
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)

    val = sub.add_parser("validate", help="check a plan and organisation against the primitive catalog")
    _add_inputs(val)

    tr = sub.add_parser("trace", help="print the planner trace and enforcement log of one trial")
    _add_inputs(tr)
    tr.add_argument("--seed", type=int, required=True)
    tr.add_argument("--arm", choices=["on", "off"], default="on")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config(args.config)
        assets = Assets.from_dirs(args.plans, args.org)
        if args.command == "validate":
            _, plan, org = load_agent_inputs(config, assets)
            print(f"ok: plan {plan.name!r} ({len(plan.drives)} drives), {len(org.roles)} roles, {len(org.scenes)} scenes")
            return 0
        if args.command == "trace":
            record = run_trial(config, args.seed, args.arm == "on", assets, keep_trace=True)
            out = sys.stdout
            for line in record.trace:
                out.write(line + "\n")
            out.write(record.enforcement_jsonl())
            return 0
        summary = run_experiment(config, args.seeds, args.arms, assets, out_dir=args.out, workers=args.workers)
        sys.stdout.write(summary.summary_json())
        return 0
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
