"""Command-line entry points: `lab run`, `lab check`, `lab report`."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .lab import load_config, read_run, report, run_experiment


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out or f"runs/{Path(args.config).stem}"
    run = run_experiment(cfg, out_dir=out_dir)
    print(f"wrote {out_dir}/run.json")
    if run.fit:
        print(json.dumps(run.fit, indent=2, sort_keys=True))
    for chk in run.checks:
        print(f"check {chk['name']}: verdict={chk['verdict']} fitted_C={chk['fitted_C']:.6g}")
    return 0


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    cfg = replace(cfg, experiment=f"bound_check:{args.name}")
    out_dir = args.out or f"runs/check_{args.name}"
    run = run_experiment(cfg, out_dir=out_dir)
    ok = all(chk["verdict"] for chk in run.checks)
    for chk in run.checks:
        print(
            f"{chk['name']}: verdict={chk['verdict']} fitted_C={chk['fitted_C']:.6g} "
            f"ratio_range=[{chk['ratio_min']:.4g}, {chk['ratio_max']:.4g}]"
        )
    return 0 if ok else 1


def _cmd_report(args) -> int:
    run = read_run(args.run_dir)
    print(f"kind: {run.kind}")
    for rec in run.records:
        line = f"hbar={rec['hbar']:<8g} n={rec.get('n', '?'):<6}"
        if "trace_error" in rec:
            line += f" trace_error={rec['trace_error']:.6g} l2_error={rec['l2_error']:.6g}"
        print(line)
    if run.fit:
        print("fit:", json.dumps(run.fit, sort_keys=True))
    for chk in run.checks:
        print(f"check {chk['name']}: verdict={chk['verdict']}")
    if args.regenerate:
        report(run, args.run_dir)
        print(f"regenerated artifacts in {args.run_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lab", description="mean-field dynamics laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (default runs/<config-stem>)")
    p_run.set_defaults(fn=_cmd_run)

    p_check = sub.add_parser("check", help="run one named bound check")
    p_check.add_argument("name")
    p_check.add_argument("config")
    p_check.add_argument("--out", default=None)
    p_check.set_defaults(fn=_cmd_check)

    p_rep = sub.add_parser("report", help="summarize a finished run directory")
    p_rep.add_argument("run_dir")
    p_rep.add_argument("--regenerate", action="store_true", help="rewrite artifacts from run.json")
    p_rep.set_defaults(fn=_cmd_report)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
