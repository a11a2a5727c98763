"""Command-line interface.

Subcommands::

    hubcast simulate --config cfg.json [--trials N] [--seed S]
                     [--out report.json|report.csv] [--trace traces.jsonl]
                     [--figs DIR]
    hubcast regime N1 N2 [--thresholds a,b,c] [--json]
    hubcast treecode --arity 3 --depth 6 [--alpha 0.5] [--alphabet 64]
                     [--seed 7] [--out tc.json]
    hubcast check --trace traces.jsonl [--json]
    hubcast sweep --config cfg.json --epsilons 0,0.005,0.02
                  [--strategies naive,basic] [--trials N] [--out sweep.csv]
                  [--figs DIR | --no-figs]

Exit status is nonzero whenever an invariant or step-bound violation is
observed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .harness import (ConfigError, RegimeThresholds, run_experiment, run_sweep,
                      select_regime, sweep_to_csv, REGIME_LABELS)
from .instrument import Trace, check_step_bound
from .treecode import build_tree_code


def _load_config(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.seed is not None:
        cfg.setdefault("noise", {})["seed"] = args.seed
    report = run_experiment(cfg, keep_traces=args.trace is not None)
    if args.trace:
        with open(args.trace, "w") as fh:
            for tr in report.traces:
                fh.write(tr.to_jsonl())
    if args.out:
        if args.out.endswith(".csv"):
            rows = run_sweep(cfg, [cfg["noise"].get("epsilon", 0.0)])
            with open(args.out, "w") as fh:
                fh.write(sweep_to_csv(rows))
        else:
            with open(args.out, "w") as fh:
                fh.write(report.to_json())
    if args.figs:
        from .report import render_experiment_figures
        for p in render_experiment_figures(report, args.figs):
            print(f"figure: {p}")
    print(f"success rate {report.success_rate:.4f} "
          f"[{report.wilson_low:.4f}, {report.wilson_high:.4f}] "
          f"over {len(report.trials)} trials")
    print(f"rounds/trial {report.mean_rounds:.1f} "
          f"({report.steps} steps x {report.per_step_rounds}), "
          f"overhead {report.overhead:.1f}x vs RC")
    print(f"regime {report.regime} ({REGIME_LABELS[report.regime]}), "
          f"predicted factor {report.predicted_overhead:.2f}")
    print(f"violations: {report.violations}")
    return 1 if report.violations else 0


def _cmd_regime(args) -> int:
    thresholds = RegimeThresholds()
    if args.thresholds:
        try:
            a, b, c = (float(x) for x in args.thresholds.split(","))
        except ValueError:
            raise SystemExit("--thresholds expects three comma-separated numbers")
        thresholds = RegimeThresholds(a, b, c)
    regime, h = select_regime(args.n1, args.n2, thresholds)
    if args.json:
        print(json.dumps({"n1": args.n1, "n2": args.n2, "regime": regime,
                          "predicted_overhead": h}))
    else:
        print(f"regime {regime}: {REGIME_LABELS[regime]}")
        print(f"predicted overhead factor h = {h:.3f}")
    return 0


def _cmd_treecode(args) -> int:
    tc = build_tree_code(args.arity, args.alpha, max_depth=args.depth,
                         seed=args.seed, alphabet_size=args.alphabet,
                         verify=args.verify)
    print(f"built tree code: arity={tc.arity} |S|={tc.alphabet_size} "
          f"({tc.symbol_bits} bits/symbol), depth {tc.max_depth} "
          f"verified by {tc.verify_mode} check, {len(tc.salts)} resampled nodes")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(tc.to_json())
        print(f"descriptor written to {args.out}")
    return 0


def _cmd_check(args) -> int:
    with open(args.trace) as fh:
        text = fh.read()
    # trace files may concatenate several trials; split on header lines
    violations = []
    traces = 0
    chunk: list[str] = []
    for line in text.splitlines():
        if line.strip().startswith('{"kind": "trace"') and chunk:
            violations += check_step_bound(Trace.from_jsonl("\n".join(chunk)))
            traces += 1
            chunk = [line]
        elif line.strip():
            chunk.append(line)
    if chunk:
        violations += check_step_bound(Trace.from_jsonl("\n".join(chunk)))
        traces += 1
    if args.json:
        print(json.dumps({"traces": traces,
                          "violations": [vars(v) for v in violations]}))
    else:
        print(f"checked {traces} trace(s): {len(violations)} violation(s)")
        for v in violations:
            print(f"  {v}")
    return 1 if violations else 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if args.trials is not None:
        cfg["trials"] = args.trials
    epsilons = [float(x) for x in args.epsilons.split(",")]
    strategies = args.strategies.split(",") if args.strategies else None
    rows = run_sweep(cfg, epsilons, strategies)
    text = sweep_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        print(text, end="")
    if args.figs is not False:
        from .report import render_sweep_figures
        fig_dir = args.figs or (os.path.dirname(os.path.abspath(args.out))
                                if args.out else ".")
        stem = (os.path.splitext(os.path.basename(args.out))[0]
                if args.out else "sweep")
        for p in render_sweep_figures(rows, fig_dir, stem=stem):
            print(f"figure: {p}")
    bad = sum(r["violations"] for r in rows)
    if bad:
        print(f"violations: {bad}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hubcast",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment from a config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", help="report path (.json or .csv)")
    sim.add_argument("--trace", help="write per-trial traces (JSON lines)")
    sim.add_argument("--figs", help="directory for figures")
    sim.set_defaults(func=_cmd_simulate)

    reg = sub.add_parser("regime", help="print the regime for a topology")
    reg.add_argument("n1", type=int)
    reg.add_argument("n2", type=int)
    reg.add_argument("--thresholds", help="c_a,c_b,c_c (default 1,1,1)")
    reg.add_argument("--json", action="store_true")
    reg.set_defaults(func=_cmd_regime)

    tcp = sub.add_parser("treecode", help="build and verify a tree code")
    tcp.add_argument("--arity", type=int, default=3)
    tcp.add_argument("--alpha", type=float, default=0.5)
    tcp.add_argument("--depth", type=int, default=6)
    tcp.add_argument("--alphabet", type=int, default=None)
    tcp.add_argument("--seed", type=int, default=7)
    tcp.add_argument("--verify", choices=["auto", "exhaustive", "sampled"],
                     default="auto")
    tcp.add_argument("--out", help="write the serialized descriptor here")
    tcp.set_defaults(func=_cmd_treecode)

    chk = sub.add_parser("check", help="step-bound check on a trace file")
    chk.add_argument("--trace", required=True)
    chk.add_argument("--json", action="store_true")
    chk.set_defaults(func=_cmd_check)

    swp = sub.add_parser("sweep", help="epsilon/strategy grid from a config")
    swp.add_argument("--config", required=True)
    swp.add_argument("--epsilons", required=True,
                     help="comma-separated crossover probabilities")
    swp.add_argument("--strategies", help="comma-separated strategy kinds")
    swp.add_argument("--trials", type=int)
    swp.add_argument("--out", help="CSV path")
    swp.add_argument("--figs", nargs="?", const=None, default=None,
                     help="figure directory (defaults next to --out)")
    swp.add_argument("--no-figs", dest="figs", action="store_false")
    swp.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
