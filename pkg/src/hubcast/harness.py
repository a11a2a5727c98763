"""Experiment orchestration: regime selection, Monte Carlo batteries,
aggregation, and delimited/JSON reporting.

A single experiment is described by a JSON config document::

    {
      "topology": {"n1": 2, "n2": 2},
      "rc": 6,
      "protocol": {"kind": "random", "seed": 1, "input_bits": 8},
      "inputs": {"seed": 7},
      "noise": {"epsilon": 0.01, "seed": 1000},
      "engine": "rs",                      # rs | chunked | chunked-simple
      "strategy": {"kind": "naive", "profile": "desk", "overrides": {}},
      "tree_code": {"seed": 7, "alphabet_size": 64},
      "chunked": {"k": 2, "seed": 3},
      "trials": 100
    }

Each trial t runs with noise seed ``seed + t``; aggregation reports the
success rate with a Wilson interval, mean rounds, the measured overhead
rounds/RC, the predicted overhead of the regime the topology falls into, and
the (required-zero) count of invariant and step-bound violations.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .channel import NoiseModel
from .chunked import build_chunk_codecs, run_chunked, run_chunked_simple, suggested_k
from .exchange import make_strategy
from .instrument import Trace, check_step_bound
from .model import Topology, inputs_from_seed, make_protocol
from .rs import run_rs
from .treecode import build_tree_code


class ConfigError(ValueError):
    """Bad experiment configuration, with the offending field named."""


# ---------------------------------------------------------------------------
# Regime selection
# ---------------------------------------------------------------------------

REGIME_LABELS = {
    1: "hub comparable to links: loglog(n1) overhead",
    2: "more links than link size: loglog(n2) overhead",
    3: "link count exponential in link size: log(n2)*loglog(n1)/log(n1)",
    4: "hub-dominated: n1*log(n2)/loglog(n2), chunked simulation",
}


@dataclass(frozen=True)
class RegimeThresholds:
    c_a: float = 1.0
    c_b: float = 1.0
    c_c: float = 1.0


def select_regime(n1: int, n2: int,
                  thresholds: RegimeThresholds = RegimeThresholds()) -> tuple[int, float]:
    """Regime index (1..4) and the predicted overhead factor for (n1, n2).

    The four half-open cases compare log(n2) against log(n1), n1, and the
    doubly-logarithmic boundary; n2 = 1 always lands in regime 1.  The
    returned overhead is a real number for reporting only.
    """
    if n1 < 2 or n2 < 1:
        raise ConfigError(f"regime selection needs n1 >= 2, n2 >= 1, got ({n1}, {n2})")
    log_n1 = math.log2(n1)
    log_n2 = math.log2(n2) if n2 > 1 else 0.0
    loglog_n1 = math.log2(log_n1) if log_n1 > 1 else 0.0
    loglog_n2 = math.log2(log_n2) if log_n2 > 1 else 0.0

    def _h(regime: int) -> float:
        if regime == 1:
            return math.log2(max(1.0, log_n1))
        if regime == 2:
            return math.log2(max(1.0, log_n2))
        if regime == 3:
            return log_n2 * max(1.0, loglog_n1) / log_n1
        return n1 * log_n2 / max(1.0, loglog_n2)

    if log_n2 <= thresholds.c_a * log_n1:
        return 1, _h(1)
    if log_n2 <= thresholds.c_b * n1:
        return 2, _h(2)
    # the regime-3 boundary degenerates for n1 = 2 (loglog n1 = 0): treat it
    # as unbounded, everything short of that stays in regime 3
    if loglog_n1 <= 0:
        return 3, _h(3)
    if loglog_n2 <= thresholds.c_c * (n1 * log_n1) / loglog_n1:
        return 3, _h(3)
    return 4, _h(4)


# ---------------------------------------------------------------------------
# Experiment running
# ---------------------------------------------------------------------------

@dataclass
class TrialSummary:
    seed: int
    success: bool
    steps: int
    rounds: int
    bk_total: int
    tree_errors: int
    symbol_errors: int
    step_bound_violations: int
    invariant_violations: int


@dataclass
class ExperimentReport:
    config: dict
    trials: list[TrialSummary]
    success_rate: float
    wilson_low: float
    wilson_high: float
    mean_rounds: float
    per_step_rounds: int
    steps: int
    overhead: float
    regime: int
    predicted_overhead: float
    violations: int
    traces: list[Trace] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "success_rate": self.success_rate,
            "wilson_interval": [self.wilson_low, self.wilson_high],
            "mean_rounds": self.mean_rounds,
            "per_step_rounds": self.per_step_rounds,
            "steps": self.steps,
            "overhead": self.overhead,
            "regime": self.regime,
            "predicted_overhead": self.predicted_overhead,
            "violations": self.violations,
            "trials": [vars(t) for t in self.trials],
        }
        return json.dumps(doc, indent=2)


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _require(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing config field {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config field {key!r} must be {kind}, got {type(val)}")
    return val


def validate_config(cfg: dict) -> dict:
    topo = _require(cfg, "topology", dict)
    n1, n2 = _require(topo, "n1", int), _require(topo, "n2", int)
    if n1 < 1 or n2 < 1:
        raise ConfigError("topology.n1 and topology.n2 must be positive")
    rc = _require(cfg, "rc", int)
    if rc < 1:
        raise ConfigError("rc must be >= 1")
    noise = _require(cfg, "noise", dict)
    eps = noise.get("epsilon", 0.0)
    if not 0.0 <= eps < 0.5:
        raise ConfigError("noise.epsilon must lie in [0, 1/2)")
    engine = cfg.get("engine", "rs")
    if engine not in ("rs", "chunked", "chunked-simple"):
        raise ConfigError(f"unknown engine {engine!r}")
    trials = cfg.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError("trials must be a positive integer")
    return cfg


def run_experiment(cfg: dict, keep_traces: bool = False) -> ExperimentReport:
    """Run the configured Monte Carlo battery and aggregate it."""
    cfg = validate_config(cfg)
    topo = Topology(cfg["topology"]["n1"], cfg["topology"]["n2"])
    rc = cfg["rc"]
    pcfg = cfg.get("protocol", {})
    protocol = make_protocol(topo, rc, pcfg.get("kind", "random"),
                             seed=pcfg.get("seed", 0))
    inputs = inputs_from_seed(topo, cfg.get("inputs", {}).get("seed", 0),
                              bits=pcfg.get("input_bits", 8))
    eps = cfg["noise"].get("epsilon", 0.0)
    seed0 = cfg["noise"].get("seed", 0)
    trials = cfg.get("trials", 1)
    engine = cfg.get("engine", "rs")

    runner = _build_runner(cfg, topo, rc, protocol, inputs, eps)

    summaries: list[TrialSummary] = []
    traces: list[Trace] = []
    for t in range(trials):
        res = runner(seed0 + t)
        sbv = len(check_step_bound(res.trace)) if res.trace is not None else 0
        summaries.append(TrialSummary(
            seed=seed0 + t, success=res.success, steps=res.steps,
            rounds=res.rounds, bk_total=sum(res.bk_counts.values()),
            tree_errors=len(res.tree_error_events),
            symbol_errors=res.symbol_error_count,
            step_bound_violations=sbv,
            invariant_violations=len(res.invariant_violations)))
        if keep_traces and res.trace is not None:
            traces.append(res.trace)
        if res.rounds != res.steps * res.per_step_rounds:
            raise AssertionError("round accounting broke: "
                                 f"{res.rounds} != {res.steps} x {res.per_step_rounds}")

    wins = sum(1 for s in summaries if s.success)
    lo, hi = wilson_interval(wins, trials)
    mean_rounds = sum(s.rounds for s in summaries) / trials
    regime, h = (select_regime(topo.n1, topo.n2) if topo.n1 >= 2
                 else (1, math.log2(max(1.0, math.log2(max(topo.n1, 2))))))
    violations = sum(s.step_bound_violations + s.invariant_violations
                     for s in summaries)
    return ExperimentReport(
        config=cfg, trials=summaries, success_rate=wins / trials,
        wilson_low=lo, wilson_high=hi, mean_rounds=mean_rounds,
        per_step_rounds=summaries[0].rounds // max(summaries[0].steps, 1),
        steps=summaries[0].steps,
        overhead=mean_rounds / rc, regime=regime, predicted_overhead=h,
        violations=violations, traces=traces)


def _build_runner(cfg, topo, rc, protocol, inputs, eps):
    engine = cfg.get("engine", "rs")
    want_trace = engine != "chunked-simple"
    if engine == "rs":
        tcfg = cfg.get("tree_code", {})
        tc = build_tree_code(
            3, tcfg.get("alpha", 0.5),
            max_depth=tcfg.get("max_depth", 2 * rc + 1),
            seed=tcfg.get("seed", 7),
            alphabet_size=tcfg.get("alphabet_size", 64))
        scfg = cfg.get("strategy", {})
        strat = make_strategy(scfg.get("kind", "naive"), topo.n1, topo.n2,
                              payload_bits=tc.symbol_bits,
                              profile=scfg.get("profile", "desk"),
                              overrides=scfg.get("overrides"), epsilon=eps)

        def runner(seed):
            return run_rs(topo, protocol, inputs, NoiseModel(eps, seed),
                          strat, tc, with_trace=True)
        return runner

    ccfg = cfg.get("chunked", {})
    k = ccfg.get("k", suggested_k(topo.n1, topo.n2))
    if engine == "chunked":
        codecs = build_chunk_codecs(
            topo, rc, k, seed=ccfg.get("seed", 3),
            s_nc=ccfg.get("s_nc"), s_c=ccfg.get("s_c"),
            ecc_nc_width=ccfg.get("ecc_nc_width"),
            ecc_c_width=ccfg.get("ecc_c_width"))

        def runner(seed):
            return run_chunked(topo, protocol, inputs, NoiseModel(eps, seed),
                               codecs, with_trace=True)
        return runner

    def runner(seed):
        return run_chunked_simple(topo, protocol, inputs, NoiseModel(eps, seed),
                                  k, ecc_nc_width=ccfg.get("ecc_nc_width"),
                                  ecc_c_width=ccfg.get("ecc_c_width"),
                                  seed=ccfg.get("seed", 3))
    return runner


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ["engine", "strategy", "n1", "n2", "rc", "epsilon", "trials",
                 "success_rate", "wilson_low", "wilson_high", "mean_rounds",
                 "steps", "per_step_rounds", "overhead", "regime",
                 "predicted_overhead", "violations"]


def run_sweep(base_cfg: dict, epsilons: list[float],
              strategies: list[str] | None = None,
              keep_traces: bool = False) -> list[dict]:
    """Grid over epsilon (and optionally strategies) from one base config."""
    rows = []
    strategies = strategies or [None]
    for strat in strategies:
        for eps in epsilons:
            cfg = json.loads(json.dumps(base_cfg))
            cfg.setdefault("noise", {})["epsilon"] = eps
            if strat is not None:
                cfg.setdefault("strategy", {})["kind"] = strat
            rep = run_experiment(cfg, keep_traces=keep_traces)
            rows.append({
                "engine": cfg.get("engine", "rs"),
                "strategy": (cfg.get("strategy", {}).get("kind", "-")
                             if cfg.get("engine", "rs") == "rs" else "-"),
                "n1": cfg["topology"]["n1"], "n2": cfg["topology"]["n2"],
                "rc": cfg["rc"], "epsilon": eps,
                "trials": cfg.get("trials", 1),
                "success_rate": rep.success_rate,
                "wilson_low": rep.wilson_low, "wilson_high": rep.wilson_high,
                "mean_rounds": rep.mean_rounds, "steps": rep.steps,
                "per_step_rounds": rep.per_step_rounds,
                "overhead": rep.overhead, "regime": rep.regime,
                "predicted_overhead": rep.predicted_overhead,
                "violations": rep.violations,
            })
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
