"""Progress instrumentation: real progress, backup counts, and the
decoding-error potential along historical paths.

For every (party, step) the engines record the parsed-estimate length, the
number of rewind steps B, whether a tree-code decoding error happened, and
the real progress RP (longest prefix of the estimated received transcript
agreeing with the noiseless run).  The check performed here computes, by
dynamic programming, the maximum number of decoding-error locations X over
any backward influence path and asserts the step bound

    r <= RP + B + X

at every (party, step).  This inequality is the correctness lever of the
rewind analysis; a violation in any trial is a bug, never noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .model import Party, Topology


class TraceIncomplete(ValueError):
    """Trace rows missing for some (party, step)."""


@dataclass
class TraceRow:
    party: tuple[int, int]
    step: int
    ell: int
    backups: int
    rp: int
    tree_err: bool
    mismatch_len: int = 0      # largest decode suffix mismatch this step
    sym_errs: int = 0          # inner-layer symbol decode errors this step
    sent_bk: bool = False


@dataclass
class Trace:
    """Per-trial instrumentation record, serializable to JSON lines."""

    n1: int
    n2: int
    steps: int
    engine: str
    rows: list[TraceRow] = field(default_factory=list)

    def add(self, party: Party, step: int, **kw):
        self.rows.append(TraceRow(party=(party.i, party.j), step=step, **kw))

    def to_jsonl(self) -> str:
        head = {"kind": "trace", "n1": self.n1, "n2": self.n2,
                "steps": self.steps, "engine": self.engine}
        lines = [json.dumps(head)]
        lines += [json.dumps(asdict(r)) for r in self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        if head.get("kind") != "trace":
            raise TraceIncomplete("missing trace header line")
        tr = cls(n1=head["n1"], n2=head["n2"], steps=head["steps"],
                 engine=head.get("engine", "rs"))
        for ln in lines[1:]:
            doc = json.loads(ln)
            doc["party"] = tuple(doc["party"])
            tr.rows.append(TraceRow(**doc))
        return tr


def _row_map(trace: Trace) -> dict[tuple[tuple[int, int], int], TraceRow]:
    return {(r.party, r.step): r for r in trace.rows}


def compute_x(trace: Trace) -> dict[tuple[tuple[int, int], int], int]:
    """Maximum decoding-error count over historical paths, per (party, step).

    For the step-synchronous engine a path moves backward one step at a time
    between parties that can influence each other within one step: the same
    party, the central party, or a link mate.  For the chunked engine a path
    carries the central party at every step alongside one peripheral, with
    the peripheral free to change arbitrarily.
    """
    topo = Topology(trace.n1, trace.n2)
    rows = _row_map(trace)
    steps = max((r.step for r in trace.rows), default=0)
    parties = [(p.i, p.j) for p in topo.parties()]

    def err(p, r):
        row = rows.get((p, r))
        if row is None:
            raise TraceIncomplete(f"missing trace row for {p} step {r}")
        return 1 if row.tree_err else 0

    X: dict[tuple[tuple[int, int], int], int] = {}
    if trace.engine == "chunked":
        # central is on every path; the peripheral slot is unconstrained.
        # The central party has no closing step, so its error contribution
        # past its last recorded row is zero.
        central_cum = 0
        best_periph_cum = 0
        periph = [p for p in parties if p != (0, 0)]
        for r in range(1, steps + 1):
            e0 = err((0, 0), r) if ((0, 0), r) in rows else 0
            best_p = max(err(p, r) for p in periph if (p, r) in rows) \
                if any((p, r) in rows for p in periph) else 0
            for p in periph:
                if (p, r) in rows:
                    X[(p, r)] = err(p, r) + central_cum + best_periph_cum
            if ((0, 0), r) in rows:
                X[((0, 0), r)] = central_cum + best_periph_cum + e0 + best_p
            central_cum += e0
            best_periph_cum += best_p
        return X

    for r in range(1, steps + 1):
        for p in parties:
            base = err(p, r)
            if r == 1:
                X[(p, r)] = base
                continue
            if p == (0, 0):
                preds = parties
            else:
                preds = [(p[0], j) for j in range(1, topo.n1 + 1)] + [(0, 0), p]
            X[(p, r)] = base + max(X[(q, r - 1)] for q in set(preds))
    return X


@dataclass
class Violation:
    party: tuple[int, int]
    step: int
    rp: int
    backups: int
    x: int

    def __str__(self):
        lhs = self.rp + self.backups + self.x
        return (f"step {self.step} at p{self.party}: "
                f"r={self.step} > RP+B+X = {self.rp}+{self.backups}+{self.x} = {lhs}")


def check_step_bound(trace: Trace) -> list[Violation]:
    """All (party, step) pairs violating ``r <= RP + B + X``; expected empty."""
    X = compute_x(trace)
    out = []
    for row in trace.rows:
        x = X[(row.party, row.step)]
        if row.step > row.rp + row.backups + x:
            out.append(Violation(party=row.party, step=row.step, rp=row.rp,
                                 backups=row.backups, x=x))
    return out
