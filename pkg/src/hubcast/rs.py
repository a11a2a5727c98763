"""The rewind-based simulation engine over intersecting broadcast links.

Each party keeps the symbols it has broadcast (``w``, over {0, 1, BK}), an
aligned per-sender estimate ``sigma`` of everyone else's parsed transcript,
and the scalar ``ell`` = length of that common estimate.  One simulation step
per party is: freshly decode every neighbour's full tree-coded history, run
the consistency check, then either extend the simulation by one protocol
symbol or broadcast BK to rewind one step.  The new tree-code symbol is
exchanged across each link by a pluggable bit-exchange strategy; the central
party takes part in all links within the same network rounds.

Bookkeeping conventions (they keep every state invariant total, including
under decoding artifacts that parse to nothing):

* ``ell`` may go negative; the step law ``r = ell + 1 + 2B`` holds at every
  step by construction and is asserted.
* a consistency pass stores, per sender, the decoded parsed symbol at
  position ``ell + 1`` - the one symbol the check certified - so all sigma
  estimates grow in lockstep even when a neighbour's decode runs ahead or
  ends in BK.
* an unparseable decode has virtual parsed length -1 and always fails the
  length check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BroadcastChannel, NoiseModel
from .coding import BK, parse, parse_view
from .exchange import ExchangeStrategy
from .instrument import Trace
from .model import P0, Party, Protocol, Topology, Transcript, run_noiseless, sent_stream
from .treecode import TreeCode


class LengthMismatch(ValueError):
    """Consistency-check inputs with inconsistent lengths (an engine bug)."""


_BK_EDGE = 2  # tree edge index reserved for BK in the ternary alphabet


def _to_edges(symbols) -> list[int]:
    return [_BK_EDGE if s is BK else int(s) for s in symbols]


def _from_edges(edges) -> list:
    return [BK if e == _BK_EDGE else int(e) for e in edges]


def _parsed_len(symbols) -> int:
    """Length of the parse, or -1 when the string is not parseable."""
    p = parse(symbols)
    return -1 if p is None else len(p)


def cons_check(protocol: Protocol, party: Party, x, decoded: dict,
               own_w, sigma: dict, ell: int) -> int:
    """Consistency bit ``u`` for one step.

    ``decoded`` maps each adjacent sender to its freshly decoded symbol
    string (one entry per past step); ``own_w`` is this party's own sent
    string (one symbol longer for peripherals, per-link lists for the central
    party); ``sigma``/``ell`` is the current aligned estimate.
    """
    topo = protocol.topology
    senders = topo.senders_for(party)
    lengths = {len(decoded[k]) for k in senders}
    own_len = len(own_w[0]) if party.is_central else len(own_w)
    if len(lengths) > 1 or lengths != {own_len}:
        raise LengthMismatch(
            f"stream lengths disagree: decoded {lengths}, own {own_len}")

    z_hat = {k: parse(decoded[k]) for k in senders}
    ell_hat = min((-1 if z is None else len(z)) for z in z_hat.values())
    if ell_hat <= ell:
        return 0
    if ell < 1:
        return 1

    if party.is_central:
        z_own = [parse_view(wl)[0] for wl in own_w]
    else:
        z_own = parse_view(own_w)[0]

    for l in range(1, ell + 1):
        for k in senders:
            if z_hat[k][l - 1] != sigma[k][l - 1]:
                return 0
        prefix = _flat_prefix(topo, party, sigma, l)
        if party.is_central:
            want = protocol.next_bits_central(x, prefix)
            got = tuple(z_own[i][l] for i in range(topo.n2))
        else:
            want = protocol.next_bit(party, x, prefix)
            got = z_own[l]
        if got != want:
            return 0
    return 1


def _flat_prefix(topo: Topology, party: Party, sigma: dict, rounds: int):
    out = []
    senders = topo.senders_for(party)
    for t in range(rounds):
        out.extend(sigma[k][t] for k in senders)
    return out


@dataclass
class _PartyState:
    party: Party
    w: list | list[list]                 # own Sigma stream(s); central: per link
    sigma: dict[Party, list]
    ell: int
    backups: int = 0
    received: dict[Party, list] = field(default_factory=dict)  # S-symbol indices
    sym_errs_step: int = 0

    @classmethod
    def fresh(cls, topo: Topology, party: Party):
        senders = topo.senders_for(party)
        w = [[] for _ in range(topo.n2)] if party.is_central else []
        return cls(party=party, w=w, sigma={k: [] for k in senders}, ell=-1,
                   received={k: [] for k in senders})


@dataclass
class RsResult:
    success: bool
    success_by_party: dict[Party, bool]
    steps: int
    rounds: int
    per_step_rounds: int
    bk_counts: dict[Party, int]
    tree_error_events: list[tuple[Party, int, int]]   # (party, step, mismatch)
    symbol_error_count: int
    outputs: dict[Party, dict]
    trace: Trace | None = None
    invariant_violations: list[str] = field(default_factory=list)


def run_rs(topology: Topology, protocol: Protocol, inputs: dict[Party, tuple],
           noise: NoiseModel, strategy: ExchangeStrategy, tree_code: TreeCode,
           with_trace: bool = False, decode_override=None,
           channel: BroadcastChannel | None = None) -> RsResult:
    """Simulate the protocol over the noisy network; 2*RC(pi) steps."""
    rc = protocol.round_count
    total_steps = 2 * rc
    if tree_code.verified_depth < total_steps + 1:
        raise ValueError("tree code not verified deep enough for this protocol")
    if strategy.payload_bits != tree_code.symbol_bits:
        raise ValueError("strategy payload width must match the symbol width")

    chan = channel or BroadcastChannel(topology, noise)
    truth = run_noiseless(topology, protocol, inputs)
    truth_streams = _truth_streams(topology, truth, total_steps + 2)

    states = {p: _PartyState.fresh(topology, p) for p in topology.parties()}
    trace = Trace(n1=topology.n1, n2=topology.n2, steps=total_steps + 1, engine="rs")
    tree_events: list[tuple[Party, int, int]] = []
    sym_errors = 0
    invariants: list[str] = []
    round_counter = 0
    per_step = strategy.rounds_per_payload()

    def decode_all(st: _PartyState, step: int) -> dict:
        nonlocal tree_events
        decoded = {}
        worst = 0
        for k in topology.senders_for(st.party):
            got = _from_edges(tree_code.decode(st.received[k]))
            if decode_override is not None:
                got = decode_override(st.party, step, k, got) or got
            decoded[k] = got
            true_prefix = _true_symbols(states[k], st.party)[:len(got)]
            if got != true_prefix:
                common = 0
                while common < len(got) and got[common] == true_prefix[common]:
                    common += 1
                worst = max(worst, len(got) - common)
        if worst:
            tree_events.append((st.party, step, worst))
        return decoded, worst

    def apply_check(st: _PartyState, step: int, decoded: dict, final: bool):
        u = cons_check(protocol, st.party, inputs[st.party], decoded,
                       st.w, st.sigma, st.ell)
        senders = topology.senders_for(st.party)
        if u == 1:
            if st.ell >= 0:
                z_hat = {k: parse(decoded[k]) for k in senders}
                for k in senders:
                    st.sigma[k].append(z_hat[k][st.ell])
            st.ell += 1
            if st.party.is_central:
                bits = ((0,) * topology.n2 if final else
                        protocol.next_bits_central(
                            inputs[st.party],
                            _flat_prefix(topology, st.party, st.sigma,
                                         max(st.ell, 0))))
                for i in range(topology.n2):
                    st.w[i].append(bits[i])
            else:
                bit = (0 if final else
                       protocol.next_bit(st.party, inputs[st.party],
                                         _flat_prefix(topology, st.party, st.sigma,
                                                      max(st.ell, 0))))
                st.w.append(bit)
        else:
            for k in senders:
                if st.sigma[k]:
                    st.sigma[k].pop()
            st.ell -= 1
            st.backups += 1
            if st.party.is_central:
                for i in range(topology.n2):
                    st.w[i].append(BK)
            else:
                st.w.append(BK)
        return u

    def check_invariants(st: _PartyState, step: int):
        if step != st.ell + 1 + 2 * st.backups:
            invariants.append(
                f"step law broken at {st.party} step {step}: "
                f"ell={st.ell} B={st.backups}")
        want = max(st.ell, 0)
        if any(len(v) != want for v in st.sigma.values()):
            invariants.append(f"ragged sigma at {st.party} step {step}")

    def record(st: _PartyState, step: int, u: int, worst: int):
        rp = _real_progress(topology, st, truth_streams)
        trace.add(st.party, step, ell=st.ell, backups=st.backups, rp=rp,
                  tree_err=worst > 0, mismatch_len=worst,
                  sym_errs=st.sym_errs_step, sent_bk=(u == 0))

    for step in range(1, total_steps + 1):
        # decode + consistency + append, all parties before any exchange
        step_outcome = {}
        for p in topology.parties():
            st = states[p]
            decoded, worst = decode_all(st, step)
            u = apply_check(st, step, decoded, final=False)
            check_invariants(st, step)
            step_outcome[p] = (u, worst)

        # exchange this step's tree symbols on every link concurrently
        symbols = _step_symbols(topology, states, tree_code, step)
        for i in range(1, topology.n2 + 1):
            payloads = np.array(
                [tree_code.symbol_to_bits(symbols[(i, slot)])
                 for slot in range(topology.n1 + 1)], dtype=np.uint8)
            est = strategy.exchange_payloads(chan, i, round_counter, payloads)
            for recv_slot in range(topology.n1 + 1):
                receiver = P0 if recv_slot == 0 else Party(i, recv_slot)
                st = states[receiver]
                for send_slot in range(topology.n1 + 1):
                    if send_slot == recv_slot:
                        continue
                    sender = P0 if send_slot == 0 else Party(i, send_slot)
                    sym = tree_code.bits_to_symbol(est[recv_slot, send_slot])
                    if sym != symbols[(i, send_slot)]:
                        st.sym_errs_step += 1
                        sym_errors += 1
                    st.received[sender].append(sym)
        round_counter += per_step
        for p in topology.parties():
            st = states[p]
            u, worst = step_outcome[p]
            record(st, step, u, worst)
            st.sym_errs_step = 0

    # closing block: one more decode + check, then a literal trailing 0
    for p in topology.parties():
        st = states[p]
        decoded, worst = decode_all(st, total_steps + 1)
        u = apply_check(st, total_steps + 1, decoded, final=True)
        check_invariants(st, total_steps + 1)
        record(st, total_steps + 1, u, worst)

    outputs, success_by = _collect_outputs(topology, states, truth, rc)
    result = RsResult(
        success=all(success_by.values()), success_by_party=success_by,
        steps=total_steps, rounds=round_counter, per_step_rounds=per_step,
        bk_counts={p: states[p].backups for p in topology.parties()},
        tree_error_events=tree_events, symbol_error_count=sym_errors,
        outputs=outputs, trace=trace if with_trace else None,
        invariant_violations=invariants)
    return result


def _true_symbols(sender_state: _PartyState, receiver: Party) -> list:
    """Symbols the sender actually put on the wire toward ``receiver``."""
    if sender_state.party.is_central:
        return sender_state.w[receiver.i - 1]
    return sender_state.w


def _step_symbols(topology: Topology, states: dict, tree_code: TreeCode,
                  step: int) -> dict[tuple[int, int], int]:
    """Tree-code output symbol per (link, slot) for the current step."""
    out = {}
    for i in range(1, topology.n2 + 1):
        cw = states[P0].w[i - 1]
        edges = _to_edges(cw)
        out[(i, 0)] = tree_code.label(tuple(edges[:step - 1]), edges[step - 1])
        for j in range(1, topology.n1 + 1):
            edges = _to_edges(states[Party(i, j)].w)
            out[(i, j)] = tree_code.label(tuple(edges[:step - 1]), edges[step - 1])
    return out


def _truth_streams(topology: Topology, truth: dict[Party, Transcript],
                   horizon: int) -> dict[Party, dict[Party, list[int]]]:
    """Per-receiver, per-sender noiseless bit streams, zero-padded."""
    out: dict[Party, dict[Party, list[int]]] = {}
    for p in topology.parties():
        streams = {}
        for k in topology.senders_for(p):
            bits = list(sent_stream(topology, truth, k, link=p.i or k.i))
            bits += [0] * (horizon - len(bits))
            streams[k] = bits
        out[p] = streams
    return out


def _real_progress(topology: Topology, st: _PartyState, truth_streams) -> int:
    truth = truth_streams[st.party]
    senders = topology.senders_for(st.party)
    for l in range(1, st.ell + 1):
        for k in senders:
            if st.sigma[k][l - 1] != truth[k][l - 1]:
                return l
    return st.ell + 1


def _collect_outputs(topology: Topology, states: dict,
                     truth: dict[Party, Transcript], rc: int):
    outputs: dict[Party, dict] = {}
    success: dict[Party, bool] = {}
    for p in topology.parties():
        st = states[p]
        if p.is_central:
            z = [parse_view(st.w[i])[0] for i in range(topology.n2)]
            sent_true = [list(sent_stream(topology, truth, p, link=i + 1))
                         for i in range(topology.n2)]
            ok = all(len(z[i]) >= rc and z[i][:rc] == sent_true[i]
                     for i in range(topology.n2))
        else:
            z = parse_view(st.w)[0]
            sent_true = list(truth[p].sent)
            ok = len(z) >= rc and z[:rc] == sent_true
        for k in topology.senders_for(p):
            true_bits = list(sent_stream(topology, truth, k, link=p.i or k.i))
            est = st.sigma[k]
            ok = ok and len(est) >= rc and est[:rc] == true_bits
        outputs[p] = {"sent_estimate": z,
                      "received_estimate": {k: list(v) for k, v in st.sigma.items()}}
        success[p] = ok
    return outputs, success
