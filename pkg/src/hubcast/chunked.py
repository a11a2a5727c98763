"""The chunked simulation for hub-dominated networks.

Instead of simulating the protocol round by round, parties advance in chunks
of k rounds.  Each party views its protocol as a tree over its possible
received histories; at every chunk the peripherals broadcast the bits of all
nodes in the next k levels of their tree (everything they might send), the
central party replays those advertisements to extend its realized path, and
answers with the k decision bits each link needs to extend its own.

``run_chunked_noiseless`` is the noiseless chunk scheme; it must reproduce
the round-by-round executor exactly.  ``run_chunked`` wraps it in the rewind
machinery: chunk payloads (plus the BK symbol) are tree-coded, each tree
symbol is block-coded for the noisy link, and a chunk-level consistency check
drives the BK rewinds.  ``run_chunked_simple`` is the short-protocol
fallback: one pass, block codes only, no rewinds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BroadcastChannel, NoiseModel
from .coding import BK, BscCode, build_bsc_code, parse, parse_view
from .instrument import Trace
from .model import P0, Party, Protocol, Topology, Transcript, run_noiseless
from .rs import LengthMismatch
from .treecode import TreeCode, build_tree_code


class MalformedChunk(ValueError):
    """Chunk payload of the wrong width."""


class DepthExceeded(ValueError):
    pass


def payload_width(n1: int, k: int) -> int:
    """Bits advertised per chunk: node count of k levels of a 2^n1-ary tree."""
    return (2 ** (n1 * k) - 1) // (2 ** n1 - 1)


def _level_offset(n1: int, t: int) -> int:
    return (2 ** (n1 * t) - 1) // (2 ** n1 - 1)


def _bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | (int(b) & 1)
    return v


class ProtocolTree:
    """Lazy tree view of one party's protocol: a node is a received-history
    prefix, its label the bit(s) the party would send next."""

    def __init__(self, protocol: Protocol, party: Party, x):
        self.protocol = protocol
        self.party = party
        self.x = x
        self._cache: dict[tuple, object] = {}
        self._payload_cache: dict[tuple, tuple] = {}

    def node_bits(self, address: tuple):
        """Bit (peripheral) or n2-bit tuple (central) sent from this node."""
        key = tuple(address)
        hit = self._cache.get(key)
        if hit is None:
            if self.party.is_central:
                hit = self.protocol.next_bits_central(self.x, key)
            else:
                hit = self.protocol.next_bit(self.party, self.x, key)
            self._cache[key] = hit
        return hit

    def levels_payload(self, address: tuple, k: int) -> tuple[int, ...]:
        """All bits in the next k levels below ``address``, level-order and
        lexicographic within a level (peripheral parties only)."""
        key = (tuple(address), k)
        hit = self._payload_cache.get(key)
        if hit is not None:
            return hit
        n1 = self.protocol.topology.n1
        out = []
        for t in range(k):
            for ext in range(2 ** (n1 * t)):
                ext_bits = tuple((ext >> (n1 * t - 1 - b)) & 1
                                 for b in range(n1 * t))
                out.append(self.node_bits(tuple(address) + ext_bits))
        payload = tuple(out)
        self._payload_cache[key] = payload
        return payload

    def central_chunk(self, address: tuple, k: int) -> tuple[tuple[int, ...], ...]:
        """Per-link k-bit strings read off the last k nodes of the central
        path ending at ``address`` (which must span a whole number of
        chunks).  An empty address has no last chunk; the all-zero answer is
        returned so a rewound-to-the-root central party still has a data
        symbol to send (its content is irrelevant, later checks catch it)."""
        topo = self.protocol.topology
        if not address:
            return tuple((0,) * k for _ in range(topo.n2))
        per_round = topo.n1 * topo.n2
        depth = len(address) // per_round
        rows = [self.node_bits(tuple(address[:per_round * t]))
                for t in range(depth - k, depth)]
        return tuple(tuple(rows[t][i] for t in range(k)) for i in range(topo.n2))


def payload_bit(payload, n1: int, t: int, suffix_bits) -> int:
    """Bit of the advertised subtree at sub-level t, given the owner's
    received bits so far within the chunk."""
    idx = _level_offset(n1, t) + _bits_to_int(suffix_bits)
    if idx >= len(payload):
        raise MalformedChunk(f"payload too short: index {idx} of {len(payload)}")
    return int(payload[idx])


def _walk_chunk_link(n1: int, k: int, payloads: dict[int, tuple],
                     central_bits: tuple) -> dict[int, list[int]]:
    """Replay one chunk on one link; returns each member's received bits.

    ``payloads[j]`` is member j's advertised subtree; ``central_bits`` the k
    bits the central party contributes to this link.
    """
    width = payload_width(n1, k)
    for j, pl in payloads.items():
        if len(pl) != width:
            raise MalformedChunk(f"member {j} payload width {len(pl)} != {width}")
    suffix = {j: [] for j in range(1, n1 + 1)}
    for t in range(k):
        sent = {j: payload_bit(payloads[j], n1, t, suffix[j])
                for j in range(1, n1 + 1)}
        for j in range(1, n1 + 1):
            recv = [sent[j2] for j2 in range(1, n1 + 1) if j2 != j]
            recv.append(int(central_bits[t]))
            suffix[j].extend(recv)
    return suffix


def path_peripheral(topology: Topology, party: Party, own_tree: ProtocolTree,
                    peer_chunks: dict[Party, list], central_chunks: list,
                    upto: int, k: int) -> list[int]:
    """Reconstruct this party's received transcript after ``upto`` chunks."""
    n1 = topology.n1
    addr: dict[int, list[int]] = {j: [] for j in range(1, n1 + 1)}
    for l in range(upto):
        payloads = {}
        for j in range(1, n1 + 1):
            if j == party.j:
                payloads[j] = own_tree.levels_payload(tuple(addr[j]), k)
            else:
                payloads[j] = tuple(peer_chunks[Party(party.i, j)][l])
        suffix = _walk_chunk_link(n1, k, payloads, tuple(central_chunks[l]))
        for j in range(1, n1 + 1):
            addr[j].extend(suffix[j])
    return addr[party.j]


def path_central(topology: Topology, tree0: ProtocolTree,
                 chunks: dict[Party, list], upto: int, k: int) -> list[int]:
    """Reconstruct the central party's received transcript after ``upto``
    chunks, walking every link in lockstep."""
    n1, n2 = topology.n1, topology.n2
    if upto == 0:
        return []
    addr0: list[int] = []
    addr = {p: [] for p in topology.peripherals()}
    for l in range(upto):
        sub0: list[int] = []
        sub = {p: [] for p in topology.peripherals()}
        for t in range(k):
            crow = tree0.node_bits(tuple(addr0 + sub0))
            sent = {}
            for p in topology.peripherals():
                sent[p] = payload_bit(tuple(chunks[p][l]), n1, t, sub[p])
            for p in topology.peripherals():
                recv = [sent[Party(p.i, j2)] for j2 in range(1, n1 + 1) if j2 != p.j]
                recv.append(int(crow[p.i - 1]))
                sub[p].extend(recv)
            sub0.extend(sent[p] for p in topology.peripherals())
        addr0.extend(sub0)
        for p in topology.peripherals():
            addr[p].extend(sub[p])
    return addr0


def _chunk_count(rc: int, k: int) -> int:
    return math.ceil(rc / k)


def run_chunked_noiseless(topology: Topology, protocol: Protocol,
                          inputs: dict[Party, tuple], k: int) -> dict[Party, Transcript]:
    """The k-chunk scheme on a noiseless network; transcript-equivalent to
    the round-by-round executor, truncated to RC rounds."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rc = protocol.round_count
    trees = {p: ProtocolTree(protocol, p, inputs[p]) for p in topology.parties()}
    chunks = _chunk_count(rc, k)

    addr = {p: [] for p in topology.parties()}
    central_sent: list = []
    for l in range(chunks):
        payloads = {p: trees[p].levels_payload(tuple(addr[p]), k)
                    for p in topology.peripherals()}
        # central extends its path from everyone's advertisement
        sub0: list[int] = []
        sub = {p: [] for p in topology.peripherals()}
        for t in range(k):
            crow = trees[P0].node_bits(tuple(addr[P0] + sub0))
            sent = {p: payload_bit(payloads[p], topology.n1, t, sub[p])
                    for p in topology.peripherals()}
            central_sent.append(crow)
            for p in topology.peripherals():
                recv = [sent[Party(p.i, j2)] for j2 in range(1, topology.n1 + 1)
                        if j2 != p.j]
                recv.append(int(crow[p.i - 1]))
                sub[p].extend(recv)
            sub0.extend(sent[p] for p in topology.peripherals())
        addr[P0].extend(sub0)
        for p in topology.peripherals():
            addr[p].extend(sub[p])

    out: dict[Party, Transcript] = {}
    n1, n2 = topology.n1, topology.n2
    for p in topology.peripherals():
        recv = tuple(addr[p][:n1 * rc])
        sent = tuple(trees[p].node_bits(tuple(recv[:n1 * t])) for t in range(rc))
        out[p] = Transcript(sent=sent, received=recv)
    recv0 = tuple(addr[P0][:n1 * n2 * rc])
    sent0 = []
    for t in range(rc):
        sent0.extend(central_sent[t])
    out[P0] = Transcript(sent=tuple(sent0), received=recv0)
    return out


# ---------------------------------------------------------------------------
# Noisy chunked simulation
# ---------------------------------------------------------------------------

@dataclass
class ChunkCodecs:
    """Alphabets and codes of the chunked simulation."""

    k: int
    nc_width: int             # advertised payload bits per chunk
    tc_nc: TreeCode           # tree code over {payloads} + BK
    tc_c: TreeCode            # tree code over {0,1}^k + BK
    ecc_nc: BscCode
    ecc_c: BscCode

    @property
    def per_step_rounds(self) -> int:
        return self.ecc_nc.m_out + self.ecc_c.m_out


def suggested_k(n1: int, n2: int) -> int:
    """The chunk size the overhead analysis picks; 1 at desk scale."""
    return max(1, math.ceil(math.log2(max(2.0, math.log2(max(n2, 2)))) / n1))


def build_chunk_codecs(topology: Topology, rc: int, k: int, seed: int = 0,
                       s_nc: int | None = None, s_c: int | None = None,
                       ecc_nc_width: int | None = None,
                       ecc_c_width: int | None = None,
                       ecc_c_mult: float = 24.0,
                       verify: str = "auto") -> ChunkCodecs:
    """Build tree codes and block codes sized for a topology and chunk size.

    Alphabet sizes default to the known-sufficient bound for distance 1/2;
    the resulting symbol widths stay manageable because the block codes
    split wide symbols into small exhaustively-decodable blocks.
    """
    from .treecode import lemma_alphabet_size

    n1, n2 = topology.n1, topology.n2
    width = payload_width(n1, k)
    d_nc = 2 ** width + 1
    d_c = 2 ** k + 1
    depth = 2 * _chunk_count(rc, k) + 1
    if s_nc is None:
        s_nc = lemma_alphabet_size(d_nc, 0.5)
    if s_c is None:
        s_c = lemma_alphabet_size(d_c, 0.5)
    tc_nc = build_tree_code(d_nc, 0.5, max_depth=depth, seed=seed,
                            alphabet_size=s_nc, verify=verify)
    tc_c = build_tree_code(d_c, 0.5, max_depth=depth, seed=seed + 1,
                           alphabet_size=s_c, verify=verify)
    base = math.ceil(ecc_c_mult * math.log2(max(n2, 2)))
    w_nc = ecc_nc_width or max(4 * tc_nc.symbol_bits, base)
    w_c = ecc_c_width or max(4 * tc_c.symbol_bits, base)
    return ChunkCodecs(
        k=k, nc_width=width, tc_nc=tc_nc, tc_c=tc_c,
        ecc_nc=build_bsc_code(tc_nc.symbol_bits, w_nc, seed=seed + 2),
        ecc_c=build_bsc_code(tc_c.symbol_bits, w_c, seed=seed + 3))


def _payload_to_edge(payload, width: int) -> int:
    if payload is BK:
        return 2 ** width
    if len(payload) != width:
        raise MalformedChunk(f"payload width {len(payload)} != {width}")
    return _bits_to_int(payload)


def _edge_to_payload(edge: int, width: int):
    if edge == 2 ** width:
        return BK
    return tuple((edge >> (width - 1 - t)) & 1 for t in range(width))


def cons_check_chunked(trees: dict, party: Party, decoded: dict, own_w,
                       sigma: dict, ell: int, topology: Topology, k: int) -> int:
    """Chunk-level consistency bit for one step.

    Mirrors the step check of the round engine but compares whole chunks:
    stored estimates against the fresh decode, and this party's own past
    chunk payloads against what the protocol tree prescribes on the path the
    estimates induce.  The central party sees one extra symbol per stream
    (it decodes mid-step), which only changes the bookkeeping of lengths.
    """
    senders = topology.senders_for(party)
    lengths = {len(decoded[s]) for s in senders}
    if len(lengths) > 1:
        raise LengthMismatch(f"decoded streams disagree in length: {lengths}")

    z_hat = {s: parse(decoded[s]) for s in senders}
    ell_hat = min((-1 if z is None else len(z)) for z in z_hat.values())
    if ell_hat <= ell:
        return 0
    if ell < 1:
        return 1

    if party.is_central:
        z_own = [parse_view(w)[0] for w in own_w]  # per link
        for l in range(1, ell + 1):
            for s in senders:
                if z_hat[s][l - 1] != sigma[s][l - 1]:
                    return 0
            chunks = {s: sigma[s][:l] for s in senders}
            path = path_central(topology, trees[P0], chunks, l, k)
            want = trees[P0].central_chunk(tuple(path), k)
            got = tuple(z_own[i][l - 1] for i in range(topology.n2))
            if got != want:
                return 0
        return 1

    z_own = parse_view(own_w)[0]
    peers = [s for s in senders if not s.is_central]
    for l in range(1, ell + 1):
        for s in senders:
            if z_hat[s][l - 1] != sigma[s][l - 1]:
                return 0
        peer_chunks = {s: sigma[s][:l] for s in peers}
        central_chunks = sigma[P0][:l]
        path = path_peripheral(topology, party, trees[party], peer_chunks,
                               central_chunks, l, k)
        want = trees[party].levels_payload(tuple(path), k)
        if z_own[l] != want:
            return 0
    return 1


@dataclass
class _ChunkState:
    party: Party
    w: list | list[list]
    sigma: dict[Party, list]
    ell: int
    backups: int = 0
    received: dict[Party, list] = field(default_factory=dict)
    sym_errs_step: int = 0

    @classmethod
    def fresh(cls, topo: Topology, party: Party):
        senders = topo.senders_for(party)
        w = [[] for _ in range(topo.n2)] if party.is_central else []
        return cls(party=party, w=w, sigma={s: [] for s in senders},
                   ell=(0 if party.is_central else -1),
                   received={s: [] for s in senders})


@dataclass
class ChunkedResult:
    success: bool
    success_by_party: dict[Party, bool]
    steps: int
    rounds: int
    per_step_rounds: int
    bk_counts: dict[Party, int]
    tree_error_events: list[tuple[Party, int, int]]
    symbol_error_count: int
    outputs: dict[Party, dict]
    trace: Trace | None = None
    invariant_violations: list[str] = field(default_factory=list)


def run_chunked(topology: Topology, protocol: Protocol, inputs: dict,
                noise: NoiseModel, codecs: ChunkCodecs,
                with_trace: bool = False,
                channel: BroadcastChannel | None = None) -> ChunkedResult:
    """Noise-protected chunk simulation; 2*ceil(RC/k) two-part steps."""
    rc = protocol.round_count
    k = codecs.k
    total_steps = 2 * _chunk_count(rc, k)
    for tc in (codecs.tc_nc, codecs.tc_c):
        if tc.verified_depth < total_steps + 1:
            raise ValueError("tree codes not verified deep enough")

    chan = channel or BroadcastChannel(topology, noise)
    trees = {p: ProtocolTree(protocol, p, inputs[p]) for p in topology.parties()}
    truth = run_noiseless(topology, protocol, inputs)
    horizon = k * (total_steps + 1)
    truth_recv = {p: list(truth[p].received) +
                  [0] * ((topology.n1 * (1 if not p.is_central else topology.n2))
                         * horizon)
                  for p in topology.parties()}

    states = {p: _ChunkState.fresh(topology, p) for p in topology.parties()}
    trace = Trace(n1=topology.n1, n2=topology.n2, steps=total_steps + 1,
                  engine="chunked")
    tree_events: list[tuple[Party, int, int]] = []
    sym_errors = 0
    invariants: list[str] = []
    round_counter = 0
    width = codecs.nc_width

    def decode_streams(st: _ChunkState) -> tuple[dict, int]:
        decoded, worst = {}, 0
        for s in topology.senders_for(st.party):
            tc = codecs.tc_c if s.is_central else codecs.tc_nc
            w_sym = codecs.k if s.is_central else width
            edges = tc.decode(st.received[s])
            got = [_edge_to_payload(e, w_sym) for e in edges]
            decoded[s] = got
            truth_syms = _true_chunk_symbols(states[s], st.party)[:len(got)]
            if got != truth_syms:
                common = 0
                while common < len(got) and got[common] == truth_syms[common]:
                    common += 1
                worst = max(worst, len(got) - common)
        return decoded, worst

    def note_errors(st, step, worst):
        if worst:
            tree_events.append((st.party, step, worst))

    def periph_update(st: _ChunkState, decoded: dict, u: int):
        senders = topology.senders_for(st.party)
        if u == 1:
            if st.ell >= 0:
                z_hat = {s: parse(decoded[s]) for s in senders}
                for s in senders:
                    st.sigma[s].append(z_hat[s][st.ell])
            st.ell += 1
            peers = [s for s in senders if not s.is_central]
            path = path_peripheral(
                topology, st.party, trees[st.party],
                {s: st.sigma[s][:max(st.ell, 0)] for s in peers},
                st.sigma[P0][:max(st.ell, 0)], max(st.ell, 0), k)
            st.w.append(trees[st.party].levels_payload(tuple(path), k))
        else:
            for s in senders:
                if st.sigma[s]:
                    st.sigma[s].pop()
            st.ell -= 1
            st.backups += 1
            st.w.append(BK)

    def central_update(st: _ChunkState, decoded: dict, u: int):
        senders = topology.senders_for(st.party)
        if u == 1:
            if st.ell >= 0:
                z_hat = {s: parse(decoded[s]) for s in senders}
                for s in senders:
                    st.sigma[s].append(z_hat[s][st.ell])
            st.ell += 1
            path = path_central(topology, trees[P0],
                                {s: st.sigma[s][:max(st.ell, 0)] for s in senders},
                                max(st.ell, 0), k)
            per_link = trees[P0].central_chunk(tuple(path), k)
            for i in range(topology.n2):
                st.w[i].append(per_link[i])
        else:
            for s in senders:
                if st.sigma[s]:
                    st.sigma[s].pop()
            st.ell -= 1
            st.backups += 1
            for i in range(topology.n2):
                st.w[i].append(BK)

    def rp_of(st: _ChunkState) -> int:
        truth_bits = truth_recv[st.party]
        senders = topology.senders_for(st.party)
        per_chunk = topology.n1 * k * (topology.n2 if st.party.is_central else 1)
        for l in range(1, st.ell + 1):
            if st.party.is_central:
                got = path_central(topology, trees[P0],
                                   {s: st.sigma[s][:l] for s in senders}, l, k)
            else:
                peers = [s for s in senders if not s.is_central]
                got = path_peripheral(topology, st.party, trees[st.party],
                                      {s: st.sigma[s][:l] for s in peers},
                                      st.sigma[P0][:l], l, k)
            if got != truth_bits[:per_chunk * l]:
                return l - 1 if st.party.is_central else l
        return st.ell if st.party.is_central else st.ell + 1

    def check_law(st: _ChunkState, step: int):
        base = 0 if st.party.is_central else 1
        if step != st.ell + base + 2 * st.backups:
            invariants.append(f"step law broken at {st.party} step {step}")
        if any(len(v) != max(st.ell, 0) for v in st.sigma.values()):
            invariants.append(f"ragged sigma at {st.party} step {step}")

    def record(st: _ChunkState, step: int, u: int, worst: int):
        trace.add(st.party, step, ell=st.ell, backups=st.backups, rp=rp_of(st),
                  tree_err=worst > 0, mismatch_len=worst,
                  sym_errs=st.sym_errs_step, sent_bk=(u == 0))
        st.sym_errs_step = 0

    n1, n2 = topology.n1, topology.n2
    for step in range(1, total_steps + 1):
        # first part: peripherals decode, check, append, broadcast
        for p in topology.peripherals():
            st = states[p]
            decoded, worst = decode_streams(st)
            note_errors(st, step, worst)
            u = cons_check_chunked(trees, p, decoded, st.w, st.sigma, st.ell,
                                   topology, k)
            periph_update(st, decoded, u)
            check_law(st, step)
            record(st, step, u, worst)
        _broadcast_nc(topology, states, codecs, chan, round_counter, step)
        round_counter += codecs.ecc_nc.m_out

        # second part: the central party decodes mid-step, checks, answers
        st0 = states[P0]
        decoded0, worst0 = decode_streams(st0)
        note_errors(st0, step, worst0)
        u0 = cons_check_chunked(trees, P0, decoded0, st0.w, st0.sigma, st0.ell,
                                topology, k)
        central_update(st0, decoded0, u0)
        check_law(st0, step)
        record(st0, step, u0, worst0)
        _broadcast_c(topology, states, codecs, chan, round_counter, step)
        round_counter += codecs.ecc_c.m_out

    # closing: peripherals absorb the final central answer; no broadcast
    for p in topology.peripherals():
        st = states[p]
        decoded, worst = decode_streams(st)
        note_errors(st, total_steps + 1, worst)
        u = cons_check_chunked(trees, p, decoded, st.w, st.sigma, st.ell,
                               topology, k)
        senders = topology.senders_for(p)
        if u == 1:
            if st.ell >= 0:
                z_hat = {s: parse(decoded[s]) for s in senders}
                for s in senders:
                    st.sigma[s].append(z_hat[s][st.ell])
            st.ell += 1
        else:
            for s in senders:
                if st.sigma[s]:
                    st.sigma[s].pop()
            st.ell -= 1
            st.backups += 1
        record(st, total_steps + 1, u, worst)

    outputs, success_by = _chunk_outputs(topology, states, trees, truth, rc, k)

    result = ChunkedResult(
        success=all(success_by.values()), success_by_party=success_by,
        steps=total_steps, rounds=round_counter,
        per_step_rounds=codecs.per_step_rounds,
        bk_counts={p: states[p].backups for p in topology.parties()},
        tree_error_events=tree_events,
        symbol_error_count=sum(r.sym_errs for r in trace.rows),
        outputs=outputs, trace=trace if with_trace else None,
        invariant_violations=invariants)
    return result


def _true_chunk_symbols(sender_state: _ChunkState, receiver: Party) -> list:
    if sender_state.party.is_central:
        return sender_state.w[receiver.i - 1]
    return sender_state.w


def _broadcast_nc(topology, states, codecs, chan, round_base, step):
    """First-part broadcast: peripherals send their tree symbol through the
    wide block code, the central party fills with zeros."""
    tc, ecc = codecs.tc_nc, codecs.ecc_nc
    width_bits = ecc.m_out
    for i in range(1, topology.n2 + 1):
        cw = np.zeros((topology.n1 + 1, width_bits), dtype=np.uint8)
        syms = {}
        for j in range(1, topology.n1 + 1):
            st = states[Party(i, j)]
            edges = [_payload_to_edge(x, codecs.nc_width) for x in st.w]
            sym = tc.label(tuple(edges[:step - 1]), edges[step - 1])
            syms[j] = sym
            cw[j] = ecc.encode(tc.symbol_to_bits(sym))
        heard = np.zeros((topology.n1 + 1, topology.n1 + 1, width_bits),
                         dtype=np.uint8)
        for t in range(width_bits):
            heard[:, :, t] = chan.link_round(round_base + t, i, cw[:, t])
        for recv_slot in range(topology.n1 + 1):
            receiver = P0 if recv_slot == 0 else Party(i, recv_slot)
            st = states[receiver]
            for j in range(1, topology.n1 + 1):
                if j == recv_slot:
                    continue
                sender = Party(i, j)
                bits = ecc.decode(heard[recv_slot, j])
                sym = tc.bits_to_symbol(bits)
                if sym != syms[j]:
                    st.sym_errs_step += 1
                st.received[sender].append(sym)


def _broadcast_c(topology, states, codecs, chan, round_base, step):
    """Second-part broadcast: the central party answers, peripherals fill."""
    tc, ecc = codecs.tc_c, codecs.ecc_c
    width_bits = ecc.m_out
    st0 = states[P0]
    for i in range(1, topology.n2 + 1):
        edges = [_payload_to_edge(x, codecs.k) for x in st0.w[i - 1]]
        sym = tc.label(tuple(edges[:step - 1]), edges[step - 1])
        cw = np.zeros((topology.n1 + 1, width_bits), dtype=np.uint8)
        cw[0] = ecc.encode(tc.symbol_to_bits(sym))
        heard = np.zeros((topology.n1 + 1, topology.n1 + 1, width_bits),
                         dtype=np.uint8)
        for t in range(width_bits):
            heard[:, :, t] = chan.link_round(round_base + t, i, cw[:, t])
        for j in range(1, topology.n1 + 1):
            st = states[Party(i, j)]
            bits = ecc.decode(heard[j, 0])
            got = tc.bits_to_symbol(bits)
            if got != sym:
                st.sym_errs_step += 1
            st.received[P0].append(got)


def _chunk_outputs(topology, states, trees, truth, rc, k):
    outputs, success = {}, {}
    n1, n2 = topology.n1, topology.n2
    for p in topology.parties():
        st = states[p]
        senders = topology.senders_for(p)
        if p.is_central:
            recon = path_central(topology, trees[P0],
                                 {s: st.sigma[s] for s in senders},
                                 max(st.ell, 0), k)
            need = n1 * n2 * rc
            ok = len(recon) >= need and recon[:need] == list(truth[p].received)
            sent_est = []
            if ok:
                for t in range(rc):
                    sent_est.extend(trees[P0].node_bits(tuple(recon[:n1 * n2 * t])))
                ok = sent_est == list(truth[p].sent)
        else:
            peers = [s for s in senders if not s.is_central]
            recon = path_peripheral(topology, p, trees[p],
                                    {s: st.sigma[s] for s in peers},
                                    st.sigma[P0], max(st.ell, 0), k)
            need = n1 * rc
            ok = len(recon) >= need and recon[:need] == list(truth[p].received)
            if ok:
                sent_est = [trees[p].node_bits(tuple(recon[:n1 * t]))
                            for t in range(rc)]
                ok = sent_est == list(truth[p].sent)
        outputs[p] = {"received_estimate": recon}
        success[p] = bool(ok)
    return outputs, success


# ---------------------------------------------------------------------------
# Short-protocol fallback: one pass, block codes only
# ---------------------------------------------------------------------------

def run_chunked_simple(topology: Topology, protocol: Protocol, inputs: dict,
                       noise: NoiseModel, k: int,
                       ecc_nc_width: int | None = None,
                       ecc_c_width: int | None = None, seed: int = 0,
                       channel: BroadcastChannel | None = None) -> ChunkedResult:
    """Single-pass chunk scheme with every message block-coded; no tree
    codes, no rewinds.  Intended for protocols only a few chunks long."""
    rc = protocol.round_count
    chunks = _chunk_count(rc, k)
    n1, n2 = topology.n1, topology.n2
    width = payload_width(n1, k)
    base = math.ceil(24.0 * math.log2(max(n2, 2)))
    w_nc = ecc_nc_width or max(width + 8, base)
    w_c = ecc_c_width or max(k + 8, base)
    ecc_nc = build_bsc_code(width, w_nc, seed=seed)
    ecc_c = build_bsc_code(k, w_c, seed=seed + 1)
    chan = channel or BroadcastChannel(topology, noise)
    trees = {p: ProtocolTree(protocol, p, inputs[p]) for p in topology.parties()}
    truth = run_noiseless(topology, protocol, inputs)

    # received chunk estimates, per receiver
    periph_addr = {p: [] for p in topology.peripherals()}
    central_addr: list[int] = []
    periph_chunks = {p: {s: [] for s in topology.senders_for(p)}
                     for p in topology.peripherals()}
    central_chunks = {P0: {s: [] for s in topology.senders_for(P0)}}
    rounds = 0
    for l in range(chunks):
        # part 1: peripheral advertisements
        cw = {}
        for p in topology.peripherals():
            pl = trees[p].levels_payload(tuple(periph_addr[p]), k)
            cw[p] = ecc_nc.encode(pl)
        for i in range(1, n2 + 1):
            heard = np.zeros((n1 + 1, n1 + 1, w_nc), dtype=np.uint8)
            for t in range(w_nc):
                vec = np.zeros(n1 + 1, dtype=np.uint8)
                for j in range(1, n1 + 1):
                    vec[j] = cw[Party(i, j)][t]
                heard[:, :, t] = chan.link_round(rounds + t, i, vec)
            for j in range(1, n1 + 1):
                recvr = Party(i, j)
                for j2 in range(1, n1 + 1):
                    if j2 == j:
                        continue
                    periph_chunks[recvr][Party(i, j2)].append(
                        tuple(ecc_nc.decode(heard[j, j2])))
            for j in range(1, n1 + 1):
                central_chunks[P0][Party(i, j)].append(
                    tuple(ecc_nc.decode(heard[0, j])))
        rounds += w_nc

        # central extends and answers
        central_addr = path_central(topology, trees[P0], central_chunks[P0],
                                    l + 1, k)
        reply = trees[P0].central_chunk(tuple(central_addr), k)
        for i in range(1, n2 + 1):
            cw0 = ecc_c.encode(reply[i - 1])
            heard = np.zeros((n1 + 1, n1 + 1, w_c), dtype=np.uint8)
            for t in range(w_c):
                vec = np.zeros(n1 + 1, dtype=np.uint8)
                vec[0] = cw0[t]
                heard[:, :, t] = chan.link_round(rounds + t, i, vec)
            for j in range(1, n1 + 1):
                recvr = Party(i, j)
                periph_chunks[recvr][P0].append(tuple(ecc_c.decode(heard[j, 0])))
        rounds += w_c
        for p in topology.peripherals():
            peers = {s: periph_chunks[p][s] for s in topology.senders_for(p)
                     if not s.is_central}
            periph_addr[p] = path_peripheral(topology, p, trees[p], peers,
                                             periph_chunks[p][P0], l + 1, k)

    success = {}
    outputs = {}
    for p in topology.peripherals():
        need = n1 * rc
        recon = periph_addr[p]
        ok = len(recon) >= need and recon[:need] == list(truth[p].received)
        if ok:
            sent_est = [trees[p].node_bits(tuple(recon[:n1 * t])) for t in range(rc)]
            ok = sent_est == list(truth[p].sent)
        success[p] = bool(ok)
        outputs[p] = {"received_estimate": recon}
    need0 = n1 * n2 * rc
    ok0 = len(central_addr) >= need0 and central_addr[:need0] == list(truth[P0].received)
    success[P0] = bool(ok0)
    outputs[P0] = {"received_estimate": central_addr}
    return ChunkedResult(
        success=all(success.values()), success_by_party=success,
        steps=chunks, rounds=rounds, per_step_rounds=w_nc + w_c,
        bk_counts={p: 0 for p in topology.parties()},
        tree_error_events=[], symbol_error_count=0,
        outputs=outputs, trace=None)
