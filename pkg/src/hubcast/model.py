"""Network topology, party identities, and the noiseless protocol layer.

The network consists of ``n2`` broadcast links of ``n1`` parties each, all
links sharing a single central party.  A fully-utilized protocol makes every
party broadcast one bit per round on each adjacent link; the central party
broadcasts one (possibly different) bit per link per round.

Received-bit ordering inside a round is canonical and fixed here once for the
whole library:

* peripheral ``(i, j)`` hears ``(p_{i,1}, ..., p_{i,n1})`` excluding itself,
  in ascending ``j``, followed by the central party;
* the central party hears all peripherals in link-major order
  ``(i=1..n2, j=1..n1)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

Bits = tuple[int, ...]

CENTRAL = ("c",)


@dataclass(frozen=True)
class Party:
    """Identity of one party: ``Party(0, 0)`` is the central party."""

    i: int
    j: int

    @property
    def is_central(self) -> bool:
        return self.i == 0

    def __repr__(self) -> str:
        return "p0" if self.is_central else f"p{self.i},{self.j}"


P0 = Party(0, 0)


@dataclass(frozen=True)
class Topology:
    """``n1`` parties per link, ``n2`` links, ``n = n1*n2 + 1`` parties total."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"need n1 >= 1 and n2 >= 1, got ({self.n1}, {self.n2})")

    @property
    def n(self) -> int:
        return self.n1 * self.n2 + 1

    def peripherals(self) -> list[Party]:
        return [Party(i, j) for i in range(1, self.n2 + 1) for j in range(1, self.n1 + 1)]

    def parties(self) -> list[Party]:
        return [P0] + self.peripherals()

    def link_members(self, i: int) -> list[Party]:
        """All n1+1 members of link ``i``, central first."""
        return [P0] + [Party(i, j) for j in range(1, self.n1 + 1)]

    def senders_for(self, party: Party) -> list[Party]:
        """Adjacent senders heard by ``party``, in canonical order."""
        if party.is_central:
            return self.peripherals()
        peers = [Party(party.i, j) for j in range(1, self.n1 + 1) if j != party.j]
        return peers + [P0]


class Protocol:
    """A deterministic fully-utilized protocol with zero-padding.

    Subclasses implement :meth:`peripheral_bit` and :meth:`central_bits`; both
    receive the party input and the flat received-bit prefix (canonical
    ordering, ``rounds_so_far`` full rounds).  Queries past ``round_count``
    rounds return zeros, so simulation engines may feed prefixes of any
    length.
    """

    def __init__(self, topology: Topology, round_count: int):
        if round_count < 1:
            raise ValueError("round_count must be >= 1")
        self.topology = topology
        self.round_count = round_count

    # -- subclass surface -------------------------------------------------

    def peripheral_bit(self, party: Party, x: Bits, received: Bits) -> int:
        raise NotImplementedError

    def central_bits(self, x: Bits, received: Bits) -> Bits:
        raise NotImplementedError

    # -- zero-padded entry points used by the engines ---------------------

    def next_bit(self, party: Party, x: Bits, received: Sequence[int]) -> int:
        """Next bit for a peripheral party, 0 beyond ``round_count`` rounds."""
        rounds_seen = len(received) // self.topology.n1
        if rounds_seen >= self.round_count:
            return 0
        return int(self.peripheral_bit(party, x, tuple(received))) & 1

    def next_bits_central(self, x: Bits, received: Sequence[int]) -> Bits:
        """Next n2-bit string for the central party, zeros beyond the end."""
        n1n2 = self.topology.n1 * self.topology.n2
        rounds_seen = len(received) // n1n2
        if rounds_seen >= self.round_count:
            return (0,) * self.topology.n2
        bits = tuple(int(b) & 1 for b in self.central_bits(x, tuple(received)))
        if len(bits) != self.topology.n2:
            raise ValueError("central_bits must return n2 bits")
        return bits


class ConstantProtocol(Protocol):
    """Every party always sends ``value``."""

    def __init__(self, topology: Topology, round_count: int, value: int = 0):
        super().__init__(topology, round_count)
        self.value = value & 1

    def peripheral_bit(self, party, x, received):
        return self.value

    def central_bits(self, x, received):
        return (self.value,) * self.topology.n2


class XorEchoProtocol(Protocol):
    """Round 1: send own first input bit; later rounds echo the XOR of the
    previous round's received bits (central: per-link XOR, keeping links
    independent)."""

    def peripheral_bit(self, party, x, received):
        n1 = self.topology.n1
        if not received:
            return x[0]
        last = received[-n1:]
        return sum(last) & 1

    def central_bits(self, x, received):
        n1, n2 = self.topology.n1, self.topology.n2
        if not received:
            return tuple(x[i % len(x)] for i in range(n2))
        last = received[-n1 * n2:]
        return tuple(sum(last[(i * n1):(i + 1) * n1]) & 1 for i in range(n2))


class RandomTableProtocol(Protocol):
    """Seeded random next-bit function: a fresh pseudo-random bit for every
    (party, input, prefix) triple.  Deterministic across runs and platforms;
    exercises rewind logic maximally since any transcript divergence changes
    all subsequent bits."""

    def __init__(self, topology: Topology, round_count: int, seed: int):
        super().__init__(topology, round_count)
        self.seed = int(seed)
        self._key = self.seed.to_bytes(8, "big", signed=False)

    def _hash_bits(self, tag: bytes, x: Bits, received: Bits, nbits: int) -> int:
        data = tag + bytes(x) + b"|" + bytes(received)
        digest = hashlib.blake2b(data, key=self._key, digest_size=8).digest()
        return int.from_bytes(digest, "big") & ((1 << nbits) - 1)

    def peripheral_bit(self, party, x, received):
        return self._hash_bits(b"p%d,%d:" % (party.i, party.j), x, received, 1)

    def central_bits(self, x, received):
        n2 = self.topology.n2
        v = self._hash_bits(b"c:", x, received, n2)
        return tuple((v >> k) & 1 for k in range(n2))


def make_protocol(topology: Topology, rc: int, kind: str = "random", seed: int = 0,
                  value: int = 0) -> Protocol:
    if kind == "random":
        return RandomTableProtocol(topology, rc, seed)
    if kind == "xor_echo":
        return XorEchoProtocol(topology, rc)
    if kind == "constant":
        return ConstantProtocol(topology, rc, value)
    raise ValueError(f"unknown protocol kind {kind!r}")


def inputs_from_seed(topology: Topology, seed: int, bits: int = 8) -> dict[Party, Bits]:
    """Fixed-length bit-string input for every party, drawn from ``seed``."""
    key = int(seed).to_bytes(8, "big", signed=False)
    out: dict[Party, Bits] = {}
    for p in topology.parties():
        data = b"x:%d,%d" % (p.i, p.j)
        digest = hashlib.blake2b(data, key=key, digest_size=(bits + 7) // 8).digest()
        val = int.from_bytes(digest, "big")
        out[p] = tuple((val >> k) & 1 for k in range(bits))
    return out


@dataclass
class Transcript:
    """Sent and received bit strings of one party over a noiseless run.

    ``sent``: RC bits for a peripheral; n2*RC bits round-major for the
    central party.  ``received``: n1*RC bits for a peripheral, n1*n2*RC for
    the central party, round-major with the canonical sender order.
    """

    sent: Bits = field(default_factory=tuple)
    received: Bits = field(default_factory=tuple)


def run_noiseless(topology: Topology, protocol: Protocol,
                  inputs: dict[Party, Bits]) -> dict[Party, Transcript]:
    """Reference executor: runs the protocol for RC rounds with no noise."""
    rc = protocol.round_count
    periph = topology.peripherals()
    sent: dict[Party, list[int]] = {p: [] for p in topology.parties()}
    recv: dict[Party, list[int]] = {p: [] for p in topology.parties()}

    for _ in range(rc):
        bits = {p: protocol.next_bit(p, inputs[p], recv[p]) for p in periph}
        cbits = protocol.next_bits_central(inputs[P0], recv[P0])
        for p in periph:
            sent[p].append(bits[p])
        sent[P0].extend(cbits)
        for p in periph:
            for q in topology.senders_for(p):
                recv[p].append(cbits[p.i - 1] if q.is_central else bits[q])
        for q in periph:
            recv[P0].append(bits[q])

    return {p: Transcript(tuple(sent[p]), tuple(recv[p])) for p in topology.parties()}


def sent_stream(topology: Topology, transcripts: dict[Party, Transcript],
                sender: Party, link: int = 0) -> Bits:
    """Bits a given sender put on the wire, per round; for the central party
    the per-link stream ``b_{0|link}`` is returned."""
    t = transcripts[sender]
    if not sender.is_central:
        return t.sent
    n2 = topology.n2
    return tuple(t.sent[r * n2 + (link - 1)] for r in range(len(t.sent) // n2))
