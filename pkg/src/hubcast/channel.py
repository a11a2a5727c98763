"""Noisy broadcast rounds with counter-based, replayable randomness.

Every (sender, receiver, round) triple sees one independent Bernoulli(eps)
bit flip.  Flips are drawn from a Philox counter-based generator keyed by the
master seed with the round index as the counter, and laid out canonically as
a per-round tensor ``[link, sender_slot, receiver_slot]`` (slot 0 is the
central party).  The draw therefore never depends on evaluation order or
thread count: same seed, same flips, always.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Party, Topology


class MissingSend(ValueError):
    """A fully-utilized round requires one bit from every party."""


@dataclass(frozen=True)
class NoiseModel:
    """Crossover probability and master seed of the bit-flip channel."""

    epsilon: float
    master_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 1/2), got {self.epsilon}")


class BroadcastChannel:
    """Delivers one fully-utilized round at a time over all links.

    ``forced`` optionally pins individual flips for fault-injection tests:
    keys are ``(round, link, sender_slot, receiver_slot)`` mapping to 0/1.
    """

    def __init__(self, topology: Topology, noise: NoiseModel, forced: dict | None = None):
        self.topology = topology
        self.noise = noise
        self.forced = forced or {}
        self._shape = (topology.n2, topology.n1 + 1, topology.n1 + 1)

    def flips(self, round_index: int) -> np.ndarray:
        """Flip tensor for one round: [link-1, sender_slot, receiver_slot]."""
        if self.noise.epsilon == 0.0 and not self.forced:
            return np.zeros(self._shape, dtype=np.uint8)
        bitgen = np.random.Philox(key=self.noise.master_seed,
                                  counter=[0, 0, 0, round_index])
        u = np.random.Generator(bitgen).random(self._shape)
        flips = (u < self.noise.epsilon).astype(np.uint8)
        for (rnd, link, s, r), v in self.forced.items():
            if rnd == round_index:
                flips[link - 1, s, r] = v
        return flips

    def flip(self, round_index: int, link: int, sender_slot: int, receiver_slot: int) -> int:
        return int(self.flips(round_index)[link - 1, sender_slot, receiver_slot])

    def link_round(self, round_index: int, link: int, sends: np.ndarray) -> np.ndarray:
        """One round on one link: ``sends[slot]`` -> matrix received[receiver,
        sender] with the diagonal echoing the sender's own bit noiselessly."""
        sends = np.asarray(sends, dtype=np.uint8)
        n = self.topology.n1 + 1
        if sends.shape != (n,):
            raise MissingSend(f"link {link} needs {n} bits, got shape {sends.shape}")
        flips = self.flips(round_index)[link - 1]
        received = (sends[None, :] ^ flips.T) & 1
        received[np.arange(n), np.arange(n)] = sends
        return received


def broadcast_round(topology: Topology, noise: NoiseModel, round_index: int,
                    sends: dict[Party, object]) -> dict[Party, tuple[int, ...]]:
    """One noisy fully-utilized round at the whole-network level.

    ``sends`` holds one bit per peripheral party and an n2-bit sequence for
    the central party; the result maps each party to its received bits in
    canonical order.
    """
    chan = BroadcastChannel(topology, noise)
    n1, n2 = topology.n1, topology.n2
    central = Party(0, 0)
    for p in topology.parties():
        if p not in sends:
            raise MissingSend(f"no bit supplied for {p}")
    cbits = tuple(int(b) & 1 for b in sends[central])
    if len(cbits) != n2:
        raise MissingSend(f"central party must send n2={n2} bits")

    per_link = {}
    for i in range(1, n2 + 1):
        vec = np.zeros(n1 + 1, dtype=np.uint8)
        vec[0] = cbits[i - 1]
        for j in range(1, n1 + 1):
            vec[j] = int(sends[Party(i, j)]) & 1
        per_link[i] = chan.link_round(round_index, i, vec)

    out: dict[Party, tuple[int, ...]] = {}
    for p in topology.peripherals():
        mat = per_link[p.i]
        bits = [int(mat[p.j, q.j]) if not q.is_central else int(mat[p.j, 0])
                for q in topology.senders_for(p)]
        out[p] = tuple(bits)
    out[central] = tuple(int(per_link[q.i][0, q.j]) for q in topology.peripherals())
    return out
