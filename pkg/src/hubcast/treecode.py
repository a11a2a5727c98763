"""Tree codes over d-ary trees with online encoding and minimum-distance
decoding.

Construction is a seeded randomized search: every tree node gets a pseudo
random shift and edge ``e`` out of that node is labeled ``(e + shift) mod |S|``.
Sibling labels are therefore always distinct (one-level distance holds
structurally, and encoding is injective per depth), while labels on diverging
paths collide with probability ``1/|S|`` per position exactly as for i.i.d.
labels.  The distance property is then verified - exhaustively when the tree
is small enough, by random sampling otherwise - and any violating pair gets
its nodes' shifts locally resampled until the verifier is satisfied.

Decoding implements the minimum Hamming distance rule over all same-length
paths, ties broken by the lexicographically smallest path.  The production
decoder is a branch-and-bound search that visits paths in lexicographic
order; a naive full-enumeration decoder is kept as the reference oracle.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coding import ConstructionFailed


class DepthExceeded(ValueError):
    """Operation past the depth the code was built and verified for."""


class DecodeIntractable(RuntimeError):
    """Exact decoding would need to branch over an enormous arity."""


_ENUM_LIMIT = 4096  # largest arity we agree to branch over on a mismatch


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def lemma_alphabet_size(arity: int, alpha: float) -> int:
    """Alphabet size ``2*floor((2^h(a) * 2d)^(1/(1-a))) - 1`` known to admit
    a tree code of distance alpha."""
    base = (2.0 ** binary_entropy(alpha)) * 2.0 * arity
    return 2 * math.floor(base ** (1.0 / (1.0 - alpha))) - 1


@dataclass
class TreeCode:
    """A concrete labeled d-ary tree of bounded depth.

    ``verified_depth`` records how deep the distance property was checked and
    ``verify_mode`` whether that check was exhaustive or sampled.
    """

    arity: int
    alpha: float
    alphabet_size: int
    max_depth: int
    seed: int
    salts: dict[tuple, int] = field(default_factory=dict)
    verified_depth: int = 0
    verify_mode: str = "none"

    def __post_init__(self):
        if self.alphabet_size < self.arity:
            raise ValueError("alphabet must be at least as large as the arity")
        self._key = int(self.seed).to_bytes(8, "big", signed=True)
        self._shift_cache: dict[tuple, int] = {}

    @property
    def symbol_bits(self) -> int:
        """Width of one output symbol packed as bits."""
        return max(1, math.ceil(math.log2(self.alphabet_size)))

    # -- labeling ---------------------------------------------------------

    def _shift(self, node: tuple) -> int:
        cached = self._shift_cache.get(node)
        if cached is not None:
            return cached
        salt = self.salts.get(node, 0)
        data = (",".join(map(str, node)) + ";" + str(salt)).encode()
        digest = hashlib.blake2b(data, key=self._key, digest_size=8).digest()
        val = int.from_bytes(digest, "big") % self.alphabet_size
        self._shift_cache[node] = val
        return val

    def label(self, node: tuple, edge: int) -> int:
        return (edge + self._shift(node)) % self.alphabet_size

    def _resample(self, node: tuple):
        self.salts[node] = self.salts.get(node, 0) + 1
        self._shift_cache.pop(node, None)

    # -- encode / decode ---------------------------------------------------

    def encode(self, word) -> list[int]:
        """Online encoding: output symbol t depends on input symbols 1..t."""
        w = tuple(int(e) for e in word)
        if len(w) > self.max_depth:
            raise DepthExceeded(f"word length {len(w)} > max_depth {self.max_depth}")
        out = []
        for t, e in enumerate(w):
            if not 0 <= e < self.arity:
                raise ValueError(f"edge {e} outside arity {self.arity}")
            out.append(self.label(w[:t], e))
        return out

    def _greedy(self, received: list[int]) -> tuple[list[int], int]:
        path: list[int] = []
        cost = 0
        for sym in received:
            e = (sym - self._shift(tuple(path))) % self.alphabet_size
            if e >= self.arity:
                e = 0
                cost += 1
            path.append(e)
        return path, cost

    def decode(self, received) -> list[int]:
        """argmin over all same-length paths of the Hamming distance to the
        received symbol sequence; lexicographically smallest on ties."""
        y = [int(s) for s in received]
        r = len(y)
        if r > self.max_depth:
            raise DepthExceeded(f"received length {r} > max_depth {self.max_depth}")
        if r == 0:
            return []
        _, greedy_cost = self._greedy(y)
        best_cost = greedy_cost + 1
        best_path: list[int] | None = None
        prefix: list[int] = []

        def dfs(depth: int, partial: int):
            nonlocal best_cost, best_path
            if partial >= best_cost:
                return
            if depth == r:
                best_cost = partial
                best_path = prefix.copy()
                return
            node = tuple(prefix)
            match = (y[depth] - self._shift(node)) % self.alphabet_size
            if partial + 1 >= best_cost:
                # Only a zero-cost extension can survive pruning.
                if match < self.arity:
                    prefix.append(match)
                    dfs(depth + 1, partial)
                    prefix.pop()
                return
            if self.arity > _ENUM_LIMIT:
                raise DecodeIntractable(
                    f"arity {self.arity} too large to branch over; "
                    "strengthen the inner code so symbol errors stay rare")
            for e in range(self.arity):
                prefix.append(e)
                dfs(depth + 1, partial + (0 if e == match else 1))
                prefix.pop()

        dfs(0, 0)
        assert best_path is not None
        return best_path

    def decode_naive(self, received) -> list[int]:
        """Reference decoder: plain enumeration of all arity^r paths."""
        import itertools

        y = [int(s) for s in received]
        r = len(y)
        if r == 0:
            return []
        if self.arity ** r > 2_000_000:
            raise DecodeIntractable("naive enumeration too large")
        best_cost, best_path = r + 1, None
        for path in itertools.product(range(self.arity), repeat=r):
            cost = sum(1 for t in range(r) if self.label(path[:t], path[t]) != y[t])
            if cost < best_cost:
                best_cost, best_path = cost, list(path)
        return best_path

    # -- symbol <-> bits packing -------------------------------------------

    def symbol_to_bits(self, sym: int) -> tuple[int, ...]:
        c = self.symbol_bits
        return tuple((sym >> (c - 1 - t)) & 1 for t in range(c))

    def bits_to_symbol(self, bits) -> int:
        val = 0
        for b in bits:
            val = (val << 1) | (int(b) & 1)
        if val < self.alphabet_size:
            return val
        # unused codepoint: nearest valid index by Hamming distance on the
        # packed bits, smallest index on ties; for alphabets too large to
        # scan, clearing the top bit always lands on a valid index
        if self.alphabet_size > (1 << 16):
            return val & ~(1 << (self.symbol_bits - 1))
        best, best_d = 0, self.symbol_bits + 1
        for s in range(self.alphabet_size):
            d = bin(s ^ val).count("1")
            if d < best_d:
                best, best_d = s, d
        return best

    # -- serialization -------------------------------------------------------

    def descriptor(self) -> dict:
        return {
            "arity": self.arity,
            "alpha": self.alpha,
            "alphabet_size": self.alphabet_size,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "verified_depth": self.verified_depth,
            "verify_mode": self.verify_mode,
            "salts": [[list(k), v] for k, v in sorted(self.salts.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor())

    @classmethod
    def from_descriptor(cls, doc: dict) -> "TreeCode":
        return cls(
            arity=doc["arity"], alpha=doc["alpha"],
            alphabet_size=doc["alphabet_size"], max_depth=doc["max_depth"],
            seed=doc["seed"],
            salts={tuple(k): v for k, v in doc.get("salts", [])},
            verified_depth=doc.get("verified_depth", 0),
            verify_mode=doc.get("verify_mode", "none"),
        )


# ---------------------------------------------------------------------------
# Distance verification
# ---------------------------------------------------------------------------

def _violates(tc: TreeCode, dist: int, suffix_len: int) -> bool:
    return dist < tc.alpha * suffix_len - 1e-9


def _check_pair(tc: TreeCode, root: tuple, s1: tuple, s2: tuple) -> bool:
    """True iff the pair of suffixes from ``root`` meets the distance bound."""
    d = 0
    for t in range(len(s1)):
        n1, n2 = root + s1[:t], root + s2[:t]
        if tc.label(n1, s1[t]) != tc.label(n2, s2[t]):
            d += 1
    return not _violates(tc, d, len(s1))


def _all_paths(tc: TreeCode, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge matrix and label matrix of every root path of the given length."""
    d = tc.arity
    n = d ** length
    edges = np.empty((n, length), dtype=np.int64)
    for t in range(length):
        reps = d ** (length - 1 - t)
        edges[:, t] = np.tile(np.repeat(np.arange(d), reps), d ** t)
    labels = np.empty((n, length), dtype=np.int64)
    def fill(node: tuple, row: int):
        depth = len(node)
        if depth == length:
            return
        span = d ** (length - 1 - depth)
        shift = tc._shift(node)
        for e in range(d):
            lo = row + e * span
            labels[lo:lo + span, depth] = (e + shift) % tc.alphabet_size
            fill(node + (e,), lo)
    fill((), 0)
    return edges, labels


def exhaustive_violations(tc: TreeCode, depth: int, limit: int | None = None):
    """All violating (root, suffix1, suffix2) triples up to ``depth``.

    Checks every pair of equal-length root paths against the distance bound
    at their least common ancestor; feasible while arity**depth stays small.
    """
    out = []
    for length in range(1, depth + 1):
        edges, labels = _all_paths(tc, length)
        n = edges.shape[0]
        block = max(1, 2_000_000 // max(1, n * length))
        for lo in range(0, n, block):
            hi = min(n, lo + block)
            eq_e = edges[lo:hi, None, :] == edges[None, :, :]
            lca = np.cumprod(eq_e, axis=2).sum(axis=2)
            dist = (labels[lo:hi, None, :] != labels[None, :, :]).sum(axis=2)
            suffix = length - lca
            bad = dist < (tc.alpha * suffix - 1e-9)
            bad &= np.arange(lo, hi)[:, None] < np.arange(n)[None, :]
            for a, b in np.argwhere(bad):
                h = int(lca[a, b])
                root = tuple(edges[lo + a, :h].tolist())
                out.append((root,
                            tuple(edges[lo + a, h:].tolist()),
                            tuple(edges[b, h:].tolist())))
                if limit and len(out) >= limit:
                    return out
    return out


def sampled_violations(tc: TreeCode, depth: int, samples: int,
                       rng: np.random.Generator, limit: int | None = None):
    """Random diverging path pairs, spread over suffix lengths and depths."""
    out = []
    d = tc.arity
    if d < (1 << 62):
        edge = lambda: int(rng.integers(0, d))
    else:
        import random as _random
        pyrng = _random.Random(int(rng.integers(0, 2**32)))
        edge = lambda: pyrng.randrange(d)
    for _ in range(samples):
        lam = int(rng.integers(1, depth + 1))
        h = int(rng.integers(0, depth - lam + 1))
        root = tuple(edge() for _ in range(h))
        e1 = edge()
        e2 = edge()
        while e2 == e1:
            e2 = edge()
        s1 = (e1,) + tuple(edge() for _ in range(lam - 1))
        s2 = (e2,) + tuple(edge() for _ in range(lam - 1))
        if not _check_pair(tc, root, s1, s2):
            out.append((root, s1, s2))
            if limit and len(out) >= limit:
                break
    return out


def build_tree_code(arity: int, alpha: float = 0.5, max_depth: int = 8,
                    seed: int = 0, alphabet_size: int | None = None,
                    verify: str = "auto", samples: int = 20_000,
                    max_rounds: int = 60) -> TreeCode:
    """Construct and verify a tree code.

    ``alphabet_size`` defaults to the known-sufficient bound for the given
    arity and distance; callers may override it (smaller alphabets keep
    downstream inner codes narrow, at the price of empirical-only distance).
    ``verify`` is one of ``exhaustive``, ``sampled``, ``auto``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if arity < 2 or max_depth < 1:
        raise ValueError("need arity >= 2 and max_depth >= 1")
    if alphabet_size is None:
        alphabet_size = lemma_alphabet_size(arity, alpha)
    tc = TreeCode(arity=arity, alpha=alpha, alphabet_size=alphabet_size,
                  max_depth=max_depth, seed=seed)
    if verify == "auto":
        verify = "exhaustive" if float(arity) ** max_depth <= 4100 else "sampled"
    rng = np.random.default_rng(seed ^ 0x5EED)
    for _ in range(max_rounds):
        if verify == "exhaustive":
            bad = exhaustive_violations(tc, max_depth, limit=64)
        elif verify == "sampled":
            bad = sampled_violations(tc, max_depth, samples, rng, limit=64)
        else:
            raise ValueError(f"unknown verify mode {verify!r}")
        if not bad:
            tc.verified_depth = max_depth
            tc.verify_mode = verify
            return tc
        for root, s1, s2 in bad:
            for t in range(len(s1)):
                tc._resample(root + s1[:t])
                tc._resample(root + s2[:t])
    raise ConstructionFailed(
        f"no valid labeling within {max_rounds} resampling rounds "
        f"(arity={arity}, |S|={alphabet_size}, depth={max_depth})")
