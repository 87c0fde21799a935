"""Codebook construction and deterministic replica placement.

Codewords are pilot-prefixed bit rows: a leading 1 followed by n0 payload
bits.  Two constructions are supported: i.i.d. Bernoulli payloads (random
coding) and the columns of a BCH parity-check matrix (the bounded-collision
baseline).  Replica placement is a pure function of (codeword index,
degree distribution, slot count, master seed), shared by transmitter and
receiver, so the receiver can rebuild the frame graph exactly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from . import gf2, streams
from .degree import DegreeDistribution
from .errors import InvalidParametersError

_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class IidKind:
    nu: float
    seed: int


@dataclass(frozen=True)
class BchKind:
    m: int
    t: int


CodebookKind = Union[IidKind, BchKind]


@dataclass
class Codebook:
    """M distinct pilot-prefixed codewords of length 1 + n0."""

    words: np.ndarray  # uint8, shape (M, 1 + n0)
    kind: CodebookKind

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.uint8)
        if words.ndim != 2 or words.shape[1] < 2:
            raise InvalidParametersError("words must be (M, 1+n0) with n0 >= 1")
        if not np.all(words[:, 0] == 1):
            raise InvalidParametersError("every codeword must start with the pilot bit 1")
        if len({w.tobytes() for w in words}) != len(words):
            raise InvalidParametersError("codewords must be pairwise distinct")
        self.words = words

    @property
    def num_words(self) -> int:
        return self.words.shape[0]

    @property
    def payload_length(self) -> int:
        return self.words.shape[1] - 1

    @cached_property
    def word_index(self) -> dict[bytes, int]:
        """Full-word bytes -> codeword index (used by subset-sum decoding)."""
        return {w.tobytes(): i for i, w in enumerate(self.words)}

    @cached_property
    def payload_bits(self) -> np.ndarray | None:
        """Payloads packed into uint64 (bit j = payload position j), or None
        when n0 > 64.  Lets the discard test run as two mask operations."""
        n0 = self.payload_length
        if n0 > 64:
            return None
        weights = (1 << np.arange(n0, dtype=np.uint64)).astype(np.uint64)
        return (self.words[:, 1:].astype(np.uint64) * weights).sum(axis=1)


def gen_iid_codebook(num_words: int, n0: int, nu: float, seed: int) -> Codebook:
    """Random codebook: payload bits i.i.d. Bernoulli(nu), duplicates redrawn.

    A colliding (later) word's payload is regenerated until distinct, with a
    cap of 1000 redraws per word.  Deterministic given the seed.
    """
    if not 0.0 < nu < 1.0:
        raise InvalidParametersError(f"nu={nu} must lie strictly inside (0, 1)")
    if n0 < 1:
        raise InvalidParametersError("payload length n0 must be >= 1")
    if num_words < 1:
        raise InvalidParametersError("need at least one codeword")
    if num_words > 2 ** n0:
        raise InvalidParametersError(
            f"{num_words} distinct payloads of {n0} bits do not exist"
        )
    rng = streams.substream(seed, streams.CODEBOOK)
    payload = (rng.random((num_words, n0)) < nu).astype(np.uint8)
    seen: set[bytes] = set()
    for i in range(num_words):
        redraws = 0
        key = payload[i].tobytes()
        while key in seen:
            redraws += 1
            if redraws > _MAX_REDRAWS:
                raise InvalidParametersError(
                    f"could not find a distinct payload for word {i} "
                    f"after {_MAX_REDRAWS} redraws"
                )
            payload[i] = rng.random(n0) < nu
            key = payload[i].tobytes()
        seen.add(key)
    words = np.hstack([np.ones((num_words, 1), dtype=np.uint8), payload])
    return Codebook(words, IidKind(nu=nu, seed=seed))


def gen_bch_codebook(m: int, t: int, num_words: int) -> Codebook:
    """Parity-check-matrix codebook: word i is pilot || bits(alpha^i) ||
    bits(alpha^(3i)) || ... || bits(alpha^((2t-1)i)) for i in [1..M].

    Payload length is n0 = t*m.  Any two distinct subsets of at most t
    words have distinct bit-wise (hence integer) sums, which is what the
    bounded-collision decoder relies on.
    """
    if t < 1:
        raise InvalidParametersError("error-correction capability t must be >= 1")
    if m not in gf2.PRIMITIVE_POLYS:
        raise InvalidParametersError(
            f"unsupported field degree m={m} (supported: 2..16)"
        )
    if not 1 <= num_words <= 2 ** m - 1:
        raise InvalidParametersError(
            f"num_words={num_words} must lie in [1, 2^{m} - 1]"
        )
    words = np.empty((num_words, 1 + t * m), dtype=np.uint8)
    words[:, 0] = 1
    for w in range(num_words):
        i = w + 1
        for j in range(t):
            e = (2 * j + 1) * i
            bits = gf2.element_bits(gf2.alpha_power(m, e), m)
            words[w, 1 + j * m : 1 + (j + 1) * m] = bits
    return Codebook(words, BchKind(m=m, t=t))


def export_words(codebook: Codebook, path) -> None:
    """Write one word per line as '0'/'1' characters, pilot first."""
    with open(path, "w") as fh:
        for w in codebook.words:
            fh.write("".join("1" if b else "0" for b in w) + "\n")


@dataclass
class FrameGraph:
    """Deterministic codeword-to-slot placement and its inverse.

    slots[i] is the sorted array of slot indices carrying word i's replicas;
    candidates[s] is the sorted array of word indices whose placement
    includes slot s.  The two are exact inverses.  slot_positions[i][j] is
    word i's position inside candidates[slots[i][j]], precomputed so
    decoders can flip per-slot membership masks without searching.
    """

    n_slots: int
    degrees: np.ndarray  # int64, shape (M,)
    slots: list = field(repr=False)       # list of sorted int64 arrays
    candidates: list = field(repr=False)  # list of sorted int64 arrays
    slot_positions: list = field(repr=False, default=None)

    def __post_init__(self):
        if self.slot_positions is None:
            self.slot_positions = [
                np.array(
                    [int(np.searchsorted(self.candidates[s], i)) for s in self.slots[i]],
                    dtype=np.int64,
                )
                for i in range(len(self.degrees))
            ]

    @property
    def num_words(self) -> int:
        return len(self.degrees)


def replica_profile(
    index: int, dist: DegreeDistribution, n_slots: int, master_seed: int
) -> tuple[int, np.ndarray]:
    """Degree and sorted slot set for one codeword index.

    Driven by the stream keyed (master_seed, GRAPH, index): identical on
    every call and on both sides of the channel.
    """
    if n_slots < dist.max_degree:
        raise InvalidParametersError(
            f"N={n_slots} slots cannot host degree {dist.max_degree} placements"
        )
    rng = streams.substream(master_seed, streams.GRAPH, index)
    degree = dist.sample(rng)
    chosen = streams.sample_without_replacement(rng, n_slots, degree)
    return degree, np.array(sorted(chosen), dtype=np.int64)


def build_frame_graph(
    codebook: Codebook, dist: DegreeDistribution, n_slots: int, master_seed: int
) -> FrameGraph:
    """Apply replica_profile to every codeword and build candidate lists."""
    num_words = codebook.num_words
    degrees = np.empty(num_words, dtype=np.int64)
    slots = []
    positions = []
    cand_accum: list[list[int]] = [[] for _ in range(n_slots)]
    for i in range(num_words):
        degree, slot_set = replica_profile(i, dist, n_slots, master_seed)
        degrees[i] = degree
        slots.append(slot_set)
        pos = np.empty(degree, dtype=np.int64)
        for j, s in enumerate(slot_set):
            pos[j] = len(cand_accum[s])
            cand_accum[s].append(i)
        positions.append(pos)
    # indices are visited ascending, so each candidate list is already sorted
    candidates = [np.array(c, dtype=np.int64) for c in cand_accum]
    return FrameGraph(
        n_slots=n_slots,
        degrees=degrees,
        slots=slots,
        candidates=candidates,
        slot_positions=positions,
    )


def export_graph_csv(graph: FrameGraph, path) -> None:
    """Rows of (index, degree, comma-joined slot list)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "degree", "slots"])
        for i in range(graph.num_words):
            writer.writerow(
                [i, int(graph.degrees[i]), ",".join(str(int(s)) for s in graph.slots[i])]
            )
