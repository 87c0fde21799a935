"""SIC receivers for the adder channel.

Four receivers share the same sweep/cancel skeleton:

* singleton_decode   -- classic collision-channel SIC: only slots whose
                        residual degree is exactly 1 are read off.
* ed_mpr_decode      -- per-slot discarding with multi-packet reception;
                        discard information stays local to each slot.
* ed_fg_decode       -- same per-slot rule, but every discarded or resolved
                        codeword is also removed from the candidate lists of
                        all its other slots (erasure decoding on the full
                        graph of all M codewords).
* bch_decode         -- bounded-collision baseline: slots of residual degree
                        k <= t are resolved by exhaustive subset-sum search
                        over the candidate list (unique by the parity-check
                        construction).

All residual slot degrees are re-read from the pilot column, never cached.
Within a sweep, slots are visited in ascending index order and cancellation
is applied immediately; slots whose residual and candidate list are
unchanged since their last visit are skipped (the outcome is identical, the
discard predicate being a pure function of that pair).

Candidate lists are kept as fixed sorted index arrays plus per-slot alive
masks; for payloads of at most 64 bits the discard test runs on packed
uint64 words (two mask comparisons per candidate).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from . import _fast
from .codebook import BchKind, Codebook, FrameGraph
from .errors import (
    CodebookPropertyError,
    DecodingInconsistencyError,
    InvalidParametersError,
    OracleTooLargeError,
)
from .protocol import ReceivedFrame

# The compiled sweep is used whenever payloads pack into uint64; the pure
# loops below are the reference implementation (tests assert equivalence)
# and the fallback for longer payloads.  Flip for debugging.
USE_COMPILED_SWEEP = _fast.HAVE_NUMBA


@dataclass
class DecodeOutcome:
    decoded: frozenset
    undecoded_count: int
    iterations: int
    per_slot_log: list = field(default_factory=list)  # (sweep, slot, resolved degree)


@lru_cache(maxsize=None)
def _bit_weights(n: int) -> np.ndarray:
    return (1 << np.arange(n, dtype=np.uint64)).astype(np.uint64)


def _pack_row(bits: np.ndarray) -> np.uint64:
    """Pack a 0/1 vector (length <= 64) into a uint64, bit j = position j."""
    return np.uint64((bits.astype(np.uint64) * _bit_weights(len(bits))).sum())


def _survivor_mask(slot_residual, k_residual: int, candidates, codebook: Codebook):
    """Boolean survival mask for the two discard rules over `candidates`."""
    payload_res = np.asarray(slot_residual)[1:]
    bits = codebook.payload_bits
    if bits is not None:
        one_mask = _pack_row(payload_res == k_residual)
        zero_mask = _pack_row(payload_res == 0)
        cand_bits = bits[candidates]
        return ((cand_bits & one_mask) == one_mask) & ((cand_bits & zero_mask) == 0)
    forced_one = payload_res == k_residual
    forced_zero = payload_res == 0
    payload = codebook.words[candidates, 1:]
    ok = np.ones(len(candidates), dtype=bool)
    if forced_one.any():
        ok &= (payload[:, forced_one] == 1).all(axis=1)
    if forced_zero.any():
        ok &= (payload[:, forced_zero] == 0).all(axis=1)
    return ok


def discard_pass(slot_residual, k_residual: int, candidates, codebook: Codebook):
    """Candidates surviving the two per-position discard rules.

    Payload positions where the residual equals the residual degree force a
    1 bit; positions where it equals 0 force a 0 bit; all other positions
    impose no constraint.  Survivors are returned in input order.
    """
    if k_residual < 1:
        raise InvalidParametersError("discard pass needs residual degree >= 1")
    candidates = np.asarray(candidates, dtype=np.int64)
    if len(candidates) == 0:
        return candidates
    return candidates[_survivor_mask(slot_residual, k_residual, candidates, codebook)]


@dataclass
class DecoderState:
    """Mutable per-frame decoding state, confined to one worker."""

    residual: np.ndarray        # int64 copy of y, shrinks under cancellation
    cand: list                  # per-slot fixed sorted candidate index arrays
    alive: list                 # per-slot boolean masks over cand
    resolved: set
    graph: FrameGraph
    codebook: Codebook
    dirty: np.ndarray           # slots whose state changed since last visit

    @classmethod
    def initial(cls, frame: ReceivedFrame, graph: FrameGraph, codebook: Codebook):
        return cls(
            residual=frame.y.astype(np.int64, copy=True),
            cand=graph.candidates,
            alive=[np.ones(len(c), dtype=bool) for c in graph.candidates],
            resolved=set(),
            graph=graph,
            codebook=codebook,
            dirty=np.ones(graph.n_slots, dtype=bool),
        )

    def live(self, slot: int) -> np.ndarray:
        """Current candidate list of one slot."""
        return self.cand[slot][self.alive[slot]]

    def cancel(self, word_indices) -> None:
        """Subtract decoded words from the residual in all their slots."""
        for i in word_indices:
            slots = self.graph.slots[i]
            self.residual[slots] -= self.codebook.words[i]
            self.dirty[slots] = True

    def drop_candidate(self, word: int, skip_slot: int) -> None:
        """Remove one codeword from the lists of all its slots but skip_slot."""
        slots = self.graph.slots[word]
        positions = self.graph.slot_positions[word]
        for j in range(len(slots)):
            t = slots[j]
            if t == skip_slot:
                continue
            if self.alive[t][positions[j]]:
                self.alive[t][positions[j]] = False
                self.dirty[t] = True


def _graph_flats(graph: FrameGraph):
    """Flattened candidate/slot arrays for the compiled sweep, cached on the
    graph (it is immutable once built)."""
    cached = getattr(graph, "_flats", None)
    if cached is not None:
        return cached
    cand_off = np.zeros(graph.n_slots + 1, dtype=np.int64)
    for s in range(graph.n_slots):
        cand_off[s + 1] = cand_off[s] + len(graph.candidates[s])
    cand_flat = (
        np.concatenate(graph.candidates)
        if graph.n_slots and cand_off[-1]
        else np.zeros(0, dtype=np.int64)
    )
    slots_off = np.zeros(graph.num_words + 1, dtype=np.int64)
    np.cumsum(graph.degrees, out=slots_off[1:])
    slots_flat = (
        np.concatenate(graph.slots) if graph.num_words else np.zeros(0, dtype=np.int64)
    )
    pos_flat = (
        np.concatenate(graph.slot_positions)
        if graph.num_words
        else np.zeros(0, dtype=np.int64)
    )
    flats = (cand_flat, cand_off, slots_flat, slots_off, pos_flat)
    graph._flats = flats
    return flats


def _compiled_decode(mode: int, frame: ReceivedFrame, graph: FrameGraph, codebook: Codebook):
    """Run the numba sweep; None when the fast path does not apply."""
    if not USE_COMPILED_SWEEP:
        return None
    bits = codebook.payload_bits
    if bits is None:
        return None
    cand_flat, cand_off, slots_flat, slots_off, pos_flat = _graph_flats(graph)
    residual = frame.y.astype(np.int64, copy=True)
    alive = np.ones(len(cand_flat), dtype=bool)
    m = codebook.num_words
    resolved_buf = np.empty(m, dtype=np.int64)
    log_buf = np.empty((max(m, 1), 3), dtype=np.int64)
    n_res, n_log, iterations, err, err_slot = _fast._sic_sweep(
        mode, residual, bits, codebook.words, cand_flat, cand_off, alive,
        slots_flat, slots_off, pos_flat, resolved_buf, log_buf,
    )
    if err == _fast._ERR_TOO_FEW_SURVIVORS:
        raise DecodingInconsistencyError(
            f"slot {err_slot}: fewer survivors than the residual degree"
        )
    if err == _fast._ERR_SINGLETON_MATCH:
        raise DecodingInconsistencyError(
            f"slot {err_slot}: singleton residual does not match exactly one candidate"
        )
    decoded = frozenset(int(i) for i in resolved_buf[:n_res])
    log = [(int(a), int(b), int(c)) for a, b, c in log_buf[:n_log]]
    return DecodeOutcome(
        decoded=decoded,
        undecoded_count=len(frame.truth - decoded),
        iterations=iterations,
        per_slot_log=log,
    )


def resolve_slot(state: DecoderState, slot: int):
    """Run the discard pass on one slot; return the survivor set iff it is
    exactly the residual degree, else None.  The slot's candidate list is
    shrunk to the survivors either way (monotone under cancellation)."""
    k = int(state.residual[slot, 0])
    if k < 1:
        raise InvalidParametersError("resolve_slot needs residual degree >= 1")
    lv = state.live(slot)
    ok = _survivor_mask(state.residual[slot], k, lv, state.codebook)
    n_survivors = int(ok.sum())
    if n_survivors < len(lv):
        idx = np.flatnonzero(state.alive[slot])
        state.alive[slot][idx[~ok]] = False
    if n_survivors < k:
        raise DecodingInconsistencyError(
            f"slot {slot}: {n_survivors} survivors for residual degree {k}"
        )
    if n_survivors == k:
        return lv[ok]
    return None


def _finish(state: DecoderState, frame: ReceivedFrame, iterations: int, log) -> DecodeOutcome:
    decoded = frozenset(state.resolved)
    return DecodeOutcome(
        decoded=decoded,
        undecoded_count=len(frame.truth - decoded),
        iterations=iterations,
        per_slot_log=log,
    )


def ed_mpr_decode(frame: ReceivedFrame, graph: FrameGraph, codebook: Codebook) -> DecodeOutcome:
    """Per-slot discarding decoder with local candidate lists.

    On resolution, every decoded word is subtracted from the residual in all
    its slots but removed only from the resolving slot's candidate list;
    discard information never leaves the slot that produced it.
    """
    out = _compiled_decode(_fast.MODE_MPR, frame, graph, codebook)
    if out is not None:
        return out
    state = DecoderState.initial(frame, graph, codebook)
    log = []
    iterations = 0
    while state.dirty.any():
        iterations += 1
        for s in range(graph.n_slots):
            if not state.dirty[s]:
                continue
            state.dirty[s] = False
            k = int(state.residual[s, 0])
            if k == 0:
                continue
            decoded = resolve_slot(state, s)
            if decoded is None:
                continue
            log.append((iterations, s, k))
            state.resolved.update(int(i) for i in decoded)
            state.cancel(decoded)
            state.alive[s][:] = False
            state.dirty[s] = False
    return _finish(state, frame, iterations, log)


def ed_fg_decode(frame: ReceivedFrame, graph: FrameGraph, codebook: Codebook) -> DecodeOutcome:
    """Full-graph erasure decoder.

    After each slot's discard pass, every codeword discarded there is
    removed from the candidate lists of all its slots (it cannot have been
    transmitted); resolved codewords are likewise removed everywhere.
    """
    out = _compiled_decode(_fast.MODE_FG, frame, graph, codebook)
    if out is not None:
        return out
    state = DecoderState.initial(frame, graph, codebook)
    log = []
    iterations = 0
    while state.dirty.any():
        iterations += 1
        for s in range(graph.n_slots):
            if not state.dirty[s]:
                continue
            state.dirty[s] = False
            k = int(state.residual[s, 0])
            if k == 0:
                continue
            lv = state.live(s)
            ok = _survivor_mask(state.residual[s], k, lv, state.codebook)
            n_survivors = int(ok.sum())
            if n_survivors < len(lv):
                idx = np.flatnonzero(state.alive[s])
                state.alive[s][idx[~ok]] = False
            if n_survivors < k:
                raise DecodingInconsistencyError(
                    f"slot {s}: {n_survivors} survivors for residual degree {k}"
                )
            if n_survivors == k:
                decoded = lv[ok]
                log.append((iterations, s, k))
                state.resolved.update(int(i) for i in decoded)
                state.cancel(decoded)
                state.alive[s][:] = False
                state.dirty[s] = False
                for w in decoded:
                    state.drop_candidate(int(w), skip_slot=s)
            for w in lv[~ok]:
                state.drop_candidate(int(w), skip_slot=s)
    return _finish(state, frame, iterations, log)


def singleton_decode(frame: ReceivedFrame, graph: FrameGraph, codebook: Codebook) -> DecodeOutcome:
    """Collision-channel SIC: read slots of residual degree 1 directly."""
    out = _compiled_decode(_fast.MODE_SINGLETON, frame, graph, codebook)
    if out is not None:
        return out
    state = DecoderState.initial(frame, graph, codebook)
    log = []
    iterations = 0
    bits = codebook.payload_bits
    while state.dirty.any():
        iterations += 1
        for s in range(graph.n_slots):
            if not state.dirty[s]:
                continue
            state.dirty[s] = False
            if int(state.residual[s, 0]) != 1:
                continue
            lv = state.live(s)
            if bits is not None:
                match = lv[bits[lv] == _pack_row(state.residual[s, 1:])]
            else:
                match = lv[(codebook.words[lv] == state.residual[s]).all(axis=1)]
            if len(match) != 1:
                raise DecodingInconsistencyError(
                    f"slot {s}: {len(match)} candidates match a singleton residual"
                )
            w = int(match[0])
            log.append((iterations, s, 1))
            state.resolved.add(w)
            state.cancel([w])
            state.drop_candidate(w, skip_slot=-1)
            state.dirty[s] = False
    return _finish(state, frame, iterations, log)


def bch_slot_decode(slot_residual, k_residual: int, candidates, codebook: Codebook, t: int):
    """Resolve one slot of the parity-check baseline.

    Returns None when the residual degree exceeds the capability t.
    Otherwise searches the k-subsets of the candidates for the unique one
    whose integer column sum equals the residual; zero or multiple matches
    violate the codebook's subset-sum property and raise.
    """
    if k_residual > t:
        return None
    if k_residual < 1:
        raise InvalidParametersError("bch_slot_decode needs residual degree >= 1")
    slot_residual = np.asarray(slot_residual, dtype=np.int64)
    cands = np.asarray(candidates, dtype=np.int64)
    words = codebook.words
    matches = []
    if k_residual == 1:
        hit = cands[(words[cands] == slot_residual).all(axis=1)]
        matches = [(int(c),) for c in hit]
    elif k_residual == 2:
        # complement search: the partner word must equal residual - word
        rem = slot_residual[None, :] - words[cands].astype(np.int64)
        feasible = (rem >= 0).all(axis=1) & (rem <= 1).all(axis=1)
        if feasible.any():
            cand_set = {int(c) for c in cands}
            index = codebook.word_index
            for c, row in zip(cands[feasible], rem[feasible]):
                d = index.get(row.astype(np.uint8).tobytes())
                if d is not None and d > c and d in cand_set:
                    matches.append((int(c), int(d)))
    else:
        for combo in itertools.combinations(cands.tolist(), k_residual):
            if np.array_equal(words[list(combo)].sum(axis=0), slot_residual):
                matches.append(tuple(int(c) for c in combo))
    if len(matches) != 1:
        raise CodebookPropertyError(
            f"{len(matches)} subsets of size {k_residual} sum to the residual "
            f"(expected exactly 1 for a t={t} parity codebook)"
        )
    return np.array(matches[0], dtype=np.int64)


def bch_decode(
    frame: ReceivedFrame, graph: FrameGraph, codebook: Codebook, t: int | None = None
) -> DecodeOutcome:
    """Frame-level baseline SIC: resolve every slot of residual degree <= t."""
    if t is None:
        if not isinstance(codebook.kind, BchKind):
            raise InvalidParametersError("bch_decode needs a BCH codebook or explicit t")
        t = codebook.kind.t
    state = DecoderState.initial(frame, graph, codebook)
    log = []
    iterations = 0
    while state.dirty.any():
        iterations += 1
        for s in range(graph.n_slots):
            if not state.dirty[s]:
                continue
            state.dirty[s] = False
            k = int(state.residual[s, 0])
            if k == 0 or k > t:
                continue
            decoded = bch_slot_decode(state.residual[s], k, state.live(s), codebook, t)
            log.append((iterations, s, k))
            state.resolved.update(int(i) for i in decoded)
            state.cancel(decoded)
            for w in decoded:
                state.drop_candidate(int(w), skip_slot=-1)
            state.dirty[s] = False
    return _finish(state, frame, iterations, log)


def oracle_slot_decode(
    slot_residual,
    k_residual: int,
    candidates,
    codebook: Codebook,
    max_enumerations: int = 10**7,
):
    """All k-subsets of the candidates whose integer sum equals the residual.

    Brute force, for cross-validating the per-slot decoders on small
    instances.  For k = 0 the empty subset is consistent iff the residual
    is all-zero.
    """
    cands = [int(c) for c in np.asarray(candidates, dtype=np.int64)]
    if comb(len(cands), k_residual) > max_enumerations:
        raise OracleTooLargeError(
            f"C({len(cands)}, {k_residual}) exceeds {max_enumerations} enumerations"
        )
    slot_residual = np.asarray(slot_residual, dtype=np.int64)
    words = codebook.words
    solutions = []
    for combo in itertools.combinations(cands, k_residual):
        total = words[list(combo)].sum(axis=0) if combo else np.zeros_like(slot_residual)
        if np.array_equal(total, slot_residual):
            solutions.append(frozenset(combo))
    return solutions
