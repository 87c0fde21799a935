"""Frame-level transmission over the noiseless binary adder channel.

Active users pick distinct codewords, place replicas per the shared frame
graph, and the channel output in each slot is the integer column sum of
the codewords transmitted there.  The pilot column therefore reveals each
slot's collision size exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, FrameGraph
from .degree import DegreeDistribution, edge_perspective, eval_edge_polynomial
from .errors import FrameOverloadError, InvalidParametersError

__all__ = [
    "DegreeDistribution",
    "edge_perspective",
    "eval_edge_polynomial",
    "ScenarioConfig",
    "ReceivedFrame",
    "sample_active_set",
    "assign_codewords",
    "transmit",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """Population and frame geometry for one operating point."""

    num_users: int
    activation_prob: float
    n_slots: int
    codebook: Codebook
    dist: DegreeDistribution

    def __post_init__(self):
        if self.num_users < 1:
            raise InvalidParametersError("need at least one user")
        if not 0.0 <= self.activation_prob <= 1.0:
            raise InvalidParametersError("activation probability must be in [0, 1]")
        if self.n_slots < 1:
            raise InvalidParametersError("need at least one slot")

    @property
    def load(self) -> float:
        """Channel load G = mu*K/N, expected active users per slot."""
        return self.activation_prob * self.num_users / self.n_slots


@dataclass
class ReceivedFrame:
    """Channel output plus the transmitted set (retained for scoring only)."""

    y: np.ndarray  # int64, shape (N, 1 + n0)
    truth: frozenset


def sample_active_set(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """User ids active this frame; each user independently with prob mu."""
    mask = rng.random(config.num_users) < config.activation_prob
    return np.flatnonzero(mask)


def assign_codewords(
    active_count: int, num_words: int, rng: np.random.Generator
) -> np.ndarray:
    """Distinct codeword indices, uniform without replacement from [0..M-1]."""
    if active_count > num_words:
        raise FrameOverloadError(active_count, num_words)
    return rng.choice(num_words, size=active_count, replace=False).astype(np.int64)


def transmit(codebook: Codebook, graph: FrameGraph, assigned) -> ReceivedFrame:
    """Superpose the assigned codewords' replicas: y[s] = sum of words in slot s."""
    assigned = np.asarray(assigned, dtype=np.int64)
    y = np.zeros((graph.n_slots, codebook.words.shape[1]), dtype=np.int64)
    if len(assigned):
        rows = np.concatenate([graph.slots[i] for i in assigned])
        reps = np.repeat(codebook.words[assigned], graph.degrees[assigned], axis=0)
        np.add.at(y, rows, reps)
    return ReceivedFrame(y=y, truth=frozenset(int(i) for i in assigned))
