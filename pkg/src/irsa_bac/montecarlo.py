"""Monte-Carlo experiment harness.

Frame-level PLR sweeps and isolated-slot resolve-probability estimation.
Per-frame randomness is keyed by (master_seed, purpose, frame index), so a
point's result is a pure function of (spec, master seed), independent of
execution order and worker count.  All requested decoders score the same
frame stream, which makes decoder-dominance checks exact rather than
statistical.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .analysis import codebook_size, payload_length
from .codebook import Codebook, FrameGraph, build_frame_graph, gen_bch_codebook, gen_iid_codebook
from .decoders import bch_decode, ed_fg_decode, ed_mpr_decode, singleton_decode
from .degree import DegreeDistribution
from .errors import InvalidParametersError
from .protocol import ReceivedFrame, ScenarioConfig, assign_codewords, sample_active_set, transmit

DECODERS = ("singleton", "ed_mpr", "ed_fg", "bch")

# chunk size is fixed (never derived from the worker count) so that
# early-stop decision points are identical for any parallel layout
_CHUNK_FRAMES = 512

PLR_SCHEMA = "plr/1"
PLR_COLUMNS = [
    "point_id", "G", "K", "N", "M", "n0", "decoder",
    "frames", "packets", "lost", "plr", "ci_low", "ci_high",
]


def wilson_interval(losses: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a loss proportion; (0, 1) when empty."""
    if total == 0:
        return 0.0, 1.0
    p = losses / total
    zz = z * z
    denom = 1.0 + zz / total
    center = (p + zz / (2 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + zz / (4 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class PlrEstimate:
    point_id: str
    G: float
    K: int
    N: int
    M: int
    n0: int
    decoder: str
    frames: int
    packets: int
    lost: int
    plr: float
    ci_low: float
    ci_high: float
    error: str | None = None


@dataclass
class PointSetup:
    """Everything prebuilt once per operating point."""

    config: ScenarioConfig          # population + i.i.d. codebook
    graph: FrameGraph
    G: float
    n0: int
    bch_codebook: Codebook | None = None
    t_bch: int | None = None

    @property
    def num_words(self) -> int:
        return self.config.codebook.num_words


def users_for_load(load: float, n_slots: int, mu: float) -> int:
    """K = round(G*N/mu)."""
    if mu <= 0:
        raise InvalidParametersError("cannot derive a population from G when mu = 0")
    return int(round(load * n_slots / mu))


def make_point(
    num_users: int,
    n_slots: int,
    mu: float,
    dist: DegreeDistribution,
    beta: float,
    delta: float,
    nu: float,
    master_seed: int,
    payload_factor: float = 1.0,
    with_bch: bool = False,
) -> PointSetup:
    """Instantiate one operating point of the joint scaling:
    M = round(D*K^(1/delta)), n0 = ceil(beta*log2 M)."""
    M = codebook_size(num_users, delta, payload_factor)
    n0 = payload_length(beta, M)
    book = gen_iid_codebook(M, n0, nu, master_seed)
    graph = build_frame_graph(book, dist, n_slots, master_seed)
    config = ScenarioConfig(
        num_users=num_users,
        activation_prob=mu,
        n_slots=n_slots,
        codebook=book,
        dist=dist,
    )
    bch_book = None
    t = None
    if with_bch:
        t = math.floor(beta)
        m = max(2, math.ceil(math.log2(M + 1)))
        bch_book = gen_bch_codebook(m, t, M)
    return PointSetup(
        config=config,
        graph=graph,
        G=config.load,
        n0=n0,
        bch_codebook=bch_book,
        t_bch=t,
    )


def decode_frame(setup: PointSetup, frame_index: int, master_seed: int, decoders):
    """Simulate one frame and decode it with every requested receiver.

    Returns (active_count, outcomes) where outcomes maps decoder name to a
    DecodeOutcome, or is None for an overloaded frame (more active users
    than codewords), which is scored as total loss.
    """
    config = setup.config
    act_rng = streams.substream(master_seed, streams.ACTIVATION, frame_index)
    ka = len(sample_active_set(config, act_rng))
    if ka > setup.num_words:
        return ka, None
    asg_rng = streams.substream(master_seed, streams.ASSIGNMENT, frame_index)
    assigned = assign_codewords(ka, setup.num_words, asg_rng)
    outcomes = {}
    iid_frame: ReceivedFrame | None = None
    bch_frame: ReceivedFrame | None = None
    for name in decoders:
        if name == "bch":
            if setup.bch_codebook is None:
                raise InvalidParametersError("point was built without a BCH codebook")
            if bch_frame is None:
                bch_frame = transmit(setup.bch_codebook, setup.graph, assigned)
            outcomes[name] = bch_decode(bch_frame, setup.graph, setup.bch_codebook, setup.t_bch)
            continue
        if iid_frame is None:
            iid_frame = transmit(config.codebook, setup.graph, assigned)
        if name == "singleton":
            outcomes[name] = singleton_decode(iid_frame, setup.graph, config.codebook)
        elif name == "ed_mpr":
            outcomes[name] = ed_mpr_decode(iid_frame, setup.graph, config.codebook)
        elif name == "ed_fg":
            outcomes[name] = ed_fg_decode(iid_frame, setup.graph, config.codebook)
        else:
            raise InvalidParametersError(f"unknown decoder {name!r}")
    return ka, outcomes


def _score_chunk(setup, decoders, start, stop, master_seed):
    sent = dict.fromkeys(decoders, 0)
    lost = dict.fromkeys(decoders, 0)
    for idx in range(start, stop):
        ka, outcomes = decode_frame(setup, idx, master_seed, decoders)
        for name in decoders:
            sent[name] += ka
            lost[name] += ka if outcomes is None else outcomes[name].undecoded_count
    return sent, lost


_WORKER_STATE = None


def _pool_init(setup, decoders, master_seed):
    global _WORKER_STATE
    _WORKER_STATE = (setup, decoders, master_seed)


def _pool_chunk(bounds):
    setup, decoders, master_seed = _WORKER_STATE
    return _score_chunk(setup, decoders, bounds[0], bounds[1], master_seed)


def run_point_multi(
    setup: PointSetup,
    decoders,
    frames: int,
    master_seed: int,
    workers: int = 1,
    ci_rel_target: float | None = None,
    point_id: str | None = None,
) -> dict[str, PlrEstimate]:
    """Score `frames` shared frames with every decoder in `decoders`.

    With a relative CI-width target, the run may stop at a chunk boundary
    once every decoder's Wilson interval is narrow enough; decision points
    are fixed, so early stopping is reproducible too.
    """
    if frames < 1:
        raise InvalidParametersError("frame budget must be >= 1")
    decoders = tuple(decoders)
    bounds = [(i, min(i + _CHUNK_FRAMES, frames)) for i in range(0, frames, _CHUNK_FRAMES)]
    sent = dict.fromkeys(decoders, 0)
    lost = dict.fromkeys(decoders, 0)
    frames_run = 0

    def tight_enough() -> bool:
        if ci_rel_target is None:
            return False
        for name in decoders:
            if lost[name] == 0:
                return False
            low, high = wilson_interval(lost[name], sent[name])
            if (high - low) * sent[name] > ci_rel_target * lost[name]:
                return False
        return True

    if workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_pool_init,
            initargs=(setup, decoders, master_seed),
        ) as pool:
            futures = [pool.submit(_pool_chunk, b) for b in bounds]
            for (start, stop), fut in zip(bounds, futures):
                s, l = fut.result()
                for name in decoders:
                    sent[name] += s[name]
                    lost[name] += l[name]
                frames_run = stop
                if tight_enough():
                    break
    else:
        for start, stop in bounds:
            s, l = _score_chunk(setup, decoders, start, stop, master_seed)
            for name in decoders:
                sent[name] += s[name]
                lost[name] += l[name]
            frames_run = stop
            if tight_enough():
                break

    out = {}
    for name in decoders:
        low, high = wilson_interval(lost[name], sent[name])
        plr = lost[name] / sent[name] if sent[name] else 0.0
        out[name] = PlrEstimate(
            point_id=point_id or f"G={setup.G:g}",
            G=setup.G,
            K=setup.config.num_users,
            N=setup.config.n_slots,
            M=setup.num_words,
            n0=setup.n0,
            decoder=name,
            frames=frames_run,
            packets=sent[name],
            lost=lost[name],
            plr=plr,
            ci_low=low,
            ci_high=high,
        )
    return out


def run_plr_point(
    setup: PointSetup,
    decoder: str,
    frames: int,
    master_seed: int,
    workers: int = 1,
    ci_rel_target: float | None = None,
) -> PlrEstimate:
    """Single-decoder PLR estimate for one operating point."""
    return run_point_multi(
        setup, (decoder,), frames, master_seed, workers=workers, ci_rel_target=ci_rel_target
    )[decoder]


@dataclass
class PiUEstimate:
    trials: int
    successes: int
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float


def run_pi_u_point(
    num_colliders: int,
    n0: int,
    nu: float,
    num_words: int,
    avg_degree_over_n: float,
    trials: int,
    seed: int,
    batch: int = 100_000,
) -> PiUEstimate:
    """Isolated-slot resolve-probability estimate, independent-codeword model.

    Per trial: U transmitted payloads drawn i.i.d. Bernoulli(nu), a
    Bino(M-U, Lambda'(1)/N) number of competitors likewise; the slot
    resolves iff no competitor matches all forced positions.
    """
    U = num_colliders
    if not 1 <= U <= num_words:
        raise InvalidParametersError("need 1 <= colliders <= codebook size")
    rng = streams.substream(seed, streams.SLOT_TRIALS)
    successes = 0
    remaining = trials
    while remaining > 0:
        b = min(batch, remaining)
        remaining -= b
        tx = rng.random((b, U, n0)) < nu
        colsum = tx.sum(axis=1)
        forced_one = colsum == U
        forced_zero = colsum == 0
        l0 = rng.binomial(num_words - U, avg_degree_over_n, size=b)
        total = int(l0.sum())
        if total == 0:
            successes += b
            continue
        comp = rng.random((total, n0)) < nu
        owner = np.repeat(np.arange(b), l0)
        survives = ((comp | ~forced_one[owner]) & (~comp | ~forced_zero[owner])).all(axis=1)
        blocked = np.bincount(owner[survives], minlength=b) > 0
        successes += int(b - blocked.sum())
    p = successes / trials
    low, high = wilson_interval(successes, trials)
    se = (high - low) / (2 * 1.96)
    return PiUEstimate(
        trials=trials, successes=successes, estimate=p, std_error=se,
        ci_low=low, ci_high=high,
    )


@dataclass
class ExperimentSpec:
    """Grid of PLR points sharing one protocol configuration.

    Points are given either as loads (g_grid, population derived as
    K = round(G*N/mu)) or as explicit populations (k_grid).
    """

    dist: DegreeDistribution
    n_slots: int
    mu: float
    nu: float
    beta: float
    delta: float
    decoders: tuple
    frames: int
    master_seed: int
    g_grid: tuple = ()
    k_grid: tuple = ()
    payload_factor: float = 1.0
    ci_rel_target: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.frames < 1:
            raise InvalidParametersError("frame budget must be >= 1")
        if bool(self.g_grid) == bool(self.k_grid):
            raise InvalidParametersError("give exactly one of g_grid / k_grid")
        unknown = set(self.decoders) - set(DECODERS)
        if unknown:
            raise InvalidParametersError(f"unknown decoders {sorted(unknown)}")
        if any(g <= 0 for g in self.g_grid):
            raise InvalidParametersError("loads must be positive")


def sweep(spec: ExperimentSpec) -> list[PlrEstimate]:
    """Map run_point_multi over the grid; per-point failures are recorded
    as error rows instead of aborting the sweep."""
    results: list[PlrEstimate] = []
    if spec.g_grid:
        points = [(f"G={g:g}", users_for_load(g, spec.n_slots, spec.mu)) for g in spec.g_grid]
    else:
        points = [(f"K={k}", int(k)) for k in spec.k_grid]
    with_bch = "bch" in spec.decoders
    for point_id, num_users in points:
        try:
            setup = make_point(
                num_users, spec.n_slots, spec.mu, spec.dist,
                spec.beta, spec.delta, spec.nu, spec.master_seed,
                payload_factor=spec.payload_factor, with_bch=with_bch,
            )
            by_decoder = run_point_multi(
                setup, spec.decoders, spec.frames, spec.master_seed,
                workers=spec.workers, ci_rel_target=spec.ci_rel_target,
                point_id=point_id,
            )
            results.extend(by_decoder[name] for name in spec.decoders)
        except Exception as exc:  # noqa: BLE001 - sweep must survive bad points
            for name in spec.decoders:
                results.append(
                    PlrEstimate(
                        point_id=point_id, G=float("nan"), K=num_users,
                        N=spec.n_slots, M=0, n0=0, decoder=name, frames=0,
                        packets=0, lost=0, plr=float("nan"),
                        ci_low=float("nan"), ci_high=float("nan"),
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
    return results


def write_plr_csv(path, estimates) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# irsa-bac schema={PLR_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(PLR_COLUMNS + ["error"])
        for e in estimates:
            writer.writerow(
                [
                    e.point_id, repr(e.G), e.K, e.N, e.M, e.n0, e.decoder,
                    e.frames, e.packets, e.lost, repr(e.plr),
                    repr(e.ci_low), repr(e.ci_high), e.error or "",
                ]
            )


def read_csv(path) -> tuple[str, list[dict]]:
    """Read any CSV emitted by this package: (schema, rows as dicts)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        prefix = "# irsa-bac schema="
        if not first.startswith(prefix):
            raise InvalidParametersError(f"{path}: missing schema header line")
        schema = first[len(prefix):]
        rows = list(csv.DictReader(fh))
    return schema, rows
