"""Closed-form evaluation: per-slot resolve probabilities (exact, the
nu = 0.5 binomial form, and its product lower bound), their scaling
limits, density-evolution decoding thresholds, and achievable sum rates.

Notation follows the protocol module: M codewords, n0 payload bits, N
slots, degree distribution Lambda with mean Lambda'(1), channel load G.
The recurring argument `avg_degree_over_n` is Lambda'(1)/N, the probability
that a generic codeword's placement covers a given slot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import binom

from .degree import DegreeDistribution, edge_perspective, eval_edge_polynomial
from .errors import InvalidParametersError

# Sentinel for a diverging resolvable-collision bound (delta -> 1).
T_CAP = 2 ** 16

_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class AsymptoticRegime:
    """Joint scaling M = D*K^(1/delta), n0 = beta*log2(M), fixed load G."""

    G: float
    D: float
    beta: float
    delta: float
    mu: float = 1.0

    def __post_init__(self):
        if self.beta < 1:
            raise InvalidParametersError("beta must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise InvalidParametersError("delta must lie in (0, 1)")
        if self.D <= 0:
            raise InvalidParametersError("D must be positive")
        if self.G <= 0:
            raise InvalidParametersError("G must be positive")
        if not 0.0 < self.mu <= 1.0:
            raise InvalidParametersError("mu must lie in (0, 1]")


@dataclass(frozen=True)
class MprProfile:
    """Resolve probabilities by collision size: probs[u-1] for u colliders."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if any(p < 0 or p > 1 for p in probs):
            raise InvalidParametersError("profile values must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def t(self) -> int:
        """Largest collision size with positive resolve probability."""
        for u in range(len(self.probs), 0, -1):
            if self.probs[u - 1] > 0:
                return u
        return 0

    @classmethod
    def singleton(cls) -> "MprProfile":
        return cls((1.0,))

    @classmethod
    def bounded(cls, t: int) -> "MprProfile":
        """Resolve any collision of size <= t with certainty."""
        return cls((1.0,) * t)


@dataclass
class PmfTable:
    """Joint pmf of the all-zero / all-one channel-use counts in a slot."""

    n0: int
    log_probs: np.ndarray  # (n0+1, n0+1); -inf where a0 + au > n0

    def __post_init__(self):
        total = np.exp(logsumexp(self.log_probs))
        if abs(total - 1.0) > 1e-10:
            raise InvalidParametersError(f"pmf sums to {total!r}, not 1")

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)


def joint_pmf_a0_au(n0: int, nu: float, num_colliders: int) -> PmfTable:
    """Trinomial counts over the n0 payload uses of a degree-U slot.

    Per channel use, all U colliders send 0 with probability (1-nu)^U, all
    send 1 with probability nu^U, and the use is mixed otherwise.  A0 and AU
    count the all-zero and all-one uses.
    """
    if num_colliders < 1:
        raise InvalidParametersError("need at least one collider")
    if not 0.0 < nu < 1.0:
        raise InvalidParametersError("nu must lie strictly inside (0, 1)")
    U = num_colliders
    p0 = (1.0 - nu) ** U
    p1 = nu ** U
    pm = max(1.0 - p0 - p1, 0.0)
    a0 = np.arange(n0 + 1)[:, None]
    au = np.arange(n0 + 1)[None, :]
    rest = n0 - a0 - au
    valid = rest >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        logcoef = (
            gammaln(n0 + 1)
            - gammaln(a0 + 1)
            - gammaln(au + 1)
            - gammaln(np.where(valid, rest, 0) + 1)
        )
        log_pm = np.log(pm) if pm > 0 else -np.inf
        rest_term = np.where(rest > 0, rest * log_pm, 0.0)
        logp = logcoef + a0 * U * np.log(1.0 - nu) + au * U * np.log(nu) + rest_term
    logp = np.where(valid, logp, -np.inf)
    return PmfTable(n0=n0, log_probs=logp)


def _check_slot_args(num_colliders, num_words, avg_degree_over_n):
    if num_words < num_colliders:
        raise InvalidParametersError("codebook smaller than the collision size")
    if not 0.0 < avg_degree_over_n < 1.0:
        raise InvalidParametersError("Lambda'(1)/N must lie in (0, 1)")


def pi_u_exact(
    num_colliders: int, n0: int, nu: float, num_words: int, avg_degree_over_n: float
) -> float:
    """Exact probability of resolving a degree-U slot by discarding.

    A nontransmitted codeword survives iff it matches the A0 forced-zero
    and AU forced-one positions, so with x = r * nu^AU * (1-nu)^A0 and a
    Bino(M-U, r) number of competitors, the slot resolves with probability
    E[(1 - x)^(M-U)], summed over the (A0, AU) pmf in the log domain.
    """
    _check_slot_args(num_colliders, num_words, avg_degree_over_n)
    U, M, r = num_colliders, num_words, avg_degree_over_n
    table = joint_pmf_a0_au(n0, nu, U)
    a0 = np.arange(n0 + 1)[:, None]
    au = np.arange(n0 + 1)[None, :]
    x = r * np.exp(a0 * np.log1p(-nu) + au * np.log(nu))
    log_term = (M - U) * np.log1p(-x)
    valid = table.log_probs > -np.inf
    return float(np.exp(logsumexp(table.log_probs[valid] + log_term[valid])))


def pi_u_half(num_colliders: int, n0: int, num_words: int, avg_degree_over_n: float) -> float:
    """nu = 0.5 specialization: E[(1 - r*2^-A)^(M-U)], A ~ Bino(n0, 2^(1-U))."""
    _check_slot_args(num_colliders, num_words, avg_degree_over_n)
    U, M, r = num_colliders, num_words, avg_degree_over_n
    a = np.arange(n0 + 1)
    log_pmf = binom.logpmf(a, n0, 2.0 ** (1 - U))
    log_term = (M - U) * np.log1p(-r * 2.0 ** (-a.astype(float)))
    valid = log_pmf > -np.inf
    return float(np.exp(logsumexp(log_pmf[valid] + log_term[valid])))


def pi_u_lower_bound(
    num_colliders: int, n0: int, num_words: int, avg_degree_over_n: float
) -> float:
    """Jensen lower bound at nu = 0.5: (1 - r*(1 - 2^-U)^n0)^(M-U)."""
    _check_slot_args(num_colliders, num_words, avg_degree_over_n)
    U, M, r = num_colliders, num_words, avg_degree_over_n
    x = math.exp(n0 * math.log1p(-(2.0 ** (-U))))
    return math.exp((M - U) * math.log1p(-r * x))


def sandwich_check(
    num_colliders: int, n0: int, num_words: int, avg_degree_over_n: float
) -> tuple[float, float, float]:
    """Exponential bounds around the lower-bound product.

    From z/(1+z) <= ln(1+z) <= z with z = -r*x:
    exp(-(M-U)*r*x/(1-r*x)) <= (1-r*x)^(M-U) <= exp(-(M-U)*r*x).
    Returns (lower, value, upper) and asserts the ordering.
    """
    _check_slot_args(num_colliders, num_words, avg_degree_over_n)
    U, M, r = num_colliders, num_words, avg_degree_over_n
    x = math.exp(n0 * math.log1p(-(2.0 ** (-U))))
    value = math.exp((M - U) * math.log1p(-r * x))
    upper = math.exp(-(M - U) * r * x)
    lower = math.exp(-(M - U) * r * x / (1.0 - r * x))
    if not lower <= value <= upper:
        raise AssertionError(
            f"sandwich ordering violated: {lower} <= {value} <= {upper}"
        )
    return lower, value, upper


def critical_collision_size(beta: float, delta: float) -> float:
    """-log2(1 - 2^(-(1-delta)/beta)); +inf as delta -> 1."""
    z = (1.0 - delta) / beta
    arg = -math.expm1(-z * math.log(2.0))  # 1 - 2^-z, accurately for small z
    if arg <= 0.0:
        return math.inf
    return -math.log2(arg)


def pi_u_asymptotic(num_colliders: int, regime: AsymptoticRegime, avg_degree: float) -> float:
    """Scaling limit of the resolve-probability lower bound at nu = 0.5.

    1 below the critical collision size, 0 above it, and the boundary
    expression (1-2^-U)^(beta*log2 D) / exp(D*G*Lambda'(1)/mu) exactly at
    it (integer coincidence, compared with absolute tolerance 1e-12).
    """
    U = num_colliders
    ustar = critical_collision_size(regime.beta, regime.delta)
    if math.isfinite(ustar) and abs(U - ustar) <= _BOUNDARY_TOL:
        log_num = regime.beta * math.log2(regime.D) * math.log1p(-(2.0 ** (-U)))
        return math.exp(log_num - regime.D * regime.G * avg_degree / regime.mu)
    return 1.0 if U < ustar else 0.0


def t_ed_mpr(beta: float, delta: float) -> int:
    """Largest collision size guaranteed resolvable in the scaling limit:
    floor(-log2(1 - 2^(-(1-delta)/beta))), capped at T_CAP when it diverges."""
    ustar = critical_collision_size(beta, delta)
    if not math.isfinite(ustar) or ustar >= T_CAP:
        return T_CAP
    nearest = round(ustar)
    if abs(ustar - nearest) <= _BOUNDARY_TOL:
        return int(nearest)
    return math.floor(ustar)


class RegimeComparison(Enum):
    ED_MPR_RESOLVES_MORE = "ed_mpr_resolves_more"
    BCH_RESOLVES_MORE = "bch_resolves_more"
    EQUAL = "equal"


def comparison_boundaries(beta: float) -> tuple[float, float]:
    """(delta_low, delta_high) between which both schemes resolve equally:
    delta_low = 1 + beta*log2(1 - 2^-floor(beta)),
    delta_high = 1 + beta*log2(1 - 2^-(floor(beta)+1))."""
    t_bch = math.floor(beta)
    low = 1.0 + beta * math.log2(1.0 - 2.0 ** (-t_bch))
    high = 1.0 + beta * math.log2(1.0 - 2.0 ** (-(t_bch + 1)))
    return low, high


def compare_regimes(beta: float, delta: float) -> RegimeComparison:
    """Which scheme resolves more colliders per slot in the scaling limit."""
    if beta < 1:
        raise InvalidParametersError("beta must be >= 1")
    if not 0.0 < delta < 1.0:
        raise InvalidParametersError("delta must lie in (0, 1)")
    low, high = comparison_boundaries(beta)
    if delta > high:
        return RegimeComparison.ED_MPR_RESOLVES_MORE
    if delta < low:
        return RegimeComparison.BCH_RESOLVES_MORE
    return RegimeComparison.EQUAL


def asymptotic_profile(regime: AsymptoticRegime, avg_degree: float) -> MprProfile:
    """Limit resolve probabilities up to the capped collision size."""
    t = t_ed_mpr(regime.beta, regime.delta)
    if t >= T_CAP:
        raise InvalidParametersError(
            "resolvable collision size diverges in this regime (delta too close to 1)"
        )
    return MprProfile(
        tuple(pi_u_asymptotic(u, regime, avg_degree) for u in range(1, t + 1))
    )


# --- density evolution -------------------------------------------------

# Evaluation grid for the threshold condition over p in (0, 1]: geometric,
# with local x10 refinement around near-violations (margin < 1e-4).
_DE_GRID = np.geomspace(1e-7, 1.0, 2000)
_REFINE_MARGIN = 1e-4


def _de_rhs(edge_coeffs, profile: MprProfile, cp):
    """lambda(1 - e^-cp * sum_{u<T} pi_{u+1} (cp)^u / u!) with cp = G*Lambda'(1)*p."""
    cp = np.asarray(cp, dtype=float)
    t = profile.t
    if t == 0:
        inner = np.ones_like(cp)
    else:
        term = np.ones_like(cp)
        acc = profile.probs[0] * term
        for u in range(1, t):
            term = term * cp / u
            acc = acc + profile.probs[u] * term
        inner = np.clip(1.0 - np.exp(-cp) * acc, 0.0, 1.0)
    return eval_edge_polynomial(edge_coeffs, inner)


def de_evolve(
    dist: DegreeDistribution,
    profile: MprProfile,
    load: float,
    p0: float = 1.0,
    iterations: int = 100,
) -> np.ndarray:
    """Erasure-probability trajectory [p0, p1, ..., p_iterations] under the
    Poisson slot-degree limit."""
    if not 0.0 < p0 <= 1.0:
        raise InvalidParametersError("p0 must lie in (0, 1]")
    c = load * dist.avg_degree()
    edge = edge_perspective(dist)
    out = np.empty(iterations + 1)
    out[0] = p0
    p = p0
    for i in range(1, iterations + 1):
        p = float(_de_rhs(edge, profile, c * p))
        out[i] = p
    return out


def _condition_holds(edge_coeffs, profile: MprProfile, c: float) -> bool:
    """Check p > rhs(p) on the documented grid, refining near-violations."""
    margins = _DE_GRID - _de_rhs(edge_coeffs, profile, c * _DE_GRID)
    if (margins <= 0.0).any():
        return False
    for idx in np.flatnonzero(margins < _REFINE_MARGIN):
        lo = _DE_GRID[max(idx - 1, 0)]
        hi = _DE_GRID[min(idx + 1, len(_DE_GRID) - 1)]
        sub = np.geomspace(lo, hi, 21)
        if (sub - _de_rhs(edge_coeffs, profile, c * sub) <= 0.0).any():
            return False
    return True


def _threshold_search(dist: DegreeDistribution, profile_at, tol: float) -> float:
    if tol <= 0:
        raise InvalidParametersError("tolerance must be positive")
    edge = edge_perspective(dist)
    d1 = dist.avg_degree()

    def holds(g: float) -> bool:
        return _condition_holds(edge, profile_at(g), g * d1)

    if not holds(tol):
        return 0.0
    lo, hi = tol, 1.0
    while holds(hi):
        lo = hi
        hi *= 2.0
        if hi > 2 ** 20:  # no finite threshold at any practical load
            return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def de_threshold(dist: DegreeDistribution, profile: MprProfile, tol: float = 1e-4) -> float:
    """Largest load G with p > lambda(1 - e^-GL'p * sum ...) for all p in (0, 1],
    found by bisection on the documented evaluation grid."""
    return _threshold_search(dist, lambda g: profile, tol)


def threshold_ed_mpr(
    dist: DegreeDistribution, regime: AsymptoticRegime, tol: float = 1e-4
) -> float:
    """Lower bound on the decoding threshold using the limit profile.

    The boundary entry of the profile depends on the load, so the profile is
    rebuilt at every candidate load during the search (regime.G is ignored
    as an input and replaced by the search variable).
    """
    d1 = dist.avg_degree()
    return _threshold_search(
        dist, lambda g: asymptotic_profile(replace(regime, G=g), d1), tol
    )


# --- information rates --------------------------------------------------


def sum_rate(mu: float, num_users: int, n_slots: int, num_words: int, n0: int) -> float:
    """(mu*K/N) * log2(M/K) / (1 + n0), bits per channel use summed over users."""
    return (mu * num_users / n_slots) * math.log2(num_words / num_users) / (1 + n0)


def asymptotic_sum_rate(regime: AsymptoticRegime) -> float:
    """Scaling limit of the sum rate: (1 - delta)/beta * G."""
    return (1.0 - regime.delta) / regime.beta * regime.G


# --- regime instantiation at finite K ------------------------------------


def codebook_size(num_users: int, delta: float, payload_factor: float = 1.0) -> int:
    """M = round(D * K^(1/delta))."""
    return int(round(payload_factor * num_users ** (1.0 / delta)))


def payload_length(beta: float, num_words: int) -> int:
    """n0 = ceil(beta * log2 M), the smallest integer payload meeting the
    per-slot rate target (ceiling absorbs float fuzz on exact integers)."""
    return math.ceil(beta * math.log2(num_words) - 1e-9)
