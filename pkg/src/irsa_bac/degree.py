"""Repetition-degree distributions and their edge-perspective form.

A distribution is written polynomially as Lambda(x) = sum_L Lambda_L x^L,
where Lambda_L is the probability that a user transmits L replicas.  The
edge-perspective polynomial is lambda(x) = Lambda'(x) / Lambda'(1), with
coefficient lambda_L = L * Lambda_L / Lambda'(1) attached to x^(L-1).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParametersError

_NORMALIZATION_TOL = 1e-12

_TERM_RE = re.compile(
    r"^\s*(?P<coeff>[0-9.eE+-]+)?\s*\*?\s*x\s*(?:\^\s*(?P<exp>\d+))?\s*$"
)


@dataclass(frozen=True)
class DegreeDistribution:
    """Probability distribution over replica counts L >= 1."""

    coeffs: dict[int, float] = field()

    def __post_init__(self):
        clean = {}
        for degree, p in self.coeffs.items():
            if int(degree) != degree or degree < 1:
                raise InvalidParametersError(f"degree {degree} must be an integer >= 1")
            if p < 0:
                raise InvalidParametersError(f"coefficient for degree {degree} is negative")
            if p > 0:
                clean[int(degree)] = float(p)
        if not clean:
            raise InvalidParametersError("distribution has empty support")
        total = sum(clean.values())
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            raise InvalidParametersError(f"coefficients sum to {total!r}, not 1")
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_string(cls, text: str) -> "DegreeDistribution":
        """Parse e.g. 'x^2', '0.5x^2 + 0.5x^3', '0.25 x^2 + 0.75 x^8'."""
        coeffs: dict[int, float] = {}
        for term in text.replace("-", "+-").split("+"):
            if not term.strip():
                continue
            m = _TERM_RE.match(term)
            if m is None:
                raise InvalidParametersError(f"cannot parse term {term!r} in {text!r}")
            coeff = float(m.group("coeff")) if m.group("coeff") not in (None, "") else 1.0
            exp = int(m.group("exp")) if m.group("exp") else 1
            coeffs[exp] = coeffs.get(exp, 0.0) + coeff
        return cls(coeffs)

    def __str__(self) -> str:
        return " + ".join(f"{p:g}x^{L}" for L, p in sorted(self.coeffs.items()))

    def support(self) -> list[int]:
        return sorted(self.coeffs)

    @property
    def max_degree(self) -> int:
        return max(self.coeffs)

    def avg_degree(self) -> float:
        """Lambda'(1) = sum_L L * Lambda_L."""
        return sum(L * p for L, p in self.coeffs.items())

    def sample(self, rng: np.random.Generator) -> int:
        """Draw one replica count by inverse CDF."""
        u = rng.random()
        acc = 0.0
        degrees = self.support()
        for L in degrees:
            acc += self.coeffs[L]
            if u < acc:
                return L
        return degrees[-1]


def edge_perspective(dist: DegreeDistribution) -> dict[int, float]:
    """Coefficients of lambda(x): {L: L*Lambda_L/Lambda'(1)}, attached to x^(L-1)."""
    d1 = dist.avg_degree()
    return {L: L * p / d1 for L, p in dist.coeffs.items()}


def eval_edge_polynomial(edge_coeffs: dict[int, float], x):
    """Evaluate lambda(x) = sum_L lambda_L x^(L-1); x may be an array."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for L, c in edge_coeffs.items():
        out += c * x ** (L - 1)
    return out
