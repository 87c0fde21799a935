"""GF(2^m) arithmetic for parity-check codebook columns.

Field elements are Python ints encoding polynomials over GF(2): bit j is
the coefficient of x^j.  The field is built over a fixed table of
minimum-weight primitive polynomials, so tables are bit-exact across runs.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidParametersError

# Minimum-weight primitive polynomials over GF(2), keyed by extension
# degree m. Entry bits encode the polynomial, e.g. 0b10011 = x^4 + x + 1.
PRIMITIVE_POLYS: dict[int, int] = {
    2: 0b111,                # x^2 + x + 1
    3: 0b1011,               # x^3 + x + 1
    4: 0b10011,              # x^4 + x + 1
    5: 0b100101,             # x^5 + x^2 + 1
    6: 0b1000011,            # x^6 + x + 1
    7: 0b10001001,           # x^7 + x^3 + 1
    8: 0b100011101,          # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,         # x^9 + x^4 + 1
    10: 0b10000001001,       # x^10 + x^3 + 1
    11: 0b100000000101,      # x^11 + x^2 + 1
    12: 0b1000001010011,     # x^12 + x^6 + x^4 + x + 1
    13: 0b10000000011011,    # x^13 + x^4 + x^3 + x + 1
    14: 0b100010001000011,   # x^14 + x^10 + x^6 + x + 1
    15: 0b1000000000000011,  # x^15 + x + 1
    16: 0b10001000000001011,  # x^16 + x^12 + x^3 + x + 1
}


@lru_cache(maxsize=None)
def alpha_power_table(m: int) -> tuple[int, ...]:
    """Powers of the primitive element: entry e is alpha^e, e in [0, 2^m-2].

    alpha is the class of x modulo the primitive polynomial, so successive
    powers are computed by shift-and-reduce.
    """
    if m not in PRIMITIVE_POLYS:
        raise InvalidParametersError(
            f"no primitive polynomial tabulated for m={m} (supported: 2..16)"
        )
    poly = PRIMITIVE_POLYS[m]
    order = (1 << m) - 1
    powers = [0] * order
    v = 1
    for e in range(order):
        powers[e] = v
        v <<= 1
        if v & (1 << m):
            v ^= poly
    return tuple(powers)


def alpha_power(m: int, exponent: int) -> int:
    """alpha^exponent in GF(2^m), exponent taken mod 2^m - 1."""
    table = alpha_power_table(m)
    return table[exponent % len(table)]


def element_bits(value: int, m: int) -> np.ndarray:
    """m-bit row for a field element, most significant coefficient first."""
    return np.array([(value >> (m - 1 - j)) & 1 for j in range(m)], dtype=np.uint8)


def multiplicative_order(m: int) -> int:
    """Order of alpha; equals 2^m - 1 iff the tabulated polynomial is primitive."""
    poly = PRIMITIVE_POLYS[m]
    v = 1
    order = 0
    while True:
        v <<= 1
        if v & (1 << m):
            v ^= poly
        order += 1
        if v == 1:
            return order
