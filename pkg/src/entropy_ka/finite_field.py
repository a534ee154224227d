"""GF(2^8) arithmetic for byte-wise Shamir sharing.

Elements are plain ints in [0, 255]. Addition is XOR. Multiplication is
reduced by x^8 + x^4 + x^3 + x + 1 (0x11B) and implemented with log/antilog
tables built from the generator 0x03.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

REDUCTION_POLY = 0x11B
GENERATOR = 0x03
ORDER = 256

FieldElement = int
FieldPoly = Sequence[FieldElement]


def _xtime_mul(a: int, b: int) -> int:
    # shift-and-add, used only to build the tables
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= REDUCTION_POLY
        b >>= 1
    return r


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 510
    log = [0] * ORDER
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = _xtime_mul(x, GENERATOR)
    # doubled so exp[log a + log b] needs no modulo
    for i in range(255, 510):
        exp[i] = exp[i - 255]
    return exp, log


EXP, LOG = _build_tables()

MUL_TABLE = np.zeros((ORDER, ORDER), dtype=np.uint8)
for _a in range(1, ORDER):
    for _b in range(1, ORDER):
        MUL_TABLE[_a, _b] = EXP[LOG[_a] + LOG[_b]]
MUL_TABLE.setflags(write=False)
del _a, _b


class FieldError(ValueError):
    """Raised on a field-domain violation (zero inverse, bad share index)."""


def _check(a: int) -> None:
    if not 0 <= a < ORDER:
        raise FieldError(f"not a GF(2^8) element: {a!r}")


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a ^ b


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    """Multiply two field elements."""
    _check(a)
    _check(b)
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: FieldElement) -> FieldElement:
    """Multiplicative inverse; raises FieldError for zero."""
    _check(a)
    if a == 0:
        raise FieldError("zero has no multiplicative inverse")
    return EXP[255 - LOG[a]]


def gf_div(a: FieldElement, b: FieldElement) -> FieldElement:
    return gf_mul(a, gf_inv(b))


def gf_pow(a: FieldElement, e: int) -> FieldElement:
    _check(a)
    if e == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * e) % 255]


def poly_eval(f: FieldPoly, x: FieldElement) -> FieldElement:
    """Evaluate ``f`` at ``x`` by Horner's rule; ``f[k]`` is the x^k coefficient."""
    acc = 0
    for coeff in reversed(f):
        acc = gf_mul(acc, x) ^ coeff
    return acc


def lagrange_basis(xs: Sequence[FieldElement], x: FieldElement) -> list[FieldElement]:
    """Basis values L_k(x) for distinct evaluation points ``xs``."""
    if len(set(xs)) != len(xs):
        raise FieldError(f"duplicate evaluation points in {list(xs)}")
    out = []
    for k, xk in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j != k:
                # subtraction is XOR
                num = gf_mul(num, x ^ xj)
                den = gf_mul(den, xk ^ xj)
        out.append(gf_div(num, den))
    return out


def lagrange_coefficients_at_zero(xs: Sequence[FieldElement]) -> list[FieldElement]:
    """L_k(0) for share indices ``xs``; zero is reserved for the secret."""
    if any(x == 0 for x in xs):
        raise FieldError("evaluation point 0 is reserved for the secret")
    return lagrange_basis(xs, 0)


def lagrange_at_zero(points: Iterable[tuple[FieldElement, FieldElement]]) -> FieldElement:
    """Interpolate through ``points`` and return the value at x = 0.

    Raises:
        FieldError: duplicate x, an x equal to zero, or no points.
    """
    pts = list(points)
    if not pts:
        raise FieldError("need at least one point")
    acc = 0
    for (_, y), lk in zip(pts, lagrange_coefficients_at_zero([x for x, _ in pts])):
        acc ^= gf_mul(y, lk)
    return acc


def lagrange_eval(points: Sequence[tuple[FieldElement, FieldElement]], x: FieldElement) -> FieldElement:
    """Value at ``x`` of the polynomial interpolating ``points``."""
    acc = 0
    for (_, y), lk in zip(points, lagrange_basis([p[0] for p in points], x)):
        acc ^= gf_mul(y, lk)
    return acc
