"""Reals known to arbitrary precision, and exact fixed-point circle arithmetic.

Points of the circle R/Z are stored as 128-bit integers ``floor(x * 2**128)``.
Orbit points ``n*alpha + theta`` are formed by integer arithmetic, so two orbit
points built from the same inputs coincide exactly when they should.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

import mpmath
import numpy as np

PREC = 128
ONE = 1 << PREC
_MASK32 = (1 << 32) - 1

# float64 cannot resolve points closer than this to a cut
BOUNDARY_BAND = 1e-12


class RationalInputError(ValueError):
    """Raised when an irrational number was required but the input looks rational."""


def _convergent_bound(prefix: Sequence[int], period: Sequence[int], min_q: int) -> Fraction:
    """Convergent p/q of the regular CF [0; prefix, period, period, ...] with q > min_q."""
    p0, p1, q0, q1 = 1, 0, 0, 1  # p_{-1}, p_0 / q_{-1}, q_0 seeds for [0; ...]
    i = 0
    while True:
        if i < len(prefix):
            a = prefix[i]
        elif period:
            a = period[(i - len(prefix)) % len(period)]
        else:
            return Fraction(p1, q1)
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        i += 1
        if q1 > min_q and i > len(prefix):
            return Fraction(p1, q1)


class Real:
    """A real number that can be evaluated to any binary precision.

    The number is described by one of: an exact rational, regular continued
    fraction data (prefix plus optional period), or an mpmath expression.
    """

    def __init__(self, evaluate: Callable[[int], mpmath.mpf], label: str,
                 rational: Optional[Fraction] = None,
                 cf: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None,
                 fixed: Optional[int] = None):
        self._evaluate = evaluate
        self.label = label
        self.rational = rational
        self.cf = cf
        self._fixed = fixed

    def __repr__(self) -> str:
        return f"Real({self.label})"

    def __float__(self) -> float:
        if self.rational is not None:
            return float(self.rational)
        return float(self.mpf(80))

    def mpf(self, prec: int) -> mpmath.mpf:
        with mpmath.workprec(prec):
            return +self._evaluate(prec)

    def frac_mpf(self, prec: int) -> mpmath.mpf:
        with mpmath.workprec(prec):
            x = self.mpf(prec)
            return x - mpmath.floor(x)

    def fixed(self) -> int:
        """floor({x} * 2**PREC)."""
        if self._fixed is None:
            if self.rational is not None:
                r = self.rational - math.floor(self.rational)
                self._fixed = (r.numerator << PREC) // r.denominator
            else:
                with mpmath.workprec(PREC + 64):
                    x = self.frac_mpf(PREC + 64)
                    self._fixed = int(mpmath.floor(x * ONE)) % ONE
        return self._fixed

    # constructors

    @classmethod
    def from_fraction(cls, r) -> "Real":
        r = Fraction(r)
        return cls(lambda prec: mpmath.mpf(r.numerator) / r.denominator, str(r), rational=r)

    @classmethod
    def from_float(cls, x: float) -> "Real":
        r = Fraction(x)
        return cls(lambda prec: mpmath.mpf(x), repr(x), rational=r)

    @classmethod
    def from_cf(cls, prefix: Sequence[int], period: Sequence[int] = (), label: str = "") -> "Real":
        """Number in (0,1) with regular partial quotients ``prefix`` then ``period`` repeated."""
        prefix, period = tuple(int(a) for a in prefix), tuple(int(a) for a in period)
        if any(a < 1 for a in prefix + period):
            raise ValueError("partial quotients must be positive")
        if not prefix and not period:
            raise ValueError("empty continued fraction")
        rational = None if period else _convergent_bound(prefix, period, 0)

        def evaluate(prec: int) -> mpmath.mpf:
            r = _convergent_bound(prefix, period, 1 << (prec // 2 + 8))
            return mpmath.mpf(r.numerator) / r.denominator

        name = label or "cf:" + ",".join(map(str, prefix)) + (";" + ",".join(map(str, period)) if period else "")
        return cls(evaluate, name, rational=rational, cf=(prefix, period))

    @classmethod
    def from_mpmath(cls, func: Callable[[], mpmath.mpf], label: str) -> "Real":
        return cls(lambda prec: func(), label)

    @classmethod
    def lattice(cls, alpha: "Real", k: int, offset: Optional["Real"] = None) -> "Real":
        """The point {k*alpha + offset}, with fixed-point value consistent with orbit arithmetic."""
        off_fx = offset.fixed() if offset is not None else 0
        fx = (k * alpha.fixed() + off_fx) % ONE

        def evaluate(prec: int) -> mpmath.mpf:
            x = k * alpha.mpf(prec) + (offset.mpf(prec) if offset is not None else 0)
            return x - mpmath.floor(x)

        name = f"{{{k}*{alpha.label}" + (f"+{offset.label}}}" if offset is not None else "}")
        rational = None
        if alpha.rational is not None and (offset is None or offset.rational is not None):
            r = k * alpha.rational + (offset.rational if offset is not None else 0)
            rational = r - math.floor(r)
        return cls(evaluate, name, rational=rational, fixed=fx)

    @classmethod
    def golden(cls) -> "Real":
        return cls.from_cf((), (1,), label="golden")

    @classmethod
    def silver(cls) -> "Real":
        return cls.from_cf((), (2,), label="silver")


NAMED = {
    "golden": Real.golden,
    "silver": Real.silver,
    "pi_inv": lambda: Real.from_mpmath(lambda: 1 / mpmath.pi, "1/pi"),
}


def parse_real(text) -> Real:
    """Parse a number: a name, ``cf:a1,a2,...[;period]``, ``p/q``, or a decimal literal.

    A ``cf:`` list without ``;`` is read as the period of a purely periodic expansion.
    """
    if isinstance(text, Real):
        return text
    if isinstance(text, Fraction):
        return Real.from_fraction(text)
    if isinstance(text, (int, float)):
        return Real.from_float(float(text))
    s = str(text).strip()
    if s in NAMED:
        return NAMED[s]()
    if s.startswith("cf:"):
        body = s[3:]
        if ";" in body:
            pre, per = body.split(";", 1)
        else:
            pre, per = "", body
        ints = lambda part: tuple(int(t) for t in part.split(",") if t.strip())
        try:
            return Real.from_cf(ints(pre), ints(per), label=s)
        except ValueError as exc:
            raise ValueError(f"bad continued fraction {s!r}: {exc}") from None
    if "/" in s:
        try:
            return Real.from_fraction(Fraction(s))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse number {s!r}") from None
    try:
        return Real.from_fraction(Fraction(s))
    except ValueError:
        raise ValueError(f"cannot parse number {s!r}") from None


def looks_irrational(x: Real, depth: int = 25, blowup: float = 1e8) -> bool:
    """Heuristic: the regular CF reaches ``depth`` digits with no quotient above ``blowup``."""
    if x.cf is not None:
        prefix, period = x.cf
        if not period:
            return False
        digits = [a for a in prefix] + [period[i % len(period)] for i in range(depth)]
        return max(digits[:depth]) <= blowup
    if x.rational is not None:
        return False
    prec = 64 * depth + 256
    with mpmath.workprec(prec):
        y = x.frac_mpf(prec)
        for _ in range(depth):
            if y < 1e-14:
                return False
            inv = 1 / y
            a = mpmath.floor(inv)
            if a > blowup:
                return False
            y = inv - a
    return True


# vectorised fixed-point orbit arithmetic ---------------------------------------------


def _limbs(v: int) -> Tuple[int, int, int, int]:
    return ((v >> 96) & _MASK32, (v >> 64) & _MASK32, (v >> 32) & _MASK32, v & _MASK32)


def _mul_limbs(m: np.ndarray, v: int):
    """Limbs of (m * v) mod 2**128 for 0 <= m < 2**30, most significant first."""
    a0, a1, a2, a3 = _limbs(v)
    t = m * a3
    r3 = t & _MASK32
    t = m * a2 + (t >> 32)
    r2 = t & _MASK32
    t = m * a1 + (t >> 32)
    r1 = t & _MASK32
    t = m * a0 + (t >> 32)
    r0 = t & _MASK32
    return [r0, r1, r2, r3]


def _neg_limbs(r):
    out = [(~x) & _MASK32 for x in r]
    carry = np.ones_like(out[3])
    for i in (3, 2, 1, 0):
        t = out[i] + carry
        out[i] = t & _MASK32
        carry = t >> 32
    return out


def _add_const_limbs(r, v: int):
    c = _limbs(v)
    out = list(r)
    carry = np.zeros_like(out[3])
    for i in (3, 2, 1, 0):
        t = out[i] + c[i] + carry
        out[i] = t & _MASK32
        carry = t >> 32
    return out


def orbit_fixed(alpha_fx: int, n: np.ndarray, offset_fx: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """(n*alpha + offset) mod 1 as (hi, lo) uint64 halves of the 128-bit fraction."""
    n = np.asarray(n, dtype=np.int64)
    if n.size and int(np.abs(n).max()) >= 1 << 30:
        raise ValueError("orbit index out of range (|n| < 2**30)")
    m = np.abs(n)
    r = _mul_limbs(m, alpha_fx)
    neg = n < 0
    if neg.any():
        rn = _neg_limbs(r)
        r = [np.where(neg, b, a) for a, b in zip(r, rn)]
    if offset_fx:
        r = _add_const_limbs(r, offset_fx)
    hi = (r[0].astype(np.uint64) << np.uint64(32)) | r[1].astype(np.uint64)
    lo = (r[2].astype(np.uint64) << np.uint64(32)) | r[3].astype(np.uint64)
    return hi, lo


def split_fixed(v: int) -> Tuple[np.uint64, np.uint64]:
    return np.uint64(v >> 64), np.uint64(v & ((1 << 64) - 1))


def fixed_to_float(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    return hi.astype(np.float64) * 2.0 ** -64 + lo.astype(np.float64) * 2.0 ** -128


def fixed_ge(hi, lo, c: int) -> np.ndarray:
    """x >= c for fixed-point arrays x = (hi, lo) and an integer constant c."""
    chi, clo = split_fixed(c)
    return (hi > chi) | ((hi == chi) & (lo >= clo))


def fixed_eq(hi, lo, c: int) -> np.ndarray:
    chi, clo = split_fixed(c)
    return (hi == chi) & (lo == clo)


def fixed_norm(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """Distance to the nearest integer, as float64, computed from the exact fraction."""
    upper = hi >= np.uint64(1 << 63)
    nlo = (~lo) + np.uint64(1)
    nhi = (~hi) + (lo == 0).astype(np.uint64)
    h = np.where(upper, nhi, hi)
    l = np.where(upper, nlo, lo)
    return fixed_to_float(h, l)


def circle_distance(x: np.ndarray, c: float) -> np.ndarray:
    d = np.abs(x - c)
    return np.minimum(d, 1.0 - d)
