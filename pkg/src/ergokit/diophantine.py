"""Continued fractions, three-gap quantities, and the inhomogeneous constant M(alpha, gamma).

Every closed form here has a brute-force counterpart that scans the integers
directly in exact 128-bit fixed point (see ``reals``).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import mpmath
import numpy as np

from .reals import ONE, PREC, RationalInputError, Real, fixed_norm, looks_irrational, orbit_fixed, parse_real

BLOWUP = 1e8
RESIDUAL_TOL = 1e-14


class CertificateFailure(RuntimeError):
    """A numerical certificate could not be established."""


class TruncationError(CertificateFailure):
    """The truncation bound is too large compared with the result."""


class HypothesisError(CertificateFailure):
    """The hypotheses of the closed formula are not met."""


def _working_prec(K: int) -> int:
    return 256 + 64 * K


# regular continued fractions ---------------------------------------------------------


@dataclass(frozen=True)
class RegularCF:
    """Partial quotients a_1..a_K of {alpha} with p_0..p_K and q_0..q_K.

    p_0 = 0, p_1 = 1, q_0 = 1, q_1 = a_1.  ``rational`` is set when the expansion
    terminated or a quotient exceeded the blow-up bound.
    """

    alpha: Real
    a: Tuple[int, ...]
    p: Tuple[int, ...]
    q: Tuple[int, ...]
    rational: bool = False

    @property
    def depth(self) -> int:
        return len(self.a)

    def error(self, k: int) -> float:
        """|q_k alpha - p_k|, evaluated with enough precision to be exact in double."""
        q, p = self.q[k], self.p[k]
        prec = PREC + 2 * q.bit_length() + 64
        with mpmath.workprec(prec):
            return float(abs(q * self.alpha.frac_mpf(prec) - p))

    def to_json(self) -> dict:
        return {"alpha": self.alpha.label, "a": list(self.a), "p": [str(v) for v in self.p],
                "q": [str(v) for v in self.q], "rational": self.rational}


def _convergents(a: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    p, q = [0], [1]
    p_prev, q_prev = 1, 0
    for ak in a:
        p_prev, p_cur = p[-1], ak * p[-1] + p_prev
        q_prev, q_cur = q[-1], ak * q[-1] + q_prev
        p.append(p_cur)
        q.append(q_cur)
    return tuple(p), tuple(q)


def cf_expand(alpha, K: int) -> RegularCF:
    """First K partial quotients of {alpha} by the floor algorithm."""
    alpha = parse_real(alpha)
    if K < 1:
        raise ValueError("K must be >= 1")
    a: List[int] = []
    rational = False
    if alpha.rational is not None:
        x = alpha.rational - math.floor(alpha.rational)
        while len(a) < K:
            if x == 0:
                rational = True
                break
            inv = 1 / x
            ak = math.floor(inv)
            if ak > BLOWUP:
                rational = True
                break
            a.append(ak)
            x = inv - ak
        rational = rational or x == 0
    else:
        prec = _working_prec(K)
        with mpmath.workprec(prec):
            x = alpha.frac_mpf(prec)
            while len(a) < K:
                if x < RESIDUAL_TOL:
                    rational = True
                    break
                inv = 1 / x
                ak = int(mpmath.floor(inv))
                if ak > BLOWUP:
                    rational = True
                    break
                a.append(ak)
                x = inv - ak
    p, q = _convergents(a)
    return RegularCF(alpha, tuple(a), p, q, rational)


def hartman_h(cf: RegularCF, n: int) -> float:
    """h_n(alpha) = |q_k alpha - p_k| for the k with q_k <= n < q_{k+1}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = max(i for i, qi in enumerate(cf.q) if qi <= n)
    if k == len(cf.q) - 1:
        if cf.rational:
            return cf.error(k)
        raise ValueError(f"expansion too short: n = {n} needs q_(k+1) > n")
    return cf.error(k)


def distances(alpha, q: np.ndarray, offset=None) -> np.ndarray:
    """||q alpha + offset|| for an integer array q, exactly rounded to double."""
    alpha = parse_real(alpha)
    off = parse_real(offset).fixed() if offset is not None else 0
    hi, lo = orbit_fixed(alpha.fixed(), q, off)
    return fixed_norm(hi, lo)


def brute_h_profile(alpha, n_max: int) -> np.ndarray:
    """Array whose entry n-1 is min_{1 <= q <= n} ||q alpha||."""
    if n_max < 1:
        raise ValueError("n must be >= 1")
    d = distances(alpha, np.arange(1, n_max + 1))
    return np.minimum.accumulate(d)


def brute_h(alpha, n: int) -> float:
    return float(brute_h_profile(alpha, n)[-1])


def h_profile_rows(cf: RegularCF, n_values: Sequence[int]) -> List[Tuple[int, float, float]]:
    rows = []
    for n in n_values:
        h = hartman_h(cf, n)
        rows.append((n, h, n * h))
    return rows


def circle_h(alpha, beta, n: int) -> Tuple[float, float]:
    """(h_n(alpha, beta), h~_n(alpha, beta)).

    h_n is the minimum of ||q alpha + r beta|| over |q| <= n, r in {0, 1}, (q, r) != (0, 0);
    h~_n restricts to r = 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = np.arange(-n, n + 1)
    with_beta = float(distances(alpha, q, beta).min())
    qn = q[q != 0]
    without = float(distances(alpha, qn).min())
    return min(with_beta, without), with_beta


def multi_h(alpha, cuts: Sequence, n: int) -> float:
    """Minimum of ||q alpha + b_k - b_l|| over |q| <= n and cut indices k, l (b_0 = 0),
    excluding q = 0 with k = l."""
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = parse_real(alpha)
    if not looks_irrational(alpha):
        raise RationalInputError(f"{alpha.label} looks rational")
    pts = [0] + [parse_real(c).fixed() for c in cuts]
    q = np.arange(-n, n + 1)
    best = math.inf
    for k, bk in enumerate(pts):
        for l, bl in enumerate(pts):
            qq = q[q != 0] if k == l else q
            hi, lo = orbit_fixed(alpha.fixed(), qq, (bk - bl) % ONE)
            best = min(best, float(fixed_norm(hi, lo).min()))
    return best


# negative continued fractions and alpha-expansions ---------------------------------------


@dataclass(frozen=True)
class NegativeCF:
    """alpha = 1/(a_1 - 1/(a_2 - ...)) with convergents and the tails used by the
    inhomogeneous formula.

    ``p``, ``q`` hold p_0..p_K, q_0..q_K; ``D[i]`` = q_i alpha - p_i = alpha_0...alpha_i;
    ``tails[i]`` = alpha_i; ``bars[i-1]`` = [0; a_i, ..., a_1]^- as an exact fraction.
    """

    alpha: Real
    a: Tuple[int, ...]
    p: Tuple[int, ...]
    q: Tuple[int, ...]
    D: Tuple[mpmath.mpf, ...]
    tails: Tuple[mpmath.mpf, ...]
    bars: Tuple[Fraction, ...]
    prec: int

    @property
    def depth(self) -> int:
        return len(self.a)

    def bar(self, i: int) -> Fraction:
        return self.bars[i - 1] if i >= 1 else Fraction(0)

    def value(self) -> Fraction:
        """[0; a_1, ..., a_K]^- evaluated bottom-up."""
        x = Fraction(0)
        for ak in reversed(self.a):
            x = 1 / (ak - x)
        return x

    def to_json(self) -> dict:
        return {"alpha": self.alpha.label, "a": list(self.a), "p": [str(v) for v in self.p],
                "q": [str(v) for v in self.q], "D": [float(d) for d in self.D]}


def negative_cf(alpha, K: int) -> NegativeCF:
    """First K digits of the negative continued fraction of {alpha}."""
    alpha = parse_real(alpha)
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 < float(alpha) < 1:
        raise ValueError("alpha must lie in (0,1)")
    if not looks_irrational(alpha):
        raise RationalInputError(f"{alpha.label} looks rational")
    prec = _working_prec(K)
    a: List[int] = []
    tails: List[mpmath.mpf] = []
    with mpmath.workprec(prec):
        x = alpha.frac_mpf(prec)
        tails.append(x)
        for _ in range(K):
            if x < RESIDUAL_TOL:
                raise RationalInputError(f"{alpha.label}: negative expansion terminates")
            inv = 1 / x
            ak = int(mpmath.ceil(inv))
            a.append(ak)
            x = ak - inv
            tails.append(x)
        D = []
        prod = mpmath.mpf(1)
        for t in tails:
            prod *= t
            D.append(prod)
    p, q = [0], [1]
    p_prev, q_prev = -1, 0
    for ak in a:
        p_prev, p_next = p[-1], ak * p[-1] - p_prev
        q_prev, q_next = q[-1], ak * q[-1] - q_prev
        p.append(p_next)
        q.append(q_next)
    bars = []
    x = Fraction(0)
    for ak in a:
        x = 1 / (ak - x)
        bars.append(x)
    return NegativeCF(alpha, tuple(a), tuple(p), tuple(q), tuple(D), tuple(tails), tuple(bars), prec)


@dataclass(frozen=True)
class AlphaExpansion:
    """Digits b_1..b_K of {gamma} = sum b_i D_{i-1} and residuals gamma_0..gamma_K."""

    gamma: Real
    b: Tuple[int, ...]
    residuals: Tuple[mpmath.mpf, ...]
    reconstruction_error: float

    def to_json(self) -> dict:
        return {"gamma": self.gamma.label, "b": list(self.b),
                "residuals": [float(r) for r in self.residuals],
                "reconstruction_error": self.reconstruction_error}


def alpha_expansion(ncf: NegativeCF, gamma, K: int) -> AlphaExpansion:
    gamma = parse_real(gamma)
    if not 0 <= float(gamma) < 1:
        raise ValueError("gamma must lie in [0,1)")
    if K > ncf.depth:
        raise ValueError("expansion deeper than the negative continued fraction")
    prec = ncf.prec
    b: List[int] = []
    with mpmath.workprec(prec):
        g = gamma.frac_mpf(prec)
        res = [g]
        for n in range(K):
            r = g / ncf.tails[n]
            bn = int(mpmath.floor(r))
            b.append(bn)
            g = r - bn
            res.append(g)
        total = mpmath.fsum(bi * ncf.D[i] for i, bi in enumerate(b))
        err = float(abs(res[0] - total))
    return AlphaExpansion(gamma, tuple(b), tuple(res), err)


@dataclass(frozen=True)
class PinnerResult:
    value: float
    k_argmin: int
    s_argmin: int
    rows: Tuple[Tuple[int, float, float, float, float, float], ...]
    certificate: float
    window: Tuple[int, int]
    hypotheses: Dict[str, bool] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "s1", "s2", "s3", "s4", "min_s"])
        for row in self.rows:
            writer.writerow([row[0]] + [format(v, ".17g") for v in row[1:]])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"value": self.value, "k_argmin": self.k_argmin, "s_argmin": self.s_argmin,
                "certificate": self.certificate, "window": list(self.window),
                "hypotheses": self.hypotheses}


TAIL_RUN = 8


def pinner_hypotheses(ncf: NegativeCF, exp: AlphaExpansion, scan: int = 10 ** 4) -> Dict[str, bool]:
    """Heuristic checks: gamma is off the lattice Z alpha + Z, and the digits do not end
    in a run b_i = a_i - 1."""
    J = len(exp.b)
    terminated = any(r < RESIDUAL_TOL for r in exp.residuals)
    q = np.arange(-scan, scan + 1)
    near = float(distances(ncf.alpha, q, Real.lattice(exp.gamma, -1)).min()) < 1e-12
    run = J >= TAIL_RUN and all(exp.b[i] == ncf.a[i] - 1 for i in range(J - TAIL_RUN, J))
    return {"off_lattice": not (terminated or near), "no_maximal_tail": not run}


def pinner_M(ncf: NegativeCF, exp: AlphaExpansion, K: int, strict: bool = True) -> PinnerResult:
    """min over k in [K/2, K] of min(s_1(k), .., s_4(k)).

    d_k^+ is summed up to the last computed digit J; its omitted tail equals
    2 gamma_J D_{J-1} - D_{J-1} + D_J and is bounded by (D_{J-1} + D_J) / D_{k-1}.
    """
    J = min(ncf.depth, len(exp.b))
    if not 1 <= K < J:
        raise ValueError(f"need 1 <= K < {J} computed digits")
    hyp = pinner_hypotheses(ncf, exp)
    if strict and not all(hyp.values()):
        raise HypothesisError(f"hypotheses not met: {hyp}")
    prec = ncf.prec
    lo_k = max(1, -(-K // 2))
    rows = []
    cert = 0.0
    with mpmath.workprec(prec):
        D = ncf.D
        t = [None] + [2 * exp.b[j - 1] - ncf.a[j - 1] + 2 for j in range(1, J + 1)]
        tail_bound = D[J - 1] + D[J]
        # running sums: sum_{j<=k} t_j q_{j-1}  and  sum_{j>k}^{J} t_j D_{j-1}
        head = [mpmath.mpf(0)] * (J + 1)
        for j in range(1, J + 1):
            head[j] = head[j - 1] + t[j] * ncf.q[j - 1]
        back = [mpmath.mpf(0)] * (J + 2)
        for j in range(J, 0, -1):
            back[j] = back[j + 1] + t[j] * D[j - 1]
        for k in range(lo_k, K + 1):
            dm = head[k] / ncf.q[k]
            dp = back[k + 1] / D[k - 1]
            ddp = tail_bound / D[k - 1]
            ab = mpmath.mpf(ncf.bar(k).numerator) / ncf.bar(k).denominator
            ak = ncf.tails[k]
            f = ncf.q[k] * D[k - 1] / 4
            left = (1 - ab + dm, 1 + ab + dm, abs(1 - ab - dm), 1 + ab - dm)
            s = (left[0] * (1 - ak + dp) * f,
                 left[1] * (1 + ak + dp) * f,
                 left[2] * abs(1 - ak - dp) * f,
                 left[3] * (1 + ak + dp) * f)
            cert = max(cert, float(max(abs(x) for x in left) * f * ddp))
            vals = [float(x) for x in s]
            rows.append((k, *vals, min(vals)))
    best = min(rows, key=lambda r: r[5])
    value = best[5]
    if cert > 1e-6 * value:
        raise TruncationError(f"truncation bound {cert:.3g} exceeds 1e-6 of the result {value:.3g}")
    s_arg = 1 + int(np.argmin(best[1:5]))
    return PinnerResult(value, best[0], s_arg, tuple(rows), cert, (lo_k, K), hyp)


@dataclass(frozen=True)
class BruteMResult:
    value: float
    n_argmin: int
    window: Tuple[int, int]

    def to_json(self) -> dict:
        return {"value": self.value, "n_argmin": self.n_argmin, "window": list(self.window)}


def brute_M(alpha, gamma, N: int) -> BruteMResult:
    """min of |n| * ||n alpha - gamma|| over N/2 <= |n| <= N."""
    if N < 1000:
        raise ValueError("N must be >= 1000")
    alpha, gamma = parse_real(alpha), parse_real(gamma)
    lo = -(-N // 2)
    n = np.arange(lo, N + 1)
    n = np.concatenate((n, -n))
    hi_, lo_ = orbit_fixed(alpha.fixed(), n, (-gamma.fixed()) % ONE)
    vals = np.abs(n) * fixed_norm(hi_, lo_)
    i = int(np.argmin(vals))
    return BruteMResult(float(vals[i]), int(n[i]), (lo, N))


def pinner_for(alpha, gamma, K: int, strict: bool = True) -> PinnerResult:
    """pinner_M with as many extra digits as the truncation certificate needs (K up to 4K)."""
    alpha, gamma = parse_real(alpha), parse_real(gamma)
    extra = max(K, 8)
    while True:
        ncf = negative_cf(alpha, K + extra)
        exp = alpha_expansion(ncf, gamma, K + extra)
        try:
            return pinner_M(ncf, exp, K, strict)
        except TruncationError:
            if extra >= 4 * K:
                raise
            extra *= 2
