"""Empirical frequencies and the scores behind conditions (B), (B') and (PW).

All measures are frequencies in one long window starting at position 0.  Each
score is recomputed on the first half of the window and the difference is
reported as ``stability_delta``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .diophantine import RegularCF
from .reals import ONE, orbit_fixed, parse_real
from .subshifts import (ArnouxRauzyGen, FiniteWordGen, ImageGen, IETGen, IndexSequence, PeriodicGen,
                        RotationSpec, SubshiftGen, SubstitutionGen, _justin_lengths)
from .words import WindowRanker, as_word, count_occurrences

LIKELY_THRESHOLD = 0.05
STABLE_THRESHOLD = 0.01


def _window(gen: SubshiftGen, L: int) -> np.ndarray:
    return np.asarray(gen.window(0, L - 1), dtype=np.uint8)


def freq_estimate(gen: SubshiftGen, w, L: int) -> float:
    w = as_word(w)
    if L < 10 * len(w):
        raise ValueError("need L >= 10 |w|")
    return count_occurrences(w, _window(gen, L)) / (L - len(w) + 1)


def _eta(r: WindowRanker, n: int) -> Tuple[int, float]:
    _, counts, _ = r.unique(n)
    return len(counts), counts.min() / (len(r.x) - n + 1)


def in_supported_family(gen: SubshiftGen) -> bool:
    """Uniquely ergodic families for which a single window measures the frequencies."""
    if isinstance(gen, FiniteWordGen):
        return "derived_from" in gen.meta
    if isinstance(gen, ImageGen):
        return in_supported_family(gen.base)
    if isinstance(gen, IETGen):
        return gen.aperiodic
    return isinstance(gen, (RotationSpec, SubstitutionGen, ArnouxRauzyGen, PeriodicGen))


@dataclass(frozen=True)
class EtaProfile:
    n_values: Tuple[int, ...]
    p_n: Tuple[int, ...]
    eta_hat: Tuple[float, ...]
    score: Tuple[float, ...]
    horizon: int
    limsup_estimate: float
    stability: Tuple[float, ...]
    bprime: Optional[Tuple[float, ...]] = None
    in_family: bool = True

    @property
    def stability_delta(self) -> float:
        return max(self.stability) if self.stability else 0.0

    def verdict(self) -> str:
        if not self.in_family:
            return "inconclusive"
        if self.limsup_estimate >= LIKELY_THRESHOLD and self.stability_delta <= STABLE_THRESHOLD:
            return "likely"
        tail = self.score[len(self.score) // 2:]
        if self.limsup_estimate < LIKELY_THRESHOLD and all(a >= b for a, b in zip(tail, tail[1:])):
            return "unlikely"
        return "inconclusive"

    def summary(self) -> dict:
        return {"B": self.verdict(), "limsup_estimate": self.limsup_estimate,
                "stability_delta": self.stability_delta, "horizon": self.horizon,
                "trailing_window": [self.n_values[len(self.n_values) // 2], self.n_values[-1]],
                "thresholds": {"likely_min_score": LIKELY_THRESHOLD,
                               "max_stability_delta": STABLE_THRESHOLD},
                "in_supported_family": self.in_family}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "p_n", "eta_hat", "n_eta", "bprime", "stability_delta"])
        for i, n in enumerate(self.n_values):
            bp = format(self.bprime[i], ".17g") if self.bprime is not None else ""
            writer.writerow([n, self.p_n[i], format(self.eta_hat[i], ".17g"),
                             format(self.score[i], ".17g"), bp, format(self.stability[i], ".17g")])
        return buf.getvalue()


def eta_profile(gen: SubshiftGen, n_max: int, L: int, n_values: Optional[Sequence[int]] = None,
                with_bprime: bool = False) -> EtaProfile:
    """eta_hat(n) = least frequency of a length-n factor, and the score n * eta_hat(n)."""
    ns = tuple(n_values) if n_values is not None else tuple(range(1, n_max + 1))
    if not ns or min(ns) < 1:
        raise ValueError("lengths must be >= 1")
    if L < 100 * max(ns):
        raise ValueError("need L >= 100 * n_max")
    x = _window(gen, L)
    full, half = WindowRanker(x), WindowRanker(x[: L // 2])
    p, eta, score, stab, bp = [], [], [], [], []
    for n in ns:
        pn, e = _eta(full, n)
        _, e_half = _eta(half, n)
        p.append(pn)
        eta.append(float(e))
        score.append(float(n * e))
        stab.append(float(abs(n * e - n * e_half)))
        if with_bprime:
            bp.append(_bprime(full, n))
    tail = score[len(score) // 2:]
    return EtaProfile(ns, tuple(p), tuple(eta), tuple(score), L, max(tail), tuple(stab),
                      tuple(bp) if with_bprime else None, in_supported_family(gen))


def _bprime(r: WindowRanker, n: int) -> float:
    """min over factors w of the share of positions j in [n-1, L-n] lying inside an occurrence of w."""
    L = len(r.x)
    _, _, inverse = r.unique(n)
    j = np.arange(n - 1, L - n + 1)
    best = 1.0
    for fid in range(int(inverse.max()) + 1):
        occ = (inverse == fid).astype(np.int64)
        cs = np.concatenate(([0], np.cumsum(occ)))
        covered = (cs[j + 1] - cs[j - n + 1]) > 0
        best = min(best, float(covered.mean()))
    return best


def bprime_score(gen: SubshiftGen, n: int, L: int) -> float:
    if L < 100 * n:
        raise ValueError("need L >= 100 n")
    return _bprime(WindowRanker(_window(gen, L)), n)


@dataclass(frozen=True)
class Score:
    value: float
    horizon: int
    stability_delta: float


def pw_score(gen: SubshiftGen, n_max: int, L: int) -> Score:
    """min over factors v with |v| <= n_max of |v| * frequency(v)."""
    prof = eta_profile(gen, n_max, L)
    return Score(min(prof.score), L, prof.stability_delta)


def _recurrence_span(x: np.ndarray, n: int) -> int:
    """Least W such that every length-W window of x contains every length-n factor of x."""
    L = len(x)
    _, _, inverse = WindowRanker(x).unique(n)
    order = np.argsort(inverse, kind="stable")
    ids = inverse[order]
    bounds = np.flatnonzero(np.diff(ids)) + 1
    span = 0
    for pos in np.split(order, bounds):
        gaps = np.diff(pos)
        inner = int(gaps.max()) - 1 + n if len(gaps) else 0
        span = max(span, inner, int(pos[0]) + n, L - int(pos[-1]))
    return span


@dataclass(frozen=True)
class LinRec:
    K_hat: float
    infinite: bool
    span: int
    horizon: int


def lin_rec_constant(gen: SubshiftGen, n: int, L: int, granularity: float = 0.25, cap: float = 64.0) -> LinRec:
    """Smallest K on a 0.25 grid such that windows of length ceil(K n) contain all length-n factors."""
    if L < 1000 * n:
        raise ValueError("need L >= 1000 n")
    span = _recurrence_span(_window(gen, L), n)
    steps = int(round(cap / granularity))
    for i in range(1, steps + 1):
        k = i * granularity
        if math.ceil(k * n) >= span:
            return LinRec(k, False, span, L)
    return LinRec(math.inf, True, span, L)


def sturmian_exact_freqs(cf, n: int) -> List[float]:
    """Sorted gap lengths of the points {-j alpha}, 0 <= j <= n, on the circle."""
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = cf.alpha if isinstance(cf, RegularCF) else parse_real(cf)
    hi, lo = orbit_fixed(alpha.fixed(), -np.arange(n + 1))
    pts = sorted((int(h) << 64) | int(l) for h, l in zip(hi, lo))
    gaps = [b - a for a, b in zip(pts, pts[1:])] + [ONE - pts[-1] + pts[0]]
    return sorted(g / ONE for g in gaps)


# Arnoux-Rauzy bispecial scores ------------------------------------------------------------


def bispecial_lengths(idx: IndexSequence, count: int) -> List[int]:
    """|w_1|, ..., |w_count|."""
    return _justin_lengths(idx.take(count - 1))


@dataclass(frozen=True)
class BispecialScore:
    k: int
    length: int
    score: float
    stability_delta: float


def bispecial_scores(gen: ArnouxRauzyGen, count: int, L: int, shift: int = 1) -> List[BispecialScore]:
    """(|w_k| + shift) * eta_hat(|w_k| + shift) for every k <= count with
    100 (|w_k| + shift) <= L."""
    x = _window(gen, L)
    full, half = WindowRanker(x), WindowRanker(x[: L // 2])
    out = []
    for k, length in enumerate(bispecial_lengths(gen.idx, count), start=1):
        n = length + shift
        if n < 1 or 100 * n > L:
            continue
        _, e = _eta(full, n)
        _, e_half = _eta(half, n)
        out.append(BispecialScore(k, length, float(n * e), float(abs(n * e - n * e_half))))
    return out
