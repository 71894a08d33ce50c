"""Spectral diagnostics for discrete Schroedinger operators (Hu)(n) = u(n+1) + u(n-1) + V(n) u(n).

Three routes: finite-section eigenvalues (Sturm bisection), trace bands of periodic
approximants, and the set where the sampled Lyapunov exponent is small.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cocycle import _embed_map, _log_norms, schrodinger_rule
from .subshifts import SubshiftGen
from .words import as_word

EIG_TOL = 1e-10
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class EnergyGrid:
    e_min: float
    e_max: float
    points: int

    def __post_init__(self):
        if self.points < 2 or not self.e_max > self.e_min:
            raise ValueError("need points >= 2 and e_max > e_min")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.points)

    @property
    def spacing(self) -> float:
        return (self.e_max - self.e_min) / (self.points - 1)

    def to_json(self) -> dict:
        return {"e_min": self.e_min, "e_max": self.e_max, "points": self.points}


def _merge(intervals) -> Tuple[Tuple[float, float], ...]:
    out: List[List[float]] = []
    for lo, hi in sorted((float(a), float(b)) for a, b in intervals):
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ValueError(f"malformed interval [{lo}, {hi}]")
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class BandSet:
    intervals: Tuple[Tuple[float, float], ...]

    @classmethod
    def of(cls, intervals) -> "BandSet":
        return cls(_merge(intervals))

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def measure(self) -> float:
        return math.fsum(hi - lo for lo, hi in self.intervals)

    def contains(self, e: float, slack: float = 0.0) -> bool:
        return any(lo - slack <= e <= hi + slack for lo, hi in self.intervals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["band_lo", "band_hi"])
        for lo, hi in self.intervals:
            writer.writerow([format(lo, ".17g"), format(hi, ".17g")])
        return buf.getvalue()


def measure_of_union(bands) -> float:
    """Total length after merging overlaps."""
    if isinstance(bands, BandSet):
        return BandSet.of(bands.intervals).measure
    return BandSet.of(bands).measure


# finite sections ----------------------------------------------------------------------


def sturm_count(potential: Sequence[float], t) -> np.ndarray:
    """Number of eigenvalues below t of the Dirichlet section with diagonal ``potential``."""
    v = np.asarray(potential, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    count = np.zeros(t.shape, dtype=np.int64)
    d = np.ones(t.shape)
    for k in range(len(v)):
        d = (v[k] - t) - (1.0 / d if k else 0.0)
        d = np.where(d == 0.0, -1e-300, d)
        count += d < 0
    return count


def tridiag_eigs(potential: Sequence[float], L: Optional[int] = None) -> np.ndarray:
    """All eigenvalues of the L x L section (zero boundary), by Sturm bisection."""
    v = np.asarray(potential, dtype=float)
    if L is not None and L != len(v):
        raise ValueError("L must equal the length of the potential")
    if len(v) < 1:
        raise ValueError("need at least one site")
    lo = np.full(len(v), v.min() - 2.0)
    hi = np.full(len(v), v.max() + 2.0)
    k = np.arange(len(v))
    while np.max(hi - lo) > EIG_TOL:
        mid = 0.5 * (lo + hi)
        below = sturm_count(v, mid) > k  # the (k+1)-th eigenvalue lies below mid
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
        if np.all(hi - lo <= np.spacing(np.abs(mid)) * 4):
            break
    return 0.5 * (lo + hi)


# Lyapunov scans ------------------------------------------------------------------------


def gamma_scan(gen: SubshiftGen, embed, grid: EnergyGrid, n: int, samples: int = 1, seed: int = 0,
               threads: int = 1) -> List[Tuple[float, float]]:
    """(E, mean over samples of (1/n) log ||M^E(n, omega)||) for every grid energy."""
    energies = grid.values
    rules = [schrodinger_rule(float(e), embed) for e in energies]
    vals = _log_norms(rules, gen, [n], samples, seed, threads=threads)[:, :, 0] / n
    return [(float(e), float(g)) for e, g in zip(energies, vals.mean(axis=1))]


@dataclass(frozen=True)
class SpectrumEstimate:
    bands: BandSet
    eps: float
    n: int
    cells: int
    grid: EnergyGrid

    @property
    def measure(self) -> float:
        return self.bands.measure

    def summary(self) -> dict:
        return {"measure": self.measure, "eps": self.eps, "n": self.n, "cells": self.cells,
                "grid": self.grid.to_json()}


def default_eps(n: int) -> float:
    return 3.0 / math.sqrt(n)


def spectrum_estimate(gen: SubshiftGen, embed, grid: EnergyGrid, n: int, eps: Optional[float] = None,
                      samples: int = 1, seed: int = 0, threads: int = 1) -> SpectrumEstimate:
    """Union of the grid cells whose energy has gamma_hat < eps."""
    eps = default_eps(n) if eps is None else float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    scan = gamma_scan(gen, embed, grid, n, samples, seed, threads)
    e = grid.values
    # cell i is [edges[i], edges[i+1]]; neighbours share their endpoint exactly
    edges = np.concatenate(([grid.e_min], (e[:-1] + e[1:]) / 2, [grid.e_max]))
    cells = [(edges[i], edges[i + 1]) for i, (_, g) in enumerate(scan) if g < eps]
    return SpectrumEstimate(BandSet.of(cells), eps, n, len(cells), grid)


# periodic approximants ---------------------------------------------------------------


def trace_poly(word, embed, energies) -> np.ndarray:
    """Trace of M^E(q) = M^E(V(w_q)) ... M^E(V(w_1)) for each energy."""
    emap = _embed_map(embed)
    pot = [emap[s] for s in as_word(word)]
    e = np.asarray(energies, dtype=float)
    # (u1, u0) columns: track P applied to both basis vectors
    a, b = np.ones_like(e), np.zeros_like(e)   # first column
    c, d = np.zeros_like(e), np.ones_like(e)   # second column
    for v in pot:
        a, b = (e - v) * a - b, a
        c, d = (e - v) * c - d, c
    return a + d


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _peak(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section search for the maximum of a unimodal f on [lo, hi]."""
    g = (math.sqrt(5) - 1) / 2
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def trace_bands(periodic_word, embed, grid: EnergyGrid, max_refine: int = 4) -> BandSet:
    """{E in [e_min, e_max] : |tr M^E(q)| <= 2} for the periodic potential repeating ``periodic_word``.

    Each band holds one zero of the trace; zeros are bracketed on the grid, gaps are found
    by maximizing |tr| between consecutive zeros, and band edges are refined by bisection.
    """
    word = as_word(periodic_word)
    q = len(word)
    if q < 1:
        raise ValueError("need a non-empty word")
    emap = _embed_map(embed)
    pot = [emap[s] for s in word]
    outer_lo, outer_hi = min(pot) - 2.5, max(pot) + 2.5
    tr = lambda e: float(trace_poly(word, emap, [e])[0])
    g = lambda e: abs(tr(e)) - 2.0

    lo_scan, hi_scan = max(grid.e_min, outer_lo), min(grid.e_max, outer_hi)
    if lo_scan >= hi_scan:
        return BandSet(())
    points = max(grid.points, 2)
    for _ in range(max_refine + 1):
        es = np.linspace(lo_scan, hi_scan, points)
        t = trace_poly(word, emap, es)
        zeros = [float(e) for e in es[t == 0]]
        for i in np.flatnonzero(np.sign(t[:-1]) * np.sign(t[1:]) < 0):
            zeros.append(_bisect(tr, es[i], es[i + 1], 1e-14))
        zeros = sorted(zeros)
        covers_all = lo_scan == outer_lo and hi_scan == outer_hi
        if not covers_all or len(zeros) >= q:
            break
        points *= 4
    if len(zeros) > q:
        raise ValueError(f"found {len(zeros)} bands for period {q}")
    # split consecutive zeros into bands at open gaps
    groups: List[List[float]] = []
    splits: List[float] = []
    for z in zeros:
        if groups:
            m = _peak(lambda e: abs(tr(e)), groups[-1][-1], z)
            if abs(tr(m)) > 2.0:
                groups.append([z])
                splits.append(m)
                continue
            groups[-1].append(z)
        else:
            groups.append([z])
    bands = []
    for i, grp in enumerate(groups):
        left = splits[i - 1] if i > 0 else outer_lo
        right = splits[i] if i < len(splits) else outer_hi
        lo = _bisect(g, left, grp[0], EDGE_TOL / 4)
        hi = _bisect(g, grp[-1], right, EDGE_TOL / 4)
        lo, hi = max(lo, grid.e_min), min(hi, grid.e_max)
        if lo < hi:
            bands.append((float(lo), float(hi)))
    if len(bands) > q:
        raise ValueError(f"found {len(bands)} bands for period {q}")
    return BandSet(tuple(bands))


def periodic_band_edges(periodic_word, embed) -> np.ndarray:
    """Sorted eigenvalues of the periodic and antiperiodic q x q problems, i.e. the
    energies where tr M^E(q) = +2 or -2 (dense eigensolver)."""
    emap = _embed_map(embed)
    pot = [emap[s] for s in as_word(periodic_word)]
    q = len(pot)
    out = []
    for sign in (1.0, -1.0):
        h = np.diag(np.array(pot, dtype=float))
        for i in range(q - 1):
            h[i, i + 1] = h[i + 1, i] = 1.0
        if q == 1:
            h[0, 0] += 2.0 * sign
        else:
            h[0, q - 1] += sign
            h[q - 1, 0] += sign
        out.extend(np.linalg.eigvalsh(h))
    return np.sort(np.array(out))
