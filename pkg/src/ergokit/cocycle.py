"""SL(2,R) cocycles over subshifts: products, Lyapunov estimates and Avalanche defects.

Products are kept in singular-value form.  After k steps the product P satisfies
P V = Q diag(e^L, e^-L) with rotations Q, V and L = log ||P|| >= 0, so the
determinant is one by construction and no entry ever overflows.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .subshifts import SubshiftGen
from .words import as_word, occurrence_positions

DET_TOL = 1e-9
REPROJECT_EVERY = 1000
MAX_SUP_RADIUS = 2


def as_sl2(m, tol: float = DET_TOL) -> np.ndarray:
    """Validate a 2x2 real matrix with unit determinant."""
    a = np.asarray(m, dtype=float)
    if a.shape != (2, 2) or not np.all(np.isfinite(a)):
        raise ValueError("expected a finite 2x2 matrix")
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det - 1.0) > tol:
        raise ValueError(f"determinant {det!r} is not 1")
    return a


def sl2_inverse(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])


def sl2_norm(m) -> float:
    """Operator 2-norm of an SL(2,R) matrix: s^2 = (F + sqrt(F^2 - 4)) / 2 with F the squared
    Frobenius norm.  F is invariant under inversion, so norm(M) == norm(M^-1) exactly."""
    a = np.asarray(m, dtype=float)
    if a.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if a[0, 1] == 0 and a[1, 0] == 0:
        if abs(a[0, 0] * a[1, 1] - 1.0) > DET_TOL:
            raise ValueError("not an SL(2,R) matrix")
        return float(max(abs(a[0, 0]), abs(a[1, 1])))
    f = math.fsum(float(v) * float(v) for v in a.ravel())
    if f < 2.0 - DET_TOL:
        raise ValueError("not an SL(2,R) matrix (Frobenius norm below sqrt 2)")
    return math.sqrt((f + math.sqrt(max(f * f - 4.0, 0.0))) / 2.0)


# product kernel -----------------------------------------------------------------


class _State:
    """Batched P V = Q diag(e^L, e^-L); Q and V stored by their first columns."""

    def __init__(self, batch: int):
        self.qc = np.ones(batch)
        self.qs = np.zeros(batch)
        self.vc = np.ones(batch)
        self.vs = np.zeros(batch)
        self.log_norm = np.zeros(batch)
        self.steps = 0

    def advance(self, m: np.ndarray) -> None:
        """P <- M P for a batch of matrices m of shape (B, 2, 2)."""
        qc, qs = self.qc, self.qs
        rho = np.exp(-2.0 * self.log_norm)
        # A = M Q diag(1, rho)
        a = m[:, 0, 0] * qc + m[:, 0, 1] * qs
        c = m[:, 1, 0] * qc + m[:, 1, 1] * qs
        b = rho * (-m[:, 0, 0] * qs + m[:, 0, 1] * qc)
        d = rho * (-m[:, 1, 0] * qs + m[:, 1, 1] * qc)
        diag = (b == 0) & (c == 0)
        s = a * a + b * b + c * c + d * d
        dif = a * a + b * b - c * c - d * d
        x = a * c + b * d
        sigma = np.sqrt((s + np.hypot(dif, 2.0 * x)) / 2.0)
        theta = 0.5 * np.arctan2(2.0 * x, dif)
        uc, us = np.cos(theta), np.sin(theta)
        # diagonal A: exact singular values, no rounding in the norm
        big_first = np.abs(a) >= np.abs(d)
        sigma = np.where(diag, np.where(big_first, np.abs(a), np.abs(d)), sigma)
        uc = np.where(diag, np.where(big_first, 1.0, 0.0), uc)
        us = np.where(diag, np.where(big_first, 0.0, 1.0), us)
        # first right singular vector w = A^T u / sigma
        wc = (a * uc + c * us) / sigma
        ws = (b * uc + d * us) / sigma
        self.vc, self.vs = self.vc * wc - self.vs * ws, self.vs * wc + self.vc * ws
        self.qc, self.qs = uc, us
        self.log_norm = self.log_norm + np.log(sigma)
        self.steps += 1
        if self.steps % REPROJECT_EVERY == 0:
            self.reproject()

    def reproject(self) -> None:
        r = np.hypot(self.vc, self.vs)
        self.vc, self.vs = self.vc / r, self.vs / r
        r = np.hypot(self.qc, self.qs)
        self.qc, self.qs = self.qc / r, self.qs / r


@dataclass(frozen=True)
class LogProduct:
    """A product P = e^log_norm * normalized(), with ||normalized()|| = 1."""

    log_norm: float
    steps: int
    q: Tuple[float, float]
    v: Tuple[float, float]

    def normalized(self) -> np.ndarray:
        qc, qs = self.q
        vc, vs = self.v
        rho = math.exp(-2.0 * self.log_norm)
        qm = np.array([[qc, -qs], [qs, qc]])
        vm = np.array([[vc, -vs], [vs, vc]])
        return qm @ np.diag([1.0, rho]) @ vm.T

    def matrix(self) -> np.ndarray:
        if self.log_norm > 700:
            raise OverflowError("product too large to form explicitly")
        return math.exp(self.log_norm) * self.normalized()

    def norm(self) -> float:
        return math.exp(self.log_norm)

    def det(self) -> float:
        """Determinant of the represented product (drift of the rotations only)."""
        return (self.q[0] ** 2 + self.q[1] ** 2) * (self.v[0] ** 2 + self.v[1] ** 2)


def _advance_one(state: list, m00: float, m01: float, m10: float, m11: float) -> None:
    """Scalar version of _State.advance; state = [log_norm, qc, qs, vc, vs, steps]."""
    L, qc, qs, vc, vs, steps = state
    rho = math.exp(-2.0 * L)
    a = m00 * qc + m01 * qs
    c = m10 * qc + m11 * qs
    b = rho * (-m00 * qs + m01 * qc)
    d = rho * (-m10 * qs + m11 * qc)
    if b == 0 and c == 0:
        if abs(a) >= abs(d):
            sigma, uc, us = abs(a), 1.0, 0.0
        else:
            sigma, uc, us = abs(d), 0.0, 1.0
    else:
        sq = a * a + b * b + c * c + d * d
        dif = a * a + b * b - c * c - d * d
        x = a * c + b * d
        sigma = math.sqrt((sq + math.hypot(dif, 2.0 * x)) / 2.0)
        theta = 0.5 * math.atan2(2.0 * x, dif)
        uc, us = math.cos(theta), math.sin(theta)
    wc = (a * uc + c * us) / sigma
    ws = (b * uc + d * us) / sigma
    vc, vs = vc * wc - vs * ws, vs * wc + vc * ws
    steps += 1
    if steps % REPROJECT_EVERY == 0:
        r = math.hypot(vc, vs)
        vc, vs = vc / r, vs / r
        r = math.hypot(uc, us)
        uc, us = uc / r, us / r
    state[:] = [L + math.log(sigma), uc, us, vc, vs, steps]


def _scalar_product(mats) -> LogProduct:
    state = [0.0, 1.0, 0.0, 1.0, 0.0, 0]
    for m in np.asarray(mats, dtype=float).reshape(-1, 4).tolist():
        _advance_one(state, *m)
    L, qc, qs, vc, vs, steps = state
    return LogProduct(L, steps, (qc, qs), (vc, vs))


def product_of(matrices: Sequence) -> LogProduct:
    """Log-renormalized M_k ... M_1 for matrices listed as M_1, ..., M_k."""
    return _scalar_product(matrices)


# locally constant rules ------------------------------------------------------------


class LocalRule:
    """A locally constant SL(2,R)-valued function.

    The matrix used at step j of A(n, T^b x) is table[x(b+j+1-N), ..., x(b+j+1+N)], i.e. the
    window of radius N centred at omega(1).  ``default`` covers windows missing from the table.
    """

    def __init__(self, radius: int, table: Mapping[Tuple[int, ...], object],
                 default=None, label: str = ""):
        if radius < 0:
            raise ValueError("radius must be non-negative")
        if radius > 3:
            raise ValueError("radius above 3 is not supported")
        self.radius = radius
        self.table = {tuple(int(s) for s in k): as_sl2(v) for k, v in table.items()}
        for k in self.table:
            if len(k) != 2 * radius + 1:
                raise ValueError(f"window {k} does not have length {2 * radius + 1}")
        self.default = None if default is None else as_sl2(default)
        self.label = label
        keys = sorted(self.table, key=self._code_of)
        self._codes = np.array([self._code_of(k) for k in keys], dtype=np.int64)
        mats = [self.table[k] for k in keys]
        if self.default is not None:
            mats.append(self.default)
        self._mats = np.array(mats, dtype=float).reshape(-1, 2, 2)

    @staticmethod
    def _code_of(window: Sequence[int]) -> int:
        return sum(int(s) << (8 * i) for i, s in enumerate(window))

    @classmethod
    def constant(cls, m, label: str = "constant") -> "LocalRule":
        return cls(0, {}, default=m, label=label)

    def matrix_for(self, window: Sequence[int]) -> np.ndarray:
        w = tuple(int(s) for s in window)
        if w in self.table:
            return self.table[w]
        if self.default is None:
            raise ValueError(f"rule is not defined on window {w}")
        return self.default

    def indices(self, x: np.ndarray) -> np.ndarray:
        """Table indices for every full window of x; entry i belongs to the window x[i:i+2N+1]."""
        x = np.asarray(x, dtype=np.int64)
        width = 2 * self.radius + 1
        m = len(x) - width + 1
        if m <= 0:
            return np.zeros(0, dtype=np.int64)
        code = np.zeros(m, dtype=np.int64)
        for i in range(width):
            code |= x[i: i + m] << (8 * i)
        if len(self._codes) == 0:
            return np.zeros(m, dtype=np.int64)
        pos = np.searchsorted(self._codes, code)
        pos_c = np.minimum(pos, len(self._codes) - 1)
        hit = self._codes[pos_c] == code
        if not hit.all():
            if self.default is None:
                bad = int(np.flatnonzero(~hit)[0])
                raise ValueError(f"rule is not defined on window {tuple(int(s) for s in x[bad: bad + width])}")
            pos = np.where(hit, pos_c, len(self._codes))
        return pos

    def matrices(self) -> np.ndarray:
        return self._mats

    def digest(self) -> str:
        payload = {"radius": self.radius,
                   "table": sorted([list(k), self.table[k].tolist()] for k in self.table),
                   "default": None if self.default is None else self.default.tolist()}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _embed_map(embed) -> Dict[int, float]:
    if isinstance(embed, Mapping):
        return {int(k) if not isinstance(k, str) else as_word(k)[0]: float(v) for k, v in embed.items()}
    return {i: float(v) for i, v in enumerate(embed)}


def schrodinger_rule(E: float, embed) -> LocalRule:
    """Transfer matrices [[E - V(omega(1)), -1], [1, 0]]; ``embed`` maps symbols to potential values."""
    emap = _embed_map(embed)
    table = {(s,): [[E - v, -1.0], [1.0, 0.0]] for s, v in emap.items()}
    return LocalRule(0, table, label=f"schrodinger(E={E!r})")


def _read(gen: SubshiftGen, lo: int, hi: int) -> np.ndarray:
    return np.asarray(gen.window(lo, hi), dtype=np.int64)


def cocycle_product(rule: LocalRule, gen: SubshiftGen, base: int, n: int) -> LogProduct:
    """A(n, T^base x): A(T^{n-1} w) ... A(w) for n > 0, the identity for n = 0 and
    A^-1(T^n w) ... A^-1(T^-1 w) for n < 0."""
    N = rule.radius
    if n == 0:
        return product_of([])
    if n > 0:
        x = _read(gen, base + 1 - N, base + n + N)
        mats = rule.matrices()[rule.indices(x)]
    else:
        x = _read(gen, base + n + 1 - N, base + N)
        mats = rule.matrices()[rule.indices(x)][::-1]
        mats = np.stack([mats[:, 1, 1], -mats[:, 0, 1], -mats[:, 1, 0], mats[:, 0, 0]], axis=-1).reshape(-1, 2, 2)
    return _scalar_product(mats)


# sampled log norms ------------------------------------------------------------------

BASE_RANGE = 10 ** 6
CHUNK = 256


def sample_bases(seed: int, samples: int, base_range: int = BASE_RANGE) -> np.ndarray:
    """Base points from a counter-based generator keyed by (seed, sample index)."""
    out = np.empty(samples, dtype=np.int64)
    for i in range(samples):
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))
        out[i] = rng.integers(0, base_range)
    return out


def _log_norm_track(mats: np.ndarray, keys: np.ndarray, checkpoints: Sequence[int]) -> np.ndarray:
    """Log norms of products along rows of ``keys``.

    mats: (B, K, 2, 2) per-row matrix tables, keys: (B, n) table indices per step.
    Returns (len(checkpoints), B) log norms after the given numbers of steps.
    """
    B, n = keys.shape
    out = np.empty((len(checkpoints), B))
    want = {c: i for i, c in enumerate(checkpoints)}
    rows = np.arange(B)
    st = _State(B)
    for j in range(n):
        st.advance(mats[rows, keys[:, j]])
        if j + 1 in want:
            out[want[j + 1]] = st.log_norm
    return out


def _log_norms(rules: Sequence[LocalRule], gen: SubshiftGen, n_list: Sequence[int], samples: int,
               seed: int, base_range: int = BASE_RANGE, threads: int = 1) -> np.ndarray:
    """(len(rules), samples, len(n_list)) array of log ||A(n, T^b x)|| for sampled b.

    All rules must share radius and table keys (e.g. Schroedinger rules at several energies).
    Rows are processed in fixed chunks so results do not depend on how work is split.
    """
    n_list = [int(n) for n in n_list]
    if min(n_list) < 1 or samples < 1:
        raise ValueError("need n >= 1 and samples >= 1")
    n_max = max(n_list)
    N = rules[0].radius
    if any(r.radius != N or not np.array_equal(r._codes, rules[0]._codes) for r in rules):
        raise ValueError("rules must share their window tables")
    bases = sample_bases(seed, samples, base_range)
    lo = int(bases.min()) + 1 - N
    x = _read(gen, lo, int(bases.max()) + n_max + N)
    idx = rules[0].indices(x)
    # step j at base b reads the window centred at position b + j + 1
    keys = np.stack([idx[b + 1 - N - lo: b + 1 - N - lo + n_max] for b in bases])
    tables = np.stack([r.matrices() for r in rules])  # (R, K, 2, 2)
    R = len(rules)
    row_rule = np.repeat(np.arange(R), samples)
    row_keys = np.tile(keys, (R, 1))
    out = np.empty((len(n_list), R * samples))

    def run(start: int) -> None:
        sl = slice(start, start + CHUNK)
        out[:, sl] = _log_norm_track(tables[row_rule[sl]], row_keys[sl], n_list)

    starts = range(0, R * samples, CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return out.T.reshape(R, samples, len(n_list))


@dataclass(frozen=True)
class LyapunovStats:
    mean: float
    max: float
    min: float
    values: Tuple[float, ...]


def lyapunov_estimate(rule: LocalRule, gen: SubshiftGen, n: int, samples: int, seed: int = 0,
                      base_range: int = BASE_RANGE) -> LyapunovStats:
    """Statistics of (1/n) log ||A(n, omega_i)|| over sampled base points."""
    v = _log_norms([rule], gen, [n], samples, seed, base_range)[0, :, 0] / n
    return LyapunovStats(float(np.mean(v)), float(v.max()), float(v.min()), tuple(float(t) for t in v))


@dataclass(frozen=True)
class GapRow:
    n: int
    mean: float
    min: float
    max: float

    @property
    def gap(self) -> float:
        return self.max - self.min


def uniformity_gap(rule: LocalRule, gen: SubshiftGen, n_list: Sequence[int], samples: int, seed: int = 0,
                   base_range: int = BASE_RANGE) -> List[GapRow]:
    """Spread of (1/n) log ||A(n, .)|| across sampled base points, for each n."""
    vals = _log_norms([rule], gen, n_list, samples, seed, base_range)[0]
    rows = []
    for i, n in enumerate(n_list):
        v = vals[:, i] / n
        rows.append(GapRow(int(n), float(v.mean()), float(v.min()), float(v.max())))
    return rows


def word_sup_F(rule: LocalRule, x, gen: SubshiftGen, horizon: int = 10 ** 5) -> float:
    """sup of log ||A(|x|, omega)|| over omega with omega(1..|x|) = x, taken over the
    legal completions of x by N symbols on each side seen in the window [0, horizon)."""
    N = rule.radius
    if N > MAX_SUP_RADIUS:
        raise ValueError("boundary enumeration is limited to radius <= 2")
    x = as_word(x)
    if not x:
        return 0.0
    scan = _read(gen, 0, horizon - 1)
    pos = occurrence_positions(x, scan)
    pos = pos[(pos >= N) & (pos + len(x) + N <= len(scan))]
    if len(pos) == 0:
        raise ValueError(f"word {x} not found in the scan (not legal, or horizon too short)")
    contexts = {tuple(scan[p - N: p + len(x) + N]) for p in pos}
    best = -math.inf
    for ctx in sorted(contexts):
        mats = rule.matrices()[rule.indices(np.array(ctx))]
        best = max(best, product_of(mats).log_norm)
    return best


# Avalanche defect -------------------------------------------------------------------


@dataclass(frozen=True)
class AvalancheReport:
    defect: float
    hypotheses_ok: bool
    kappa_hat: float
    min_log_norm: float
    max_pair_excess: float


def avalanche_defect(matrices: Sequence, lam: float) -> AvalancheReport:
    """|log||A_N...A_1|| + sum_{j=2}^{N-1} log||A_j|| - sum_{j=1}^{N-1} log||A_{j+1} A_j|||.

    kappa_hat = defect * exp(lam) / N is the constant the bound would need.
    """
    mats = [as_sl2(m) for m in matrices]
    N = len(mats)
    p = N
    while p > 1 and p % 3 == 0:
        p //= 3
    if N < 3 or p != 1:
        raise ValueError("the number of matrices must be a power of 3")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    singles = [math.log(sl2_norm(m)) for m in mats]
    pairs = [product_of([mats[j], mats[j + 1]]).log_norm for j in range(N - 1)]
    full = product_of(mats).log_norm
    defect = abs(math.fsum([full] + singles[1:-1] + [-t for t in pairs]))
    excess = [abs(singles[j] + singles[j + 1] - pairs[j]) for j in range(N - 1)]
    ok = min(singles) >= lam and max(excess) < lam / 2
    return AvalancheReport(defect, ok, defect * math.exp(lam) / N, min(singles), max(excess))
