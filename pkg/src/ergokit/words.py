"""Finite words, factor tables, Rauzy graphs, return words and repetitions.

Words are tuples of small non-negative integers.  Long scan windows are numpy
``uint8`` arrays; factors are enumerated by packing each window of length n into
big-endian 64-bit chunks, which keeps the packed order lexicographic.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

Word = Tuple[int, ...]
WordLike = Union[str, Sequence[int], np.ndarray]


def as_word(w: WordLike) -> Word:
    """Convert to a tuple of ints.  Strings of digits keep their digit values,
    other strings map 'a' -> 0, 'b' -> 1, ..."""
    if isinstance(w, str):
        if w.isdigit() or w == "":
            return tuple(int(c) for c in w)
        if not w.isalpha() or not w.islower():
            raise ValueError(f"cannot read word {w!r}")
        return tuple(ord(c) - ord("a") for c in w)
    return tuple(int(c) for c in w)


def word_str(w: Iterable[int], letters: Optional[str] = None) -> str:
    """Render a word; with ``letters`` symbol k prints as letters[k]."""
    w = list(w)
    if letters is not None:
        return "".join(letters[c] for c in w)
    if all(0 <= c <= 9 for c in w):
        return "".join(str(c) for c in w)
    return ".".join(str(c) for c in w)


def _as_array(x) -> np.ndarray:
    arr = np.asarray(x if not isinstance(x, str) else as_word(x))
    if arr.ndim != 1:
        raise ValueError("words must be one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError("symbols must lie in 0..255")
    return arr.astype(np.uint8, copy=False)


def occurrence_positions(w: WordLike, x: WordLike) -> np.ndarray:
    """Start positions of all (possibly overlapping) occurrences of w in x."""
    w = _as_array(w)
    x = _as_array(x)
    n = len(w)
    if n == 0 or n > len(x):
        return np.zeros(0, dtype=np.int64)
    hit = x[: len(x) - n + 1] == w[0]
    for k in range(1, n):
        hit &= x[k: len(x) - n + 1 + k] == w[k]
    return np.flatnonzero(hit)


def count_occurrences(w: WordLike, x: WordLike) -> int:
    """#_w(x): overlapping occurrences; the empty word is counted 0 times."""
    return int(len(occurrence_positions(w, x)))


def count_disjoint(w: WordLike, x: WordLike) -> int:
    """#*_w(x): maximal number of pairwise disjoint occurrences (greedy left to right)."""
    if len(w) == 0:
        raise ValueError("count_disjoint needs a non-empty word")
    pos = occurrence_positions(w, x)
    count, free = 0, 0
    for p in pos:
        if p >= free:
            count += 1
            free = p + len(w)
    return count


def covered_positions(w: WordLike, x: WordLike) -> np.ndarray:
    """Boolean mask over x: True at k when some occurrence of w contains position k."""
    x = _as_array(x)
    n = len(as_word(w)) if isinstance(w, str) else len(w)
    starts = np.zeros(len(x) + 1, dtype=np.int64)
    pos = occurrence_positions(w, x)
    np.add.at(starts, pos, 1)
    np.add.at(starts, pos + n, -1)
    return np.cumsum(starts)[: len(x)] > 0


# packed factor codes ---------------------------------------------------------------


def _symbol_bits(x: np.ndarray) -> int:
    top = int(x.max()) if x.size else 1
    return max(1, top.bit_length())


def _pair_ranks(a: np.ndarray, b: np.ndarray, full: bool = False):
    key = a.astype(np.int64) * (int(b.max()) + 1) + b
    if full:
        return np.unique(key, return_index=True, return_inverse=True, return_counts=True)[1:]
    return np.unique(key, return_inverse=True)[1].reshape(-1)


class WindowRanker:
    """Lexicographic ranks of the length-n windows of one array, for many n.

    Ranks of windows of length per * 2^j are computed once by prefix doubling and
    reused; each length n then costs one pairing of two overlapping power-of-two windows.
    """

    def __init__(self, x: np.ndarray):
        self.x = np.asarray(x, dtype=np.uint8)
        self.bits = _symbol_bits(self.x)
        self.per = 64 // self.bits
        self._levels = {}
        self._short = (0, np.zeros(len(self.x) + 1, dtype=np.uint64))

    def _short_codes(self, n: int) -> np.ndarray:
        """Right-aligned codes of the length-n windows, n <= per (extended from the last call)."""
        k, codes = self._short
        if k > n:
            k, codes = 0, np.zeros(len(self.x) + 1, dtype=np.uint64)
        xs = self.x.astype(np.uint64)
        while k < n:
            m = len(self.x) - k
            codes = (codes[:m] << np.uint64(self.bits)) | xs[k: k + m]
            k += 1
        self._short = (k, codes)
        return codes

    def _level(self, width: int) -> np.ndarray:
        if width not in self._levels:
            if width == self.per:
                codes = self._short_codes(self.per)
                self._levels[width] = np.unique(codes, return_inverse=True)[1].reshape(-1)
            else:
                half = width // 2
                r = self._level(half)
                self._levels[width] = _pair_ranks(r[:-half], r[half:])
        return self._levels[width]

    def unique(self, n: int):
        """(first positions, counts, inverse ids) of the distinct length-n windows."""
        x = self.x
        if n <= self.per:
            codes = self._short_codes(n)
            _, first, inverse, counts = np.unique(codes, return_index=True,
                                                  return_inverse=True, return_counts=True)
            return first, counts, inverse.reshape(-1)
        m = len(x) - n + 1
        width = self.per
        while 2 * width <= n:
            width *= 2
        ranks = self._level(width)
        first, inverse, counts = _pair_ranks(ranks[:m], ranks[n - width: n - width + m], full=True)
        return first, counts, inverse.reshape(-1)


def _unique_windows(x: np.ndarray, n: int):
    """(first positions, counts, inverse ids) of the distinct length-n windows of x.

    Ids follow lexicographic order.  Windows that fit one 64-bit code are ranked
    directly; longer ones by prefix doubling on ranks of shorter windows.
    """
    return WindowRanker(x).unique(n)


@dataclass(frozen=True)
class FactorTable:
    """Length-n factors observed in a scan, in lexicographic order, with counts.

    ``positions`` is the number of scanned start positions, len(scan) - n + 1.
    """

    n: int
    factors: Tuple[Word, ...]
    counts: Tuple[int, ...]
    positions: int

    @property
    def complexity(self) -> int:
        return len(self.factors)

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.positions

    def frequency(self, w: WordLike) -> float:
        w = as_word(w)
        try:
            return self.counts[self.factors.index(w)] / self.positions
        except ValueError:
            return 0.0

    def __contains__(self, w) -> bool:
        return as_word(w) in self.factors

    def to_csv(self, letters: Optional[str] = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["factor", "count", "frequency"])
        for f, c in zip(self.factors, self.counts):
            writer.writerow([word_str(f, letters), c, format(c / self.positions, ".17g")])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"n": self.n, "positions": self.positions, "complexity": self.complexity,
                "factors": [list(f) for f in self.factors], "counts": list(self.counts)}


def _scan(source, horizon: Optional[int]) -> np.ndarray:
    if hasattr(source, "window"):
        if horizon is None:
            raise ValueError("a horizon is needed to scan a generator")
        return np.asarray(source.window(0, horizon - 1), dtype=np.uint8)
    x = _as_array(source)
    return x if horizon is None else x[:horizon]


def factor_table(source, n: int, horizon: Optional[int] = None) -> FactorTable:
    """Distinct length-n factors of a finite word, or of the window [0, horizon) of a generator."""
    x = _scan(source, horizon)
    if n < 0:
        raise ValueError("factor length must be non-negative")
    if n == 0:
        return FactorTable(0, ((),), (len(x) + 1,), len(x) + 1)
    if n > len(x):
        raise ValueError("window shorter than the factor length")
    first, counts, _ = _unique_windows(x, n)
    factors = [tuple(int(c) for c in x[p: p + n]) for p in first]
    order = sorted(range(len(factors)), key=factors.__getitem__)
    return FactorTable(n, tuple(factors[i] for i in order),
                       tuple(int(counts[i]) for i in order), len(x) - n + 1)


def complexity_profile(source, n_max: int, horizon: Optional[int] = None) -> List[int]:
    """p(1), ..., p(n_max) over one scan."""
    x = _scan(source, horizon)
    return [len(_unique_windows(x, n)[0]) for n in range(1, n_max + 1)]


@dataclass(frozen=True)
class RauzyGraph:
    """Vertices: length-n factors.  Arc u -> v for each length-(n+1) factor u[0] + v."""

    n: int
    vertices: Tuple[Word, ...]
    arcs: Tuple[Tuple[Word, Word], ...]

    def out_degree(self, v: WordLike) -> int:
        v = as_word(v)
        return sum(1 for a, _ in self.arcs if a == v)

    def in_degree(self, v: WordLike) -> int:
        v = as_word(v)
        return sum(1 for _, b in self.arcs if b == v)

    def right_special(self) -> List[Word]:
        return [v for v in self.vertices if self.out_degree(v) > 1]

    def left_special(self) -> List[Word]:
        return [v for v in self.vertices if self.in_degree(v) > 1]

    def bispecial(self) -> List[Word]:
        left = set(self.left_special())
        return [v for v in self.right_special() if v in left]

    def to_json(self) -> dict:
        return {"n": self.n, "vertices": [list(v) for v in self.vertices],
                "arcs": [[list(a), list(b)] for a, b in self.arcs]}

    def to_csv(self, letters: Optional[str] = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["source", "target"])
        for a, b in self.arcs:
            writer.writerow([word_str(a, letters), word_str(b, letters)])
        return buf.getvalue()


def rauzy_graph(f_n: FactorTable, f_n1: FactorTable) -> RauzyGraph:
    if f_n1.n != f_n.n + 1:
        raise ValueError("factor tables must have consecutive lengths")
    vertices = set(f_n.factors)
    arcs = []
    for u in f_n1.factors:
        a, b = u[:-1], u[1:]
        if a not in vertices or b not in vertices:
            raise ValueError("factor tables are not factor-closed")
        arcs.append((a, b))
    return RauzyGraph(f_n.n, f_n.factors, tuple(arcs))


def return_words(source, w: WordLike, horizon: Optional[int] = None) -> Dict[Word, int]:
    """Return words to w with their multiplicities: the segments between consecutive
    occurrences of w in the scan."""
    x = _scan(source, horizon)
    w = as_word(w)
    if not w:
        raise ValueError("return words need a non-empty word")
    pos = occurrence_positions(w, x)
    if len(pos) < 2:
        raise ValueError("fewer than two occurrences in the scan")
    found: Dict[Word, int] = {}
    for p, q in zip(pos[:-1], pos[1:]):
        r = tuple(int(c) for c in x[p:q])
        found[r] = found.get(r, 0) + 1
    return dict(sorted(found.items()))


def _longest_palindromic_suffix(w: Word) -> int:
    """Length of the longest palindromic suffix, via the prefix function of rev(w)#w."""
    s = list(reversed(w)) + [-1] + list(w)
    pi = [0] * len(s)
    for i in range(1, len(s)):
        k = pi[i - 1]
        while k and s[i] != s[k]:
            k = pi[k - 1]
        if s[i] == s[k]:
            k += 1
        pi[i] = k
    return pi[-1]


def palindromic_closure(w: WordLike) -> Word:
    """Shortest palindrome having w as a prefix."""
    w = as_word(w)
    if not w:
        return ()
    k = _longest_palindromic_suffix(w)
    head = w[: len(w) - k]
    return w + tuple(reversed(head))


def is_palindrome(w: Sequence[int]) -> bool:
    return tuple(w) == tuple(reversed(w))


@dataclass(frozen=True)
class PowerReport:
    word: Word
    power: int
    position: int
    capped: bool = field(default=False)


def max_power_index(source, max_word_len: int, horizon: Optional[int] = None, cap: int = 64) -> PowerReport:
    """Largest k such that some w^k with |w| <= max_word_len occurs in the scan.

    The witness is the shortest w attaining the (capped) maximum.
    """
    x = _scan(source, horizon)
    if max_word_len < 1 or len(x) == 0:
        raise ValueError("need max_word_len >= 1 and a non-empty scan")
    best = PowerReport((int(x[0]),), 1, 0)
    for p in range(1, min(max_word_len, len(x) - 1) + 1):
        eq = np.concatenate(([False], x[p:] == x[:-p], [False]))
        d = np.diff(eq.astype(np.int8))
        starts = np.flatnonzero(d == 1)
        ends = np.flatnonzero(d == -1)
        if not len(starts):
            continue
        runs = ends - starts
        i = int(np.argmax(runs))
        k = (int(runs[i]) + p) // p
        k_capped = min(k, cap)
        if k_capped > best.power:
            s = int(starts[i])
            best = PowerReport(tuple(int(c) for c in x[s: s + p]), k_capped, s, k >= cap)
    return best
