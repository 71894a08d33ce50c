"""Generators of legal windows for rotation, substitution, Arnoux-Rauzy and IET subshifts.

Every generator exposes ``window(i, j)``, the letters at positions i..j inclusive
of one fixed point of the subshift, as a ``uint8`` array.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .reals import (BOUNDARY_BAND, ONE, Real, circle_distance, fixed_eq, fixed_ge, fixed_to_float,
                    looks_irrational, orbit_fixed, parse_real)
from .words import Word, as_word, occurrence_positions, palindromic_closure


class BoundaryAmbiguityError(ValueError):
    """An orbit point lies within the tolerance band of a cut without being on it."""


class WindowUnavailable(ValueError):
    """The generator cannot produce letters at the requested positions."""


class ConstructionMismatch(RuntimeError):
    """Two independent constructions of the same word disagree."""


class SubshiftGen:
    """Base class: a deterministic source of windows of one point of a subshift."""

    alphabet: Tuple[int, ...] = ()
    aperiodic: bool = False
    two_sided: bool = True

    def window(self, i: int, j: int) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def word(self, i: int, j: int) -> Word:
        return tuple(int(c) for c in self.window(i, j))

    def _check_range(self, i: int, j: int) -> None:
        if i > j:
            raise ValueError("empty window: need i <= j")
        if i < 0 and not self.two_sided:
            raise WindowUnavailable("one-sided generator: negative positions unavailable")


# rotations ------------------------------------------------------------------------------


@dataclass(frozen=True)
class RotationSpec(SubshiftGen):
    """Coding of the orbit of theta under x -> x + alpha mod 1.

    One cut beta gives the binary coding 1 on [0, beta).  Several cuts
    b_1 < ... < b_{p-1} give letter k on [b_k, b_{k+1}) with b_0 = 0, b_p = 1.
    """

    alpha: Real
    cuts: Tuple[Real, ...]
    theta: Real = field(default_factory=lambda: Real.from_fraction(0))

    def __post_init__(self):
        if not self.cuts:
            raise ValueError("at least one cut is required")
        if not looks_irrational(self.alpha):
            raise ValueError(f"alpha {self.alpha.label} does not look irrational")
        fx = [c.fixed() for c in self.cuts]
        if any(v == 0 for v in fx) or any(a >= b for a, b in zip(fx, fx[1:])):
            raise ValueError("cuts must be strictly increasing inside (0,1)")
        for c in self.cuts:
            if c.rational is not None and not 0 < c.rational < 1:
                raise ValueError("cuts must lie in (0,1)")

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return (0, 1) if len(self.cuts) == 1 else tuple(range(len(self.cuts) + 1))

    @property
    def aperiodic(self) -> bool:
        return True

    def points(self, i: int, j: int):
        n = np.arange(i, j + 1, dtype=np.int64)
        return orbit_fixed(self.alpha.fixed(), n, self.theta.fixed())

    def window(self, i: int, j: int) -> np.ndarray:
        self._check_range(i, j)
        hi, lo = self.points(i, j)
        x = fixed_to_float(hi, lo)
        letter = np.zeros(len(x), dtype=np.uint8)
        boundaries = [0] + [c.fixed() for c in self.cuts]
        for b in boundaries:
            near = circle_distance(x, b / ONE) < BOUNDARY_BAND
            if near.any() and not fixed_eq(hi[near], lo[near], b).all():
                k = int(np.flatnonzero(near & ~fixed_eq(hi, lo, b))[0]) + i
                raise BoundaryAmbiguityError(f"orbit point {k} is within {BOUNDARY_BAND} of a cut")
        for b in boundaries[1:]:
            letter += fixed_ge(hi, lo, b).astype(np.uint8)
        if len(self.cuts) == 1:
            letter = (1 - letter).astype(np.uint8)
        return letter

    def describe(self) -> dict:
        return {"family": "rotation", "alpha": self.alpha.label,
                "cuts": [c.label for c in self.cuts], "theta": self.theta.label}


def rotation_coding(spec: RotationSpec, i: int, j: int) -> Word:
    return spec.word(i, j)


# substitutions --------------------------------------------------------------------------


class NoFixedPoint(ValueError):
    """No power S^k with k <= 8 maps the seed to a longer word starting with it."""


@dataclass(frozen=True)
class SubstitutionRule:
    """A substitution on the alphabet 0..m-1 given by its images."""

    images: Tuple[Word, ...]

    def __post_init__(self):
        m = len(self.images)
        if m == 0:
            raise ValueError("empty alphabet")
        for img in self.images:
            if not img:
                raise ValueError("every image must be non-empty")
            if any(not 0 <= c < m for c in img):
                raise ValueError("image uses a letter outside the alphabet")

    @classmethod
    def from_dict(cls, images: Dict) -> "SubstitutionRule":
        keys = sorted(as_word(k)[0] if isinstance(k, str) else int(k) for k in images)
        if keys != list(range(len(keys))):
            raise ValueError("images must be given for a contiguous alphabet a, b, ...")
        lookup = {as_word(k)[0] if isinstance(k, str) else int(k): as_word(v) for k, v in images.items()}
        return cls(tuple(lookup[k] for k in keys))

    @classmethod
    def parse(cls, text: str) -> "SubstitutionRule":
        """``"a:ab,b:a"`` or one of the names in NAMED_RULES."""
        if text in NAMED_RULES:
            return NAMED_RULES[text]
        try:
            pairs = dict(part.split(":") for part in text.split(","))
        except ValueError:
            raise ValueError(f"cannot parse substitution {text!r}") from None
        return cls.from_dict(pairs)

    @property
    def size(self) -> int:
        return len(self.images)

    def incidence(self) -> np.ndarray:
        """M[b, a] = number of b's in S(a)."""
        m = self.size
        mat = np.zeros((m, m), dtype=np.int64)
        for a, img in enumerate(self.images):
            for b in img:
                mat[b, a] += 1
        return mat

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        lengths = np.array([len(img) for img in self.images])
        flat = np.concatenate([np.asarray(img, dtype=np.uint8) for img in self.images])
        offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
        out_len = lengths[x]
        starts = np.repeat(offsets[x], out_len)
        within = np.arange(out_len.sum()) - np.repeat(np.cumsum(out_len) - out_len, out_len)
        return flat[starts + within]

    def power_image(self, a: int, k: int) -> np.ndarray:
        x = np.array([a], dtype=np.uint8)
        for _ in range(k):
            x = self.apply(x)
        return x

    def describe(self) -> dict:
        letters = "abcdefghijklmnopqrstuvwxyz"
        return {letters[a]: "".join(letters[c] for c in img) for a, img in enumerate(self.images)}


NAMED_RULES = {
    "fibonacci": SubstitutionRule(((0, 1), (0,))),
    "thue_morse": SubstitutionRule(((0, 1), (1, 0))),
    "period_doubling": SubstitutionRule(((0, 1), (0, 0))),
    "rudin_shapiro": SubstitutionRule(((0, 1), (0, 2), (3, 1), (3, 2))),
}
NAMED_RULES["fib"] = NAMED_RULES["fibonacci"]


def primitivity_check(rule: SubstitutionRule) -> Tuple[bool, Optional[int]]:
    """(True, k) for the smallest k <= m^2 with S^k(a) containing every letter for all a."""
    base = (rule.incidence() > 0).astype(np.int64)
    mat = base.copy()
    for k in range(1, rule.size ** 2 + 1):
        if (mat > 0).all():
            return True, k
        mat = ((mat @ base) > 0).astype(np.int64)
    return False, None


def _prefix_power(rule: SubstitutionRule, seed: int, bound: int = 8) -> int:
    for k in range(1, bound + 1):
        img = rule.power_image(seed, k)
        if img[0] == seed and len(img) > 1:
            return k
    raise NoFixedPoint(f"no power S^k, k <= {bound}, maps {seed} to a longer word starting with it")


def _grow(rule: SubstitutionRule, seed: int, k: int, target_len: int, from_end: bool = False) -> np.ndarray:
    x = np.array([seed], dtype=np.uint8)
    while len(x) < target_len:
        y = x
        for _ in range(k):
            y = rule.apply(y)
        if len(y) <= len(x):
            raise NoFixedPoint("iteration does not grow")
        x = y
    return x[-target_len:] if from_end else x[:target_len]


def substitution_iterate(rule: SubstitutionRule, seed: int, target_len: int) -> Word:
    """Prefix of length target_len of the one-sided fixed point of a power of S starting with seed."""
    k = _prefix_power(rule, seed)
    return tuple(int(c) for c in _grow(rule, seed, k, target_len))


class SubstitutionGen(SubshiftGen):
    """Two-sided fixed point ... S^{kj}(b) . S^{kj}(a) ... of a primitive substitution.

    Positions >= 0 hold the one-sided fixed point starting with ``seed``; negative
    positions hold a left-infinite limit S^{kj}(b) with ``b seed`` a legal word.
    """

    def __init__(self, rule: SubstitutionRule, seed: int = 0):
        ok, _ = primitivity_check(rule)
        if not ok:
            raise ValueError("substitution is not primitive")
        self.rule = rule
        self.seed = seed
        self.k_right = _prefix_power(rule, seed)
        self.left = self._left_letter()
        self._right = np.zeros(0, dtype=np.uint8)
        self._leftw = np.zeros(0, dtype=np.uint8)

    def _left_letter(self) -> Tuple[int, int]:
        probe = _grow(self.rule, self.seed, self.k_right, 4096)
        legal = {(int(a), int(b)) for a, b in zip(probe[:-1], probe[1:])}
        for k in range(1, 9):
            for b in range(self.rule.size):
                if (b, self.seed) not in legal:
                    continue
                if k % self.k_right:
                    continue
                img = self.rule.power_image(b, k)
                if img[-1] == b and len(img) > 1:
                    return b, k
        # fall back to a common multiple of both periods
        for b in range(self.rule.size):
            if (b, self.seed) in legal:
                for k in range(1, 9):
                    img = self.rule.power_image(b, k)
                    if img[-1] == b and len(img) > 1:
                        return b, k * self.k_right // math.gcd(k, self.k_right)
        raise NoFixedPoint("no two-sided fixed point found")

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(range(self.rule.size))

    @property
    def aperiodic(self) -> bool:
        return True

    def _right_part(self, length: int) -> np.ndarray:
        if len(self._right) < length:
            self._right = _grow(self.rule, self.seed, self.k_right, max(length, 2 * len(self._right)))
        return self._right

    def _left_part(self, length: int) -> np.ndarray:
        if len(self._leftw) < length:
            b, k = self.left
            x = np.array([b], dtype=np.uint8)
            while len(x) < max(length, 2 * len(self._leftw)):
                for _ in range(k):
                    x = self.rule.apply(x)
            self._leftw = x
        return self._leftw

    def window(self, i: int, j: int) -> np.ndarray:
        self._check_range(i, j)
        parts = []
        if i < 0:
            left = self._left_part(-i)
            parts.append(left[len(left) + i: len(left) + min(j + 1, 0)])
        if j >= 0:
            right = self._right_part(j + 1)
            parts.append(right[max(i, 0): j + 1])
        return np.concatenate(parts).astype(np.uint8)

    def describe(self) -> dict:
        return {"family": "substitution", "rule": self.rule.describe(), "seed": self.seed}


class PeriodicGen(SubshiftGen):
    """The periodic point ... u u u ... with u at positions 0..|u|-1."""

    def __init__(self, period):
        self.period = np.asarray(as_word(period), dtype=np.uint8)
        if not len(self.period):
            raise ValueError("empty period")

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(sorted(set(int(c) for c in self.period)))

    def window(self, i: int, j: int) -> np.ndarray:
        self._check_range(i, j)
        return self.period[np.arange(i, j + 1) % len(self.period)]

    def describe(self) -> dict:
        return {"family": "periodic", "word": [int(c) for c in self.period]}


class FiniteWordGen(SubshiftGen):
    """Windows of a stored finite word; positions outside it are unavailable."""

    two_sided = False

    def __init__(self, word, aperiodic: bool = False, meta: Optional[dict] = None):
        self.data = np.asarray(as_word(word) if not isinstance(word, np.ndarray) else word, dtype=np.uint8)
        self.aperiodic = aperiodic
        self.meta = meta or {}

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(sorted(set(int(c) for c in np.unique(self.data))))

    def window(self, i: int, j: int) -> np.ndarray:
        self._check_range(i, j)
        if j >= len(self.data):
            raise WindowUnavailable(f"only {len(self.data)} letters are available")
        return self.data[i: j + 1]

    def describe(self) -> dict:
        return {"family": "word", "length": int(len(self.data)), **self.meta}


class ImageGen(SubshiftGen):
    """Windows of T^shift S(omega), where omega is the base generator's point and
    position 0 of S(omega) is the first letter of S(omega(0))."""

    def __init__(self, rule: SubstitutionRule, base: SubshiftGen, shift: int = 0):
        self.rule = rule
        self.base = base
        self.shift = shift
        self.two_sided = base.two_sided
        self._min_len = min(len(img) for img in rule.images)

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(range(self.rule.size))

    @property
    def aperiodic(self) -> bool:
        return self.base.aperiodic

    def window(self, i: int, j: int) -> np.ndarray:
        i, j = i + self.shift, j + self.shift
        self._check_range(i, j)
        out = []
        if i < 0:
            need = -i
            count = need // self._min_len + 1
            img = self.rule.apply(self.base.window(-count, -1))
            out.append(img[len(img) - need: len(img) + min(j + 1, 0)])
        if j >= 0:
            count = j // self._min_len + 1
            img = self.rule.apply(self.base.window(0, count - 1))
            out.append(img[max(i, 0): j + 1])
        return np.concatenate(out).astype(np.uint8)

    def describe(self) -> dict:
        return {"family": "image", "rule": self.rule.describe(), "base": self.base.describe(),
                "shift": self.shift}


def subshift_image(rule: SubstitutionRule, base: SubshiftGen) -> List[ImageGen]:
    """Generators for T^k S(omega), k = 0 .. max|S(a)| - 1."""
    return [ImageGen(rule, base, k) for k in range(max(len(img) for img in rule.images))]


# derived sequences -----------------------------------------------------------------------


@dataclass(frozen=True)
class DerivedCoding:
    """Derived word over the return words to w (labelled in order of first appearance).

    ``anchor`` is the position of the occurrence of w where decoding starts:
    concatenating the return words of ``derived`` reproduces the scan from ``anchor``.
    """

    w: Word
    alphabet: Tuple[Word, ...]
    derived: Word
    anchor: int

    def decode(self) -> Word:
        return tuple(itertools.chain.from_iterable(self.alphabet[d] for d in self.derived))

    def generator(self) -> FiniteWordGen:
        return FiniteWordGen(self.derived, aperiodic=len(self.alphabet) > 1,
                             meta={"derived_from": list(self.w), "anchor": self.anchor})


def derived_coding(gen: SubshiftGen, w, horizon: int) -> DerivedCoding:
    """Code the scan by return words to w, starting at the last occurrence at a position <= 0
    (or the first occurrence when the generator is one-sided)."""
    w = as_word(w)
    if not w:
        raise ValueError("derived coding needs a non-empty word")
    start = -(horizon // 2) if gen.two_sided else 0
    x = gen.window(start, start + horizon - 1)
    pos = occurrence_positions(w, x) + start
    if len(pos) < 3:
        raise ValueError("fewer than three occurrences of w in the window")
    if gen.two_sided:
        left = pos[pos <= 0]
        if not len(left):
            raise ValueError("no occurrence of w at a position <= 0 in the window")
        first = int(np.flatnonzero(pos == left[-1])[0])
    else:
        first = 0
    labels: Dict[Word, int] = {}
    derived = []
    for p, q in zip(pos[first:-1], pos[first + 1:]):
        r = tuple(int(c) for c in x[p - start: q - start])
        derived.append(labels.setdefault(r, len(labels)))
    alphabet = tuple(sorted(labels, key=labels.get))
    return DerivedCoding(w, alphabet, tuple(derived), int(pos[first]))


# Arnoux-Rauzy words ----------------------------------------------------------------------


@dataclass(frozen=True)
class IndexSequence:
    """Index sequence i_1 i_2 ... over {1..m}.

    Either ``prefix`` followed by ``period`` repeated, or (``growth``) blocks
    c_1^{a_1} c_2^{a_2} ... where the letters cycle through ``cycle`` and
    a_n = base * ratio**n.
    """

    prefix: Tuple[int, ...] = ()
    period: Tuple[int, ...] = ()
    cycle: Tuple[int, ...] = ()
    base: int = 0
    ratio: int = 1

    def __post_init__(self):
        if self.cycle:
            if self.base < 1 or self.ratio < 1:
                raise ValueError("growth program needs base >= 1 and ratio >= 1")
        elif not self.prefix and not self.period:
            raise ValueError("index sequence is empty")
        if any(s < 1 for s in self.prefix + self.period + self.cycle):
            raise ValueError("indices are letters 1..m")

    @classmethod
    def periodic(cls, period, prefix=()) -> "IndexSequence":
        return cls(tuple(as_word(prefix)), tuple(as_word(period)))

    @classmethod
    def growth(cls, cycle=(1, 2, 3), base: int = 4, ratio: int = 2, prefix=()) -> "IndexSequence":
        return cls(tuple(as_word(prefix)), (), tuple(as_word(cycle)), base, ratio)

    @property
    def letters(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.prefix + self.period + self.cycle)))

    def exponent(self, n: int) -> int:
        """a_n for the growth program, n = 1, 2, ..."""
        return self.base * self.ratio ** n

    def blocks(self, count: int) -> List[Tuple[int, int]]:
        """(letter, exponent) of the first ``count`` growth blocks after the prefix."""
        return [(self.cycle[(n - 1) % len(self.cycle)], self.exponent(n)) for n in range(1, count + 1)]

    def take(self, k: int) -> Tuple[int, ...]:
        out = list(self.prefix[:k])
        if self.cycle:
            n = 1
            while len(out) < k:
                letter, a = self.blocks(n)[-1]
                out.extend([letter] * min(a, k - len(out)))
                n += 1
        elif self.period:
            i = 0
            while len(out) < k:
                out.append(self.period[i % len(self.period)])
                i += 1
        elif len(out) < k:
            raise ValueError("finite index sequence is too short")
        return tuple(out)

    def describe(self) -> dict:
        d = {"prefix": list(self.prefix)}
        if self.cycle:
            d["growth"] = {"cycle": list(self.cycle), "base": self.base, "ratio": self.ratio}
        else:
            d["period"] = list(self.period)
        return d


def bispecial_words(idx: IndexSequence, count: int) -> List[Word]:
    """w_1 = empty, w_{k+1} = (w_k i_k)^+ for k < count."""
    ws: List[Word] = [()]
    for i in idx.take(count - 1):
        ws.append(palindromic_closure(ws[-1] + (i,)))
    return ws


def _justin_lengths(indices: Sequence[int]) -> List[int]:
    """|w_1|, |w_2|, ...: |w_{k+1}| = 2|w_k| - |w_p| where p is the previous index with
    the same letter, or 2|w_k| + 1 if the letter is new."""
    lengths = [0]
    last: Dict[int, int] = {}
    for k, i in enumerate(indices):
        if i in last:
            lengths.append(2 * lengths[k] - lengths[last[i]])
        else:
            lengths.append(2 * lengths[k] + 1)
        last[i] = k
    return lengths


def _tau(x: np.ndarray, a: int) -> np.ndarray:
    """tau_a: a -> a, b -> ab."""
    extra = x != a
    pos = np.arange(len(x)) + np.cumsum(extra)
    out = np.full(len(x) + int(extra.sum()), a, dtype=np.uint8)
    out[pos] = x
    return out


def _closure_route(idx: IndexSequence, target_len: int) -> Word:
    w: Word = ()
    k = 0
    while len(w) < target_len:
        k += 1
        w = palindromic_closure(w + (idx.take(k)[-1],))
    return w[:target_len]


def _adic_route(idx: IndexSequence, target_len: int) -> np.ndarray:
    # Justin: Pal(v x) = mu_v(x) Pal(v) with mu_v = tau_{v_1} ... tau_{v_m}, so
    # |mu_v(i_{m+1})| = |w_{m+2}| - |w_{m+1}|.  When the index sequence stops growing that
    # word (e.g. 1 1 1 ...), a letter z outside the alphabet gives mu_v(z) = Pal(v) z.
    m = 0
    while True:
        seq = idx.take(m + 1)
        lengths = _justin_lengths(seq)  # lengths[k] = |w_{k+1}|
        if lengths[m + 1] - lengths[m] >= target_len:
            x = np.array([seq[m]], dtype=np.uint8)
            break
        if lengths[m] >= target_len:
            x = np.array([max(seq) + 1], dtype=np.uint8)
            break
        m += 1
    for a in reversed(seq[:m]):
        x = _tau(x, a)
    return x[:target_len]


def ar_characteristic(idx: IndexSequence, target_len: int) -> Word:
    """Prefix of the characteristic word, by palindromic closure and by the
    morphisms tau; the two constructions are cross-checked."""
    if target_len < 1:
        raise ValueError("target_len must be >= 1")
    closure = _closure_route(idx, target_len)
    adic = _adic_route(idx, target_len)
    if tuple(int(c) for c in adic) != closure:
        raise ConstructionMismatch("palindromic closure and tau-morphism constructions disagree")
    return closure


class ArnouxRauzyGen(SubshiftGen):
    """One-sided characteristic word of an index sequence."""

    two_sided = False

    def __init__(self, idx: IndexSequence):
        self.idx = idx
        self._data = np.zeros(0, dtype=np.uint8)

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return self.idx.letters

    @property
    def aperiodic(self) -> bool:
        return len(self.idx.letters) > 1

    def window(self, i: int, j: int) -> np.ndarray:
        self._check_range(i, j)
        if len(self._data) <= j:
            n = max(j + 1, 2 * len(self._data))
            self._data = np.asarray(ar_characteristic(self.idx, n), dtype=np.uint8)
        return self._data[i: j + 1]

    def describe(self) -> dict:
        return {"family": "arnoux_rauzy", "index": self.idx.describe()}


# interval exchanges ----------------------------------------------------------------------


@dataclass(frozen=True)
class IETSpec:
    """(lambda, tau) interval exchange on [0,1); tau[i-1] is the image position of interval i."""

    lengths: Tuple[Real, ...]
    tau: Tuple[int, ...]

    def __post_init__(self):
        m = len(self.lengths)
        if m < 2:
            raise ValueError("an interval exchange needs at least two intervals")
        if sorted(self.tau) != list(range(1, m + 1)):
            raise ValueError("tau must be a permutation of 1..m")
        vals = [float(l) for l in self.lengths]
        if any(v <= 0 for v in vals):
            raise ValueError("all lengths must be positive")
        if abs(sum(vals) - 1) > 1e-9:
            raise ValueError("lengths must sum to 1")

    @property
    def m(self) -> int:
        return len(self.lengths)

    def irreducible(self) -> bool:
        return all(set(self.tau[:k]) != set(range(1, k + 1)) for k in range(1, self.m))

    def _fixed_lengths(self) -> List[int]:
        fx = [l.fixed() for l in self.lengths[:-1]]
        return fx + [ONE - sum(fx)]

    def cut_points(self) -> List[int]:
        """mu_0 .. mu_m in fixed point."""
        return [0] + list(itertools.accumulate(self._fixed_lengths()))

    def image_cut_points(self) -> List[int]:
        lam = self._fixed_lengths()
        inv = [0] * self.m
        for i, t in enumerate(self.tau):
            inv[t - 1] = i
        return [0] + list(itertools.accumulate(lam[inv[j]] for j in range(self.m)))

    def inverse(self) -> "IETSpec":
        inv = [0] * self.m
        for i, t in enumerate(self.tau):
            inv[t - 1] = i + 1
        return IETSpec(tuple(self.lengths[inv[j] - 1] for j in range(self.m)), tuple(inv))

    def describe(self) -> dict:
        return {"family": "iet", "lengths": [l.label for l in self.lengths], "tau": list(self.tau)}


class _IETMap:
    def __init__(self, spec: IETSpec):
        self.mu = spec.cut_points()
        self.mu_img = spec.image_cut_points()
        self.tau = spec.tau
        self.shift = [self.mu_img[t - 1] - self.mu[i] for i, t in enumerate(self.tau)]
        self._mu_float = np.array(self.mu[1:-1], dtype=float) / ONE

    def interval(self, x: int) -> int:
        """0-based interval index, refusing points inside the tolerance band of a cut."""
        xf = x / ONE
        for k, c in enumerate(self.mu[1:-1]):
            if x != c and abs(xf - c / ONE) < BOUNDARY_BAND:
                raise BoundaryAmbiguityError("orbit point within tolerance of a discontinuity")
        if x != 0 and (xf < BOUNDARY_BAND or xf > 1 - BOUNDARY_BAND):
            raise BoundaryAmbiguityError("orbit point within tolerance of 0")
        lo, hi = 0, len(self.mu) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if x >= self.mu[mid]:
                lo = mid
            else:
                hi = mid
        return lo

    def step(self, x: int) -> Tuple[int, int]:
        i = self.interval(x)
        return i, x + self.shift[i]


def iet_coding(spec: IETSpec, x, i: int, j: int) -> Word:
    return IETGen(spec, x).word(i, j)


class IETGen(SubshiftGen):
    """Coding of the orbit of x, letters 1..m; negative times use the inverse exchange."""

    def __init__(self, spec: IETSpec, x):
        self.spec = spec
        self.x = parse_real(x)
        if not 0 <= float(self.x) < 1:
            raise ValueError("x must lie in [0,1)")
        self._fwd = _IETMap(spec)
        self._bwd = _IETMap(spec.inverse())
        self._cache_f: List[int] = [self.x.fixed()]
        self._cache_b: List[int] = [self.x.fixed()]

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(range(1, self.spec.m + 1))

    @property
    def aperiodic(self) -> bool:
        return self.spec.irreducible() and keane_check(self.spec, 1000)

    def _orbit(self, n: int, forward: bool) -> List[int]:
        cache = self._cache_f if forward else self._cache_b
        tmap = self._fwd if forward else self._bwd
        while len(cache) <= n:
            cache.append(tmap.step(cache[-1])[1])
        return cache

    def window(self, i: int, j: int) -> np.ndarray:
        self._check_range(i, j)
        out = np.zeros(j - i + 1, dtype=np.uint8)
        if j >= 0:
            orb = self._orbit(j, True)
            for n in range(max(i, 0), j + 1):
                out[n - i] = self._fwd.interval(orb[n]) + 1
        if i < 0:
            orb = self._orbit(-i, False)
            for n in range(i, min(j, -1) + 1):
                out[n - i] = self._fwd.interval(orb[-n]) + 1
        return out

    def describe(self) -> dict:
        return {**self.spec.describe(), "x": self.x.label}


def keane_check(spec: IETSpec, N: int) -> bool:
    """False if two points of the forward orbits (N steps) of the interior cut points
    mu_1..mu_{m-1} coincide or come within the tolerance band."""
    if N < 1:
        raise ValueError("N must be >= 1")
    tmap = _IETMap(spec)
    points = []
    for c in tmap.mu[1:-1]:
        x = c
        points.append(x)
        for _ in range(N):
            try:
                x = tmap.step(x)[1]
            except BoundaryAmbiguityError:
                return False
            points.append(x)
    pts = sorted(points)
    if len(set(pts)) < len(pts):
        return False
    gaps = np.diff(np.array(pts, dtype=object)).astype(float) / ONE
    wrap = (ONE - pts[-1] + pts[0]) / ONE
    return bool(gaps.min() >= BOUNDARY_BAND and (len(pts) < 2 or wrap >= BOUNDARY_BAND))


def iet_rotation_relabel(letters: Sequence[int]) -> Word:
    """Map 2-IET letters (1, 2) to the rotation coding with cut lambda_1 (1 on [0, lambda_1))."""
    return tuple(1 if c == 1 else 0 for c in letters)


# spec files --------------------------------------------------------------------------------


def _real_list(values) -> Tuple[Real, ...]:
    return tuple(parse_real(v) for v in values)


def gen_from_spec(spec: dict) -> SubshiftGen:
    """Build a generator from a JSON-style dict with a ``family`` key."""
    family = spec.get("family")
    if family == "rotation":
        alpha = parse_real(spec["alpha"])
        cuts = []
        for c in spec.get("cuts", [spec.get("beta", spec["alpha"])]):
            if isinstance(c, dict):
                cuts.append(Real.lattice(alpha, int(c["k"]), parse_real(c.get("offset", 0))))
            elif c == "alpha":
                cuts.append(alpha)
            else:
                cuts.append(parse_real(c))
        return RotationSpec(alpha, tuple(cuts), parse_real(spec.get("theta", 0)))
    if family == "substitution":
        rule = spec["rule"]
        rule = SubstitutionRule.parse(rule) if isinstance(rule, str) else SubstitutionRule.from_dict(rule)
        seed = spec.get("seed", 0)
        return SubstitutionGen(rule, as_word(seed)[0] if isinstance(seed, str) else int(seed))
    if family == "arnoux_rauzy":
        if "growth" in spec:
            g = spec["growth"]
            idx = IndexSequence.growth(g.get("cycle", [1, 2, 3]), g.get("base", 4), g.get("ratio", 2),
                                       spec.get("prefix", ()))
        else:
            idx = IndexSequence.periodic(spec["period"], spec.get("prefix", ()))
        return ArnouxRauzyGen(idx)
    if family == "iet":
        return IETGen(IETSpec(_real_list(spec["lengths"]), tuple(spec["tau"])), spec.get("x", 0))
    if family == "periodic":
        return PeriodicGen(spec["word"])
    if family == "image":
        rule = spec["rule"]
        rule = SubstitutionRule.parse(rule) if isinstance(rule, str) else SubstitutionRule.from_dict(rule)
        return ImageGen(rule, gen_from_spec(spec["base"]), int(spec.get("shift", 0)))
    if family == "derived":
        base = gen_from_spec(spec["base"])
        return derived_coding(base, spec["word"], int(spec.get("horizon", 10 ** 5))).generator()
    raise ValueError(f"unknown family {family!r}")
