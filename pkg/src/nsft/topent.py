"""Topological entropy: norm-growth traces, the metrics ``d_k`` and Bowen distances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import UndecidableError
from .spec_model import MatrixSequenceSpec
from .word_counts import (
    DEFAULT_ENUM_CAP,
    column_sum_walk,
    log_int,
    log_prefix_norms,
    m_eps,
    word_array,
    word_count,
)


@dataclass
class EntropyTrace:
    """Finite-horizon entropy values ``(n, value)`` in nats, plus a tail-window max.

    The tail estimate is ``max(value)`` over ``n`` in ``tail_window``; it is a
    limsup proxy, not a convergence certificate.
    """

    points: list
    tail_estimate: float
    tail_window: tuple

    @classmethod
    def from_points(cls, points: Sequence[tuple[int, float]], window_fraction: float = 0.5) -> "EntropyTrace":
        if not points:
            raise ValueError("empty trace")
        if not 0 <= window_fraction <= 1:
            raise ValueError("window_fraction must lie in [0, 1]")
        hi = points[-1][0]
        lo = max(points[0][0], math.ceil(window_fraction * hi))
        tail = max(v for n, v in points if lo <= n <= hi)
        return cls(list(points), tail, (lo, hi))

    @property
    def horizons(self) -> np.ndarray:
        return np.array([n for n, _ in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])


def topent_trace(
    spec: MatrixSequenceSpec,
    horizon: int,
    window_fraction: float = 0.5,
    norm: str = "sum",
    method: str = "exact",
) -> EntropyTrace:
    """``(n, (1/n) log ||L^{(0,n)}||)`` for ``1 <= n <= horizon``.

    ``norm="sum"`` is the entry sum (so the value is ``log w(0,n) / n``);
    ``norm="col"`` is the max column sum.  ``method="log"`` uses the scaled
    float path instead of exact integers.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if method == "exact":
        pick = {"sum": sum, "col": max}.get(norm)
        if pick is None:
            raise ValueError(f"unknown norm {norm!r}")
        points = [(n, log_int(pick(row)) / n) for n, row in column_sum_walk(spec, 0, horizon) if n >= 1]
    elif method == "log":
        logs = log_prefix_norms(spec, horizon, norm)
        points = [(n, float(logs[n]) / n) for n in range(1, horizon + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    return EntropyTrace.from_points(points, window_fraction)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def is_admissible(spec: MatrixSequenceSpec, k: int, word: Sequence[int]) -> bool:
    if not word or not 0 <= word[0] < spec.alphabet_size(k):
        return False
    return all(spec.matrix_at(k + j)[word[j], word[j + 1]] == 1 for j in range(len(word) - 1))


def _first_difference(x: Sequence[int], y: Sequence[int]) -> int | None:
    for j, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return j
    return None


def _dk(counts: Callable[[int, int], int], k: int, x, y, same_point: bool) -> float:
    j = _first_difference(x, y)
    if j is None:
        if same_point:
            return 0.0
        raise UndecidableError(
            f"words agree on all {min(len(x), len(y))} compared coordinates from index {k}; "
            "pass same_point=True if they denote the same point"
        )
    if j == 0:
        return 1.0
    return 1.0 / counts(k, k + j - 1)


def metric_dk(spec: MatrixSequenceSpec, k: int, x: Sequence[int], y: Sequence[int], same_point: bool = False) -> float:
    """Distance ``d_k`` between points of the index-``k`` space given by finite prefixes.

    ``1`` if the coordinate-``k`` symbols differ, otherwise ``1 / w(k, l)`` with
    ``l`` the last index where the prefixes agree.  Prefixes that agree on
    their whole common length only determine the distance when flagged as the
    same point.
    """
    for w in (x, y):
        if not is_admissible(spec, k, w):
            raise ValueError(f"word {tuple(w)} is not admissible from index {k}")
    return _dk(lambda a, b: word_count(spec, a, b), k, x, y, same_point)


def _bowen(counts, n: int, x, y, same_point: bool) -> float:
    # Term i is d_i of the i-shifted suffixes.  A difference at p <= n makes
    # term p equal to 1 (the maximum possible); otherwise term i is 1/w(i, p-1).
    p = _first_difference(x, y)
    if p is None or p > n:
        return max(_dk(counts, i, x[i:], y[i:], same_point) for i in range(n + 1))
    return 1.0


def bowen_distance(spec: MatrixSequenceSpec, n: int, x: Sequence[int], y: Sequence[int], same_point: bool = False) -> float:
    """``max_{0 <= i <= n} d_i(shift^i x, shift^i y)`` for prefixes starting at index 0."""
    if min(len(x), len(y)) < n + 1:
        raise UndecidableError(f"prefixes shorter than n+1={n + 1}")
    for w in (x, y):
        if not is_admissible(spec, 0, w):
            raise ValueError(f"word {tuple(w)} is not admissible from index 0")
    return _bowen(lambda a, b: word_count(spec, a, b), n, x, y, same_point)


@dataclass
class SeparationReport:
    n: int
    eps: float
    depth: int  # n + m_n(eps)
    set_size: int
    separated_ok: bool
    separation_scale: float  # eps / sup l_i
    min_separation: float
    spanning_ok: bool
    max_spanning_distance: float


def _branch(spec: MatrixSequenceSpec, word: tuple, extra: int) -> tuple[tuple, tuple] | None:
    """First two lexicographic continuations of ``word`` that split, within ``extra`` steps."""
    paths = [word]
    start = len(word) - 1
    for i in range(start, start + extra):
        m = spec.matrix_at(i)
        nxt = [p + (int(b),) for p in paths for b in np.flatnonzero(m[p[-1]])]
        if len(nxt) > 1:
            return nxt[0], nxt[1]
        paths = nxt
    return None


def _bowen_denominator(counts, n: int, x, y) -> int:
    """Integer ``d`` with Bowen distance ``1/d`` for words that first differ somewhere."""
    p = _first_difference(x, y)
    if p is None:
        raise UndecidableError("words agree on their common length")
    if p <= n:
        return 1
    return min(counts(i, p - 1) for i in range(n + 1))


def verify_separated_spanning(
    spec: MatrixSequenceSpec, n: int, eps: float, cap: int = DEFAULT_ENUM_CAP, extra: int = 64
) -> SeparationReport:
    """Check the explicit separated/spanning set that ties entropy to word counts.

    ``E`` holds one point per admissible word ``(x_0..x_D)``, ``D = n + m_n(eps)``,
    continued by its lexicographically first extension.  Separation: every pair
    of members is at Bowen distance ``>= eps / sup l_i``.  Spanning: for each
    member, a point sharing its first ``D + 1`` coordinates but splitting later
    lies within Bowen distance ``< eps``.

    Distances are reciprocals of word counts, so both checks compare exact
    integers against the exact value of ``eps``.  The closest pair of members
    shares the longest common prefix, and in lexicographic order that pair is
    adjacent, so only adjacent pairs are scanned.
    """
    depth = n + m_eps(spec, n, eps)
    words = [tuple(int(s) for s in row) for row in word_array(spec, 0, depth, cap)]
    counts = lru_cache(maxsize=None)(lambda a, b: word_count(spec, a, b))
    e = Fraction(eps)
    scale = e / spec.alphabet_bound

    sep_den = max((_bowen_denominator(counts, n, a, b) for a, b in zip(words, words[1:])), default=None)
    span_den = None
    for w in words:
        pair = _branch(spec, w, extra)
        if pair is not None:
            d = _bowen_denominator(counts, n, *pair)
            span_den = d if span_den is None else min(span_den, d)

    return SeparationReport(
        n=n,
        eps=eps,
        depth=depth,
        set_size=len(words),
        separated_ok=sep_den is None or Fraction(1, sep_den) >= scale,
        separation_scale=float(scale),
        min_separation=math.inf if sep_den is None else 1 / sep_den,
        spanning_ok=span_den is None or Fraction(1, span_den) < e,
        max_spanning_distance=0.0 if span_den is None else 1 / span_den,
    )
