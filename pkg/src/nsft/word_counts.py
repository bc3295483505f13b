"""Exact block products, admissible-word counts and scale indices.

Block products ``L^{(k,n)} = L_k ... L_{n-1}`` are kept as numpy object
arrays of Python ints, so every count is exact.  A log-domain float path
(:func:`log_prefix_norms`) exists for horizons where bignums get expensive.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import EnumerationCapError, FiniteShiftError
from .spec_model import MatrixSequenceSpec

DEFAULT_ENUM_CAP = 10**6
DEFAULT_M_CAP = 10**4


@dataclass(frozen=True)
class BlockProduct:
    start: int
    stop: int
    entries: np.ndarray  # object dtype, Python ints

    @property
    def total(self) -> int:
        return int(sum(self.entries.flat))


def _exact(m: np.ndarray) -> np.ndarray:
    return np.array(m.tolist(), dtype=object)


def block_product(spec: MatrixSequenceSpec, k: int, n: int) -> BlockProduct:
    """Exact ``L^{(k,n)}``; the empty product ``k == n`` is the identity of size ``l_k``."""
    if n < k:
        raise ValueError(f"need n >= k, got k={k}, n={n}")
    prod = _exact(np.eye(spec.alphabet_size(k), dtype=np.int64))
    for i in range(k, n):
        prod = prod.dot(_exact(spec.matrix_at(i)))
    return BlockProduct(k, n, prod)


class PrefixProducts:
    """Single-owner accumulator walking ``L^{(0,n)}`` for ``n = 0, 1, 2, ...``.

    >>> acc = PrefixProducts(spec)        # doctest: +SKIP
    >>> for n, prod in acc.walk(10): ...  # doctest: +SKIP
    """

    def __init__(self, spec: MatrixSequenceSpec, start: int = 0):
        self.spec = spec
        self.start = start
        self.n = start
        self.product = _exact(np.eye(spec.alphabet_size(start), dtype=np.int64))
        self._cache: dict = {}

    def _factor(self, i: int) -> np.ndarray:
        lab = self.spec.label_at(i)
        f = self._cache.get(lab)
        if f is None:
            f = self._cache[lab] = _exact(self.spec.matrices[lab])
        return f

    def advance(self) -> np.ndarray:
        self.product = self.product.dot(self._factor(self.n))
        self.n += 1
        return self.product

    def walk(self, stop: int) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(n, L^{(start,n)})`` from the current position through ``stop``."""
        yield self.n, self.product
        while self.n < stop:
            self.advance()
            yield self.n, self.product


def column_sum_walk(spec: MatrixSequenceSpec, start: int, stop: int) -> Iterator[tuple[int, list]]:
    """Yield ``(n, 1^t L^{(start,n)})`` as exact int lists, ``n = start..stop``.

    Cheaper than full products when only column sums (or their total, the
    word count) are needed.
    """
    support = spec.column_support
    row = [1] * spec.alphabet_size(start)
    yield start, row
    for i in range(start, stop):
        cols = support[spec.label_at(i)]
        row = [sum(row[a] for a in preds) for preds in cols]
        yield i + 1, row


def word_count(spec: MatrixSequenceSpec, n: int, m: int) -> int:
    """``w(n, m)``: number of admissible words ``(x_n, ..., x_m)``."""
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    for _, row in column_sum_walk(spec, n, m):
        pass
    return sum(row)


def prefix_word_counts(spec: MatrixSequenceSpec, horizon: int) -> list[int]:
    """``[w(0, 0), w(0, 1), ..., w(0, horizon)]``."""
    return [sum(row) for _, row in column_sum_walk(spec, 0, horizon)]


def log_prefix_norms(spec: MatrixSequenceSpec, horizon: int, norm: str = "sum") -> np.ndarray:
    """Float path: ``log ||L^{(0,n)}||`` for ``n = 0..horizon``.

    Each step multiplies the running product by the next matrix, divides by
    its largest entry and adds the log of that scale to an accumulator.
    ``norm`` is ``"sum"`` (entry sum) or ``"col"`` (max column sum, the
    operator norm induced by the l1 vector norm).
    """
    prod = np.eye(spec.alphabet_size(0))
    log_scale = 0.0
    out = np.empty(horizon + 1)
    for n in range(horizon + 1):
        out[n] = log_scale + math.log(_matrix_norm(prod, norm))
        if n == horizon:
            break
        prod = prod @ spec.matrix_at(n)
        s = prod.max()
        prod /= s
        log_scale += math.log(s)
    return out


def _matrix_norm(prod, norm: str):
    if norm == "sum":
        return prod.sum()
    if norm == "col":
        return prod.sum(axis=0).max()
    raise ValueError(f"unknown norm {norm!r}")


_LOG_CONTEXT = decimal.Context(prec=40)


def log_int(x: int) -> float:
    """Natural log of a positive integer, rounded once from a 40-digit value.

    Unlike ``math.log`` this is (up to a vanishing double-rounding chance)
    correctly rounded, so identities such as ``log(x*x) == 2*log(x)`` hold
    bit for bit.
    """
    if x <= 0:
        raise ValueError("log of a nonpositive count")
    return float(_LOG_CONTEXT.ln(decimal.Decimal(x)))


def exact_log_norm(prod: np.ndarray, norm: str = "sum") -> float:
    if norm == "sum":
        return log_int(int(sum(prod.flat)))
    if norm == "col":
        return log_int(int(max(sum(prod[:, j]) for j in range(prod.shape[1]))))
    raise ValueError(f"unknown norm {norm!r}")


# ---------------------------------------------------------------------------
# Brute-force enumeration (oracle side: walks transitions, never multiplies)
# ---------------------------------------------------------------------------


def word_array(spec: MatrixSequenceSpec, n: int, m: int, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """All admissible words ``(x_n..x_m)`` as rows of an int array, lexicographic order."""
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    words = np.arange(spec.alphabet_size(n), dtype=np.int16)[:, None]
    for i in range(n, m):
        allowed = spec.matrix_at(i)[words[:, -1]].astype(bool)
        rows, cols = np.nonzero(allowed)
        if len(rows) > cap:
            total = word_count(spec, n, m)
            if total > cap:
                raise EnumerationCapError(total, cap)
        words = np.column_stack([words[rows], cols.astype(np.int16)])
    if len(words) > cap:
        raise EnumerationCapError(len(words), cap)
    return words


def enumerate_words(spec: MatrixSequenceSpec, n: int, m: int, cap: int = DEFAULT_ENUM_CAP) -> list[tuple[int, ...]]:
    """Lexicographically sorted list of admissible words ``(x_n, ..., x_m)``, 0-based symbols."""
    return [tuple(int(x) for x in row) for row in word_array(spec, n, m, cap)]


# ---------------------------------------------------------------------------
# Scale indices
# ---------------------------------------------------------------------------


def m_eps(spec: MatrixSequenceSpec, n: int, eps: float, cap: int = DEFAULT_M_CAP) -> int:
    """``m_n(eps) = min{m >= 0 : w(n, n+m) > 1/eps}``."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    e = Fraction(eps)
    total = 0
    for stop, row in column_sum_walk(spec, n, n + cap):
        total = sum(row)
        if total * e > 1:
            return stop - n
    raise FiniteShiftError(n, eps, cap, total)


def m_eps_profile(spec: MatrixSequenceSpec, k: int, eps: float, cap: int = DEFAULT_M_CAP) -> list[int]:
    """``[m_0(eps), ..., m_k(eps)]``."""
    return [m_eps(spec, i, eps, cap) for i in range(k + 1)]


def n_tilde_profile(spec: MatrixSequenceSpec, k: int, eps: float, cap: int = DEFAULT_M_CAP) -> list[int]:
    """``[ñ_0(eps), ..., ñ_k(eps)]`` with ``ñ_j = max_{i <= j} (i + m_i)``."""
    out, best = [], -1
    for i, m in enumerate(m_eps_profile(spec, k, eps, cap)):
        best = max(best, i + m)
        out.append(best)
    return out


def n_tilde(spec: MatrixSequenceSpec, k: int, eps: float, cap: int = DEFAULT_M_CAP) -> int:
    return n_tilde_profile(spec, k, eps, cap)[-1]
