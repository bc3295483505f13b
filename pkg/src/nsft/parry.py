"""Nonstationary Parry measure: eigenvector sequences, stochastic matrices, cylinder measures.

Column vectors ``w_i`` come from backward tail truncation: ``w_i`` is the
simplex-normalized ``L^{(i, i+T)} u`` for a uniform seed ``u``, with ``T``
doubled until two successive estimates agree.  Row vectors come from forward
iteration of ``v̂_{i+1} = v̂_i L_i`` from a positive seed (all ones by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConvergenceError, HorizonError, PrimitivityError
from .spec_model import MatrixSequenceSpec, primitivity_profile
from .word_counts import word_array

DEFAULT_TOL = 1e-12
DEFAULT_MAX_TAIL = 2048


@dataclass(frozen=True)
class TailEstimate:
    w: np.ndarray
    depth: int
    residual: float


def _tail_vector(spec: MatrixSequenceSpec, i: int, depth: int) -> np.ndarray:
    x = np.full(spec.alphabet_size(i + depth), 1.0 / spec.alphabet_size(i + depth))
    for j in range(i + depth - 1, i - 1, -1):
        x = spec.matrix_at(j) @ x
        x /= x.sum()
    return x


def _not_primitive(spec: MatrixSequenceSpec, i: int, max_tail: int) -> bool:
    return primitivity_profile(spec, i, max_tail) is None


def w_tail(spec: MatrixSequenceSpec, i: int, tol: float = DEFAULT_TOL, max_tail: int = DEFAULT_MAX_TAIL) -> TailEstimate:
    """Simplex eigenvector ``w_i`` by doubling the tail depth until l1-Cauchy within ``tol``."""
    depth = 1
    prev = _tail_vector(spec, i, depth)
    residual = math.inf
    while 2 * depth <= max_tail:
        cur = _tail_vector(spec, i, 2 * depth)
        residual = float(np.abs(cur - prev).sum())
        depth *= 2
        prev = cur
        if residual < tol:
            if not (cur > 0).all():
                raise PrimitivityError(f"tail vector at index {i} has zero entries")
            return TailEstimate(cur, depth, residual)
    if _not_primitive(spec, i, max_tail):
        raise PrimitivityError(f"no positive block product L^({i},{i}+n) for n <= {max_tail}")
    raise ConvergenceError(f"w_{i} not converged with tail depth {depth}", residual)


@dataclass(frozen=True)
class ParryFrame:
    i: int
    w: np.ndarray
    v: np.ndarray
    lam: float
    pi: np.ndarray
    P: np.ndarray


class ParryChain:
    """Frames ``0..horizon`` of a Parry invariant measure sequence.

    Immutable after construction.  ``ws`` holds one extra vector
    (``w_{horizon+1}``) because ``lambda_horizon`` and ``P_horizon`` need it.
    """

    def __init__(self, spec, ws, vs, lambdas, v0, tail_depth, residual):
        self.spec = spec
        self.horizon = len(lambdas) - 1
        self.ws = ws
        self.vs = vs
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.v0 = v0
        self.tail_depth_used = tail_depth
        self.convergence_residual = residual
        self.pis = [v * w for v, w in zip(vs, ws)]
        self.Ps = [
            spec.matrix_at(i) * ws[i + 1][None, :] / (self.lambdas[i] * ws[i][:, None])
            for i in range(self.horizon + 1)
        ]
        self.log_lambda_prefix = np.concatenate([[0.0], np.cumsum(np.log(self.lambdas))])

    @cached_property
    def v0_is_ones(self) -> bool:
        return bool(np.all(self.v0 == 1.0))

    def frame(self, i: int) -> ParryFrame:
        self._check(i)
        return ParryFrame(i, self.ws[i], self.vs[i], float(self.lambdas[i]), self.pis[i], self.Ps[i])

    @property
    def frames(self) -> list[ParryFrame]:
        return [self.frame(i) for i in range(self.horizon + 1)]

    def _check(self, i: int, limit: int | None = None) -> None:
        limit = self.horizon if limit is None else limit
        if not 0 <= i <= limit:
            raise HorizonError(f"index {i} outside chain range [0, {limit}]")


def _backward_sweep(spec: MatrixSequenceSpec, last: int, seed_index: int):
    x = np.full(spec.alphabet_size(seed_index), 1.0 / spec.alphabet_size(seed_index))
    ws: list = [None] * (last + 1)
    lambdas = np.empty(last)
    for j in range(seed_index - 1, -1, -1):
        y = spec.matrix_at(j) @ x
        s = y.sum()
        x = y / s
        if j <= last:
            ws[j] = x
        if j < last:
            lambdas[j] = s
    return ws, lambdas


def parry_frames(
    spec: MatrixSequenceSpec,
    horizon: int,
    tol: float = DEFAULT_TOL,
    v0=None,
    max_tail: int = DEFAULT_MAX_TAIL,
) -> ParryChain:
    """Build the Parry chain on ``[0, horizon]``.

    All ``w_i`` are produced by one backward sweep from a uniform seed at
    index ``horizon + 1 + T``; ``T`` doubles until the sweeps for ``T`` and
    ``2T`` agree in l1 within ``tol`` at every ``i <= horizon + 1``.  Each
    ``w_i`` is therefore a tail estimate of depth ``>= T`` and the relation
    ``L_i w_{i+1} = lambda_i w_i`` holds to rounding.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    last = horizon + 1
    cap = spec.max_index
    depth = 1
    ws, lambdas = _backward_sweep(spec, last, last + depth)
    residual = math.inf
    converged = False
    while 2 * depth <= max_tail:
        if cap is not None and last + 2 * depth > cap:
            raise HorizonError(f"tail depth {2 * depth} beyond generator cap {cap}")
        ws2, lambdas2 = _backward_sweep(spec, last, last + 2 * depth)
        residual = max(float(np.abs(a - b).sum()) for a, b in zip(ws, ws2))
        ws, lambdas, depth = ws2, lambdas2, 2 * depth
        if residual < tol:
            converged = True
            break
    if not converged:
        if _not_primitive(spec, last, max_tail):
            raise PrimitivityError(f"no positive block product from index {last} within {max_tail} steps")
        raise ConvergenceError(f"tail sweep not converged at depth {depth}", residual)
    for j, w in enumerate(ws):
        if not (w > 0).all():
            raise PrimitivityError(f"w_{j} has zero entries; sequence not primitive near index {j}")

    if v0 is None:
        v0 = np.ones(spec.alphabet_size(0))
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (spec.alphabet_size(0),) or not (v0 > 0).all():
        raise ValueError("v0 must be a strictly positive vector of length l_0")
    vs = []
    vhat = v0.copy()
    for i in range(horizon + 1):
        vs.append(vhat / (vhat @ ws[i]))
        vhat = vhat @ spec.matrix_at(i)
        vhat /= vhat.sum()
    return ParryChain(spec, ws, vs, lambdas[: horizon + 1], v0, depth, residual)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def log_lambda_block(chain: ParryChain, k: int, m: int) -> float:
    if m < k:
        raise ValueError("need m >= k")
    chain._check(k, chain.horizon + 1)
    chain._check(m, chain.horizon + 1)
    return float(chain.log_lambda_prefix[m] - chain.log_lambda_prefix[k])


def lambda_block(chain: ParryChain, k: int, m: int) -> float:
    """``lambda^{(k,m)} = lambda_k ... lambda_{m-1}`` (1 when ``k == m``).

    Raises ``OverflowError`` past the float range; :func:`log_lambda_block`
    never does.
    """
    return math.exp(log_lambda_block(chain, k, m))


def _admissible_mask(spec: MatrixSequenceSpec, k: int, words: np.ndarray) -> np.ndarray:
    ok = np.ones(len(words), dtype=bool)
    for j in range(words.shape[1] - 1):
        ok &= spec.matrix_at(k + j)[words[:, j], words[:, j + 1]] == 1
    return ok


def cylinder_measures(chain: ParryChain, k: int, words: np.ndarray) -> np.ndarray:
    """Markov-product route for many cylinders ``[.x_k..x_m]`` (rows of ``words``)."""
    words = np.atleast_2d(np.asarray(words))
    m = k + words.shape[1] - 1
    chain._check(k)
    chain._check(m)
    out = chain.pis[k][words[:, 0]].copy()
    for j in range(words.shape[1] - 1):
        out *= chain.Ps[k + j][words[:, j], words[:, j + 1]]
    return out


def cylinder_measures_closed(chain: ParryChain, k: int, words: np.ndarray) -> np.ndarray:
    """Closed-form route ``v_k[x_k] w_m[x_m] / lambda^{(k,m)}``; inadmissible words get 0."""
    words = np.atleast_2d(np.asarray(words))
    m = k + words.shape[1] - 1
    chain._check(k)
    chain._check(m)
    out = chain.vs[k][words[:, 0]] * chain.ws[m][words[:, -1]] * math.exp(-log_lambda_block(chain, k, m))
    return np.where(_admissible_mask(chain.spec, k, words), out, 0.0)


def cylinder_measure(chain: ParryChain, k: int, word) -> float:
    """``mu_k([.x_k..x_m])`` by the Markov product; 0 for inadmissible words."""
    return float(cylinder_measures(chain, k, np.asarray(word)[None, :])[0])


def cylinder_measure_closed(chain: ParryChain, k: int, word) -> float:
    return float(cylinder_measures_closed(chain, k, np.asarray(word)[None, :])[0])


@dataclass
class InvarianceReport:
    k: int
    depth: int
    checked: int
    max_deviation: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_deviation < self.tol


def verify_invariance(chain: ParryChain, k: int, depth: int, tol: float = 1e-8) -> InvarianceReport:
    """Check ``sum_{x_k} mu_k([.x_k x_{k+1}..x_m]) = mu_{k+1}([.x_{k+1}..x_m])``.

    Every admissible cylinder of the index-``(k+1)`` space with ``m - k <= depth``
    is checked by direct summation over preimage cylinders.
    """
    spec = chain.spec
    worst, checked = 0.0, 0
    for m in range(k + 1, k + depth + 1):
        target = word_array(spec, k + 1, m)
        rhs = cylinder_measures(chain, k + 1, target)
        index = {row.tobytes(): r for r, row in enumerate(target)}
        full = word_array(spec, k, m)
        mu = cylinder_measures(chain, k, full)
        lhs = np.zeros(len(target))
        suffix = np.ascontiguousarray(full[:, 1:])
        np.add.at(lhs, [index[row.tobytes()] for row in suffix], mu)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
        checked += len(target)
    return InvarianceReport(k, depth, checked, worst, tol)


def sample_path(chain: ParryChain, k: int, length: int, seed: int) -> tuple[int, ...]:
    """Draw ``(x_k, ..., x_{k+length-1})``: ``x_k ~ pi_k``, then rows of ``P_i``."""
    if length < 1:
        raise ValueError("length must be >= 1")
    chain._check(k)
    chain._check(k + length - 1)
    rng = np.random.default_rng(seed)

    def draw(p: np.ndarray) -> int:
        c = np.cumsum(p)
        return min(int(np.searchsorted(c, rng.random() * c[-1], side="right")), len(p) - 1)

    path = [draw(chain.pis[k])]
    for i in range(k, k + length - 1):
        path.append(draw(chain.Ps[i][path[-1]]))
    return tuple(path)
