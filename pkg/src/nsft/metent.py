"""Metric entropy of the Parry measure sequence and finite-range condition checkers.

Verdicts from the ``check_*`` functions describe the checked range only:
``pass`` means the condition held on every index examined, never the
asymptotic statement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import FiniteShiftError, HorizonError, PrimitivityError
from .parry import DEFAULT_TOL, ParryChain, cylinder_measures, log_lambda_block, parry_frames
from .spec_model import MatrixSequenceSpec, primitivity_profile
from .topent import EntropyTrace
from .word_counts import (
    DEFAULT_ENUM_CAP,
    DEFAULT_M_CAP,
    block_product,
    column_sum_walk,
    m_eps,
    n_tilde_profile,
    word_array,
)

DEFAULT_EPS_GRID = tuple(2.0**-j for j in range(3, 13))


def _shannon(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _closed_value(pi: np.ndarray, colsums: Sequence[int]) -> float:
    return _shannon(pi) + float(sum(pk * math.log(c) for pk, c in zip(pi, colsums)))


def _require_ones(chain: ParryChain) -> None:
    if not chain.v0_is_ones:
        raise ValueError(
            "closed-form partition entropy assumes v0 = all ones; "
            "use partition_entropy_direct for other seeds"
        )


def partition_entropy_closed(spec: MatrixSequenceSpec, chain: ParryChain, k: int) -> float:
    """``H_{mu_0}`` of the depth-``k`` cylinder partition via ``H(pi_k) + sum_b pi_k[b] log colsum_b``.

    Column sums of the exact block product ``L^{(0,k)}``.
    """
    _require_ones(chain)
    chain._check(k)
    colsums = block_product(spec, 0, k).entries.sum(axis=0)
    return _closed_value(chain.pis[k], colsums)


def partition_entropy_direct(chain: ParryChain, k: int, cap: int = DEFAULT_ENUM_CAP) -> float:
    """``-sum mu log mu`` over the enumerated admissible cylinders ``[.x_0..x_k]``."""
    words = word_array(chain.spec, 0, k, cap)
    return _shannon(cylinder_measures(chain, 0, words))


def metent_trace(
    spec: MatrixSequenceSpec,
    chain: ParryChain,
    eps: float,
    horizon: int,
    window_fraction: float = 0.5,
) -> EntropyTrace:
    """Points ``(k, H_{mu_0}(cylinders to depth ñ_k(eps)) / k)`` for ``1 <= k <= horizon``."""
    _require_ones(chain)
    depths = n_tilde_profile(spec, horizon, eps)
    if depths[-1] > chain.horizon:
        raise HorizonError(f"chain horizon {chain.horizon} < ñ_{horizon}(eps) = {depths[-1]}")
    need = set(depths[1:])
    values = {}
    for n, row in column_sum_walk(spec, 0, depths[-1]):
        if n in need:
            values[n] = _closed_value(chain.pis[n], row)
    points = [(k, values[depths[k]] / k) for k in range(1, horizon + 1)]
    return EntropyTrace.from_points(points, window_fraction)


def lambda_lower_bound_trace(chain: ParryChain, horizon: int, window_fraction: float = 0.5) -> EntropyTrace:
    """Points ``(k, log lambda^{(0,k)} / k)``."""
    points = [(k, log_lambda_block(chain, 0, k) / k) for k in range(1, horizon + 1)]
    return EntropyTrace.from_points(points, window_fraction)


@dataclass
class MetentGrid:
    """Metric entropy over an eps grid; ``value`` is the max of the per-eps tail estimates."""

    rows: list  # (eps, tail_estimate or None when the shift is finite at that scale)
    value: float
    finite_shift: bool
    chain_horizon: int
    traces: dict = field(default_factory=dict, repr=False)


def metent_grid(
    spec: MatrixSequenceSpec,
    horizon: int,
    eps_grid: Iterable[float] = DEFAULT_EPS_GRID,
    window_fraction: float = 0.5,
    tol: float = DEFAULT_TOL,
    chain: ParryChain | None = None,
    m_cap: int = DEFAULT_M_CAP,
) -> MetentGrid:
    """Run :func:`metent_trace` for every eps and take the max of the tail estimates.

    Scales where word counts never exceed ``1/eps`` (a finite shift, e.g. a
    permutation sequence) are recorded with ``None``; if that happens for every
    eps the entropy is reported as 0, the entropy of a shift on finitely many
    points.
    """
    eps_grid = list(eps_grid)
    depth_for = {}
    for eps in eps_grid:
        try:
            depth_for[eps] = n_tilde_profile(spec, horizon, eps, m_cap)[-1]
        except FiniteShiftError:
            depth_for[eps] = None
    need = max((d for d in depth_for.values() if d is not None), default=horizon)
    if chain is None or chain.horizon < need:
        chain = parry_frames(spec, need, tol)
    rows, traces = [], {}
    for eps in eps_grid:
        if depth_for[eps] is None:
            rows.append((eps, None))
            continue
        tr = metent_trace(spec, chain, eps, horizon, window_fraction)
        traces[eps] = tr
        rows.append((eps, tr.tail_estimate))
    finite = all(v is None for _, v in rows)
    value = 0.0 if finite else max(v for _, v in rows if v is not None)
    return MetentGrid(rows, value, finite, chain.horizon, traces)


# ---------------------------------------------------------------------------
# Condition checkers
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    condition: str
    params: dict
    verdict: str  # "pass" | "fail" | "inconclusive"
    witnesses: list = field(default_factory=list)
    trace: EntropyTrace | None = None
    details: dict = field(default_factory=dict)


def _maximizers(colsums: Sequence[int]) -> list[int]:
    top = max(colsums)
    return [g for g, c in enumerate(colsums) if c == top]


def _row_walk(spec: MatrixSequenceSpec, k: int, gamma: int, stop: int):
    """Yield ``(n, row gamma of L^{(k,n)})`` exactly for ``n = k..stop``."""
    support = spec.column_support
    row = [0] * spec.alphabet_size(k)
    row[gamma] = 1
    yield k, row
    for i in range(k, stop):
        row = [sum(row[a] for a in preds) for preds in support[spec.label_at(i)]]
        yield i + 1, row


def check_maximizer_positivity(
    spec: MatrixSequenceSpec, eps: float, k_range: tuple[int, int], slack: int = 4
) -> ConditionReport:
    """Best receivers broadcast everywhere at every scale finer than ``eps``.

    For each ``k`` in ``k_range`` (inclusive) and every ``gamma`` maximizing the
    column sums of ``L^{(0,k)}`` (all ties), require ``L^{(k,k+m)}[gamma, beta] >= 1``
    for all ``beta`` and all ``m`` in ``[m_k(eps), m_k(eps) + slack]``.  Stops at
    the first violation, which is returned as a ``(k, gamma, beta)`` witness.
    On a finite shift (no ``m_k(eps)``) the scan covers ``m = 1 .. 1 + slack``.
    """
    k0, k1 = k_range
    params = {"eps": eps, "k_range": (k0, k1), "slack": slack}
    for k, colsums in column_sum_walk(spec, 0, k1):
        if k < k0:
            continue
        try:
            mk = m_eps(spec, k, eps)
        except FiniteShiftError:
            # counts never pass 1/eps, so no block is ever positive; scan the first few
            mk = 1
        for gamma in _maximizers(colsums):
            for n, row in _row_walk(spec, k, gamma, k + mk + slack):
                if n - k < mk:
                    continue
                for beta, val in enumerate(row):
                    if val < 1:
                        return ConditionReport(
                            "maximizer-positivity", params, "fail", [(k, gamma, beta)], details={"m": n - k}
                        )
    return ConditionReport("maximizer-positivity", params, "pass")


def primitivity_indices(spec: MatrixSequenceSpec, horizon: int, max_n: int = 4096) -> list[int]:
    """``[N_0, ..., N_horizon]``; raises :class:`PrimitivityError` when one is missing."""
    out = []
    for k in range(horizon + 1):
        nk = primitivity_profile(spec, k, max_n)
        if nk is None:
            raise PrimitivityError(f"no positive block product L^({k},{k}+n) for n <= {max_n}")
        out.append(nk)
    return out


def check_primitivity_growth(
    spec: MatrixSequenceSpec,
    chain: ParryChain,
    horizon: int,
    pass_tol: float = 1e-2,
    fail_threshold: float = 0.1,
    window_fraction: float = 0.5,
    max_n: int = 4096,
) -> ConditionReport:
    """Trace ``(k, log lambda^{(k, k+N_k)} / k)`` and judge whether it vanishes.

    ``pass``: tail-window max below ``pass_tol``.  ``fail``: tail-window max at
    least ``fail_threshold`` and ``log lambda^{(k,k+N_k)}`` itself larger on the
    tail window than anywhere before it (the block eigenvalue keeps growing).
    Otherwise ``inconclusive``.  Also reports the largest ``N_k`` seen, the
    uniform-primitivity diagnostic.
    """
    ns = primitivity_indices(spec, horizon, max_n)
    need = max(k + nk for k, nk in enumerate(ns))
    if need > chain.horizon + 1:
        raise HorizonError(f"chain horizon {chain.horizon} too short; need lambda up to index {need}")
    logs = [log_lambda_block(chain, k, k + ns[k]) for k in range(horizon + 1)]
    trace = EntropyTrace.from_points([(k, logs[k] / k) for k in range(1, horizon + 1)], window_fraction)
    lo = trace.tail_window[0]
    head_max = max(logs[:lo], default=-math.inf)
    tail_max = max(logs[lo:])
    if trace.tail_estimate < pass_tol:
        verdict = "pass"
    elif trace.tail_estimate >= fail_threshold and tail_max > head_max:
        verdict = "fail"
    else:
        verdict = "inconclusive"
    witnesses = [] if verdict != "fail" else [max(trace.points, key=lambda p: p[1] if p[0] >= lo else -math.inf)]
    return ConditionReport(
        "primitivity-growth",
        {"horizon": horizon, "pass_tol": pass_tol, "fail_threshold": fail_threshold},
        verdict,
        witnesses,
        trace,
        {"N": ns, "max_N": max(ns), "min_N": min(ns)},
    )


def check_uniform_primitivity(spec: MatrixSequenceSpec, horizon: int, window_fraction: float = 0.5, max_n: int = 4096) -> ConditionReport:
    """Range-limited boundedness of ``N_k``: pass when the tail window never exceeds the head's max."""
    ns = primitivity_indices(spec, horizon, max_n)
    lo = max(1, math.ceil(window_fraction * horizon))
    head, tail = max(ns[:lo]), max(ns[lo:], default=0)
    verdict = "pass" if tail <= head else "fail"
    witnesses = [] if verdict == "pass" else [(k, nk) for k, nk in enumerate(ns) if k >= lo and nk > head][:1]
    return ConditionReport(
        "uniform-primitivity", {"horizon": horizon}, verdict, witnesses, details={"N": ns, "max_N": max(ns)}
    )


def check_maximizer_mass(
    spec: MatrixSequenceSpec,
    chain: ParryChain,
    delta: float,
    eps: float,
    k_range: tuple[int, int],
) -> ConditionReport:
    """Best receivers reach a set of ``pi``-mass at least ``1 - delta``.

    For each ``k`` and each maximizing ``gamma``, ``B = {beta : L^{(k,n_k)}[gamma, beta] >= 1}``
    with ``n_k = k + m_k(eps)`` must carry ``pi_{n_k}``-mass ``>= 1 - delta``.
    The first violation is returned as a ``(k, gamma, mass)`` witness.
    """
    k0, k1 = k_range
    params = {"delta": delta, "eps": eps, "k_range": (k0, k1)}
    worst = math.inf
    for k, colsums in column_sum_walk(spec, 0, k1):
        if k < k0:
            continue
        nk = k + m_eps(spec, k, eps)
        chain._check(nk)
        pi = chain.pis[nk]
        for gamma in _maximizers(colsums):
            for _, row in _row_walk(spec, k, gamma, nk):
                pass
            mass = float(sum(p for p, val in zip(pi, row) if val >= 1))
            worst = min(worst, mass)
            if mass < 1 - delta:
                return ConditionReport(
                    "maximizer-mass", params, "fail", [(k, gamma, mass)], details={"n_k": nk}
                )
    return ConditionReport("maximizer-mass", params, "pass", details={"min_mass": worst})
