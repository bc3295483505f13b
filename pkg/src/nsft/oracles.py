"""Brute-force and closed-form oracles for the counting and Parry engines.

Nothing here reuses the engine code paths being checked: products are
formed with a plain Python loop, eigenvectors come from a separate power
iteration, and word counts come from walking transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EnumerationCapError, PrimitivityError
from .parry import DEFAULT_TOL, parry_frames
from .spec_model import MatrixSequenceSpec, constant_spec, kronecker_product
from .topent import topent_trace
from .word_counts import DEFAULT_ENUM_CAP, block_product, prefix_word_counts, word_array


@dataclass
class OracleResult:
    quantity: str
    exact: object
    method: str  # "enumeration" | "closed-form" | "product-factorization" | "power-iteration"
    match: bool
    deviation: float
    tolerance: float = 0.0
    skipped: bool = False


def _result(quantity, exact, method, deviation, tolerance) -> OracleResult:
    return OracleResult(quantity, exact, method, deviation <= tolerance, float(deviation), tolerance)


# ---------------------------------------------------------------------------
# Word counts
# ---------------------------------------------------------------------------


def oracle_word_counts(
    spec: MatrixSequenceSpec, max_depth: int, cap: int = DEFAULT_ENUM_CAP, starts: Sequence[int] = (0,)
) -> list[OracleResult]:
    """Histogram enumerated words by (first, last) symbol and compare with ``L^{(k,k+n)}``.

    One result per ``(start, depth)``; a depth whose enumeration exceeds
    ``cap`` is recorded as skipped.
    """
    out = []
    for k in starts:
        for n in range(max_depth + 1):
            qid = f"{spec.name}:w({k},{k + n})"
            try:
                words = word_array(spec, k, k + n, cap)
            except EnumerationCapError as exc:
                out.append(OracleResult(qid, exc.count, "enumeration", True, 0.0, skipped=True))
                continue
            hist = np.zeros((spec.alphabet_size(k), spec.alphabet_size(k + n)), dtype=np.int64)
            np.add.at(hist, (words[:, 0], words[:, -1]), 1)
            entries = block_product(spec, k, k + n).entries
            bad = sum(int(h != int(e)) for h, e in zip(hist.flat, entries.flat))
            if len(words) != int(sum(entries.flat)):
                bad += 1
            out.append(OracleResult(qid, len(words), "enumeration", bad == 0, float(bad)))
    return out


# ---------------------------------------------------------------------------
# Product systems
# ---------------------------------------------------------------------------


def _matmul(a: list, b: list) -> list:
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def _prefix_sums(spec: MatrixSequenceSpec, horizon: int) -> list[int]:
    size = spec.alphabet_size(0)
    prod = [[int(r == c) for c in range(size)] for r in range(size)]
    out = [size]
    for i in range(horizon):
        prod = _matmul(prod, spec.matrix_at(i).tolist())
        out.append(sum(map(sum, prod)))
    return out


def oracle_product_entropy(
    a: MatrixSequenceSpec, b: MatrixSequenceSpec, horizon: int, chain_horizon: int = 40, tol: float = DEFAULT_TOL
) -> list[OracleResult]:
    """Product-system checks for ``a x b``.

    * word counts of the Kronecker spec factor exactly into the factor counts;
    * when ``a is b``, the product entropy trace is twice the factor trace,
      bit for bit (logs of exact counts are correctly rounded);
    * Parry eigenvalues of the product chain are products of the factor ones.
    """
    prod = kronecker_product(a, b)
    wa, wb = _prefix_sums(a, horizon), _prefix_sums(b, horizon)
    engine = prefix_word_counts(prod, horizon)
    bad = sum(int(x * y != z) for x, y, z in zip(wa, wb, engine))
    out = [OracleResult(f"{prod.name}:w(0,n)", engine[-1], "product-factorization", bad == 0, float(bad))]

    if a is b:
        ta = topent_trace(a, horizon).values
        tp = topent_trace(prod, horizon).values
        dev = float(np.max(np.abs(tp - 2 * ta)))
        out.append(_result(f"{prod.name}:topent=2x", float(tp[-1]), "product-factorization", dev, 0.0))

    ca = parry_frames(a, chain_horizon, tol)
    cb = parry_frames(b, chain_horizon, tol)
    cp = parry_frames(prod, chain_horizon, tol)
    dev = float(np.max(np.abs(cp.lambdas - ca.lambdas * cb.lambdas) / (ca.lambdas * cb.lambdas)))
    out.append(_result(f"{prod.name}:lambda", float(cp.lambdas[0]), "product-factorization", dev, 1e-9))
    return out


# ---------------------------------------------------------------------------
# Stationary Parry measure
# ---------------------------------------------------------------------------


def is_primitive_matrix(matrix) -> bool:
    """Wielandt test: a primitive ``n x n`` matrix has ``A^{(n-1)^2+1} > 0``."""
    m = (np.asarray(matrix) > 0).astype(np.int64)
    n = m.shape[0]
    if m.shape != (n, n):
        return False
    p = np.eye(n, dtype=np.int64)
    for _ in range((n - 1) ** 2 + 1):
        p = np.minimum(p @ m, 1)
    return bool((p > 0).all())


def _power_iteration(m: np.ndarray, iters: int = 200000, tol: float = 1e-15) -> tuple[float, np.ndarray]:
    # Averaging with the identity keeps primitive matrices aperiodic-safe and
    # does not move the eigenvector.
    n = m.shape[0]
    shifted = (m + np.eye(n)) / 2
    x = np.full(n, 1.0 / n)
    for _ in range(iters):
        y = shifted @ x
        y /= y.sum()
        if np.abs(y - x).sum() < tol:
            x = y
            break
        x = y
    lam = float((m @ x).sum() / x.sum())
    return lam, x


def stationary_parry_data(matrix) -> dict:
    """Classical Parry data ``lambda, w (right, simplex), v (left), pi``."""
    m = np.asarray(matrix, dtype=float)
    if not is_primitive_matrix(m):
        raise PrimitivityError("matrix is not primitive")
    lam, w = _power_iteration(m)
    _, v = _power_iteration(m.T)
    v = v / (v @ w)
    return {"lambda": lam, "w": w, "v": v, "pi": v * w}


def oracle_stationary_parry(matrix, tol: float = 1e-9, horizon: int = 8) -> OracleResult:
    """Compare engine frames of the constant spec against the classical Parry data.

    The chain is seeded with the left Perron vector so every frame is the
    stationary one; deviation is the max over frames of ``lambda``, ``w``,
    ``pi`` and ``P`` (``P[a,b] = L[a,b] w[b] / (lambda w[a])``).
    """
    data = stationary_parry_data(matrix)
    m = np.asarray(matrix, dtype=float)
    chain = parry_frames(constant_spec(matrix, name="stationary"), horizon, v0=data["v"])
    P = m * data["w"][None, :] / (data["lambda"] * data["w"][:, None])
    dev = 0.0
    for f in chain.frames:
        dev = max(
            dev,
            abs(f.lam - data["lambda"]) / data["lambda"],
            float(np.abs(f.w - data["w"]).max()),
            float(np.abs(f.pi - data["pi"]).max()),
            float(np.abs(f.P - P).max()),
        )
    return _result(f"parry[{m.shape[0]}x{m.shape[0]}]", data["lambda"], "power-iteration", dev, tol)


def random_primitive_matrix(size: int, seed: int, density: float = 0.5) -> np.ndarray:
    """First draw from ``default_rng(seed)`` that is reduced and primitive."""
    rng = np.random.default_rng(seed)
    while True:
        m = (rng.random((size, size)) < density).astype(np.int64)
        if m.sum(axis=0).all() and m.sum(axis=1).all() and is_primitive_matrix(m):
            return m


# ---------------------------------------------------------------------------
# Default suite
# ---------------------------------------------------------------------------


def run_oracle_suite(specs: Sequence[MatrixSequenceSpec] | None = None, max_depth: int = 10) -> list[OracleResult]:
    """Word-count oracles on ``specs`` (default: the bundled set), plus product and stationary checks."""
    from .bundled import bundled_spec, bundled_specs

    if specs is None:
        specs = bundled_specs()
    out = []
    for spec in specs:
        out.extend(oracle_word_counts(spec, max_depth))
    golden, full = bundled_spec("golden-mean"), bundled_spec("full3")
    out.extend(oracle_product_entropy(golden, golden, 60))
    out.extend(oracle_product_entropy(golden, full, 60))
    out.append(oracle_stationary_parry(golden.matrices["G"]))
    out.append(oracle_stationary_parry(full.matrices["F"]))
    out.append(oracle_stationary_parry(random_primitive_matrix(4, seed=7), tol=1e-8))
    return out
