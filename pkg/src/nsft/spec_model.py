"""Finite descriptions of infinite transition-matrix sequences.

A :class:`MatrixSequenceSpec` never stores the sequence ``(L_i)``; it holds a
small label -> matrix table and a pattern that maps an index ``i >= 0`` to a
label.  Every consumer pulls matrices by index through :meth:`matrix_at`.

Symbols are 0-based internally; spec documents and CLI output are 1-based
only where words are printed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Hashable, Mapping, Sequence, Union

import numpy as np

from .errors import HorizonError, SpecParseError

Label = Hashable

DEFAULT_POW2_CAP = 1 << 16
DEFAULT_VALIDATION_HORIZON = 1000


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventuallyPeriodic:
    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("cycle must be nonempty")

    max_index = None

    def label_at(self, i: int) -> Label:
        p = len(self.prefix)
        if i < p:
            return self.prefix[i]
        return self.cycle[(i - p) % len(self.cycle)]

    def labels(self) -> set:
        return set(self.prefix) | set(self.cycle)

    def to_periodic(self) -> "EventuallyPeriodic":
        return self

    def to_document(self) -> dict:
        return {"kind": "eventually-periodic", "prefix": list(self.prefix), "cycle": list(self.cycle)}


@dataclass(frozen=True)
class KRule:
    """Block-length rule ``k_1, k_2, ...`` of an ab-family pattern."""

    kind: str
    values: tuple = ()
    cap: int | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "pow2", "list-cycle"):
            raise ValueError(f"unknown k rule {self.kind!r}")
        if self.kind == "list-cycle":
            if not self.values or any(int(v) < 1 for v in self.values):
                raise ValueError("list-cycle values must be a nonempty list of integers >= 1")

    def k(self, j: int) -> int:
        """Length of the ``j``-th B-block, ``j >= 1``."""
        if j < 1:
            raise ValueError("block index starts at 1")
        if self.kind == "linear":
            return j
        if self.kind == "pow2":
            return 2**j
        return int(self.values[(j - 1) % len(self.values)])

    def to_document(self) -> dict:
        if self.kind == "list-cycle":
            return {"kind": "list-cycle", "values": [int(v) for v in self.values]}
        return {"kind": self.kind}


@dataclass(frozen=True)
class ABFamily:
    """``A B^{k_1} A B^{k_2} A ...`` with block lengths from a :class:`KRule`."""

    a: Label
    b: Label
    k: KRule

    @property
    def max_index(self) -> int | None:
        if self.k.kind == "pow2":
            return self.k.cap if self.k.cap is not None else DEFAULT_POW2_CAP
        return None

    def a_position(self, n: int) -> int:
        """Index of the ``n``-th A (``n = 0`` is index 0)."""
        if self.k.kind == "linear":
            return n * (n + 3) // 2
        if self.k.kind == "pow2":
            return 2 ** (n + 1) - 2 + n
        vals = self.k.values
        period = sum(vals) + len(vals)
        q, r = divmod(n, len(vals))
        return q * period + sum(vals[:r]) + r

    def block_index(self, i: int) -> int:
        """The ``n`` with ``a_position(n) <= i < a_position(n + 1)``."""
        if self.k.kind == "linear":
            n = (math.isqrt(9 + 8 * i) - 3) // 2
        elif self.k.kind == "pow2":
            n = max(0, i.bit_length() - 2)
        else:
            period = sum(self.k.values) + len(self.k.values)
            n = (i // period) * len(self.k.values)
        while self.a_position(n) > i:
            n -= 1
        while self.a_position(n + 1) <= i:
            n += 1
        return n

    def label_at(self, i: int) -> Label:
        cap = self.max_index
        if cap is not None and i > cap:
            raise HorizonError(f"index {i} beyond pow2 generator cap {cap}")
        return self.a if self.a_position(self.block_index(i)) == i else self.b

    def labels(self) -> set:
        return {self.a, self.b}

    def to_periodic(self) -> EventuallyPeriodic | None:
        if self.k.kind != "list-cycle":
            return None
        cycle: list = []
        for v in self.k.values:
            cycle.append(self.a)
            cycle.extend([self.b] * int(v))
        return EventuallyPeriodic((), tuple(cycle))

    def to_document(self) -> dict:
        return {"kind": "ab-family", "a": self.a, "b": self.b, "k": self.k.to_document()}


@dataclass(frozen=True)
class Shifted:
    base: Any
    offset: int

    @property
    def max_index(self) -> int | None:
        cap = self.base.max_index
        return None if cap is None else cap - self.offset

    def label_at(self, i: int) -> Label:
        return self.base.label_at(i + self.offset)

    def labels(self) -> set:
        return self.base.labels()

    def to_periodic(self) -> EventuallyPeriodic | None:
        per = self.base.to_periodic()
        if per is None:
            return None
        p = len(per.prefix)
        if self.offset <= p:
            return EventuallyPeriodic(per.prefix[self.offset:], per.cycle)
        r = (self.offset - p) % len(per.cycle)
        return EventuallyPeriodic((), per.cycle[r:] + per.cycle[:r])


@dataclass(frozen=True)
class KroneckerPattern:
    left: Any
    right: Any

    @property
    def max_index(self) -> int | None:
        caps = [c for c in (self.left.max_index, self.right.max_index) if c is not None]
        return min(caps) if caps else None

    def label_at(self, i: int) -> Label:
        return (self.left.label_at(i), self.right.label_at(i))

    def labels(self) -> set:
        return {(x, y) for x in self.left.labels() for y in self.right.labels()}

    def to_periodic(self) -> EventuallyPeriodic | None:
        lp, rp = self.left.to_periodic(), self.right.to_periodic()
        if lp is None or rp is None:
            return None
        start = max(len(lp.prefix), len(rp.prefix))
        period = math.lcm(len(lp.cycle), len(rp.cycle))
        prefix = tuple(self.label_at(i) for i in range(start))
        cycle = tuple(self.label_at(i) for i in range(start, start + period))
        return EventuallyPeriodic(prefix, cycle)


Pattern = Union[EventuallyPeriodic, ABFamily, Shifted, KroneckerPattern]


# ---------------------------------------------------------------------------
# Spec
# ---------------------------------------------------------------------------


def _freeze(m: Any) -> np.ndarray:
    arr = np.array(m, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("transition matrix must be 2-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MatrixSequenceSpec:
    """Intensional description of the sequence ``(L_i)_{i >= 0}``.

    Instances hash by identity so they can key per-spec caches.
    """

    name: str
    matrices: Mapping[Label, np.ndarray]
    pattern: Pattern
    source: dict | None = field(default=None, repr=False)

    @property
    def max_index(self) -> int | None:
        """Largest index the generator serves, or ``None`` when unbounded."""
        return self.pattern.max_index

    def label_at(self, i: int) -> Label:
        if i < 0:
            raise HorizonError(f"negative index {i}")
        cap = self.max_index
        if cap is not None and i > cap:
            raise HorizonError(f"index {i} beyond generator cap {cap} for spec {self.name!r}")
        return self.pattern.label_at(i)

    def matrix_at(self, i: int) -> np.ndarray:
        return self.matrices[self.label_at(i)]

    def alphabet_size(self, i: int) -> int:
        return self.matrix_at(i).shape[0]

    @cached_property
    def alphabet_bound(self) -> int:
        """``sup_i l_i`` over the matrices the pattern can emit."""
        return max(max(self.matrices[lab].shape) for lab in self.pattern.labels())

    @cached_property
    def row_masks(self) -> dict:
        """Per label: row ``a`` as a bitmask of the columns ``b`` with ``L[a, b] = 1``."""
        out = {}
        for lab, m in self.matrices.items():
            out[lab] = tuple(sum(1 << int(b) for b in np.flatnonzero(row)) for row in m)
        return out

    @cached_property
    def column_support(self) -> dict:
        """Per label: for each column ``b`` the tuple of rows ``a`` with ``L[a, b] = 1``."""
        return {
            lab: tuple(tuple(int(a) for a in np.flatnonzero(m[:, b])) for b in range(m.shape[1]))
            for lab, m in self.matrices.items()
        }

    def to_document(self) -> dict:
        """JSON document for this spec; only eventually-periodic or ab-family patterns serialize."""
        pattern = self.pattern
        if not isinstance(pattern, ABFamily):
            pattern = pattern.to_periodic()
            if pattern is None:
                raise ValueError(f"spec {self.name!r} has no finite eventually-periodic form")
        used = sorted(pattern.labels(), key=_label_str)
        names = {lab: _label_str(lab) for lab in used}
        if len(set(names.values())) != len(names):
            raise ValueError("label names collide after flattening")
        doc_pattern = pattern.to_document()
        if isinstance(pattern, ABFamily):
            doc_pattern["a"], doc_pattern["b"] = names[pattern.a], names[pattern.b]
        else:
            doc_pattern["prefix"] = [names[x] for x in pattern.prefix]
            doc_pattern["cycle"] = [names[x] for x in pattern.cycle]
        return {
            "name": self.name,
            "matrices": {names[lab]: self.matrices[lab].tolist() for lab in used},
            "pattern": doc_pattern,
        }


def _label_str(lab: Label) -> str:
    if isinstance(lab, tuple):
        return "*".join(_label_str(x) for x in lab)
    return str(lab)


def constant_spec(matrix: Any, name: str = "constant", label: str = "L") -> MatrixSequenceSpec:
    """Spec with ``L_i = matrix`` for every ``i``."""
    return MatrixSequenceSpec(name, {label: _freeze(matrix)}, EventuallyPeriodic((), (label,)))


def periodic_spec(matrices: Mapping[str, Any], cycle: Sequence[str], prefix: Sequence[str] = (), name: str = "periodic") -> MatrixSequenceSpec:
    return MatrixSequenceSpec(
        name, {k: _freeze(v) for k, v in matrices.items()}, EventuallyPeriodic(tuple(prefix), tuple(cycle))
    )


def ab_spec(a: Any, b: Any, k: KRule, name: str = "ab-family") -> MatrixSequenceSpec:
    return MatrixSequenceSpec(name, {"A": _freeze(a), "B": _freeze(b)}, ABFamily("A", "B", k))


def shift_spec(spec: MatrixSequenceSpec, s: int = 1) -> MatrixSequenceSpec:
    """The spec of ``(L_{i+s})_{i >= 0}``."""
    if s < 0:
        raise ValueError("shift must be nonnegative")
    return MatrixSequenceSpec(f"{spec.name}>>{s}", spec.matrices, Shifted(spec.pattern, s))


def kronecker_product(a: MatrixSequenceSpec, b: MatrixSequenceSpec) -> MatrixSequenceSpec:
    """Spec of the product system, ``L_i (x) M_i`` entrywise Kronecker."""
    mats = {}
    for la in a.pattern.labels():
        for lb in b.pattern.labels():
            mats[(la, lb)] = _freeze(np.kron(a.matrices[la], b.matrices[lb]))
    return MatrixSequenceSpec(f"{a.name}*{b.name}", mats, KroneckerPattern(a.pattern, b.pattern))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _expect(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise SpecParseError(path, msg)


def _check_keys(obj: Any, path: str, required: set, optional: set = frozenset()) -> None:
    _expect(isinstance(obj, dict), path, "expected an object")
    missing = required - obj.keys()
    _expect(not missing, path, f"missing field(s) {sorted(missing)}")
    unknown = obj.keys() - required - optional
    _expect(not unknown, path, f"unknown field(s) {sorted(unknown)}")


def _parse_matrix(raw: Any, path: str) -> np.ndarray:
    _expect(isinstance(raw, list) and raw, path, "matrix must be a nonempty list of rows")
    width = None
    for r, row in enumerate(raw):
        rpath = f"{path}[{r}]"
        _expect(isinstance(row, list) and row, rpath, "row must be a nonempty list")
        if width is None:
            width = len(row)
        _expect(len(row) == width, rpath, f"row length {len(row)} != {width}")
        for c, x in enumerate(row):
            ok = type(x) is int and x in (0, 1)
            _expect(ok, f"{rpath}[{c}]", f"entry must be 0 or 1, got {x!r}")
    return _freeze(raw)


def _parse_label(raw: Any, path: str, known: Mapping) -> str:
    _expect(isinstance(raw, str), path, "label must be a string")
    _expect(raw in known, path, f"unknown label {raw!r}")
    return raw


def parse_spec(doc: Any, *, pow2_cap: int = DEFAULT_POW2_CAP) -> MatrixSequenceSpec:
    """Build a spec from a decoded JSON document.

    Raises :class:`SpecParseError` naming the offending path on any schema
    violation (missing/unknown field, non 0-1 entry, unknown label).
    """
    _check_keys(doc, "$", {"name", "matrices", "pattern"})
    name = doc["name"]
    _expect(isinstance(name, str), "$.name", "name must be a string")
    raw_mats = doc["matrices"]
    _expect(isinstance(raw_mats, dict) and raw_mats, "$.matrices", "expected a nonempty object")
    mats = {lab: _parse_matrix(m, f"$.matrices.{lab}") for lab, m in raw_mats.items()}

    pat = doc["pattern"]
    _expect(isinstance(pat, dict), "$.pattern", "expected an object")
    kind = pat.get("kind")
    if kind == "eventually-periodic":
        _check_keys(pat, "$.pattern", {"kind", "prefix", "cycle"})
        for key in ("prefix", "cycle"):
            _expect(isinstance(pat[key], list), f"$.pattern.{key}", "expected a list of labels")
        prefix = tuple(_parse_label(x, f"$.pattern.prefix[{j}]", mats) for j, x in enumerate(pat["prefix"]))
        cycle = tuple(_parse_label(x, f"$.pattern.cycle[{j}]", mats) for j, x in enumerate(pat["cycle"]))
        _expect(bool(cycle), "$.pattern.cycle", "cycle must be nonempty")
        pattern: Pattern = EventuallyPeriodic(prefix, cycle)
    elif kind == "ab-family":
        _check_keys(pat, "$.pattern", {"kind", "a", "b", "k"})
        a = _parse_label(pat["a"], "$.pattern.a", mats)
        b = _parse_label(pat["b"], "$.pattern.b", mats)
        rk = pat["k"]
        _expect(isinstance(rk, dict), "$.pattern.k", "expected an object")
        kkind = rk.get("kind")
        if kkind in ("linear", "pow2"):
            _check_keys(rk, "$.pattern.k", {"kind"})
            rule = KRule(kkind, cap=pow2_cap if kkind == "pow2" else None)
        elif kkind == "list-cycle":
            _check_keys(rk, "$.pattern.k", {"kind", "values"})
            vals = rk["values"]
            _expect(isinstance(vals, list) and vals, "$.pattern.k.values", "expected a nonempty list")
            for j, v in enumerate(vals):
                _expect(type(v) is int and v >= 1, f"$.pattern.k.values[{j}]", f"block length must be an integer >= 1, got {v!r}")
            rule = KRule("list-cycle", tuple(vals))
        else:
            raise SpecParseError("$.pattern.k.kind", f"unknown k rule {kkind!r}")
        pattern = ABFamily(a, b, rule)
    else:
        raise SpecParseError("$.pattern.kind", f"unknown pattern kind {kind!r}")
    return MatrixSequenceSpec(name, mats, pattern, source=doc)


def load_spec(path: str | Path, **kwargs) -> MatrixSequenceSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecParseError("$", f"invalid JSON: {exc}") from exc
    return parse_spec(doc, **kwargs)


# ---------------------------------------------------------------------------
# Validation and primitivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    where: Any
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list
    alphabet_bound: int
    checked_horizon: int

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(spec: MatrixSequenceSpec, horizon: int = DEFAULT_VALIDATION_HORIZON) -> ValidationReport:
    """Check 0-1 entries, reducedness and dimension chaining over ``[0, horizon]``.

    Violations are returned as data; nothing is raised.
    """
    violations: list[Violation] = []
    labels = spec.pattern.labels()
    for lab in sorted(labels, key=_label_str):
        m = spec.matrices.get(lab)
        if m is None:
            violations.append(Violation(lab, "unknown-label", f"pattern references missing matrix {lab!r}"))
            continue
        if m.size == 0:
            violations.append(Violation(lab, "empty", f"matrix {lab!r} is empty"))
            continue
        if not np.isin(m, (0, 1)).all():
            violations.append(Violation(lab, "binary", f"matrix {_label_str(lab)} has entries outside {{0,1}}"))
        for r in np.flatnonzero(~m.any(axis=1)):
            violations.append(Violation(lab, "reduced", f"matrix {_label_str(lab)} row {r + 1} is all zero"))
        for c in np.flatnonzero(~m.any(axis=0)):
            violations.append(Violation(lab, "reduced", f"matrix {_label_str(lab)} column {c + 1} is all zero"))
    if any(v.rule in ("unknown-label", "empty") for v in violations):
        return ValidationReport(violations, 0, 0)

    last = horizon if spec.max_index is None else min(horizon, spec.max_index)
    prev = spec.matrix_at(0)
    for i in range(last):
        nxt = spec.matrix_at(i + 1)
        if prev.shape[1] != nxt.shape[0]:
            violations.append(
                Violation(i + 1, "dim-chain", f"L_{i} has {prev.shape[1]} columns but L_{i + 1} has {nxt.shape[0]} rows")
            )
        prev = nxt
    return ValidationReport(violations, spec.alphabet_bound, last)


def _bool_mul(a: tuple, b: tuple) -> tuple:
    out = []
    for row in a:
        acc = 0
        j = 0
        while row:
            if row & 1:
                acc |= b[j]
            row >>= 1
            j += 1
        out.append(acc)
    return tuple(out)


def primitivity_profile(spec: MatrixSequenceSpec, i: int, max_n: int = 4096) -> int | None:
    """Least ``n`` in ``[1, max_n]`` with ``L^{(i, i+n)}`` entrywise positive, else ``None``.

    Products are boolean (bitmask rows), so no integer growth.
    """
    masks = spec.row_masks
    prod = masks[spec.label_at(i)]
    for n in range(1, max_n + 1):
        width = spec.matrix_at(i + n - 1).shape[1]
        full = (1 << width) - 1
        if all(r == full for r in prod):
            return n
        if n == max_n:
            break
        prod = _bool_mul(prod, masks[spec.label_at(i + n)])
    return None
