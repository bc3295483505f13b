"""``nsft`` command line.

Exit codes: 0 success, 1 domain failure (validation, convergence, oracle
mismatch), 2 usage or I/O error.  Output is deterministic for a given
command line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bundled import bundled_names, bundled_spec
from .errors import ConvergenceError, NSFTError, SpecParseError
from .metent import DEFAULT_EPS_GRID, metent_grid, metent_trace
from .oracles import run_oracle_suite
from .parry import DEFAULT_TOL, parry_frames, sample_path
from .spec_model import MatrixSequenceSpec, kronecker_product, load_spec, primitivity_profile, validate
from .topent import topent_trace
from .word_counts import DEFAULT_ENUM_CAP, n_tilde

COMMANDS = ("validate", "topent", "parry", "metent", "oracle", "product")
DEFAULT_HORIZON = {"validate": 1000, "topent": 1000, "parry": 20, "metent": 500, "oracle": 10, "product": 0}
PRIMITIVITY_RANGE = 32


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    specs: list
    horizon: int
    eps: float | None
    eps_grid: tuple
    tol: float
    window: float
    out: str | None
    format: str
    unit: str
    seed: int | None
    dump_p: bool = False

    def __post_init__(self):
        if self.horizon < 1 and self.command != "product":
            raise UsageError("--horizon must be >= 1")
        if self.eps is not None and not 0 < self.eps <= 1:
            raise UsageError("--eps must lie in (0, 1]")
        if not self.tol > 0:
            raise UsageError("--tol must be > 0")
        if not 0 <= self.window <= 1:
            raise UsageError("--window must lie in [0, 1]")

    @property
    def scale(self) -> float:
        return math.log(2) if self.unit == "bits" else 1.0


def _parse_grid(text: str) -> tuple:
    """``lo:hi`` as base-2 exponents, e.g. ``3:12`` is ``2^-3 .. 2^-12``."""
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected lo:hi with integer exponents, e.g. 3:12") from exc
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError("need 0 <= lo <= hi")
    return tuple(2.0**-j for j in range(lo, hi + 1))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsft", description="Entropy of nonstationary subshifts of finite type.")
    p.add_argument("--version", action="version", version=f"nsft {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("specs", nargs="*", metavar="SPEC", help="spec JSON file or bundled spec name")
    p.add_argument("--horizon", type=int, help="trace length / chain horizon / oracle depth")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--eps", type=float, help="single scale (metent emits the full trace)")
    grid.add_argument("--eps-grid", type=_parse_grid, default=DEFAULT_EPS_GRID, help="exponents lo:hi (default 3:12)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--window", type=float, default=0.5, help="tail window fraction")
    p.add_argument("--unit", choices=("nats", "bits"), default="nats")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, help="parry: also sample a path with this seed")
    p.add_argument("--dump-p", action="store_true", help="parry: append the stochastic matrices P_i")
    return p


def _load(ref: str) -> MatrixSequenceSpec:
    path = Path(ref)
    if not path.exists() and ref in bundled_names():
        return bundled_spec(ref)
    return load_spec(path)


def _num(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class Emitter:
    """Collects header metadata and rows, then writes CSV or JSON."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.meta: list[tuple[str, object]] = []
        self.columns: list[str] = []
        self.rows: list[list] = []
        self.blocks: list[tuple[str, list]] = []

    def note(self, key: str, value) -> None:
        self.meta.append((key, value))

    def render(self) -> str:
        if self.cfg.format == "json":
            doc = {
                "meta": {k: v for k, v in self.meta},
                "columns": self.columns,
                "rows": self.rows,
            }
            if self.blocks:
                doc["blocks"] = {title: rows for title, rows in self.blocks}
            return json.dumps(doc, indent=2, default=_json_default) + "\n"
        buf = io.StringIO(newline="")
        for k, v in self.meta:
            buf.write(f"# {k}={_num(v)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        if self.columns:
            writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow(["" if x is None else _num(x) for x in row])
        for title, rows in self.blocks:
            buf.write(f"# block={title}\n")
            for row in rows:
                writer.writerow([_num(x) for x in row])
        return buf.getvalue()


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _common_meta(em: Emitter, cfg: RunConfig, spec: MatrixSequenceSpec | None = None) -> None:
    em.note("nsft", __version__)
    em.note("command", cfg.command)
    if spec is not None:
        em.note("spec", spec.name)
    em.note("horizon", cfg.horizon)
    em.note("tol", cfg.tol)
    em.note("window", cfg.window)
    em.note("unit", cfg.unit)
    em.note("enum_cap", DEFAULT_ENUM_CAP)


def _need_specs(cfg: RunConfig, lo: int, hi: int) -> None:
    if not lo <= len(cfg.specs) <= hi:
        want = str(lo) if lo == hi else f"{lo}..{hi}"
        raise UsageError(f"{cfg.command} takes {want} SPEC argument(s), got {len(cfg.specs)}")


# ---------------------------------------------------------------------------
# Commands (each returns (exit code, Emitter or raw text))
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig):
    _need_specs(cfg, 1, 1)
    spec = _load(cfg.specs[0])
    report = validate(spec, cfg.horizon)
    em = Emitter(cfg)
    _common_meta(em, cfg, spec)
    em.note("checked_horizon", report.checked_horizon)
    em.note("alphabet_bound", report.alphabet_bound)
    em.note("ok", str(report.ok).lower())
    if report.ok:
        last = PRIMITIVITY_RANGE if spec.max_index is None else min(PRIMITIVITY_RANGE, spec.max_index)
        prof = [primitivity_profile(spec, i) for i in range(last + 1)]
        em.note("primitivity_N", " ".join("none" if n is None else str(n) for n in prof))
    em.columns = ["where", "rule", "message"]
    em.rows = [[_where(v.where), v.rule, v.message] for v in report.violations]
    return (0 if report.ok else 1), em


def _where(w) -> str:
    return "*".join(map(str, w)) if isinstance(w, tuple) else str(w)


def cmd_topent(cfg: RunConfig):
    _need_specs(cfg, 1, 1)
    spec = _load(cfg.specs[0])
    tr = topent_trace(spec, cfg.horizon, cfg.window)
    em = Emitter(cfg)
    _common_meta(em, cfg, spec)
    em.note("norm", "sum")
    em.note("tail_window", f"{tr.tail_window[0]}:{tr.tail_window[1]}")
    em.note("tail_estimate", tr.tail_estimate / cfg.scale)
    em.columns = ["horizon", "value"]
    em.rows = [[n, v / cfg.scale] for n, v in tr.points]
    return 0, em


def cmd_parry(cfg: RunConfig):
    _need_specs(cfg, 1, 1)
    spec = _load(cfg.specs[0])
    chain = parry_frames(spec, cfg.horizon, cfg.tol)
    em = Emitter(cfg)
    _common_meta(em, cfg, spec)
    em.note("v0", "ones")
    em.note("tail_depth", chain.tail_depth_used)
    em.note("residual", chain.convergence_residual)
    if cfg.seed is not None:
        path = sample_path(chain, 0, chain.horizon + 1, cfg.seed)
        em.note("seed", cfg.seed)
        em.note("sample_path", " ".join(str(x + 1) for x in path))
    width = spec.alphabet_bound
    em.columns = ["i", "lambda"] + [f"{v}_{j}" for v in ("w", "v", "pi") for j in range(1, width + 1)]
    for f in chain.frames:
        row = [f.i, f.lam]
        for vec in (f.w, f.v, f.pi):
            row.extend(list(vec) + [None] * (width - len(vec)))
        em.rows.append(row)
    if cfg.dump_p:
        em.blocks = [(f"P_{f.i}", [[float(x) for x in r] for r in f.P]) for f in chain.frames]
    return 0, em


def cmd_metent(cfg: RunConfig):
    _need_specs(cfg, 1, 1)
    spec = _load(cfg.specs[0])
    em = Emitter(cfg)
    _common_meta(em, cfg, spec)
    em.note("v0", "ones")
    if cfg.eps is not None:
        chain = parry_frames(spec, n_tilde(spec, cfg.horizon, cfg.eps), cfg.tol)
        tr = metent_trace(spec, chain, cfg.eps, cfg.horizon, cfg.window)
        em.note("eps", cfg.eps)
        em.note("tail_window", f"{tr.tail_window[0]}:{tr.tail_window[1]}")
        em.note("tail_estimate", tr.tail_estimate / cfg.scale)
        em.columns = ["horizon", "value"]
        em.rows = [[n, v / cfg.scale] for n, v in tr.points]
        return 0, em
    res = metent_grid(spec, cfg.horizon, cfg.eps_grid, cfg.window, cfg.tol)
    em.note("eps_grid", " ".join(_num(e) for e in cfg.eps_grid))
    em.note("chain_horizon", res.chain_horizon)
    em.note("grid_max", res.value / cfg.scale)
    em.columns = ["eps", "tail_estimate", "status"]
    em.rows = [[e, None if v is None else v / cfg.scale, "finite" if v is None else "ok"] for e, v in res.rows]
    return 0, em


def cmd_oracle(cfg: RunConfig):
    _need_specs(cfg, 0, 2)
    specs = [_load(s) for s in cfg.specs] or None
    results = run_oracle_suite(specs, max_depth=cfg.horizon)
    em = Emitter(cfg)
    _common_meta(em, cfg)
    bad = [r for r in results if not r.match]
    em.note("checks", len(results))
    em.note("mismatches", len(bad))
    em.columns = ["quantity", "method", "match", "skipped", "deviation", "tolerance", "exact"]
    em.rows = [
        [r.quantity, r.method, str(r.match).lower(), str(r.skipped).lower(), r.deviation, r.tolerance, r.exact]
        for r in results
    ]
    return (1 if bad else 0), em


def cmd_product(cfg: RunConfig):
    _need_specs(cfg, 2, 2)
    a, b = (_load(s) for s in cfg.specs)
    doc = kronecker_product(a, b).to_document()
    return 0, json.dumps(doc, indent=2) + "\n"


HANDLERS = {
    "validate": cmd_validate,
    "topent": cmd_topent,
    "parry": cmd_parry,
    "metent": cmd_metent,
    "oracle": cmd_oracle,
    "product": cmd_product,
}


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            specs=args.specs,
            horizon=DEFAULT_HORIZON[args.command] if args.horizon is None else args.horizon,
            eps=args.eps,
            eps_grid=args.eps_grid,
            tol=args.tol,
            window=args.window,
            out=args.out,
            format=args.format,
            unit=args.unit,
            seed=args.seed,
            dump_p=args.dump_p,
        )
        code, result = HANDLERS[cfg.command](cfg)
        text = result if isinstance(result, str) else result.render()
        _write(text, cfg.out)
    except UsageError as exc:
        print(f"nsft: usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, SpecParseError) as exc:
        print(f"nsft: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"nsft: convergence failure: {exc}", file=sys.stderr)
        return 1
    except (NSFTError, ValueError) as exc:
        print(f"nsft: {exc}", file=sys.stderr)
        return 1
    if code == 1 and cfg.command == "validate":
        for row in getattr(result, "rows", []):
            print(f"nsft: violation {row[0]} [{row[1]}]: {row[2]}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
