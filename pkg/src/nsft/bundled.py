"""Spec files shipped with the package."""

from __future__ import annotations

import json
from importlib import resources

from .spec_model import MatrixSequenceSpec, parse_spec

# Order used by the default suites; "ab-pow2" and "b-heavy" are extra fixtures
# for the condition checkers.
CORE_SPECS = ("golden-mean", "full3", "ab-linear", "ab-listcycle", "permutation", "mixed23")
EXTRA_SPECS = ("ab-pow2", "b-heavy")


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("nsft.specs").iterdir() if p.name.endswith(".json"))


def bundled_path(name: str):
    return resources.files("nsft.specs") / f"{name}.json"


def bundled_spec(name: str, **kwargs) -> MatrixSequenceSpec:
    path = bundled_path(name)
    if not path.is_file():
        raise KeyError(f"no bundled spec {name!r}; have {bundled_names()}")
    return parse_spec(json.loads(path.read_text(encoding="utf-8")), **kwargs)


def bundled_specs(names=CORE_SPECS) -> list[MatrixSequenceSpec]:
    return [bundled_spec(n) for n in names]
