"""Curve catalog ingestion.

One record per line: ``label [a1,a2,a3,a4,a6] conductor [rank]``; ``#``
starts a comment.
"""

from __future__ import annotations

import hashlib
import re
from importlib import resources
from pathlib import Path

from .coefficients import CurveModel, HeckeSystem, QExpansion, extend_coefficients, hecke_system_from_curve
from .errors import ConfigError

_RECORD = re.compile(r"^(\S+)\s+\[([^\]]*)\]\s+(\d+)(?:\s+(-?\d+))?\s*$")


def _default_text() -> str:
    return resources.files("hlab").joinpath("data/curves.txt").read_text(encoding="utf-8")


def parse_catalog(text: str) -> dict[str, CurveModel]:
    curves: dict[str, CurveModel] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _RECORD.match(line)
        if not m:
            raise ConfigError(f"catalog line {lineno}: cannot parse {raw!r}")
        label, ainvs, conductor, rank = m.groups()
        coeffs = tuple(int(x) for x in ainvs.split(","))
        if len(coeffs) != 5:
            raise ConfigError(f"catalog line {lineno}: need five coefficients")
        if label in curves:
            raise ConfigError(f"catalog line {lineno}: duplicate label {label}")
        curves[label] = CurveModel(label, coeffs, int(conductor), int(rank) if rank is not None else None)
    return curves


def load_catalog(path: str | Path | None = None) -> dict[str, CurveModel]:
    text = Path(path).read_text(encoding="utf-8") if path else _default_text()
    return parse_catalog(text)


def catalog_checksum(path: str | Path | None = None) -> str:
    text = Path(path).read_text(encoding="utf-8") if path else _default_text()
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def catalog_systems(curves: dict[str, CurveModel], pmax: int = 100) -> dict[str, HeckeSystem]:
    return {label: hecke_system_from_curve(c, pmax) for label, c in curves.items()}


def newform(curve: CurveModel | str, B: int, curves: dict[str, CurveModel] | None = None) -> QExpansion:
    """q-expansion of the rational newform attached to a catalog curve."""
    if isinstance(curve, str):
        curve = (curves or load_catalog())[curve]
    return extend_coefficients(hecke_system_from_curve(curve, B), B, label=curve.label)
