"""One-parameter families of q-expansions and scans along them.

Two kinds of family are supported:

* Segment(f1, f2): F_t = t f1 + (1 - t) f2, coefficientwise. The result is
  no longer a Hecke eigen-series and is flagged as such.
* AngleHomotopy(base, target): every Frobenius angle moves linearly from the
  base system to the target profile; primes absent from the target stay at
  the base angle. Each F_t is extended in deformed mode.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .coefficients import (
    DEFORMED,
    AngleProfile,
    CurveModel,
    HeckeSystem,
    QExpansion,
    extend_coefficients,
    linear_combination,
    theta_from_ap,
)
from .errors import DivergentCuspIntegral, DomainError, TailTooLarge
from .lattice import ELLIPTIC, classify_quotient
from .modgroup import DomainMesh
from .pathint import PathSpec, l_value_at_1, period_lattice, with_fricke_sign
from .petersson import petersson_pairing

SEGMENT = "segment"
ANGLE_HOMOTOPY = "angle_homotopy"

CSV_COLUMNS = (
    "t", "kind",
    "re_omega1", "im_omega1", "re_omega2", "im_omega2",
    "class", "re_j", "im_j",
    "re_L", "im_L", "L_error",
)


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    steps: int
    f1: QExpansion | None = None
    f2: QExpansion | None = None
    base: HeckeSystem | None = None
    target: AngleProfile | None = None
    B: int | None = None
    paths: tuple[PathSpec, PathSpec] | None = None
    label: str = ""

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("a family needs at least two steps")
        if self.kind == SEGMENT:
            if self.f1 is None or self.f2 is None:
                raise ValueError("Segment needs both endpoints")
        elif self.kind == ANGLE_HOMOTOPY:
            if self.base is None or self.target is None or not self.B:
                raise ValueError("AngleHomotopy needs base, target and B")
        else:
            raise ValueError(f"unknown family kind {self.kind!r}")

    @property
    def ts(self) -> list[float]:
        return [k / (self.steps - 1) for k in range(self.steps)]

    @property
    def level(self) -> int | None:
        if self.kind == SEGMENT:
            return self.f1.level if self.f1.level == self.f2.level else None
        return None

    def describe(self) -> dict:
        d = {"kind": self.kind, "steps": self.steps, "label": self.label}
        if self.kind == SEGMENT:
            d["f1"] = self.f1.label
            d["f2"] = self.f2.label
            d["B"] = min(self.f1.B, self.f2.B)
        else:
            d["base_origin"] = self.base.origin
            d["target"] = {str(p): v for p, v in sorted(self.target.angles.items())}
            d["B"] = self.B
        if self.paths:
            d["paths"] = [p.to_text() for p in self.paths]
        return d


def _source_angles(base: HeckeSystem) -> dict[int, float]:
    # every prime, bad ones included: in deformed mode all primes are treated alike
    return {p: theta_from_ap(a, p) for p, a in base.ap.items()}


def materialize(spec: FamilySpec, t: float) -> QExpansion:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t = {t} outside [0, 1]")
    if spec.kind == SEGMENT:
        F = linear_combination([(t, spec.f1), (1.0 - t, spec.f2)], label=f"{spec.label or 'segment'}@{t:.6g}")
        return F  # hecke flag is None: not an eigen-series
    src = _source_angles(spec.base)
    angles = dict(src)
    for p, theta in spec.target.angles.items():
        if p in src:
            angles[p] = (1.0 - t) * src[p] + t * theta
    return extend_coefficients(AngleProfile(angles), spec.B, DEFORMED, label=f"{spec.label or 'homotopy'}@{t:.6g}")


# ------------------------------------------------------------------ reports


@dataclass
class StepRecord:
    t: float
    kind: str
    omega1: complex | None = None
    omega2: complex | None = None
    classification: str | None = None
    j: complex | None = None
    L: complex | None = None
    L_error: float | None = None
    pairings: dict[str, complex] = field(default_factory=dict)
    pairing_errors: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)


@dataclass
class FamilyReport:
    spec: dict
    records: list[StepRecord]
    notes: list[str] = field(default_factory=list)
    crossing_t: float | None = None

    def __post_init__(self):
        ts = [r.t for r in self.records]
        if ts and (ts[0] != 0.0 or ts[-1] != 1.0 or any(b <= a for a, b in zip(ts, ts[1:]))):
            raise ValueError("steps must increase strictly from 0 to 1")

    @property
    def flagged(self) -> list[float]:
        return [r.t for r in self.records if r.flags]

    def pairing_names(self) -> list[str]:
        names: list[str] = []
        for r in self.records:
            for k in r.pairings:
                if k not in names:
                    names.append(k)
        return names

    def to_csv(self) -> str:
        names = self.pairing_names()
        cols = list(CSV_COLUMNS)
        for n in names:
            cols += [f"re_pair_{n}", f"im_pair_{n}", f"err_pair_{n}"]
        cols.append("flags")
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(cols)
        for r in self.records:
            row = [_num(r.t), r.kind, *_cplx(r.omega1), *_cplx(r.omega2), r.classification or "",
                   *_cplx(r.j), *_cplx(r.L), _num(r.L_error)]
            for n in names:
                row += [*_cplx(r.pairings.get(n)), _num(r.pairing_errors.get(n))]
            row.append(";".join(r.flags))
            wr.writerow(row)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "notes": self.notes,
            "crossing_t": self.crossing_t,
            "csv_sha256": hashlib.sha256(self.to_csv().encode()).hexdigest(),
            "flagged_t": self.flagged,
        }


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _cplx(z) -> tuple[str, str]:
    if z is None:
        return "", ""
    z = complex(z)
    return repr(z.real), repr(z.imag)


def _empty_report(spec: FamilySpec) -> FamilyReport:
    rep = FamilyReport(spec.describe(), [StepRecord(t, spec.kind) for t in spec.ts])
    if spec.kind == SEGMENT:
        rep.notes.append("segment members are not Hecke eigen-series")
        if spec.f1.level != spec.f2.level:
            rep.notes.append(
                f"endpoints of levels {spec.f1.level} and {spec.f2.level}: no family of a single level connects them"
            )
    return rep


# -------------------------------------------------------------------- scans


def scan_degeneracy(spec: FamilySpec, tol: float = 1e-9) -> FamilyReport:
    if spec.paths is None:
        raise ValueError("scan_degeneracy needs period paths")
    rep = _empty_report(spec)
    for rec in rep.records:
        F = materialize(spec, rec.t)
        try:
            L = period_lattice(F, *spec.paths)
        except (DivergentCuspIntegral, TailTooLarge) as exc:
            rec.flags.append(f"{type(exc).__name__}")
            continue
        rec.omega1, rec.omega2 = L.omega1, L.omega2
        cl = classify_quotient(L, tol)
        rec.classification = cl.kind
        rec.j = cl.j
        if cl.kind != ELLIPTIC:
            rec.flags.append("degenerate")
    return rep


def _segment_l_value(spec: FamilySpec, t: float) -> tuple[complex, float]:
    """L(F_t, 1) for a segment of modular forms of one level N.

    The integral from 0 to i infinity is split at i/sqrt(N): the upper part
    uses the coefficients of F_t, the lower part each endpoint's own
    transformation law.
    """
    f1, f2 = with_fricke_sign(spec.f1), with_fricke_sign(spec.f2)
    N = spec.level
    x = 2 * math.pi / math.sqrt(N)
    B = min(f1.B, f2.B)
    n = np.arange(1, B + 1)
    kern = np.exp(-x * n) / n
    Ft = materialize(spec, t)
    upper = (Ft.coeffs[:B] * kern).sum()
    lower = ((t * f1.fricke * f1.coeffs[:B] + (1 - t) * f2.fricke * f2.coeffs[:B]) * kern).sum()
    xm = math.exp(-x)
    tail = 2 * 2 * (t * f1.growth + (1 - t) * f2.growth) * xm ** (B + 1) / (1 - xm)
    return complex(upper + lower), tail


def family_l_value(spec: FamilySpec, t: float) -> tuple[complex, float, str]:
    F = materialize(spec, t)
    if F.is_modular or F.matched:
        est = l_value_at_1(F, "smoothedsum")
        return complex(est.value), est.error, "smoothedsum"
    if spec.kind == SEGMENT and spec.level and spec.f1.level and spec.f2.level:
        v, e = _segment_l_value(spec, t)
        return v, e, "fricke-split"
    if spec.kind == SEGMENT and spec.f1.level and spec.f2.level:
        # endpoints of different levels: the defining integral is linear in F
        a = l_value_at_1(spec.f1, "smoothedsum")
        b = l_value_at_1(spec.f2, "smoothedsum")
        v = t * complex(a.value) + (1 - t) * complex(b.value)
        return v, t * a.error + (1 - t) * b.error, "endpoint-linear"
    est = l_value_at_1(F, "termwise")
    return complex(est.value), math.nan, "termwise"


def scan_l_vanishing(spec: FamilySpec, tol: float = 1e-8) -> FamilyReport:
    """L(F_t, 1) at every step; steps with |L| <= tol are flagged."""
    rep = _empty_report(spec)
    methods = set()
    for rec in rep.records:
        v, e, how = family_l_value(spec, rec.t)
        methods.add(how)
        rec.L, rec.L_error = v, (None if math.isnan(e) else e)
        if abs(v) <= tol:
            rec.flags.append("L_vanishes")
    rep.notes.append("L methods: " + ",".join(sorted(methods)))
    return rep


def scan_pairing_sign(spec: FamilySpec, G: QExpansion, mesh: DomainMesh, name: str = "G") -> FamilyReport:
    """(G, F_t) at every step, with the positivity and sign-change rules."""
    rep = _empty_report(spec)
    for rec in rep.records:
        F = materialize(spec, rec.t)
        p = petersson_pairing(G, F, mesh)
        rec.pairings[name] = p.value
        rec.pairing_errors[name] = p.total_error
    first, last = rep.records[0], rep.records[-1]
    p0, p1 = first.pairings[name], last.pairings[name]
    e0, e1 = first.pairing_errors[name], last.pairing_errors[name]

    def positive(v, e):
        return v.real > e and abs(v.imag) <= max(e, 1e-9 * abs(v))

    if positive(p0, e0) and positive(p1, e1):
        for rec in rep.records:
            if not rec.pairings[name].real > rec.pairing_errors[name]:
                rec.flags.append("positivity_violated")
        rep.notes.append("both endpoint pairings positive: positivity asserted at every step")
    elif p0.real * p1.real < 0 and abs(p0.real) > e0 and abs(p1.real) > e1:
        # P(t) = t P(1) + (1 - t) P(0)
        rep.crossing_t = float(p0.real / (p0.real - p1.real))
        for a, b in zip(rep.records, rep.records[1:]):
            if a.pairings[name].real * b.pairings[name].real <= 0:
                b.flags.append("sign_change")
        rep.notes.append(f"sign change located at t = {rep.crossing_t:.12g}")
    else:
        rep.notes.append("endpoints do not qualify: values reported only")
    return rep


def affinity_residual(values: Sequence[complex], ts: Sequence[float]) -> float:
    """max |v(t) - (t v(1) + (1-t) v(0))| over the steps."""
    v0, v1 = complex(values[0]), complex(values[-1])
    return max(abs(complex(v) - (t * v1 + (1 - t) * v0)) for v, t in zip(values, ts))


# -------------------------------------------------------------- rank verdict

RANK0 = "Rank0"
RANK1 = "Rank1"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class RankVerdict:
    label: str
    verdict: str
    citation: str
    details: Mapping[str, float]

    def to_record(self) -> dict:
        return {"label": self.label, "verdict": self.verdict, "citation": self.citation, "details": dict(self.details)}


def rank_report(curve: CurveModel, evidence: Mapping) -> RankVerdict:
    """Apply the cited implications to numerical evidence.

    evidence keys: ``L`` (value of L(f,1)), ``tol``; optionally
    ``pairing`` and ``pairing_error`` from gross_zagier_pairing.
    Nothing here proves a rank.
    """
    L = abs(complex(evidence["L"]))
    tol = float(evidence["tol"])
    details = {"abs_L": L, "tol": tol}
    if L > 10 * tol:
        return RankVerdict(curve.label, RANK0, "L(f,1) != 0 implies rank 0 (Coates-Wiles)", details)
    if L <= tol and "pairing" in evidence:
        pv, pe = float(evidence["pairing"]), float(evidence.get("pairing_error", 0.0))
        details.update(pairing=pv, pairing_error=pe)
        if abs(pv) > pe and pv != 0:
            return RankVerdict(
                curve.label, RANK1,
                "L(f,1) = 0 with nonzero Heegner pairing gives L'(f,1) != 0, hence rank 1 (Kolyvagin)",
                details,
            )
    return RankVerdict(curve.label, INCONCLUSIVE, "evidence inside the indeterminate band", details)


def run_manifest(spec: FamilySpec, report: FamilyReport, extra: Mapping | None = None) -> str:
    body = {"family": report.to_json()}
    if extra:
        body.update(extra)
    return json.dumps(body, indent=2, sort_keys=True)
