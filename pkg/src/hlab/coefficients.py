"""Hecke coefficient systems: point counts, Frobenius angles, q-expansions.

Two recurrence modes are kept strictly apart:

* ``"newform"``: a_{p^{r+1}} = a_p a_{p^r} - delta_N(p) p a_{p^{r-1}}
* ``"deformed"``: a_{p^{r+1}} = a_p a_{p^r} - p a_{p^{r-1}} at every prime

Both use coprime multiplicativity a_{mn} = a_m a_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .arith import (
    divisor_counts,
    factor,
    is_prime,
    legendre_table,
    primes_up_to,
    smallest_prime_factor_table,
)
from .errors import (
    BadReduction,
    DomainError,
    HasseBoundViolation,
    MissingPrime,
    SingularModel,
)

NEWFORM = "newform"
DEFORMED = "deformed"
MODES = (NEWFORM, DEFORMED)


@dataclass(frozen=True)
class CurveModel:
    """Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6."""

    label: str
    ainvs: tuple[int, int, int, int, int]
    conductor: int
    known_rank: int | None = None

    def __post_init__(self):
        if len(self.ainvs) != 5:
            raise ValueError("need five Weierstrass coefficients")
        object.__setattr__(self, "ainvs", tuple(int(a) for a in self.ainvs))
        if self.discriminant == 0:
            raise SingularModel(f"{self.label}: discriminant is zero")
        if self.conductor < 1:
            raise ValueError("conductor must be positive")
        bad = {p for p, _ in factor(abs(self.discriminant))}
        for p, _ in factor(self.conductor) if self.conductor > 1 else ():
            if p not in bad:
                raise ValueError(f"{self.label}: {p} | N but the model has good reduction at {p}")

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c4(self) -> int:
        b2, b4, _, _ = self.b_invariants
        return b2 * b2 - 24 * b4

    @property
    def c6(self) -> int:
        b2, b4, b6, _ = self.b_invariants
        return -(b2**3) + 36 * b2 * b4 - 216 * b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    def is_good(self, p: int) -> bool:
        return self.conductor % p != 0


def _check_prime(p: int) -> None:
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")


def count_points(curve: CurveModel, p: int) -> int:
    """#E(F_p) including the point at infinity, for a good prime p."""
    _check_prime(p)
    if not curve.is_good(p):
        raise BadReduction(f"{curve.label}: p={p} divides the conductor {curve.conductor}")
    return _count_projective(curve, p)


def _count_projective(curve: CurveModel, p: int) -> int:
    a1, a2, a3, a4, a6 = (a % p for a in curve.ainvs)
    x = np.arange(p, dtype=np.int64)
    rhs = (((x + a2) * x + a4) % p * x + a6) % p
    lin = (a1 * x + a3) % p
    if p == 2:
        y = np.arange(2, dtype=np.int64)
        lhs = (y[None, :] * y[None, :] + lin[:, None] * y[None, :]) % 2
        return 1 + int(np.count_nonzero(lhs == rhs[:, None]))
    # (2y + a1 x + a3)^2 = 4 rhs + lin^2; y <-> 2y + lin is a bijection of F_p
    sq = legendre_table(p)
    disc = (4 * rhs + lin * lin) % p
    return 1 + int(sq[disc].sum())


def count_points_character_sum(curve: CurveModel, p: int) -> int:
    """Independent counter: Euler-criterion character sum (odd p), case split for p = 2."""
    _check_prime(p)
    a1, a2, a3, a4, a6 = curve.ainvs
    total = 1
    for x in range(p):
        B = (a1 * x + a3) % p
        C = (x**3 + a2 * x * x + a4 * x + a6) % p
        if p == 2:
            # y^2 + B y = C over F_2
            if B == 0:
                total += 1
            else:
                total += 2 if C == 0 else 0
            continue
        d = (B * B + 4 * C) % p
        chi = 0 if d == 0 else (1 if pow(d, (p - 1) // 2, p) == 1 else -1)
        total += 1 + chi
    return total


def reduction_type(curve: CurveModel, p: int) -> str:
    """'good', 'split', 'nonsplit' or 'additive' read off the reduced curve."""
    _check_prime(p)
    a1, a2, a3, a4, a6 = (a % p for a in curve.ainvs)
    sing = None
    for x in range(p):
        for y in range(p):
            f = (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % p
            fx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % p
            fy = (2 * y + a1 * x + a3) % p
            if f == 0 and fx == 0 and fy == 0:
                sing = (x, y)
                break
        if sing:
            break
    if sing is None:
        return "good"
    x0, y0 = sing
    # shift the node to the origin: quadratic part y^2 + a1 x y - (3 x0 + a2) x^2
    A2 = (3 * x0 + a2) % p
    roots = sum(1 for t in range(p) if (t * t + a1 * t - A2) % p == 0)
    return {2: "split", 0: "nonsplit", 1: "additive"}[roots]


def ap_from_curve(curve: CurveModel, p: int) -> int:
    _check_prime(p)
    if curve.is_good(p):
        return 1 + p - _count_projective(curve, p)
    return {"split": 1, "nonsplit": -1, "additive": 0, "good": 1 + p - _count_projective(curve, p)}[
        reduction_type(curve, p)
    ]


def theta_from_ap(a_p: float, p: int) -> float:
    bound = 2.0 * math.sqrt(p)
    if abs(a_p) > bound * (1 + 1e-14):
        raise HasseBoundViolation(f"|a_{p}| = {abs(a_p)} exceeds 2 sqrt(p) = {bound}")
    return math.acos(max(-1.0, min(1.0, a_p / bound)))


def ap_from_theta(theta: float, p: int) -> float:
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"angle {theta} outside [0, pi]")
    return 2.0 * math.sqrt(p) * math.cos(theta)


@dataclass(frozen=True)
class HeckeSystem:
    level: int
    ap: Mapping[int, float]
    origin: str = "manual"  # "curve:<label>", "angles" or "manual"

    def __post_init__(self):
        for p, a in self.ap.items():
            if self.level % p:
                if abs(a) > 2 * math.sqrt(p) * (1 + 1e-12):
                    raise HasseBoundViolation(f"a_{p} = {a} violates the Hasse bound")
            elif self.origin.startswith("curve:") and a not in (-1, 0, 1):
                raise ValueError(f"bad-prime a_{p} must lie in {{-1, 0, 1}}, got {a}")

    @property
    def primes(self) -> list[int]:
        return sorted(self.ap)

    def angles(self) -> "AngleProfile":
        return AngleProfile({p: theta_from_ap(a, p) for p, a in self.ap.items() if self.level % p})


@dataclass(frozen=True)
class AngleProfile:
    angles: Mapping[int, float]

    def __post_init__(self):
        for p, t in self.angles.items():
            if not 0.0 <= t <= math.pi:
                raise DomainError(f"theta_{p} = {t} outside [0, pi]")

    def to_system(self) -> HeckeSystem:
        return HeckeSystem(1, {p: ap_from_theta(t, p) for p, t in self.angles.items()}, "angles")


def hecke_system_from_curve(curve: CurveModel, pmax: int) -> HeckeSystem:
    return HeckeSystem(
        curve.conductor,
        {p: ap_from_curve(curve, p) for p in primes_up_to(pmax)},
        f"curve:{curve.label}",
    )


@dataclass(frozen=True, eq=False)
class QExpansion:
    """Truncated q-series sum_{n=1}^B a_n q^n with metadata.

    ``growth`` is the constant C in |a_n| <= C d(n) sqrt(n) (C = 1 is the
    Ramanujan mode).  ``exact`` marks finitely supported series whose
    truncation is the whole series.  ``level``/``fricke`` record a known
    weight-2 transformation law on Gamma0(level) with functional-equation
    sign ``fricke``; ``matched`` is a catalog label when the series is a
    bundled newform.
    """

    coeffs: np.ndarray
    growth: float = 1.0
    growth_mode: str = "ramanujan"
    normalized: bool = False
    exact: bool = False
    level: int | None = None
    fricke: int | None = None
    matched: str | None = None
    hecke: str | None = None
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d sequence a_1..a_B")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.growth_mode not in ("ramanujan", "supplied"):
            raise ValueError(f"unknown growth mode {self.growth_mode!r}")
        if self.normalized and abs(c[0] - 1) > 1e-12:
            raise ValueError("normalized expansion needs a_1 = 1")
        if not self.exact:
            n = np.arange(1, c.size + 1)
            bound = self.growth * divisor_counts(c.size)[1:] * np.sqrt(n)
            bad = np.nonzero(np.abs(c) > bound * (1 + 1e-9) + 1e-12)[0]
            if bad.size:
                k = int(bad[0]) + 1
                raise ValueError(f"|a_{k}| = {abs(c[k - 1])} exceeds the declared growth bound")

    @property
    def B(self) -> int:
        return int(self.coeffs.size)

    def a(self, n: int) -> complex:
        return complex(self.coeffs[n - 1]) if 1 <= n <= self.B else 0j

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.coeffs.imag == 0))

    @property
    def is_modular(self) -> bool:
        return self.level is not None and self.fricke is not None

    def truncated(self, B: int) -> "QExpansion":
        return replace(self, coeffs=self.coeffs[:B])

    def scaled(self, c: complex) -> "QExpansion":
        return replace(
            self,
            coeffs=self.coeffs * c,
            growth=self.growth * abs(c),
            growth_mode="ramanujan" if abs(c) == 1 and self.growth == 1 else "supplied",
            normalized=False,
            hecke=self.hecke if c == 1 else None,
            label=f"{c}*{self.label}",
        )

    def with_fricke(self, sign: int) -> "QExpansion":
        return replace(self, fricke=int(sign))


def linear_combination(terms: Iterable[tuple[complex, QExpansion]], label: str = "") -> QExpansion:
    """sum c_i F_i, truncated at the shortest input.

    A shared transformation law (same level and Fricke sign) survives;
    Hecke and normalization flags do not.
    """
    terms = list(terms)
    B = min(F.B for _, F in terms)
    coeffs = sum(c * F.coeffs[:B] for c, F in terms)
    levels = {F.level for _, F in terms}
    signs = {F.fricke for _, F in terms}
    level = levels.pop() if len(levels) == 1 else None
    sign = signs.pop() if len(signs) == 1 and level is not None else None
    growth = sum(abs(c) * F.growth for c, F in terms)
    return QExpansion(
        coeffs=coeffs,
        growth=growth,
        growth_mode="supplied",
        exact=all(F.exact for _, F in terms),
        level=level,
        fricke=sign,
        label=label or " + ".join(f"{c}*{F.label}" for c, F in terms),
    )


def _required_ap(system: HeckeSystem | AngleProfile, B: int) -> tuple[int, dict[int, float]]:
    if isinstance(system, AngleProfile):
        level, source = 1, {p: ap_from_theta(t, p) for p, t in system.angles.items()}
    else:
        level, source = system.level, dict(system.ap)
    missing = [p for p in primes_up_to(B) if p not in source]
    if missing:
        raise MissingPrime(f"a_p missing for p = {missing[:5]}{'...' if len(missing) > 5 else ''}")
    return level, source


def extend_coefficients(
    system: HeckeSystem | AngleProfile, B: int, mode: str = NEWFORM, label: str = ""
) -> QExpansion:
    """Fill a_1..a_B from prime data by the prime-power recurrence and multiplicativity."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if B < 1:
        raise ValueError("B must be positive")
    level, ap = _required_ap(system, B)
    a = np.zeros(B + 1, dtype=np.float64)
    a[1] = 1.0
    spf = smallest_prime_factor_table(B)
    for n in range(2, B + 1):
        p = int(spf[n])
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        if m > 1:
            a[n] = a[m] * a[n // m]
            continue
        if e == 1:
            a[n] = ap[p]
        else:
            c = 0.0 if (mode == NEWFORM and level % p == 0) else 1.0
            a[n] = a[p] * a[n // p] - c * p * a[n // (p * p)]
    exactly_integral = all(float(v).is_integer() for v in ap.values())
    origin = getattr(system, "origin", "angles")
    return QExpansion(
        coeffs=a[1:],
        normalized=True,
        level=level if mode == NEWFORM and origin.startswith("curve:") else None,
        matched=origin[len("curve:") :] if mode == NEWFORM and origin.startswith("curve:") else None,
        hecke=mode,
        label=label or (origin if exactly_integral else f"{mode}-series"),
    )


@dataclass(frozen=True)
class Violation:
    n: int
    kind: str  # "normalization", "prime_power" or "multiplicative"
    residual: float


def verify_hecke_relations(
    expansion: QExpansion, N: int = 1, mode: str = NEWFORM, rtol: float = 1e-9
) -> list[Violation]:
    """Every index whose stored coefficient disagrees with the recurrence."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    a = np.concatenate([[0.0], expansion.coeffs])
    B = expansion.B
    out: list[Violation] = []

    def check(n: int, expected: complex, kind: str) -> None:
        r = abs(a[n] - expected)
        if r > rtol * (1.0 + abs(expected)):
            out.append(Violation(n, kind, float(r)))

    check(1, 1.0, "normalization")
    spf = smallest_prime_factor_table(B)
    for n in range(2, B + 1):
        p = int(spf[n])
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        if m > 1:
            check(n, a[m] * a[n // m], "multiplicative")
        elif e >= 2:
            c = 0.0 if (mode == NEWFORM and N % p == 0) else 1.0
            check(n, a[p] * a[n // p] - c * p * a[n // (p * p)], "prime_power")
    return out


def detect_newform_match(
    system: HeckeSystem | AngleProfile,
    catalog: Mapping[str, HeckeSystem],
    P0: int = 100,
    atol: float = 1e-6,
) -> str | None:
    """Catalog label agreeing with ``system`` at every good prime p <= P0."""
    if isinstance(system, AngleProfile):
        level, ap = 1, {p: ap_from_theta(t, p) for p, t in system.angles.items()}
    else:
        level, ap = system.level, dict(system.ap)
    for label in sorted(catalog):
        cat = catalog[label]
        checked = 0
        for p in primes_up_to(P0):
            if (level * cat.level) % p == 0:
                continue
            if p not in ap or p not in cat.ap:
                break
            if abs(ap[p] - cat.ap[p]) > atol:
                break
            checked += 1
        else:
            if checked:
                return label
    return None


def realize(
    system: HeckeSystem | AngleProfile,
    B: int,
    catalog: Mapping[str, HeckeSystem] | None = None,
    newforms: Mapping[str, QExpansion] | None = None,
    P0: int = 100,
) -> QExpansion:
    """A series per the two-case construction: the matched newform if one
    agrees at almost all primes, otherwise the deformed series."""
    if catalog and newforms:
        label = detect_newform_match(system, catalog, P0)
        if label is not None and label in newforms and newforms[label].B >= B:
            return newforms[label].truncated(B)
    if isinstance(system, HeckeSystem) and system.level != 1:
        system = HeckeSystem(1, dict(system.ap), system.origin if system.origin == "angles" else "manual")
    return extend_coefficients(system, B, DEFORMED)
