"""Period pairs as lattices: classification, tau reduction, Eisenstein
invariants and the j-invariant."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coefficients import CurveModel, QExpansion
from .errors import DegenerateInput, NearSingular, NotConverged, SingularModel
from .modgroup import GroupElement, reduce_to_standard_domain
from .pathint import PeriodLattice, integrate_path, period_lattice, period_path

DEGENERATE_RANK0 = "DegenerateRank0"
DEGENERATE_RANK1 = "DegenerateRank1"
DEGENERATE_INDISCRETE = "DegenerateIndiscrete"
ELLIPTIC = "Elliptic"

MAX_DENOMINATOR = 10**6

# Gamma0(N) elements whose period paths z -> g z generate the period lattice
# of the bundled newform (found by search_period_generators over small entries).
DEFAULT_PERIOD_ELEMENTS: dict[str, tuple[tuple[int, int, int, int], tuple[int, int, int, int]]] = {
    "11a": ((2, -1, 11, -5), (7, -2, 11, -3)),
    "37a": ((-16, 3, 37, -7), (-20, 7, 37, -13)),
    "37b": ((-13, 7, 37, -20), (-8, 3, 37, -14)),
}


@dataclass(frozen=True)
class LatticeClassification:
    kind: str
    tau: complex | None = None
    j: complex | None = None
    ratio: complex | None = None
    rational: tuple[int, int] | None = None

    def __post_init__(self):
        elliptic = self.kind == ELLIPTIC
        if elliptic != (self.tau is not None) or elliptic != (self.j is not None):
            raise ValueError("tau and j are present exactly for elliptic quotients")
        if self.tau is not None and self.tau.imag <= 0:
            raise ValueError("tau must lie in the upper half-plane")

    def to_record(self) -> dict:
        def c(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]

        return {
            "kind": self.kind,
            "tau": c(self.tau),
            "j": c(self.j),
            "ratio": c(self.ratio),
            "rational": list(self.rational) if self.rational else None,
        }


def rational_approximation(x: float, tol: float, max_den: int = MAX_DENOMINATOR) -> tuple[int, int] | None:
    """Smallest-denominator continued-fraction convergent p/q with |x - p/q| <= tol.

    Denominators are capped at min(max_den, 0.1 / sqrt(tol)); beyond that a
    generic irrational is within tol of some convergent, so no decision is
    possible.
    """
    cap = min(max_den, int(0.1 / math.sqrt(tol)) if tol > 0 else max_den)
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    y = x
    for _ in range(64):
        a = math.floor(y)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > cap:
            return None
        if abs(x - h1 / k1) <= tol:
            return h1, k1
        r = y - a
        if r == 0:
            return None
        y = 1.0 / r
    return None


def classify_quotient(L: PeriodLattice | tuple[complex, complex], tol: float = 1e-9) -> LatticeClassification:
    w1, w2 = (L.omega1, L.omega2) if isinstance(L, PeriodLattice) else L
    w1, w2 = complex(w1), complex(w2)
    scale = max(abs(w1), abs(w2))
    if scale <= tol:
        return LatticeClassification(DEGENERATE_RANK0)
    if min(abs(w1), abs(w2)) <= tol * scale:
        return LatticeClassification(DEGENERATE_RANK1)
    r = w2 / w1
    if abs(r.imag) <= tol * max(1.0, abs(r)):
        pq = rational_approximation(r.real, tol * max(1.0, abs(r)))
        kind = DEGENERATE_RANK1 if pq else DEGENERATE_INDISCRETE
        return LatticeClassification(kind, ratio=r, rational=pq)
    tau = reduce_tau(w1, w2, tol)
    return LatticeClassification(ELLIPTIC, tau=tau, j=j_invariant(tau), ratio=r)


def reduce_tau(w1: complex, w2: complex, tol: float = 1e-12) -> complex:
    """tau in the standard domain with Z w1 + Z w2 homothetic to Z + Z tau."""
    w1, w2 = complex(w1), complex(w2)
    if w1 == 0 or w2 == 0:
        raise DegenerateInput("zero period")
    tau = w2 / w1
    if abs(tau.imag) <= tol * max(1.0, abs(tau)):
        raise DegenerateInput(f"period ratio {tau} is real within {tol:g}")
    if tau.imag < 0:
        tau = 1 / tau
    # Gauss reduction of the basis (1, tau) before the modular reduction
    a, b = complex(1), tau
    for _ in range(10_000):
        if abs(b) < abs(a):
            a, b = b, a
        mu = round((b / a).real)
        if mu == 0:
            break
        b -= mu * a
    t = b / a
    # Z a + Z b = Z a + Z (-b), so the sign of the ratio is free
    z, _ = reduce_to_standard_domain(t if t.imag > 0 else -t)
    return z


def _eisenstein_qseries(tau: complex) -> tuple[complex, complex, float]:
    q = cmath.exp(2j * math.pi * tau)
    aq = abs(q)
    if aq >= 1:
        raise NotConverged("Im tau must be positive")
    nmax = 1
    while nmax**5 * aq**nmax > 1e-20 or nmax < 5:
        nmax += 1
        if nmax > 200_000:
            raise NotConverged(f"q-series for tau = {tau} needs more than 2e5 terms")
    n = np.arange(1, nmax + 1)
    sig3 = np.zeros(nmax + 1)
    sig5 = np.zeros(nmax + 1)
    for d in range(1, nmax + 1):
        sig3[d::d] += float(d) ** 3
        sig5[d::d] += float(d) ** 5
    qn = q**n
    E4 = 1 + 240 * (sig3[1:] * qn).sum()
    E6 = 1 - 504 * (sig5[1:] * qn).sum()
    g2 = 4 * math.pi**4 / 3 * E4
    g3 = 8 * math.pi**6 / 27 * E6
    return g2, g3, 1e-20


def _row_sum(c: complex, k: int, M: int, terms: int = 8) -> tuple[complex, float]:
    """sum_{m in Z} (m + c)^-k: |m| <= M directly, Euler-Maclaurin for the tails."""
    m = np.arange(-M, M + 1)
    central = ((m + c) ** (-float(k))).sum()

    def tail(cc: complex) -> tuple[complex, float]:
        # sum_{m > M} (m + cc)^-k
        x = M + cc
        s = x ** (1 - k) / (k - 1) - 0.5 * x ** (-k)
        last = 0.0
        bern = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510]
        for j in range(1, terms + 1):
            r = 2 * j - 1
            rising = math.prod(range(k, k + r))
            deriv = (-1) ** r * rising * x ** (-k - r)
            t = bern[j - 1] / math.factorial(2 * j) * deriv
            s -= t
            last = abs(t)
        return s, last

    tp, ep = tail(c)
    tm, em = tail(-c)
    return central + tp + tm, ep + em


def _eisenstein_direct(tau: complex, M: int = 64) -> tuple[complex, complex, float]:
    """Lattice sums over rows n tau + Z with closed-form row tails."""
    out = []
    err = 0.0
    for k in (4, 6):
        total = complex(2 * (math.pi**4 / 90 if k == 4 else math.pi**6 / 945))
        n = 1
        while True:
            r, e = _row_sum(n * tau, k, M)
            total += 2 * r
            err += 2 * e
            if abs(r) < 1e-19 and n > 1:
                break
            n += 1
            if n > 10_000:
                raise NotConverged(f"row sums for tau = {tau} do not decay")
        out.append(total)
    G4, G6 = out
    return 60 * G4, 140 * G6, err


def eisenstein_invariants(tau: complex, method: str = "qseries") -> tuple[complex, complex]:
    """(g2, g3) of the lattice Z + Z tau."""
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValueError("Im tau must be positive")
    t0, g = reduce_to_standard_domain(tau)
    # Z + Z tau = (c tau + d)(Z + Z t0) and G_k scales with weight -k
    lam = g.c * tau + g.d
    if method == "qseries":
        g2, g3, _ = _eisenstein_qseries(t0)
    elif method == "direct":
        g2, g3, _ = _eisenstein_direct(t0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return g2 / lam**4, g3 / lam**6


def _discriminant_product(tau: complex) -> complex:
    """g2^3 - 27 g3^2 = (2 pi)^12 q prod (1 - q^n)^24, free of cancellation."""
    t0, g = reduce_to_standard_domain(complex(tau))
    q = cmath.exp(2j * math.pi * t0)
    prod = complex(1)
    n = 1
    while abs(q) ** n > 1e-18:
        prod *= (1 - q**n) ** 24
        n += 1
    return (2 * math.pi) ** 12 * q * prod / (g.c * tau + g.d) ** 12


def j_invariant(tau: complex, method: str = "qseries", tol: float = 1e-12) -> complex:
    """1728 g2^3 / (g2^3 - 27 g3^2).

    The q-series route takes the denominator from the product expansion, so
    j stays accurate high in the cusp where g2^3 and 27 g3^2 agree to many
    digits; the direct route subtracts and guards against that cancellation.
    """
    g2, g3 = eisenstein_invariants(tau, method)
    if method == "qseries":
        disc = _discriminant_product(tau)
        if disc == 0:
            raise NearSingular(f"discriminant underflows at tau = {tau}")
        return 1728 * g2**3 / disc
    disc = g2**3 - 27 * g3**2
    if abs(disc) <= tol * max(1.0, abs(g2) ** 3):
        raise NearSingular(f"g2^3 - 27 g3^2 = {disc:.3g} at tau = {tau}")
    return 1728 * g2**3 / disc


def j_from_curve(curve: CurveModel) -> Fraction:
    if curve.discriminant == 0:
        raise SingularModel(curve.label)
    return Fraction(curve.c4**3, curve.discriminant)


def default_period_paths(label: str):
    g1, g2 = DEFAULT_PERIOD_ELEMENTS[label]
    return period_path(GroupElement(*g1)), period_path(GroupElement(*g2))


def search_period_generators(
    F: QExpansion, window: int = 20, multiples: int = 1, tol: float = 1e-7
) -> tuple[GroupElement, GroupElement, PeriodLattice]:
    """Two Gamma0(N) elements whose periods generate every period found among
    hyperbolic elements with c = N k (k <= multiples) and |a|, |d| <= window."""
    N = F.level
    if not N:
        raise ValueError("the series needs a level")
    periods = []
    for k in range(1, multiples + 1):
        C = N * k
        for a, d in itertools.product(range(-window, window + 1), repeat=2):
            if (a * d - 1) % C or abs(a + d) <= 2:
                continue
            g = GroupElement(a, (a * d - 1) // C, C, d)
            w = integrate_path(F, period_path(g)).value
            if abs(w) > tol:
                periods.append((g, complex(w)))
    periods.sort(key=lambda gw: (abs(gw[1]), abs(gw[0].a) + abs(gw[0].d)))
    best = None
    pool = periods[:30]
    for (g1, w1), (g2, w2) in itertools.combinations(pool, 2):
        area = abs((w1.conjugate() * w2).imag)
        if area < tol or (best and area >= best[0] - tol):
            continue
        M = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
        coords = np.linalg.solve(M, np.array([[w.real for _, w in periods], [w.imag for _, w in periods]]))
        if np.all(np.abs(coords - np.round(coords)) < 1e-6):
            best = (area, g1, g2, w1, w2)
    if best is None:
        raise NotConverged("no generating pair among the sampled periods")
    _, g1, g2, w1, w2 = best
    return g1, g2, period_lattice(F, period_path(g1), period_path(g2))
