"""Imaginary quadratic fields through reduced binary quadratic forms.

Class groups, the quadratic character, ideal counts r_A(n) and their theta
series, the Rankin-type Dirichlet series attached to a newform and an ideal
class, and the Heegner-style pairing obtained from L-values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import divisor_bound_sum, is_fundamental_discriminant, kronecker, prime_divisors, xgcd
from .coefficients import QExpansion
from .errors import NotConverged, NotFundamental, OutsideConvergenceRegion, PreconditionFailed
from .pathint import Estimate, l_derivative_at_1, l_value_at_1, with_fricke_sign

CONVERGENCE_MARGIN = 0.05


@dataclass(frozen=True, order=True)
class QuadFormClass:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0 or self.discriminant >= 0:
            raise ValueError(f"({self.a},{self.b},{self.c}) is not positive definite")

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (a > 0 and abs(b) <= a <= c):
            return False
        return b >= 0 or (abs(b) != a and a != c)

    def reduced(self) -> "QuadFormClass":
        return reduce_form(self.a, self.b, self.c)

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


def reduce_form(a: int, b: int, c: int) -> QuadFormClass:
    """Reduce a positive definite form: |b| <= a <= c, b >= 0 on the boundary."""
    if a <= 0 or b * b - 4 * a * c >= 0:
        raise ValueError(f"({a},{b},{c}) is not positive definite")
    while True:
        # normalize b into (-a, a]
        r = (a - b) // (2 * a)
        b, c = b + 2 * r * a, a * r * r + b * r + c
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return QuadFormClass(a, b, c)


def compose(f: QuadFormClass, g: QuadFormClass) -> QuadFormClass:
    """Gauss composition of two forms of equal discriminant, then reduction."""
    D = f.discriminant
    if g.discriminant != D:
        raise ValueError("forms of different discriminant")
    a1, b1, _ = f.a, f.b, f.c
    a2, b2, c2 = g.a, g.b, g.c
    if a1 > a2:
        a1, b1, a2, b2, c2 = a2, b2, a1, b1, f.c
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        d, u, _ = xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, x2, y2 = xgcd(s, d)
        y2 = -y2
    v1, v2 = a1 // d1, a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (b3 * b3 - D) // (4 * a3)
    return reduce_form(a3, b3, c3)


def inverse_form(f: QuadFormClass) -> QuadFormClass:
    return reduce_form(f.a, -f.b, f.c)


def reduced_forms(D: int) -> list[QuadFormClass]:
    """All reduced primitive forms of discriminant D < 0, sorted by (a, b)."""
    out = []
    amax = math.isqrt(-D // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or math.gcd(math.gcd(a, b), c) != 1:
                continue
            if b < 0 and a == c:
                continue
            out.append(QuadFormClass(a, b, c))
    return sorted(out, key=lambda q: (q.a, abs(q.b), -q.b))


@dataclass(frozen=True)
class ClassGroup:
    D: int
    classes: tuple[QuadFormClass, ...]
    table: tuple[tuple[int, ...], ...]

    @property
    def h(self) -> int:
        return len(self.classes)

    def index(self, form: QuadFormClass) -> int:
        return self.classes.index(form.reduced())

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inverse(self, i: int) -> int:
        return self.index(inverse_form(self.classes[i]))

    def order(self, i: int) -> int:
        k, x = 1, i
        while x != 0:
            x = self.mul(x, i)
            k += 1
        return k

    def check_axioms(self) -> list[str]:
        """Group-axiom failures of the composition table (empty if none)."""
        bad = []
        h = self.h
        for i in range(h):
            if self.table[0][i] != i or self.table[i][0] != i:
                bad.append(f"identity fails at {i}")
            if self.table[i][self.inverse(i)] != 0:
                bad.append(f"inverse fails at {i}")
            for j in range(h):
                if self.table[i][j] != self.table[j][i]:
                    bad.append(f"commutativity fails at {i},{j}")
                for k in range(h):
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]]:
                        bad.append(f"associativity fails at {i},{j},{k}")
        return bad


@dataclass(frozen=True)
class ClassCharacter:
    values: tuple[complex, ...]

    def __call__(self, i: int) -> complex:
        return self.values[i]

    @property
    def is_trivial(self) -> bool:
        return all(abs(v - 1) < 1e-12 for v in self.values)

    def conjugate(self) -> "ClassCharacter":
        return ClassCharacter(tuple(v.conjugate() for v in self.values))


@dataclass(frozen=True)
class ImagQuadField:
    D: int
    w: int
    group: ClassGroup

    @property
    def h(self) -> int:
        return self.group.h

    @property
    def forms(self) -> tuple[QuadFormClass, ...]:
        return self.group.classes


def unit_count(D: int) -> int:
    return {-3: 6, -4: 4}.get(D, 2)


def build_field(D: int) -> ImagQuadField:
    if D >= 0 or not is_fundamental_discriminant(D):
        raise NotFundamental(f"{D} is not a negative fundamental discriminant")
    forms = reduced_forms(D)
    pos = {f: i for i, f in enumerate(forms)}
    table = tuple(tuple(pos[compose(f, g)] for g in forms) for f in forms)
    return ImagQuadField(D, unit_count(D), ClassGroup(D, tuple(forms), table))


def class_characters(field: ImagQuadField) -> list[ClassCharacter]:
    """All characters of the class group, trivial character first.

    Characters are the joint eigenvalues of the commuting regular
    representation; values are snapped to exact roots of unity of the
    group exponent.
    """
    G = field.group
    h = G.h
    exponent = math.lcm(*(G.order(i) for i in range(h)))
    mats = []
    for i in range(h):
        P = np.zeros((h, h))
        for j in range(h):
            P[G.mul(i, j), j] = 1.0
        mats.append(P)
    weights = [math.sqrt(p) for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)]
    M = sum(weights[i % len(weights)] * (1 + i // len(weights)) * mats[i] for i in range(h))
    _, vecs = np.linalg.eig(M)
    chars = set()
    for k in range(h):
        v = vecs[:, k]
        j = int(np.argmax(np.abs(v)))
        vals = []
        for P in mats:
            lam = (P @ v)[j] / v[j]
            m = round(cmath.phase(lam) / (2 * math.pi) * exponent) % exponent
            vals.append(m)
        chars.add(tuple(vals))
    out = []
    for exps in sorted(chars, key=lambda t: (any(t), t)):
        out.append(ClassCharacter(tuple(_root_of_unity(m, exponent) for m in exps)))
    for chi in out:
        for i in range(h):
            for j in range(h):
                if abs(chi(G.mul(i, j)) - chi(i) * chi(j)) > 1e-12:
                    raise NotConverged("character extraction failed")
    if len(out) != h:
        raise NotConverged(f"found {len(out)} characters for a group of order {h}")
    return out


def _root_of_unity(m: int, e: int) -> complex:
    if m == 0:
        return 1 + 0j
    if 4 * m == e:
        return 1j
    if 2 * m == e:
        return -1 + 0j
    if 4 * m == 3 * e:
        return -1j
    return cmath.exp(2j * math.pi * m / e)


def trivial_character(field: ImagQuadField) -> ClassCharacter:
    return ClassCharacter(tuple(1 + 0j for _ in range(field.h)))


# ------------------------------------------------------------- ideal counts


def epsilon_character(field: ImagQuadField | int, n: int) -> int:
    D = field if isinstance(field, int) else field.D
    if n < 1:
        raise ValueError("n must be positive")
    return kronecker(D, n)


@dataclass(frozen=True)
class ThetaSeries:
    form: QuadFormClass
    B: int
    w: int
    reps: tuple[int, ...]  # representation counts #{(x,y): Q(x,y) = n}

    @property
    def r(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(k, self.w) for k in self.reps)

    def __getitem__(self, n: int) -> Fraction:
        return Fraction(self.reps[n], self.w)


def _representation_counts(form: QuadFormClass, B: int) -> np.ndarray:
    """#{(x,y) in Z^2 : Q(x,y) = n} for 0 <= n <= B, one sweep over the ellipse."""
    a, b, c = form.a, form.b, form.c
    D = form.discriminant
    counts = np.zeros(B + 1, dtype=np.int64)
    # 4a Q = (2ax + by)^2 + |D| y^2, so |y| <= sqrt(4aB/|D|)
    ymax = math.isqrt(4 * a * B // -D) + 1
    for y in range(-ymax, ymax + 1):
        rest = 4 * a * B + D * y * y
        if rest < 0:
            continue
        s = math.isqrt(rest)
        lo = -(s + b * y) // (2 * a) - 1
        hi = (s - b * y) // (2 * a) + 1
        x = np.arange(lo, hi + 1, dtype=np.int64)
        vals = a * x * x + b * x * y + c * y * y
        vals = vals[vals <= B]
        counts += np.bincount(vals, minlength=B + 1)
    return counts


def r_count(field: ImagQuadField, form: QuadFormClass | int, n: int) -> Fraction:
    form = field.forms[form] if isinstance(form, int) else form
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return Fraction(1, field.w)
    # direct per-n count; theta_series does all n at once
    a, b, c = form.a, form.b, form.c
    ymax = math.isqrt(4 * a * n // -field.D) + 1
    k = 0
    for y in range(-ymax, ymax + 1):
        disc = (b * y) ** 2 - 4 * a * (c * y * y - n)
        if disc < 0:
            continue
        s = math.isqrt(disc)
        if s * s != disc:
            continue
        for num in {-b * y + s, -b * y - s}:
            if num % (2 * a) == 0:
                k += 1
    return Fraction(k, field.w)


def theta_series(field: ImagQuadField, form: QuadFormClass | int, B: int) -> ThetaSeries:
    form = field.forms[form] if isinstance(form, int) else form
    if B < 0:
        raise ValueError("B must be nonnegative")
    reps = _representation_counts(form, B)
    return ThetaSeries(form, B, field.w, tuple(int(k) for k in reps))


def ideal_counts_by_enumeration(field: ImagQuadField, B: int) -> list[list[int]]:
    """counts[i][n]: integral ideals of norm n (1 <= n <= B) in class i.

    Every ideal is m * [a, (-b + sqrt D)/2] with b^2 = D mod 4a, b taken
    mod 2a, and norm m^2 a; the primitive part has the class of the form
    (a, b, (b^2 - D)/4a).
    """
    D = field.D
    counts = [[0] * (B + 1) for _ in range(field.h)]
    prim_class: dict[int, list[int]] = {}
    for a in range(1, B + 1):
        cls = []
        for b in range(0, 2 * a):
            if (b * b - D) % (4 * a) == 0:
                cls.append(field.group.index(reduce_form(a, b, (b * b - D) // (4 * a))))
        prim_class[a] = cls
    for a, cls in prim_class.items():
        m = 1
        while m * m * a <= B:
            for i in cls:
                counts[i][m * m * a] += 1
            m += 1
    return counts


def total_ideal_counts(field: ImagQuadField, B: int) -> list[int]:
    """sum over classes of the ideal counts; equals sum_{d|n} eps(d)."""
    tot = [0] * (B + 1)
    for i in range(field.h):
        t = theta_series(field, i, B)
        for n in range(1, B + 1):
            tot[n] += t.reps[n] // field.w
    tot[0] = 0
    return tot


# ---------------------------------------------------------------- L-series


def _exact_coeffs(f: QExpansion, B: int) -> list:
    out = [0]
    for n in range(1, B + 1):
        v = f.a(n)
        if abs(v.imag) < 1e-9 and abs(v.real - round(v.real)) < 1e-9:
            out.append(int(round(v.real)))
        else:
            out.append(v)
    return out


@dataclass(frozen=True)
class RankinCoefficients:
    """Factor sequences of L_A(f,s) = (sum u(n) n^{1-2s}) (sum v(n) n^{-s})."""

    u: tuple
    v: tuple

    @property
    def B(self) -> int:
        return len(self.v) - 1

    def combined(self) -> list:
        """c(k) = sum_{m^2 | k} u(m) m v(k/m^2): the single Dirichlet series."""
        B = self.B
        c = [0] * (B + 1)
        m = 1
        while m * m <= B:
            if self.u[m]:
                for j in range(1, B // (m * m) + 1):
                    c[m * m * j] += self.u[m] * m * self.v[j]
            m += 1
        return c

    def at(self, s: float) -> complex:
        n = np.arange(1, self.B + 1, dtype=float)
        u = np.array(self.u[1:], dtype=complex)
        v = np.array([complex(x) for x in self.v[1:]])
        return complex((u * n ** (1 - 2 * s)).sum() * (v * n ** (-s)).sum())


def _u_sequence(field: ImagQuadField, N: int, B: int) -> tuple:
    DN = abs(field.D) * N
    return (0,) + tuple(epsilon_character(field, n) if math.gcd(n, DN) == 1 else 0 for n in range(1, B + 1))


def rankin_coefficients(f: QExpansion, field: ImagQuadField, form: QuadFormClass | int, B: int, N: int | None = None) -> RankinCoefficients:
    if f.B < B:
        raise ValueError(f"series has {f.B} coefficients, need {B}")
    N = N or f.level or 1
    theta = theta_series(field, form, B)
    a = _exact_coeffs(f, B)
    v = (0,) + tuple(a[n] * theta[n] for n in range(1, B + 1))
    return RankinCoefficients(_u_sequence(field, N, B), v)


def _check_region(s: complex) -> None:
    if complex(s).real < 1.5 + CONVERGENCE_MARGIN:
        raise OutsideConvergenceRegion(f"Re s = {complex(s).real} < 3/2 + {CONVERGENCE_MARGIN}")


def partial_L(f: QExpansion, field: ImagQuadField, form: QuadFormClass | int, s: complex, B: int | None = None) -> Estimate:
    """Truncated L_A(f, s) with a rigorous tail bound."""
    _check_region(s)
    B = B or f.B
    rc = rankin_coefficients(f, field, form, B)
    s = complex(s)
    sigma = s.real
    n = np.arange(1, B + 1, dtype=float)
    S1 = (np.array(rc.u[1:], dtype=float) * n ** (1 - 2 * s)).sum()
    S2 = (np.array([complex(x) for x in rc.v[1:]]) * n ** (-s)).sum()
    # |u(n)| <= 1; |a_n r_A(n)| <= C d(n)^2 sqrt(n)
    t1 = B ** (2 - 2 * sigma) / (2 * sigma - 2)
    t2 = f.growth * divisor_bound_sum(sigma - 0.5, B)
    err = abs(S1) * t2 + abs(S2) * t1 + t1 * t2
    return Estimate(complex(S1 * S2), err, notes=(f"B={B}",))


def total_L(f: QExpansion, field: ImagQuadField, chi: ClassCharacter, s: complex, B: int | None = None) -> Estimate:
    _check_region(s)
    parts = [partial_L(f, field, i, s, B) for i in range(field.h)]
    val = sum(chi(i) * p.value for i, p in enumerate(parts))
    return Estimate(complex(val), sum(p.error for p in parts), notes=parts[0].notes)


@dataclass
class FactorizationReport:
    D: int
    N: int
    B: int
    residuals: dict[int, Fraction] = field(default_factory=dict)
    bad_indices: dict[int, Fraction] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r == 0 for r in self.residuals.values())

    def nonzero(self) -> list[int]:
        return sorted(n for n, r in self.residuals.items() if r != 0)


def verify_factorization(f: QExpansion, field: ImagQuadField, B: int, N: int | None = None) -> FactorizationReport:
    """Dirichlet coefficients of L(f,s) L_eps(f,s) against sum_A L_A(f,s).

    Residuals are exact for integral coefficients. Indices sharing a factor
    with DN are recorded in ``bad_indices`` but not part of the verdict.
    """
    N = N or f.level or 1
    a = _exact_coeffs(f, B)
    D = field.D
    eps = [0] + [epsilon_character(field, n) for n in range(1, B + 1)]
    lhs = [0] * (B + 1)
    for d in range(1, B + 1):
        if a[d] == 0:
            continue
        for e in range(1, B // d + 1):
            lhs[d * e] += a[d] * eps[e] * a[e]
    r_tot = [Fraction(0)] * (B + 1)
    for i in range(field.h):
        th = theta_series(field, i, B)
        for n in range(1, B + 1):
            r_tot[n] += th[n]
    v = (0,) + tuple(a[n] * r_tot[n] for n in range(1, B + 1))
    rhs = RankinCoefficients(_u_sequence(field, N, B), v).combined()
    rep = FactorizationReport(D, N, B)
    DN = abs(D) * N
    for n in range(1, B + 1):
        res = Fraction(lhs[n]) - Fraction(rhs[n]) if not isinstance(lhs[n], complex) else lhs[n] - rhs[n]
        (rep.residuals if math.gcd(n, DN) == 1 else rep.bad_indices)[n] = res
    return rep


# ------------------------------------------------------- values at s = 1


def twist_root_number(f: QExpansion, field: ImagQuadField) -> int:
    f = with_fricke_sign(f)
    return f.fricke * kronecker(field.D, -f.level)


def twisted_l_value(f: QExpansion, field: ImagQuadField, tol: float = 1e-10) -> Estimate:
    """L_eps(f, 1) = sum eps(n) a_n / n through the smoothed sum at conductor N D^2.

    The two-exponential form with split parameter t must not depend on t;
    disagreement between t = 1 and t = 1.2 means the assumed sign or
    conductor is wrong.
    """
    D = field.D
    n = np.arange(1, f.B + 1)
    eps = np.array([epsilon_character(field, k) for k in n], dtype=float)
    b = f.coeffs * eps
    if f.exact:
        return Estimate(complex((b / n).sum()), 0.0, notes=("finite sum",))
    if not f.level or math.gcd(D, f.level) != 1:
        raise PreconditionFailed("the twist needs a modular series with gcd(D, N) = 1")
    M = f.level * D * D
    w = twist_root_number(f, field)

    def smoothed(t: float) -> tuple[complex, float]:
        x1 = 2 * math.pi * t / math.sqrt(M)
        x2 = 2 * math.pi / (t * math.sqrt(M))
        val = (b / n * (np.exp(-x1 * n) + w * np.exp(-x2 * n))).sum()
        xm = math.exp(-min(x1, x2))
        tail = 4 * f.growth * xm ** (f.B + 1) / (1 - xm)
        return complex(val), tail

    v1, e1 = smoothed(1.0)
    v2, e2 = smoothed(1.2)
    if e2 > tol:
        raise NotConverged(f"B = {f.B} leaves a tail of {e2:.2g} at conductor {M}")
    if abs(v1 - v2) > max(100 * tol, 1e-8 * abs(v1)):
        raise NotConverged(f"split-parameter drift {abs(v1 - v2):.2g}: sign or conductor inconsistent")
    return Estimate(v1, e1 + abs(v1 - v2), notes=(f"conductor {M}", f"sign {w:+d}"))


def is_heegner_discriminant(D: int, N: int) -> bool:
    """Fundamental D < 0, coprime to N, with every prime of N split."""
    if D >= 0 or not is_fundamental_discriminant(D) or math.gcd(D, N) != 1:
        return False
    return all(kronecker(D, p) == 1 for p in prime_divisors(N))


def scan_admissible_discriminant(f: QExpansion, max_abs: int = 200, factor: float = 10.0) -> tuple[ImagQuadField, Estimate]:
    """Smallest |D| satisfying the Heegner condition with L_eps(f,1) clearly nonzero."""
    N = f.level
    if not N:
        raise PreconditionFailed("a level is needed")
    for m in range(3, max_abs + 1):
        D = -m
        if not is_heegner_discriminant(D, N):
            continue
        fld = build_field(D)
        need = int(8 * math.sqrt(N) * m) + 10
        if f.B < need:
            raise PreconditionFailed(f"B = {f.B} too small for D = {D}; need {need}")
        val = twisted_l_value(f, fld)
        if abs(val.value) > factor * max(val.error, 1e-15):
            return fld, val
    raise NotConverged(f"no admissible discriminant with |D| <= {max_abs}")


@dataclass(frozen=True)
class PairingEstimate:
    value: float
    error: float
    l_derivative: Estimate
    twisted: Estimate
    D: int


def gross_zagier_pairing(f: QExpansion, field: ImagQuadField, l_tol: float = 1e-8) -> PairingEstimate:
    """(sum_A g_A, f)_N = w^2 |D|^{1/2} / (32 pi^2) * L'(f,1) L_eps(f,1).

    The twisted factor is taken for f / a_1 so the result is linear in f.
    """
    if not f.matched or not f.level:
        raise PreconditionFailed("needs a matched rational newform")
    f = with_fricke_sign(f)
    if f.fricke != -1:
        raise PreconditionFailed(f"functional-equation sign is {f.fricke:+d}, need -1")
    L1 = l_value_at_1(f, "smoothedsum")
    if abs(L1.value) > l_tol + L1.error:
        raise PreconditionFailed(f"L(f,1) = {L1.value.real:.3g} is not numerically zero")
    if math.gcd(field.D, f.level) != 1:
        raise PreconditionFailed("D must be coprime to the level")
    a1 = f.a(1)
    Ld = l_derivative_at_1(f)
    Lt = twisted_l_value(f.scaled(1 / a1), field)
    k = field.w**2 * math.sqrt(-field.D) / (32 * math.pi**2)
    val = k * Ld.value * Lt.value
    err = k * (abs(Ld.value) * Lt.error + abs(Lt.value) * Ld.error + Ld.error * Lt.error)
    return PairingEstimate(float(val.real), float(err + abs(val.imag)), Ld, Lt, field.D)


# ------------------------------------------------------------ export


def field_table(field: ImagQuadField) -> list[dict]:
    return [{"D": field.D, "class": i, "a": q.a, "b": q.b, "c": q.c, "w": field.w} for i, q in enumerate(field.forms)]


def theta_table(field: ImagQuadField, B: int) -> list[dict]:
    rows = []
    for i in range(field.h):
        th = theta_series(field, i, B)
        for n in range(B + 1):
            r = th[n]
            rows.append({"D": field.D, "class": i, "n": n, "r_num": r.numerator, "r_den": r.denominator})
    return rows
