"""Evaluation and path integration of q-expansions on the upper half-plane.

Path text grammar (items separated by ``;``)::

    line(z0, z1)                 straight segment
    arc(c, r, t0, t1)            circular arc c + r e^{it}, t from t0 to t1 (radians)
    poly(z0, z1, ..., zk)        polyline
    point(z)                     anchor point (no length)
    from_cusp(r) / to_cusp(r)    cusp endpoint: inf, an integer, or p/q

Complex literals use ``i`` or ``j``: ``0.1+0.9i``, ``2i``, ``-0.5+i``.
``from_cusp`` may only appear first and ``to_cusp`` only last.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from .arith import xgcd
from .coefficients import QExpansion
from .errors import (
    DivergentCuspIntegral,
    InconsistentSamples,
    MethodUnavailable,
    PathSyntaxError,
    TailTooLarge,
    WrongSign,
)
from .modgroup import _G_WEIGHTS, _GK_NODES, _K_WEIGHTS, GroupElement, act

TWO_PI = 2.0 * math.pi
EVAL_TOL = 1e-12
SMOOTHING_SPLIT = 1.1


# ---------------------------------------------------------------- evaluation


def tail_majorant(B: int, y: float, growth: float = 1.0) -> float:
    """Bound for growth * sum_{n>B} d(n) sqrt(n) e^{-2 pi n y}, using d(n) <= 2 sqrt(n)."""
    x = math.exp(-TWO_PI * y)
    if x >= 1.0:
        return math.inf
    return 2.0 * growth * x ** (B + 1) * ((B + 1) - B * x) / (1.0 - x) ** 2


def effective_length(F: QExpansion, y: float, eps: float = 1e-17) -> int:
    """Smallest m <= B whose neglected terms m < n <= B are below eps in total."""
    if y <= 0:
        return F.B
    scale = max(F.growth, 1e-300)
    lo, hi = 1, F.B
    if tail_majorant(hi, y, scale) > eps:
        return F.B
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_majorant(mid, y, scale) <= eps:
            hi = mid
        else:
            lo = mid + 1
    return lo


def tail_bound(F: QExpansion, y: float) -> float:
    return 0.0 if F.exact else tail_majorant(F.B, y, F.growth)


def series_values(F: QExpansion, z) -> np.ndarray:
    """sum_{n<=B} a_n e^{2 pi i n z}, vectorized, no error control."""
    z = np.asarray(z, dtype=np.complex128)
    if z.size == 0:
        return z.copy()
    m = effective_length(F, float(z.imag.min()))
    c = F.coeffs[:m]
    q = np.exp(2j * math.pi * z)
    if z.size * m <= 400_000:
        n = np.arange(1, m + 1)
        return (np.power(q[..., None], n) * c).sum(axis=-1)
    acc = np.full(z.shape, c[-1], dtype=np.complex128)
    for a in c[-2::-1]:
        acc *= q
        acc += a
    return acc * q


def evaluate_series(F: QExpansion, z: complex, tol: float = 1e-8) -> tuple[complex, float]:
    """(value, rigorous bound on the neglected tail)."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("Im z must be positive")
    bound = tail_bound(F, z.imag)
    if bound > tol:
        raise TailTooLarge(f"tail bound {bound:.3g} at Im z = {z.imag:g} exceeds {tol:g} (B = {F.B})")
    return complex(series_values(F, np.array([z]))[0]), bound


def antiderivative(F: QExpansion, z) -> np.ndarray:
    """Phi(z) = sum a_n e^{2 pi i n z} / (2 pi i n); Phi' = F."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    n = np.arange(1, F.B + 1)
    return (np.exp(2j * math.pi * np.multiply.outer(z, n)) * (F.coeffs / (2j * math.pi * n))).sum(axis=-1)


def _tail_to_infinity(F: QExpansion, z0: complex) -> tuple[complex, float]:
    """int_{z0}^{i inf} F dz termwise, with the truncation bound."""
    err = tail_bound(F, z0.imag) / (TWO_PI * (F.B + 1))
    if err > EVAL_TOL:
        raise TailTooLarge(f"cusp tail at Im = {z0.imag:g} not resolved by B = {F.B}")
    return complex(-antiderivative(F, z0)[0]), err


# ---------------------------------------------------------------- paths


@dataclass(frozen=True)
class Cusp:
    num: int
    den: int  # 0 for infinity

    @classmethod
    def parse(cls, text: str) -> "Cusp":
        t = text.strip().lower()
        if t in ("inf", "oo", "infinity", "i*inf"):
            return cls(1, 0)
        try:
            r = Fraction(t)
        except ValueError as exc:
            raise PathSyntaxError(f"bad cusp {text!r}") from exc
        return cls(r.numerator, r.denominator)

    @property
    def is_infinity(self) -> bool:
        return self.den == 0

    @property
    def value(self) -> float:
        return math.inf if self.is_infinity else self.num / self.den

    def __str__(self) -> str:
        if self.is_infinity:
            return "inf"
        return str(self.num) if self.den == 1 else f"{self.num}/{self.den}"


@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex

    @property
    def start(self) -> complex:
        return self.z0

    @property
    def end(self) -> complex:
        return self.z1

    def at(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.z0 + (self.z1 - self.z0) * t, np.full(t.shape, self.z1 - self.z0)

    def reversed(self) -> "Line":
        return Line(self.z1, self.z0)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    t0: float
    t1: float

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.t0)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.t1)

    def at(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ang = self.t0 + (self.t1 - self.t0) * t
        e = self.radius * np.exp(1j * ang)
        return self.center + e, 1j * e * (self.t1 - self.t0)

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.t1, self.t0)


@dataclass(frozen=True)
class PathSpec:
    segments: tuple = ()
    start_cusp: Cusp | None = None
    end_cusp: Cusp | None = None
    anchor: complex | None = None  # used when there are no segments

    def __post_init__(self):
        segs = self.segments
        for s0, s1 in zip(segs[:-1], segs[1:]):
            if abs(s0.end - s1.start) > 1e-12 * max(1.0, abs(s0.end)):
                raise PathSyntaxError(f"segments do not join: {s0.end} vs {s1.start}")
        for s in segs:
            t = np.linspace(0, 1, 33)
            z, _ = s.at(t)
            if np.any(z.imag <= 0):
                raise PathSyntaxError(f"segment {s} leaves the upper half-plane")
        if not segs and self.anchor is None and not (self.start_cusp and self.end_cusp):
            raise PathSyntaxError("empty path")

    @property
    def first_point(self) -> complex | None:
        return self.segments[0].start if self.segments else self.anchor

    @property
    def last_point(self) -> complex | None:
        return self.segments[-1].end if self.segments else self.anchor

    def reversed(self) -> "PathSpec":
        return PathSpec(
            tuple(s.reversed() for s in reversed(self.segments)),
            self.end_cusp,
            self.start_cusp,
            self.anchor,
        )

    @classmethod
    def parse(cls, text: str) -> "PathSpec":
        items = [t.strip() for t in text.split(";") if t.strip()]
        segs: list = []
        start = end = None
        anchor = None
        for k, item in enumerate(items):
            m = re.fullmatch(r"(\w+)\s*\((.*)\)", item)
            if not m:
                raise PathSyntaxError(f"cannot parse path item {item!r}")
            name, args = m.group(1), [a.strip() for a in m.group(2).split(",")]
            if name == "line":
                _arity(name, args, 2)
                segs.append(Line(_cplx(args[0]), _cplx(args[1])))
            elif name == "poly":
                pts = [_cplx(a) for a in args]
                if len(pts) < 2:
                    raise PathSyntaxError("poly needs at least two points")
                segs.extend(Line(p, q) for p, q in zip(pts[:-1], pts[1:]))
            elif name == "arc":
                _arity(name, args, 4)
                segs.append(Arc(_cplx(args[0]), float(args[1]), float(args[2]), float(args[3])))
            elif name == "point":
                _arity(name, args, 1)
                anchor = _cplx(args[0])
            elif name == "from_cusp":
                if k != 0:
                    raise PathSyntaxError("from_cusp must be the first item")
                start = Cusp.parse(args[0])
            elif name == "to_cusp":
                if k != len(items) - 1:
                    raise PathSyntaxError("to_cusp must be the last item")
                end = Cusp.parse(args[0])
            else:
                raise PathSyntaxError(f"unknown path item {name!r}")
        return cls(tuple(segs), start, end, anchor)

    def to_text(self) -> str:
        parts = []
        if self.start_cusp:
            parts.append(f"from_cusp({self.start_cusp})")
        if not self.segments and self.anchor is not None:
            parts.append(f"point({_fmt(self.anchor)})")
        for s in self.segments:
            if isinstance(s, Line):
                parts.append(f"line({_fmt(s.z0)}, {_fmt(s.z1)})")
            else:
                parts.append(f"arc({_fmt(s.center)}, {s.radius!r}, {s.t0!r}, {s.t1!r})")
        if self.end_cusp:
            parts.append(f"to_cusp({self.end_cusp})")
        return "; ".join(parts)


def _arity(name: str, args: list[str], n: int) -> None:
    if len(args) != n:
        raise PathSyntaxError(f"{name} takes {n} arguments, got {len(args)}")


def _cplx(text: str) -> complex:
    t = text.replace(" ", "").replace("i", "j")
    t = re.sub(r"(^|[+\-])j", r"\g<1>1j", t)
    try:
        return complex(t)
    except ValueError as exc:
        raise PathSyntaxError(f"bad complex number {text!r}") from exc


def _fmt(z: complex) -> str:
    return f"{z.real!r}{z.imag:+.17g}i"


def line_path(z0: complex, z1: complex) -> PathSpec:
    return PathSpec((Line(complex(z0), complex(z1)),))


# ---------------------------------------------------------------- integration


@dataclass(frozen=True)
class Estimate:
    """A numerical value with an error estimate.

    ``regularized`` marks cusp integrals computed with a height cutoff;
    ``sensitivity`` is then the change when the cutoff is halved.
    """

    value: complex
    error: float
    regularized: bool = False
    sensitivity: float | None = None
    notes: tuple[str, ...] = field(default=())

    def __complex__(self) -> complex:
        return complex(self.value)

    def __float__(self) -> float:
        return float(np.real(self.value))


def _gk_batch(F: QExpansion, seg, a: np.ndarray, b: np.ndarray):
    h = (b - a) / 2
    t = (a + b)[:, None] / 2 + h[:, None] * _GK_NODES[None, :]
    z, dz = seg.at(t)
    if z.imag.min() <= 0:
        raise ValueError("quadrature node left the upper half-plane")
    bound = tail_bound(F, float(z.imag.min()))
    if bound > EVAL_TOL:
        raise TailTooLarge(
            f"tail bound {bound:.3g} at Im z = {z.imag.min():g} along the path (B = {F.B})"
        )
    vals = series_values(F, z) * dz
    K = (vals * _K_WEIGHTS).sum(axis=1) * h
    G = (vals * _G_WEIGHTS).sum(axis=1) * h
    return K, np.abs(K - G), bound * np.abs(dz).max(axis=1) * 2 * h


def integrate_segment(F: QExpansion, seg, tol: float = 1e-13, max_intervals: int = 20_000) -> Estimate:
    """Adaptive Gauss-Kronrod 7/15 of int F(z) dz along one segment."""
    total = 0j
    err = 0.0
    a = np.array([0.0])
    b = np.array([1.0])
    used = 0
    while a.size:
        K, e, tails = _gk_batch(F, seg, a, b)
        used += a.size
        ok = e <= tol * (b - a)
        total += K[ok].sum()
        err += e[ok].sum() + tails[ok].sum()
        if used > max_intervals:
            total += K[~ok].sum()
            err += e[~ok].sum()
            return Estimate(total, err, notes=("interval budget exhausted",))
        mid = (a[~ok] + b[~ok]) / 2
        a, b = np.concatenate([a[~ok], mid]), np.concatenate([mid, b[~ok]])
    return Estimate(total, err)


def _gamma0_element_to(cusp: Cusp, N: int) -> tuple[GroupElement, str]:
    """gamma in Gamma0(N) and the base cusp ('inf' or '0') it sends to ``cusp``."""
    p, q = cusp.num, cusp.den
    if cusp.is_infinity:
        return GroupElement(1, 0, 0, 1), "inf"
    if q % N == 0:
        _, x, y = xgcd(p, q)  # p x + q y = 1
        return GroupElement(p, -y, q, x), "inf"
    if math.gcd(q, N) == 1:
        g, a, t = xgcd(q, N * p)  # a q + t N p = 1
        return GroupElement(a, p, -t * N, q), "0"
    raise MethodUnavailable(f"cusp {cusp} is not Gamma0({N})-equivalent to 0 or infinity")


def _modular_cusp_integral(F: QExpansion, z0: complex, cusp: Cusp) -> Estimate:
    """int_{z0}^{cusp} F dz using the weight-2 law on Gamma0(N) and the Fricke sign."""
    N = F.level
    gamma, base = _gamma0_element_to(cusp, N)
    w0 = complex(act(gamma.inverse(), z0))
    if base == "inf":
        v, e = _tail_to_infinity(F, w0)
        return Estimate(v, e, notes=(f"cusp {cusp} ~ inf",))
    # int_0^{w} F = eps * int_{-1/(N w)}^{i inf} F
    v, e = _tail_to_infinity(F, -1.0 / (N * w0))
    return Estimate(-F.fricke * v, e, notes=(f"cusp {cusp} ~ 0 via Fricke split",))


def _regularized_cusp_integral(
    F: QExpansion, z0: complex, cusp: Cusp, y_cut: float, tol: float, drift_factor: float
) -> Estimate:
    """int_{z0}^{r + i y} F dz at y = y_cut, y_cut/2, y_cut/4."""
    r = cusp.num / cusp.den
    vals = []
    for k in range(3):
        y = y_cut / 2**k
        vals.append(integrate_segment(F, Line(z0, complex(r, y)), tol))
    d1 = abs(vals[1].value - vals[0].value)
    d2 = abs(vals[2].value - vals[1].value)
    if d2 > drift_factor * d1 and d2 > 10 * tol:
        raise DivergentCuspIntegral(
            f"cutoff drift grows toward cusp {cusp}: {d1:.3g} -> {d2:.3g}"
        )
    return Estimate(vals[0].value, vals[0].error, regularized=True, sensitivity=d1,
                    notes=(f"cusp {cusp} cut at Im = {y_cut:g}",))


def _cusp_leg(F, z0, cusp, y_cut, tol, drift_factor) -> Estimate:
    if cusp.is_infinity:
        v, e = _tail_to_infinity(F, z0)
        return Estimate(v, e)
    if F.level and F.matched and F.fricke is None:
        F = with_fricke_sign(F)
    if F.exact:
        r = cusp.num / cusp.den
        v = complex(antiderivative(F, r)[0] - antiderivative(F, z0)[0])
        return Estimate(v, 0.0, notes=("finitely supported: closed form at the cusp",))
    if F.is_modular:
        return _modular_cusp_integral(F, z0, cusp)
    return _regularized_cusp_integral(F, z0, cusp, y_cut, tol, drift_factor)


def integrate_path(
    F: QExpansion,
    path: PathSpec | str,
    tol: float = 1e-13,
    y_cut: float = 0.05,
    drift_factor: float = 1.0,
) -> Estimate:
    """int_path F(z) dz.

    Interior segments use adaptive Gauss-Kronrod; the cusp infinity uses the
    termwise closed form; rational cusps use the transformation law when F
    carries one (level and Fricke sign), the closed form when F is
    finitely supported, and otherwise a height cutoff (``regularized``).
    """
    if isinstance(path, str):
        path = PathSpec.parse(path)
    anchor = path.first_point
    if anchor is None:
        anchor = complex(0, 1 / math.sqrt(F.level)) if F.level else 1j
    total = 0j
    err = 0.0
    regularized = False
    sens = 0.0
    notes: list[str] = []
    for seg in path.segments:
        r = integrate_segment(F, seg, tol)
        total += r.value
        err += r.error
        notes.extend(r.notes)
    legs = []
    if path.end_cusp is not None:
        legs.append((path.last_point if path.last_point is not None else anchor, path.end_cusp, 1))
    if path.start_cusp is not None:
        legs.append((anchor, path.start_cusp, -1))
    for z0, cusp, sign in legs:
        r = _cusp_leg(F, z0, cusp, y_cut, tol, drift_factor)
        total += sign * r.value
        err += r.error
        regularized |= r.regularized
        sens += r.sensitivity or 0.0
        notes.extend(r.notes)
    return Estimate(total, err, regularized, sens if regularized else None, tuple(notes))


# ---------------------------------------------------------------- lattices of periods


@dataclass(frozen=True)
class PeriodLattice:
    """Z omega1 + Z omega2; discreteness is decided by lattice.classify_quotient."""

    omega1: complex
    omega2: complex
    error: float = 0.0
    regularized: bool = False
    provenance: tuple[str, ...] = ()


def period_lattice(F: QExpansion, gamma1: PathSpec | str, gamma2: PathSpec | str, tol: float = 1e-13) -> PeriodLattice:
    p1 = PathSpec.parse(gamma1) if isinstance(gamma1, str) else gamma1
    p2 = PathSpec.parse(gamma2) if isinstance(gamma2, str) else gamma2
    r1 = integrate_path(F, p1, tol)
    r2 = integrate_path(F, p2, tol)
    return PeriodLattice(
        r1.value,
        r2.value,
        r1.error + r2.error,
        r1.regularized or r2.regularized,
        (f"{F.label} :: {p1.to_text()}", f"{F.label} :: {p2.to_text()}"),
    )


def period_path(g: GroupElement, height_scale: float = 1.0) -> PathSpec:
    """Horizontal segment z0 -> g.z0 at height 1/c, the highest possible for g."""
    if g.c == 0:
        raise ValueError("need c != 0 for a period path")
    c, d = abs(g.c), g.d if g.c > 0 else -g.d
    z0 = complex(-d / c, height_scale / c)
    z1 = complex(act(g, z0))
    return line_path(z0, z1)


# ---------------------------------------------------------------- L-values


def fricke_ratios(F: QExpansion, N: int | None = None, samples: int = 5) -> np.ndarray:
    """F(-1/(N z)) / (N z^2 F(z)) at points near the Fricke fixed point i/sqrt(N)."""
    N = N or F.level
    if not N:
        raise MethodUnavailable("a level is needed for the Fricke test")
    base = 1j / math.sqrt(N)
    z = base * (1 + 0.15 * np.exp(2j * math.pi * (np.arange(samples) + 0.25) / samples))
    w = -1.0 / (N * z)
    y = float(min(z.imag.min(), w.imag.min()))
    if tail_bound(F, y) > 1e-10:
        raise TailTooLarge(f"B = {F.B} too small for the Fricke test at level {N}")
    return series_values(F, w) / (N * z * z * series_values(F, z))


def fricke_sign(F: QExpansion, N: int | None = None, samples: int = 5, tol: float = 1e-8) -> int:
    """The functional-equation sign: F(-1/(Nz)) = -sign * N z^2 F(z)."""
    rho = fricke_ratios(F, N, samples)
    for cand in (1.0, -1.0):
        if np.all(np.abs(rho - cand) <= tol):
            return -int(cand)
    raise InconsistentSamples(
        f"Fricke ratios do not agree on +-1: max deviation {np.min([np.abs(rho - 1).max(), np.abs(rho + 1).max()]):.3g}"
    )


def with_fricke_sign(F: QExpansion) -> QExpansion:
    return F if F.fricke is not None else F.with_fricke(fricke_sign(F))


def l_value_at_1(F: QExpansion, method: str = "termwise", tol: float = 1e-13) -> Estimate:
    """L(F, 1) = -2 pi i int_0^{i inf} F dz by one of three routes."""
    method = method.lower()
    if method == "termwise":
        n = np.arange(1, F.B + 1)
        return Estimate(complex((F.coeffs / n).sum()), 0.0, notes=("sum_{n<=B} a_n/n",))
    if method == "pathintegral":
        if F.exact:
            path = PathSpec((), Cusp(0, 1), Cusp(1, 0), 1j)
        elif F.level:
            F = with_fricke_sign(F)
            y = 1 / math.sqrt(F.level)
            path = PathSpec((Line(complex(0, 0.8 * y), complex(0, 1.5 * y)),), Cusp(0, 1), Cusp(1, 0))
        else:
            path = PathSpec((Line(0.05j, 1j),), Cusp(0, 1), Cusp(1, 0))
        r = integrate_path(F, path, tol)
        return Estimate(-2j * math.pi * r.value, TWO_PI * r.error, r.regularized,
                        None if r.sensitivity is None else TWO_PI * r.sensitivity, r.notes)
    if method == "smoothedsum":
        if not F.level:
            raise MethodUnavailable("SmoothedSum needs a modular series with known level")
        F = with_fricke_sign(F)
        eps = F.fricke
        # sum a_n/n (e^{-2 pi n u/sqrt N} + eps e^{-2 pi n/(u sqrt N)}) does not depend on u;
        # u != 1 keeps a vanishing value a numerical cancellation rather than a factor 1 + eps
        u = SMOOTHING_SPLIT
        a1 = TWO_PI * u / math.sqrt(F.level)
        a2 = TWO_PI / (u * math.sqrt(F.level))
        n = np.arange(1, F.B + 1)
        s = (F.coeffs / n * (np.exp(-a1 * n) + eps * np.exp(-a2 * n))).sum()
        x = math.exp(-min(a1, a2))
        tail = 0.0 if F.exact else 4 * F.growth * x ** (F.B + 1) / (1 - x)
        rounding = 1e-16 * float((np.abs(F.coeffs) / n * np.exp(-min(a1, a2) * n)).sum())
        return Estimate(complex(s), tail + rounding, notes=(f"Fricke sign {eps:+d}", f"split {u}"))
    raise MethodUnavailable(f"unknown method {method!r}")


def exp_integral_e1(x: np.ndarray) -> np.ndarray:
    """E1(x) for x > 0: power series below 1, Lentz continued fraction above."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1.0
    xs = x[small]
    if xs.size:
        term = np.ones_like(xs)
        acc = np.zeros_like(xs)
        for k in range(1, 40):
            term = term * (-xs) / k
            acc += term / k
        out[small] = -np.euler_gamma - np.log(xs) - acc
    xl = x[~small]
    if xl.size:
        # E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        tiny = 1e-300
        b = xl + 1.0
        c = np.full_like(xl, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        for k in range(1, 200):
            an = -float(k * k)
            b = b + 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            delta = c * d
            h *= delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        out[~small] = h * np.exp(-xl)
    return out


def l_derivative_at_1(F: QExpansion, N: int | None = None, kernel: str = "scipy", tol: float = 1e-12) -> Estimate:
    """L'(F, 1) = 2 sum a_n/n E1(2 pi n / sqrt(N)) for sign -1."""
    N = N or F.level
    if not N:
        raise MethodUnavailable("a level is needed")
    F = F if F.fricke is not None and F.level == N else F.with_fricke(fricke_sign(F, N))
    if F.fricke != -1:
        raise WrongSign(f"functional-equation sign is {F.fricke:+d}; the derivative formula needs -1")
    a = TWO_PI / math.sqrt(N)
    x = math.exp(-a)
    # |a_n/n E1(a n)| <= 2 growth e^{-a n} / (a n^{3/2})
    B = F.B
    for m in range(1, F.B + 1):
        if 4 * F.growth * x ** (m + 1) / (a * (m + 1) * (1 - x)) < tol:
            B = m
            break
    n = np.arange(1, B + 1)
    args = a * n
    if kernel == "scipy":
        k = special.exp1(args)
    elif kernel == "series":
        k = exp_integral_e1(args)
    else:
        raise MethodUnavailable(f"unknown kernel {kernel!r}")
    val = 2 * (F.coeffs[:B] / n * k).sum()
    tail = 0.0 if F.exact and B == F.B else 4 * F.growth * x ** (B + 1) / (a * (B + 1) * (1 - x))
    return Estimate(complex(val), tail + 1e-15 * B, notes=(f"kernel={kernel}", f"terms={B}"))
