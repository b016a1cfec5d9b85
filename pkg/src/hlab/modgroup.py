"""PSL2(Z) action, Gamma0(N) right-coset systems, and quadrature meshes on
coset translates of the standard fundamental domain."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arith import index_gamma0, xgcd
from .errors import ConfigError

# Gauss-Kronrod 7/15 on [-1, 1]: (node, gauss weight, kronrod weight)
_GK_NODES = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_K_WEIGHTS = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_G_WEIGHTS = np.zeros(15)
_G_WEIGHTS[1::2] = [
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


@dataclass(frozen=True)
class GroupElement:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.tuple} is not 1")

    @property
    def tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        a, b, c, d = self.tuple
        e, f, g, h = other.tuple
        return GroupElement(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def canonical(self) -> tuple[int, int, int, int]:
        """Projective representative: first nonzero of (c, d) positive."""
        t = self.tuple
        if self.c < 0 or (self.c == 0 and self.d < 0):
            t = tuple(-x for x in t)
        return t

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupElement) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def in_gamma0(self, N: int) -> bool:
        return self.c % N == 0


IDENTITY = GroupElement(1, 0, 0, 1)
S = GroupElement(0, -1, 1, 0)


def T(k: int = 1) -> GroupElement:
    return GroupElement(1, k, 0, 1)


def act(g: GroupElement, z):
    """(az + b)/(cz + d); works on scalars and numpy arrays."""
    return (g.a * z + g.b) / (g.c * z + g.d)


def _same_coset(g: GroupElement, h: GroupElement, N: int) -> bool:
    # g h^{-1} has lower-left entry c_g d_h - d_g c_h
    return (g.c * h.d - g.d * h.c) % N == 0


@dataclass(frozen=True)
class CosetSystem:
    """Right cosets Gamma0(N) g, grouped by cusp: reps g_cusp T^k for k in a
    window of length equal to the cusp width, centred so translates sit as
    high in the upper half-plane as possible."""

    level: int
    reps: tuple[GroupElement, ...]
    cusp_of: tuple[int, ...]  # index into cusps for every rep
    cusps: tuple[tuple[int, int], ...]  # (numerator, denominator); (1, 0) is infinity
    widths: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.reps)

    def coset_index(self, g: GroupElement) -> int:
        for i, r in enumerate(self.reps):
            if _same_coset(g, r, self.level):
                return i
        raise ValueError("no matching coset")  # unreachable for a complete system


def _lift_bottom_row(c: int, d: int, N: int) -> GroupElement:
    """Some matrix in SL2(Z) with bottom row congruent to (c, d) mod N, c > 0 or (0, 1)."""
    if c == 0:
        return IDENTITY
    dd = d
    while math.gcd(c, dd) != 1:
        dd += N
    g, x, y = xgcd(dd, c)
    # a dd - b c = 1 with a = x, b = -y
    return GroupElement(x, -y, c, dd)


def coset_representatives(N: int) -> CosetSystem:
    if N < 1:
        raise ConfigError("level must be positive")
    reps: list[GroupElement] = []
    cusp_of: list[int] = []
    cusps: list[tuple[int, int]] = []
    widths: list[int] = []
    divisors = [c for c in range(1, N + 1) if N % c == 0]
    candidates = [(0, 1)] + [(c, d) for c in divisors if c != N for d in range(N)]
    for c, d in candidates:
        if math.gcd(math.gcd(c, d), N) != 1:
            continue
        g = _lift_bottom_row(c, d, N)
        if any(_same_coset(g, r, N) for r in reps):
            continue
        orbit = [g]
        while True:
            nxt = orbit[-1] @ T(1)
            if _same_coset(nxt, g, N):
                break
            orbit.append(nxt)
        h = len(orbit)
        k0 = 0
        if g.c:
            # centre k + d/c in [-h/2, h/2]
            k0 = -math.floor(g.d / g.c + (h - 1) / 2 + 0.5)
        cusps.append((g.a, g.c) if g.c else (1, 0))
        widths.append(h)
        for k in range(k0, k0 + h):
            reps.append(g @ T(k))
            cusp_of.append(len(cusps) - 1)
    if len(reps) != index_gamma0(N):
        raise RuntimeError(f"coset enumeration found {len(reps)} reps, expected {index_gamma0(N)}")
    return CosetSystem(N, tuple(reps), tuple(cusp_of), tuple(cusps), tuple(widths))


def reduce_to_standard_domain(z: complex, max_iter: int = 10_000) -> tuple[complex, GroupElement]:
    """Return (z0, g) with g.z = z0, |Re z0| <= 1/2, |z0| >= 1.

    Boundary convention: Re z0 = +1/2 is moved to -1/2, and on |z0| = 1 the
    point with Re z0 <= 0 is kept.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("point must lie in the upper half-plane")
    g = IDENTITY
    for _ in range(max_iter):
        n = math.floor(z.real + 0.5)
        if n:
            z -= n
            g = T(-n) @ g
        if abs(z) < 1 - 1e-15:
            z = -1 / z
            g = S @ g
            continue
        break
    if z.real >= 0.5 - 1e-15 and z.real > 0:
        if abs(z.real - 0.5) < 1e-14:
            z -= 1
            g = T(-1) @ g
    if abs(abs(z) - 1) < 1e-14 and z.real > 1e-15:
        z = -1 / z
        g = S @ g
    return z, g


@dataclass(frozen=True, eq=False)
class DomainMesh:
    """Quadrature cells on the standard domain F truncated at v <= y_max * width,
    one copy per coset representative.

    Every cell is a tensor Gauss-Kronrod 7/15 rule: ``nodes`` is (cells, 225)
    complex, ``wk``/``wg`` the Kronrod/Gauss weights including the Jacobian.
    ``rep_index`` gives, for every cell, the coset representative it is
    pushed forward by.
    """

    level: int
    y_min: float
    y_max: float
    resolution: int
    cosets: CosetSystem
    nodes: np.ndarray
    wk: np.ndarray
    wg: np.ndarray
    rep_index: np.ndarray
    cap_area: float  # hyperbolic area above the truncation, summed over copies

    @property
    def n_cells(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def mesh_id(self) -> str:
        return f"G0({self.level})-r{self.resolution}-y{self.y_min:g}-{self.y_max:g}"

    def images(self) -> tuple[np.ndarray, np.ndarray]:
        """(g.z at every node, |c z + d|^-4 Jacobian factor)."""
        reps = self.cosets.reps
        a = np.array([reps[i].a for i in self.rep_index], dtype=float)[:, None]
        b = np.array([reps[i].b for i in self.rep_index], dtype=float)[:, None]
        c = np.array([reps[i].c for i in self.rep_index], dtype=float)[:, None]
        d = np.array([reps[i].d for i in self.rep_index], dtype=float)[:, None]
        den = c * self.nodes + d
        return (a * self.nodes + b) / den, np.abs(den) ** -4

    def euclidean_area(self) -> float:
        return float(self.wk.sum())

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "resolution": self.resolution,
            "reps": [r.tuple for r in self.cosets.reps],
            "rep_index": self.rep_index.tolist(),
            "nodes_re": self.nodes.real.tolist(),
            "nodes_im": self.nodes.imag.tolist(),
            "wk": self.wk.tolist(),
            "wg": self.wg.tolist(),
            "cap_area": self.cap_area,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DomainMesh":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            level=data["level"],
            y_min=data["y_min"],
            y_max=data["y_max"],
            resolution=data["resolution"],
            cosets=coset_representatives(data["level"]),
            nodes=np.array(data["nodes_re"]) + 1j * np.array(data["nodes_im"]),
            wk=np.array(data["wk"]),
            wg=np.array(data["wg"]),
            rep_index=np.array(data["rep_index"], dtype=np.int64),
            cap_area=data["cap_area"],
        )


def _tensor_cell(x0: float, x1: float, s0: float, s1: float, vmap):
    """Tensor GK15 cell on [x0,x1] x [s0,s1] with v = vmap(x, s) -> (v, dv/ds)."""
    hx, hs = (x1 - x0) / 2, (s1 - s0) / 2
    x = x0 + hx * (_GK_NODES + 1)
    s = s0 + hs * (_GK_NODES + 1)
    X, Sg = np.meshgrid(x, s, indexing="ij")
    V, J = vmap(X, Sg)
    wk = np.outer(_K_WEIGHTS, _K_WEIGHTS) * hx * hs * J
    wg = np.outer(_G_WEIGHTS, _G_WEIGHTS) * hx * hs * J
    return (X + 1j * V).ravel(), wk.ravel(), wg.ravel()


def _template_cells(resolution: int, top: float):
    """Cells covering F truncated at Im <= top (top >= 1)."""
    nx = 2 * resolution
    nv = 4 * resolution
    xs = np.linspace(-0.5, 0.5, nx + 1)
    cells = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        def arc(X, Sg):
            low = np.sqrt(1 - X * X)
            return low + Sg * (1 - low), 1 - low

        cells.append(_tensor_cell(x0, x1, 0.0, 1.0, arc))
        # log-spaced slices of 1 <= v <= top
        ls = np.linspace(0.0, math.log(top), nv + 1)
        for l0, l1 in zip(ls[:-1], ls[1:]):
            cells.append(_tensor_cell(x0, x1, l0, l1, lambda X, Sg: (np.exp(Sg), np.exp(Sg))))
    return cells


def build_domain_mesh(N: int, y_min: float = 1e-3, y_max: float = 8.0, resolution: int = 1) -> DomainMesh:
    """Mesh of a fundamental domain for Gamma0(N).

    ``y_max`` is measured in each cusp's local coordinate: the copy attached
    to a cusp of width h is truncated at Im w <= y_max * h.  ``y_min`` is the
    smallest admissible Im(g.z) of an image node; nodes below it are dropped
    at evaluation time (see petersson).
    """
    if not (0 < y_min < y_max):
        raise ConfigError(f"need 0 < y_min < y_max, got {y_min}, {y_max}")
    if y_max < 1:
        raise ConfigError("y_max must be at least 1 (the domain reaches Im = 1)")
    if resolution < 1:
        raise ConfigError("resolution must be >= 1")
    cosets = coset_representatives(N)
    per_width: dict[int, list] = {}
    nodes, wk, wg, rep_index = [], [], [], []
    cap = 0.0
    for i, cusp in enumerate(cosets.cusp_of):
        h = cosets.widths[cusp]
        if h not in per_width:
            per_width[h] = _template_cells(resolution, y_max * h)
        for z, k, g in per_width[h]:
            nodes.append(z)
            wk.append(k)
            wg.append(g)
            rep_index.append(i)
        cap += 1.0 / (y_max * h)
    return DomainMesh(
        level=N,
        y_min=y_min,
        y_max=y_max,
        resolution=resolution,
        cosets=cosets,
        nodes=np.array(nodes),
        wk=np.array(wk),
        wg=np.array(wg),
        rep_index=np.array(rep_index, dtype=np.int64),
        cap_area=cap,
    )


def truncated_domain_area(top: float) -> float:
    """Euclidean area of {|x| <= 1/2, |z| >= 1, Im z <= top}."""
    return top - (math.pi / 6 + math.sqrt(3) / 4)
