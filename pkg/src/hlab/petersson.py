"""Pairings int_R G conj(F) dx dy over a Gamma0(N) fundamental domain.

R is the union of the coset translates g.F of the standard domain F. Each
translate is integrated in the coordinates of F: with z' = g z the area
element is dx' dy' = |c z + d|^-4 dx dy, so no y^2 weight appears anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import QExpansion, linear_combination
from .errors import MeshUnusable
from .modgroup import DomainMesh
from .pathint import TWO_PI, series_values, tail_bound

TAIL_TOL = 1e-10
_CHUNKS = 24


@dataclass(frozen=True)
class PairingResult:
    value: complex
    quadrature_error: float
    truncation_deficit: float
    mesh_id: str = ""
    per_coset: tuple[complex, ...] = ()
    dropped_nodes: int = 0
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.quadrature_error < 0 or self.truncation_deficit < 0:
            raise ValueError("error terms must be nonnegative")

    @property
    def total_error(self) -> float:
        return self.quadrature_error + self.truncation_deficit

    def to_record(self, mesh: DomainMesh | None = None) -> dict:
        rec = {
            "mesh_id": self.mesh_id,
            "value": [float(self.value.real), float(self.value.imag)],
            "quadrature_error": float(self.quadrature_error),
            "truncation_deficit": float(self.truncation_deficit),
            "dropped_nodes": int(self.dropped_nodes),
            "per_coset": [[float(v.real), float(v.imag)] for v in self.per_coset],
            "notes": list(self.notes),
        }
        if mesh is not None:
            rec["y_min"] = mesh.y_min
            rec["y_max"] = mesh.y_max
        return rec


def _values_on(F: QExpansion, z: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """F at every kept node, evaluated in height bands so that high nodes
    use short truncations; dropped nodes get 0."""
    out = np.zeros(z.shape, dtype=np.complex128)
    flat_z = z[keep]
    if flat_z.size == 0:
        return out
    order = np.argsort(flat_z.imag)
    vals = np.empty(flat_z.size, dtype=np.complex128)
    for chunk in np.array_split(order, _CHUNKS):
        if chunk.size:
            vals[chunk] = series_values(F, flat_z[chunk])
    out[keep] = vals
    return out


def _abs_majorant(F: QExpansion, y: float) -> float:
    """sup over Im z >= y of sum |a_n| e^{-2 pi n Im z} (at most the sum at y)."""
    n = np.arange(1, F.B + 1)
    return float((np.abs(F.coeffs) * np.exp(-TWO_PI * n * y)).sum()) + tail_bound(F, y)


def _check_tails(F: QExpansion, ymin: float, tol: float) -> None:
    t = tail_bound(F, ymin)
    if t > tol:
        raise MeshUnusable(
            f"{F.label or 'series'}: tail bound {t:.3g} at Im = {ymin:.4g} exceeds {tol:g}; raise B (now {F.B}) or y_min"
        )


def petersson_pairing(G: QExpansion, F: QExpansion, mesh: DomainMesh, tail_tol: float = TAIL_TOL) -> PairingResult:
    """sum over coset copies of int G(gz) conj(F(gz)) |cz+d|^-4 dx dy.

    quadrature_error is the summed per-cell Kronrod-minus-Gauss difference.
    truncation_deficit adds (a) a rigorous majorant for cells dropped because
    an image node fell below y_min, (b) a rigorous bound for the part of the
    cusp-at-infinity copy above the truncation height, and (c) an estimate for
    the other cusp caps, extrapolated from the integrand on the top cell row
    with the decay rate e^{-4 pi v / h} of a cusp form in the local variable.
    """
    w, jac = mesh.images()
    cell_ok = (w.imag >= mesh.y_min).all(axis=1)
    keep = np.broadcast_to(cell_ok[:, None], w.shape)
    dropped = int((~cell_ok).sum())
    ymin_kept = float(w.imag[cell_ok].min()) if cell_ok.any() else math.inf
    for S in (G, F):
        _check_tails(S, ymin_kept, tail_tol)

    gv = _values_on(G, w, keep)
    fv = gv if F is G else _values_on(F, w, keep)
    integrand = gv * np.conj(fv) * jac
    cell_k = (integrand * mesh.wk).sum(axis=1)
    cell_g = (integrand * mesh.wg).sum(axis=1)
    value = complex(cell_k.sum())
    qerr = float(np.abs(cell_k - cell_g).sum())

    deficit = 0.0
    notes = []
    if dropped:
        # |G F| <= MG(y) MF(y) with y the lowest image point of the cell
        ylow = w.imag[~cell_ok].min(axis=1)
        areas = (mesh.wk[~cell_ok] * jac[~cell_ok]).sum(axis=1)
        for y, ar in zip(ylow, areas):
            y = max(float(y), 1e-6)
            deficit += float(ar) * _abs_majorant(G, y) * _abs_majorant(F, y)
        notes.append(f"{dropped} cells below y_min dropped")

    cos = mesh.cosets
    per_coset = np.zeros(len(cos.reps), dtype=np.complex128)
    np.add.at(per_coset, mesh.rep_index, cell_k)
    # cusp caps: the copies attached to a cusp of width h are cut at local height top = y_max h
    nx = 2 * mesh.resolution
    per_copy = mesh.n_cells // len(cos.reps)
    column = per_copy // nx
    for ci, (num, den) in enumerate(cos.cusps):
        h = cos.widths[ci]
        top = mesh.y_max * h
        members = [i for i, c in enumerate(cos.cusp_of) if c == ci]
        if den == 0:
            deficit += _abs_majorant(G, top) * _abs_majorant(F, top) / (4 * math.pi)
            continue
        dens = []
        for i in members:
            tops = [i * per_copy + (k + 1) * column - 1 for k in range(nx)]
            dens.append(np.abs(integrand[tops]).reshape(nx, 15, 15)[:, :, -1].mean())
        # mean density times strip width h, times int_top^inf e^{-4 pi (v - top)/h} dv
        deficit += float(np.mean(dens)) * h * h / (4 * math.pi)
    return PairingResult(value, qerr, deficit, mesh.mesh_id, tuple(complex(v) for v in per_coset), dropped, tuple(notes))


@dataclass(frozen=True)
class LevelDecision:
    decision: bool | None  # None: deferred, the threshold is inside the error band
    threshold: float
    evidence: PairingResult

    @property
    def deferred(self) -> bool:
        return self.decision is None


def is_level_N(F: QExpansion, G: QExpansion, mesh: DomainMesh, threshold: float = 1e-6) -> LevelDecision:
    """(G, F) != 0 decided with a margin of ten quadrature errors."""
    res = petersson_pairing(G, F, mesh)
    band = 10 * res.quadrature_error
    if abs(res.value) > max(threshold, band):
        return LevelDecision(True, threshold, res)
    if threshold >= band:
        return LevelDecision(False, threshold, res)
    return LevelDecision(None, threshold, res)


def orthogonal_complement(F: QExpansion, G: QExpansion, mesh: DomainMesh) -> QExpansion:
    """F - (<F,G>/<G,G>) G, which pairs to zero against G."""
    gg = petersson_pairing(G, G, mesh).value
    fg = petersson_pairing(F, G, mesh).value
    return linear_combination([(1.0, F), (-fg / gg, G)], label=f"{F.label}-perp")


@dataclass(frozen=True)
class LinearityReport:
    lhs: complex
    rhs: complex
    residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tolerance


def pairing_linearity_check(
    G: QExpansion, F1: QExpansion, F2: QExpansion, a: complex, b: complex, mesh: DomainMesh
) -> LinearityReport:
    """(G, a F1 + b F2) against conj(a)(G, F1) + conj(b)(G, F2)."""
    p1 = petersson_pairing(G, F1, mesh)
    p2 = petersson_pairing(G, F2, mesh)
    comb = linear_combination([(a, F1), (b, F2)])
    p = petersson_pairing(G, comb, mesh)
    rhs = np.conj(a) * p1.value + np.conj(b) * p2.value
    tol = p.quadrature_error + abs(a) * p1.quadrature_error + abs(b) * p2.quadrature_error
    tol += 1e-12 * (abs(p.value) + abs(rhs))
    return LinearityReport(p.value, complex(rhs), float(abs(p.value - rhs)), float(tol))
