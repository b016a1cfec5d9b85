import math

import numpy as np
import pytest

from hlab.coefficients import DEFORMED, AngleProfile, extend_coefficients, linear_combination
from hlab.arith import primes_up_to
from hlab.errors import MeshUnusable
from hlab.lattice import default_period_paths
from hlab.modgroup import build_domain_mesh
from hlab.pathint import period_lattice
from hlab.petersson import (
    PairingResult,
    is_level_N,
    orthogonal_complement,
    pairing_linearity_check,
    petersson_pairing,
)

# published modular degrees of the optimal curves
MODULAR_DEGREE = {"11a": 1, "37a": 2, "37b": 2}


@pytest.fixture(scope="module")
def mesh11():
    return build_domain_mesh(11, resolution=1)


@pytest.fixture(scope="module")
def mesh37():
    return build_domain_mesh(37, resolution=1)


@pytest.fixture(scope="module")
def f11(curves):
    from hlab.catalog import newform

    return newform("11a", 3000, curves)


def lattice_covolume(F, label):
    g1, g2 = default_period_paths(label)
    lat = period_lattice(F, g1, g2)
    return abs((lat.omega1.conjugate() * lat.omega2).imag)


def test_result_invariants():
    with pytest.raises(ValueError):
        PairingResult(1.0, -1e-3, 0.0)
    r = PairingResult(1.0, 1e-3, 2e-3, "m", (1.0,))
    assert r.total_error == pytest.approx(3e-3)
    assert r.to_record()["mesh_id"] == "m"


def test_self_pairing_11a(f11, mesh11):
    r = petersson_pairing(f11, f11, mesh11)
    assert r.value.real > 0 and abs(r.value.imag) < r.quadrature_error
    # the integral of |f|^2 over X0(N) equals (modular degree) x (covolume of the period lattice)
    oracle = MODULAR_DEGREE["11a"] * lattice_covolume(f11, "11a")
    assert abs(r.value.real - oracle) < 1e-12
    assert r.value.real == pytest.approx(0.046900147873495, abs=1e-13)


def test_refinement_is_cauchy(f11):
    vals = []
    for res in (1, 2, 3):
        vals.append(petersson_pairing(f11, f11, build_domain_mesh(11, resolution=res)))
    for a, b in zip(vals, vals[1:]):
        assert abs(a.value - b.value) <= a.quadrature_error
        assert b.quadrature_error <= a.quadrature_error / 2
    assert f"{vals[0].value.real:.3g}" == f"{vals[-1].value.real:.3g}"


@pytest.mark.parametrize("label", ["37a", "37b"])
def test_self_pairing_level_37(forms_long, mesh37, label):
    F = forms_long[label]
    r = petersson_pairing(F, F, mesh37)
    oracle = MODULAR_DEGREE[label] * lattice_covolume(F, label)
    assert abs(r.value - oracle) < 1e-9


def test_level_37_orthogonality_and_symmetry(forms_long, mesh37):
    f, g = forms_long["37a"], forms_long["37b"]
    ff = petersson_pairing(f, f, mesh37).value.real
    gg = petersson_pairing(g, g, mesh37).value.real
    fg = petersson_pairing(f, g, mesh37)
    gf = petersson_pairing(g, f, mesh37)
    assert abs(fg.value) < 5e-3 * math.sqrt(ff * gg)
    assert abs(fg.value) < 1e-9
    assert abs(fg.value - gf.value.conjugate()) <= fg.quadrature_error + gf.quadrature_error


def test_per_coset_parts_sum(f11, mesh11):
    r = petersson_pairing(f11, f11, mesh11)
    assert len(r.per_coset) == 12
    assert abs(sum(r.per_coset) - r.value) < 1e-15
    rec = r.to_record(mesh11)
    assert rec["y_min"] == mesh11.y_min and len(rec["per_coset"]) == 12


def test_y_min_sensitivity_modular(f11):
    a = petersson_pairing(f11, f11, build_domain_mesh(11, y_min=0.04))
    b = petersson_pairing(f11, f11, build_domain_mesh(11, y_min=0.02))
    assert a.dropped_nodes > b.dropped_nodes > 0
    assert abs(a.value - b.value) < 2 * a.truncation_deficit


def test_mesh_unusable_for_short_series(f11, mesh11):
    with pytest.raises(MeshUnusable):
        petersson_pairing(f11.truncated(200), f11, mesh11)


def test_deformed_sensitivity_is_reported(f11):
    rng = np.random.default_rng(11)
    F = extend_coefficients(AngleProfile({p: float(rng.uniform(0, math.pi)) for p in primes_up_to(3000)}), 3000, DEFORMED)
    a = petersson_pairing(f11, F, build_domain_mesh(11, y_min=0.04))
    b = petersson_pairing(f11, F, build_domain_mesh(11, y_min=0.02))
    assert np.isfinite(a.value) and np.isfinite(b.value)
    assert a.truncation_deficit > 0 and b.truncation_deficit > 0


# ---------------------------------------------------------------- level predicate


def test_is_level_n(f11, mesh11):
    d = is_level_N(f11, f11, mesh11)
    assert d.decision is True and not d.deferred


def test_orthogonal_complement_is_not_level_n(forms_long, mesh37):
    f, g = forms_long["37a"], forms_long["37b"]
    mix = linear_combination([(1.0, f), (0.5, g)])
    perp = orthogonal_complement(mix, f, mesh37)
    assert abs(petersson_pairing(f, perp, mesh37).value) < 1e-12
    d = is_level_N(perp, f, mesh37, threshold=1e-6)
    assert d.decision is False


def test_deferred_decision(forms_long, mesh37):
    f, g = forms_long["37a"], forms_long["37b"]
    d = is_level_N(g, f, mesh37, threshold=1e-20)
    assert d.deferred and d.decision is None


# ---------------------------------------------------------------- linearity


def test_linearity_trivial_cases(f11, mesh11):
    rep = pairing_linearity_check(f11, f11, f11, 1.0, 0.0, mesh11)
    assert rep.residual == 0.0
    rep = pairing_linearity_check(f11, f11, f11, 0.5, 0.5, mesh11)
    assert rep.ok


def test_linearity_random(forms_long, mesh37):
    f, g = forms_long["37a"], forms_long["37b"]
    rng = np.random.default_rng(5)
    a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    rep = pairing_linearity_check(f, f, g, a, b, mesh37)
    assert rep.ok
    # the second slot is conjugate-linear
    assert abs(rep.lhs - np.conj(a) * petersson_pairing(f, f, mesh37).value) < 1e-9
