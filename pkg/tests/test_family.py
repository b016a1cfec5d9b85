import json
import math

import numpy as np
import pytest

from hlab.coefficients import DEFORMED, AngleProfile, hecke_system_from_curve, verify_hecke_relations
from hlab.errors import DomainError
from hlab.family import (
    ANGLE_HOMOTOPY,
    CSV_COLUMNS,
    INCONCLUSIVE,
    RANK0,
    RANK1,
    SEGMENT,
    FamilyReport,
    FamilySpec,
    StepRecord,
    affinity_residual,
    family_l_value,
    materialize,
    rank_report,
    run_manifest,
    scan_degeneracy,
    scan_l_vanishing,
    scan_pairing_sign,
)
from hlab.lattice import ELLIPTIC, default_period_paths
from hlab.modgroup import build_domain_mesh
from hlab.pathint import l_value_at_1
from hlab.quadclass import build_field, gross_zagier_pairing


def segment(f1, f2, steps=5, paths=None):
    return FamilySpec(SEGMENT, steps, f1=f1, f2=f2, paths=paths)


@pytest.fixture(scope="module")
def mesh37():
    return build_domain_mesh(37, resolution=1)


# ---------------------------------------------------------------- specs and materialize


def test_spec_validation(forms):
    with pytest.raises(ValueError):
        FamilySpec(SEGMENT, 1, f1=forms["11a"], f2=forms["11a"])
    with pytest.raises(ValueError):
        FamilySpec(SEGMENT, 3, f1=forms["11a"])
    with pytest.raises(ValueError):
        FamilySpec("spiral", 3)
    assert segment(forms["11a"], forms["11a"], 5).ts == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_segment_endpoints_exact(forms):
    spec = segment(forms["37a"], forms["37b"])
    assert np.array_equal(materialize(spec, 1.0).coeffs, forms["37a"].coeffs)
    assert np.array_equal(materialize(spec, 0.0).coeffs, forms["37b"].coeffs)
    mid = materialize(spec, 0.5).coeffs
    assert np.array_equal(mid, (forms["37a"].coeffs + forms["37b"].coeffs) / 2)
    assert materialize(spec, 0.5).hecke is None
    with pytest.raises(DomainError):
        materialize(spec, 1.5)


def test_angle_homotopy_stays_deformed(curves):
    base = hecke_system_from_curve(curves["11a"], 300)
    target = AngleProfile({p: math.pi / 2 for p in base.ap})
    spec = FamilySpec(ANGLE_HOMOTOPY, 5, base=base, target=target, B=300)
    for t in spec.ts:
        F = materialize(spec, t)
        assert F.hecke == DEFORMED
        assert verify_hecke_relations(F, 1, DEFORMED) == []
    end = materialize(spec, 1.0)
    assert all(abs(end.a(p)) < 1e-12 for p in (2, 3, 5, 7, 11))


def test_report_invariants():
    with pytest.raises(ValueError):
        FamilyReport({}, [StepRecord(0.0, SEGMENT), StepRecord(0.0, SEGMENT), StepRecord(1.0, SEGMENT)])
    with pytest.raises(ValueError):
        FamilyReport({}, [StepRecord(0.0, SEGMENT), StepRecord(0.5, SEGMENT)])


# ---------------------------------------------------------------- degeneracy


def test_constant_family_is_elliptic(forms):
    f = forms["11a"]
    rep = scan_degeneracy(segment(f, f, 4, default_period_paths("11a")))
    js = [r.j for r in rep.records]
    assert all(r.classification == ELLIPTIC for r in rep.records) and rep.flagged == []
    assert max(abs(j - js[0]) for j in js) < 1e-8 * abs(js[0])


def test_segment_f_to_2f_keeps_j(forms):
    f = forms["11a"]
    rep = scan_degeneracy(segment(f.scaled(2), f, 5, default_period_paths("11a")))
    w = [r.omega1 for r in rep.records]
    assert affinity_residual(w, [r.t for r in rep.records]) < 1e-14
    assert abs(w[-1] - 2 * w[0]) < 1e-14
    js = [r.j for r in rep.records]
    assert max(abs(j - js[0]) for j in js) < 1e-8 * abs(js[0])


def test_angle_homotopy_scan_records(curves):
    base = hecke_system_from_curve(curves["11a"], 2000)
    target = AngleProfile({p: math.pi / 2 for p in base.ap})
    spec = FamilySpec(ANGLE_HOMOTOPY, 3, base=base, target=target, B=2000,
                      paths=default_period_paths("11a"))
    rep = scan_degeneracy(spec)
    assert len(rep.records) == 3
    assert all(r.classification is not None or r.flags for r in rep.records)


# ---------------------------------------------------------------- L-values


def test_rank1_segment_vanishes(forms):
    rep = scan_l_vanishing(segment(forms["91a"], forms["91b"], 6))
    assert all("L_vanishes" in r.flags for r in rep.records)
    assert "fricke-split" in rep.notes[-1]


def test_rank0_to_rank1_segment(forms):
    rep = scan_l_vanishing(segment(forms["11a"], forms["37a"], 6))
    assert rep.flagged == [0.0]
    assert any("no family of a single level" in n for n in rep.notes)
    L11 = l_value_at_1(forms["11a"], "smoothedsum").value
    assert affinity_residual([r.L for r in rep.records], [r.t for r in rep.records]) < 1e-12
    assert abs(rep.records[-1].L - L11) < 1e-14


def test_constant_rank0_family_no_flags(forms):
    rep = scan_l_vanishing(segment(forms["37b"], forms["37b"], 4))
    assert rep.flagged == []


def test_segment_l_affine(forms):
    rep = scan_l_vanishing(segment(forms["37a"], forms["37b"], 7))
    assert affinity_residual([r.L for r in rep.records], [r.t for r in rep.records]) < 1e-10
    assert abs(rep.records[0].L - 0.7256810619361528) < 1e-12


def test_generic_family_uses_termwise(curves):
    base = hecke_system_from_curve(curves["11a"], 400)
    spec = FamilySpec(ANGLE_HOMOTOPY, 2, base=base, target=AngleProfile({2: 1.0}), B=400)
    _, err, how = family_l_value(spec, 0.5)
    assert how == "termwise" and math.isnan(err)


# ---------------------------------------------------------------- pairings


def test_pairing_sign_positive_segment(forms_long, mesh37):
    f1 = forms_long["37a"]
    f2 = f1.scaled(0.3)
    rep = scan_pairing_sign(segment(f1, f2, 5), f1, mesh37, "f1")
    vals = [r.pairings["f1"] for r in rep.records]
    assert all(v.real > 0 for v in vals) and rep.flagged == []
    errs = [r.pairing_errors["f1"] for r in rep.records]
    assert affinity_residual(vals, [r.t for r in rep.records]) < 3 * max(errs)


def test_pairing_sign_change_located(forms_long, mesh37):
    f1 = forms_long["37a"]
    f2 = f1.scaled(-0.2625)
    rep = scan_pairing_sign(segment(f1, f2, 5), f1, mesh37, "f1")
    # P(t) = (t - 0.2625 (1 - t)) <f1, f1> vanishes at t = 0.2625 / 1.2625
    assert rep.crossing_t == pytest.approx(0.2625 / 1.2625, abs=1e-9)
    assert rep.flagged == [0.25]


def test_pairing_scan_orthogonal_endpoint(forms_long, mesh37):
    rep = scan_pairing_sign(segment(forms_long["37a"], forms_long["37b"], 3), forms_long["37a"], mesh37)
    assert rep.crossing_t is None
    assert any("do not qualify" in n for n in rep.notes)


# ---------------------------------------------------------------- verdicts and output


def test_rank_reports(forms, curves):
    L11 = l_value_at_1(forms["11a"], "smoothedsum").value
    assert rank_report(curves["11a"], {"L": L11, "tol": 1e-8}).verdict == RANK0
    f = forms["37a"]
    gz = gross_zagier_pairing(f, build_field(-3))
    L37 = l_value_at_1(f, "smoothedsum").value
    v = rank_report(curves["37a"], {"L": L37, "tol": 1e-8, "pairing": gz.value, "pairing_error": gz.error})
    assert v.verdict == RANK1 and "Kolyvagin" in v.citation
    assert rank_report(curves["37a"], {"L": 5e-8, "tol": 1e-8}).verdict == INCONCLUSIVE
    assert rank_report(curves["37a"], {"L": 0.0, "tol": 1e-8}).verdict == INCONCLUSIVE


def test_csv_and_manifest_reproducible(forms):
    spec = segment(forms["37a"], forms["37b"], 4, default_period_paths("37a"))
    a = scan_degeneracy(spec)
    b = scan_degeneracy(spec)
    assert a.to_csv() == b.to_csv()
    header = a.to_csv().splitlines()[0].split(",")
    assert tuple(header[: len(CSV_COLUMNS)]) == CSV_COLUMNS and header[-1] == "flags"
    m = json.loads(run_manifest(spec, a, {"tol": 1e-9}))
    assert m["family"]["csv_sha256"] == json.loads(run_manifest(spec, b, {"tol": 1e-9}))["family"]["csv_sha256"]
    assert m["family"]["spec"]["kind"] == SEGMENT
