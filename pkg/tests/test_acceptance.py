"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

The lines are printed as they are decided and repeated in the terminal summary,
so ``pytest tests/test_acceptance.py`` shows all twelve verdicts together.
Run ``python tests/test_acceptance.py`` for the verdict lines alone.
"""

import json
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from hlab.catalog import load_catalog, newform
from hlab.cli import run as cli_run
from hlab.coefficients import NEWFORM, extend_coefficients, hecke_system_from_curve, theta_from_ap, verify_hecke_relations
from hlab.family import SEGMENT, FamilySpec, affinity_residual, scan_l_vanishing, scan_pairing_sign
from hlab.lattice import classify_quotient, default_period_paths, j_from_curve
from hlab.modgroup import build_domain_mesh
from hlab.pathint import PathSpec, fricke_ratios, fricke_sign, integrate_path, l_value_at_1, line_path, period_lattice
from hlab.petersson import petersson_pairing
from hlab.quadclass import build_field, gross_zagier_pairing, ideal_counts_by_enumeration, scan_admissible_discriminant, theta_series, verify_factorization

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def catalog():
    return load_catalog()


@pytest.fixture(scope="module")
def level37(catalog):
    return {label: newform(label, 3000, catalog) for label in ("37a", "37b")}


@pytest.fixture(scope="module")
def mesh37():
    return build_domain_mesh(37, resolution=1)


def test_criterion_01_hecke_consistency(catalog):
    B = 10_000
    worst, bad = 0.0, []
    for label, curve in catalog.items():
        start = time.perf_counter()
        F = extend_coefficients(hecke_system_from_curve(curve, B), B, NEWFORM)
        violations = verify_hecke_relations(F, curve.conductor, NEWFORM)
        elapsed = time.perf_counter() - start
        worst = max(worst, elapsed)
        if violations or elapsed >= 30:
            bad.append(label)
    record(1, "Hecke consistency", not bad,
           f"{len(catalog)} curves to B = {B}, violations in {bad or 'none'}, slowest {worst:.1f} s")


def test_criterion_02_hasse_and_angles(catalog):
    checked, failures = 0, []
    for label, curve in catalog.items():
        for p, a in hecke_system_from_curve(curve, 1000).ap.items():
            if not curve.is_good(p):
                continue
            checked += 1
            theta = theta_from_ap(a, p)
            if not (abs(a) <= 2 * math.sqrt(p) and 0 <= theta <= math.pi):
                failures.append((label, p))
    record(2, "Hasse bound and angles", not failures, f"{checked} good primes, {len(failures)} failures")


def test_criterion_03_end_to_end_j(catalog):
    start = time.perf_counter()
    F = newform("11a", 2000, catalog)
    lat = period_lattice(F, *default_period_paths("11a"))
    c = classify_quotient(lat)
    exact = float(j_from_curve(catalog["11a"]))
    rel = abs(c.j - exact) / abs(exact)
    elapsed = time.perf_counter() - start
    record(3, "End-to-end j", rel <= 1e-6 and elapsed < 120,
           f"relative error {rel:.2e} against {exact:.6f}, {elapsed:.1f} s")


def test_criterion_04_path_independence(catalog):
    F = newform("11a", 2000, catalog)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        z0, z1, via = (complex(rng.uniform(-1, 1), rng.uniform(0.2, 1.5)) for _ in range(3))
        direct = integrate_path(F, line_path(z0, z1)).value
        bent = integrate_path(F, PathSpec.parse(
            f"poly({z0.real}+{z0.imag}i, {via.real}+{via.imag}i, {z1.real}+{z1.imag}i)")).value
        worst = max(worst, abs(direct - bent))
    record(4, "Path independence", worst <= 1e-9, f"20 pairs, max difference {worst:.2e}")


def test_criterion_05_l_value_signals(catalog):
    vals = {}
    for label in ("11a", "37a"):
        F = newform(label, 2000, catalog)
        vals[label] = (l_value_at_1(F, "smoothedsum").value, l_value_at_1(F, "pathintegral").value)
    diff = max(abs(a - b) for a, b in vals.values())
    ok = abs(vals["37a"][0]) <= 1e-4 and vals["11a"][0].real >= 0.1 and diff <= 1e-6
    record(5, "L-value rank signals", ok,
           f"L(11a) = {vals['11a'][0].real:.12f}, |L(37a)| = {abs(vals['37a'][0]):.1e}, methods differ by {diff:.1e}")


def test_criterion_06_fricke_sign(catalog):
    parts, ok = [], True
    for label, expected in (("11a", 1), ("37a", -1), ("37b", 1)):
        F = newform(label, 2000, catalog)
        eps = fricke_sign(F)
        spread = float(np.abs(fricke_ratios(F) + eps).max())
        L = abs(l_value_at_1(F, "smoothedsum").value)
        # sign -1 forces L(f, 1) = 0, sign +1 goes with a nonvanishing value here
        ok &= eps == expected and spread <= 1e-8 and ((eps == -1) == (L < 1e-4))
        parts.append(f"{label} {eps:+d} (spread {spread:.0e})")
    record(6, "Fricke sign", ok, ", ".join(parts))


def test_criterion_07_theta_oracle():
    mismatches = 0
    for D in (-3, -4, -7, -8, -11, -23):
        k = build_field(D)
        ideals = ideal_counts_by_enumeration(k, 200)
        for i in range(k.h):
            th = theta_series(k, i, 200)
            mismatches += th[0] != Fraction(1, k.w)
            mismatches += sum(th[n] != ideals[i][n] for n in range(1, 201))
    record(7, "Theta oracle", mismatches == 0, f"6 fields, all classes, n <= 200, {mismatches} mismatches")


def test_criterion_08_factorization(catalog):
    parts, ok = [], True
    for label, D in (("37a", -3), ("11a", -7)):
        rep = verify_factorization(newform(label, 2000, catalog), build_field(D), 200)
        ok &= rep.ok and rep.nonzero() == []
        parts.append(f"{label} with D = {D}: {len(rep.nonzero())} nonzero residuals")
    record(8, "Factorization identity", ok, "; ".join(parts))


def test_criterion_09_petersson(catalog, level37, mesh37):
    start = time.perf_counter()
    f, g = level37["37a"], level37["37b"]
    ff, gg, fg = (petersson_pairing(x, y, mesh37) for x, y in ((f, f), (g, g), (f, g)))
    positive = all(r.value.real > 0 and abs(r.value.imag) < 1e-6 * r.value.real for r in (ff, gg))
    ratio = abs(fg.value) / math.sqrt(ff.value.real * gg.value.real)
    f11 = newform("11a", 3000, catalog)
    errs = [petersson_pairing(f11, f11, build_domain_mesh(11, resolution=r)).quadrature_error for r in (1, 2)]
    elapsed = time.perf_counter() - start
    ok = positive and ratio < 5e-3 and errs[1] <= errs[0] / 2 and elapsed < 300
    record(9, "Petersson quadrature", ok,
           f"orthogonality ratio {ratio:.1e}, error {errs[0]:.1e} -> {errs[1]:.1e} on refinement, {elapsed:.0f} s")


def test_criterion_10_gross_zagier(catalog):
    f = newform("37a", 2000, catalog)
    k, _ = scan_admissible_discriminant(f)
    p = gross_zagier_pairing(f, k)
    record(10, "Gross-Zagier positivity", p.value > 0 and p.value > 10 * p.error,
           f"D = {k.D}, value {p.value:.12f}, error {p.error:.1e}")


def test_criterion_11_family_linearity(level37, mesh37):
    f, g = level37["37a"], level37["37b"]
    rep = scan_l_vanishing(FamilySpec(SEGMENT, 7, f1=f, f2=g))
    l_res = affinity_residual([r.L for r in rep.records], [r.t for r in rep.records])
    spec = FamilySpec(SEGMENT, 5, f1=f, f2=f.scaled(0.3))
    prep = scan_pairing_sign(spec, f, mesh37, "f")
    vals = [r.pairings["f"] for r in prep.records]
    tol = sum(r.pairing_errors["f"] for r in prep.records)
    p_res = affinity_residual(vals, [r.t for r in prep.records])
    constant = all(v.real > 0 for v in vals) and prep.crossing_t is None
    ok = l_res <= 1e-10 and p_res <= tol and constant
    record(11, "Family linearity", ok,
           f"L residual {l_res:.1e}, pairing residual {p_res:.1e} within {tol:.1e}, sign constant {constant}")


def test_criterion_12_determinism(tmp_path):
    configs = {
        "coeffs": {"coeffs": {"B": 200}},
        "periods": {"periods": {"B": 2000}},
        "lseries": {"lseries": {"labels": ["11a", "37a"], "B": 1500}},
        "theta": {"theta": {"B": 60}},
        "pairing": {"pairing": {"labels": ["11a"], "B": 3000}},
        "scan": {"scan": {"steps": 3}},
    }
    differing = []
    for cmd, cfg in configs.items():
        src = tmp_path / f"{cmd}.json"
        src.write_text(json.dumps(cfg))
        a, b = tmp_path / cmd / "a", tmp_path / cmd / "b"
        codes = (cli_run([cmd, "--config", str(src), "--out", str(a)]),
                 cli_run([cmd, "--config", str(a / "manifest.json"), "--out", str(b)]))
        files_a = {p.name: p.read_bytes() for p in a.iterdir()}
        files_b = {p.name: p.read_bytes() for p in b.iterdir()}
        if codes != (0, 0) or files_a != files_b:
            differing.append(cmd)
    record(12, "Determinism", not differing, f"6 commands rerun from their manifests, differing: {differing or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
