"""Command-line driver: ``hlab <command> [--config FILE] [--out DIR] [--tol X] [--B N]``.

Commands: coeffs, periods, lseries, theta, pairing, scan. Each writes its
tables (CSV) and a ``manifest.json`` into the output directory. A manifest
can be passed back as ``--config`` to reproduce a run bit-for-bit.

Paths in a config (``periods.paths``) use a compact text grammar. Items are
separated by ``;`` and complex numbers are written ``x+yi``::

    path   := [from_cusp(C);] item {; item} [; to_cusp(C)]
    item   := line(z0, z1) | poly(z0, z1, ..., zk) | arc(center, radius, t0, t1) | point(z)
    C      := inf | p/q | integer

``point(z)`` anchors a path that has no segments, e.g.
``from_cusp(0); point(i); to_cusp(inf)``. Arcs run from angle t0 to t1.

The curve catalog (``catalog`` key) holds one record per line,
``label [a1,a2,a3,a4,a6] conductor [rank]``, with ``#`` comments.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .catalog import catalog_checksum, load_catalog, newform
from .coefficients import (
    DEFORMED,
    NEWFORM,
    AngleProfile,
    CurveModel,
    extend_coefficients,
    hecke_system_from_curve,
    theta_from_ap,
)
from .errors import ConfigError, HlabError
from .family import ANGLE_HOMOTOPY, SEGMENT, FamilySpec, affinity_residual, rank_report, scan_degeneracy, scan_l_vanishing, scan_pairing_sign
from .lattice import DEFAULT_PERIOD_ELEMENTS, classify_quotient, search_period_generators
from .modgroup import GroupElement, build_domain_mesh
from .pathint import PathSpec, fricke_sign, l_derivative_at_1, l_value_at_1, period_lattice, period_path
from .petersson import petersson_pairing
from .quadclass import build_field, field_table, gross_zagier_pairing, scan_admissible_discriminant, theta_table

DEFAULTS: dict[str, dict[str, Any]] = {
    "coeffs": {"label": "11a", "B": 100, "mode": NEWFORM},
    "periods": {"label": "11a", "B": 600},
    "lseries": {"labels": ["11a", "37a", "37b"], "B": 2000, "max_abs_D": 200},
    "theta": {"discriminants": [-3, -4, -7, -8, -11, -23], "B": 200},
    "pairing": {"labels": ["37a", "37b"], "B": 3000, "resolution": 1, "y_min": 1e-3, "y_max": 8.0},
    "scan": {"kind": SEGMENT, "f1": "91a", "f2": "91b", "B": 800, "steps": 5, "scans": ["l"]},
}
DEFAULT_TOL = 1e-9


# ------------------------------------------------------------------ output


class Output:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str) -> None:
        (self.root / name).write_text(text, encoding="utf-8")
        self.files.append(name)

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])
        self.write_text(name, buf.getvalue())

    def write_json(self, name: str, obj: Any) -> None:
        self.write_text(name, dumps(obj))


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------ config


def load_config(path: str | None) -> tuple[dict, str | None]:
    """(config, timestamp). A manifest file yields its stored config and timestamp."""
    if not path:
        return {}, None
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "manifest_version" in data:
        return data["config"], data.get("timestamp")
    return data, None


def section(config: dict, command: str, args) -> dict:
    sec = dict(DEFAULTS[command])
    sec.update(config.get(command, {}))
    if args.B is not None:
        sec["B"] = args.B
    sec["tol"] = args.tol if args.tol is not None else config.get("tol", sec.get("tol", DEFAULT_TOL))
    return sec


def _curves(config: dict):
    path = config.get("catalog")
    return load_catalog(path), catalog_checksum(path)


def _curve_from(sec: dict, curves) -> CurveModel:
    if "curve" in sec:
        c = sec["curve"]
        try:
            return CurveModel(c.get("label", "custom"), tuple(c["ainvs"]), int(c["conductor"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"curve needs ainvs and conductor: {exc}") from exc
    label = sec["label"]
    if label not in curves:
        raise ConfigError(f"unknown curve label {label!r}")
    return curves[label]


# ---------------------------------------------------------------- commands


def cmd_coeffs(sec: dict, curves, out: Output) -> dict:
    curve = _curve_from(sec, curves)
    B = int(sec["B"])
    system = hecke_system_from_curve(curve, max(B, 2))
    F = extend_coefficients(system, B, sec.get("mode", NEWFORM), label=curve.label)
    out.write_csv("coefficients.csv", ["n", "a_n"], [[n, int(round(F.a(n).real))] for n in range(1, B + 1)])
    rows = []
    for p, a in sorted(system.ap.items()):
        good = curve.is_good(p)
        rows.append([p, a, "good" if good else "bad", theta_from_ap(a, p) if good else None])
    out.write_csv("angles.csv", ["p", "a_p", "reduction", "theta_p"], rows)
    return {"label": curve.label, "B": B}


def _period_series(sec: dict, curves):
    B = int(sec["B"])
    if "profile" in sec:
        prof = sec["profile"]
        base = hecke_system_from_curve(curves[prof["base"]], B) if "base" in prof else None
        angles = {p: theta_from_ap(a, p) for p, a in base.ap.items()} if base else {}
        for p, t in prof.get("angles", {}).items():
            angles[int(p)] = float(t)
        return extend_coefficients(AngleProfile(angles), B, DEFORMED, label="profile"), prof.get("base")
    label = sec["label"]
    return newform(label, B, curves), label


def _period_paths(sec: dict, F, label):
    if "paths" in sec:
        return tuple(PathSpec.parse(p) for p in sec["paths"])
    if "elements" in sec:
        return tuple(period_path(GroupElement(*e)) for e in sec["elements"])
    if label in DEFAULT_PERIOD_ELEMENTS:
        return tuple(period_path(GroupElement(*e)) for e in DEFAULT_PERIOD_ELEMENTS[label])
    g1, g2, _ = search_period_generators(F)
    return period_path(g1), period_path(g2)


def cmd_periods(sec: dict, curves, out: Output) -> dict:
    F, label = _period_series(sec, curves)
    paths = _period_paths(sec, F, label)
    L = period_lattice(F, *paths)
    cl = classify_quotient(L, float(sec["tol"]))
    rec = cl.to_record()
    rec.update(
        omega1=L.omega1, omega2=L.omega2, error=L.error, regularized=L.regularized,
        paths=[p.to_text() for p in paths], series=F.label,
    )
    out.write_json("periods.json", rec)
    pts = [[m, n, (m * L.omega1 + n * L.omega2).real, (m * L.omega1 + n * L.omega2).imag]
           for m in range(-3, 4) for n in range(-3, 4)]
    out.write_csv("lattice_points.csv", ["m", "n", "re", "im"], pts)
    return {"kind": cl.kind}


def cmd_lseries(sec: dict, curves, out: Output) -> dict:
    B = int(sec["B"])
    tol = float(sec["tol"])
    rows, verdicts = [], []
    for label in sec["labels"]:
        f = newform(label, B, curves)
        eps = fricke_sign(f)
        f = f.with_fricke(eps)
        ps = l_value_at_1(f, "pathintegral")
        ss = l_value_at_1(f, "smoothedsum")
        row = [label, eps, ps.value.real, ss.value.real, abs(ps.value - ss.value), ss.error]
        evidence = {"L": ss.value, "tol": max(tol, 1e-8)}
        if eps == -1:
            d1 = l_derivative_at_1(f, kernel="scipy")
            d2 = l_derivative_at_1(f, kernel="series")
            fld, tw = scan_admissible_discriminant(f, int(sec["max_abs_D"]))
            gz = gross_zagier_pairing(f, fld)
            row += [d1.value.real, abs(d1.value - d2.value), fld.D, tw.value.real, gz.value, gz.error]
            evidence.update(pairing=gz.value, pairing_error=gz.error)
        else:
            row += [None] * 6
        rows.append(row)
        verdicts.append(rank_report(curves[label], evidence).to_record())
    out.write_csv(
        "lvalues.csv",
        ["label", "sign", "L_path", "L_smoothed", "L_diff", "L_error",
         "Lprime", "Lprime_kernel_diff", "D", "L_twist", "gz_pairing", "gz_error"],
        rows,
    )
    out.write_json("rank_report.json", verdicts)
    return {"curves": len(rows)}


def cmd_theta(sec: dict, curves, out: Output) -> dict:
    B = int(sec["B"])
    classes, theta = [], []
    for D in sec["discriminants"]:
        fld = build_field(int(D))
        classes += [[r["D"], r["class"], r["a"], r["b"], r["c"], r["w"]] for r in field_table(fld)]
        theta += [[r["D"], r["class"], r["n"], r["r_num"], r["r_den"]] for r in theta_table(fld, B)]
    out.write_csv("classes.csv", ["D", "class", "a", "b", "c", "w"], classes)
    out.write_csv("theta.csv", ["D", "class", "n", "r_num", "r_den"], theta)
    return {"fields": len(sec["discriminants"])}


def cmd_pairing(sec: dict, curves, out: Output) -> dict:
    B = int(sec["B"])
    forms = [newform(lab, B, curves) for lab in sec["labels"]]
    levels = {f.level for f in forms}
    if len(levels) != 1:
        raise ConfigError("pairing labels must share one level")
    mesh = build_domain_mesh(levels.pop(), float(sec["y_min"]), float(sec["y_max"]), int(sec["resolution"]))
    rows, reports = [], {}
    for g in forms:
        for f in forms:
            p = petersson_pairing(g, f, mesh)
            rows.append([g.label, f.label, p.value.real, p.value.imag, p.quadrature_error, p.truncation_deficit])
            reports[f"{g.label}|{f.label}"] = p.to_record(mesh)
    out.write_csv("pairings.csv", ["G", "F", "re", "im", "quadrature_error", "truncation_deficit"], rows)
    out.write_json("pairing_report.json", {"mesh_id": mesh.mesh_id, "n_cells": mesh.n_cells, "pairings": reports})
    return {"mesh_id": mesh.mesh_id}


def _family_spec(sec: dict, curves) -> FamilySpec:
    B = int(sec["B"])
    steps = int(sec["steps"])
    kind = sec["kind"]
    paths = None
    if kind == SEGMENT:
        f1 = newform(sec["f1"], B, curves)
        f2 = newform(sec["f2"], B, curves)
        if "scale2" in sec:
            f2 = f2.scaled(float(sec["scale2"]))
        plabel = sec.get("paths_from", sec["f1"])
        if plabel in DEFAULT_PERIOD_ELEMENTS:
            paths = tuple(period_path(GroupElement(*e)) for e in DEFAULT_PERIOD_ELEMENTS[plabel])
        return FamilySpec(SEGMENT, steps, f1=f1, f2=f2, paths=paths, label=f"{sec['f1']}-{sec['f2']}")
    if kind == ANGLE_HOMOTOPY:
        base = hecke_system_from_curve(curves[sec["base"]], B)
        tgt = sec.get("target", {})
        default = tgt.get("default")
        angles = {p: float(default) for p in base.ap} if default is not None else {}
        for p, t in tgt.get("angles", {}).items():
            angles[int(p)] = float(t)
        if sec["base"] in DEFAULT_PERIOD_ELEMENTS:
            paths = tuple(period_path(GroupElement(*e)) for e in DEFAULT_PERIOD_ELEMENTS[sec["base"]])
        return FamilySpec(ANGLE_HOMOTOPY, steps, base=base, target=AngleProfile(angles), B=B, paths=paths,
                          label=f"{sec['base']}-homotopy")
    raise ConfigError(f"unknown family kind {kind!r}")


def cmd_scan(sec: dict, curves, out: Output) -> dict:
    spec = _family_spec(sec, curves)
    tol = float(sec["tol"])
    summary: dict[str, Any] = {"spec": spec.describe()}
    for which in sec["scans"]:
        if which == "degeneracy":
            rep = scan_degeneracy(spec, tol)
        elif which == "l":
            rep = scan_l_vanishing(spec, max(tol, 1e-8))
            summary["l_affinity_residual"] = affinity_residual([r.L for r in rep.records], spec.ts)
        elif which == "pairing":
            G = newform(sec["G"], int(sec["B"]), curves)
            mesh = build_domain_mesh(G.level, float(sec.get("y_min", 1e-3)), float(sec.get("y_max", 8.0)),
                                     int(sec.get("resolution", 1)))
            rep = scan_pairing_sign(spec, G, mesh, sec["G"])
            summary["pairing_affinity_residual"] = affinity_residual([r.pairings[sec["G"]] for r in rep.records], spec.ts)
            summary["mesh_id"] = mesh.mesh_id
        else:
            raise ConfigError(f"unknown scan {which!r}")
        out.write_text(f"scan_{which}.csv", rep.to_csv())
        summary[which] = rep.to_json()
    out.write_json("scan_summary.json", summary)
    return {"scans": list(sec["scans"])}


COMMANDS: dict[str, Callable] = {
    "coeffs": cmd_coeffs,
    "periods": cmd_periods,
    "lseries": cmd_lseries,
    "theta": cmd_theta,
    "pairing": cmd_pairing,
    "scan": cmd_scan,
}


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config or a previous manifest.json")
    p.add_argument("--out", default="hlab-out", help="output directory (default: hlab-out)")
    p.add_argument("--tol", type=float, default=None, help=f"decision tolerance (default {DEFAULT_TOL:g})")
    p.add_argument("--B", type=int, default=None, help="number of q-expansion coefficients")
    p.add_argument("--version", action="version", version=f"hlab {__version__}")
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Output(Path(args.out))
    try:
        config, stamp = load_config(args.config)
        curves, checksum = _curves(config)
        sec = section(config, args.command, args)
        result = COMMANDS[args.command](sec, curves, out)
    except HlabError as exc:
        err = {"error": type(exc).__name__, "reason": exc.reason, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "reason": str(exc)}), file=sys.stderr)
        return 2
    snapshot = dict(config)
    snapshot[args.command] = {k: v for k, v in sec.items() if k != "tol"}
    snapshot["tol"] = sec["tol"]
    manifest = {
        "manifest_version": 1,
        "hlab_version": __version__,
        "command": args.command,
        "config": snapshot,
        "catalog_sha256": checksum,
        "tolerances": {"tol": sec["tol"]},
        "timestamp": stamp or _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat(),
        "outputs": sorted(out.files),
        "result": result,
    }
    out.write_json("manifest.json", manifest)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
