"""Command line driver producing deterministic JSON (or CSV) reports.

Exit status: 0 when every asserted tolerance passes, 1 on a tolerance
failure, 2 on an input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .atlas import builtin
from .calc import ExpressionDomainError, ExpressionError
from .connection import (
    canonical_axiom_residuals,
    canonical_connection,
    chern_connection_holo,
    levi_civita,
    nabla_J,
    real_christoffels,
    structure_equation_residual,
)
from .curvature import curvature_at, gauge_curvature_residuals, hsc_range
from .frames import build_frame, coordinate_frame_10
from .manifold import AlmostHermitianManifold, fundamental_form, nijenhuis, validate_structure
from .maps import SmoothMap, ddbar_log_H_residual, ddbar_Y_formula, ddbar_Y_oracle, liouville_check
from .sampling import SampleSpec, sample_directions, sample_points

__all__ = ["RunConfig", "InputError", "run", "main", "DEFAULT_TOLERANCES", "COMMANDS"]

COMMANDS = ("validate", "connection-report", "curvature-report", "lemma-suite", "liouville-check")

DEFAULT_TOLERANCES = {
    "tol_structure": 1e-9,
    "tol_conn": 1e-7,
    "tol_frame": 1e-6,
    "tol_curv": 1e-6,
    "tol_hsc": 1e-6,
    "tol_map": 1e-8,
    "tol_y": 1e-9,
    "tol_oracle": 1e-5,
}

_POINT_ERRORS = (ExpressionDomainError, ZeroDivisionError, np.linalg.LinAlgError, FloatingPointError)


class InputError(Exception):
    """Bad command line, config file or manifest."""


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)  # builtin names or inline manifests
    sampling: SampleSpec = field(default_factory=SampleSpec)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str | None = None
    format: str = "json"

    def echo(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "sampling": {
                "points": self.sampling.points,
                "directions_per_point": self.sampling.directions_per_point,
                "seed": self.sampling.seed,
            },
            "tolerances": self.tolerances,
            "format": self.format,
        }


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------
def _load_config_file(path: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read config ({exc.strerror})") from None
    if p.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    else:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = f"{mark.line + 1}:" if mark is not None else ""
            raise InputError(f"{path}:{line} invalid YAML ({getattr(exc, 'problem', exc)})") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a mapping")
    return data


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--tol expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _normalize_tolerances(raw: dict) -> dict:
    tols = dict(DEFAULT_TOLERANCES)
    for k, v in raw.items():
        key = k if k.startswith("tol_") else f"tol_{k}"
        if key not in tols:
            raise InputError(f"unknown tolerance {k!r}; known: {', '.join(sorted(tols))}")
        try:
            val = float(v)
        except (TypeError, ValueError):
            raise InputError(f"tolerance {k!r} is not a number: {v!r}") from None
        if not val > 0 or not math.isfinite(val):
            raise InputError(f"tolerance {k!r} must be positive")
        tols[key] = val
    return tols


def config_from_args(args) -> RunConfig:
    file_cfg = _load_config_file(args.config) if args.config else {}
    inputs = []
    if any(k in file_cfg for k in ("g", "J", "components")):
        manifest = {k: v for k, v in file_cfg.items() if k not in ("command", "sampling", "tolerances", "tol", "out", "format", "seed", "points", "dirs")}
        inputs.append(manifest)
    for key in ("builtin", "builtins", "inputs", "manifests"):
        v = file_cfg.get(key)
        if v is not None:
            inputs.extend(v if isinstance(v, list) else [v])
    if args.builtin:
        inputs = list(args.builtin)  # flags override the file
    command = args.command or file_cfg.get("command")
    if command is None:
        raise InputError("no command given (use --command or a 'command' field)")
    if command not in COMMANDS:
        raise InputError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    if not inputs:
        raise InputError("no input manifold or map (use --builtin or --config)")
    samp = dict(file_cfg.get("sampling") or {})
    for key in ("seed", "points"):
        if key in file_cfg:
            samp[key] = file_cfg[key]
    if "dirs" in file_cfg:
        samp["directions_per_point"] = file_cfg["dirs"]
    if args.seed is not None:
        samp["seed"] = args.seed
    if args.points is not None:
        samp["points"] = args.points
    if args.dirs is not None:
        samp["directions_per_point"] = args.dirs
    try:
        sampling = SampleSpec(
            int(samp.get("points", 50)), int(samp.get("directions_per_point", 20)), int(samp.get("seed", 42))
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad sampling settings: {exc}") from None
    raw_tol = dict(file_cfg.get("tolerances") or file_cfg.get("tol") or {})
    raw_tol.update(_parse_tol(args.tol))
    fmt = args.format or file_cfg.get("format", "json")
    if fmt not in ("json", "csv"):
        raise InputError(f"unknown format {fmt!r}")
    return RunConfig(command, inputs, sampling, _normalize_tolerances(raw_tol), args.out or file_cfg.get("out"), fmt)


def _load_input(spec):
    """An AlmostHermitianManifold or SmoothMap from a builtin name or manifest."""
    try:
        if isinstance(spec, str):
            return builtin(spec).build()
        if "components" in spec:
            return SmoothMap.from_manifest(spec)
        return AlmostHermitianManifold.from_manifest(spec)
    except KeyError as exc:
        raise InputError(f"unknown builtin or missing manifest field: {exc}") from None
    except ExpressionError as exc:
        raise InputError(f"manifest expression error: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid manifest: {exc}") from None


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------
class Report:
    def __init__(self):
        self.residuals: dict = {}
        self.verdicts: dict = {}
        self.witnesses: dict = {}
        self.skipped = 0

    def residual(self, name: str, value: float):
        self.residuals[name] = _clean(value)

    def check(self, name: str, value: float, tol: float, sense: str = "le"):
        self.residual(name, value)
        ok = value <= tol if sense == "le" else value >= tol
        self.verdicts[name] = "pass" if ok and math.isfinite(value) else "fail"

    def flag(self, name: str, ok: bool):
        self.verdicts[name] = "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())


def _clean(v):
    if isinstance(v, (np.floating, float, int, np.integer)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    return v


def _points(obj, sampling: SampleSpec, count: int | None = None) -> np.ndarray:
    dom = obj.sampling_domain if isinstance(obj, SmoothMap) else obj.domain
    dim = obj.source.dim if isinstance(obj, SmoothMap) else obj.dim
    return sample_points(dom, dim, count or sampling.points, sampling.seed)


def _require_manifold(obj, label: str) -> AlmostHermitianManifold:
    if not isinstance(obj, AlmostHermitianManifold):
        raise InputError(f"{label} needs a manifold input, got a map")
    return obj


def _require_valid(M: AlmostHermitianManifold, cfg: RunConfig, pts):
    rep = validate_structure(M, pts, cfg.tolerances["tol_structure"])
    if not rep.passed:
        raise InputError(f"manifold {M.name!r} fails structure validation: {rep.max_residuals}")


def _cmd_validate(obj, cfg: RunConfig, rep: Report, prefix: str):
    tol = cfg.tolerances["tol_structure"]
    if isinstance(obj, SmoothMap):
        _cmd_validate(obj.source, cfg, rep, prefix + "source.")
        _cmd_validate(obj.target, cfg, rep, prefix + "target.")
        from .maps import validate_almost_holomorphic

        vr = validate_almost_holomorphic(obj, _points(obj, cfg.sampling), cfg.tolerances["tol_map"])
        rep.check(prefix + "almost_holomorphic", vr.max_residuals.get("almost_holomorphic", float("inf")),
                  cfg.tolerances["tol_map"])
        rep.skipped += len(vr.invalid)
        return
    vr = validate_structure(obj, _points(obj, cfg.sampling), tol)
    mx = vr.max_residuals
    for k in ("J_squared", "g_symmetry", "compatibility"):
        rep.check(f"{prefix}{k}", mx.get(k, float("inf")), tol)
    rep.residual(f"{prefix}min_eigenvalue", mx.get("min_eigenvalue", float("nan")))
    rep.flag(f"{prefix}positive_definite", mx.get("min_eigenvalue", -1.0) > 0)
    rep.flag(f"{prefix}all_points_valid", not vr.invalid)
    rep.skipped += len(vr.invalid)


def _cmd_connection(M: AlmostHermitianManifold, cfg: RunConfig, rep: Report, prefix: str):
    tol = cfg.tolerances["tol_conn"]
    pts = _points(M, cfg.sampling)
    _require_valid(M, cfg, pts)
    acc = {"metric": 0.0, "nabla_J": 0.0, "torsion_11": 0.0, "structure_equation": 0.0,
           "chern_gap": 0.0, "levi_civita_gap": 0.0, "nabla_lc_J": 0.0}
    for p in pts:
        try:
            F = coordinate_frame_10(M, p)
            conn = canonical_connection(M, F)
            ax = canonical_axiom_residuals(M, conn)
            G = real_christoffels(conn).val
            acc["metric"] = max(acc["metric"], ax["metric"])
            acc["nabla_J"] = max(acc["nabla_J"], ax["nabla_J"])
            acc["torsion_11"] = max(acc["torsion_11"], ax["torsion_11"])
            acc["structure_equation"] = max(acc["structure_equation"], structure_equation_residual(M, F, conn))
            lc = levi_civita(M, p).gamma_real.val
            acc["levi_civita_gap"] = max(acc["levi_civita_gap"], float(np.max(np.abs(G - lc))))
            acc["nabla_lc_J"] = max(acc["nabla_lc_J"], float(np.max(np.abs(nabla_J(M, p, lc)))))
            if M.holomorphic_chart:
                ch = real_christoffels(chern_connection_holo(M, p)).val
                acc["chern_gap"] = max(acc["chern_gap"], float(np.max(np.abs(G - ch))))
        except _POINT_ERRORS:
            rep.skipped += 1
    for k in ("metric", "nabla_J", "torsion_11", "structure_equation"):
        rep.check(f"{prefix}canonical.{k}", acc[k], tol)
    if M.holomorphic_chart:
        rep.check(f"{prefix}canonical_vs_chern", acc["chern_gap"], tol)
    kahler = acc["nabla_lc_J"] <= tol
    rep.residual(f"{prefix}nabla_lc_J", acc["nabla_lc_J"])
    rep.residual(f"{prefix}canonical_vs_levi_civita", acc["levi_civita_gap"])
    if kahler:
        rep.check(f"{prefix}canonical_vs_levi_civita", acc["levi_civita_gap"], tol)
    rep.witnesses[f"{prefix}kahler"] = bool(kahler)


def _cmd_curvature(M: AlmostHermitianManifold, cfg: RunConfig, rep: Report, prefix: str):
    pts = _points(M, cfg.sampling)
    _require_valid(M, cfg, pts)
    hr = hsc_range(M, cfg.sampling, points=pts)
    d = hr.to_dict()
    rep.residual(f"{prefix}hsc_min", d["min"])
    rep.residual(f"{prefix}hsc_max", d["max"])
    rep.check(f"{prefix}hsc_imag_defect", d["imag_defect"], 1e-10)
    rep.witnesses[f"{prefix}hsc_argmin"] = d["argmin"]
    rep.witnesses[f"{prefix}hsc_argmax"] = d["argmax"]
    gauge, conj = 0.0, 0.0
    for p in pts[: min(20, len(pts))]:
        try:
            r = gauge_curvature_residuals(M, p)
            gauge = max(gauge, r["quasi_g"], r["normal_quasi_g"], r["normal_quasi_h"])
            conj = max(conj, curvature_at(M, p)[0].conjugation_defect())
        except _POINT_ERRORS:
            rep.skipped += 1
    rep.check(f"{prefix}gauge_curvature", gauge, cfg.tolerances["tol_curv"])
    rep.check(f"{prefix}curvature_conjugation", conj, 1e-10)


def _poly(rng, D: int) -> str:
    """A random quadratic-plus-cubic polynomial in the chart variables."""
    terms = []
    for _ in range(4):
        a, b, c = rng.integers(1, D + 1, size=3)
        k = rng.integers(1, 4)
        coef = round(float(rng.uniform(-2, 2)), 3)
        mono = "*".join(f"x{i}" for i in (a, b, c)[:k])
        terms.append(f"({coef})*{mono}")
    return " + ".join(terms)


def _cmd_lemma(M: AlmostHermitianManifold, cfg: RunConfig, rep: Report, prefix: str):
    from .connection import covariant_hessian
    from .holomorphic import ddbar_matrix

    pts = _points(M, cfg.sampling, min(cfg.sampling.points, 20))
    _require_valid(M, cfg, pts)
    rng = np.random.default_rng(cfg.sampling.seed)
    frame_keys = ("a", "b", "c", "d", "e", "f", "pseudo_definition", "quasi_definition", "type_10")
    acc = {k: 0.0 for k in frame_keys}
    acc.update(normal=0.0, gauge=0.0, del2=0.0, nijenhuis_torsion=0.0, log_H=0.0, nabla_omega_iff=0.0)
    dirs = sample_directions(M.n, len(pts), cfg.sampling.seed)
    for i, p in enumerate(pts):
        try:
            for kind in ("quasi", "normal_quasi"):
                F = build_frame(M, p, kind)
                r = F.certified_residuals
                for k in frame_keys:
                    acc[k] = max(acc[k], r[k])
                if kind == "normal_quasi":
                    acc["normal"] = max(acc["normal"], r["normal"])
            g = gauge_curvature_residuals(M, p)
            acc["gauge"] = max(acc["gauge"], g["quasi_g"], g["normal_quasi_g"], g["normal_quasi_h"])
            f = _poly(rng, M.dim)
            for kind in ("coordinate", "quasi"):
                F = build_frame(M, p, kind)
                dd = ddbar_matrix(M, f, F).matrix
                cv = F.coeffs.val
                hs = np.array([[covariant_hessian(M, "canonical", f, p, cv[a], np.conj(cv[b]))
                                for b in range(M.n)] for a in range(M.n)])
                acc["del2"] = max(acc["del2"], float(np.max(np.abs(dd - hs))))
            conn = canonical_connection(M, coordinate_frame_10(M, p))
            from .connection import torsion_of

            J = M.J_at(p)
            X, Y = rng.normal(size=(2, M.dim))
            N = nijenhuis(M, p, X, Y)
            T = torsion_of(conn, X, Y) + J @ torsion_of(conn, X, J @ Y)
            acc["nijenhuis_torsion"] = max(acc["nijenhuis_torsion"], float(np.max(np.abs(N / 2 - T))))
            direct, curv = ddbar_log_H_residual(M, p, dirs[i])
            acc["log_H"] = max(acc["log_H"], abs(direct - curv) / max(1.0, abs(curv)))
        except _POINT_ERRORS:
            rep.skipped += 1
    for k in frame_keys:
        rep.check(f"{prefix}frame.{k}", acc[k], cfg.tolerances["tol_frame"])
    rep.check(f"{prefix}frame.normal", acc["normal"], cfg.tolerances["tol_frame"])
    rep.check(f"{prefix}gauge_curvature", acc["gauge"], cfg.tolerances["tol_curv"])
    rep.check(f"{prefix}ddbar_equals_hessian", acc["del2"], cfg.tolerances["tol_conn"])
    rep.check(f"{prefix}nijenhuis_torsion", acc["nijenhuis_torsion"], cfg.tolerances["tol_conn"])
    rep.check(f"{prefix}ddbar_log_H", acc["log_H"], cfg.tolerances["tol_curv"])
    p0 = pts[0]
    _, dOm = fundamental_form(M, p0)
    rep.residual(f"{prefix}dOmega_norm", float(np.max(np.abs(dOm))))
    rep.residual(f"{prefix}nijenhuis_norm", float(np.max(np.abs(nijenhuis(M, p0, np.eye(M.dim)[0], np.eye(M.dim)[1])))))


def _cmd_liouville(f, cfg: RunConfig, rep: Report, prefix: str):
    if not isinstance(f, SmoothMap):
        raise InputError("liouville-check needs a map input (e.g. --builtin map:const)")
    t = cfg.tolerances
    cert = liouville_check(f, cfg.sampling, tol_hsc=t["tol_hsc"], tol_y=t["tol_y"], tol_map=t["tol_map"])
    d = cert.to_dict()
    rep.check(f"{prefix}almost_holomorphic", d["almost_holomorphic_max"], t["tol_map"])
    for k in ("hsc_source_min", "hsc_source_max", "hsc_target_min", "hsc_target_max", "y_max_sampled",
              "inequality_witness"):
        rep.residual(prefix + k, d[k])
    p, W = cert.y_argmax
    formula = ddbar_Y_formula(f, p, W)
    oracle, imag = ddbar_Y_oracle(f, p, W)
    rep.check(f"{prefix}formula_vs_oracle", abs(formula.total - oracle) / (1.0 + abs(oracle)), t["tol_oracle"])
    rep.check(f"{prefix}oracle_imaginary_part", abs(imag), 1e-8)
    rep.check(f"{prefix}red_terms", formula.red_terms_max(), 1e-6)
    rep.check(f"{prefix}gradient_term", formula.gradient_term, -1e-10, sense="ge")
    if cert.contradiction is not None:
        rep.flag(f"{prefix}contradiction_recorded", cert.contradiction)
    rep.witnesses[f"{prefix}certificate"] = d


_DISPATCH = {
    "validate": _cmd_validate,
    "connection-report": _cmd_connection,
    "curvature-report": _cmd_curvature,
    "lemma-suite": _cmd_lemma,
    "liouville-check": _cmd_liouville,
}


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute a configuration; returns (exit status, report document)."""
    t0 = time.perf_counter()
    rep = Report()
    objs = [_load_input(spec) for spec in cfg.inputs]
    for spec, obj in zip(cfg.inputs, objs):
        label = spec if isinstance(spec, str) else spec.get("name", "manifest")
        prefix = f"{label}." if len(objs) > 1 else ""
        handler = _DISPATCH[cfg.command]
        if cfg.command not in ("validate", "liouville-check"):
            obj = _require_manifold(obj, cfg.command)
        handler(obj, cfg, rep, prefix)
    rep.residual("skipped_points", rep.skipped)
    doc = {
        "command": cfg.command,
        "config_echo": _clean(cfg.echo()),
        "residuals": rep.residuals,
        "verdicts": rep.verdicts,
        "witnesses": _clean(rep.witnesses),
        "metadata": {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "runtime_seconds": round(time.perf_counter() - t0, 3),
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    return (0 if rep.passed else 1), doc


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "verdict"])
    for k in sorted(doc["residuals"]):
        w.writerow([k, repr(doc["residuals"][k]), doc["verdicts"].get(k, "")])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="almosthermitian", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON or YAML config / manifest file")
    ap.add_argument("--builtin", action="append", help="builtin manifold or map:NAME (repeatable)")
    ap.add_argument("--command", help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--points", type=int)
    ap.add_argument("--dirs", type=int, help="directions per point")
    ap.add_argument("--out", help="report path (default: stdout)")
    ap.add_argument("--format", choices=("json", "csv"))
    ap.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override (repeatable)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        status, doc = run(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(doc, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
