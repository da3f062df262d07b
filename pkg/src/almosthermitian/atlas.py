"""Built-in manifolds and maps with independently known geometry.

Manifolds
---------
flat_cn(n)          C^n with g = I and the standard J.
poincare_disk       g = lam I, lam = 4 (1 - |x|^2)^-2 on the ball r < 0.9; HSC -1.
round_sphere_chart  g = lam I, lam = 4 (1 + |x|^2)^-2 (stereographic chart); HSC +1.
twisted_torus       R^4 / 2pi Z^4 with g = I and J = R J0 R^T, R the rotation
                    by angle x1 in the (x2, x3)-plane.  Not integrable.
s6_nearly_kahler    Orthographic chart of the unit S^6 in R^7 over the ball
                    r < 0.8, induced metric, J_P(X) = P x X (octonionic cross
                    product).  Not Kaehler.

The cross product uses the Cayley table whose oriented triples are

    (1,2,3) (1,4,5) (1,7,6) (2,4,6) (2,5,7) (3,4,7) (3,6,5),

i.e. e_i x e_j = e_k for each triple (i, j, k) and its cyclic shifts.

Maps are named ``map:<name>`` (the prefix is optional).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .manifold import AlmostHermitianManifold, J0
from .sampling import ChartDomain

__all__ = [
    "AtlasEntry",
    "builtin",
    "builtin_manifold",
    "builtin_map",
    "MANIFOLD_NAMES",
    "MAP_NAMES",
    "FANO_TRIPLES",
    "cross_product_constants",
]

FANO_TRIPLES = ((1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5))

MANIFOLD_NAMES = ("flat_cn(n)", "poincare_disk", "round_sphere_chart", "twisted_torus", "s6_nearly_kahler")
MAP_NAMES = ("const", "identity_disk", "square_disk", "disk_into_flat", "torus_shift", "sphere_shrink")

_ALIASES = {"flat_torus": "flat_cn(1)", "flat_cn": "flat_cn(1)", "flat_c": "flat_cn(1)"}


@dataclass(frozen=True)
class AtlasEntry:
    name: str
    kind: str  # "manifold" or "map"
    manifest: dict
    chart_domain: ChartDomain
    oracle_notes: str = ""
    holomorphic_chart_flag: bool = False
    witness: tuple = field(default=())

    def build(self):
        if self.kind == "manifold":
            return AlmostHermitianManifold.from_manifest(self.manifest)
        from .maps import SmoothMap

        return SmoothMap.from_manifest(self.manifest)


def cross_product_constants() -> np.ndarray:
    """eps[i, j, k] with (e_i x e_j) = sum_k eps[i, j, k] e_k, 0-based."""
    eps = np.zeros((7, 7, 7))
    for i, j, k in FANO_TRIPLES:
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            eps[a - 1, b - 1, c - 1] = 1.0
            eps[b - 1, a - 1, c - 1] = -1.0
    return eps


def _fmt(m) -> list:
    return [[repr(float(v)) if v % 1 else str(int(v)) for v in row] for row in m]


def _flat(n: int) -> AtlasEntry:
    D = 2 * n
    manifest = {
        "name": f"flat_cn({n})",
        "complex_dim": n,
        "g": _fmt(np.eye(D)),
        "J": _fmt(J0(n)),
        "integrable_hint": True,
        "holomorphic_chart": True,
        "domain": {"kind": "ball", "radius": 2.0},
    }
    return AtlasEntry(manifest["name"], "manifold", manifest, ChartDomain.ball(2.0),
                      "all Christoffels, torsion and curvature vanish", True, tuple([0.3] * D))


def _conformal(name: str, lam: str, radius: float, notes: str, witness) -> AtlasEntry:
    manifest = {
        "name": name,
        "complex_dim": 1,
        "g": [[lam, "0"], ["0", lam]],
        "J": _fmt(J0(1)),
        "integrable_hint": True,
        "holomorphic_chart": True,
        "domain": {"kind": "ball", "radius": radius},
    }
    return AtlasEntry(name, "manifold", manifest, ChartDomain.ball(radius), notes, True, witness)


def _twisted_torus() -> AtlasEntry:
    c, s = "cos(x1)", "sin(x1)"
    J = [
        ["0", f"-{c}", f"-{s}", "0"],
        [c, "0", "0", s],
        [s, "0", "0", f"-{c}"],
        ["0", f"-{s}", c, "0"],
    ]
    lo, hi = [-np.pi] * 4, [np.pi] * 4
    manifest = {
        "name": "twisted_torus",
        "complex_dim": 2,
        "g": _fmt(np.eye(4)),
        "J": J,
        "integrable_hint": False,
        "holomorphic_chart": False,
        "domain": {"kind": "box", "lower": lo, "upper": hi},
    }
    notes = "J = R(x1) J0 R(x1)^T with R a rotation of the (x2, x3)-plane; orthogonal, hence compatible with g = I"
    return AtlasEntry("twisted_torus", "manifold", manifest, ChartDomain.box(lo, hi), notes, False, (0.3, 0.1, 0.0, 0.0))


def _s6() -> AtlasEntry:
    eps = cross_product_constants()
    xs = [f"x{i + 1}" for i in range(6)]
    r2 = " - ".join(f"{x}^2" for x in xs)
    s = f"sqrt(1 - {r2})"
    g = [[None] * 6 for _ in range(6)]
    J = [[None] * 6 for _ in range(6)]
    for a in range(6):
        for b in range(6):
            off = f"{xs[a]}*{xs[b]}/(1 - {r2})"
            g[a][b] = f"1 + {off}" if a == b else off
            terms = []
            for i in range(6):
                e = eps[i, b, a]
                if e:
                    terms.append(("+ " if e > 0 else "- ") + xs[i])
            if eps[6, b, a]:
                terms.append(("+ " if eps[6, b, a] > 0 else "- ") + s)
            # -(x_b / s) sum_i eps[i, 7, a] x_i
            inner = []
            for i in range(6):
                e = eps[i, 6, a]
                if e:
                    inner.append(("+ " if e > 0 else "- ") + xs[i])
            if inner:
                terms.append(f"- {xs[b]}*({' '.join(inner)})/{s}")
            expr = " ".join(terms).strip()
            if expr.startswith("+ "):
                expr = expr[2:]
            J[a][b] = expr or "0"
    manifest = {
        "name": "s6_nearly_kahler",
        "complex_dim": 3,
        "g": g,
        "J": J,
        "integrable_hint": False,
        "holomorphic_chart": False,
        "domain": {"kind": "ball", "radius": 0.8},
    }
    notes = "orthographic chart P = (x, sqrt(1 - |x|^2)); J_P(X) = P x X with the documented Cayley table"
    return AtlasEntry("s6_nearly_kahler", "manifold", manifest, ChartDomain.ball(0.8), notes, False,
                      (0.3, -0.2, 0.1, 0.25, -0.15, 0.05))


def builtin_manifold(name: str) -> AtlasEntry:
    name = _ALIASES.get(name, name)
    m = re.fullmatch(r"flat_cn\((\d+)\)", name)
    if m:
        n = int(m.group(1))
        if n < 1:
            raise KeyError(name)
        return _flat(n)
    if name == "poincare_disk":
        return _conformal(
            "poincare_disk", "4/(1 - x1^2 - x2^2)^2", 0.9,
            "conformal Gauss curvature K = -(2 lam)^-1 Laplacian(log lam) = -1", (0.3, 0.0),
        )
    if name == "round_sphere_chart":
        return _conformal(
            "round_sphere_chart", "4/(1 + x1^2 + x2^2)^2", 1.5,
            "conformal Gauss curvature K = -(2 lam)^-1 Laplacian(log lam) = +1", (0.3, 0.0),
        )
    if name == "twisted_torus":
        return _twisted_torus()
    if name == "s6_nearly_kahler":
        return _s6()
    raise KeyError(f"unknown builtin {name!r}")


def _map_entry(name, source, target, components, notes, domain=None) -> AtlasEntry:
    manifest = {"name": name, "source": source, "target": target, "components": list(components)}
    src = builtin_manifold(source) if isinstance(source, str) else None
    dom = src.chart_domain if src is not None else ChartDomain.ball(1.0)
    if domain is not None:
        manifest["domain"] = domain.to_dict()
        dom = domain
    return AtlasEntry(f"map:{name}", "map", manifest, dom, notes, False)


def builtin_map(name: str) -> AtlasEntry:
    name = name[4:] if name.startswith("map:") else name
    if name == "const":
        return _map_entry("const", "round_sphere_chart", "poincare_disk", ["0", "0"], "F = 0, so Y = 0")
    if name == "identity_disk":
        return _map_entry("identity_disk", "poincare_disk", "poincare_disk", ["x1", "x2"], "Y = 1")
    if name == "square_disk":
        return _map_entry("square_disk", "poincare_disk", "poincare_disk", ["x1^2 - x2^2", "2*x1*x2"],
                          "z -> z^2; Cauchy-Riemann algebra")
    if name == "disk_into_flat":
        return _map_entry("disk_into_flat", "poincare_disk", "flat_cn(1)", ["x1", "x2"],
                          "Y = 1 / lam = (1 - r^2)^2 / 4")
    if name == "torus_shift":
        return _map_entry("torus_shift", "twisted_torus", "twisted_torus",
                          ["x1", "x2 + 0.3", "x3 - 0.2", "x4 + 0.1"],
                          "J depends on x1 only, so translations in x2..x4 are almost holomorphic",
                          domain=ChartDomain.box([-2.5] * 4, [2.5] * 4))
    if name == "sphere_shrink":
        target = builtin_manifold("round_sphere_chart").build().scaled(0.5, "round_sphere_chart*0.5")
        return _map_entry("sphere_shrink", "round_sphere_chart", target.to_manifest(), ["x1", "x2"], "Y = 1/2")
    raise KeyError(f"unknown builtin map {name!r}")


def builtin(name: str) -> AtlasEntry:
    """Catalogue lookup: manifold names, ``map:<name>`` or a bare map name."""
    if name.startswith("map:"):
        return builtin_map(name)
    try:
        return builtin_manifold(name)
    except KeyError:
        if name in MAP_NAMES:
            return builtin_map(name)
        raise
