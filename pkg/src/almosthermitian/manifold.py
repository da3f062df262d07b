"""Charted almost Hermitian manifolds (M, J, g).

A manifold lives in a single chart with real coordinates x1..x_{2n}.  The
metric ``g`` and the almost complex structure ``J`` are matrices of
expressions; ``J[a][b]`` is the a-th coordinate component of J applied to
the b-th coordinate vector, so J acts on column vectors of components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calc import ExpressionDomainError, eval_jet2, parse, to_string
from .jets import ArrayJet
from .sampling import ChartDomain

__all__ = [
    "AlmostHermitianManifold",
    "TangentVector",
    "ComplexTangentVector",
    "ValidationReport",
    "validate_structure",
    "structure_residuals",
    "projectors",
    "projection_10",
    "nijenhuis",
    "fundamental_form",
    "J0",
    "vector_field_jet",
]

_CACHE_LIMIT = 512


def J0(n: int) -> np.ndarray:
    """Standard structure on R^{2n}: J d/dx_{2k-1} = d/dx_{2k}."""
    J = np.zeros((2 * n, 2 * n))
    for k in range(n):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


@dataclass(frozen=True, eq=False)
class AlmostHermitianManifold:
    name: str
    n: int
    g: tuple
    J: tuple
    integrable_hint: bool | None = None
    holomorphic_chart: bool = False
    domain: ChartDomain = field(default_factory=lambda: ChartDomain.ball(1.0))
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        D = 2 * self.n
        if self.n < 1:
            raise ValueError("complex dimension must be >= 1")
        for label, mat in (("g", self.g), ("J", self.J)):
            if len(mat) != D or any(len(row) != D for row in mat):
                raise ValueError(f"{label} must be a {D}x{D} matrix of expressions")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @classmethod
    def from_strings(cls, name, n, g, J, **kwargs) -> "AlmostHermitianManifold":
        """Build from row-major lists (flat, length D*D, or nested) of expression strings."""
        D = 2 * n

        def as_matrix(entries, label):
            flat = [e for row in entries for e in row] if entries and isinstance(entries[0], (list, tuple)) else list(entries)
            if len(flat) != D * D:
                raise ValueError(f"{label} needs {D * D} entries, got {len(flat)}")
            return tuple(tuple(parse(str(flat[a * D + b]), D) for b in range(D)) for a in range(D))

        return cls(name, n, as_matrix(g, "g"), as_matrix(J, "J"), **kwargs)

    @classmethod
    def from_manifest(cls, manifest: dict) -> "AlmostHermitianManifold":
        domain = manifest.get("domain")
        return cls.from_strings(
            manifest["name"],
            int(manifest["complex_dim"]),
            manifest["g"],
            manifest["J"],
            integrable_hint=manifest.get("integrable_hint"),
            holomorphic_chart=bool(manifest.get("holomorphic_chart", False)),
            domain=ChartDomain.from_dict(domain) if domain else ChartDomain.ball(1.0),
        )

    def to_manifest(self) -> dict:
        m = {
            "name": self.name,
            "complex_dim": self.n,
            "g": [to_string(e) for row in self.g for e in row],
            "J": [to_string(e) for row in self.J for e in row],
            "domain": self.domain.to_dict(),
            "holomorphic_chart": self.holomorphic_chart,
        }
        if self.integrable_hint is not None:
            m["integrable_hint"] = self.integrable_hint
        return m

    def scaled(self, factor: float, name: str | None = None) -> "AlmostHermitianManifold":
        """Same J, metric multiplied by a positive constant."""
        from .calc import Binary, Const

        g = tuple(tuple(Binary("*", Const(float(factor)), e) for e in row) for row in self.g)
        return AlmostHermitianManifold(
            name or f"{self.name}*{factor:g}", self.n, g, self.J,
            self.integrable_hint, self.holomorphic_chart, self.domain,
        )

    # -- evaluation ---------------------------------------------------------
    def jets(self, x) -> tuple[ArrayJet, ArrayJet]:
        """Second-order jets of g and J at ``x`` (cached per point)."""
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if len(self._cache) > _CACHE_LIMIT:
            self._cache.clear()
        out = (_matrix_jet(self.g, x), _matrix_jet(self.J, x))
        self._cache[key] = out
        return out

    def g_at(self, x) -> np.ndarray:
        return self.jets(x)[0].val

    def J_at(self, x) -> np.ndarray:
        return self.jets(x)[1].val


def _matrix_jet(mat, x) -> ArrayJet:
    D = len(x)
    val = np.empty((D, D))
    d1 = np.empty((D, D, D))
    d2 = np.empty((D, D, D, D))
    memo = {}
    for a, row in enumerate(mat):
        for b, e in enumerate(row):
            jet = memo.get(e)
            if jet is None:
                jet = memo[e] = eval_jet2(e, x)
            val[a, b] = jet.value
            d1[a, b] = jet.grad
            d2[a, b] = jet.hess
    return ArrayJet(val, d1, d2)


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray


@dataclass(frozen=True)
class ComplexTangentVector:
    base: np.ndarray
    components: np.ndarray

    def conj(self) -> "ComplexTangentVector":
        return ComplexTangentVector(self.base, np.conj(self.components))


@dataclass
class ValidationReport:
    tolerance: float
    points: list
    residuals: list  # one dict per valid point, None for invalid ones
    invalid: list = field(default_factory=list)  # (index, cause)

    @property
    def max_residuals(self) -> dict:
        out: dict = {}
        for r in self.residuals:
            if r is None:
                continue
            for k, v in r.items():
                if k == "min_eigenvalue":
                    out[k] = min(out.get(k, np.inf), v)
                else:
                    out[k] = max(out.get(k, 0.0), v)
        return out

    @property
    def passed(self) -> bool:
        if self.invalid or not any(r is not None for r in self.residuals):
            return False
        for r in self.residuals:
            if r is None:
                continue
            for k, v in r.items():
                if k == "min_eigenvalue":
                    if not v > 0.0:
                        return False
                elif v > self.tolerance:
                    return False
        return True


def structure_residuals(M: AlmostHermitianManifold, x) -> dict:
    g = M.g_at(x)
    J = M.J_at(x)
    I = np.eye(M.dim)
    return {
        "J_squared": float(np.max(np.abs(J @ J + I))),
        "g_symmetry": float(np.max(np.abs(g - g.T))),
        "compatibility": float(np.max(np.abs(J.T @ g @ J - g))),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh(0.5 * (g + g.T)))),
    }


def validate_structure(M: AlmostHermitianManifold, points, tol_structure: float = 1e-9) -> ValidationReport:
    points = [np.asarray(p, dtype=float) for p in points]
    residuals, invalid = [], []
    for i, p in enumerate(points):
        try:
            residuals.append(structure_residuals(M, p))
        except (ExpressionDomainError, ZeroDivisionError, ValueError) as exc:
            residuals.append(None)
            invalid.append((i, str(exc)))
    return ValidationReport(tol_structure, points, residuals, invalid)


def projectors(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P10, P01) = ((I - iJ)/2, (I + iJ)/2); works on arrays or jets' values."""
    I = np.eye(J.shape[0])
    return 0.5 * (I - 1j * J), 0.5 * (I + 1j * J)


def projection_10(M: AlmostHermitianManifold, X: TangentVector) -> ComplexTangentVector:
    J = M.J_at(X.base)
    v = np.asarray(X.components, dtype=float)
    return ComplexTangentVector(np.asarray(X.base, dtype=float), 0.5 * (v - 1j * (J @ v)))


def nijenhuis(M: AlmostHermitianManifold, p, X, Y) -> np.ndarray:
    """N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y] for constant fields X, Y."""
    _, Jj = M.jets(p)
    J, dJ = Jj.val, Jj.d1  # dJ[a, b, c] = d_c J^a_b
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    JX, JY = J @ X, J @ Y
    dJX = np.einsum("abc,b->ac", dJ, X)  # derivative of the field JX
    dJY = np.einsum("abc,b->ac", dJ, Y)

    def br(U, dU, V, dV):
        return dV @ U - dU @ V

    zero = np.zeros((M.dim, M.dim))
    return br(JX, dJX, JY, dJY) - J @ br(JX, dJX, Y, zero) - J @ br(X, zero, JY, dJY) - br(X, zero, Y, zero)


def fundamental_form(M: AlmostHermitianManifold, p) -> tuple[np.ndarray, np.ndarray]:
    """Omega_ab = g(J e_a, e_b) and its exterior derivative dOmega_abc."""
    gj, Jj = M.jets(p)
    # Omega_ab = J^c_a g_cb
    from .jets import jeinsum

    Om = jeinsum("ca,cb->ab", Jj, gj)
    d = Om.d1  # d[a, b, c] = d_c Omega_ab
    dOm = (
        np.einsum("bca->abc", d)
        + np.einsum("cab->abc", d)
        + np.einsum("abc->abc", d)
    )
    return Om.val, dOm


def vector_field_jet(W, x) -> ArrayJet:
    """2-jet at ``x`` of a real vector field given by D expressions (or strings)."""
    x = np.asarray(x, dtype=float)
    D = len(x)
    if len(W) != D:
        raise ValueError(f"vector field needs {D} components, got {len(W)}")
    comps = [parse(w, D) if isinstance(w, str) else w for w in W]
    val = np.empty(D)
    d1 = np.empty((D, D))
    d2 = np.empty((D, D, D))
    for a, e in enumerate(comps):
        jet = eval_jet2(e, x)
        val[a], d1[a], d2[a] = jet.value, jet.grad, jet.hess
    return ArrayJet(val, d1, d2)
