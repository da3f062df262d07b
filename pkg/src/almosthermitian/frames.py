"""Local (1,0)-frames given by 2-jets at a center point.

A frame is a family e_alpha = c[alpha, a] d/dx_a of complex vector fields,
known through the second-order jet of the coefficient matrix ``c`` at the
center ``p``.  Frames start from the projection of coordinate vectors onto
T^{1,0} and are gauge-fixed by a polynomial change of frame

    e'_alpha = A[alpha, mu](x) e_mu,   A(p) = I,

whose first derivatives cancel the Christoffel symbols that must vanish at
p (pseudo / normal) and whose mixed second derivatives cancel the
(1,0)-derivatives of the mixed symbols (quasi).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .jets import ArrayJet, bracket, jeinsum
from .manifold import AlmostHermitianManifold

__all__ = [
    "FrameField",
    "FrameResidualReport",
    "FrameConditioningError",
    "FRAME_KINDS",
    "coordinate_frame_10",
    "build_frame",
    "frame_residuals",
    "subspace_distance",
]

FRAME_KINDS = ("coordinate", "pseudo", "quasi", "normal_pseudo", "normal_quasi")


class FrameConditioningError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class FrameField:
    manifold: AlmostHermitianManifold
    center: np.ndarray
    coeffs: ArrayJet  # (n, D) complex, order 2
    kind: str = "coordinate"
    certified_residuals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @cached_property
    def full(self) -> ArrayJet:
        """Rows e_1..e_n, conj(e_1)..conj(e_n) of the complexified frame."""
        return ArrayJet.concatenate([self.coeffs, self.coeffs.conj()], axis=0)

    @cached_property
    def coframe_full(self) -> ArrayJet:
        """omega[k, a] with omega[k] . full[l] = delta_kl (dual coframe)."""
        return self.full.inv().T

    @property
    def coframe(self) -> ArrayJet:
        return self.coframe_full[: self.n]

    @property
    def coframe_bar(self) -> ArrayJet:
        return self.coframe_full[self.n:]

    @cached_property
    def metric_jet(self) -> ArrayJet:
        """h[alpha, beta] = g(e_alpha, conj e_beta) as a 2-jet."""
        gj, _ = self.manifold.jets(self.center)
        c = self.coeffs
        return jeinsum("ia,ab,jb->ij", c, gj, c.conj())

    def vectors(self) -> np.ndarray:
        return self.coeffs.val

    def components_of(self, v) -> np.ndarray:
        """Frame components theta^alpha(v) of a coordinate vector at the center."""
        return self.coframe.val @ np.asarray(v)

    def vector_from_components(self, w) -> np.ndarray:
        return np.asarray(w) @ self.coeffs.val


@dataclass
class FrameResidualReport:
    kind: str
    residuals: dict

    def __getitem__(self, key):
        return self.residuals[key]

    def max_over(self, keys) -> float:
        return max(self.residuals[k] for k in keys)


def _greedy_columns(P: np.ndarray, n: int) -> list:
    """Pick n columns of P, each time the one with largest residual norm."""
    chosen = []
    Q = np.zeros((P.shape[0], 0), dtype=complex)
    for _ in range(n):
        R = P - Q @ (Q.conj().T @ P)
        norms = np.linalg.norm(R, axis=0)
        norms[chosen] = -1.0
        best = float(np.max(norms))
        if best <= 1e-10:
            raise FrameConditioningError("projected coordinate vectors are degenerate")
        # deterministic tie-break: lowest index among near-maximal columns
        k = int(np.flatnonzero(norms >= best * (1 - 1e-12))[0])
        chosen.append(k)
        Q = np.column_stack([Q, R[:, k] / norms[k]])
    return chosen


def coordinate_frame_10(M: AlmostHermitianManifold, p) -> FrameField:
    """Frame of projected coordinate vectors (I - iJ)/2 d/dx_a."""
    p = np.asarray(p, dtype=float)
    _, Jj = M.jets(p)
    D = M.dim
    P10 = (ArrayJet.constant(np.eye(D), D) - Jj * 1j) * 0.5
    cols = _greedy_columns(P10.val, M.n)
    c = P10.T[np.asarray(cols)]
    sv = np.linalg.svd(c.val, compute_uv=False)
    if sv[-1] <= 1e-8:
        raise FrameConditioningError(f"coordinate frame singular (smallest singular value {sv[-1]:.3g})")
    return FrameField(M, p, c, "coordinate")


def _gauge_jet(base: FrameField, kind: str) -> ArrayJet:
    from .connection import canonical_connection

    n, D = base.n, base.dim
    conn = canonical_connection(base.manifold, base)
    Gp, Gm = conn.gamma_pure, conn.gamma_mixed  # [beta, alpha, gamma]
    th = base.coframe.val
    thb = base.coframe_bar.val
    c = base.coeffs

    # first derivatives: cancel mixed symbols (pseudo), and pure ones (normal)
    A1 = -np.einsum("bag,bx->agx", Gm.val, thb)
    if kind.startswith("normal"):
        A1 = A1 - np.einsum("bag,bx->agx", Gp.val, th)

    A2 = np.zeros((n, n, D, D), dtype=complex)
    if kind.endswith("quasi"):
        # need e_b(conj(e_c)(A[a, d])) = -e_b(Gm[c, a, d]) - e_b(A[a, k]) Gm[c, k, d]
        eGm = np.einsum("bx,cadx->bcad", c.val, Gm.d1)  # e_b(Gm[c,a,d])
        eA = np.einsum("bx,akx->akb", c.val, A1)  # e_b(A[a,k])
        dcbar = np.einsum("bx,cyx->bcy", c.val, np.conj(c.d1))  # e_b(conj c[c, y])
        rhs = -eGm - np.einsum("akb,ckd->bcad", eA, Gm.val)
        rhs = rhs - np.einsum("bcy,ady->bcad", dcbar, A1)
        sym = np.einsum("bx,cy->bcxy", th, thb)
        sym = sym + sym.transpose(0, 1, 3, 2)
        A2 = np.einsum("bcad,bcxy->adxy", rhs, sym)
    return ArrayJet(np.eye(n, dtype=complex), A1, A2)


def build_frame(M: AlmostHermitianManifold, p, kind: str = "normal_quasi") -> FrameField:
    """A (1,0)-frame at p that is pseudo / quasi / normal holomorphic there."""
    if kind not in FRAME_KINDS:
        raise ValueError(f"unknown frame kind {kind!r}")
    base = coordinate_frame_10(M, p)
    if kind == "coordinate":
        return base
    A = _gauge_jet(base, kind)
    coeffs = jeinsum("am,mx->ax", A, base.coeffs)
    frame = FrameField(M, base.center, coeffs, kind)
    report = frame_residuals(M, frame)
    frame.certified_residuals.update(report.residuals)
    return frame


def subspace_distance(F1: FrameField, F2: FrameField) -> float:
    """Spectral distance between the spans of two frames at their centers."""
    Q1, _ = np.linalg.qr(F1.coeffs.val.T)
    Q2, _ = np.linalg.qr(F2.coeffs.val.T)
    return float(np.linalg.norm(Q1 @ Q1.conj().T - Q2 @ Q2.conj().T, 2))


def frame_residuals(M: AlmostHermitianManifold, F: FrameField) -> FrameResidualReport:
    """Residuals of the pseudo / quasi / normal conditions for ``F`` at its center."""
    from .connection import canonical_connection

    conn = canonical_connection(M, F)
    Gp, Gm = conn.gamma_pure, conn.gamma_mixed
    c = F.coeffs
    h = F.metric_jet
    Ginv = np.linalg.inv(h.val)

    # (c) [e_b, conj e_c](p), and [e_b, [conj e_c, e_a]] for the quasi condition
    cb = c.conj()
    br = bracket(c, cb)  # (n, n, D), order 1
    dbl = _double_bracket(c, cb)
    P10 = _p10(M, F.center)

    # (d): Gp[b, a, g] - e_b[h_{a d}] Ginv[d, g]
    eh = np.einsum("bx,adx->bad", c.val, h.d1)
    d_res = Gp.val - np.einsum("bad,dg->bag", eh, Ginv)
    # (e): conj-type companion, conj(Gp) vs conj(e_b)[h_{d a}] Ginv^T
    ebh = np.einsum("bx,dax->bda", np.conj(c.val), h.d1)
    e_res = np.conj(Gp.val) - np.einsum("bda,dg->bag", ebh, Ginv.T)

    # (f): nabla_{e_b} nabla_{conj e_c} e_a = (e_b(Gm[c,a,d]) + Gm[c,a,m] Gp[b,m,d]) e_d
    eGm = np.einsum("bx,cadx->bcad", c.val, Gm.d1)
    f_coef = eGm + np.einsum("cam,bmd->bcad", Gm.val, Gp.val)
    f_vec = np.einsum("bcad,dx->bcax", f_coef, c.val)

    # definition checks: pseudo [conj X, e_a]^{1,0} over coordinate (0,1) directions
    from .holomorphic import pseudo_holomorphic_residual

    pseudo_def = max(pseudo_holomorphic_residual(M, c[a], F.center) for a in range(F.n))
    quasi_def = float(np.max(np.abs(np.einsum("xy,bcay->bcax", P10, dbl.val))))

    res = {
        "a": float(np.max(np.abs(Gm.val))),
        "b": float(np.max(np.abs(np.conj(Gm.val)))),
        "c": float(np.max(np.linalg.norm(br.val, axis=-1))),
        "d": float(np.max(np.abs(d_res))),
        "e": float(np.max(np.abs(e_res))),
        "f": float(np.max(np.linalg.norm(f_vec, axis=-1))),
        "pseudo_definition": float(pseudo_def),
        "quasi_definition": quasi_def,
        "normal": float(max(np.max(np.abs(Gp.val)), np.max(np.abs(Gm.val)))),
        "type_10": float(_type_residual(M, F)),
        "min_singular_value": float(np.linalg.svd(c.val, compute_uv=False)[-1]),
    }
    return FrameResidualReport(F.kind, res)


def _double_bracket(c: ArrayJet, cb: ArrayJet) -> ArrayJet:
    """[e_b, [conj e_c, e_a]] with shape (b, c, a, D)."""
    inner = bracket(cb, c)  # (c, a, D), order 1
    n = c.shape[0]
    D = c.shape[1]
    flat = inner.val.reshape(n * n, D)
    flat_jet = ArrayJet(flat, inner.d1.reshape(n * n, D, D))
    out = bracket(c, flat_jet)  # (b, c*a, D), order 0
    return ArrayJet(out.val.reshape(n, n, n, D))


def _p10(M, p):
    J = M.J_at(p)
    return 0.5 * (np.eye(M.dim) - 1j * J)


def _type_residual(M: AlmostHermitianManifold, F: FrameField) -> float:
    """Size of the jets of P01 e_alpha at the center (should vanish)."""
    _, Jj = M.jets(F.center)
    D = M.dim
    P01 = (ArrayJet.constant(np.eye(D), D) + Jj * 1j) * 0.5
    v = jeinsum("xy,ay->ax", P01, F.coeffs)
    return max(float(np.max(np.abs(v.val))), float(np.max(np.abs(v.d1))), float(np.max(np.abs(v.d2))))
