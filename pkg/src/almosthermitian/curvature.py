"""Curvature of the canonical connection and holomorphic sectional curvature.

Components are R[a, b, c, d] = g(R(e_a, conj e_b) e_c, conj e_d) with

    R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,

so that the Poincare disk has holomorphic sectional curvature -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import ConnectionData, canonical_connection
from .frames import FrameField, build_frame, coordinate_frame_10
from .jets import bracket, jeinsum
from .manifold import AlmostHermitianManifold, ComplexTangentVector
from .sampling import SampleSpec, sample_directions, sample_points

__all__ = [
    "CurvatureTensor",
    "HscReport",
    "curvature_tensor",
    "curvature_at",
    "gauge_rhs",
    "gauge_curvature_residuals",
    "gauge_curvature_residual",
    "hsc",
    "hsc_components",
    "hsc_range",
]


@dataclass(frozen=True)
class CurvatureTensor:
    R: np.ndarray  # (n, n, n, n) complex
    metric: np.ndarray  # h[a, b] = g(e_a, conj e_b) at the center

    def conjugation_defect(self) -> float:
        """max |R_{a b c d} - conj R_{b a d c}|."""
        return float(np.max(np.abs(self.R - np.conj(self.R.transpose(1, 0, 3, 2)))))

    def quartic(self, w) -> complex:
        w = np.asarray(w, dtype=complex)
        wb = np.conj(w)
        return complex(np.einsum("abcd,a,b,c,d->", self.R, w, wb, w, wb))


def curvature_tensor(M: AlmostHermitianManifold, F: FrameField, conn: ConnectionData) -> CurvatureTensor:
    """R_{a bbar c dbar} at the frame center, in a general frame."""
    c = F.coeffs
    Gp, Gm = conn.gamma_pure, conn.gamma_mixed
    cv = c.val
    eGm = np.einsum("ax,bcvx->abcv", cv, Gm.d1)  # e_a(Gm[b, c, v])
    ebGp = np.einsum("bx,acvx->abcv", np.conj(cv), Gp.d1)  # conj(e_b)(Gp[a, c, v])
    gp, gm = Gp.val, Gm.val
    br = bracket(c, c.conj()).val  # [e_a, conj e_b]
    A = np.einsum("abx,mx->abm", br, F.coframe.val)
    B = np.einsum("abx,mx->abm", br, F.coframe_bar.val)
    Rup = (
        eGm
        + np.einsum("bcm,amv->abcv", gm, gp)
        - ebGp
        - np.einsum("acm,bmv->abcv", gp, gm)
        - np.einsum("abm,mcv->abcv", A, gp)
        - np.einsum("abm,mcv->abcv", B, gm)
    )
    h = F.metric_jet.val
    return CurvatureTensor(np.einsum("abcv,vd->abcd", Rup, h), h)


def curvature_at(M: AlmostHermitianManifold, p, kind: str = "coordinate") -> tuple[CurvatureTensor, FrameField]:
    F = coordinate_frame_10(M, p) if kind == "coordinate" else build_frame(M, p, kind)
    return curvature_tensor(M, F, canonical_connection(M, F)), F


def gauge_rhs(F: FrameField) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides of the quasi-frame (first) and normal-frame (second) formulas.

    first:  -conj(e_j) e_i [h_{k lbar}] + h^{a bbar} e_i[h_{k bbar}] conj(e_j)[h_{a lbar}]
    second: -conj(e_j) e_i [h_{k lbar}]
    """
    c = F.coeffs
    h = F.metric_jet
    eh = jeinsum("ix,klx->ikl", c, h.deriv())  # e_i[h_{k l}], order 1
    second = np.einsum("jy,ikly->ijkl", np.conj(c.val), eh.d1)
    ebh = np.einsum("jy,aly->jal", np.conj(c.val), h.d1)  # conj(e_j)[h_{a l}]
    K = np.linalg.inv(h.val).T  # K[a, b] = h^{a bbar}
    quad = np.einsum("ab,ikb,jal->ijkl", K, eh.val, ebh)
    return -second + quad, -second


def gauge_curvature_residuals(M: AlmostHermitianManifold, p) -> dict:
    """Compare the general-frame curvature with the gauge formulas at p."""
    out = {}
    for kind in ("quasi", "normal_quasi"):
        F = build_frame(M, p, kind)
        R = curvature_tensor(M, F, canonical_connection(M, F)).R
        rhs_g, rhs_h = gauge_rhs(F)
        out[f"{kind}_g"] = float(np.max(np.abs(R - rhs_g)))
        if kind == "normal_quasi":
            out["normal_quasi_h"] = float(np.max(np.abs(R - rhs_h)))
            out["normal_first_derivative_term"] = float(np.max(np.abs(rhs_g - rhs_h)))
    return out


def gauge_curvature_residual(M: AlmostHermitianManifold, p) -> float:
    r = gauge_curvature_residuals(M, p)
    return max(r["quasi_g"], r["normal_quasi_g"], r["normal_quasi_h"])


def hsc_components(curv: CurvatureTensor, w) -> float:
    """H for frame components w (the frame whose curvature is ``curv``)."""
    w = np.asarray(w, dtype=complex)
    norm2 = float(np.real(np.conj(w) @ curv.metric.T @ w))
    if not norm2 > 0:
        raise ValueError("holomorphic sectional curvature needs a nonzero direction")
    return float(np.real(curv.quartic(w))) / norm2**2


def hsc(M: AlmostHermitianManifold, p, W, kind: str = "coordinate") -> float:
    """H(W) = R(W, conj W, W, conj W) / |W|^4 for a (1,0)-vector W at p."""
    v = np.asarray(W.components if isinstance(W, ComplexTangentVector) else W, dtype=complex)
    if not np.any(np.abs(v) > 0):
        raise ValueError("holomorphic sectional curvature needs a nonzero direction")
    curv, F = curvature_at(M, p, kind)
    return hsc_components(curv, F.components_of(v))


@dataclass
class HscReport:
    values: np.ndarray  # (points, directions)
    points: np.ndarray
    directions: np.ndarray  # (points, directions, n) frame components
    imag_defect: float = 0.0

    @property
    def min(self) -> float:
        return float(np.min(self.values))

    @property
    def max(self) -> float:
        return float(np.max(self.values))

    def _at(self, flat_index: int):
        i, k = np.unravel_index(flat_index, self.values.shape)
        return self.points[i], self.directions[i, k]

    @property
    def argmin(self):
        return self._at(int(np.argmin(self.values)))

    @property
    def argmax(self):
        return self._at(int(np.argmax(self.values)))

    def to_dict(self) -> dict:
        pmin, wmin = self.argmin
        pmax, wmax = self.argmax
        return {
            "min": self.min,
            "max": self.max,
            "argmin": {"point": pmin.tolist(), "direction": _cplx(wmin)},
            "argmax": {"point": pmax.tolist(), "direction": _cplx(wmax)},
            "samples": int(self.values.size),
            "imag_defect": self.imag_defect,
        }


def _cplx(w) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in w]


def hsc_range(M: AlmostHermitianManifold, sampling: SampleSpec | None = None, points=None) -> HscReport:
    """Deterministic scan of H over sampled points and directions.

    Directions are components in the coordinate (1,0)-frame at each point.
    """
    sampling = sampling or SampleSpec()
    if points is None:
        points = sample_points(M.domain, M.dim, sampling.points, sampling.seed)
    points = np.asarray(points, dtype=float)
    K = sampling.directions_per_point
    dirs = sample_directions(M.n, len(points) * K, sampling.seed).reshape(len(points), K, M.n)
    vals = np.empty((len(points), K))
    imag = 0.0
    for i, p in enumerate(points):
        curv, _ = curvature_at(M, p)
        W = dirs[i]
        Wb = np.conj(W)
        num = np.einsum("abcd,ka,kb,kc,kd->k", curv.R, W, Wb, W, Wb)
        den = np.real(np.einsum("ka,ab,kb->k", W, curv.metric, Wb))
        imag = max(imag, float(np.max(np.abs(num.imag) / den**2)))
        vals[i] = num.real / den**2
    return HscReport(vals, points, dirs, imag)
