"""Almost holomorphic maps and the Schwarz quantity Y.

For f: (M, J, h) -> (N, J~, g) and a (1,0)-direction W = w^a e_a at p,

    H = h(W, conj W),   F^i = f^i_a w^a,   FF = g_{i jbar} F^i conj F^j,   Y = FF / H,

where f_* e_a = f^i_a e~_i for (1,0)-frames e of M and e~ of N.  The second
derivative ddbar Y(u, conj u), u = W, is computed two ways:

* ``ddbar_Y_formula``: in normal quasi holomorphic frames at p and f(p) it
  reduces to a source curvature term, a pulled-back target curvature term and
  a non-negative gradient term built from f^i_{ab};
* ``ddbar_Y_oracle``: the scalar function x -> Y(x) with the frame components
  w^a held fixed is assembled from jets and ddbar is applied directly.

The second route needs 2-jets of f^i_a, i.e. third derivatives of f; these
come from derivative trees of the component expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .calc import ExpressionDomainError, diff, eval_jet2, parse, to_string
from .connection import canonical_connection
from .curvature import curvature_tensor, hsc_range
from .frames import FrameField, build_frame, coordinate_frame_10
from .holomorphic import ddbar_jet
from .jets import ArrayJet, jeinsum
from .manifold import AlmostHermitianManifold, ValidationReport
from .sampling import ChartDomain, SampleSpec, sample_directions, sample_points

__all__ = [
    "SmoothMap",
    "SchwarzState",
    "PushforwardData",
    "FormulaTerms",
    "LiouvilleCertificate",
    "ImageOutsideChartError",
    "validate_almost_holomorphic",
    "almost_holomorphic_residual",
    "pushforward_components",
    "schwarz_state",
    "schwarz_Y",
    "ddbar_Y_formula",
    "ddbar_Y_oracle",
    "ddbar_log_H_residual",
    "classify_hypothesis",
    "liouville_check",
]


class ImageOutsideChartError(ValueError):
    pass


def _resolve_manifold(spec) -> AlmostHermitianManifold:
    if isinstance(spec, AlmostHermitianManifold):
        return spec
    if isinstance(spec, str):
        from .atlas import builtin_manifold

        return builtin_manifold(spec).build()
    return AlmostHermitianManifold.from_manifest(spec)


@dataclass(frozen=True, eq=False)
class SmoothMap:
    source: AlmostHermitianManifold
    target: AlmostHermitianManifold
    components: tuple  # target-dimension Expressions in the source variables
    name: str = "map"
    domain: ChartDomain | None = None  # sampling domain, defaults to the source's

    def __post_init__(self):
        if len(self.components) != self.target.dim:
            raise ValueError(f"map needs {self.target.dim} components, got {len(self.components)}")

    @classmethod
    def from_manifest(cls, manifest: dict) -> "SmoothMap":
        M = _resolve_manifold(manifest["source"])
        N = _resolve_manifold(manifest["target"])
        comps = tuple(parse(str(c), M.dim) for c in manifest["components"])
        dom = ChartDomain.from_dict(manifest["domain"]) if manifest.get("domain") else None
        return cls(M, N, comps, manifest.get("name", "map"), dom)

    def to_manifest(self) -> dict:
        m = {
            "name": self.name,
            "source": self.source.to_manifest(),
            "target": self.target.to_manifest(),
            "components": [to_string(c) for c in self.components],
        }
        if self.domain is not None:
            m["domain"] = self.domain.to_dict()
        return m

    @property
    def sampling_domain(self) -> ChartDomain:
        return self.domain or self.source.domain

    @cached_property
    def _gradient_trees(self) -> tuple:
        D = self.source.dim
        return tuple(tuple(diff(c, x + 1) for x in range(D)) for c in self.components)

    def jet(self, x) -> ArrayJet:
        """2-jet of f at x, shape (D_N,)."""
        x = np.asarray(x, dtype=float)
        js = [eval_jet2(c, x) for c in self.components]
        return ArrayJet(np.array([j.value for j in js]), np.array([j.grad for j in js]), np.array([j.hess for j in js]))

    def differential_jet(self, x) -> ArrayJet:
        """2-jet of the Jacobian DF[a, x] = d_x f^a (uses third derivatives of f)."""
        x = np.asarray(x, dtype=float)
        rows = [[eval_jet2(t, x) for t in row] for row in self._gradient_trees]
        val = np.array([[j.value for j in row] for row in rows])
        d1 = np.array([[j.grad for j in row] for row in rows])
        d2 = np.array([[j.hess for j in row] for row in rows])
        return ArrayJet(val, d1, d2)

    def __call__(self, x) -> np.ndarray:
        return self.jet(x).val

    def image(self, x) -> np.ndarray:
        y = self(x)
        if not self.target.domain.contains(y):
            raise ImageOutsideChartError(f"image {np.round(y, 6).tolist()} lies outside the target chart domain")
        return y


def almost_holomorphic_residual(f: SmoothMap, x) -> float:
    """max |df J - J~(f(x)) df| at x."""
    x = np.asarray(x, dtype=float)
    fj = f.jet(x)
    y = fj.val
    if not f.target.domain.contains(y):
        raise ImageOutsideChartError(f"image {np.round(y, 6).tolist()} lies outside the target chart domain")
    DF = fj.d1
    return float(np.max(np.abs(DF @ f.source.J_at(x) - f.target.J_at(y) @ DF)))


def validate_almost_holomorphic(f: SmoothMap, points, tol_map: float = 1e-8) -> ValidationReport:
    points = [np.asarray(p, dtype=float) for p in points]
    residuals, invalid = [], []
    for i, p in enumerate(points):
        try:
            residuals.append({"almost_holomorphic": almost_holomorphic_residual(f, p)})
        except (ExpressionDomainError, ImageOutsideChartError, ZeroDivisionError) as exc:
            residuals.append(None)
            invalid.append((i, str(exc)))
    return ValidationReport(tol_map, points, residuals, invalid)


# ---------------------------------------------------------------------------
# frame components of f_*
# ---------------------------------------------------------------------------
@dataclass
class PushforwardData:
    f_alpha: ArrayJet  # (n, m) f^i_a with 2-jets in source coordinates
    f_alpha_beta: np.ndarray  # (n, m, m) [i, a, b]
    anti: np.ndarray  # (n, m) conj-frame components of f_* e_a (vanish for almost holomorphic f)
    dbar_coefficient: np.ndarray  # (n, m, m) (0,1)-coefficient of the structure-equation identity
    dbar_f_alpha: np.ndarray  # (n, m, m) conj(e_b)(f^i_a) at p


def _check_centers(f: SmoothMap, FM: FrameField, FN: FrameField):
    y = f(FM.center)
    if not np.allclose(y, FN.center, atol=1e-12, rtol=0.0):
        raise ValueError("target frame is not centered at the image of the source frame center")


def pushforward_components(f: SmoothMap, FM: FrameField, FN: FrameField) -> PushforwardData:
    _check_centers(f, FM, FN)
    p = FM.center
    fj = f.jet(p)
    DF = f.differential_jet(p)
    th_t = FN.coframe.compose(fj)  # theta~(f(x)) as jets in x
    thb_t = FN.coframe_bar.compose(fj)
    c = FM.coeffs
    fa = jeinsum("ia,ax,bx->ib", th_t, DF, c)  # f^i_b
    anti = jeinsum("ia,ax,bx->ib", thb_t, DF, c).val

    cM = canonical_connection(f.source, FM)
    cN = canonical_connection(f.target, FN)
    gp, gm = cM.gamma_pure.val, cM.gamma_mixed.val
    tgp, tgm = cN.gamma_pure.val, cN.gamma_mixed.val
    fv = fa.val
    cv = c.val
    efa = np.einsum("bx,iax->iab", cv, fa.d1)  # e_b(f^i_a)
    ebfa = np.einsum("bx,iax->iab", np.conj(cv), fa.d1)  # conj(e_b)(f^i_a)

    # (1,0)-coefficient: evaluate the identity on e_b
    tconn_e = np.einsum("kji,kb->ijb", tgp, fv) + np.einsum("kji,kb->ijb", tgm, anti)
    fab = efa + np.einsum("ijb,ja->iab", tconn_e, fv) - np.einsum("ig,bag->iab", fv, gp)
    # (0,1)-coefficient: evaluate on conj(e_b); f_* conj(e_b) = conj(anti) e~ + conj(f) conj(e~)
    tconn_eb = np.einsum("kji,kb->ijb", tgp, np.conj(anti)) + np.einsum("kji,kb->ijb", tgm, np.conj(fv))
    dbar_coef = ebfa + np.einsum("ijb,ja->iab", tconn_eb, fv) - np.einsum("ig,bag->iab", fv, gm)
    return PushforwardData(fa, fab, anti, dbar_coef, ebfa)


# ---------------------------------------------------------------------------
# the Schwarz quantity
# ---------------------------------------------------------------------------
@dataclass
class SchwarzState:
    H: float
    FF: float  # g_{i jbar} F^i conj F^j
    F: np.ndarray  # (n,)
    f_alpha: np.ndarray  # (n, m)
    f_alpha_beta: np.ndarray  # (n, m, m)
    Y: float
    w: np.ndarray  # frame components of W in the source frame
    source_frame: FrameField = field(repr=False)
    target_frame: FrameField = field(repr=False)
    pushforward: PushforwardData = field(repr=False)

    def to_dict(self) -> dict:
        return {"H": self.H, "FF": self.FF, "Y": self.Y}


def _frame_pair(f: SmoothMap, p, kind: str):
    p = np.asarray(p, dtype=float)
    y = f.image(p)
    if kind == "coordinate":
        return coordinate_frame_10(f.source, p), coordinate_frame_10(f.target, y)
    return build_frame(f.source, p, kind), build_frame(f.target, y, kind)


def _frame_components(FM: FrameField, W) -> np.ndarray:
    """W as frame components: length-m input is taken as is, length-D as a coordinate vector."""
    W = np.asarray(W, dtype=complex)
    if W.shape == (FM.n,):
        w = W
    elif W.shape == (FM.dim,):
        w = FM.components_of(W)
    else:
        raise ValueError(f"direction must have length {FM.n} (frame) or {FM.dim} (coordinates)")
    if not np.any(np.abs(w) > 0):
        raise ValueError("direction W must be nonzero")
    return w


def schwarz_state(f: SmoothMap, p, W, kind: str = "normal_quasi", frames=None) -> SchwarzState:
    """Evaluate H, F, FF, f^i_a, f^i_{ab} and Y at (p, [W]).

    ``W`` is either m frame components (relative to the source frame of the
    given ``kind``) or a coordinate (1,0)-vector of length 2m.
    """
    FM, FN = frames if frames is not None else _frame_pair(f, p, kind)
    w = _frame_components(FM, W)
    push = pushforward_components(f, FM, FN)
    h = FM.metric_jet.val
    g = FN.metric_jet.val
    H = float(np.real(w @ h @ np.conj(w)))
    F = push.f_alpha.val @ w
    FF = float(np.real(F @ g @ np.conj(F)))
    return SchwarzState(H, FF, F, push.f_alpha.val, push.f_alpha_beta, FF / H, w, FM, FN, push)


def schwarz_Y(f: SmoothMap, p, W) -> float:
    """Y = g(f_* W, conj f_* W) / h(W, conj W) for a (1,0)-vector W at p."""
    p = np.asarray(p, dtype=float)
    W = np.asarray(W, dtype=complex)
    if W.shape == (f.source.n,):
        W = W @ coordinate_frame_10(f.source, p).coeffs.val
    if not np.any(np.abs(W) > 0):
        raise ValueError("direction W must be nonzero")
    return _y_coordinate(f, p, W)


def _y_coordinate(f: SmoothMap, p, W) -> float:
    fj = f.jet(p)
    X = fj.d1 @ W
    num = np.real(X @ f.target.g_at(fj.val) @ np.conj(X))
    den = np.real(W @ f.source.g_at(p) @ np.conj(W))
    return float(num / den)


@dataclass
class FormulaTerms:
    total: float
    source_term: float
    target_term: float
    gradient_term: float
    expansion: dict  # the nine terms of ddbar FF (u, conj u), divided by H
    state: SchwarzState = field(repr=False)

    def red_terms_max(self) -> float:
        return max(abs(self.expansion[k]) for k in ("t3", "t6", "t7", "t8", "t9"))

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "source_term": self.source_term,
            "target_term": self.target_term,
            "gradient_term": self.gradient_term,
            "expansion": {k: float(np.real(v)) for k, v in sorted(self.expansion.items())},
            "Y": self.state.Y,
        }


def _composed_jets(f: SmoothMap, st: SchwarzState):
    """Jets in source coordinates of G_{ij} = g~_{i jbar}(f(x)) and F^i(x)."""
    fj = f.jet(st.source_frame.center)
    G = st.target_frame.metric_jet.compose(fj)
    F = jeinsum("ia,a->i", st.pushforward.f_alpha, st.w)
    return G, F


def _expansion_terms(f: SmoothMap, st: SchwarzState) -> dict:
    """The nine product-rule terms of ddbar(G_{ij} F^i conj F^j)(u, conj u)."""
    G, F = _composed_jets(f, st)
    Fb = F.conj()
    p = st.source_frame.center
    _, Jj = f.source.jets(p)
    u = st.w @ st.source_frame.coeffs.val
    ub = np.conj(u)
    Fv, Fbv, Gv = F.val, Fb.val, G.val
    dF_u, dF_ub = F.d1 @ u, F.d1 @ ub
    dFb_u, dFb_ub = Fb.d1 @ u, Fb.d1 @ ub
    dG_u, dG_ub = G.d1 @ u, G.d1 @ ub
    ddG = ddbar_jet(Jj, G, u, ub)
    ddF = ddbar_jet(Jj, F, u, ub)
    ddFb = ddbar_jet(Jj, Fb, u, ub)
    return {
        "t1": np.einsum("ij,i,j->", ddG, Fv, Fbv),
        "t2": np.einsum("i,ij,j->", dF_u, dG_ub, Fbv),
        "t3": np.einsum("j,ij,i->", dFb_u, dG_ub, Fv),
        "t4": np.einsum("ij,j,i->", dG_u, dFb_ub, Fv),
        "t5": np.einsum("ij,i,j->", Gv, dF_u, dFb_ub),
        "t6": np.einsum("ij,i,j->", Gv, Fv, ddFb),
        "t7": np.einsum("ij,i,j->", dG_u, dF_ub, Fbv),
        "t8": np.einsum("ij,i,j->", Gv, ddF, Fbv),
        "t9": np.einsum("ij,j,i->", Gv, dFb_u, dF_ub),
    }


def ddbar_Y_formula(f: SmoothMap, p, W, frames=None) -> FormulaTerms:
    """ddbar Y(u, conj u) from curvature and f^i_{ab} in normal quasi frames."""
    st = schwarz_state(f, p, W, "normal_quasi", frames)
    FM, FN = st.source_frame, st.target_frame
    RM = curvature_tensor(f.source, FM, canonical_connection(f.source, FM))
    RN = curvature_tensor(f.target, FN, canonical_connection(f.target, FN))
    H, w, F = st.H, st.w, st.F
    source = st.Y / H * float(np.real(RM.quartic(w)))
    target = -float(np.real(RN.quartic(F))) / H
    Gi = np.einsum("iab,a,b->i", st.f_alpha_beta, w, w)
    gradient = float(np.real(Gi @ FN.metric_jet.val @ np.conj(Gi))) / H
    terms = {k: complex(v) / H for k, v in _expansion_terms(f, st).items()}
    return FormulaTerms(source + target + gradient, source, target, gradient, terms, st)


def ddbar_Y_oracle(f: SmoothMap, p, W, frames=None) -> tuple[float, float]:
    """(Re, Im) of ddbar y(u, conj u) for y(x) = FF(x) / H(x) with w held fixed."""
    st = schwarz_state(f, p, W, "normal_quasi", frames)
    G, F = _composed_jets(f, st)
    FF = jeinsum("ij,i,j->", G, F, F.conj())
    H = jeinsum("ab,a,b->", st.source_frame.metric_jet, st.w, np.conj(st.w))
    y = FF * H.reciprocal()
    _, Jj = f.source.jets(st.source_frame.center)
    u = st.w @ st.source_frame.coeffs.val
    v = ddbar_jet(Jj, y, u, np.conj(u))
    return float(np.real(v)), float(np.imag(v))


def ddbar_log_H_residual(M: AlmostHermitianManifold, p, w) -> tuple[float, float]:
    """(direct ddbar log H^-1 (u, conj u), R(w, conj w, w, conj w) / H) in a normal quasi frame."""
    F = build_frame(M, p, "normal_quasi")
    w = _frame_components(F, w)
    H = jeinsum("ab,a,b->", F.metric_jet, w, np.conj(w))
    logHinv = -(H.log())
    _, Jj = M.jets(F.center)
    u = w @ F.coeffs.val
    direct = ddbar_jet(Jj, logHinv, u, np.conj(u))
    R = curvature_tensor(M, F, canonical_connection(M, F))
    return float(np.real(direct)), float(np.real(R.quartic(w)) / np.real(H.val))


# ---------------------------------------------------------------------------
# sampled Liouville certificate
# ---------------------------------------------------------------------------
@dataclass
class LiouvilleCertificate:
    hsc_source_min: float
    hsc_source_max: float
    hsc_target_min: float
    hsc_target_max: float
    hypothesis_status: str
    y_max_sampled: float
    y_argmax: tuple  # (point, coordinate direction)
    inequality_witness: float
    contradiction: bool | None  # None when the certificate does not apply
    almost_holomorphic_max: float
    witness_terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        p, W = self.y_argmax
        return {
            "hsc_source_min": self.hsc_source_min,
            "hsc_source_max": self.hsc_source_max,
            "hsc_target_min": self.hsc_target_min,
            "hsc_target_max": self.hsc_target_max,
            "hypothesis_status": self.hypothesis_status,
            "y_max_sampled": self.y_max_sampled,
            "y_argmax": {
                "point": [float(v) for v in p],
                "direction": [[float(np.real(z)), float(np.imag(z))] for z in W],
            },
            "inequality_witness": self.inequality_witness,
            "contradiction": self.contradiction,
            "almost_holomorphic_max": self.almost_holomorphic_max,
            "witness_terms": self.witness_terms,
        }


def classify_hypothesis(hM_min: float, hN_max: float, tol_hsc: float = 1e-6) -> str:
    """strict_source: H_M > 0 and H_N <= 0; strict_target: H_M >= 0 and H_N < 0."""
    if hM_min > tol_hsc and hN_max <= tol_hsc:
        return "strict_source"
    if hM_min >= -tol_hsc and hN_max < -tol_hsc:
        return "strict_target"
    return "not_satisfied"


def _unit(W):
    return W / np.linalg.norm(W)


def _refine(f: SmoothMap, p, W, steps: int = 20):
    """Coordinate ascent of Y over (point, coordinate direction) with shrinking steps."""
    dom = f.sampling_domain
    D = f.source.dim
    best = _y_coordinate(f, p, W)
    x = np.concatenate([p, W.real, W.imag])
    step = 0.05 * (dom.radius if dom.kind == "ball" else float(np.min(np.subtract(dom.upper, dom.lower))) / 2)
    for _ in range(steps):
        for k in range(len(x)):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[k] += sgn * step
                q = dom.clip(trial[:D])
                if not dom.contains(q):
                    continue
                try:
                    P10 = 0.5 * (np.eye(D) - 1j * f.source.J_at(q))
                    Wq = P10 @ (trial[D:2 * D] + 1j * trial[2 * D:])
                    if np.linalg.norm(Wq) < 1e-12:
                        continue
                    val = _y_coordinate(f, q, _unit(Wq))
                except (ExpressionDomainError, ZeroDivisionError, ValueError):
                    continue
                if val > best:
                    best = val
                    Wq = _unit(Wq)
                    x = np.concatenate([q, Wq.real, Wq.imag])
        step *= 0.6
    W = x[D:2 * D] + 1j * x[2 * D:]
    return x[:D], W, best


def liouville_check(f: SmoothMap, sampling: SampleSpec | None = None, tol_hsc: float = 1e-6,
                    tol_y: float = 1e-9, tol_map: float = 1e-8) -> LiouvilleCertificate:
    sampling = sampling or SampleSpec()
    M, N = f.source, f.target
    pts = sample_points(f.sampling_domain, M.dim, sampling.points, sampling.seed)
    ah = validate_almost_holomorphic(f, pts, tol_map)
    ah_max = ah.max_residuals.get("almost_holomorphic", float("nan"))

    hM = hsc_range(M, sampling, points=pts)
    hN = hsc_range(N, sampling)
    status = classify_hypothesis(hM.min, hN.max, tol_hsc)

    K = sampling.directions_per_point
    dirs = sample_directions(M.n, len(pts) * K, sampling.seed).reshape(len(pts), K, M.n)
    best, arg = -np.inf, (pts[0], dirs[0, 0] @ coordinate_frame_10(M, pts[0]).coeffs.val)
    for i, p in enumerate(pts):
        c = coordinate_frame_10(M, p).coeffs.val
        for k in range(K):
            W = dirs[i, k] @ c
            y = _y_coordinate(f, p, W)
            if y > best:  # strict: ties keep the lowest sample index
                best, arg = y, (p, W)
    p_star, W_star = arg
    if best > tol_y:
        p_star, W_star, best = _refine(f, p_star, W_star)

    terms = ddbar_Y_formula(f, p_star, W_star)
    witness = terms.source_term + terms.target_term
    contradiction = None
    if status != "not_satisfied" and best > tol_y:
        contradiction = bool(witness > 0)
    return LiouvilleCertificate(
        hM.min, hM.max, hN.min, hN.max, status, float(best), (np.asarray(p_star), np.asarray(W_star)),
        float(witness), contradiction, float(ah_max), terms.to_dict(),
    )
