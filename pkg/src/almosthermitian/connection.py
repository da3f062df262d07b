"""Levi-Civita, canonical (almost Chern) and Chern connections.

Conventions
-----------
Frame symbols are stored with the differentiating direction first:

    nabla_{e_b} e_a       = gamma_pure[b, a, g]  e_g
    nabla_{conj e_b} e_a  = gamma_mixed[b, a, g] e_g

and the conjugate relations follow from the reality of the connection.
Real-basis Christoffel symbols are stored as ``G[a, b, c] = dx^c(nabla_a d_b)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calc import eval_jet2, parse
from .frames import FrameField, coordinate_frame_10
from .jets import ArrayJet, bracket, jeinsum
from .manifold import AlmostHermitianManifold, ComplexTangentVector, vector_field_jet

__all__ = [
    "ConnectionData",
    "LeviCivitaData",
    "levi_civita",
    "canonical_connection",
    "chern_connection_holo",
    "real_christoffels",
    "frame_christoffels_from_real",
    "torsion_table",
    "torsion_of",
    "real_torsion",
    "canonical_axiom_residuals",
    "structure_equation_residual",
    "covariant_hessian",
    "christoffels_for",
    "nabla_J",
    "nabla_omega",
    "kahler_commutator_residual",
]


@dataclass(frozen=True, eq=False)
class ConnectionData:
    frame: FrameField
    gamma_pure: ArrayJet  # (n, n, n), order 1
    gamma_mixed: ArrayJet  # (n, n, n), order 1
    torsion_20: np.ndarray  # (n, n, D) coordinate vectors Theta(e_a, e_b)
    torsion_11_norm: float
    name: str = "canonical"

    @property
    def center(self) -> np.ndarray:
        return self.frame.center

    @property
    def max_symbol(self) -> float:
        return float(max(np.max(np.abs(self.gamma_pure.val)), np.max(np.abs(self.gamma_mixed.val))))


@dataclass(frozen=True, eq=False)
class LeviCivitaData:
    center: np.ndarray
    gamma_real: ArrayJet  # G[a, b, c] = Gamma^c_{ab}, order 1


def _torsion_blocks(F: FrameField, Gp: np.ndarray, Gm: np.ndarray):
    c = F.coeffs
    cv = c.val
    br20 = bracket(c, c).val  # [e_a, e_b]
    br11 = bracket(c, c.conj()).val  # [e_a, conj e_b]
    t20 = np.einsum("abg,gx->abx", Gp - Gp.transpose(1, 0, 2), cv) - br20
    t11 = (
        np.einsum("abg,gx->abx", np.conj(Gm), np.conj(cv))
        - np.einsum("bag,gx->abx", Gm, cv)
        - br11
    )
    return t20, t11


def canonical_connection(M: AlmostHermitianManifold, F: FrameField) -> ConnectionData:
    """Canonical connection in the frame ``F``, from its defining axioms.

    The vanishing (1,1)-torsion forces the mixed symbols to be the (1,0)
    components of the brackets [conj e_b, e_a]; metric compatibility then
    determines the pure symbols.
    """
    c = F.coeffs
    th = F.coframe
    h = F.metric_jet
    Gm = jeinsum("bax,gx->bag", bracket(c.conj(), c), th)
    eh = jeinsum("bx,agx->bag", c, h.deriv())  # e_b[h_{a g}]
    X = eh - jeinsum("bge,ae->bag", Gm.conj(), h)
    Gp = jeinsum("bag,gd->bad", X, h.inv())
    t20, t11 = _torsion_blocks(F, Gp.val, Gm.val)
    t11n = float(np.max(np.linalg.norm(t11, axis=-1)))
    return ConnectionData(F, Gp, Gm, t20, t11n, "canonical")


def chern_connection_holo(M: AlmostHermitianManifold, p) -> ConnectionData:
    """Chern connection in the holomorphic coordinate frame d/dz^a."""
    if not M.holomorphic_chart:
        raise ValueError(f"manifold {M.name!r} is not flagged with a holomorphic chart")
    p = np.asarray(p, dtype=float)
    n, D = M.n, M.dim
    w = np.zeros((n, D), dtype=complex)
    for a in range(n):
        w[a, 2 * a] = 0.5
        w[a, 2 * a + 1] = -0.5j
    F = FrameField(M, p, ArrayJet.constant(w, D), "coordinate")
    gj, _ = M.jets(p)
    gh = jeinsum("ax,xy,by->ab", w, gj, np.conj(w))  # g_{a bbar}
    dg = jeinsum("bx,adx->bad", w, gh.deriv())  # d_b g_{a dbar}
    Gp = jeinsum("bad,dg->bag", dg, gh.inv())
    Gm = ArrayJet.constant(np.zeros((n, n, n), dtype=complex), D, order=1)
    t20, t11 = _torsion_blocks(F, Gp.val, Gm.val)
    return ConnectionData(F, Gp, Gm, t20, float(np.max(np.linalg.norm(t11, axis=-1))), "chern")


def levi_civita(M: AlmostHermitianManifold, p) -> LeviCivitaData:
    p = np.asarray(p, dtype=float)
    gj, _ = M.jets(p)
    dg = gj.deriv()  # [a, b, c] = d_c g_ab
    # S[d, b, c] = d_b g_dc + d_c g_db - d_d g_bc
    S = jeinsum("dcb->dbc", dg) + dg - jeinsum("bcd->dbc", dg)
    G = jeinsum("ad,dbc->bca", gj.inv(), S) * 0.5
    return LeviCivitaData(p, G)


def real_christoffels(conn: ConnectionData) -> ArrayJet:
    """Frame symbols converted to G[a, b, c] = dx^c(nabla_{d_a} d_b), with 1-jets."""
    F = conn.frame
    c = F.coeffs
    th, thb = F.coframe, F.coframe_bar
    C = jeinsum("ba,bmv->amv", th, conn.gamma_pure) + jeinsum("ba,bmv->amv", thb, conn.gamma_mixed)
    z = jeinsum("mba,mc->abc", th.deriv(), c) + jeinsum("mb,amv,vc->abc", th, C, c)
    return (z + z.conj()).real


def frame_christoffels_from_real(F: FrameField, G: np.ndarray):
    """Inverse conversion at the center: real symbols -> (gamma_pure, gamma_mixed)."""
    c = F.coeffs
    th = F.coframe.val
    cv = c.val
    # d_x c_alpha + Gamma along x applied to c_alpha, for every coordinate x
    cov = np.einsum("acx->axc", c.d1) + np.einsum("ab,xbc->axc", cv, G)
    Gp = np.einsum("bx,axc,gc->bag", cv, cov, th)
    Gm = np.einsum("bx,axc,gc->bag", np.conj(cv), cov, th)
    return Gp, Gm


def torsion_table(conn: ConnectionData) -> np.ndarray:
    """Torsion on all pairs of the complexified frame, shape (2n, 2n, D)."""
    F = conn.frame
    n, D = F.n, F.dim
    t20, t11 = _torsion_blocks(F, conn.gamma_pure.val, conn.gamma_mixed.val)
    T = np.zeros((2 * n, 2 * n, D), dtype=complex)
    T[:n, :n] = t20
    T[n:, n:] = np.conj(t20)
    T[:n, n:] = t11
    T[n:, :n] = -t11.transpose(1, 0, 2)
    return T


def _vec(v) -> np.ndarray:
    return np.asarray(v.components if isinstance(v, ComplexTangentVector) else v)


def torsion_of(conn: ConnectionData, A, B) -> np.ndarray:
    """Theta(A, B) for complex tangent vectors at the frame center."""
    om = conn.frame.coframe_full.val
    a = om @ _vec(A)
    b = om @ _vec(B)
    return np.einsum("k,l,klx->x", a, b, torsion_table(conn))


def real_torsion(G: np.ndarray) -> np.ndarray:
    """T[a, b, c] = dx^c T(d_a, d_b) from real Christoffels."""
    return G - G.transpose(1, 0, 2)


def canonical_axiom_residuals(M: AlmostHermitianManifold, conn: ConnectionData) -> dict:
    """Axioms of the canonical connection checked in the real coordinate basis."""
    p = conn.center
    gj, Jj = M.jets(p)
    G = real_christoffels(conn).val
    g, J = gj.val, Jj.val
    dg = np.einsum("abc->cab", gj.d1)  # [c, a, b] = d_c g_ab
    dJ = np.einsum("abc->cab", Jj.d1)
    metric = dg - np.einsum("cad,db->cab", G, g) - np.einsum("cbd,ad->cab", G, g)
    nJ = dJ + np.einsum("cda,db->cab", G, J) - np.einsum("ad,cbd->cab", J, G)
    cv = conn.frame.coeffs.val
    t11 = np.einsum("ka,lb,abx->klx", cv, np.conj(cv), real_torsion(G))
    return {
        "metric": float(np.max(np.abs(metric))),
        "nabla_J": float(np.max(np.abs(nJ))),
        "torsion_11": float(np.max(np.abs(t11))),
        "torsion_11_frame": conn.torsion_11_norm,
    }


def structure_equation_residual(M: AlmostHermitianManifold, F: FrameField, conn: ConnectionData) -> float:
    """max |d theta^a + theta^a_b ^ theta^b - Theta^a| over coordinate pairs."""
    th = F.coframe
    thv, thbv = th.val, F.coframe_bar.val
    d1 = th.d1  # [alpha, b, a] = d_a theta[alpha, b]
    dth = d1.transpose(0, 2, 1) - d1
    # connection forms theta^a_b = Gp[g, b, a] theta^g + Gm[g, b, a] conj(theta)^g
    cf = np.einsum("gba,gx->abx", conn.gamma_pure.val, thv) + np.einsum(
        "gba,gx->abx", conn.gamma_mixed.val, thbv
    )
    wedge = np.einsum("abx,by->axy", cf, thv)
    wedge = wedge - wedge.transpose(0, 2, 1)
    om = F.coframe_full.val
    tor = np.einsum("kx,ly,klz,az->axy", om, om, torsion_table(conn), thv)
    return float(np.max(np.abs(dth + wedge - tor)))


def christoffels_for(M: AlmostHermitianManifold, p, conn_choice: str) -> np.ndarray:
    """Real Christoffel values at p for 'canonical', 'levi_civita' or 'chern'."""
    if conn_choice == "canonical":
        return real_christoffels(canonical_connection(M, coordinate_frame_10(M, p))).val
    if conn_choice == "levi_civita":
        return levi_civita(M, p).gamma_real.val
    if conn_choice == "chern":
        return real_christoffels(chern_connection_holo(M, p)).val
    raise ValueError(f"unknown connection {conn_choice!r}")


def covariant_hessian(M: AlmostHermitianManifold, conn_choice: str, f, p, X, Y) -> complex:
    """nabla^2 f(X, Y) = X(Y f) - (nabla_X Y) f for constant-coefficient X, Y."""
    p = np.asarray(p, dtype=float)
    if isinstance(f, str):
        f = parse(f, M.dim)
    jet = eval_jet2(f, p)
    G = christoffels_for(M, p, conn_choice)
    X, Y = _vec(X), _vec(Y)
    val = X @ jet.hess @ Y - np.einsum("a,b,abc,c->", X, Y, G, jet.grad)
    return complex(val) if np.iscomplexobj(val) else float(val)


def nabla_J(M: AlmostHermitianManifold, p, G: np.ndarray | None = None) -> np.ndarray:
    """(nabla_c J)^a_b as an array [c, a, b]; Levi-Civita unless G is given."""
    if G is None:
        G = levi_civita(M, p).gamma_real.val
    _, Jj = M.jets(p)
    J = Jj.val
    dJ = np.einsum("abc->cab", Jj.d1)
    return dJ + np.einsum("cda,db->cab", G, J) - np.einsum("ad,cbd->cab", J, G)


def nabla_omega(M: AlmostHermitianManifold, p, G: np.ndarray | None = None) -> np.ndarray:
    """(nabla_c Omega)_ab with Omega_ab = g(J d_a, d_b); Levi-Civita unless G is given."""
    if G is None:
        G = levi_civita(M, p).gamma_real.val
    gj, Jj = M.jets(p)
    Om = jeinsum("ca,cb->ab", Jj, gj)
    d = np.einsum("abc->cab", Om.d1)
    return d - np.einsum("cad,db->cab", G, Om.val) - np.einsum("cbd,ad->cab", G, Om.val)


def kahler_commutator_residual(M: AlmostHermitianManifold, W, p) -> float:
    """Frobenius norm of [J, nabla^{LC} W] at p for a real vector field W."""
    p = np.asarray(p, dtype=float)
    Wj = vector_field_jet(W, p)
    G = levi_civita(M, p).gamma_real.val
    N = Wj.d1 + np.einsum("bca,c->ab", G, Wj.val)  # N[a, b] = (nabla_b W)^a
    J = M.J_at(p)
    return float(np.linalg.norm(J @ N - N @ J))
