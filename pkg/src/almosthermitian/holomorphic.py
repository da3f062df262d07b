"""The operators d', d'' (written del, dbar) and ddbar on functions, and
holomorphicity predicates for vector fields.

For a function f on an almost complex manifold,

    del f  = (df - i df.J) / 2,      dbar f = (df + i df.J) / 2,

and ddbar f is evaluated as (d dbar f + d dbar f(J., J.)) / 2, which only
needs the 2-jet of f and the 1-jet of J.  Complex-valued f is handled by
complex linearity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calc import eval_jet2, parse
from .jets import ArrayJet, bracket, jeinsum
from .manifold import AlmostHermitianManifold, ComplexTangentVector, TangentVector, vector_field_jet

__all__ = [
    "Form11Value",
    "VectorTypeError",
    "scalar_jet",
    "del_f",
    "dbar_f",
    "ddbar_f",
    "ddbar_jet",
    "ddbar_matrix",
    "lie_derivative_J",
    "pseudo_holomorphic_residual",
    "projected_field_jet",
    "dbar_components_residual",
]


class VectorTypeError(ValueError):
    """A vector argument does not have the required (1,0) or (0,1) type."""


@dataclass(frozen=True)
class Form11Value:
    """ddbar f(e_a, conj e_b) in a frame at a point."""

    matrix: np.ndarray

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def scalar_jet(f, x) -> ArrayJet:
    """2-jet of a scalar given as an expression, a string or an ArrayJet."""
    if isinstance(f, ArrayJet):
        return f
    x = np.asarray(x, dtype=float)
    if isinstance(f, str):
        f = parse(f, len(x))
    j = eval_jet2(f, x)
    return ArrayJet(np.asarray(j.value), j.grad, j.hess)


def _components(X) -> np.ndarray:
    if isinstance(X, (TangentVector, ComplexTangentVector)):
        return np.asarray(X.components)
    return np.asarray(X)


def del_f(M: AlmostHermitianManifold, f, p, X) -> complex:
    """(df(X) - i df(JX)) / 2."""
    p = np.asarray(p, dtype=float)
    df = scalar_jet(f, p).d1
    v = _components(X)
    return complex(0.5 * (df @ v - 1j * (df @ (M.J_at(p) @ v))))


def dbar_f(M: AlmostHermitianManifold, f, p, X) -> complex:
    """(df(X) + i df(JX)) / 2."""
    p = np.asarray(p, dtype=float)
    df = scalar_jet(f, p).d1
    v = _components(X)
    return complex(0.5 * (df @ v + 1j * (df @ (M.J_at(p) @ v))))


def _check_type(J: np.ndarray, v: np.ndarray, sign: int, label: str, tol: float = 1e-10):
    # sign=+1: (1,0) means (I + iJ) v = 0; sign=-1: (0,1) means (I - iJ) v = 0
    defect = np.linalg.norm(v + sign * 1j * (J @ v))
    if defect > tol * max(1.0, np.linalg.norm(v)):
        raise VectorTypeError(f"{label} is not of the required type (defect {defect:.3g})")


def _d_dbar(Jj: ArrayJet, fj: ArrayJet) -> np.ndarray:
    """Components (d dbar f)_{ab} = d_a w_b - d_b w_a of the 2-form d(dbar f)."""
    df = fj.deriv()  # (D,), order 1
    w = (df + jeinsum("a,ab->b", df, Jj) * 1j) * 0.5
    dw = w.d1  # [b, a] = d_a w_b
    return dw.T - dw


def ddbar_jet(Jj: ArrayJet, fj: ArrayJet, A, Bbar):
    """ddbar f(A, Bbar) from jets of J and f (no type check).

    ``fj`` may be array-valued; the result then has the value shape of ``fj``.
    """
    A, Bbar = np.asarray(A), np.asarray(Bbar)
    shape = fj.shape
    D = Jj.shape[0]
    flat = ArrayJet(fj.val.reshape(-1), fj.d1.reshape(-1, D), fj.d2.reshape(-1, D, D))
    df = flat.deriv()  # (k, D), order 1
    w = (df + jeinsum("ka,ab->kb", df, Jj) * 1j) * 0.5
    dw = w.d1  # [k, b, a] = d_a w_b
    om = dw.transpose(0, 2, 1) - dw
    J = Jj.val
    v = 0.5 * (np.einsum("a,kab,b->k", A, om, Bbar) + np.einsum("a,kab,b->k", J @ A, om, J @ Bbar))
    return complex(v[0]) if shape == () else v.reshape(shape)


def ddbar_f(M: AlmostHermitianManifold, f, p, A, Bbar, check_types: bool = True) -> complex:
    """ddbar f(A, Bbar) for a (1,0)-vector A and a (0,1)-vector Bbar at p."""
    p = np.asarray(p, dtype=float)
    _, Jj = M.jets(p)
    A, Bbar = _components(A), _components(Bbar)
    if check_types:
        _check_type(Jj.val, A, +1, "first argument")
        _check_type(Jj.val, Bbar, -1, "second argument")
    return ddbar_jet(Jj, scalar_jet(f, p), A, Bbar)


def ddbar_matrix(M: AlmostHermitianManifold, f, frame) -> Form11Value:
    """ddbar f(e_a, conj e_b) for all pairs of a frame at its center."""
    p = frame.center
    _, Jj = M.jets(p)
    om = _d_dbar(Jj, scalar_jet(f, p))
    c = frame.coeffs.val
    J = Jj.val
    cJ = c @ J.T
    mat = 0.5 * (c @ om @ np.conj(c).T + cJ @ om @ np.conj(cJ).T)
    return Form11Value(mat)


def lie_derivative_J(M: AlmostHermitianManifold, W, p) -> np.ndarray:
    """(L_W J)^a_b for a real vector field W given by D expressions."""
    p = np.asarray(p, dtype=float)
    Wj = vector_field_jet(W, p) if not isinstance(W, ArrayJet) else W
    _, Jj = M.jets(p)
    J, dJ = Jj.val, Jj.d1  # dJ[a, b, c] = d_c J^a_b
    dW = Wj.d1  # [a, c] = d_c W^a
    return np.einsum("c,abc->ab", Wj.val, dJ) - dW @ J + J @ dW


def projected_field_jet(M: AlmostHermitianManifold, X, p, factor: float = 1.0) -> ArrayJet:
    """Jets of the complex field factor * (X - iJX) for a real field X."""
    p = np.asarray(p, dtype=float)
    Xj = vector_field_jet(X, p) if not isinstance(X, ArrayJet) else X
    _, Jj = M.jets(p)
    JX = jeinsum("ab,b->a", Jj, Xj)
    return (Xj - JX * 1j) * factor


def pseudo_holomorphic_residual(M: AlmostHermitianManifold, W, p) -> float:
    """max_a |[Xbar_a, W]^{1,0}(p)| over the (0,1)-fields Xbar_a = P01 d_a.

    ``W`` is a complex vector field given by its jet (order >= 1) at p, or
    a real field X given by expressions, in which case W = X - iJX.
    """
    p = np.asarray(p, dtype=float)
    if not isinstance(W, ArrayJet):
        W = projected_field_jet(M, W, p)
    _, Jj = M.jets(p)
    D = M.dim
    P01 = (ArrayJet.constant(np.eye(D), D) + Jj * 1j) * 0.5
    Xbar = P01.T  # row a is the field P01 d_a
    br = bracket(Xbar.truncate(1), ArrayJet(W.val[None], W.d1[None])).val[:, 0]  # (D, D)
    P10 = 0.5 * (np.eye(D) - 1j * Jj.val)
    return float(np.max(np.linalg.norm(br @ P10.T, axis=-1)))


def dbar_components_residual(M: AlmostHermitianManifold, X, p) -> float:
    """max |dbar w^a| over (0,1) directions for w^a = X^{2a-1} + i X^{2a}.

    Only meaningful in a holomorphic chart, where w^a are the components of
    (X - iJX)/2 in the frame d/dz^a.
    """
    if not M.holomorphic_chart:
        raise ValueError(f"manifold {M.name!r} is not flagged with a holomorphic chart")
    p = np.asarray(p, dtype=float)
    Xj = vector_field_jet(X, p) if not isinstance(X, ArrayJet) else X
    dw = Xj.d1[0::2] + 1j * Xj.d1[1::2]  # [a, x] = d_x w^a
    P01 = 0.5 * (np.eye(M.dim) + 1j * M.J_at(p))
    return float(np.max(np.abs(dw @ P01)))
