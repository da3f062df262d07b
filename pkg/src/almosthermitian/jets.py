"""Truncated Taylor data ("jets") of array-valued functions.

An :class:`ArrayJet` stores the value of a tensor-valued function at a point
together with its first and (optionally) second partial derivatives in chart
coordinates.  Derivative axes are always appended after the value axes::

    val.shape == S
    d1.shape  == S + (D,)
    d2.shape  == S + (D, D)

The order of a jet is the highest derivative it carries.  Products truncate
to the lowest order of their factors; :meth:`ArrayJet.deriv` trades one
order for an extra value axis.  All geometric quantities of the package are
assembled from these few operations, so every derivative is exact up to
floating point rounding.
"""

from __future__ import annotations

import numpy as np

_DERIV_LETTERS = ("Y", "Z")


class ArrayJet:
    __slots__ = ("val", "d1", "d2")

    def __init__(self, val, d1=None, d2=None):
        self.val = np.asarray(val)
        self.d1 = None if d1 is None else np.asarray(d1)
        self.d2 = None if d2 is None or d1 is None else np.asarray(d2)

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, val, dim: int, order: int = 2) -> "ArrayJet":
        val = np.asarray(val)
        d1 = np.zeros(val.shape + (dim,), dtype=val.dtype) if order >= 1 else None
        d2 = np.zeros(val.shape + (dim, dim), dtype=val.dtype) if order >= 2 else None
        return cls(val, d1, d2)

    @classmethod
    def variable(cls, x) -> "ArrayJet":
        """The identity map x -> x as a jet of shape (D,)."""
        x = np.asarray(x, dtype=float)
        dim = x.shape[0]
        return cls(x.copy(), np.eye(dim), np.zeros((dim, dim, dim)))

    @classmethod
    def stack(cls, jets, axis: int = 0) -> "ArrayJet":
        jets = list(jets)
        order = min(j.order for j in jets)
        val = np.stack([j.val for j in jets], axis=axis)
        d1 = np.stack([j.d1 for j in jets], axis=axis) if order >= 1 else None
        d2 = np.stack([j.d2 for j in jets], axis=axis) if order >= 2 else None
        return cls(val, d1, d2)

    @classmethod
    def concatenate(cls, jets, axis: int = 0) -> "ArrayJet":
        jets = list(jets)
        order = min(j.order for j in jets)
        val = np.concatenate([j.val for j in jets], axis=axis)
        d1 = np.concatenate([j.d1 for j in jets], axis=axis) if order >= 1 else None
        d2 = np.concatenate([j.d2 for j in jets], axis=axis) if order >= 2 else None
        return cls(val, d1, d2)

    # -- introspection ------------------------------------------------------
    @property
    def order(self) -> int:
        if self.d1 is None:
            return 0
        return 1 if self.d2 is None else 2

    @property
    def shape(self):
        return self.val.shape

    @property
    def dim(self) -> int:
        if self.d1 is None:
            raise ValueError("order-0 jet carries no chart dimension")
        return self.d1.shape[-1]

    def __repr__(self):
        return f"ArrayJet(shape={self.shape}, order={self.order})"

    def truncate(self, order: int) -> "ArrayJet":
        if order >= self.order:
            return self
        return ArrayJet(self.val, self.d1 if order >= 1 else None, None)

    # -- structural ops -----------------------------------------------------
    def __getitem__(self, idx) -> "ArrayJet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Ellipsis indexing is ambiguous for jets")
        return ArrayJet(
            self.val[idx],
            None if self.d1 is None else self.d1[idx],
            None if self.d2 is None else self.d2[idx],
        )

    def transpose(self, *axes) -> "ArrayJet":
        k = self.val.ndim
        if not axes:
            axes = tuple(reversed(range(k)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        d1 = None if self.d1 is None else self.d1.transpose(axes + (k,))
        d2 = None if self.d2 is None else self.d2.transpose(axes + (k, k + 1))
        return ArrayJet(self.val.transpose(axes), d1, d2)

    @property
    def T(self) -> "ArrayJet":
        return self.transpose()

    def conj(self) -> "ArrayJet":
        return ArrayJet(
            np.conj(self.val),
            None if self.d1 is None else np.conj(self.d1),
            None if self.d2 is None else np.conj(self.d2),
        )

    @property
    def real(self) -> "ArrayJet":
        return ArrayJet(
            np.real(self.val),
            None if self.d1 is None else np.real(self.d1),
            None if self.d2 is None else np.real(self.d2),
        )

    @property
    def imag(self) -> "ArrayJet":
        return ArrayJet(
            np.imag(self.val),
            None if self.d1 is None else np.imag(self.d1),
            None if self.d2 is None else np.imag(self.d2),
        )

    def deriv(self) -> "ArrayJet":
        """Jet of the gradient: value axes gain a trailing chart axis."""
        if self.d1 is None:
            raise ValueError("cannot differentiate an order-0 jet")
        return ArrayJet(self.d1, self.d2, None)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, ArrayJet):
            return other
        return ArrayJet(np.asarray(other))

    def __add__(self, other):
        if not isinstance(other, ArrayJet):
            return ArrayJet(self.val + other, self.d1, self.d2)
        order = min(self.order, other.order)
        return ArrayJet(
            self.val + other.val,
            self.d1 + other.d1 if order >= 1 else None,
            self.d2 + other.d2 if order >= 2 else None,
        )

    __radd__ = __add__

    def __neg__(self):
        return ArrayJet(
            -self.val,
            None if self.d1 is None else -self.d1,
            None if self.d2 is None else -self.d2,
        )

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Elementwise (broadcasting) product with the Leibniz rule."""
        if not isinstance(other, ArrayJet):
            c = np.asarray(other)
            ce = c[..., None] if c.ndim else c
            cee = c[..., None, None] if c.ndim else c
            return ArrayJet(
                self.val * c,
                None if self.d1 is None else self.d1 * ce,
                None if self.d2 is None else self.d2 * cee,
            )
        order = min(self.order, other.order)
        a, b = self.val, other.val
        val = a * b
        d1 = d2 = None
        if order >= 1:
            d1 = self.d1 * b[..., None] + a[..., None] * other.d1
        if order >= 2:
            g1, g2 = self.d1, other.d1
            d2 = (
                self.d2 * b[..., None, None]
                + a[..., None, None] * other.d2
                + g1[..., :, None] * g2[..., None, :]
                + g2[..., :, None] * g1[..., None, :]
            )
        return ArrayJet(val, d1, d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ArrayJet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def apply(self, f0, f1, f2) -> "ArrayJet":
        """Elementwise chain rule for a univariate function with derivatives f1, f2."""
        v = self.val
        val = f0(v)
        d1 = d2 = None
        if self.order >= 1:
            s1 = f1(v)
            d1 = self.d1 * s1[..., None]
            if self.order >= 2:
                s2 = f2(v)
                d2 = self.d2 * s1[..., None, None] + (
                    self.d1[..., :, None] * self.d1[..., None, :]
                ) * s2[..., None, None]
        return ArrayJet(val, d1, d2)

    def reciprocal(self) -> "ArrayJet":
        return self.apply(lambda v: 1.0 / v, lambda v: -1.0 / v**2, lambda v: 2.0 / v**3)

    def log(self) -> "ArrayJet":
        return self.apply(np.log, lambda v: 1.0 / v, lambda v: -1.0 / v**2)

    def inv(self) -> "ArrayJet":
        """Matrix inverse of a square (m, m) jet."""
        if self.val.ndim != 2:
            raise ValueError("inv expects a matrix-valued jet")
        V = np.linalg.inv(self.val)
        d1 = d2 = None
        if self.order >= 1:
            d1 = -np.einsum("ij,jkY,kl->ilY", V, self.d1, V)
        if self.order >= 2:
            A1V = np.einsum("jkY,kl->jlY", self.d1, V)
            VA1V = np.einsum("ij,jlY->ilY", V, A1V)
            d2 = -np.einsum("ij,jkYZ,kl->ilYZ", V, self.d2, V)
            cross = np.einsum("ilY,lmZ->imYZ", VA1V, A1V)
            d2 = d2 + cross + cross.transpose(0, 1, 3, 2)
        return ArrayJet(V, d1, d2)

    def compose(self, inner: "ArrayJet") -> "ArrayJet":
        """Jet of x -> self(inner(x)), where self is a jet at y = inner.val.

        ``inner`` has value shape (Dy,) and derivatives with respect to the
        new variables x.
        """
        order = min(self.order, inner.order)
        d1 = d2 = None
        if order >= 1:
            d1 = np.tensordot(self.d1, inner.d1, axes=([-1], [0]))
        if order >= 2:
            k = self.val.ndim
            t = np.tensordot(self.d2, inner.d1, axes=([-1], [0]))
            t = np.tensordot(t, inner.d1, axes=([k], [0]))
            d2 = t + np.tensordot(self.d1, inner.d2, axes=([-1], [0]))
        return ArrayJet(self.val, d1, d2)


def _is_jet(x) -> bool:
    return isinstance(x, ArrayJet)


def _pair(spec: str, a, b, out: str) -> ArrayJet:
    sa, sb = spec
    if not _is_jet(a) and not _is_jet(b):
        return ArrayJet(np.einsum(f"{sa},{sb}->{out}", a, b))
    Y, Z = _DERIV_LETTERS
    av = a.val if _is_jet(a) else a
    bv = b.val if _is_jet(b) else b
    oa = a.order if _is_jet(a) else 3
    ob = b.order if _is_jet(b) else 3
    order = min(oa, ob)
    val = np.einsum(f"{sa},{sb}->{out}", av, bv)
    d1 = d2 = None
    if order >= 1:
        d1 = 0
        if oa < 3:
            d1 = d1 + np.einsum(f"{sa}{Y},{sb}->{out}{Y}", a.d1, bv)
        if ob < 3:
            d1 = d1 + np.einsum(f"{sa},{sb}{Y}->{out}{Y}", av, b.d1)
    if order >= 2:
        d2 = 0
        if oa < 3:
            d2 = d2 + np.einsum(f"{sa}{Y}{Z},{sb}->{out}{Y}{Z}", a.d2, bv)
        if ob < 3:
            d2 = d2 + np.einsum(f"{sa},{sb}{Y}{Z}->{out}{Y}{Z}", av, b.d2)
        if oa < 3 and ob < 3:
            cross = np.einsum(f"{sa}{Y},{sb}{Z}->{out}{Y}{Z}", a.d1, b.d1)
            d2 = d2 + cross + np.swapaxes(cross, -1, -2)
    return ArrayJet(val, d1, d2)


def jeinsum(spec: str, *operands) -> ArrayJet:
    """``np.einsum`` over jets and plain arrays, with the product rule.

    Only explicit-output specs are supported (``"ab,bc->ac"``); the letters
    ``Y`` and ``Z`` are reserved for derivative axes.
    """
    if "->" not in spec:
        raise ValueError("jeinsum needs an explicit output ('->')")
    lhs, out = spec.replace(" ", "").split("->")
    subs = lhs.split(",")
    if len(subs) != len(operands):
        raise ValueError("number of subscripts does not match operands")
    if any(ch in spec for ch in _DERIV_LETTERS):
        raise ValueError("letters Y and Z are reserved")
    if len(operands) == 1:
        (a,) = operands
        if _is_jet(a):
            return _pair((subs[0], ""), a, np.ones(()), out)
        return ArrayJet(np.einsum(f"{subs[0]}->{out}", a))
    cur, cur_sub = operands[0], subs[0]
    for k in range(1, len(operands)):
        later = "".join(subs[k + 1:]) + out
        nxt_sub = subs[k]
        keep = []
        for ch in cur_sub + nxt_sub:
            if ch in later and ch not in keep:
                keep.append(ch)
        inter = out if k == len(operands) - 1 else "".join(keep)
        cur = _pair((cur_sub, nxt_sub), cur, operands[k], inter)
        cur_sub = inter
    if not _is_jet(cur):
        cur = ArrayJet(cur)
    return cur


def directional(vec: ArrayJet, f: ArrayJet, vec_spec: str = "ka", f_spec: str = "") -> ArrayJet:
    """Derivatives of ``f`` along a family of vector fields.

    ``vec`` has shape (k, D) (one vector field per leading index) and the
    result has shape (k,) + f.shape, i.e. ``out[k, ...] = vec[k, a] d_a f[...]``.
    """
    fs = f_spec or "".join(chr(ord("m") + i) for i in range(f.val.ndim))
    lead = vec_spec[:-1]
    a = vec_spec[-1]
    return jeinsum(f"{vec_spec},{fs}{a}->{lead}{fs}", vec, f.deriv())


def bracket(U: ArrayJet, V: ArrayJet) -> ArrayJet:
    """Lie brackets [U_k, V_l] of two families of coordinate vector fields.

    ``U`` has shape (k, D), ``V`` shape (l, D); the result has shape (k, l, D).
    """
    uv = jeinsum("kb,lab->kla", U, V.deriv())
    vu = jeinsum("lb,kab->kla", V, U.deriv())
    return uv - vu
