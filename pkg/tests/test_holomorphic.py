import numpy as np
import pytest
from conftest import ATLAS_MANIFOLDS, field, get, witness

from almosthermitian.connection import covariant_hessian
from almosthermitian.frames import build_frame, coordinate_frame_10
from almosthermitian.holomorphic import (
    VectorTypeError,
    dbar_components_residual,
    dbar_f,
    ddbar_f,
    ddbar_matrix,
    del_f,
    lie_derivative_J,
    pseudo_holomorphic_residual,
)
from almosthermitian.manifold import nijenhuis
from almosthermitian.sampling import sample_points

DZ = np.array([0.5, -0.5j])
DZB = np.conj(DZ)


def pts(name, count, seed=5):
    M = get(name)
    return sample_points(M.domain, M.dim, count, seed)


def random_poly(rng, D, terms=4):
    out = []
    for _ in range(terms):
        idx = rng.integers(1, D + 1, size=rng.integers(1, 4))
        out.append(f"({rng.uniform(-2, 2):.4f})*" + "*".join(f"x{i}" for i in idx))
    return " + ".join(out)


# -- del / dbar ---------------------------------------------------------------
def test_del_examples():
    M = get("flat_cn(1)")
    assert del_f(M, "x1", [0.0, 0.0], [1.0, 0.0]) == pytest.approx(0.5)
    # del x1 = dz/2 and dz(d2) = i under J d1 = d2
    assert del_f(M, "x1", [0.0, 0.0], [0.0, 1.0]) == pytest.approx(0.5j)
    assert dbar_f(M, "x1", [0.0, 0.0], [0.0, 1.0]) == pytest.approx(-0.5j)


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_del_dbar_identities(name, rng):
    M = get(name)
    for p in pts(name, 20):
        f = random_poly(rng, M.dim)
        X = rng.normal(size=M.dim)
        d, db = del_f(M, f, p, X), dbar_f(M, f, p, X)
        assert abs(db - np.conj(d)) <= 1e-12 * max(1, abs(d))
        from almosthermitian.calc import eval_jet2, parse

        df = eval_jet2(parse(f, M.dim), p).grad @ X
        assert abs(d + db - df) <= 1e-12 * max(1, abs(df))
        J = M.J_at(p)
        v10 = 0.5 * (X - 1j * J @ X)
        assert abs(dbar_f(M, f, p, v10)) <= 1e-12 * max(1, abs(df))
        assert abs(del_f(M, f, p, np.conj(v10))) <= 1e-12 * max(1, abs(df))


# -- ddbar --------------------------------------------------------------------
def test_ddbar_flat_modulus_squared():
    assert ddbar_f(get("flat_cn(1)"), "x1^2 + x2^2", [0.3, -0.1], DZ, DZB) == pytest.approx(1.0, abs=1e-14)


def test_ddbar_linear_vanishes():
    M = get("flat_cn(2)")
    cf = coordinate_frame_10(M, [0.1, 0.2, 0.3, 0.4]).coeffs.val
    for a in cf:
        for b in cf:
            assert ddbar_f(M, "3*x1 - 2*x4 + 1", [0.1, 0.2, 0.3, 0.4], a, np.conj(b)) == 0


def test_ddbar_type_errors():
    M = get("flat_cn(1)")
    with pytest.raises(VectorTypeError):
        ddbar_f(M, "x1^2", [0, 0], DZB, DZB)
    with pytest.raises(VectorTypeError):
        ddbar_f(M, "x1^2", [0, 0], DZ, DZ)


def test_ddbar_twisted_torus_vs_hessian():
    M = get("twisted_torus")
    p = witness("twisted_torus")
    c = coordinate_frame_10(M, p).coeffs.val
    for a in c:
        for b in c:
            lhs = ddbar_f(M, "x1*x2", p, a, np.conj(b))
            rhs = covariant_hessian(M, "canonical", "x1*x2", p, a, np.conj(b))
            assert abs(lhs - rhs) <= 1e-7


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
@pytest.mark.parametrize("kind", ["coordinate", "quasi"])
def test_ddbar_equals_canonical_hessian(name, kind, rng):
    M = get(name)
    for p in pts(name, 3):
        F = build_frame(M, p, kind)
        for _ in range(3):
            f = random_poly(rng, M.dim)
            dd = ddbar_matrix(M, f, F).matrix
            cv = F.coeffs.val
            hs = np.array([[covariant_hessian(M, "canonical", f, p, a, np.conj(b)) for b in cv] for a in cv])
            assert np.max(np.abs(dd - hs)) <= 1e-7
            assert ddbar_matrix(M, f, F).hermitian_defect() <= 1e-9


# -- vector field predicates ------------------------------------------------------
def test_lie_derivative_examples():
    M = get("flat_cn(1)")
    p = np.array([0.4, -0.7])
    assert np.max(np.abs(lie_derivative_J(M, ["x1^2 - x2^2", "2*x1*x2"], p))) <= 1e-12
    for q in pts("flat_cn(1)", 5):
        assert np.linalg.norm(lie_derivative_J(M, ["x1", "-x2"], q)) >= 1
    for name in ("flat_cn(2)", "poincare_disk"):
        N = get(name)
        assert np.max(np.abs(lie_derivative_J(N, ["1"] + ["0.5"] * (N.dim - 1), witness(name)))) == 0.0


def test_pseudo_residual_examples():
    M = get("flat_cn(1)")
    assert pseudo_holomorphic_residual(M, ["x1^2 - x2^2", "2*x1*x2"], [0.4, -0.7]) <= 1e-12
    assert pseudo_holomorphic_residual(M, ["x1", "-x2"], [1.0, 0.0]) >= 0.5


def test_holeq_flat(rng):
    M = get("flat_cn(1)")
    P = pts("flat_cn(1)", 4)
    for trial in range(10):
        coeffs = [complex(*rng.normal(size=2)) for _ in range(4)]
        W = field(coeffs)
        for p in P:
            assert np.max(np.abs(lie_derivative_J(M, W, p))) <= 1e-9
            assert dbar_components_residual(M, W, p) <= 1e-9
            assert pseudo_holomorphic_residual(M, W, p) <= 1e-9
    for trial in range(10):
        coeffs = [complex(*rng.normal(size=2)) for _ in range(3)]
        anti = [0, complex(*rng.normal(size=2))]  # a zbar term: dbar coefficient |a|
        if abs(anti[1]) < 0.1:
            anti[1] = 0.5
        W = field(coeffs, anti)
        for p in P:
            assert np.linalg.norm(lie_derivative_J(M, W, p)) >= 1e-2
            assert dbar_components_residual(M, W, p) >= 1e-2
            assert pseudo_holomorphic_residual(M, W, p) >= 1e-2


def test_dbar_components_requires_flag():
    with pytest.raises(ValueError):
        dbar_components_residual(get("twisted_torus"), ["0"] * 4, witness("twisted_torus"))


@pytest.mark.parametrize("name", ["flat_cn(1)", "poincare_disk"])
def test_pseudo3_bridge_integrable(name, rng):
    M = get(name)
    for p in pts(name, 5):
        assert np.max(np.abs(nijenhuis(M, p, *rng.normal(size=(2, 2))))) <= 1e-7
        hol = field([complex(*rng.normal(size=2)) for _ in range(3)])
        assert np.max(np.abs(lie_derivative_J(M, hol, p))) <= 1e-7
        assert pseudo_holomorphic_residual(M, hol, p) <= 1e-7
        bad = field([0.2], [0, 1.0])
        L = np.linalg.norm(lie_derivative_J(M, bad, p))
        assert L >= 0.1
        assert pseudo_holomorphic_residual(M, bad, p) >= 0.05 * L


def test_pseudo3_bridge_twisted_torus_reported():
    # not integrable: the bridge is evaluated and reported, not asserted
    M = get("twisted_torus")
    p = witness("twisted_torus")
    fields = [["1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "x4", "-x3"], ["x2", "0", "0", "0"]]
    rows = [(np.linalg.norm(lie_derivative_J(M, W, p)), pseudo_holomorphic_residual(M, W, p)) for W in fields]
    assert all(np.isfinite(r).all() for r in rows)
    print("twisted_torus bridge (|L_X J|, residual):", rows)
