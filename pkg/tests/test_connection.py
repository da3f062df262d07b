import numpy as np
import pytest
from conftest import ATLAS_MANIFOLDS, KAHLER, get, witness

from almosthermitian.connection import (
    canonical_axiom_residuals,
    canonical_connection,
    chern_connection_holo,
    christoffels_for,
    covariant_hessian,
    frame_christoffels_from_real,
    kahler_commutator_residual,
    levi_civita,
    nabla_J,
    nabla_omega,
    real_christoffels,
    real_torsion,
    structure_equation_residual,
    torsion_of,
)
from almosthermitian.frames import build_frame, coordinate_frame_10
from almosthermitian.manifold import fundamental_form, nijenhuis
from almosthermitian.sampling import sample_points


def pts(name, count, seed=11):
    M = get(name)
    return sample_points(M.domain, M.dim, count, seed)


def conformal_christoffels(x, dsigma):
    """Gamma^c_{ab} = d^c_a s_b + d^c_b s_a - d_ab s_c for g = exp(2 sigma) I."""
    D = len(x)
    I = np.eye(D)
    s = dsigma(x)
    return np.einsum("ca,b->abc", I, s) + np.einsum("cb,a->abc", I, s) - np.einsum("ab,c->abc", I, s)


def test_levi_civita_flat():
    assert np.max(np.abs(levi_civita(get("flat_cn(2)"), [0.1, 0.2, 0.3, 0.4]).gamma_real.val)) == 0.0


def test_levi_civita_disk_conformal_oracle():
    x = np.array([0.5, 0.0])
    G = levi_civita(get("poincare_disk"), x).gamma_real.val
    ref = conformal_christoffels(x, lambda y: 2 * y / (1 - y @ y))
    np.testing.assert_allclose(G, ref, atol=1e-9)


def test_levi_civita_sphere_origin():
    assert np.max(np.abs(levi_civita(get("round_sphere_chart"), [0.0, 0.0]).gamma_real.val)) <= 1e-15


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_levi_civita_metric_compatible_and_symmetric(name):
    M = get(name)
    p = witness(name)
    G = levi_civita(M, p).gamma_real.val
    assert np.max(np.abs(real_torsion(G))) == 0.0
    gj, _ = M.jets(p)
    dg = np.einsum("abc->cab", gj.d1)
    res = dg - np.einsum("cad,db->cab", G, gj.val) - np.einsum("cbd,ad->cab", G, gj.val)
    assert np.max(np.abs(res)) <= 1e-10


def test_canonical_flat_vanishes():
    M = get("flat_cn(2)")
    conn = canonical_connection(M, coordinate_frame_10(M, [0.1, 0.2, 0.3, 0.4]))
    assert conn.max_symbol == 0.0 and conn.torsion_11_norm == 0.0
    assert np.max(np.abs(conn.torsion_20)) == 0.0


def test_disk_chern_closed_form():
    M = get("poincare_disk")
    p = np.array([0.5, 0.0])
    ch = chern_connection_holo(M, p)
    z = 0.5
    # Gamma^1_11 = d_z log lam = 2 zbar / (1 - |z|^2)
    assert ch.gamma_pure.val[0, 0, 0] == pytest.approx(2 * z / (1 - z * z), abs=1e-12)
    can = canonical_connection(M, coordinate_frame_10(M, p))
    assert abs(can.gamma_pure.val[0, 0, 0] - ch.gamma_pure.val[0, 0, 0]) <= 1e-9


def test_sphere_chern_origin():
    assert chern_connection_holo(get("round_sphere_chart"), [0.0, 0.0]).max_symbol <= 1e-15


def test_chern_requires_holomorphic_chart():
    with pytest.raises(ValueError):
        chern_connection_holo(get("twisted_torus"), witness("twisted_torus"))


def test_s6_torsion_split():
    M = get("s6_nearly_kahler")
    conn = canonical_connection(M, coordinate_frame_10(M, witness("s6_nearly_kahler")))
    assert conn.torsion_11_norm <= 1e-8
    assert np.linalg.norm(conn.torsion_20) >= 0.1


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_canonical_axioms(name):
    M = get(name)
    for p in pts(name, 10):
        for kind in ("coordinate", "normal_quasi"):
            F = coordinate_frame_10(M, p) if kind == "coordinate" else build_frame(M, p, kind)
            r = canonical_axiom_residuals(M, canonical_connection(M, F))
            assert max(r.values()) <= 1e-7


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_real_christoffels_frame_independent(name):
    M = get(name)
    p = witness(name)
    a = real_christoffels(canonical_connection(M, coordinate_frame_10(M, p))).val
    b = real_christoffels(canonical_connection(M, build_frame(M, p, "quasi"))).val
    assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_real_frame_round_trip(name):
    M = get(name)
    F = build_frame(M, witness(name), "quasi")
    conn = canonical_connection(M, F)
    Gp, Gm = frame_christoffels_from_real(F, real_christoffels(conn).val)
    assert np.max(np.abs(Gp - conn.gamma_pure.val)) <= 1e-12
    assert np.max(np.abs(Gm - conn.gamma_mixed.val)) <= 1e-12


@pytest.mark.parametrize("name", KAHLER)
def test_kahler_coincidences(name):
    M = get(name)
    for p in pts(name, 10):
        can = christoffels_for(M, p, "canonical")
        assert np.max(np.abs(can - christoffels_for(M, p, "levi_civita"))) <= 1e-7
        assert np.max(np.abs(can - christoffels_for(M, p, "chern"))) <= 1e-7
        conn = canonical_connection(M, coordinate_frame_10(M, p))
        e = np.eye(M.dim)
        assert max(np.linalg.norm(torsion_of(conn, a, b)) for a in e for b in e) <= 1e-8


def test_s6_canonical_differs_from_levi_civita():
    M = get("s6_nearly_kahler")
    for p in pts("s6_nearly_kahler", 5):
        gap = np.max(np.abs(christoffels_for(M, p, "canonical") - christoffels_for(M, p, "levi_civita")))
        assert gap >= 0.05


def test_s6_nablaJ_split():
    M = get("s6_nearly_kahler")
    p = witness("s6_nearly_kahler")
    assert np.max(np.abs(nabla_J(M, p, christoffels_for(M, p, "canonical")))) <= 1e-6
    assert np.max(np.abs(nabla_J(M, p))) >= 0.05


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_fundamental_form_equivalences(name):
    M = get(name)
    tol = 1e-7
    integrable = M.integrable_hint
    for p in pts(name, 5):
        om_small = np.max(np.abs(nabla_omega(M, p))) <= tol
        j_small = np.max(np.abs(nabla_J(M, p))) <= tol
        assert om_small == j_small
        if integrable:
            _, dOm = fundamental_form(M, p)
            assert (np.max(np.abs(dOm)) <= tol) == om_small
        if name in KAHLER:
            assert np.max(np.abs(fundamental_form(M, p)[1])) <= 1e-8


def test_nijenhuis_torsion_identity(rng):
    M = get("twisted_torus")
    for p in pts("twisted_torus", 20):
        conn = canonical_connection(M, coordinate_frame_10(M, p))
        J = M.J_at(p)
        X, Y = rng.normal(size=(2, 4))
        T = torsion_of(conn, X, Y) + J @ torsion_of(conn, X, J @ Y)
        assert np.max(np.abs(nijenhuis(M, p, X, Y) / 2 - T)) <= 1e-7


def test_structure_equation():
    M = get("flat_cn(1)")
    F = coordinate_frame_10(M, [0.1, 0.1])
    assert structure_equation_residual(M, F, canonical_connection(M, F)) == 0.0
    D = get("poincare_disk")
    F = coordinate_frame_10(D, [0.3, 0.0])
    assert structure_equation_residual(D, F, canonical_connection(D, F)) <= 1e-7
    S = get("s6_nearly_kahler")
    F = build_frame(S, witness("s6_nearly_kahler"), "quasi")
    assert structure_equation_residual(S, F, canonical_connection(S, F)) <= 1e-6


def test_covariant_hessian_flat():
    M = get("flat_cn(2)")
    e = np.eye(4)
    H = np.array([[covariant_hessian(M, "canonical", "x1^2", np.zeros(4), a, b) for b in e] for a in e])
    np.testing.assert_allclose(H, np.diag([2.0, 0, 0, 0]))


def test_covariant_hessian_psd_at_minimum(rng):
    M = get("flat_cn(1)")
    for _ in range(5):
        X = rng.normal(size=2)
        assert covariant_hessian(M, "levi_civita", "x1^2 + x2^2", np.zeros(2), X, X) >= 0


def test_covariant_hessian_antisymmetry(rng):
    M = get("twisted_torus")
    f = "sin(x1)*x2 + x3^2*x4 + x1*x4"
    for p in pts("twisted_torus", 20, seed=5):
        X, Y = rng.normal(size=(2, 4))
        G = christoffels_for(M, p, "canonical")
        from almosthermitian.calc import eval_jet2, parse

        df = eval_jet2(parse(f, 4), p).grad
        Tf = np.einsum("a,b,abc,c->", X, Y, real_torsion(G), df)
        lhs = covariant_hessian(M, "canonical", f, p, X, Y) - covariant_hessian(M, "canonical", f, p, Y, X)
        assert abs(lhs + Tf) <= 1e-8


def test_hol2_disk():
    M = get("poincare_disk")
    p = np.array([0.5, 0.0])
    from almosthermitian.holomorphic import lie_derivative_J

    hol = ["x1", "x2"]  # z d/dz
    anti = ["x1", "-x2"]  # zbar d/dz
    assert np.max(np.abs(lie_derivative_J(M, hol, p))) <= 1e-8
    assert kahler_commutator_residual(M, hol, p) <= 1e-8
    assert np.linalg.norm(lie_derivative_J(M, anti, p)) >= 0.1
    assert kahler_commutator_residual(M, anti, p) >= 0.1
