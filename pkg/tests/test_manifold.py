import numpy as np
import pytest
from conftest import ATLAS_MANIFOLDS, get, witness

from almosthermitian.atlas import builtin
from almosthermitian.manifold import (
    J0,
    AlmostHermitianManifold,
    TangentVector,
    fundamental_form,
    nijenhuis,
    projection_10,
    projectors,
    validate_structure,
)
from almosthermitian.sampling import sample_points


def pts(name, count=100, seed=42):
    M = get(name)
    return sample_points(M.domain, M.dim, count, seed)


def test_flat_structure_exact():
    r = validate_structure(get("flat_cn(1)"), [[0.1, 0.2]])
    assert r.passed
    assert r.max_residuals["J_squared"] == 0.0
    assert r.max_residuals["compatibility"] == 0.0


def test_twisted_torus_structure():
    r = validate_structure(get("twisted_torus"), pts("twisted_torus", 50))
    assert r.passed
    mx = r.max_residuals
    assert max(mx["J_squared"], mx["g_symmetry"], mx["compatibility"]) <= 1e-12


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_atlas_entries_validate(name):
    assert validate_structure(get(name), pts(name), 1e-9).passed


def test_identity_J_fails():
    M = AlmostHermitianManifold.from_strings("bad", 1, [["1", "0"], ["0", "1"]], [["1", "0"], ["0", "1"]])
    r = validate_structure(M, [[0.0, 0.0], [0.3, 0.1]])
    assert not r.passed
    assert r.max_residuals["J_squared"] == pytest.approx(2.0)


def test_invalid_point_is_reported():
    r = validate_structure(get("poincare_disk"), [[0.1, 0.0], [1.0, 0.0]])
    assert r.invalid and r.invalid[0][0] == 1
    assert not r.passed


def test_projection_10_flat():
    M = get("flat_cn(1)")
    v = projection_10(M, TangentVector(np.zeros(2), np.array([1.0, 0.0])))
    np.testing.assert_allclose(v.components, [0.5, -0.5j])
    w = projection_10(M, TangentVector(np.zeros(2), np.array([0.0, 1.0])))
    np.testing.assert_allclose(w.components, 1j * v.components)


def test_projection_10_twisted_torus(rng):
    M = get("twisted_torus")
    for p in pts("twisted_torus", 10):
        v = projection_10(M, TangentVector(p, rng.normal(size=4)))
        _, P01 = projectors(M.J_at(p))
        assert np.max(np.abs(P01 @ v.components)) <= 1e-14


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_projector_algebra(name):
    M = get(name)
    for p in pts(name, 20):
        P10, P01 = projectors(M.J_at(p))
        assert np.max(np.abs(P10 + P01 - np.eye(M.dim))) <= 1e-13
        assert np.max(np.abs(P10 @ P01)) <= 1e-13


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_nijenhuis_identities(name, rng):
    M = get(name)
    P = pts(name, 100)
    worst_anti = worst_J = 0.0
    for p in P:
        X, Y = rng.normal(size=(2, M.dim))
        J = M.J_at(p)
        worst_anti = max(worst_anti, np.linalg.norm(nijenhuis(M, p, X, Y) + nijenhuis(M, p, Y, X)))
        worst_J = max(worst_J, np.linalg.norm(nijenhuis(M, p, X, J @ Y) - nijenhuis(M, p, J @ X, Y)))
    assert worst_anti <= 1e-10
    assert worst_J <= 1e-8


@pytest.mark.parametrize("name", [n for n in ATLAS_MANIFOLDS if builtin(n).manifest.get("integrable_hint")])
def test_integrable_entries_have_vanishing_nijenhuis(name, rng):
    M = get(name)
    worst = max(np.linalg.norm(nijenhuis(M, p, *rng.normal(size=(2, M.dim)))) for p in pts(name, 100))
    assert worst <= 1e-8


def test_nijenhuis_nonzero_on_non_integrable():
    M = get("twisted_torus")
    assert np.linalg.norm(nijenhuis(M, witness("twisted_torus"), np.eye(4)[0], np.eye(4)[1])) > 0.01
    S = get("s6_nearly_kahler")
    p = witness("s6_nearly_kahler")
    N = max(np.linalg.norm(nijenhuis(S, p, e, f)) for e in np.eye(6) for f in np.eye(6))
    assert N > 0.1


def test_fundamental_form_flat():
    Om, dOm = fundamental_form(get("flat_cn(1)"), [0.2, 0.1])
    np.testing.assert_allclose(Om, [[0, 1], [-1, 0]])
    assert np.max(np.abs(dOm)) == 0.0


def test_fundamental_form_disk_closed():
    _, dOm = fundamental_form(get("poincare_disk"), [0.3, -0.2])
    assert np.max(np.abs(dOm)) <= 1e-12


def test_fundamental_form_s6_not_closed():
    Om, dOm = fundamental_form(get("s6_nearly_kahler"), witness("s6_nearly_kahler"))
    assert np.max(np.abs(Om + Om.T)) <= 1e-12
    assert np.max(np.abs(dOm)) > 0.1


def test_manifest_round_trip():
    M = get("twisted_torus")
    M2 = AlmostHermitianManifold.from_manifest(M.to_manifest())
    p = witness("twisted_torus")
    np.testing.assert_array_equal(M.J_at(p), M2.J_at(p))
    np.testing.assert_array_equal(M.g_at(p), M2.g_at(p))


def test_J0_convention():
    J = J0(2)
    np.testing.assert_array_equal(J @ J, -np.eye(4))
    assert J[1, 0] == 1.0  # J d1 = d2


def test_manifest_rejects_bad_shapes():
    with pytest.raises((ValueError, KeyError)):
        AlmostHermitianManifold.from_manifest({"name": "x", "complex_dim": 1, "g": [["1"]], "J": [["0", "-1"], ["1", "0"]]})
