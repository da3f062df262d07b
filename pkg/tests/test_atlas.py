import numpy as np
import pytest
from conftest import ATLAS_MANIFOLDS, get, witness

from almosthermitian.atlas import FANO_TRIPLES, MAP_NAMES, builtin, cross_product_constants
from almosthermitian.calc import eval_jet2, parse
from almosthermitian.connection import canonical_connection, nabla_J, real_christoffels
from almosthermitian.curvature import curvature_at, hsc_range
from almosthermitian.frames import coordinate_frame_10
from almosthermitian.manifold import AlmostHermitianManifold, nijenhuis, validate_structure
from almosthermitian.sampling import SampleSpec, sample_points


def conformal_K(lam, x):
    """K = -(2 lam)^-1 Laplacian(log lam), with derivatives from jets."""
    e = parse(f"log({lam})", 2)
    j = eval_jet2(e, x)
    val = eval_jet2(parse(lam, 2), x).value
    return -np.trace(j.hess) / (2 * val)


def test_unknown_names():
    for bad in ("flat_cn(0)", "klein_bottle", "map:nope"):
        with pytest.raises(KeyError):
            builtin(bad)


def test_flat_cn2_entry():
    e = builtin("flat_cn(2)")
    assert e.kind == "manifold" and e.manifest["complex_dim"] == 2
    assert e.holomorphic_chart_flag


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_entries_validate_at_100_points(name):
    e = builtin(name)
    M = e.build()
    assert validate_structure(M, sample_points(e.chart_domain, M.dim, 100, 42), 1e-9).passed
    assert e.oracle_notes
    assert e.chart_domain.contains(np.asarray(e.witness))


@pytest.mark.parametrize("name", MAP_NAMES)
def test_map_entries_build(name):
    e = builtin(f"map:{name}")
    assert e.kind == "map"
    f = e.build()
    assert len(f.components) == f.target.dim
    assert builtin(name).name == e.name


@pytest.mark.parametrize("name,sign", [("poincare_disk", -1), ("round_sphere_chart", 1)])
def test_conformal_oracle(name, sign):
    lam = builtin(name).manifest["g"][0][0]
    M = get(name)
    for p in sample_points(M.domain, 2, 10, 4):
        K = conformal_K(lam, p)
        assert K == pytest.approx(sign, abs=1e-9)
    r = hsc_range(M, SampleSpec(20, 5, 42))
    assert abs(r.min - sign) <= 1e-6 and abs(r.max - sign) <= 1e-6


def test_flat_everything_vanishes():
    for n in (1, 2, 3):
        M = get(f"flat_cn({n})")
        for p in sample_points(M.domain, M.dim, 5, 1):
            conn = canonical_connection(M, coordinate_frame_10(M, p))
            assert conn.max_symbol <= 1e-12
            assert np.max(np.abs(conn.torsion_20)) <= 1e-12
            assert np.max(np.abs(curvature_at(M, p)[0].R)) <= 1e-12


def test_twisted_torus_witness():
    M = get("twisted_torus")
    p = witness("twisted_torus")
    N = max(np.linalg.norm(nijenhuis(M, p, a, b)) for a in np.eye(4) for b in np.eye(4))
    assert N >= 0.01
    assert canonical_connection(M, coordinate_frame_10(M, p)).torsion_11_norm <= 1e-8


def test_s6_witness():
    M = get("s6_nearly_kahler")
    p = witness("s6_nearly_kahler")
    G = real_christoffels(canonical_connection(M, coordinate_frame_10(M, p))).val
    assert np.max(np.abs(nabla_J(M, p, G))) <= 1e-6
    assert np.max(np.abs(nabla_J(M, p))) >= 0.05


def test_cross_product_table():
    eps = cross_product_constants()
    assert np.max(np.abs(eps + eps.transpose(1, 0, 2))) == 0.0
    # every pair of distinct units appears in exactly one triple
    pairs = {frozenset(t[:2]) for t in FANO_TRIPLES} | {frozenset(t[1:]) for t in FANO_TRIPLES} | {
        frozenset((t[0], t[2])) for t in FANO_TRIPLES
    }
    assert len(pairs) == 21
    # |u x v| = |u||v| for orthogonal u, v in R^7
    rng = np.random.default_rng(0)
    for _ in range(10):
        u, v = rng.normal(size=(2, 7))
        v -= (u @ v) / (u @ u) * u
        w = np.einsum("i,j,ijk->k", u, v, eps)
        assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))


def test_s6_J_is_cross_product():
    M = get("s6_nearly_kahler")
    eps = cross_product_constants()
    x = witness("s6_nearly_kahler")
    P = np.append(x, np.sqrt(1 - x @ x))
    # chart tangent vector d_a maps to e_a - (x_a / s) e_7
    T = np.hstack([np.eye(6), (-x / P[6])[:, None]])
    for a in range(6):
        JP = np.einsum("i,j,ijk->k", P, T[a], eps)
        Jchart = M.J_at(x)[:, a]
        np.testing.assert_allclose(Jchart @ T, JP, atol=1e-12)


@pytest.mark.parametrize("name", ATLAS_MANIFOLDS)
def test_manifest_export(name):
    e = builtin(name)
    M = AlmostHermitianManifold.from_manifest(e.manifest)
    p = np.asarray(e.witness)
    np.testing.assert_array_equal(M.g_at(p), get(name).g_at(p))
