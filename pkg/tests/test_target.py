import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pflow import flow as Fl
from pflow import geometry as G
from pflow import target as T
import oracles

SQ2 = math.sqrt(2)


class TestSphere:
    def test_project(self):
        S = T.make_sphere(2)
        assert np.allclose(S.project(np.array([2.0, 0, 0])), [1, 0, 0])

    def test_constraint(self):
        S = T.make_sphere(2)
        assert S.constraint_values(np.array([1.0, 0, 0]))[0] == 0
        assert S.sect_upper_bound == 1.0 and S.ambient_dim == 3

    @pytest.mark.parametrize(
        "y,X,expected",
        [((0, 0, 1), (1, 0, 0), (0, 0, 1)), ((1, 0, 0), (0, 1, 0), (1, 0, 0))],
    )
    def test_sff_single_direction(self, y, X, expected):
        S = T.make_sphere(2)
        out = T.sff_contract(S, np.array(y, float), np.array([X], float), np.eye(1))
        assert np.allclose(out, expected, atol=1e-15)

    @given(st.integers(0, 2**31 - 1))
    def test_sff_is_grad_sq_times_y(self, seed):
        r = np.random.default_rng(seed)
        S = T.make_sphere(3)
        y = S.project(r.normal(size=4))
        X = S.tangent_projection(np.broadcast_to(y, (2, 4)), r.normal(size=(2, 4)))
        A = r.normal(size=(2, 2))
        ginv = A @ A.T + np.eye(2)
        out = T.sff_contract(S, y, X, ginv)
        gsq = np.einsum("ij,ik,jk->", ginv, X, X)
        assert np.allclose(out, gsq * y, atol=1e-12)

    def test_project_postcondition(self, rng):
        S = T.make_sphere(2)
        y = rng.normal(size=(100, 3))
        assert S.violation(S.project(y)) <= 1e-12


class TestClifford:
    def test_constraints_vanish(self):
        C = T.make_clifford_torus()
        y = np.array([1, 0, 1, 0]) / SQ2
        assert np.allclose(C.constraint_values(y), 0, atol=1e-16)
        assert C.sect_upper_bound == 0.0 and C.codim == 2

    @given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
    def test_normals_orthogonal(self, a, b):
        C = T.make_clifford_torus()
        y = np.array([math.cos(a), math.sin(a), math.cos(b), math.sin(b)]) / SQ2
        n = C.normals(y)
        assert abs(n[0] @ n[1]) < 1e-10

    def test_sff_example(self):
        # |grad Phi_1|^2 = 1/2 and <Hess Phi_1 X, X> = 1 at this point, so the
        # contraction is y_pair * 1 / (1/2) = (sqrt 2, 0, 0, 0)
        C = T.make_clifford_torus()
        y = np.array([1, 0, 1, 0]) / SQ2
        out = T.sff_contract(C, y, np.array([[0, 1.0, 0, 0]]), np.eye(1))
        assert np.allclose(out, [SQ2, 0, 0, 0], atol=1e-15)

    def test_sff_example_matches_wrap_curvature(self):
        # a unit-speed-in-angle wrap (cos t, sin t, 1, 0)/sqrt2 has speed 1/sqrt2 and
        # acceleration -(y1, y2, 0, 0); stationarity needs A = -acceleration scaled by |u'|^2 / |X|^2
        C = T.make_clifford_torus()
        t = 0.3
        y = np.array([math.cos(t), math.sin(t), 1, 0]) / SQ2
        X = np.array([-math.sin(t), math.cos(t), 0, 0]) / SQ2
        acc = -np.array([math.cos(t), math.sin(t), 0, 0]) / SQ2
        out = T.sff_contract(C, y, X[None], np.eye(1))
        assert np.allclose(out, -acc, atol=1e-15)

    def test_project(self, rng):
        C = T.make_clifford_torus()
        y = C.project(rng.normal(size=(50, 4)))
        assert C.violation(y) <= 1e-12


@pytest.mark.parametrize("make", [lambda: T.make_sphere(2), T.make_clifford_torus, lambda: T.make_euclidean(3)])
def test_zero_partials(make):
    tgt = make()
    y = tgt.project(np.array([1.0, 0.2, 0.9, 0.1][: tgt.ambient_dim]))
    out = T.sff_contract(tgt, y, np.zeros((2, tgt.ambient_dim)), np.eye(2))
    assert np.all(out == 0)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["sphere", "clifford"]))
def test_sff_is_normal(seed, kind):
    r = np.random.default_rng(seed)
    tgt = T.make_target(kind, n=2)
    y = tgt.project(r.normal(size=tgt.ambient_dim))
    X = tgt.tangent_projection(np.broadcast_to(y, (2, tgt.ambient_dim)), r.normal(size=(2, tgt.ambient_dim)))
    out = T.sff_contract(tgt, y, X, np.eye(2))
    assert np.allclose(tgt.tangent_projection(y, out), 0, atol=1e-12)


def test_sff_rejects_drift():
    S = T.make_sphere(2)
    with pytest.raises(T.DriftError):
        T.sff_contract(S, np.array([1.1, 0, 0]), np.array([[0, 1.0, 0]]), np.eye(1))


def test_tangent_frame_orthonormal(rng):
    C = T.make_clifford_torus()
    y = C.project(rng.normal(size=(20, 4)))
    E = C.tangent_frame(y)
    assert np.allclose(np.einsum("nli,nlj->nij", E, E), np.eye(2), atol=1e-12)
    assert np.allclose(np.einsum("nkl,nli->nki", C.normals(y), E), 0, atol=1e-12)


@pytest.mark.parametrize("kind", ["sphere", "clifford"])
@pytest.mark.parametrize("p,eps", [(2, 0.0), (3, 1e-2), (4, 0.5)])
def test_wrap_stationary(kind, p, eps):
    tgt = T.make_target(kind, n=2)
    g = G.build_flat_torus(1, 64)
    (x,) = G.coordinates(g)
    if kind == "sphere":
        u = np.stack([np.cos(2 * x), np.sin(2 * x), 0 * x], axis=-1)
    else:
        u = np.stack([np.cos(2 * x), np.sin(2 * x), np.ones_like(x), 0 * x], axis=-1) / SQ2
    state = Fl.MapState(u, 0.0, eps, p)
    assert Fl.stationarity_residual(state, g, tgt) <= 1e-10


class TestThresholds:
    @pytest.mark.parametrize("m", [1, 2, 3, 7])
    def test_delta_p_at_2(self, m):
        assert T.delta_p(m, 2) == 3

    def test_delta_p_values(self):
        assert T.delta_p(4, 3) == 591
        assert T.delta_p(2, 3) == pytest.approx(oracles.DELTA_P_M2_P3, rel=1e-14)
        assert T.delta_p(2, 3) == pytest.approx(542.823, abs=1e-3)

    def test_delta_p_rejects(self):
        with pytest.raises(ValueError):
            T.delta_p(2, 1.5)

    @given(st.integers(1, 3), st.floats(2.0, 8.0), st.floats(1e-3, 2.0))
    def test_delta_p_increasing(self, m, p, dp):
        assert T.delta_p(m, p + dp) > T.delta_p(m, p)
        assert T.delta_p(m, p) == pytest.approx(oracles.delta_p_formula(m, p), rel=1e-14)

    def test_cap_delta_values(self):
        assert T.cap_delta(math.pi / 4, math.pi / 3) == pytest.approx(0.2071068, abs=1e-7)
        assert T.cap_delta(0.1, 0.2) == pytest.approx(1.46887, abs=1e-5)
        assert T.cap_delta(0.3, 0.3 + 1e-12) < 1e-10

    @pytest.mark.parametrize("r,r1", [(0.3, 0.2), (0.0, 0.2), (0.3, 1.6)])
    def test_cap_delta_rejects(self, r, r1):
        with pytest.raises(ValueError):
            T.cap_delta(r, r1)

    def test_best_cap_delta_quarter(self):
        d, r1 = T.best_cap_delta(math.pi / 4)
        assert d == pytest.approx(0.25, abs=1e-15)
        assert r1 == pytest.approx(math.acos(SQ2 / 4), abs=1e-15)
        assert r1 == pytest.approx(1.2094, abs=1e-4)
        gd, gr1 = oracles.best_cap_delta_grid(math.pi / 4)
        assert abs(gd - d) <= 1e-6

    def test_best_cap_delta_near_half_pi(self):
        assert T.best_cap_delta(math.pi / 2 - 1e-6)[0] < 1e-12

    def test_best_cap_delta_random_vs_grid(self):
        r = np.random.default_rng(7).uniform(0.05, 1.5, size=100)
        for ri in r:
            d, r1 = T.best_cap_delta(ri)
            gd, _ = oracles.best_cap_delta_grid(ri)
            assert abs(gd - d) <= 1e-8
            assert T.cap_delta(ri, r1) == pytest.approx(d, rel=1e-12)

    def test_grid_search_helper(self):
        d, r1 = T.best_cap_delta(0.2)
        gd, gr1 = T.cap_delta_grid_search(0.2)
        assert gd <= d + 1e-15 and d - gd < 1e-8

    def test_r_max(self):
        assert T.max_admissible_cap_radius(2, 2) == pytest.approx(oracles.R_MAX_P2, abs=1e-12)
        assert T.max_admissible_cap_radius(2, 2) == pytest.approx(oracles.r_max_bisection(2, 2), abs=1e-10)
        assert T.max_admissible_cap_radius(3, 2) == pytest.approx(oracles.R_MAX_P3_M2, abs=1e-12)
        assert T.max_admissible_cap_radius(3, 2) < 0.0215

    def test_r_max_brackets_threshold(self):
        r = T.max_admissible_cap_radius(2, 2)
        d_in = T.cap_delta(r - 1e-3, T.best_cap_delta(r - 1e-3)[1])
        d_out = T.cap_delta(r + 1e-3, T.best_cap_delta(r + 1e-3)[1])
        assert d_in > 3 > d_out

    def test_r_max_decreasing_in_p(self):
        rs = [T.max_admissible_cap_radius(p, 2) for p in (2, 2.5, 3, 4, 6, 10)]
        assert all(a > b for a, b in zip(rs, rs[1:]))


class TestCertificates:
    @pytest.mark.parametrize("r", [0.1, 0.2, 0.5])
    def test_cap_pass_fail(self, r):
        S = T.make_sphere(2)
        dstar, r1 = T.best_cap_delta(r)
        ok = T.verify_regular_set(T.sphere_cap_cert(2, r, r1=r1, delta=dstar - 1e-6), S)
        bad = T.verify_regular_set(T.sphere_cap_cert(2, r, r1=r1, delta=dstar + 0.1), S)
        assert ok.passed and not bad.passed
        # the failure is located at the cap boundary
        rho = T.geodesic_radius(np.array([0, 0, 1.0]), bad.worst_sample)
        assert rho == pytest.approx(r, rel=1e-6)

    def test_cap_pinching(self):
        cert = T.sphere_cap_cert(2, 0.3)
        f = cert.f(cert.samples(32))
        assert np.all(f >= 1 / cert.C) and np.all(f <= cert.C)

    def test_cap_sublevel(self):
        S = T.make_sphere(2)
        assert T.verify_sublevel(T.sphere_cap_cert(2, 0.4), S).passed

    def test_concave_fstar_fails(self):
        S = T.make_sphere(2)
        cert = T.sphere_cap_cert(2, 0.4, fstar_sign=-1.0)
        assert not T.verify_sublevel(cert, S).passed

    def test_trivial_on_flat_target(self):
        C = T.make_clifford_torus()
        for delta in (1.0, 1e3, 1e9):
            cert = T.trivial_cert(C, delta=delta)
            assert T.verify_regular_set(cert, C).passed
            assert T.verify_sublevel(cert, C).passed

    def test_trivial_on_sphere_fails(self):
        S = T.make_sphere(2)
        assert not T.verify_regular_set(T.trivial_cert(S), S).passed

    def test_samples_outside_rejected(self):
        S = T.make_sphere(2)
        cert = T.sphere_cap_cert(2, 0.2)
        with pytest.raises(ValueError):
            T.verify_regular_set(cert, S, samples=np.array([[1.0, 0, 0]]))

    def test_intrinsic_hessian_of_height(self, rng):
        # Hess_N(y . c) = -(y . c) I on the unit sphere
        S = T.make_sphere(2)
        c = np.array([0, 0, 1.0])
        y = S.project(rng.normal(size=(10, 3)))
        frame = S.tangent_frame(y)
        H = T.intrinsic_hessian(S, y, frame, np.broadcast_to(c, y.shape), np.zeros((10, 3, 3)))
        assert np.allclose(H, -(y @ c)[:, None, None] * np.eye(2), atol=1e-12)

    def test_cap_fstar_hessian_matches_finite_differences(self):
        cert = T.sphere_cap_cert(2, 0.5)
        S = T.make_sphere(2)
        c = np.array([0, 0, 1.0])
        y0 = T.sphere_exp(c, np.array([0.2, 0.1, 0]))
        frame = S.tangent_frame(y0[None])[0]
        H = cert.hess_fstar(y0[None], frame[None])[0]
        t = 1e-4
        for i in range(2):
            e = frame[:, i]
            # second derivative along the geodesic through y0 in direction e
            vals = [cert.fstar(math.cos(s) * y0 + math.sin(s) * e) for s in (-t, 0.0, t)]
            assert (vals[0] - 2 * vals[1] + vals[2]) / t**2 == pytest.approx(H[i, i], rel=1e-5)
