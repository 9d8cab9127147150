import math

import numpy as np
import pytest

from pflow import geometry as G
from pflow import initial
from pflow import target as T

SPHERE = T.make_sphere(2)
CLIFFORD = T.make_clifford_torus()
NORTH = [0.0, 0.0, 1.0]


def rho(u, centre=NORTH):
    return np.arccos(np.clip(u @ np.asarray(centre), -1, 1))


class TestCapMap:
    def test_inside_cap_with_margin(self):
        g = G.build_flat_torus(2, 32)
        u = initial.cap_map(g, NORTH, 0.2, seed=4)
        assert SPHERE.violation(u) < 1e-14
        # on the reference lattice (= this grid) the max is attained exactly
        assert np.max(rho(u)) ** 2 == pytest.approx((1 - 1e-3) * 0.04, rel=1e-10)

    def test_grid_independent(self):
        a = initial.cap_map(G.build_flat_torus(2, 16), NORTH, 0.3, seed=2)
        b = initial.cap_map(G.build_flat_torus(2, 32), NORTH, 0.3, seed=2)
        assert np.allclose(a, b[::2, ::2], atol=1e-14)

    def test_seeded(self):
        g = G.build_flat_torus(2, 8)
        a = initial.cap_map(g, NORTH, 0.3, seed=2)
        assert np.array_equal(a, initial.cap_map(g, NORTH, 0.3, seed=2))
        assert not np.allclose(a, initial.cap_map(g, NORTH, 0.3, seed=3))

    def test_other_centre(self):
        g = G.build_flat_torus(2, 8)
        c = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
        u = initial.cap_map(g, c, 0.25, seed=0)
        assert np.max(rho(u, c)) < 0.25


class TestAngleMaps:
    def test_clifford_map_on_target(self, rng):
        a, b = rng.normal(size=(2, 10))
        assert CLIFFORD.violation(initial.clifford_map(a, b)) < 1e-15

    def test_angle_field(self):
        g = G.build_flat_torus(2, 8)
        x, y = G.coordinates(g)
        f = initial.angle_field(g, [(0.5, [1, 0], 0.0)], winding=[0, 1])
        assert np.allclose(f, 0.5 * np.sin(x) + y)

    def test_bump_support(self):
        g = G.build_flat_torus(2, 32)
        b = initial.bump(g, (math.pi, math.pi), 1.0, 0.3)
        d = G.periodic_distance(g, (math.pi, math.pi))
        assert np.all(b[d >= 1.0] == 0)
        assert b.max() == pytest.approx(0.3)

    def test_zero_bump_is_constant(self):
        g = G.build_flat_torus(2, 8)
        u = initial.make_initial({"generator": "bump", "centre": [1, 1], "radius": 1, "amplitude": 0}, g, CLIFFORD)
        assert np.ptp(u.reshape(-1, 4), axis=0).max() == 0


class TestMakeInitial:
    def test_wrap(self):
        g = G.build_flat_torus(1, 16)
        u = initial.make_initial({"generator": "wrap", "k": 2}, g, SPHERE)
        assert np.array_equal(u, initial.geodesic_wrap(g, SPHERE, k=2))

    def test_constant_projected(self):
        g = G.build_flat_torus(2, 4)
        u = initial.make_initial({"generator": "constant", "point": [0, 0, 2.0]}, g, SPHERE)
        assert np.allclose(u, [0, 0, 1.0])

    def test_cap_from_ball(self):
        g = G.build_flat_torus(2, 8)
        u = initial.make_initial({"generator": "cap"}, g, SPHERE, seed=1, cap={"r": 0.1})
        assert np.max(rho(u)) < 0.1

    @pytest.mark.parametrize(
        "spec,tgt",
        [
            ({"generator": "nope"}, SPHERE),
            ({"generator": "angles"}, SPHERE),
            ({"generator": "cap"}, SPHERE),
        ],
    )
    def test_errors(self, spec, tgt):
        with pytest.raises(ValueError):
            initial.make_initial(spec, G.build_flat_torus(2, 4), tgt)

    def test_wrap_rejects_euclidean(self):
        with pytest.raises(ValueError):
            initial.geodesic_wrap(G.build_flat_torus(1, 8), T.make_euclidean(2))
