import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aniharnack.calculus import PointJet, extremal_residual
from aniharnack.errors import DomainError, UsageError
from aniharnack.exponents import make
from aniharnack.geometry import (
    IntrinsicCube,
    ScalingMap,
    cube_inside,
    half_widths,
    interiors_overlap,
    residual_scaling_factors,
    scale_function,
    vitali_cover,
)
from aniharnack.grid import Field, Grid

import oracles

E24 = make((2, 4))


def test_half_widths_formula():
    assert np.allclose(half_widths(E24, 0.25, 2.0), [0.5 / 2.0, 0.25 ** 0.25])
    assert np.allclose(half_widths(make((3, 3, 3)), 0.125, 7.0, a=2), [1.0] * 3)
    with pytest.raises(UsageError):
        half_widths(E24, 0.0, 1.0)


def test_contains_examples():
    r, M = 0.36, 1.7
    cube = IntrinsicCube(E24, r, M)
    w1 = r ** 0.5 / M
    assert IntrinsicCube(E24, 1, 1).contains([0, 0])
    assert cube.contains([w1, 0.0])
    assert not cube.contains([1.0001 * w1, 0.0])
    assert cube.contains([0.0, -r ** 0.25])


@given(st.floats(0.01, 1.0), st.floats(1.0, 4.0), st.floats(0.1, 1.0), st.floats(0.2, 1.0))
def test_cube_monotone_in_r_and_M(r, s_factor, M, N_factor):
    s = r * s_factor
    N = M * N_factor
    small = IntrinsicCube(E24, r, M)
    big = IntrinsicCube(E24, s, N)
    assert cube_inside(small, big)
    corners = np.array([[sx, sy] for sx in (-1, 1) for sy in (-1, 1)]) * small.half_widths
    assert big.contains_points(corners).all()


@given(st.floats(0.1, 2.0), st.floats(1.0, 3.0))
def test_contains_monotone_in_dilation(a, f):
    c = IntrinsicCube(E24, 0.3, 1.5, (0.1, -0.2), a)
    assert cube_inside(c, c.dilate(f))


def test_cube_validation():
    with pytest.raises(UsageError):
        IntrinsicCube(E24, 1.0, 1.0, center=(0.0,))
    with pytest.raises(UsageError):
        IntrinsicCube(E24, 1.0, -1.0)


def test_cube_mask_and_fit():
    g = Grid.centered([1.0, 1.0], 9)
    c = IntrinsicCube(make((2, 2)), 0.25, 1.0)
    assert c.mask(g).sum() == 25  # half-width 1/2 covers 5 nodes per axis
    assert c.fits_in(g)
    assert not IntrinsicCube(make((2, 2)), 4.0, 1.0).fits_in(g)


def test_residual_scaling_factors():
    g, s = residual_scaling_factors(1.0, 1.0, E24)
    assert np.allclose(g, 1.0) and s == 1.0
    _, s = residual_scaling_factors(0.5, 2.0, E24)
    assert s == pytest.approx(1 / 16)


@given(st.floats(0.01, 1.0), st.floats(1.0, 50.0))
def test_scaling_factors_at_most_one(r, M):
    g, s = residual_scaling_factors(r, M, make((2, 2.5, 4)))
    assert np.all(g <= 1 + 1e-15) and s <= 1 + 1e-15


def test_scaling_map_round_trip():
    smap = ScalingMap(E24, 0.3, 2.5)
    x = np.array([0.7, -0.2])
    assert np.allclose(smap.inverse_point(smap.forward_point(x)), x, rtol=1e-15)


def _sumsq_jet(x):
    return PointJet(2 * np.asarray(x), 2 * np.eye(len(x)))


@pytest.mark.parametrize("r, M", [(0.5, 2.0), (0.25, 4.0), (0.9, 1.3)])
def test_scaling_covariance_analytic_jets(r, M):
    smap = ScalingMap(E24, r, M)
    _, src = residual_scaling_factors(r, M, E24)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-1, 1, size=(20, 2)):
        y = smap.forward_point(x)
        v_jet = smap.scale_jet(_sumsq_jet(y))
        lhs = extremal_residual(v_jet, E24, "super")
        rhs = src * extremal_residual(_sumsq_jet(y), E24, "super")
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


@given(st.floats(0.05, 1.0), st.floats(0.3, 5.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_scaling_covariance_any_ellipticity(r, M, lam, ratio):
    from aniharnack.exponents import ExponentData
    e = ExponentData((2.0, 3.0, 4.0), lam, lam * (1 + ratio))
    smap = ScalingMap(e, r, M)
    _, src = residual_scaling_factors(r, M, e)
    y = smap.forward_point([0.4, -0.7, 0.2])
    jet = PointJet([2 * y[0], -3 * y[1] ** 2, np.cos(y[2])],
                   [[2.0, 0.5, 0.0], [0.5, -6 * y[1], 0.1], [0.0, 0.1, -np.sin(y[2])]])
    for b in ("super", "sub"):
        assert extremal_residual(smap.scale_jet(jet), e, b) == pytest.approx(
            src * extremal_residual(jet, e, b), rel=1e-9, abs=1e-12)


def test_scale_function_examples():
    g = Grid.centered([1.0, 1.0], 17)
    u = Field.from_function(g, lambda x, y: x ** 2 + np.sin(y))
    ident = scale_function(u, ScalingMap(E24, 1.0, 1.0), "forward", target=g)
    assert np.allclose(ident.values, u.values, atol=1e-14)
    const = Field(g, np.full(g.dims, 3.0))
    v = scale_function(const, ScalingMap(E24, 0.5, 3.0), "forward", target=Grid.centered([0.5, 0.5], 9))
    assert np.allclose(v.values, 1.0)


def test_scale_function_exact_without_target():
    g = Grid.centered([1.0, 1.0], 9)
    u = Field.from_function(g, lambda x, y: x + 2 * y)
    smap = ScalingMap(E24, 0.25, 2.0)
    v = scale_function(u, smap, "forward")
    X, Y = v.grid.coords()
    s = smap.factors
    assert np.allclose(v.values, (s[0] * X + 2 * s[1] * Y) / 2.0)
    back = scale_function(v, smap, "inverse")
    assert np.allclose(back.values, u.values)
    assert np.allclose(back.grid.spacing, g.spacing)


def test_scale_function_round_trip_second_order():
    errs = []
    smap = ScalingMap(E24, 0.5, 1.5)
    for N in (17, 33, 65):
        g = Grid.centered([1.0, 1.0], N)
        u = Field.from_function(g, lambda x, y: x ** 2 + y ** 2)
        mid = Grid.centered(np.array([1.0, 1.0]) / smap.factors * 0.5, N)
        v = scale_function(u, smap, "forward", target=mid)
        inner = Grid.centered([0.4, 0.4], N)
        w = scale_function(v, smap, "inverse", target=inner)
        X, Y = inner.coords()
        errs.append(np.max(np.abs(w.values - (X ** 2 + Y ** 2))))
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_scale_function_domain_error_names_axis():
    g = Grid.centered([1.0, 1.0], 9)
    u = Field(g, np.zeros(g.dims))
    far = Grid.centered([1.0, 100.0], 9)
    with pytest.raises(DomainError, match="axis 2"):
        scale_function(u, ScalingMap(E24, 1.0, 1.0), "forward", target=far)
    with pytest.raises(UsageError):
        scale_function(u, ScalingMap(E24, 1.0, 1.0), "sideways")


# -- Vitali ------------------------------------------------------------------

def _random_family(seed, e, count=None):
    rng = np.random.default_rng(seed)
    count = count or int(rng.integers(1, 65))
    M = float(rng.uniform(0.5, 2.0))
    return [IntrinsicCube(e, float(rng.uniform(0.01, 1.0)), M, tuple(rng.uniform(-3, 3, e.n)))
            for _ in range(count)]


def check_vitali(family, chosen):
    assert len(set(chosen)) == len(chosen)
    for i in chosen:
        for j in chosen:
            if i < j:
                assert not oracles.box_overlap(family[i].center, family[i].half_widths,
                                               family[j].center, family[j].half_widths)
    for c in family:
        assert any(oracles.box_inside(c.center, c.half_widths, family[j].center, 5 * family[j].half_widths)
                   for j in chosen)


@pytest.mark.parametrize("seed", range(50))
def test_vitali_random_families(seed):
    e = make((2, 3)) if seed % 2 else make((2, 2, 4))
    family = _random_family(seed, e)
    check_vitali(family, vitali_cover(family))


def test_vitali_examples():
    e = make((2, 3))
    one = [IntrinsicCube(e, 0.5, 1.0)]
    assert vitali_cover(one) == [0]
    twin = [IntrinsicCube(e, 0.5, 1.0), IntrinsicCube(e, 0.5, 1.0, (0.1, 0.1))]
    assert vitali_cover(twin) == [0]
    check_vitali(twin, [0])
    apart = [IntrinsicCube(e, 0.1, 1.0, (3.0 * i, 0.0)) for i in range(4)]
    assert vitali_cover(apart) == [0, 1, 2, 3]
    assert vitali_cover([]) == []


def test_vitali_prefers_larger_generation():
    e = make((2, 2))
    fam = [IntrinsicCube(e, 0.1, 1.0), IntrinsicCube(e, 0.9, 1.0, (0.2, 0.0))]
    assert vitali_cover(fam) == [1]


def test_vitali_shared_face_allowed():
    e = make((2, 2))
    fam = [IntrinsicCube(e, 0.25, 1.0, (0.0, 0.0)), IntrinsicCube(e, 0.25, 1.0, (1.0, 0.0))]
    assert not interiors_overlap(*fam)
    assert vitali_cover(fam) == [0, 1]


def test_vitali_validation():
    e = make((2, 2))
    with pytest.raises(UsageError):
        vitali_cover([IntrinsicCube(e, 0.5, 1.0), IntrinsicCube(e, 0.5, 2.0)])
    with pytest.raises(UsageError):
        vitali_cover([IntrinsicCube(e, 1.5, 1.0)])
