"""Invariants checked on randomly generated profiles."""
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from stratum.diagnostics import isoperimetric_probe
from stratum.energy import eval_F, eval_F0
from stratum.io import format_profile, parse_profile
from stratum.materials import Materials, perimeter_bound
from stratum.profile import Profile, symmetric_difference_area
from stratum.relaxation import dewetting_lift, lipschitz_approximant, volume_correct

heights = st.floats(0.0, 2.0, allow_nan=False, allow_subnormal=False)


@st.composite
def lipschitz_profiles(draw, min_knots=2, max_knots=9):
    n = draw(st.integers(min_knots, max_knots))
    inner = sorted(draw(st.lists(st.floats(1.01, 1.99), min_size=n - 2, max_size=n - 2,
                                 unique=True)))
    ys = draw(st.lists(heights, min_size=n, max_size=n))
    return Profile.from_points([1.0, *inner, 2.0], ys)


@st.composite
def admissible_profiles(draw):
    p = draw(lipschitz_profiles(3, 9))
    knots = []
    for i, (x, y) in enumerate(p.knots):
        knots.append((x, y))
        if 0 < i < len(p.knots) - 1 and draw(st.booleans()):
            other = draw(heights)
            assume(other != y)
            knots.append((x, other))
    q = Profile(p.interval, tuple(knots))
    cuts = []
    if draw(st.booleans()):
        x = draw(st.floats(1.02, 1.98))
        top = float(q.envelopes(x)[0])
        if top > 1e-3 and not np.any(q.xs == x):
            cuts.append((x, draw(st.floats(0.0, 0.99)) * top, top))
    return Profile(q.interval, q.knots, tuple(cuts))


materials = st.sampled_from([
    Materials.isotropic(1.0, 1.0, 0.5, e0=0.05),
    Materials.isotropic(1.0, 2.0, 0.5, e0=0.05),
    Materials.isotropic(2.0, 1.0, 1.0),
    Materials.isotropic(0.5, 1.5, 0.0, e0=0.1),
])


@given(admissible_profiles())
def test_profile_text_round_trip(p):
    q = parse_profile(format_profile(p))
    assert q.knots == p.knots and q.cuts == p.cuts


@given(admissible_profiles(), materials)
def test_perimeter_bound_holds(p, m):
    C = eval_F(None, p, m).total
    assert p.boundary_length() <= perimeter_bound(m, C) + 1e-9


@given(admissible_profiles(), materials)
def test_F_not_above_F0_on_lipschitz_part(p, m):
    # the relaxed energy never exceeds the sharp one where both are defined
    q = p if p.is_lipschitz else p.resample(np.unique(p.xs))
    assert eval_F(None, q, m).total <= eval_F0(None, q, m).total + 1e-12


@given(admissible_profiles(), st.floats(0.1, 200.0))
def test_approximant_below_target_and_lipschitz(p, L):
    q = lipschitz_approximant(p, L)
    x = np.linspace(1.0, 2.0, 257)
    assert np.all(q.value(x) <= p.value(x) + 1e-12)
    seg = q.segments
    rise, run = np.abs(seg[:, 3] - seg[:, 1]), seg[:, 2] - seg[:, 0]
    assert np.all(rise <= L * run * (1 + 1e-9) + 1e-13)
    assert q.film_area() <= p.film_area() + 1e-12


@given(lipschitz_profiles(), st.floats(1e-4, 0.3))
def test_volume_correction_exact(p, d):
    assume(p.film_area() > 1e-3 and p.zero_measure() < 0.99)
    vc = volume_correct(p, p.film_area() + d)
    assert vc.profile.film_area() == pytest.approx(p.film_area() + d, abs=1e-10)
    assert np.all(vc.profile.value(p.xs) >= p.ys - 1e-15)


@given(lipschitz_profiles(), st.floats(1e-3, 0.2))
def test_dewetting_lift_conserves_area(p, eps):
    assume(p.film_area() > 1e-3)
    q, t = dewetting_lift(p, eps)
    assert q.film_area() == pytest.approx(p.film_area(), abs=1e-10)
    assert q.max_height() <= t + 1e-12


@given(lipschitz_profiles(), lipschitz_profiles())
def test_symmetric_difference_is_metric_like(p, q):
    d = symmetric_difference_area(p, q)
    assert d >= -1e-15
    assert d == pytest.approx(symmetric_difference_area(q, p), abs=1e-12)
    assert d >= abs(p.film_area() - q.film_area()) - 1e-12
    assert symmetric_difference_area(p, p) == pytest.approx(0.0, abs=1e-15)


@given(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=8), st.floats(0.2, 0.8))
def test_isoperimetric_ratio_at_least_one(bumps, lo):
    # a bump over a flat base: arc from the first to the last base knot
    n = len(bumps)
    xs = np.linspace(1.2, 1.8, n + 2)
    ys = np.r_[lo, lo + np.array(bumps), lo]
    p = Profile.from_points(np.r_[1.0, xs, 2.0], np.r_[lo, ys, lo])
    probe = isoperimetric_probe(p, (1.2, lo), (1.8, lo))
    assert probe.theta >= 1.0 - 1e-12
    assert probe.slack >= -1e-12


@given(admissible_profiles())
def test_lsc_value_is_lower_envelope(p):
    x = np.linspace(1.0, 2.0, 101)
    lo, hi = p.envelopes(x)
    assert np.all(p.value(x) <= lo + 1e-15) and np.all(lo <= hi)
