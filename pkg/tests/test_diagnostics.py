import numpy as np
import pytest

from canonical import _circle, canonical_profiles
from oracles import edt_ball_oracle
from stratum.diagnostics import (DiagnosticsError, classify_boundary, gamma_sweep,
                                 internal_ball_check, internal_ball_sweep, isoperimetric_probe,
                                 polyline_distance)
from stratum.materials import Materials
from stratum.profile import Profile


def test_polyline_distance_exact():
    poly = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    d = polyline_distance(np.array([[0.5, 0.5], [2.0, 2.0], [-1.0, 0.0]]), poly, chunk=2)
    np.testing.assert_allclose(d, [0.5, np.sqrt(2.0), 1.0])


@pytest.mark.parametrize("name,rho0", [
    ("flat", 0.5), ("valley", 0.5), ("semicircle_bump", 0.25),
    ("tent", 0.0), ("cut", 0.0), ("jump", 0.0), ("semicircle_dent", 0.0),
])
def test_ball_sweep_radii(name, rho0):
    cert = internal_ball_sweep(canonical_profiles()[name], 1 / 32)
    assert cert.rho0 == rho0
    assert cert.passed == (rho0 > 0)


def test_ball_check_rejects_at_convex_corner():
    p = canonical_profiles()["tent"]
    cert = internal_ball_check(p, 0.125, 1 / 32)
    bad = np.array([z for z, _ in cert.violations])
    assert np.min(np.hypot(bad[:, 0] - 1.5, bad[:, 1] - 1.0)) < 1e-12
    assert not cert.passed
    assert "rho_tested = 0.125" in cert.summary()


def test_ball_check_slit_fails():
    p = canonical_profiles()["cut"]
    cert = internal_ball_check(p, 0.0625, 1 / 64)
    assert not cert.passed
    assert all(abs(z[0] - 1.5) < 0.1 for z, _ in cert.violations)


def test_ball_check_agrees_with_oracle_on_fine_flat_strip():
    p = Profile.flat(1, 2, 0.3)
    cert = internal_ball_check(p, 0.2, 0.05)
    pts = np.array([z for z, _ in cert.decisions()])
    assert np.all(edt_ball_oracle(p, 0.2, pts, cert.tol))


def test_ball_check_preconditions():
    p = Profile.flat(1, 2, 0.5)
    with pytest.raises(DiagnosticsError):
        internal_ball_check(p, 0.0, 0.01)
    with pytest.raises(DiagnosticsError):
        internal_ball_check(p, 0.1, 0.05)


def test_isoperimetric_probe_semicircle():
    R = 0.3
    xs, ys = _circle(1.5, R, 0.4, bump=True, n=2000)
    p = Profile.from_points(np.r_[1.0, xs, 2.0], np.r_[0.4, ys, 0.4])
    probe = isoperimetric_probe(p, (1.5 - R, 0.4), (1.5 + R, 0.4))
    assert probe.area == pytest.approx(np.pi * R * R / 2, rel=1e-5)
    assert probe.theta == pytest.approx(np.pi / 2, rel=1e-5)
    assert probe.slack >= 0


def test_isoperimetric_probe_flat_and_errors():
    p = Profile.flat(1, 2, 0.5)
    probe = isoperimetric_probe(p, (1.2, 0.5), (1.8, 0.5))
    assert probe.theta == pytest.approx(1.0) and probe.area == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DiagnosticsError):
        isoperimetric_probe(p, (1.2, 0.7), (1.8, 0.5))
    with pytest.raises(DiagnosticsError):
        isoperimetric_probe(p, (1.2, 0.5), (1.2, 0.5))
    valley = canonical_profiles()["valley"]
    with pytest.raises(DiagnosticsError, match="chord exits"):
        isoperimetric_probe(valley, (1.1, 0.9), (1.9, 0.9))


def test_classification_lengths():
    for name, p in canonical_profiles().items():
        c = classify_boundary(p)
        assert c.total_length == pytest.approx(p.boundary_length(), rel=1e-12), name
    c = classify_boundary(canonical_profiles()["cut"])
    assert c.cut_length == pytest.approx(0.4)
    nb = c.cut_neighbourhoods[0]
    assert nb.z == (1.5, 0.6) and nb.tangent


def test_gamma_sweep_validation():
    m = Materials.isotropic(1, 1, 0.5)
    p = Profile.flat(1, 2, 1.0)
    with pytest.raises(DiagnosticsError, match="strictly decreasing"):
        gamma_sweep(None, p, m, [0.01, 0.02])
    with pytest.raises(DiagnosticsError, match="Lipschitz"):
        gamma_sweep(None, canonical_profiles()["jump"], m, [0.01])
    with pytest.raises(DiagnosticsError, match="lift option"):
        gamma_sweep(None, p, m, [0.01], lift="maybe")


def test_gamma_sweep_flat_tail_halves():
    # flat film away from y = 0: the gap is the atan tail, roughly halving with delta
    m = Materials.isotropic(1, 1, 0.5)
    sw = gamma_sweep(None, Profile.flat(1, 2, 1.0), m, [0.04, 0.02, 0.01])
    ratios = sw.gaps[1:] / sw.gaps[:-1]
    np.testing.assert_allclose(ratios, 0.5, atol=0.02)
    assert sw.monotone and not sw.lifted
