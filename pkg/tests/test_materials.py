import numpy as np
import pytest
from scipy.integrate import quad

from stratum.materials import (MaterialError, Materials, TransitionParams, beta, c_delta,
                               e0_strain, isotropic, perimeter_bound, phi, phi0, phi_delta,
                               phi_delta_integral, quadratic_bound, tensor4, to_matrix,
                               to_vector, transition_weights, w0)


def test_isotropic_mandel_entries():
    C = isotropic(2.0, 3.0)
    np.testing.assert_allclose(C, [[8, 2, 0], [2, 8, 0], [0, 0, 6]])


def test_mandel_energy_matches_full_tensor():
    rng = np.random.default_rng(1)
    C = isotropic(1.3, 0.7)
    C4 = tensor4(C)
    for _ in range(5):
        E = rng.standard_normal((2, 2))
        E = E + E.T
        full = np.einsum("ijkl,ij,kl", C4, E, E)
        v = to_vector(E)
        assert v @ C @ v == pytest.approx(full)
        np.testing.assert_allclose(to_matrix(v), E)


@pytest.mark.parametrize("args,msg", [
    ((0.0, 1.0, 0.5), "gamma_f > 0"),
    ((1.0, 0.0, -0.5), "gamma_s > 0"),
    ((1.0, 1.0, 1.5), "gamma_s - gamma_fs >= 0"),
])
def test_invariants(args, msg):
    with pytest.raises(MaterialError, match=msg):
        Materials.isotropic(*args)


def test_negative_mismatch_rejected():
    with pytest.raises(MaterialError, match="e0 >= 0"):
        Materials.isotropic(1, 1, 0.5, e0=-0.1)


def test_tensor_checks():
    bad = isotropic(1, 1)
    bad[0, 1] += 0.5
    with pytest.raises(MaterialError, match="major symmetry"):
        Materials(1, 1, 0.5, 0.0, bad, isotropic(1, 1))
    with pytest.raises(MaterialError, match="positive-definite"):
        Materials(1, 1, 0.5, 0.0, -isotropic(1, 1), isotropic(1, 1))


def test_surface_density_branches():
    m = Materials.isotropic(1.0, 2.0, 0.5)
    assert phi(m, 0.3) == 1.0 and phi(m, 0.0) == 1.0
    m2 = Materials.isotropic(2.0, 1.0, 0.5)
    assert phi(m2, 0.0) == 0.5
    assert phi0(m2, 0.0) == 1.0 and phi0(m2, 0.2) == 2.0
    with pytest.raises(MaterialError):
        phi0(m2, -0.1)


@pytest.mark.parametrize("f", ["atan", "tanh"])
def test_phi_delta_closed_form_vs_quadrature(f):
    m = Materials.isotropic(1.0, 3.0, 0.5)
    t = TransitionParams(0.05, f)
    for y0, y1 in [(0.0, 0.3), (-0.2, 0.7), (0.01, 0.02)]:
        ref, _ = quad(lambda y: phi_delta(m, t, y), y0, y1, points=[0.0] if y0 < 0 < y1 else None,
                      epsabs=1e-13, epsrel=1e-13)
        assert phi_delta_integral(m, t, y0, y1) == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_phi_delta_limits():
    m = Materials.isotropic(1.0, 3.0, 0.5)
    t = TransitionParams(1e-6)
    assert phi_delta(m, t, 1.0) == pytest.approx(m.gamma_f, abs=1e-5)
    assert phi_delta(m, t, 0.0) == pytest.approx(m.gamma_sub)


def test_transition_weights_partition():
    s = np.linspace(-1, 1, 11)
    a, b = transition_weights(s)
    np.testing.assert_allclose(a + b, 1.0)
    assert a[0] == pytest.approx(0.0) and a[-1] == pytest.approx(1.0)


def test_c_delta_positivity_threshold():
    # C_delta(s) = a C_f + b C_s with min a = -1/8 at s = -1/2: PD iff C_f < 9 C_s
    Cs = isotropic(1, 1)
    ok = Materials(1, 1, 0.5, 0.0, 8.9 * Cs, Cs)
    ok.check_transition()
    bad = Materials(1, 1, 0.5, 0.0, 9.1 * Cs, Cs)
    with pytest.raises(MaterialError, match="loses positivity"):
        bad.check_transition()
    t = TransitionParams(0.1)
    ys = np.linspace(-1, 1, 401)
    assert min(np.linalg.eigvalsh(c_delta(ok, t, y)).min() for y in ys) > 0


def test_stiffness_ratio():
    m = Materials(1, 1, 0.5, 0.0, isotropic(2, 2), isotropic(1, 1))
    assert m.stiffness_ratio() == pytest.approx(2.0)


def test_quadratic_bound_and_mismatch_energy():
    m = Materials.isotropic(1, 1, 0.5, e0=0.1)
    assert quadratic_bound(m) == pytest.approx(np.linalg.eigvalsh(isotropic(1, 1)).max())
    # u = 0 in the film leaves the elastic strain -E0: W0 = e0^2 C11 / 2
    assert w0(m, 0.5, -e0_strain(m, 0.5)) == pytest.approx(0.5 * 0.01 * 3.0)
    assert w0(m, -0.5, -e0_strain(m, -0.5)) == 0.0
    assert w0(m, 0.5, np.zeros((2, 2))) == 0.0


def test_perimeter_bound_branches():
    m = Materials.isotropic(1.0, 1.0, 0.5)
    assert beta(m) == 0.5 and perimeter_bound(m, 3.0) == pytest.approx(6.0)
    m0 = Materials.isotropic(2.0, 1.0, 1.0)
    assert beta(m0) == 0.0 and perimeter_bound(m0, 3.0) == pytest.approx(3.0)
    with pytest.raises(MaterialError):
        perimeter_bound(m, -1.0)


def test_lift_regime():
    assert Materials.isotropic(1.0, 2.0, 0.5).lift_regime
    assert not Materials.isotropic(1.0, 1.5, 0.5).lift_regime
