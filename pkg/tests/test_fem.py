import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from stratum import fem
from stratum.materials import Materials, TransitionParams, isotropic, to_vector
from stratum.profile import Profile


def jump_cut():
    return Profile.from_points([1, 1.4, 1.4, 2], [1, 1, 0.5, 0.5], cuts=[(1.7, 0.2, 0.5)])


def film_relaxed_energy(C, e0, area):
    # periodic flat film on a clamped substrate: film strain (e0, s, 0) with zero vertical stress
    return 0.5 * e0 ** 2 * (C[0, 0] - C[0, 1] ** 2 / C[1, 1]) * area


@pytest.mark.parametrize("p", [Profile.flat(1, 2, 1.0), jump_cut(),
                               Profile.from_points([1, 1.5, 2], [0.2, 0.9, 0.0])])
def test_mesh_covers_domain(p):
    mesh = fem.build_mesh(p, 1.5, 1 / 16)
    assert np.all(mesh.areas > 0)
    assert mesh.areas.sum() == pytest.approx(p.film_area() + 1.5 * (p.b - p.a), rel=1e-12)
    assert mesh.euler_characteristic() == 1


def test_slit_nodes_are_duplicated():
    mesh = fem.build_mesh(jump_cut(), 1.0, 1 / 16)
    V = mesh.vertices
    on_slit = V[(np.abs(V[:, 0] - 1.7) < 1e-12) & (V[:, 1] > 0.2 + 1e-9) & (V[:, 1] < 0.5 - 1e-9)]
    ys, counts = np.unique(np.round(on_slit[:, 1], 12), return_counts=True)
    assert len(ys) > 0 and np.all(counts == 2)


def test_refinement_quarters_elements():
    mesh = fem.build_mesh(Profile.flat(1, 2, 1.0), 1.0, 0.25)
    fine = fem.refine_mesh(mesh)
    assert fine.n_triangles == 4 * mesh.n_triangles
    assert fine.areas.sum() == pytest.approx(mesh.areas.sum())


def test_patch_affine_strain_energy():
    m = Materials.isotropic(1.0, 1.0, 0.5, lame_f=(1.3, 0.7), lame_s=(2.0, 1.0))
    p = Profile.from_points([1, 1.5, 2], [0.4, 0.8, 0.4])
    mesh = fem.build_mesh(p, 1.0, 1 / 8)
    E = np.array([[0.01, 0.003], [0.003, -0.02]])
    d = fem.Displacement.from_function(mesh, lambda x, y: E @ [x, y])
    v = to_vector(E)
    ref = 0.5 * (v @ m.C_f @ v) * p.film_area() + 0.5 * (v @ m.C_s @ v) * 1.0
    assert fem.bulk_energy(d, m) == pytest.approx(ref, rel=1e-12)
    pts = np.array([[1.2, 0.1], [1.6, -0.5], [1.5, 0.7]])
    np.testing.assert_allclose(d.evaluate(pts), pts @ E.T, atol=1e-14)


def test_zero_mismatch_gives_zero_energy():
    m = Materials.isotropic(1, 1, 0.5)
    d = fem.solve_equilibrium(fem.build_mesh(jump_cut(), 1.0, 1 / 16), m)
    assert d.info["energy"] <= 1e-18
    assert np.abs(d.u).max() == 0.0


@pytest.mark.parametrize("lame_f,lame_s", [((1, 1), None), ((2.0, 0.5), (1.0, 1.0))])
def test_periodic_flat_film_matches_closed_form(lame_f, lame_s):
    m = Materials.isotropic(1, 1, 0.5, e0=0.02, lame_f=lame_f, lame_s=lame_s)
    mesh = fem.build_mesh(Profile.flat(1, 2, 0.6), 1.0, 1 / 8)
    d = fem.solve_equilibrium(mesh, m, bc=fem.BCSpec(lateral="periodic"))
    ref = film_relaxed_energy(isotropic(*lame_f), 0.02, 0.6)
    assert d.info["energy"] == pytest.approx(ref, rel=1e-8)


def test_free_sides_relax_below_periodic():
    m = Materials.isotropic(1, 1, 0.5, e0=0.02)
    mesh = fem.build_mesh(Profile.flat(1, 2, 1.0), 2.0, 1 / 16)
    free = fem.solve_equilibrium(mesh, m).info["energy"]
    per = fem.solve_equilibrium(mesh, m, bc=fem.BCSpec(lateral="periodic")).info["energy"]
    assert 0 < free < per


def test_pcg_matches_direct_solve():
    m = Materials.isotropic(1, 1, 0.5, e0=0.02)
    mesh = fem.build_mesh(jump_cut(), 1.0, 1 / 8)
    K, f = fem.assemble(mesh, fem.element_moduli(mesh, m))
    free = np.setdiff1d(np.arange(mesh.n_vertices), mesh.tagged_nodes("bottom"))
    dofs = np.sort(np.r_[2 * free, 2 * free + 1])
    Kr = sp.csr_matrix(K)[dofs][:, dofs]
    x, info = fem.pcg(Kr, f[dofs], tol=1e-13)
    np.testing.assert_allclose(x, spla.spsolve(Kr.tocsc(), f[dofs]), rtol=1e-8, atol=1e-14)
    assert info["residual"] <= 1e-13


def test_unclamped_system_is_singular():
    m = Materials.isotropic(1, 1, 0.5, e0=0.02)
    mesh = fem.build_mesh(Profile.flat(1, 2, 1.0), 1.0, 0.25)
    with pytest.raises(fem.SingularSystemError, match="rigid-body"):
        fem.solve_equilibrium(mesh, m, bc=fem.BCSpec(clamp_bottom=False))


def test_bad_inputs():
    with pytest.raises(fem.MeshError):
        fem.build_mesh(Profile.flat(1, 2, 1.0), 1.0, -0.1)
    with pytest.raises(ValueError):
        fem.BCSpec(lateral="clamped")
    with pytest.raises(ValueError):
        fem.ElasticMode("delta")


def test_delta_mode_approaches_sharp():
    m = Materials.isotropic(1, 1, 0.5, e0=0.02)
    mesh = fem.build_mesh(Profile.flat(1, 2, 0.6), 1.0, 1 / 8)
    bc = fem.BCSpec(lateral="periodic")
    sharp = fem.solve_equilibrium(mesh, m, bc=bc).info["energy"]
    gaps = []
    for delta in (0.1, 0.01, 0.001):
        mode = fem.ElasticMode.delta(TransitionParams(delta))
        gaps.append(abs(fem.solve_equilibrium(mesh, m, mode, bc).info["energy"] - sharp))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01 * sharp
