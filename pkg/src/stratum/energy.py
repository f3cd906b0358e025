"""Evaluation of the film functionals with a bulk/surface/cut/wetting split.

Four functionals are available:

``F``
    relaxed sharp-interface energy: bulk with W_0 and E_0, phi on the graph and
    jump parts, ``2 gamma_f`` times the cut length, ``gamma_fs (b - a)``.
``F0``
    sharp-interface energy on Lipschitz profiles: phi_0 on the graph and
    ``gamma_fs`` times the non-wetted length.
``Fdelta``
    transition-layer energy on Lipschitz profiles: W_delta, E_delta, phi_delta.
``Fdelta_relaxed``
    relaxed transition-layer energy: W_delta with E_0, phi_delta on the graph
    and jump parts, twice the integral of phi_delta along each cut.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.integrate import quad

from . import fem
from .materials import Materials, TransitionParams, phi_delta
from .profile import Profile, decompose

FUNCTIONALS = ("F", "F0", "Fdelta", "Fdelta_relaxed")


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyReport:
    bulk: float
    surface: float
    cut_term: float
    wetting_term: float
    total: float
    functional_tag: str
    truncation_depth: float = float("nan")
    resolution: float = float("nan")

    @classmethod
    def build(cls, tag, bulk, surface, cut_term, wetting_term, depth=np.nan, resolution=np.nan):
        total = bulk + surface + cut_term + wetting_term
        return cls(float(bulk), float(surface), float(cut_term), float(wetting_term),
                   float(total), tag, float(depth), float(resolution))

    @property
    def surface_side(self) -> float:
        """Everything except the bulk term."""
        return self.surface + self.cut_term + self.wetting_term

    def as_dict(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------------
# bulk term


def equilibrium(p: Profile, m: Materials, mode: fem.ElasticMode = fem.SHARP,
                depth: float | None = None, resolution: float | None = None,
                bc: fem.BCSpec = fem.BCSpec(), tol: float = 1e-10) -> fem.Displacement:
    """Mesh ``p`` and return the minimizing displacement."""
    mesh = fem.build_mesh(p, depth, resolution)
    return fem.solve_equilibrium(mesh, m, mode, bc, tol)


def _bulk(u, p: Profile, m: Materials, mode: fem.ElasticMode, override=None):
    """Bulk energy and the (depth, resolution) labels.

    ``u=None`` stands for the zero displacement.  In sharp mode its energy is
    ``e0^2 C_f[0,0] |Omega_h^+| / 2`` in closed form; otherwise a default mesh
    is built for the quadrature.
    """
    if override is not None:
        mesh = getattr(u, "mesh", None)
        return (float(override), getattr(mesh, "depth", np.nan),
                getattr(mesh, "resolution", np.nan))
    if u is None:
        if m.e0 == 0.0:
            return 0.0, np.nan, np.nan
        if mode.kind == "sharp":
            return 0.5 * m.e0 ** 2 * m.C_f[0, 0] * p.film_area(), np.nan, np.nan
        mesh = fem.build_mesh(p)
        u = fem.Displacement.zero(mesh)
    if u.mesh.profile_key is not None and u.mesh.profile_key != p.key:
        raise EnergyError("displacement mesh was built for a different profile")
    return fem.bulk_energy(u, m, mode), u.mesh.depth, u.mesh.resolution


# ----------------------------------------------------------------------
# surface integrals


def _segment_lengths(seg):
    return np.hypot(seg[:, 2] - seg[:, 0], seg[:, 3] - seg[:, 1])


def _phi_delta_line(m: Materials, t: TransitionParams, y0: float, y1: float,
                    length: float, rtol: float = 1e-9) -> float:
    """Integral of phi_delta along a straight piece from height y0 to y1."""
    if length == 0.0:
        return 0.0
    if y0 == y1:
        return length * phi_delta(m, t, y0)
    lo, hi = min(y0, y1), max(y0, y1)
    pts = [0.0] if lo < 0.0 < hi else None
    val, _ = quad(lambda y: phi_delta(m, t, y), lo, hi, epsabs=0.0, epsrel=rtol,
                  limit=200, points=pts)
    return val * length / (hi - lo)


def surface_phi(p: Profile, m: Materials) -> float:
    """Integral of phi over Gamma-tilde (graph and jump parts)."""
    dec = decompose(p)
    low = min(m.gamma_f, m.gamma_sub)
    out = 0.0
    for pl in dec.graph_part:
        pl = np.asarray(pl)
        if len(pl) < 2:
            continue
        L = np.hypot(*np.diff(pl, axis=0).T)
        on_zero = (pl[:-1, 1] == 0.0) & (pl[1:, 1] == 0.0)
        out += float(np.sum(np.where(on_zero, low, m.gamma_f) * L))
    # vertical pieces meet y = 0 in at most one point
    out += m.gamma_f * dec.jump_length
    return out


def eval_F(u, p: Profile, m: Materials, bulk: float | None = None) -> EnergyReport:
    """Relaxed sharp-interface energy; ``bulk`` overrides the elastic term."""
    bulk, depth, res = _bulk(u, p, m, fem.SHARP, bulk)
    dec = decompose(p)
    return EnergyReport.build("F", bulk, surface_phi(p, m), 2.0 * m.gamma_f * dec.cut_length,
                              m.gamma_fs * p.interval.length, depth, res)


def eval_F0(u, p: Profile, m: Materials, bulk: float | None = None) -> EnergyReport:
    if not p.is_lipschitz:
        raise EnergyError("profile has jumps or cuts: not in X_Lip")
    bulk, depth, res = _bulk(u, p, m, fem.SHARP, bulk)
    seg = p.segments
    L = _segment_lengths(seg)
    on_zero = (seg[:, 1] == 0.0) & (seg[:, 3] == 0.0)
    surface = float(np.sum(np.where(on_zero, m.gamma_s, m.gamma_f) * L))
    wet = m.gamma_fs * (p.interval.length - p.zero_measure())
    return EnergyReport.build("F0", bulk, surface, 0.0, wet, depth, res)


def surface_phi_delta(p: Profile, m: Materials, t: TransitionParams, rtol: float = 1e-9) -> float:
    """Integral of phi_delta over Gamma-tilde, piece by piece."""
    seg = p.segments
    L = _segment_lengths(seg)
    out = sum(_phi_delta_line(m, t, s[1], s[3], l, rtol) for s, l in zip(seg, L))
    for j in p.jumps:
        out += _phi_delta_line(m, t, j.y_low, j.y_high, j.height, rtol)
    return float(out)


def eval_Fdelta(u, p: Profile, m: Materials, t: TransitionParams) -> EnergyReport:
    if not p.is_lipschitz:
        raise EnergyError("profile has jumps or cuts: not in X_Lip")
    bulk, depth, res = _bulk(u, p, m, fem.ElasticMode.delta(t, "Edelta"))
    return EnergyReport.build("Fdelta", bulk, surface_phi_delta(p, m, t), 0.0,
                              m.gamma_fs * p.interval.length, depth, res)


def eval_Fdelta_relaxed(u, p: Profile, m: Materials, t: TransitionParams,
                        mismatch: str = "E0") -> EnergyReport:
    """Relaxed transition-layer energy.

    The bulk uses the sharp mismatch E_0 by default; ``mismatch='Edelta'``
    switches to the regularized one.
    """
    bulk, depth, res = _bulk(u, p, m, fem.ElasticMode.delta(t, mismatch))
    cut = sum(2.0 * _phi_delta_line(m, t, c.y_bottom, c.y_top, c.height) for c in p.cuts)
    return EnergyReport.build("Fdelta_relaxed", bulk, surface_phi_delta(p, m, t), cut,
                              m.gamma_fs * p.interval.length, depth, res)


def evaluate(tag: str, u, p: Profile, m: Materials, t: TransitionParams | None = None,
             **kw) -> EnergyReport:
    """Dispatch on the functional name (``Fdelta-relaxed`` is accepted too)."""
    tag = tag.replace("-", "_")
    if tag == "F":
        return eval_F(u, p, m)
    if tag == "F0":
        return eval_F0(u, p, m)
    if tag in ("Fdelta", "Fdelta_relaxed"):
        if t is None:
            raise EnergyError(f"{tag} needs transition parameters (delta)")
        if tag == "Fdelta":
            return eval_Fdelta(u, p, m, t)
        return eval_Fdelta_relaxed(u, p, m, t, **kw)
    raise EnergyError(f"unknown functional {tag!r}")
