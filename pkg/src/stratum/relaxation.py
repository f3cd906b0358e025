"""Recovery sequences for the relaxed energy.

The pipeline for a target profile ``h`` is

1. ``lipschitz_approximants``: the inf-convolution
   ``h_L(x) = inf_z h(z) + L |x - z|``, which is L-Lipschitz, lies below ``h``
   and increases to ``h`` as ``L`` grows;
2. ``volume_correct``: lift the approximant back to the target film area with
   the three-branch map (zero set kept, thin parts scaled, thick parts raised);
3. ``shift_displacement``: move the displacement up by the lift so it lives on
   the new subgraph;
4. in the dewetting regime, ``dewetting_lift`` pulls the profile off ``y = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely

from . import fem
from .energy import eval_F, eval_F0, surface_phi
from .materials import Materials
from .profile import Profile

AREA_TOL = 1e-10


class RelaxationError(ValueError):
    pass


# ----------------------------------------------------------------------
# Lipschitz approximants


def _point_sources(p: Profile):
    """Sorted abscissae with the smallest value attained (or approached) there."""
    src = {}
    for x, y in p.knots:
        src[x] = min(src.get(x, np.inf), y)
    for c in p.cuts:
        src[c.x] = min(src.get(c.x, np.inf), c.y_bottom)
    xs = np.array(sorted(src))
    return xs, np.array([src[x] for x in xs])


def _lower_envelope(lines, x0, x1):
    """Knots of min over lines ``(slope, intercept)`` on ``[x0, x1]``."""
    cand = [x0, x1]
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            (k1, c1), (k2, c2) = lines[i], lines[j]
            if k1 != k2:
                x = (c2 - c1) / (k1 - k2)
                if x0 < x < x1:
                    cand.append(x)
    # rounded intersections land ulps away from each other or the ends; a kink that
    # close is not resolvable and would show up as a spurious steep slope
    tol = 1e-10 * (x1 - x0)
    kept = [x0]
    for x in np.unique(cand)[1:-1]:
        if x - kept[-1] > tol and x1 - x > tol:
            kept.append(x)
    cand = np.array(kept + [x1])
    vals = np.min([[k * x + c for k, c in lines] for x in cand], axis=1)
    return cand, vals


def lipschitz_approximant(p: Profile, L: float) -> Profile:
    """Exact inf-convolution of ``h`` with ``L |.|`` (a Lipschitz profile)."""
    if not L > 0:
        raise RelaxationError("Lipschitz bound must be positive")
    xs, g = _point_sources(p)
    # cone envelope at the sources: forward then backward sweep
    G = g.copy()
    for i in range(1, len(xs)):
        G[i] = min(G[i], G[i - 1] + L * (xs[i] - xs[i - 1]))
    for i in range(len(xs) - 2, -1, -1):
        G[i] = min(G[i], G[i + 1] + L * (xs[i + 1] - xs[i]))
    out_x, out_y = [xs[0]], [G[0]]
    for i in range(len(xs) - 1):
        x0, x1 = xs[i], xs[i + 1]
        lines = [(L, G[i] - L * x0), (-L, G[i + 1] + L * x1)]
        y0, y1 = float(p.right_limit(x0)), float(p.left_limit(x1))
        k = (y1 - y0) / (x1 - x0)
        if abs(k) <= L:
            lines.append((k, y0 - k * x0))
        cx, cy = _lower_envelope(lines, x0, x1)
        out_x += list(cx[1:])
        out_y += list(cy[1:])
    # sources closer than the envelope tolerance (steep input pieces) collapse to one
    # knot carrying the cluster minimum, so the result stays below h
    x, y = np.array(out_x), np.maximum(np.array(out_y), 0.0)
    tol = 1e-10 * p.interval.length
    groups = np.split(np.arange(len(x)), np.flatnonzero(np.diff(x) > tol) + 1)
    nx, ny = [], []
    for g in groups:
        j = g[np.argmin(y[g])]
        nx.append(x[0] if g[0] == 0 else x[-1] if g[-1] == len(x) - 1 else x[j])
        ny.append(y[j])
    return Profile.from_points(nx, ny)


def lipschitz_approximants(p: Profile, L_schedule) -> list:
    return [lipschitz_approximant(p, L) for L in L_schedule]


def default_L0(p: Profile) -> float:
    return 4.0 * p.total_variation() / p.interval.length


def default_schedule(p: Profile, steps: int, L0: float | None = None) -> list:
    """``L_k = 2^k L0`` for ``k = 0, ..., steps - 1``."""
    L0 = default_L0(p) if L0 is None else L0
    if not L0 > 0:
        L0 = 1.0
    return [L0 * 2.0 ** k for k in range(steps)]


# ----------------------------------------------------------------------
# level-set bookkeeping


def _split_at_level(xs, ys, lam):
    """Insert the crossings of ``y = lam`` into a polyline (jumps kept)."""
    nx, ny = [xs[0]], [ys[0]]
    for x0, y0, x1, y1 in zip(xs[:-1], ys[:-1], xs[1:], ys[1:]):
        if x1 > x0 and (y0 - lam) * (y1 - lam) < 0:
            t = (lam - y0) / (y1 - y0)
            nx.append(x0 + t * (x1 - x0))
            ny.append(lam)
        nx.append(x1)
        ny.append(y1)
    return np.array(nx), np.array(ny)


def level_measures(p: Profile, lam: float):
    """``(|{h >= lam}|, integral of h over {h < lam})``, exact for polylines."""
    xs, ys = _split_at_level(p.xs, p.ys, lam)
    w = np.diff(xs)
    keep = w > 0
    y0, y1, w = ys[:-1][keep], ys[1:][keep], w[keep]
    above = (y0 >= lam) & (y1 >= lam)
    measure = float(w[above].sum())
    integral = float((0.5 * (y0 + y1) * w)[~above].sum())
    return measure, integral


def mu_functional(p: Profile, lam: float) -> float:
    """``|H_lam| + (1/lam) * integral of h outside H_lam``."""
    if not lam > 0:
        raise RelaxationError("lambda must be positive")
    meas, integ = level_measures(p, lam)
    return meas + integ / lam


def positive_measure(p: Profile) -> float:
    return p.interval.length - p.zero_measure()


# ----------------------------------------------------------------------
# volume correction


@dataclass(frozen=True)
class VolumeCorrection:
    profile: Profile
    eps: float
    lam: float
    mu: float

    def __iter__(self):
        return iter((self.profile, self.eps, self.lam, self.mu))


def volume_correct(tilde_h: Profile, target_area: float, r: float = 0.5) -> VolumeCorrection:
    """Restore the film area of ``tilde_h`` to ``target_area``.

    With ``d`` the deficit, ``lam = d^r``, ``mu`` the level functional at
    ``lam`` and ``eps = d / mu``, heights map as ``0 -> 0``,
    ``y -> y + eps`` on ``y >= lam`` and ``y -> y (1 + eps / lam)`` below.
    """
    if not 0.0 < r < 1.0:
        raise RelaxationError("r must lie in (0, 1)")
    area = tilde_h.film_area()
    d = target_area - area
    scale = max(1.0, abs(target_area))
    if d < -AREA_TOL * scale:
        raise RelaxationError(f"negative area deficit {d:.3e}: approximant lies above the target")
    if d <= 0.0:
        return VolumeCorrection(tilde_h, 0.0, 0.0, positive_measure(tilde_h))
    lam = d ** r
    mu = mu_functional(tilde_h, lam)
    if not mu > 0:
        raise RelaxationError("mass-positivity hypothesis violated: mu = 0")
    eps = d / mu
    xs, ys = _split_at_level(tilde_h.xs, tilde_h.ys, lam)
    ny = np.where(ys >= lam, ys + eps, ys * (1.0 + eps / lam))
    cuts = []
    for c in tilde_h.cuts:
        f = lambda y: y + eps if y >= lam else y * (1.0 + eps / lam)
        cuts.append((c.x, f(c.y_bottom), f(c.y_top)))
    h_n = Profile(tilde_h.interval, tuple(zip(xs, ny)), tuple(cuts))
    return VolumeCorrection(h_n, float(eps), float(lam), float(mu))


# ----------------------------------------------------------------------
# displacements


def shift_displacement(u: fem.Displacement, eps: float, y0: float | None = None,
                       target_mesh: fem.Mesh | None = None) -> fem.Displacement:
    """Translate ``u`` upward by ``eps`` above a buffer strip starting at ``y0``.

    ``u_n(x, y) = u(x, y - eps)`` above ``y0 + eps``, the trace ``u(x, y0)``
    on the strip and ``u`` below it, sampled at the nodes of ``target_mesh``.
    """
    mesh = u.mesh
    if y0 is None:
        y0 = -0.5 * mesh.depth
    if not y0 < -eps:
        raise RelaxationError(f"buffer line y0={y0} must lie below -eps={-eps}")
    target = mesh if target_mesh is None else target_mesh
    if eps == 0.0 and target is mesh:
        return u
    V = target.vertices
    y = V[:, 1]
    ys = np.where(y > y0 + eps, y - eps, np.where(y > y0, y0, y))
    vals = u.evaluate(np.column_stack([V[:, 0], ys]))
    return fem.Displacement(target, vals, {"shift": eps, "y0": y0})


def _trace_strain(u: fem.Displacement, y0: float):
    """Breakpoints and per-piece strain vectors of ``x -> u(x, y0)``."""
    mesh = u.mesh
    V = mesh.vertices
    e = mesh.edges
    ya, yb = V[e[:, 0], 1], V[e[:, 1], 1]
    xs = list(V[np.abs(V[:, 1] - y0) < 1e-14, 0])
    cross = (ya - y0) * (yb - y0) < 0
    t = (y0 - ya[cross]) / (yb[cross] - ya[cross])
    xs += list(V[e[cross, 0], 0] + t * (V[e[cross, 1], 0] - V[e[cross, 0], 0]))
    a, b = mesh.interval
    xs = np.unique(np.clip(np.array(xs + [a, b]), a, b))
    vals = u.evaluate(np.column_stack([xs, np.full_like(xs, y0)]))
    du = np.diff(vals, axis=0) / np.diff(xs)[:, None]
    strain = np.column_stack([du[:, 0], np.zeros(len(du)), fem.SQRT2 * 0.5 * du[:, 1]])
    return np.diff(xs), strain


def shifted_bulk_energy(u: fem.Displacement, eps: float, h_n: Profile, m: Materials,
                        y0: float | None = None) -> float:
    """Exact sharp-mode bulk energy of the shifted field on ``Omega_{h_n}``.

    The strain of ``u_n`` is that of ``u`` at ``(x, y - eps)`` above the
    buffer strip, so each triangle of ``u`` is clipped against
    ``Omega_{h_n} - eps e_2`` and split at ``y = -eps``, where the material
    and the mismatch switch.  This avoids re-interpolating ``u`` onto thin
    elements of the new mesh.
    """
    mesh = u.mesh
    if y0 is None:
        y0 = -0.5 * mesh.depth
    if not y0 < -eps:
        raise RelaxationError(f"buffer line y0={y0} must lie below -eps={-eps}")
    a, b = h_n.a, h_n.b
    top = np.column_stack([h_n.xs, h_n.ys - eps])
    region = shapely.Polygon(np.vstack([top, [(b, y0), (a, y0)]])).buffer(0)
    big = 10.0 * (abs(y0) + h_n.max_height() + 1.0)
    film = shapely.box(a - 1, -eps, b + 1, big)
    sub = shapely.box(a - 1, y0, b + 1, -eps)
    low = shapely.box(a - 1, -big, b + 1, y0)
    tris = shapely.polygons(mesh.vertices[mesh.triangles])
    a_f = shapely.area(shapely.intersection(tris, region.intersection(film)))
    a_s = shapely.area(shapely.intersection(tris, region.intersection(sub)))
    a_l = shapely.area(shapely.intersection(tris, low))

    e = u.strain_vectors()
    e_star = np.array([m.e0, 0.0, 0.0])
    ef = e - e_star
    w_f = 0.5 * np.einsum("mi,ij,mj->m", ef, m.C_f, ef)
    w_s = 0.5 * np.einsum("mi,ij,mj->m", e, m.C_s, e)
    total = float(np.sum(a_f * w_f + (a_s + a_l) * w_s))
    if eps > 0:
        w, st = _trace_strain(u, y0)
        total += eps * float(np.sum(w * 0.5 * np.einsum("mi,ij,mj->m", st, m.C_s, st)))
    return total


# ----------------------------------------------------------------------
# dewetting lift


def _clipped_area(xs, ys, t):
    xs, ys = _split_at_level(xs, ys, t)
    yc = np.minimum(ys, t)
    return float((0.5 * (yc[:-1] + yc[1:]) * np.diff(xs)).sum())


def dewetting_lift(p: Profile, eps: float, tol: float = 1e-14):
    """``h_n = min(h + eps, t)`` with ``t`` fixed by the film area (bisection)."""
    if not p.is_lipschitz:
        raise RelaxationError("dewetting lift expects a Lipschitz profile")
    if not eps > 0:
        raise RelaxationError("eps must be positive")
    target = p.film_area()
    if target <= 0:
        raise RelaxationError("degenerate input: zero film area leaves no admissible level t")
    xs, ys = p.xs, p.ys + eps
    lo, hi = 0.0, float(ys.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _clipped_area(xs, ys, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    nx, ny = _split_at_level(xs, ys, t)
    return Profile.from_points(nx, np.minimum(ny, t)), float(t)


# ----------------------------------------------------------------------
# Vitali probe


@dataclass(frozen=True)
class VitaliReport:
    bound: float
    mu_values: np.ndarray
    slope: float
    decays: bool


def vitali_lower_bound(h_seq, lambda_seq, n_seq=None, start: int = 0,
                       slope_tol: float = 1e-3) -> VitaliReport:
    """Empirical lower bound of the level functional along a sequence.

    ``slope`` is the least-squares slope of ``mu_n`` against ``log2 n``;
    ``decays`` flags a negative trend or a vanishing bound.
    """
    h_seq, lambda_seq = list(h_seq), list(lambda_seq)
    if not h_seq:
        raise RelaxationError("empty sequence")
    if len(h_seq) != len(lambda_seq):
        raise RelaxationError("one lambda per profile required")
    mus = np.array([mu_functional(h, lam) for h, lam in zip(h_seq, lambda_seq)])
    n = np.arange(1, len(mus) + 1) if n_seq is None else np.asarray(n_seq, dtype=float)
    tail = mus[start:]
    bound = float(tail.min())
    if len(tail) > 1:
        slope = float(np.polyfit(np.log2(n[start:]), tail, 1)[0])
    else:
        slope = 0.0
    return VitaliReport(bound, mus, slope, bool(bound <= 0 or slope < -slope_tol))


# ----------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class RecoveryStep:
    n: int
    L: float
    tilde_h: Profile
    h_n: Profile
    eps_n: float
    lambda_n: float
    mu_n: float
    lift_eps: float = 0.0
    t_n: float = float("nan")
    corrected: Profile | None = None  # before the lift

    @property
    def sigma(self) -> float:
        s = self.eps_n / self.lambda_n if self.lambda_n > 0 else 0.0
        return s * s + 2.0 * s

    @property
    def shift(self) -> float:
        return self.eps_n + self.lift_eps


@dataclass(frozen=True)
class RecoverySequence:
    target: Profile
    steps: list = field(default_factory=list)
    r: float = 0.5
    mode: str = "wetting"


def resolve_mode(mode: str, m: Materials | None) -> str:
    if mode == "auto":
        if m is None:
            raise RelaxationError("mode 'auto' needs materials")
        return "dewetting" if m.lift_regime else "wetting"
    if mode not in ("wetting", "dewetting"):
        raise RelaxationError(f"unknown mode {mode!r}")
    return mode


def recovery_sequence(target: Profile, steps: int = 8, r: float = 0.5, mode: str = "wetting",
                      m: Materials | None = None, L0: float | None = None,
                      lift_scale: float = 1.0) -> RecoverySequence:
    """Approximants, volume correction and (dewetting) lift for ``L_k = 2^k L0``.

    In the dewetting regime each corrected profile is lifted by
    ``lift_scale * lambda_n``, so the lift vanishes along the sequence.
    """
    mode = resolve_mode(mode, m)
    area = target.film_area()
    out = []
    for k, L in enumerate(default_schedule(target, steps, L0)):
        th = lipschitz_approximant(target, L)
        h_n, eps, lam, mu = volume_correct(th, area, r)
        corrected, lift, t_n = h_n, 0.0, np.nan
        if mode == "dewetting":
            lift = lift_scale * (lam if lam > 0 else 1.0 / L)
            h_n, t_n = dewetting_lift(h_n, lift)
        out.append(RecoveryStep(k, L, th, h_n, eps, lam, mu, lift, t_n, corrected))
    return RecoverySequence(target, out, r, mode)


def surface_gap(step: RecoveryStep, m: Materials):
    """Both sides of the surface control ``|S(tilde h) - S(h_n)| <= gamma_f sigma H^1 / 2``.

    Uses the volume-corrected profile before any lift.
    """
    h_n = step.corrected if step.corrected is not None else step.h_n
    lhs = abs(surface_phi(step.tilde_h, m) - surface_phi(h_n, m))
    rhs = 0.5 * m.gamma_f * step.sigma * h_n.boundary_length()
    return lhs, rhs


def step_energies(seq: RecoverySequence, step: RecoveryStep, m: Materials,
                  u: fem.Displacement | None = None):
    """``(F0(u_n, h_n), F(u, h))`` for one step; ``u=None`` means zero displacement."""
    if u is None:
        return eval_F0(None, step.h_n, m), eval_F(None, seq.target, m)
    bulk = shifted_bulk_energy(u, step.shift, step.h_n, m)
    return eval_F0(None, step.h_n, m, bulk=bulk), eval_F(u, seq.target, m)
