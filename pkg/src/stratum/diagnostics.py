"""Geometric and variational certificates for film configurations.

* ``internal_ball_check``: every boundary point is touched from inside the
  film/substrate region by a disk of radius ``rho`` meeting the boundary only
  there (up to the sampling tolerance).  Disks may overhang the lateral sides
  of the strip.
* ``isoperimetric_probe``: arc/chord ratio and enclosed area for a chord
  between two boundary points.
* ``gamma_sweep``: gap between the transition-layer energy and the sharp
  relaxed energy along a sequence of layer widths.
* ``classify_boundary``: regular / cusp / cut partition with local graph
  representations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fem
from .energy import eval_F, eval_Fdelta
from .materials import Materials, TransitionParams
from .profile import Profile, decompose
from .relaxation import dewetting_lift, shift_displacement


class DiagnosticsError(ValueError):
    pass


CONE_DIRECTIONS = 32
CIRCLE_DIRECTIONS = 720


# ----------------------------------------------------------------------
# polyline helpers


def _unit_dirs(poly: np.ndarray):
    d = np.diff(poly, axis=0)
    L = np.hypot(d[:, 0], d[:, 1])
    return d / L[:, None], L


def _cw(v: np.ndarray) -> np.ndarray:
    """Rotate clockwise: (x, y) -> (y, -x); turns a tangent into the inward normal."""
    return np.column_stack([v[:, 1], -v[:, 0]])


def _rotate(v: np.ndarray, ang: np.ndarray) -> np.ndarray:
    c, s = np.cos(ang), np.sin(ang)
    return np.column_stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]])


def polyline_distance(points, poly, chunk: int = 4096) -> np.ndarray:
    """Exact Euclidean distance from each point to a polyline."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    A, B = poly[:-1], poly[1:]
    AB = B - A
    den = np.maximum(np.einsum("ij,ij->i", AB, AB), 1e-300)
    out = np.empty(len(P))
    for s in range(0, len(P), chunk):
        Q = P[s:s + chunk, None, :]
        t = np.clip(np.einsum("mij,ij->mi", Q - A, AB) / den, 0.0, 1.0)
        D = Q - (A + t[..., None] * AB)
        out[s:s + chunk] = np.sqrt(np.einsum("mij,mij->mi", D, D).min(axis=1))
    return out


@dataclass(frozen=True)
class BoundarySample:
    """Boundary points with their inward normal cones.

    The cone at point ``k`` is the arc from ``normal[k]`` rotated
    counter-clockwise by ``turn[k]`` (negative turns rotate clockwise).
    """
    points: np.ndarray
    normal: np.ndarray
    turn: np.ndarray

    def __len__(self):
        return len(self.points)

    def directions(self, n_dirs: int = CONE_DIRECTIONS, widen: float = 0.0) -> np.ndarray:
        """``(len, n_dirs, 2)`` unit directions spanning each cone.

        ``widen`` extends every cone by that angle on both sides.
        """
        sgn = np.where(self.turn >= 0.0, 1.0, -1.0)
        start = -sgn * widen
        stop = self.turn + sgn * widen
        frac = np.linspace(0.0, 1.0, n_dirs)
        ang = start[:, None] + (stop - start)[:, None] * frac[None, :]
        c, s = np.cos(ang), np.sin(ang)
        nx, ny = self.normal[:, 0][:, None], self.normal[:, 1][:, None]
        return np.stack([c * nx - s * ny, s * nx + c * ny], axis=-1)


def boundary_samples(p: Profile, spacing: float) -> BoundarySample:
    """Vertices of the boundary polyline plus points every ``spacing`` along each piece."""
    poly = p.boundary_polyline()
    d, L = _unit_dirs(poly)
    n = _cw(d)
    pts, nrm, turn = [], [], []
    for i in range(len(poly)):
        if i == 0:
            pts.append(poly[0]); nrm.append(n[0]); turn.append(0.0)
        elif i == len(poly) - 1:
            pts.append(poly[-1]); nrm.append(n[-1]); turn.append(0.0)
        else:
            d0, d1 = d[i - 1], d[i]
            cross = d0[0] * d1[1] - d0[1] * d1[0]
            dot = float(d0 @ d1)
            # a slit foot reverses direction: the cone is the lower half-turn
            th = np.pi if dot <= -1.0 + 1e-12 else float(np.arctan2(cross, dot))
            pts.append(poly[i]); nrm.append(n[i - 1]); turn.append(th)
        if i < len(poly) - 1:
            k = int(np.ceil(L[i] / spacing))
            for j in range(1, k):
                pts.append(poly[i] + d[i] * L[i] * j / k)
                nrm.append(n[i]); turn.append(0.0)
    return BoundarySample(np.array(pts), np.array(nrm), np.array(turn))


# ----------------------------------------------------------------------
# internal ball


@dataclass(frozen=True)
class BallCertificate:
    rho0: float
    witnesses: list
    violations: list
    sample_spacing: float
    rho_tested: float = float("nan")
    tol: float = float("nan")
    sweep: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.violations and self.rho0 > 0

    def decisions(self) -> list:
        """``(z, accepted)`` pairs, witnesses first."""
        flags = [(tuple(z), True) for z, _ in self.witnesses]
        flags += [(tuple(z), False) for z, _ in self.violations]
        return flags

    def summary(self) -> str:
        lines = [
            f"rho0 = {self.rho0:.17g}",
            f"rho_tested = {self.rho_tested:.17g}",
            f"sample_spacing = {self.sample_spacing:.17g}",
            f"tol = {self.tol:.17g}",
            f"samples = {len(self.witnesses) + len(self.violations)}",
            f"witnesses = {len(self.witnesses)}",
            f"violations = {len(self.violations)}",
        ]
        for z, best in self.violations[:20]:
            lines.append(f"violation at ({z[0]:.17g}, {z[1]:.17g}) best_rho = {best:.17g}")
        for rho, ok in self.sweep:
            lines.append(f"sweep rho = {rho:.17g} {'pass' if ok else 'fail'}")
        return "\n".join(lines)


def _center_inside(p: Profile, C: np.ndarray) -> np.ndarray:
    # the ball may overhang the strip; test its trace inside the strip
    eta = 1e-12 * p.interval.length
    x = np.clip(C[:, 0], p.a + eta, p.b - eta)
    return p.contains(x, C[:, 1])


def direction_slack(rho: float, tol: float) -> float:
    """Tilt off the normal that still keeps clearance ``rho - tol`` from a flat boundary."""
    return float(np.arccos(max(1.0 - tol / rho, -1.0)))


def _clearance(p: Profile, poly, Z, dirs, r):
    """Distance to the boundary of the centers ``Z + r dirs`` (zero when outside)."""
    C = Z[:, None, :] + r * dirs
    flat = C.reshape(-1, 2)
    d = polyline_distance(flat, poly)
    d[~_center_inside(p, flat)] = 0.0
    return d.reshape(C.shape[:2]), C


def _best_radius(p, poly, z, dirs, rho, tol, iters: int = 30) -> float:
    lo, hi = 0.0, rho
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        d, _ = _clearance(p, poly, z[None, :], dirs[None], mid)
        if np.any(d >= mid - tol * mid / rho):
            lo = mid
        else:
            hi = mid
    return lo


def internal_ball_check(p: Profile, rho: float, spacing: float, n_dirs: int = CONE_DIRECTIONS,
                        tol: float | None = None, circle_dirs: int = CIRCLE_DIRECTIONS) -> BallCertificate:
    """Check the internal-ball condition at radius ``rho`` on boundary samples.

    A sample ``z`` passes when some direction ``nu`` in its inward normal cone
    gives a center ``z + rho nu`` inside the region at distance at least
    ``rho - tol`` from the closed boundary; ``tol`` defaults to ``spacing / 2``.
    The cone, widened by the tilt ``arccos(1 - tol/rho)`` that a flat
    boundary tolerates, is searched first.  Samples it does not certify get a
    full turn of ``circle_dirs`` directions, since near corners and concave
    pieces the tolerance admits centers off the cone.
    """
    if not rho > 0:
        raise DiagnosticsError("rho > 0 violated")
    if not 0 < spacing <= rho / 4:
        raise DiagnosticsError(
            f"spacing {spacing} too coarse for rho {rho}: need spacing <= rho/4")
    tol = 0.5 * spacing if tol is None else tol
    poly = p.boundary_polyline()
    S = boundary_samples(p, spacing)
    dirs = S.directions(n_dirs, direction_slack(rho, tol))
    d, C = _clearance(p, poly, S.points, dirs, rho)
    ang = np.linspace(0.0, 2.0 * np.pi, circle_dirs, endpoint=False)
    circle = np.column_stack([np.cos(ang), np.sin(ang)])
    witnesses, violations = [], []
    for k in range(len(S)):
        z = tuple(map(float, S.points[k]))
        cand, dk = C[k], d[k]
        if dk.max() < rho - tol:
            # near corners and concave pieces the best center can sit off the cone
            dc, cc = _clearance(p, poly, S.points[k][None, :], circle[None], rho)
            cand, dk = cc[0], dc[0]
        j = int(np.argmax(dk))
        if dk[j] >= rho - tol:
            witnesses.append((z, tuple(map(float, cand[j]))))
        else:
            violations.append((z, _best_radius(p, poly, S.points[k], circle, rho, tol)))
    rho0 = rho if not violations else 0.0
    return BallCertificate(rho0, witnesses, violations, spacing, rho, tol)


def dyadic_radii(p: Profile, spacing: float) -> list:
    """Dyadic radii ``(b - a) / 2^k`` from ``(b - a)/2`` down to ``spacing``."""
    out, r = [], 0.5 * p.interval.length
    while r >= spacing:
        out.append(r)
        r *= 0.5
    return out


def internal_ball_sweep(p: Profile, spacing: float, n_dirs: int = CONE_DIRECTIONS) -> BallCertificate:
    """Largest dyadic radius passing every sample.

    Each radius is sampled at ``min(spacing, rho/4)`` so the check stays
    sound; the returned certificate is the one of the largest passing radius
    (or of the smallest radius tried when none passes, with ``rho0 = 0``).
    """
    tried = []
    last = None
    for r in dyadic_radii(p, spacing):
        cert = internal_ball_check(p, r, min(spacing, r / 4), n_dirs)
        tried.append((r, cert.passed))
        last = cert
        if cert.passed:
            break
    if last is None:
        raise DiagnosticsError("no dyadic radius in [spacing, (b-a)/2]")
    return BallCertificate(last.rho0, last.witnesses, last.violations, last.sample_spacing,
                           last.rho_tested, last.tol, tuple(tried))


# ----------------------------------------------------------------------
# isoperimetric probe


@dataclass(frozen=True)
class IsoperimetricProbe:
    theta: float
    area: float
    slack: float
    arc_length: float
    chord_length: float


def _arclength_locate(poly: np.ndarray, P: np.ndarray):
    """Arc-length parameter of the polyline point nearest to ``P``."""
    d, L = _unit_dirs(poly)
    s0 = np.concatenate([[0.0], np.cumsum(L)])
    t = np.clip(((P - poly[:-1]) * d).sum(axis=1), 0.0, L)
    foot = poly[:-1] + t[:, None] * d
    dist = np.hypot(*(foot - P).T)
    i = int(np.argmin(dist))
    return s0[i] + t[i], float(dist[i]), s0


def _sub_polyline(poly, s0, sa, sb):
    d, _ = _unit_dirs(poly)

    def at(s):
        i = min(max(int(np.searchsorted(s0, s, side="right")) - 1, 0), len(poly) - 2)
        return poly[i] + (s - s0[i]) * d[i]

    inner = poly[(s0 > sa) & (s0 < sb)]
    return np.vstack([at(sa), inner, at(sb)])


def isoperimetric_probe(p: Profile, P1, P2, tol: float = 1e-9, n_check: int = 2001) -> IsoperimetricProbe:
    """Region between the boundary arc from ``P1`` to ``P2`` and the chord.

    Returns ``theta = arc/chord``, the enclosed area (shoelace) and the slack
    ``(theta + 1) chord / (2 sqrt(pi)) - sqrt(area)`` of the plane isoperimetric
    inequality.
    """
    poly = p.boundary_polyline()
    P1, P2 = np.asarray(P1, dtype=float), np.asarray(P2, dtype=float)
    s1, e1, s0 = _arclength_locate(poly, P1)
    s2, e2, _ = _arclength_locate(poly, P2)
    scale = max(1.0, np.abs(poly).max())
    if e1 > tol * scale or e2 > tol * scale:
        raise DiagnosticsError("chord end points must lie on the boundary")
    chord = float(np.hypot(*(P2 - P1)))
    if chord == 0.0:
        raise DiagnosticsError("chord end points coincide")
    if s1 > s2:
        s1, s2 = s2, s1
        P1, P2 = P2, P1
    # open chord must stay in the closure of the region
    t = np.linspace(0.0, 1.0, n_check)[1:-1]
    Q = P1 + t[:, None] * (P2 - P1)
    if not np.all(p.contains(Q[:, 0], Q[:, 1], closed=True)):
        raise DiagnosticsError("chord exits the film region")
    arc_pts = _sub_polyline(poly, s0, s1, s2)
    arc = s2 - s1
    x, y = arc_pts[:, 0], arc_pts[:, 1]
    area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    theta = arc / chord
    slack = (theta + 1.0) * chord / (2.0 * np.sqrt(np.pi)) - np.sqrt(area)
    return IsoperimetricProbe(float(theta), float(area), float(slack), float(arc), chord)


# ----------------------------------------------------------------------
# Gamma sweep


@dataclass(frozen=True)
class SweepRow:
    delta: float
    F_delta: float
    F: float
    gap: float
    lift_eps: float = 0.0


@dataclass(frozen=True)
class GammaSweep:
    rows: tuple
    lifted: bool

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    @property
    def monotone(self) -> bool:
        g = self.gaps
        return bool(np.all(np.diff(g) <= 1e-12 * max(1.0, g.max(initial=0.0))))

    def table(self) -> list:
        return [(r.delta, r.F_delta, r.F, r.gap, r.lift_eps) for r in self.rows]


def _lift_wanted(lift, p: Profile, m: Materials) -> bool:
    if lift in (True, "on", "always"):
        return True
    if lift in (False, "off", "never", None):
        return False
    if lift == "auto":
        return m.lift_regime and p.min_height() == 0.0
    raise DiagnosticsError(f"unknown lift option {lift!r}")


def gamma_sweep(u, p: Profile, m: Materials, deltas, f: str = "atan", lift="auto",
                lift_scale: float = 1.0) -> GammaSweep:
    """Rows ``(delta, F_delta, F, |F_delta - F|)`` at fixed ``(u, p)``.

    With the lift active the transition energy is evaluated on the recovery
    pair: ``p`` lifted by ``eps = lift_scale sqrt(delta)`` at fixed area and
    ``u`` shifted up by the same amount.
    """
    deltas = [float(d) for d in deltas]
    if not p.is_lipschitz:
        raise DiagnosticsError("gamma sweep expects a Lipschitz profile")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise DiagnosticsError("deltas must be strictly decreasing")
    use_lift = _lift_wanted(lift, p, m)
    F = eval_F(u, p, m).total
    rows = []
    for d in deltas:
        t = TransitionParams(d, f)
        if use_lift:
            eps = lift_scale * np.sqrt(d)
            q, _ = dewetting_lift(p, eps)
            if u is None:
                v = None
            else:
                mesh = fem.build_mesh(q, u.mesh.depth, u.mesh.resolution)
                v = shift_displacement(u, eps, target_mesh=mesh)
            Fd = eval_Fdelta(v, q, m, t).total
        else:
            eps = 0.0
            Fd = eval_Fdelta(u, p, m, t).total
        rows.append(SweepRow(d, Fd, F, abs(Fd - F), eps))
    return GammaSweep(tuple(rows), use_lift)


# ----------------------------------------------------------------------
# boundary classification


@dataclass(frozen=True)
class LocalGraph:
    """Graph of the boundary near ``z`` over the axis ``v1`` with Lipschitz constant ``L``."""
    z: tuple
    v1: tuple
    lipschitz: float


@dataclass(frozen=True)
class CutNeighbourhood:
    """Two-sided representation around the top of a cut, with ``v1 = -e2``.

    ``g1 <= g2`` are sampled at depths ``s``; ``tangent`` flags
    ``g1(0) = g2(0) = 0`` with vanishing one-sided derivatives.
    """
    z: tuple
    s: np.ndarray = field(repr=False)
    g1: np.ndarray = field(repr=False)
    g2: np.ndarray = field(repr=False)
    slope1: float = 0.0
    slope2: float = 0.0
    tangent: bool = False


@dataclass(frozen=True)
class BoundaryClassification:
    regular: list
    cusp: list
    cut: list
    local_lipschitz: list
    cut_neighbourhoods: list

    @property
    def regular_length(self) -> float:
        return sum(float(np.hypot(*np.diff(pl, axis=0).T).sum()) for pl in self.regular)

    @property
    def cut_length(self) -> float:
        return sum(float(np.hypot(*np.diff(s, axis=0).T).sum()) for s in self.cut)

    @property
    def total_length(self) -> float:
        return self.regular_length + self.cut_length


def _split_at_points(pl: np.ndarray, pts) -> list:
    """Split a polyline at the given points (inserted when not already vertices)."""
    pieces, cur = [], [pl[0]]
    marks = [np.asarray(c, dtype=float) for c in pts]

    def is_mark(q):
        return any(np.allclose(q, c, rtol=0, atol=1e-12) for c in marks)

    for i in range(1, len(pl)):
        A, B = pl[i - 1], pl[i]
        AB = B - A
        den = AB @ AB
        inner = []
        for c in marks:
            t = (c - A) @ AB / den
            if 0 < t < 1 and np.hypot(*(A + t * AB - c)) < 1e-12:
                inner.append((t, c))
        for _, c in sorted(inner, key=lambda e: e[0]):
            cur.append(c)
            pieces.append(np.array(cur))
            cur = [c]
        cur.append(B)
        if is_mark(B) and i < len(pl) - 1:
            pieces.append(np.array(cur))
            cur = [B]
    pieces.append(np.array(cur))
    return [q for q in pieces if len(q) > 1]


def _local_graph(pl: np.ndarray, i: int, window: float) -> LocalGraph:
    d, L = _unit_dirs(pl)
    s0 = np.concatenate([[0.0], np.cumsum(L)])
    si = s0[i]
    lo, hi = max(0.0, si - window), min(s0[-1], si + window)
    sub = _sub_polyline(pl, s0, lo, hi)
    chord = sub[-1] - sub[0]
    v1 = chord / np.hypot(*chord)
    dd, LL = _unit_dirs(sub)
    dd = dd[LL > 0]
    cos = dd @ v1
    if np.any(cos <= 1e-12):
        lip = np.inf
    else:
        sin = dd[:, 0] * v1[1] - dd[:, 1] * v1[0]
        lip = float(np.max(np.abs(sin) / cos))
    return LocalGraph(tuple(pl[i]), tuple(v1), lip)


def _cut_neighbourhood(p: Profile, c, window: float, n: int = 64) -> CutNeighbourhood:
    x0, y0 = c.x, c.y_top
    w = min(window, c.height)
    s = np.linspace(w / n, w, n)
    # frame v1 = -e2, v2 = e1: depth s below the top, offset t = x - x0
    t = np.linspace(-w, w, 8 * n + 1)
    g1, g2 = np.zeros(n), np.zeros(n)
    for k, sk in enumerate(s):
        inside = p.contains(x0 + t, np.full_like(t, y0 - sk))
        inside[t == 0.0] = False
        left = t[(t < 0) & ~inside]
        right = t[(t > 0) & ~inside]
        g1[k] = left.min() if len(left) else 0.0
        g2[k] = right.max() if len(right) else 0.0
    # nothing of the region above the top inside the window
    above = p.contains(x0 + t, np.full_like(t, y0 + w / n))
    slope1 = float(abs(g1[0]) / s[0])
    slope2 = float(abs(g2[0]) / s[0])
    tangent = (not np.any(above)) and slope1 <= 1e-9 and slope2 <= 1e-9
    return CutNeighbourhood((x0, y0), s, g1, g2, slope1, slope2, bool(tangent))


def classify_boundary(p: Profile, window: float | None = None) -> BoundaryClassification:
    """Partition the boundary into regular arcs, cusp points and cut segments.

    Regular arcs are the graph and jump pieces split at the cusps; each vertex
    gets a local graph axis (the chord of an arc-length window) and the
    Lipschitz constant of the boundary over it.
    """
    window = p.interval.length / 64 if window is None else window
    dec = decompose(p)
    cusp = list(dec.cusp_points)
    regular = []
    for pl in dec.tilde_gamma:
        regular += _split_at_points(np.asarray(pl, dtype=float), cusp)
    local = []
    for pl in regular:
        for i in range(len(pl)):
            local.append(_local_graph(pl, i, window))
    cut = [np.asarray(s, dtype=float) for s in dec.cut_part]
    hoods = [_cut_neighbourhood(p, c, window) for c in p.cuts]
    return BoundaryClassification(regular, cusp, cut, local, hoods)
