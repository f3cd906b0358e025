"""Piecewise-linear film profiles with jumps and vertical cuts.

A profile is stored as a list of knots ``(x, y)`` with non-decreasing ``x``.
A repeated abscissa encodes a jump: the first knot of the pair is the limit
from the left, the second the limit from the right.  The pointwise value at a
jump is the smaller of the two limits, so every profile is lower
semicontinuous by construction.  Cuts are vertical slits ``(x, y_bottom,
y_top)`` hanging from the lower envelope ``y_top = h^-(x)`` down to the
pointwise value ``h(x) = y_bottom``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

S_MAX = 1e6
GEOM_TOL = 1e-12


class ProfileError(ValueError):
    """Raised for profiles that violate the admissibility invariants."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (self.b > self.a > 0):
            raise ProfileError(f"interval requires b > a > 0, got a={self.a}, b={self.b}")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Cut:
    x: float
    y_bottom: float
    y_top: float

    @property
    def height(self) -> float:
        return self.y_top - self.y_bottom


@dataclass(frozen=True)
class Jump:
    x: float
    y_low: float
    y_high: float
    y_left: float
    y_right: float

    @property
    def height(self) -> float:
        return self.y_high - self.y_low


@dataclass(frozen=True, eq=False)
class Profile:
    """Admissible height profile on ``[a, b]``.

    Parameters
    ----------
    interval : Interval
    knots : sequence of (x, y)
        Non-decreasing in x, first knot at ``a``, last at ``b``.  An interior
        abscissa may appear twice (left limit, then right limit) to encode a
        jump.
    cuts : sequence of (x, y_bottom, y_top) or Cut
    """

    interval: Interval
    knots: tuple
    cuts: tuple = field(default=())

    def __post_init__(self):
        knots = tuple((float(x), float(y)) for x, y in self.knots)
        cuts = tuple(c if isinstance(c, Cut) else Cut(*map(float, c)) for c in self.cuts)
        cuts = tuple(sorted(cuts, key=lambda c: c.x))
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "cuts", cuts)
        self._validate()

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def flat(cls, a: float, b: float, c: float) -> "Profile":
        return cls(Interval(a, b), ((a, c), (b, c)))

    @classmethod
    def from_points(cls, xs, ys, cuts=()) -> "Profile":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        return cls(Interval(float(xs[0]), float(xs[-1])), tuple(zip(xs, ys)), tuple(cuts))

    @classmethod
    def from_function(cls, fun: Callable, a: float, b: float, n: int = 64) -> "Profile":
        xs = np.linspace(a, b, n + 1)
        return cls.from_points(xs, [max(float(fun(x)), 0.0) for x in xs])

    def with_knots(self, knots, cuts=None) -> "Profile":
        return Profile(self.interval, tuple(knots), self.cuts if cuts is None else tuple(cuts))

    def _validate(self):
        a, b = self.interval.a, self.interval.b
        if len(self.knots) < 2:
            raise ProfileError("a profile needs at least two knots")
        xs, ys = self.xs, self.ys
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise ProfileError("knots must be finite")
        if abs(xs[0] - a) > GEOM_TOL or abs(xs[-1] - b) > GEOM_TOL:
            raise ProfileError("first and last knots must sit at the interval endpoints")
        if np.any(ys < 0):
            raise ProfileError("heights must be nonnegative")
        dx = np.diff(xs)
        if np.any(dx < 0):
            raise ProfileError("knot abscissae must be non-decreasing")
        dup = np.flatnonzero(dx == 0)
        if dup.size:
            if dup[0] == 0 or dup[-1] == len(xs) - 2:
                raise ProfileError("jumps must lie strictly inside (a, b)")
            if np.any(np.diff(dup) == 1):
                raise ProfileError("an abscissa may appear at most twice")
            if np.any(ys[dup] == ys[dup + 1]):
                raise ProfileError("a repeated knot must carry distinct left/right limits")
        seen = set()
        for c in self.cuts:
            if not (a < c.x < b):
                raise ProfileError(f"cut at x={c.x} must lie strictly inside (a, b)")
            if c.x in seen:
                raise ProfileError(f"two cuts at x={c.x}")
            seen.add(c.x)
            if not (0 <= c.y_bottom < c.y_top):
                raise ProfileError(f"cut at x={c.x} needs 0 <= y_bottom < y_top")
            h_minus, _ = self.envelopes(c.x)
            if abs(h_minus - c.y_top) > 1e-9 * max(1.0, c.y_top):
                raise ProfileError(
                    f"cut at x={c.x}: y_top={c.y_top} must equal the lower envelope {h_minus}")

    # ------------------------------------------------------------------
    # raw data

    @cached_property
    def xs(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    @cached_property
    def ys(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots])

    @cached_property
    def key(self) -> str:
        """Content hash, used to tie meshes and displacements to a profile."""
        data = repr((self.interval.a, self.interval.b, self.knots,
                     tuple((c.x, c.y_bottom, c.y_top) for c in self.cuts)))
        return hashlib.sha1(data.encode()).hexdigest()

    @property
    def a(self) -> float:
        return self.interval.a

    @property
    def b(self) -> float:
        return self.interval.b

    @cached_property
    def jumps(self) -> tuple:
        xs, ys = self.xs, self.ys
        out = []
        for i in np.flatnonzero(np.diff(xs) == 0):
            yl, yr = ys[i], ys[i + 1]
            out.append(Jump(xs[i], min(yl, yr), max(yl, yr), yl, yr))
        return tuple(out)

    @property
    def jump_marks(self) -> list:
        return [(j.x, j.y_low, j.y_high) for j in self.jumps]

    @property
    def cut_marks(self) -> list:
        return [(c.x, c.y_bottom, c.y_top) for c in self.cuts]

    @property
    def is_lipschitz(self) -> bool:
        return not self.jumps and not self.cuts

    @cached_property
    def segments(self) -> np.ndarray:
        """Graph pieces as rows ``(x0, y0, x1, y1)``."""
        xs, ys = self.xs, self.ys
        keep = np.diff(xs) > 0
        return np.column_stack([xs[:-1], ys[:-1], xs[1:], ys[1:]])[keep]

    @cached_property
    def breakpoints(self) -> np.ndarray:
        pts = set(self.xs.tolist()) | {c.x for c in self.cuts}
        return np.array(sorted(pts))

    def max_height(self) -> float:
        return float(self.ys.max())

    def min_height(self) -> float:
        lo = float(self.ys.min())
        if self.cuts:
            lo = min(lo, min(c.y_bottom for c in self.cuts))
        return lo

    def lipschitz_constant(self) -> float:
        s = self.segments
        if self.jumps or self.cuts:
            return np.inf
        return float(np.max(np.abs((s[:, 3] - s[:, 1]) / (s[:, 2] - s[:, 0]))))

    # ------------------------------------------------------------------
    # pointwise evaluation

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.a - GEOM_TOL) or np.any(x > self.b + GEOM_TOL):
            raise ProfileError(f"x outside [{self.a}, {self.b}]")
        return np.clip(x, self.a, self.b)

    def _interp(self, x, k0):
        xs, ys = self.xs, self.ys
        x0, x1 = xs[k0], xs[k0 + 1]
        t = (x - x0) / (x1 - x0)
        return ys[k0] + t * (ys[k0 + 1] - ys[k0])

    def left_limit(self, x):
        """h(x^-); at ``a`` the right limit is returned."""
        x = self._check_domain(x)
        xs = self.xs
        k = np.searchsorted(xs, x, side="left")
        k = np.clip(k, 1, len(xs) - 1)
        # at x == a use the first nondegenerate piece
        at_a = x <= xs[0]
        out = self._interp(x, k - 1)
        if np.any(at_a):
            out = np.where(at_a, self.ys[0], out)
        return out

    def right_limit(self, x):
        """h(x^+); at ``b`` the left limit is returned."""
        x = self._check_domain(x)
        xs = self.xs
        k = np.searchsorted(xs, x, side="right")
        k = np.clip(k, 1, len(xs) - 1)
        at_b = x >= xs[-1]
        out = self._interp(x, k - 1)
        if np.any(at_b):
            out = np.where(at_b, self.ys[-1], out)
        return out

    def envelopes(self, x):
        """Return ``(h^-(x), h^+(x))``, the liminf and limsup at ``x``."""
        hl = self.left_limit(x)
        hr = self.right_limit(x)
        lo, hi = np.minimum(hl, hr), np.maximum(hl, hr)
        if np.ndim(lo) == 0:
            return float(lo), float(hi)
        return lo, hi

    def value(self, x):
        """Lower semicontinuous pointwise value h(x)."""
        lo, _ = self.envelopes(x)
        lo = np.array(lo, dtype=float, copy=True)
        if self.cuts:
            xv = np.asarray(x, dtype=float)
            for c in self.cuts:
                lo = np.where(xv == c.x, c.y_bottom, lo)
        return float(lo) if lo.ndim == 0 else lo

    __call__ = value

    # ------------------------------------------------------------------
    # global quantities

    def graph_length(self) -> float:
        s = self.segments
        return float(np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1]).sum())

    def jump_length(self) -> float:
        return float(sum(j.height for j in self.jumps))

    def cut_length(self) -> float:
        return float(sum(c.height for c in self.cuts))

    def boundary_length(self) -> float:
        """H^1 of the graph Gamma_h (graph + jumps + cuts)."""
        return self.graph_length() + self.jump_length() + self.cut_length()

    def total_variation(self) -> float:
        s = self.segments
        return float(np.abs(s[:, 3] - s[:, 1]).sum() + self.jump_length()
                     + 2.0 * self.cut_length())

    def film_area(self) -> float:
        """|Omega_h^+| = integral of h over [a, b] (exact trapezoid sum)."""
        s = self.segments
        return float(((s[:, 1] + s[:, 3]) * (s[:, 2] - s[:, 0])).sum() / 2.0)

    def zero_set(self) -> list:
        """Projection of Z_h: list of closed intervals ``(x0, x1)``; points have x0 == x1."""
        out = []
        for x0, y0, x1, y1 in self.segments:
            if y0 == 0 and y1 == 0:
                out.append([x0, x1])
            elif y0 == 0:
                out.append([x0, x0])
            elif y1 == 0:
                out.append([x1, x1])
        for j in self.jumps:
            if j.y_low == 0:
                out.append([j.x, j.x])
        for c in self.cuts:
            if c.y_bottom == 0:
                out.append([c.x, c.x])
        out.sort()
        merged = []
        for lo, hi in out:
            if merged and lo <= merged[-1][1] + GEOM_TOL:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [tuple(m) for m in merged]

    def zero_measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.zero_set()))

    def boundary_polyline(self) -> np.ndarray:
        """Closure of Gamma_h as one oriented polyline from (a, h(a)) to (b, h(b)).

        The inward normal of each piece is its direction rotated clockwise.
        Cuts are traversed down their left side and back up their right side,
        so slit points appear twice.
        """
        xs, ys = self.xs, self.ys
        pending = list(self.cuts)
        pts = []
        n = len(xs)
        for i in range(n):
            x, y = xs[i], ys[i]
            while pending and pending[0].x < x:
                c = pending.pop(0)
                pts += [(c.x, c.y_top), (c.x, c.y_bottom), (c.x, c.y_top)]
            pts.append((x, y))
            if pending and pending[0].x == x and y == pending[0].y_top:
                c = pending.pop(0)
                pts += [(c.x, c.y_bottom), (c.x, c.y_top)]
        arr = np.array(pts, dtype=float)
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(np.diff(arr, axis=0) != 0, axis=1)
        return arr[keep]

    def sample_boundary(self, spacing: float) -> np.ndarray:
        return _sample_polyline(self.boundary_polyline(), spacing)

    def contains(self, px, py, closed: bool = False):
        """Membership in Omega_h (open subgraph) or its closure, inside the strip."""
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        inside_x = (px > self.a) & (px < self.b)
        xc = np.clip(px, self.a, self.b)
        if closed:
            _, hp = self.envelopes(xc)
            in_strip = (px >= self.a) & (px <= self.b)
            return in_strip & (py <= hp + GEOM_TOL)
        hv = self.value(xc)
        return inside_x & (py < hv)

    # ------------------------------------------------------------------

    def map_heights(self, fun: Callable[[np.ndarray], np.ndarray]) -> "Profile":
        """Apply an increasing map to every height (knots and cuts)."""
        ys = fun(self.ys.copy())
        cuts = [(c.x, float(fun(np.array(c.y_bottom))), float(fun(np.array(c.y_top))))
                for c in self.cuts]
        return Profile(self.interval, tuple(zip(self.xs, ys)), tuple(cuts))

    def shifted(self, c: float) -> "Profile":
        return self.map_heights(lambda y: y + c)

    def resample(self, xs: Sequence[float]) -> "Profile":
        """Continuous profile through the values of h at ``xs`` (jumps/cuts dropped)."""
        xs = np.asarray(xs, dtype=float)
        return Profile.from_points(xs, self.value(xs))


def _sample_polyline(poly: np.ndarray, spacing: float) -> np.ndarray:
    out = [poly[:1]]
    for p, q in zip(poly[:-1], poly[1:]):
        L = float(np.hypot(*(q - p)))
        n = max(1, int(np.ceil(L / spacing)))
        t = np.linspace(0.0, 1.0, n + 1)[1:, None]
        out.append(p + t * (q - p))
    return np.vstack(out)


# ----------------------------------------------------------------------
# boundary decomposition


@dataclass(frozen=True)
class BoundaryDecomposition:
    graph_part: list
    jump_part: list
    cut_part: list
    cusp_points: list
    tilde_gamma: list
    zero_set: list

    @staticmethod
    def _polyline_length(pl) -> float:
        pl = np.asarray(pl, dtype=float)
        return float(np.hypot(*np.diff(pl, axis=0).T).sum()) if len(pl) > 1 else 0.0

    @property
    def graph_length(self) -> float:
        return sum(self._polyline_length(p) for p in self.graph_part)

    @property
    def jump_length(self) -> float:
        return sum(self._polyline_length(s) for s in self.jump_part)

    @property
    def cut_length(self) -> float:
        return sum(self._polyline_length(s) for s in self.cut_part)

    @property
    def tilde_length(self) -> float:
        return sum(self._polyline_length(p) for p in self.tilde_gamma)

    @property
    def total_length(self) -> float:
        return self.graph_length + self.jump_length + self.cut_length


def decompose(p: Profile, s_max: float = S_MAX) -> BoundaryDecomposition:
    """Split Gamma_h into graph, jump and cut parts and locate the cusps."""
    xs, ys = p.xs, p.ys
    graph_part, current = [], [(xs[0], ys[0])]
    jump_part = []
    for i in range(1, len(xs)):
        if xs[i] == xs[i - 1]:
            graph_part.append(np.array(current))
            jump_part.append(np.array([(xs[i], ys[i - 1]), (xs[i], ys[i])]))
            current = [(xs[i], ys[i])]
        else:
            current.append((xs[i], ys[i]))
    graph_part.append(np.array(current))

    cut_part = [np.array([(c.x, c.y_bottom), (c.x, c.y_top)]) for c in p.cuts]

    cusps = [(j.x, j.y_low) for j in p.jumps]
    cusps += [(c.x, c.y_top) for c in p.cuts]
    seg = p.segments
    slopes = (seg[:, 3] - seg[:, 1]) / (seg[:, 2] - seg[:, 0])
    for k, (x0, y0, x1, y1) in enumerate(seg):
        # right derivative at the left end of a piece, left derivative at its right end
        if slopes[k] >= s_max:
            cusps.append((x0, y0))
        if slopes[k] <= -s_max:
            cusps.append((x1, y1))
    cusps = sorted(set((float(x), float(y)) for x, y in cusps))

    # Gamma-tilde: graph and jumps form one connected polyline
    tilde = np.column_stack([xs, ys])
    return BoundaryDecomposition(
        graph_part=graph_part,
        jump_part=jump_part,
        cut_part=cut_part,
        cusp_points=cusps,
        tilde_gamma=[tilde],
        zero_set=p.zero_set(),
    )


# ----------------------------------------------------------------------
# distances between profiles


def _same_interval(p: Profile, q: Profile):
    if abs(p.a - q.a) > GEOM_TOL or abs(p.b - q.b) > GEOM_TOL:
        raise ProfileError("profiles live on different intervals")


def symmetric_difference_area(p: Profile, q: Profile) -> float:
    """|Omega_p delta Omega_q| = integral of |h_p - h_q|, exact on the merged grid."""
    _same_interval(p, q)
    grid = np.union1d(p.breakpoints, q.breakpoints)
    x0, x1 = grid[:-1], grid[1:]
    # one-sided limits at the piece ends
    d0 = p.right_limit(x0) - q.right_limit(x0)
    d1 = p.left_limit(x1) - q.left_limit(x1)
    w = x1 - x0
    same = d0 * d1 >= 0
    out = np.where(same, 0.5 * w * np.abs(d0 + d1), 0.0)
    cross = ~same
    if np.any(cross):
        a0, a1 = np.abs(d0[cross]), np.abs(d1[cross])
        out[cross] = 0.5 * w[cross] * (a0 * a0 + a1 * a1) / (a0 + a1)
    return float(out.sum())


def hausdorff_complement_distance(p: Profile, q: Profile, spacing: float | None = None) -> float:
    """Hausdorff distance between the closed complements of Omega_p and Omega_q in the strip.

    The supremum of ``dist(., B)`` over an epigraph-like set ``A`` is attained on
    its lower boundary, so only boundary samples of ``A`` are tested.  Error is
    of the order of ``spacing``.
    """
    _same_interval(p, q)
    if spacing is None:
        spacing = 1e-4 * p.interval.length
    sp = p.sample_boundary(spacing)
    sq = q.sample_boundary(spacing)
    return max(_directed(sp, q, sq), _directed(sq, p, sp))


def _directed(samples_a: np.ndarray, q: Profile, samples_q: np.ndarray) -> float:
    # points of A already in the closed complement of Omega_q are at distance 0
    inside_q = q.contains(samples_a[:, 0], samples_a[:, 1])
    if not np.any(inside_q):
        return 0.0
    tree = cKDTree(samples_q)
    d, _ = tree.query(samples_a[inside_q])
    return float(d.max())


def total_variation_bound(profiles: Iterable[Profile]) -> float:
    return max(p.total_variation() for p in profiles)
