"""Volume-penalized descent for local minimizers over graph profiles.

Heights live on a fixed uniform grid and stay nonnegative.  For each penalty
weight the projected descent minimizes ``F(u_h, h) + lam |A(h) - A*|`` where
``u_h`` is the elastic equilibrium, subject to the locality constraint
``|Omega_h delta Omega_init| <= mu / 2``.  The film area ``A`` is linear in
the heights (trapezoid weights ``w``), so at the kink ``A = A*`` the descent
uses the minimum-norm element of the subdifferential, and every line search
also tries the step that lands exactly on ``A = A*``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .energy import EnergyReport, eval_F
from .materials import Materials, perimeter_bound
from .profile import Profile, symmetric_difference_area

log = logging.getLogger(__name__)


class MinimizeError(RuntimeError):
    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state or {}


@dataclass(frozen=True)
class MinimizeSpec:
    initial: Profile
    target_area: float
    mu: float
    lambda_schedule: tuple = (1.0, 2.0, 4.0, 8.0, 16.0)
    knot_count: int = 33
    max_outer_iters: int = 400
    step_tol: float = 1e-10
    grad_tol: float = 1e-9
    area_tol: float = 1e-6
    fd_rel_step: float = 1e-6
    depth: float | None = None
    resolution: float | None = None
    seed: int = 0
    perimeter_tol: float = 1e-9

    def __post_init__(self):
        if not self.target_area > 0:
            raise ValueError("target_area > 0 violated")
        if not self.mu > 0:
            raise ValueError("mu > 0 violated")
        sched = tuple(float(l) for l in self.lambda_schedule)
        if not sched or any(l <= 0 for l in sched):
            raise ValueError("penalty weights must be positive")
        if any(b <= a for a, b in zip(sched[:-1], sched[1:])):
            raise ValueError("lambda_schedule must be increasing")
        object.__setattr__(self, "lambda_schedule", sched)
        if self.knot_count < 3:
            raise ValueError("knot_count >= 3 violated")


@dataclass
class MinimizeResult:
    profile: Profile
    displacement: fem.Displacement | None
    report: EnergyReport
    lambda_used: float
    area_error: float
    locality_used: float
    converged: bool
    iterations: int = 0
    history: list = field(default_factory=list)
    sweep: list = field(default_factory=list)


# ----------------------------------------------------------------------


def _trapezoid_weights(xs):
    dx = np.diff(xs)
    w = np.zeros(len(xs))
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


class _Problem:
    """Energy, gradient and bookkeeping on a fixed knot grid."""

    def __init__(self, spec: MinimizeSpec, m: Materials):
        self.spec, self.m = spec, m
        p0 = spec.initial
        self.interval = p0.interval
        self.xs = np.linspace(p0.a, p0.b, spec.knot_count)
        self.h0 = np.maximum(np.asarray(p0.value(self.xs), dtype=float), 0.0)
        self.p0 = Profile.from_points(self.xs, self.h0)
        self.w = _trapezoid_weights(self.xs)
        self.elastic = m.e0 > 0
        L = p0.interval.length
        self.resolution = spec.resolution or L / (spec.knot_count - 1)
        top = max(self.h0.max(), spec.target_area / L)
        self.depth = spec.depth or (2.0 * top if top > 0 else L)
        # film layers pinned so the topology survives height changes
        self.film_layers = max(1, int(np.ceil(2.0 * top / self.resolution)))
        self.n_solves = 0

    def profile(self, h) -> Profile:
        return Profile.from_points(self.xs, h)

    def metric_inverse(self) -> np.ndarray:
        """Inverse of the H^1-type metric ``gamma_f (D^T D / dx + dx I)``.

        Length of a graph has curvature of order ``gamma_f / dx`` along
        oscillating modes; descending in this metric removes the resulting
        ``N^2`` conditioning.
        """
        n = len(self.xs)
        dx = float(self.xs[1] - self.xs[0])
        D = np.diff(np.eye(n), axis=0)
        K = self.m.gamma_f * (D.T @ D / dx + dx * np.eye(n))
        return np.linalg.inv(K)

    def area(self, h) -> float:
        return float(self.w @ h)

    def mesh(self, p: Profile) -> fem.Mesh:
        return fem.build_mesh(p, self.depth, self.resolution, film_layers=self.film_layers,
                              columns=self.xs)

    def energy(self, h):
        """``(F report, displacement)`` at heights ``h``."""
        p = self.profile(h)
        if not self.elastic:
            return eval_F(None, p, self.m), None
        u = fem.solve_equilibrium(self.mesh(p), self.m)
        self.n_solves += 1
        return eval_F(u, p, self.m), u

    def _surface_only(self, h) -> float:
        return eval_F(None, self.profile(h), self.m).surface_side

    def gradient(self, h, u) -> np.ndarray:
        """Central differences of F; one-sided at zero heights.

        The elastic part uses the envelope property: the derivative of the
        minimum over u equals the partial derivative at fixed nodal values, on
        a mesh whose film nodes move with the column height.
        """
        eta = self.spec.fd_rel_step * max(1.0, float(h.max()))
        g = np.zeros_like(h)
        mesh = u.mesh if u is not None else None
        cols = None
        if mesh is not None:
            V = mesh.vertices
            cols = [np.flatnonzero((V[:, 0] == x) & (V[:, 1] > 0)) for x in self.xs]
        for i in range(len(h)):
            lo = max(h[i] - eta, 0.0)
            hi = h[i] + eta
            hp, hm = h.copy(), h.copy()
            hp[i], hm[i] = hi, lo
            diff = self._surface_only(hp) - self._surface_only(hm)
            if self.elastic:
                diff += self._bulk_at(hp, u, cols, i) - self._bulk_at(hm, u, cols, i)
            g[i] = diff / (hi - lo)
        return g

    def _bulk_at(self, h, u, cols, i) -> float:
        mesh = u.mesh
        idx = cols[i]
        old = mesh.vertices[idx, 1]
        top = old.max() if len(idx) else 0.0
        if len(idx) == 0 or top <= 0 or h[i] <= 0:
            # the column collapses or appears: topology changes, solve again
            self.n_solves += 1
            return fem.solve_equilibrium(self.mesh(self.profile(h)), self.m).info["energy"]
        V = mesh.vertices.copy()
        V[idx, 1] = old * (h[i] / top)
        moved = fem.Mesh(V, mesh.triangles, mesh.edge_tags, mesh.resolution, mesh.depth,
                         None, mesh.interval)
        return fem.bulk_energy(fem.Displacement(moved, u.u), self.m)


def penalized_energy(p: Profile, m: Materials, lam: float, target_area: float,
                     depth: float | None = None, resolution: float | None = None) -> float:
    """``F(u_h, h) + lam |A(h) - A*|`` with the equilibrium displacement."""
    u = None
    if m.e0 > 0:
        u = fem.solve_equilibrium(fem.build_mesh(p, depth, resolution), m)
    return eval_F(u, p, m).total + lam * abs(p.film_area() - target_area)


# ----------------------------------------------------------------------


def _descend(prob: _Problem, lam: float, h_start, history: list):
    spec, m = prob.spec, prob.m
    A_star = spec.target_area
    w = prob.w
    kink = 1e-12 * max(1.0, A_star)

    def pen(h):
        rep, u = prob.energy(h)
        return rep.total + lam * abs(prob.area(h) - A_star), rep, u

    def locality(h):
        return symmetric_difference_area(prob.profile(h), prob.p0)

    h = h_start.copy()
    P, rep, u = pen(h)
    Kinv = prob.metric_inverse()
    Kw = Kinv @ w
    t = 1.0
    converged = False
    it = 0
    for it in range(1, spec.max_outer_iters + 1):
        g = prob.gradient(h, u)
        r = prob.area(h) - A_star
        Kg = Kinv @ g
        if abs(r) <= kink:
            # minimum-norm subgradient in the metric K
            s = float(np.clip(-(w @ Kg) / (lam * (w @ Kw)), -1.0, 1.0))
        else:
            s = float(np.sign(r))
        gfull = g + lam * s * w
        d = Kg + lam * s * Kw
        d[(h <= 0) & (d > 0)] = 0.0
        if np.sqrt(max(gfull @ d, 0.0)) < spec.grad_tol:
            converged = True
            break

        def trial(step):
            hn = np.maximum(h - step * d, 0.0)
            if locality(hn) > 0.5 * spec.mu:
                return None
            Pn, repn, un = pen(hn)
            return Pn, hn, repn, un

        best = None
        step = min(1.0, 2.0 * t)
        for _ in range(60):
            res = trial(step)
            if res is not None and res[0] <= P - 1e-4 * (gfull @ (h - res[1])) and res[0] < P:
                best = res + (step,)
                break
            step *= 0.5
        wd = w @ d
        if wd != 0 and abs(r) > kink:
            snap = r / wd
            if snap > 0:
                res = trial(snap)
                if res is not None and res[0] < P:
                    if best is None or res[0] < best[0] or (
                            res[0] == best[0]
                            and res[1] is not None
                            and prob.profile(res[1]).boundary_length()
                            < prob.profile(best[1]).boundary_length()):
                        best = res + (snap,)
        if best is None:
            converged = True
            break
        Pn, hn, repn, un, step = best
        move = float(np.linalg.norm(hn - h))
        h, P, rep, u = hn, Pn, repn, un
        t = step
        _check_perimeter(prob, h, rep, lam)
        history.append({"lambda": lam, "iter": it, "penalized": P, "F": rep.total,
                        "area_error": abs(prob.area(h) - A_star), "step": move,
                        "locality": locality(h), "H1": prob.profile(h).boundary_length()})
        if move < spec.step_tol:
            converged = True
            break
    return h, P, rep, u, converged, it


def _check_perimeter(prob: _Problem, h, rep: EnergyReport, lam: float):
    m = prob.m
    if m.gamma_fs < 0:
        # the bound relies on a nonnegative wetting term
        return
    C = rep.total
    H1 = prob.profile(h).boundary_length()
    M = perimeter_bound(m, max(C, 0.0))
    if H1 > M + prob.spec.perimeter_tol:
        raise MinimizeError(
            f"perimeter bound violated: H1={H1:.17g} > M(C)={M:.17g} with C={C:.17g}",
            {"heights": h.tolist(), "lambda": lam, "report": rep.as_dict()})


def minimize(spec: MinimizeSpec, m: Materials) -> MinimizeResult:
    """Sweep the penalty weights; return the first one that meets the area tolerance."""
    prob = _Problem(spec, m)
    history, sweep = [], []
    chosen = None
    for lam in spec.lambda_schedule:
        try:
            h, P, rep, u, conv, its = _descend(prob, lam, prob.h0, history)
        except fem.SolverError as exc:
            raise MinimizeError(f"FEM failure at lambda={lam}: {exc}",
                                {"lambda": lam, "history": history[-5:]}) from exc
        err = abs(prob.area(h) - spec.target_area)
        loc = max([row["locality"] for row in history if row["lambda"] == lam] or [0.0])
        entry = {"lambda": lam, "area_error": err, "F": rep.total, "penalized": P,
                 "converged": conv, "iterations": its, "locality": loc,
                 "heights": h, "report": rep, "u": u}
        sweep.append(entry)
        log.info("lambda=%g area_error=%.3e F=%.12g converged=%s", lam, err, rep.total, conv)
        if chosen is None and err < spec.area_tol:
            chosen = entry
    ok = chosen is not None
    if chosen is None:
        chosen = min(sweep, key=lambda e: (e["area_error"], e["F"]))
    p = prob.profile(chosen["heights"])
    u = chosen["u"]
    if u is None:
        u = fem.Displacement.zero(prob.mesh(p))
    public = [{k: v for k, v in e.items() if k not in ("heights", "report", "u")} for e in sweep]
    return MinimizeResult(p, u, chosen["report"], chosen["lambda"], chosen["area_error"],
                          chosen["locality"], ok and chosen["converged"], chosen["iterations"],
                          history, public)


# ----------------------------------------------------------------------
# sampled local-minimality certificate


@dataclass(frozen=True)
class Certificate:
    samples: int
    seed: int
    min_change: float
    tol: float
    passed: bool
    worst_heights: tuple = ()


def certify(result: MinimizeResult, m: Materials, spec: MinimizeSpec, samples: int = 200,
            seed: int | None = None, tol: float = 1e-6) -> Certificate:
    """Random area-preserving perturbations within the locality radius.

    Each perturbation is orthogonal to the trapezoid weights (so the film area
    is unchanged), scaled to keep heights nonnegative and the symmetric
    difference below ``mu``.  Energies use the same pinned mesh as the
    descent.  Passing means no sample lowers F by more than ``tol``.
    """
    seed = spec.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    prob = _Problem(spec, m)
    h = np.asarray(result.profile.value(prob.xs), dtype=float)
    w = prob.w
    F0 = prob.energy(h)[0].total
    worst, worst_h = np.inf, ()
    for _ in range(samples):
        v = rng.standard_normal(len(h))
        # zero knots may only rise; balance the area on the positive ones
        zero = h <= 0.0
        v[zero] = np.abs(v[zero])
        pos = ~zero
        wp = w[pos]
        if wp @ wp > 0:
            v[pos] -= (v @ w) / (wp @ wp) * wp
        else:
            v -= (v @ w) / (w @ w) * w
        neg = v < 0
        t_pos = np.min(h[neg] / -v[neg]) if np.any(neg) else np.inf
        t_loc = spec.mu / max(np.abs(v) @ w, 1e-300)
        t = rng.uniform(0.0, 1.0) * min(t_pos, t_loc, 1.0)
        hn = np.maximum(h + t * v, 0.0)
        dF = prob.energy(hn)[0].total - F0
        if dF < worst:
            worst, worst_h = dF, tuple(hn.tolist())
    return Certificate(samples, seed, float(worst), tol, bool(worst >= -tol), worst_h)
