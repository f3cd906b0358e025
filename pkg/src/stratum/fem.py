"""P1 linear elasticity on the truncated subgraph of a profile.

The mesher works column by column: every knot, jump and cut abscissa becomes a
mesh column, the substrate ``[-D, 0]`` is split into uniform layers shared by
all columns, and the film part of each column is split into ``n_f`` layers
scaled to the local height.  Neighbouring columns are stitched by a zipper
triangulation, which tolerates different node counts on the two sides (jumps)
and collapsed columns (zero height).  The line ``y = 0`` is always a chain of
mesh edges.  Cut nodes above the slit foot are duplicated so the displacement
may open across the slit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .materials import Materials, TransitionParams, transition_weights
from .profile import Profile

SQRT2 = np.sqrt(2.0)


class MeshError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


class SingularSystemError(SolverError):
    pass


# ----------------------------------------------------------------------
# mesh


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    edge_tags: dict = field(default_factory=dict)
    resolution: float = float("nan")
    depth: float = float("nan")
    profile_key: Optional[str] = None
    interval: Optional[tuple] = None

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """(M, 3, 2) gradients of the three barycentric basis functions."""
        p = self.vertices[self.triangles]
        x, y = p[..., 0], p[..., 1]
        a2 = 2.0 * self.areas
        dNdx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / a2[:, None]
        dNdy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / a2[:, None]
        return np.stack([dNdx, dNdy], axis=2)

    @cached_property
    def strain_operator(self) -> np.ndarray:
        """(M, 3, 6) map from element dofs (u1, u2 per vertex) to (E11, E22, sqrt2 E12)."""
        G = self.shape_gradients
        B = np.zeros((len(self.triangles), 3, 6))
        B[:, 0, 0::2] = G[:, :, 0]
        B[:, 1, 1::2] = G[:, :, 1]
        B[:, 2, 0::2] = G[:, :, 1] / SQRT2
        B[:, 2, 1::2] = G[:, :, 0] / SQRT2
        return B

    @cached_property
    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def boundary_edges(self) -> np.ndarray:
        t = self.triangles
        e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles)
        return int(len(used) - len(self.edges) + len(self.triangles))

    def tagged(self, tag: str) -> list:
        return [e for e, t in self.edge_tags.items() if t == tag]

    def tagged_nodes(self, tag: str) -> np.ndarray:
        return np.unique(np.array(self.tagged(tag), dtype=int).reshape(-1))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def dump(self) -> str:
        lines = [f"vertices {self.n_vertices}"]
        lines += [f"{x:.17g} {y:.17g}" for x, y in self.vertices]
        lines.append(f"triangles {self.n_triangles}")
        lines += [f"{i} {j} {k}" for i, j, k in self.triangles]
        lines.append(f"tags {len(self.edge_tags)}")
        lines += [f"{i} {j} {t}" for (i, j), t in sorted(self.edge_tags.items())]
        return "\n".join(lines) + "\n"


def _tag_edges(vertices, triangles, depth, a, b) -> dict:
    t = triangles
    e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    tol = 1e-12 * max(1.0, abs(b))
    tags = {}
    for (i, j), c in zip(uniq, counts):
        (xi, yi), (xj, yj) = vertices[i], vertices[j]
        if c == 1:
            if abs(yi + depth) < tol and abs(yj + depth) < tol:
                tag = "bottom"
            elif abs(xi - a) < tol and abs(xj - a) < tol:
                tag = "left"
            elif abs(xi - b) < tol and abs(xj - b) < tol:
                tag = "right"
            else:
                tag = "top"
            tags[(int(i), int(j))] = tag
        elif yi == 0.0 and yj == 0.0:
            tags[(int(i), int(j))] = "interface"
    return tags


def _zipper(A, B, yA, yB):
    """Triangulate the strip between two vertical node chains (A left, B right)."""
    def norm(y):
        y = np.asarray(y, dtype=float)
        span = y[-1] - y[0]
        return (y - y[0]) / span if span > 0 else np.zeros_like(y)

    ta, tb = norm(yA), norm(yB)
    tris = []
    i = j = 0
    na, nb = len(A) - 1, len(B) - 1
    while i < na or j < nb:
        if i == na:
            adv_a = False
        elif j == nb:
            adv_a = True
        else:
            adv_a = ta[i + 1] <= tb[j + 1] + 1e-12
        if adv_a:
            tris.append((A[i], B[j], A[i + 1]))
            i += 1
        else:
            tris.append((A[i], B[j], B[j + 1]))
            j += 1
    return tris


def _column_grid(p: Profile, resolution: float) -> np.ndarray:
    a, b = p.a, p.b
    n = max(1, int(np.ceil((b - a) / resolution - 1e-9)))
    uniform = np.linspace(a, b, n + 1)
    bps = p.breakpoints
    h = (b - a) / n
    d = np.min(np.abs(uniform[:, None] - bps[None, :]), axis=1)
    keep = uniform[d >= 0.25 * h]
    return np.union1d(keep, bps)


def build_mesh(p: Profile, depth: float | None = None, resolution: float | None = None,
               film_layers: int | None = None, columns=None) -> Mesh:
    """Mesh Omega_h truncated at ``y = -depth``.

    ``film_layers`` and ``columns`` pin the topology, which keeps node counts
    fixed while heights move (used for shape derivatives).
    """
    a, b = p.a, p.b
    if resolution is None:
        resolution = (b - a) / 32
    if not resolution > 0:
        raise MeshError("resolution must be positive")
    hmax = p.max_height()
    if depth is None:
        depth = 2.0 * hmax if hmax > 0 else (b - a)
    if not depth > 0:
        raise MeshError("truncation depth must be positive")

    xs = np.asarray(columns, dtype=float) if columns is not None else _column_grid(p, resolution)
    n_s = max(1, int(np.ceil(depth / resolution - 1e-9)))
    n_f = film_layers if film_layers is not None else max(1, int(np.ceil(hmax / resolution - 1e-9)))
    sub_y = -depth + depth * np.arange(n_s + 1) / n_s
    sub_y[-1] = 0.0

    hl = p.left_limit(xs)
    hr = p.right_limit(xs)
    cut_at = {c.x: c for c in p.cuts}

    verts = []

    def add(x, y):
        verts.append((x, y))
        return len(verts) - 1

    sub_ids, left_chain, right_chain = [], [], []
    for c, x in enumerate(xs):
        ids = [add(x, y) for y in sub_y]
        sub_ids.append(ids)
        top = ids[-1]
        lev = set()
        jj = np.arange(1, n_f + 1) / n_f
        if hl[c] > 0:
            lev.update((hl[c] * jj).tolist())
        if hr[c] > 0:
            lev.update((hr[c] * jj).tolist())
        cut = cut_at.get(x)
        if cut is not None and cut.y_bottom > 0:
            lev.add(cut.y_bottom)
        levels = np.array(sorted(lev))
        if len(levels) > 1:
            scale = max(1.0, levels[-1])
            keep = np.ones(len(levels), bool)
            keep[1:] = np.diff(levels) > 1e-13 * scale
            levels = levels[keep]
        L_ids, R_ids = [top], [top]
        L_y, R_y = [0.0], [0.0]
        for y in levels:
            if cut is not None and y > cut.y_bottom:
                il, ir = add(x, y), add(x, y)
            else:
                il = ir = add(x, y)
            if y <= hl[c] * (1 + 1e-13):
                L_ids.append(il)
                L_y.append(y)
            if y <= hr[c] * (1 + 1e-13):
                R_ids.append(ir)
                R_y.append(y)
        left_chain.append((L_ids, L_y))
        right_chain.append((R_ids, R_y))

    tris = []
    for c in range(len(xs) - 1):
        tris += _zipper(sub_ids[c], sub_ids[c + 1], sub_y, sub_y)
        (A, yA), (B, yB) = right_chain[c], left_chain[c + 1]
        tris += _zipper(A, B, yA, yB)

    V = np.array(verts, dtype=float)
    T = np.array(tris, dtype=int)
    P = V[T]
    area2 = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - \
            (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    scale = resolution * min(resolution, max(hmax, resolution))
    T = T[np.abs(area2) > 1e-12 * scale]
    area2 = area2[np.abs(area2) > 1e-12 * scale]
    flip = area2 < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    if len(T) == 0:
        raise MeshError("degenerate profile: empty mesh")

    used = np.unique(T)
    remap = -np.ones(len(V), dtype=int)
    remap[used] = np.arange(len(used))
    V, T = V[used], remap[T]
    tags = _tag_edges(V, T, depth, a, b)
    return Mesh(V, T, tags, float(resolution), float(depth), p.key, (a, b))


def structured_mesh_count(p: Profile, depth: float, resolution: float) -> int:
    """Triangle count of the structured generator for a flat profile (test oracle)."""
    nx = int(np.ceil((p.b - p.a) / resolution - 1e-9))
    ny = int(np.ceil(depth / resolution - 1e-9)) + int(np.ceil(p.max_height() / resolution - 1e-9))
    return 2 * nx * ny


def refine_mesh(mesh: Mesh) -> Mesh:
    """Uniform red refinement: every triangle splits into four similar children."""
    V = [tuple(v) for v in mesh.vertices]
    mid = {}

    def midpoint(i, j):
        k = (min(i, j), max(i, j))
        if k not in mid:
            V.append(tuple((mesh.vertices[i] + mesh.vertices[j]) / 2.0))
            mid[k] = len(V) - 1
        return mid[k]

    T = []
    for i, j, k in mesh.triangles:
        a, b_, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
        T += [(i, a, c), (a, j, b_), (c, b_, k), (a, b_, c)]
    tags = {}
    for (i, j), t in mesh.edge_tags.items():
        m = mid[(i, j)]
        tags[(min(i, m), max(i, m))] = t
        tags[(min(j, m), max(j, m))] = t
    return Mesh(np.array(V), np.array(T, dtype=int), tags, mesh.resolution / 2, mesh.depth,
                mesh.profile_key, mesh.interval)


# ----------------------------------------------------------------------
# displacement fields


@dataclass(frozen=True, eq=False)
class Displacement:
    mesh: Mesh
    u: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(-1, 2)
        if u.shape[0] != self.mesh.n_vertices:
            raise ValueError("one displacement vector per vertex required")
        if not np.all(np.isfinite(u)):
            raise ValueError("displacement must be finite")
        object.__setattr__(self, "u", u)

    @classmethod
    def zero(cls, mesh: Mesh) -> "Displacement":
        return cls(mesh, np.zeros((mesh.n_vertices, 2)))

    @classmethod
    def from_function(cls, mesh: Mesh, fun) -> "Displacement":
        return cls(mesh, np.array([fun(x, y) for x, y in mesh.vertices], dtype=float))

    def strain_vectors(self) -> np.ndarray:
        """(M, 3) strain per triangle in (E11, E22, sqrt2 E12)."""
        ue = self.u[self.mesh.triangles].reshape(-1, 6)
        return np.einsum("mij,mj->mi", self.mesh.strain_operator, ue)

    def evaluate(self, pts) -> np.ndarray:
        """P1 interpolation at arbitrary points (nearest triangle outside the mesh)."""
        tri, bary = locate(self.mesh, pts)
        return np.einsum("nk,nkd->nd", bary, self.u[self.mesh.triangles[tri]])


def locate(mesh: Mesh, pts, cells: int | None = None):
    """Containing triangle and barycentric coordinates for each point.

    Points outside every triangle get the triangle that contains them most
    nearly, with barycentrics clipped and renormalized.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    P = mesh.vertices[mesh.triangles]
    lo, hi = P.min(axis=1), P.max(axis=1)
    gmin = np.minimum(lo.min(axis=0), pts.min(axis=0))
    gmax = np.maximum(hi.max(axis=0), pts.max(axis=0))
    if cells is None:
        cells = max(4, int(np.sqrt(len(P)) / 2))
    size = (gmax - gmin) / cells + 1e-300
    ilo = np.clip(((lo - gmin) / size).astype(int), 0, cells - 1)
    ihi = np.clip(((hi - gmin) / size).astype(int), 0, cells - 1)
    buckets = {}
    for t in range(len(P)):
        for i in range(ilo[t, 0], ihi[t, 0] + 1):
            for j in range(ilo[t, 1], ihi[t, 1] + 1):
                buckets.setdefault((i, j), []).append(t)
    cell = np.clip(((pts - gmin) / size).astype(int), 0, cells - 1)
    out_t = np.zeros(len(pts), dtype=int)
    out_b = np.zeros((len(pts), 3))
    keys = cell[:, 0] * cells + cell[:, 1]
    order = np.argsort(keys, kind="stable")
    uniq, start = np.unique(keys[order], return_index=True)
    bounds = list(start) + [len(order)]
    for u, s, e in zip(uniq, bounds[:-1], bounds[1:]):
        idx = order[s:e]
        cand = buckets.get((u // cells, u % cells))
        if not cand:
            # fall back to all triangles (rare: point far outside)
            cand = range(len(P))
        cand = np.asarray(cand)
        b = _barycentric(P[cand], pts[idx])         # (n_pts, n_cand, 3)
        score = b.min(axis=2)
        best = score.argmax(axis=1)
        out_t[idx] = cand[best]
        out_b[idx] = b[np.arange(len(idx)), best]
    neg = out_b.min(axis=1) < -1e-10
    if np.any(neg):
        bb = np.clip(out_b[neg], 0, None)
        out_b[neg] = bb / bb.sum(axis=1, keepdims=True)
    return out_t, out_b


def _barycentric(P, pts):
    v0 = P[None, :, 1] - P[None, :, 0]
    v1 = P[None, :, 2] - P[None, :, 0]
    v2 = pts[:, None, :] - P[None, :, 0]
    det = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
    l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / det
    l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / det
    return np.stack([1 - l1 - l2, l1, l2], axis=2)


# ----------------------------------------------------------------------
# constitutive data per element


@dataclass(frozen=True)
class ElasticMode:
    """Which bulk density to use.

    ``kind='sharp'`` uses C(y) and E_0; ``kind='delta'`` uses C_delta with either
    the regularized mismatch E_delta (``mismatch='Edelta'``) or the sharp E_0
    (``mismatch='E0'``).
    """

    kind: str = "sharp"
    transition: Optional[TransitionParams] = None
    mismatch: str = "E0"

    @classmethod
    def delta(cls, t: TransitionParams, mismatch: str = "Edelta") -> "ElasticMode":
        return cls("delta", t, mismatch)

    def __post_init__(self):
        if self.kind not in ("sharp", "delta"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == "delta" and self.transition is None:
            raise ValueError("delta mode requires transition parameters")
        if self.mismatch not in ("E0", "Edelta"):
            raise ValueError(f"unknown mismatch {self.mismatch!r}")


SHARP = ElasticMode()

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _y_integrals(mesh: Mesh, funcs, delta: float, panels: int = 6) -> np.ndarray:
    """Integrals of functions of y over every triangle, divided by its area.

    Each triangle is cut at its middle vertex into two pieces with linear
    width; each piece is integrated in the variable u = asinh(y / delta),
    which resolves the transition layer at any ratio of delta to element size.
    """
    Y = np.sort(mesh.vertices[mesh.triangles][:, :, 1], axis=1)
    A = mesh.areas
    y0, y1, y2 = Y[:, 0], Y[:, 1], Y[:, 2]
    span = y2 - y0
    wmax = 2.0 * A / span
    out = np.zeros((len(funcs), len(A)))
    for lo, hi, w_lo, w_hi in ((y0, y1, 0.0 * wmax, wmax), (y1, y2, wmax, 0.0 * wmax)):
        ok = hi > lo
        if not np.any(ok):
            continue
        lo_, hi_ = lo[ok], hi[ok]
        ulo, uhi = np.arcsinh(lo_ / delta), np.arcsinh(hi_ / delta)
        edges = ulo[:, None] + (uhi - ulo)[:, None] * np.linspace(0, 1, panels + 1)[None, :]
        a_, b_ = edges[:, :-1, None], edges[:, 1:, None]
        u = 0.5 * (a_ + b_) + 0.5 * (b_ - a_) * _GL_X[None, None, :]
        wq = 0.5 * (b_ - a_) * _GL_W[None, None, :]
        y = delta * np.sinh(u)
        jac = delta * np.cosh(u)
        t = (y - lo_[:, None, None]) / (hi_ - lo_)[:, None, None]
        width = w_lo[ok][:, None, None] * (1 - t) + w_hi[ok][:, None, None] * t
        base = wq * jac * width
        for k, fn in enumerate(funcs):
            out[k, ok] += (base * fn(y)).sum(axis=(1, 2))
    return out / A[None, :]


def element_moduli(mesh: Mesh, m: Materials, mode: ElasticMode = SHARP):
    """Area-averaged (C, C e*, e*.C e*/2) for every triangle.

    The element energy is ``A (E.C E / 2 - E.(C e*) + c0)`` for the constant
    strain E of a P1 field.
    """
    film = mesh.centroids[:, 1] > 0
    M = len(mesh.triangles)
    e = m.e0
    if mode.kind == "sharp":
        C = np.where(film[:, None, None], m.C_f[None], m.C_s[None])
        g = film.astype(float)
        Ce = e * g[:, None] * C[:, :, 0]
        c0 = 0.5 * e * e * g * C[:, 0, 0]
        return C, Ce, c0

    t = mode.transition
    m.check_transition()

    def alpha(y):
        return transition_weights(t.layer(y))[0]

    def beta_(y):
        return transition_weights(t.layer(y))[1]

    if mode.mismatch == "Edelta":
        def g(y):
            return 0.5 * (1.0 + t.layer(y))
        funcs = [alpha, beta_,
                 lambda y: alpha(y) * g(y), lambda y: beta_(y) * g(y),
                 lambda y: alpha(y) * g(y) ** 2, lambda y: beta_(y) * g(y) ** 2]
        Ia, Ib, Iag, Ibg, Iag2, Ibg2 = _y_integrals(mesh, funcs, t.delta)
    else:
        Ia, Ib = _y_integrals(mesh, [alpha, beta_], t.delta)
        ind = film.astype(float)
        Iag, Ibg, Iag2, Ibg2 = Ia * ind, Ib * ind, Ia * ind, Ib * ind
    C = Ia[:, None, None] * m.C_f[None] + Ib[:, None, None] * m.C_s[None]
    Ce = e * (Iag[:, None] * m.C_f[None, :, 0] + Ibg[:, None] * m.C_s[None, :, 0])
    c0 = 0.5 * e * e * (Iag2 * m.C_f[0, 0] + Ibg2 * m.C_s[0, 0])
    assert C.shape == (M, 3, 3)
    return C, Ce, c0


def bulk_energy(d: Displacement, m: Materials, mode: ElasticMode = SHARP, moduli=None) -> float:
    """Sum over triangles of the integrated density W(y, Eu - E*(y))."""
    C, Ce, c0 = moduli if moduli is not None else element_moduli(d.mesh, m, mode)
    eps = d.strain_vectors()
    dens = 0.5 * np.einsum("mi,mij,mj->m", eps, C, eps) - np.einsum("mi,mi->m", eps, Ce) + c0
    return float(np.sum(d.mesh.areas * dens))


# ----------------------------------------------------------------------
# assembly and solve


@dataclass(frozen=True)
class BCSpec:
    clamp_bottom: bool = True
    lateral: str = "free"

    def __post_init__(self):
        if self.lateral not in ("free", "periodic"):
            raise ValueError(f"lateral must be 'free' or 'periodic', got {self.lateral!r}")


def assemble(mesh: Mesh, moduli):
    C, Ce, c0 = moduli
    B = mesh.strain_operator
    A = mesh.areas
    Ke = A[:, None, None] * np.einsum("mki,mkl,mlj->mij", B, C, B)
    fe = A[:, None] * np.einsum("mki,mk->mi", B, Ce)
    dofs = np.empty((len(mesh.triangles), 6), dtype=int)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    n = 2 * mesh.n_vertices
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))
    f = np.zeros(n)
    np.add.at(f, dofs.ravel(), fe.ravel())
    return K, f


def pcg(A, b, tol: float = 1e-10, maxiter: int | None = None, x0=None):
    """Jacobi-preconditioned conjugate gradients; stops on ||r|| <= tol ||b||."""
    n = len(b)
    maxiter = maxiter or 10 * n
    dinv = 1.0 / A.diagonal()
    x = np.zeros(n) if x0 is None else x0.copy()
    r = b - A @ x
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n), {"iterations": 0, "residual": 0.0}
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, {"iterations": k, "residual": res}
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"CG did not reach tol {tol} in {maxiter} iterations (residual {res:.3e})")


def _periodic_map(mesh: Mesh) -> np.ndarray:
    a, b = mesh.interval
    V = mesh.vertices
    tol = 1e-12 * max(1.0, b)
    left = np.flatnonzero(np.abs(V[:, 0] - a) < tol)
    right = np.flatnonzero(np.abs(V[:, 0] - b) < tol)
    rep = np.arange(len(V))
    ly = V[left, 1]
    for r in right:
        k = np.flatnonzero(np.abs(ly - V[r, 1]) < 1e-10)
        if len(k) != 1:
            raise MeshError("periodic lateral condition needs matching lateral nodes")
        rep[r] = left[k[0]]
    return rep


def solve_equilibrium(mesh: Mesh, m: Materials, mode: ElasticMode = SHARP,
                      bc: BCSpec = BCSpec(), tol: float = 1e-10) -> Displacement:
    """Minimize the discrete bulk energy over P1 displacements."""
    if not bc.clamp_bottom:
        modes = "translation-x, translation-y" + ("" if bc.lateral == "periodic" else ", rotation")
        raise SingularSystemError(f"singular system: unconstrained rigid-body modes ({modes})")
    moduli = element_moduli(mesh, m, mode)
    K, f = assemble(mesh, moduli)
    n = mesh.n_vertices
    rep = _periodic_map(mesh) if bc.lateral == "periodic" else np.arange(n)
    bottom = mesh.tagged_nodes("bottom")
    if len(bottom) == 0:
        raise SingularSystemError("singular system: no bottom nodes to clamp "
                                  "(translation-x, translation-y, rotation unconstrained)")
    # node reduction: periodic identification then Dirichlet elimination
    masters = np.unique(rep)
    free_nodes = np.setdiff1d(masters, rep[bottom])
    col = -np.ones(n, dtype=int)
    col[free_nodes] = np.arange(len(free_nodes))
    node_col = col[rep]
    rows, cols, vals = [], [], []
    for comp in (0, 1):
        idx = np.flatnonzero(node_col >= 0)
        rows.append(2 * idx + comp)
        cols.append(2 * node_col[idx] + comp)
    R = sp.csr_matrix((np.ones(sum(len(r) for r in rows)),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(2 * n, 2 * len(free_nodes)))
    Kr = (R.T @ K @ R).tocsr()
    fr = R.T @ f
    ur, info = pcg(Kr, fr, tol=tol)
    u = (R @ ur).reshape(-1, 2)
    d = Displacement(mesh, u, info)
    info["energy"] = bulk_energy(d, m, mode, moduli)
    return d
