"""Constitutive data: surface densities, mismatch strains and elastic tensors.

Fourth-order tensors acting on symmetric 2x2 matrices are stored as 3x3
symmetric matrices in the orthonormal basis ``(E11, E22, sqrt(2) E12)``, so that
``E : C E == v^T M v`` with ``v = to_vector(E)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT2 = np.sqrt(2.0)

# Generalized-eigenvalue ceiling for C_delta to stay positive-definite:
# the C_f coefficient s(1+s)/2 is most negative at f = -1/2 where the
# C_s coefficient is 9/8.
TRANSITION_RATIO_LIMIT = 9.0


class MaterialError(ValueError):
    pass


def to_vector(E) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if E.shape != (2, 2):
        raise MaterialError(f"expected a 2x2 strain, got shape {E.shape}")
    if abs(E[0, 1] - E[1, 0]) > 1e-12 * max(1.0, np.abs(E).max()):
        raise MaterialError("strain must be symmetric")
    return np.array([E[0, 0], E[1, 1], SQRT2 * E[0, 1]])


def to_matrix(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.array([[v[0], v[2] / SQRT2], [v[2] / SQRT2, v[1]]])


def isotropic(lam: float, mu: float) -> np.ndarray:
    """Isotropic tensor ``C E = 2 mu E + lam tr(E) I``; needs mu > 0 and lam + mu > 0."""
    if not (mu > 0 and lam + mu > 0):
        raise MaterialError(f"Lame parameters need mu > 0 and lambda + mu > 0 (got {lam}, {mu})")
    M = 2.0 * mu * np.eye(3)
    M[:2, :2] += lam
    return M


def tensor4(M) -> np.ndarray:
    """Full C_ijkl from the 3x3 representation (used by independent checks)."""
    M = np.asarray(M, dtype=float)
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]),
             np.array([[0.0, 0.0], [0.0, 1.0]]),
             np.array([[0.0, 1.0], [1.0, 0.0]]) / SQRT2]
    C = np.zeros((2, 2, 2, 2))
    for p in range(3):
        for q in range(3):
            C += M[p, q] * np.einsum("ij,kl->ijkl", basis[p], basis[q])
    return C


# ----------------------------------------------------------------------
# boundary-layer functions


def _atan(r):
    return (2.0 / np.pi) * np.arctan(r)


def _atan_primitive(r):
    return (2.0 / np.pi) * (r * np.arctan(r) - 0.5 * np.log1p(r * r))


def _tanh(r):
    return np.tanh(r)


def _tanh_primitive(r):
    # log(cosh r) without overflow
    ar = np.abs(np.asarray(r, dtype=float))
    return ar + np.log1p(np.exp(-2.0 * ar)) - np.log(2.0)


BOUNDARY_LAYERS = {
    "atan": (_atan, _atan_primitive),
    "tanh": (_tanh, _tanh_primitive),
}


@dataclass(frozen=True)
class TransitionParams:
    delta: float
    f: str = "atan"

    def __post_init__(self):
        if not self.delta > 0:
            raise MaterialError(f"delta > 0 violated (delta={self.delta})")
        if self.f not in BOUNDARY_LAYERS:
            raise MaterialError(f"unknown boundary-layer function {self.f!r}")

    def layer(self, y):
        """f(y / delta)."""
        return BOUNDARY_LAYERS[self.f][0](np.asarray(y, dtype=float) / self.delta)

    def layer_primitive(self, y):
        """An antiderivative of y -> f(y / delta)."""
        fp = BOUNDARY_LAYERS[self.f][1]
        return self.delta * fp(np.asarray(y, dtype=float) / self.delta)


# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Materials:
    gamma_f: float
    gamma_s: float
    gamma_fs: float
    e0: float
    C_f: np.ndarray = field(repr=False)
    C_s: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "C_f", np.array(self.C_f, dtype=float))
        object.__setattr__(self, "C_s", np.array(self.C_s, dtype=float))
        if not self.gamma_f > 0:
            raise MaterialError("gamma_f > 0 violated")
        if not self.gamma_s > 0:
            raise MaterialError("gamma_s > 0 violated")
        if not self.gamma_s - self.gamma_fs >= 0:
            raise MaterialError("gamma_s - gamma_fs >= 0 violated")
        if not self.e0 >= 0:
            raise MaterialError("e0 >= 0 violated")
        for name in ("C_f", "C_s"):
            M = getattr(self, name)
            if M.shape != (3, 3):
                raise MaterialError(f"{name} must be a 3x3 matrix")
            if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
                raise MaterialError(f"{name} lacks major symmetry")
            if np.linalg.eigvalsh(M).min() <= 0:
                raise MaterialError(f"{name} is not positive-definite")

    @classmethod
    def isotropic(cls, gamma_f, gamma_s, gamma_fs, e0=0.0, lame_f=(1.0, 1.0), lame_s=None):
        lame_s = lame_f if lame_s is None else lame_s
        return cls(gamma_f, gamma_s, gamma_fs, e0, isotropic(*lame_f), isotropic(*lame_s))

    @property
    def gamma_sub(self) -> float:
        """gamma_s - gamma_fs, the substrate-side surface density."""
        return self.gamma_s - self.gamma_fs

    @property
    def lift_regime(self) -> bool:
        """gamma_f < gamma_s - gamma_fs: recovery sequences need the lift off y = 0."""
        return self.gamma_f < self.gamma_sub

    def stiffness_ratio(self) -> float:
        """Largest generalized eigenvalue of (C_f, C_s)."""
        L = np.linalg.cholesky(self.C_s)
        Li = np.linalg.inv(L)
        return float(np.linalg.eigvalsh(Li @ self.C_f @ Li.T).max())

    def check_transition(self):
        """C_delta is positive-definite for every y iff C_f < 9 C_s."""
        r = self.stiffness_ratio()
        if not r < TRANSITION_RATIO_LIMIT:
            raise MaterialError(
                f"C_delta loses positivity: largest eigenvalue of C_s^-1 C_f is {r:.6g} >= 9")


# ----------------------------------------------------------------------
# surface densities


def phi(m: Materials, y):
    y = np.asarray(y, dtype=float)
    out = np.where(y > 0, m.gamma_f, min(m.gamma_f, m.gamma_sub))
    return float(out) if out.ndim == 0 else out


def phi0(m: Materials, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise MaterialError("phi0 is only defined on y >= 0")
    out = np.where(y > 0, m.gamma_f, m.gamma_s)
    return float(out) if out.ndim == 0 else out


def phi_delta(m: Materials, t: TransitionParams, y):
    s = t.layer(y)
    out = m.gamma_f * s + m.gamma_sub * (1.0 - s)
    return float(out) if np.ndim(out) == 0 else out


def phi_delta_integral(m: Materials, t: TransitionParams, y0, y1):
    """Closed form of the integral of phi_delta over [y0, y1]."""
    F = t.layer_primitive
    return m.gamma_sub * (y1 - y0) + (m.gamma_f - m.gamma_sub) * (F(y1) - F(y0))


# ----------------------------------------------------------------------
# elasticity


def transition_weights(s):
    """Coefficients (alpha, beta) with C_delta = alpha C_f + beta C_s at f = s."""
    s = np.asarray(s, dtype=float)
    return 0.5 * s * (1.0 + s), 0.5 * (1.0 - s) * (2.0 + s)


def c_sharp(m: Materials, y) -> np.ndarray:
    return m.C_f if y > 0 else m.C_s


def c_delta(m: Materials, t: TransitionParams, y) -> np.ndarray:
    s = float(t.layer(y))
    # written out term by term, as in the model definition
    return (0.5 * (1 + s) * m.C_f + 0.5 * (1 - s) * m.C_s
            + 0.5 * (1 + s) * (1 - s) * (m.C_s - m.C_f))


def quadratic_bound(m: Materials, n: int = 2001) -> float:
    """Constant C with C_delta(y) F:F <= C |F|^2 for all y, delta."""
    s = np.linspace(-1.0, 1.0, n)
    al, be = transition_weights(s)
    return float(max(np.linalg.eigvalsh(a * m.C_f + b * m.C_s).max() for a, b in zip(al, be)))


def e0_strain(m: Materials, y) -> np.ndarray:
    """Mismatch strain E_0(y) = e0 e1 (x) e1 on y >= 0."""
    return np.array([[m.e0 if y >= 0 else 0.0, 0.0], [0.0, 0.0]])


def e_delta_strain(m: Materials, t: TransitionParams, y) -> np.ndarray:
    return np.array([[0.5 * m.e0 * (1.0 + float(t.layer(y))), 0.0], [0.0, 0.0]])


def w0(m: Materials, y, E) -> float:
    v = to_vector(E)
    return 0.5 * float(v @ c_sharp(m, y) @ v)


def w_delta(m: Materials, t: TransitionParams, y, E) -> float:
    v = to_vector(E)
    return 0.5 * float(v @ c_delta(m, t, y) @ v)


# ----------------------------------------------------------------------
# constants of the penalized problem


def beta(m: Materials) -> float:
    return min(m.gamma_f, m.gamma_sub) / m.gamma_f


def perimeter_bound(m: Materials, C: float) -> float:
    """M(C): bound on H^1(Gamma_h) for configurations with energy below C."""
    if C < 0:
        raise MaterialError("perimeter bound needs C >= 0")
    b = beta(m)
    if b != 0:
        return C / (b * m.gamma_f)
    return C / min(m.gamma_f, m.gamma_fs)
