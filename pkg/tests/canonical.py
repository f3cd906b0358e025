"""The twelve canonical profiles of the internal-ball cross-check, on [1, 2]."""
from __future__ import annotations

import numpy as np

from stratum.profile import Profile


def _circle(c, R, base, bump=True, n=48):
    t = np.linspace(np.pi, 0.0, n + 1)
    xs = c + R * np.cos(t)
    ys = base + (R if bump else -R) * np.sin(t)
    return xs, ys


def canonical_profiles() -> dict:
    out = {}
    out["flat"] = Profile.flat(1.0, 2.0, 1.0)
    out["flat_thin"] = Profile.flat(1.0, 2.0, 0.3)
    out["tent"] = Profile.from_points([1.0, 1.5, 2.0], [0.5, 1.0, 0.5])
    out["shallow_tent"] = Profile.from_points([1.0, 1.5, 2.0], [0.8, 0.9, 0.8])
    out["valley"] = Profile.from_points([1.0, 1.5, 2.0], [1.0, 0.5, 1.0])
    xs = np.linspace(1.0, 2.0, 9)
    out["sawtooth"] = Profile.from_points(xs, 0.6 + 0.12 * (np.arange(9) % 2))
    out["spike"] = Profile.from_points([1.0, 1.43, 1.5, 1.57, 2.0], [0.5, 0.5, 0.9, 0.5, 0.5])
    out["cut"] = Profile.from_points([1.0, 2.0], [0.6, 0.6], cuts=[(1.5, 0.2, 0.6)])
    out["jump"] = Profile.from_points([1.0, 1.5, 1.5, 2.0], [0.8, 0.8, 0.4, 0.4])
    bx, by = _circle(1.5, 0.3, 0.4)
    out["semicircle_bump"] = Profile.from_points(
        np.concatenate([[1.0], bx, [2.0]]), np.concatenate([[0.4], by, [0.4]]))
    dx, dy = _circle(1.5, 0.32, 0.7, bump=False)
    out["semicircle_dent"] = Profile.from_points(
        np.concatenate([[1.0], dx, [2.0]]), np.concatenate([[0.7], dy, [0.7]]))
    out["jump_and_cut"] = Profile.from_points(
        [1.0, 1.3, 1.3, 2.0], [1.0, 1.0, 0.5, 0.5], cuts=[(1.7, 0.1, 0.5)])
    return out
