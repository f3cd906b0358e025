"""Variational thin-film model: profiles, elasticity, energies, relaxation and diagnostics."""
from ._env import apply_thread_cap

apply_thread_cap()

from .profile import Cut, Interval, Jump, Profile, ProfileError
from .materials import Materials, MaterialError, TransitionParams
from .energy import EnergyReport, evaluate

__version__ = "0.1.0"

__all__ = [
    "Cut", "Interval", "Jump", "Profile", "ProfileError",
    "Materials", "MaterialError", "TransitionParams",
    "EnergyReport", "evaluate",
]
