"""Bifurcation and delay-stability analysis for a nonlocal tumor-therapy model.

The package discretizes a reaction-diffusion equation with a delayed
nonlocal growth term on (0, pi), then offers

* the principal eigenpair of the linearization at zero (:mod:`.spectral`),
* closed-form bifurcation coefficients and regions (:mod:`.bifurcation`),
* exact discrete steady states (:mod:`.steady_state`),
* characteristic roots of the delayed linearization (:mod:`.char_spectrum`),
* time simulation with behaviour detection (:mod:`.dde_sim`),
* a command-line front end (:mod:`.cli`).
"""
from .errors import (BlowupError, ConfigError, DegenerateCase, DomainError,
                     HopfNotApplicable, InsufficientData, NoCrossing, NonConvergence,
                     NumericalError, SingularJacobian, TumorModelError, WrongSideOfBetaStar)
from .model import (KernelSpec, ModelParams, beta_to_dose, dose_to_beta, PRESETS,
                    hopf_preset, stable_preset)
from .system import ModelOps, build_ops

__version__ = "0.1.0"

__all__ = [
    "BlowupError", "ConfigError", "DegenerateCase", "DomainError", "HopfNotApplicable",
    "InsufficientData", "NoCrossing", "NonConvergence", "NumericalError",
    "SingularJacobian", "TumorModelError", "WrongSideOfBetaStar",
    "KernelSpec", "ModelParams", "beta_to_dose", "dose_to_beta",
    "PRESETS", "stable_preset", "hopf_preset", "ModelOps", "build_ops",
]
