"""gausstat: photon-statistics observables, classification, and reconstruction
of multimode Gaussian states, cross-verified against a truncated-Fock oracle."""

from .states import (
    GaussianParams,
    MomentSummary,
    bogoliubov_map,
    derive_moments,
    g2_tensor,
    g3_tensor,
    no_click_probability_single,
)

__all__ = [
    "GaussianParams",
    "MomentSummary",
    "bogoliubov_map",
    "derive_moments",
    "g2_tensor",
    "g3_tensor",
    "no_click_probability_single",
]

__version__ = "0.1.0"
