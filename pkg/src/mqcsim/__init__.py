"""Fluorescence-detected multiple-quantum-coherence spectra of a
dipole-coupled pair of four-level atoms.

Two phase-tagged ultrashort pulses drive a pair of J = 0 -> J = 1 atoms;
the demodulated fluorescence carries one- and two-quantum coherence
signatures whose disorder-averaged line shapes this package computes
analytically (single plus double scattering) and validates against
non-perturbative time-domain integration and Monte Carlo configuration
averages.
"""

from .basis import build_single_atom_basis, expand, reconstruct
from .atom import (
    dipole_lowering,
    kick_decomposition,
    two_pulse_pure_states,
    free_propagator,
    resolvent,
)
from .coupling import coupling_tensor, interaction_matrices, interaction_pieces
from .expansion import (
    PhaseMonomial,
    PhaseTaggedVector,
    initial_vector,
    apply_kick,
    apply_resolvent,
    apply_interaction,
    scattering_solution,
)
from .disorder import (
    survival_filter,
    angular_average,
    gamma_omega_averages,
    average_state,
    averaged_solution,
    mean_inverse_xi_squared,
)
from .spectra import (
    SpectrumSeries,
    detection_observable,
    detection_projection,
    spectrum,
    leading_order_peaks,
    mean_scattering_cross_section,
    mean_free_path,
    dipole_from_gamma,
    gamma_from_dipole,
    pulse_area_from_energy,
)
from .oracle import (
    IntegrationError,
    MonteCarloResult,
    OracleRun,
    demodulated_laplace,
    fixed_configuration_components,
    monte_carlo_pair_averages,
    monte_carlo_spectrum,
    numeric_demodulate,
    pair_generator,
    sample_configurations,
    surviving_term_table,
    time_domain_evolve,
)

__version__ = "0.1.0"

__all__ = [
    "build_single_atom_basis", "expand", "reconstruct",
    "dipole_lowering", "kick_decomposition", "two_pulse_pure_states",
    "free_propagator", "resolvent",
    "coupling_tensor", "interaction_matrices", "interaction_pieces",
    "PhaseMonomial", "PhaseTaggedVector", "initial_vector",
    "apply_kick", "apply_resolvent", "apply_interaction", "scattering_solution",
    "survival_filter", "angular_average", "gamma_omega_averages",
    "average_state", "averaged_solution", "mean_inverse_xi_squared",
    "SpectrumSeries", "detection_observable", "detection_projection",
    "spectrum", "leading_order_peaks", "mean_scattering_cross_section",
    "mean_free_path", "dipole_from_gamma", "gamma_from_dipole",
    "pulse_area_from_energy",
    "IntegrationError", "MonteCarloResult", "OracleRun",
    "demodulated_laplace", "fixed_configuration_components",
    "monte_carlo_pair_averages", "monte_carlo_spectrum",
    "numeric_demodulate", "pair_generator", "sample_configurations",
    "surviving_term_table", "time_domain_evolve",
]
