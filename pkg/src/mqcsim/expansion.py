"""Phase-tagged perturbative expansion of the driven pair state.

The experiment applies pulse 1 at time zero and pulse 2 after a delay,
then integrates fluorescence.  Each pulse kick splits into five optical
phase harmonics per atom (:func:`mqcsim.atom.kick_decomposition`), and
the pair interaction is linear in the coupling-tensor entries
(:func:`mqcsim.coupling.interaction_pieces`).  Rather than evaluating
phases and tensor entries numerically, the pipeline carries them as
symbols: a vector of components, each holding

  * a :class:`PhaseMonomial` recording the integer exponents of the four
    pulse phases (pulse j at atom alpha) and the multiset of coupling
    factors picked up from interaction insertions, and
  * a 256-entry coefficient vector over the two-atom operator basis.

Demodulation then reduces to selecting exponent combinations, and the
disorder average to replacing factor multisets by scalar weights
(:mod:`mqcsim.disorder`), both exact operations on this representation.

Everything here works in the state picture: components are pieces of
the density operator, and the free resolvent, interaction, and kick
maps act on them from the left.  Time dependence is handled in the
Laplace domain; the exact free resolvent is applied through the
analytic eigendecomposition of the single-atom decay generator, with
an optional exact projection of the stationary (both atoms ground)
direction that keeps z = 0 evaluations finite.  That direction carries
no fluorescence, so restricted resolvents are exact for every detected
quantity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atom import PoleError, decay_eigensystem, kick_decomposition
from .basis import NUM_OPS_PAIR, apply_factorized, expand, matrix_unit, pair_operator
from .coupling import interaction_pieces, tensor_tag_value


@dataclass(frozen=True)
class PhaseMonomial:
    """Exponents of the pulse phases plus collected coupling factors.

    ``powers = (a, b, c, d)`` are the integer exponents of the phases of
    (pulse 1 at atom 1, pulse 2 at atom 1, pulse 1 at atom 2, pulse 2 at
    atom 2); the component oscillates as exp(i(a phi_11 + b phi_21 +
    c phi_12 + d phi_22)).  ``tags`` is the sorted multiset of coupling
    tensor factors, each a tag understood by
    :func:`mqcsim.coupling.tensor_tag_value`.
    """

    powers: tuple
    tags: tuple = ()

    @property
    def pulse_net(self):
        """Net exponent per pulse, (a + c, b + d); demodulating at
        harmonic kappa selects pulse_net == (-kappa, kappa)."""
        a, b, c, d = self.powers
        return (a + c, b + d)

    @property
    def atom_net(self):
        """Net exponent per atom, (a + b, c + d); these multiply the
        position phase of the respective atom."""
        a, b, c, d = self.powers
        return (a + b, c + d)

    @property
    def degree(self) -> int:
        """Number of collected coupling factors."""
        return len(self.tags)

    def kicked(self, pulse_index: int, p_atom1: int, p_atom2: int) -> "PhaseMonomial":
        """Monomial after a kick harmonic (p_atom1, p_atom2) of pulse 1 or 2."""
        a, b, c, d = self.powers
        if pulse_index == 1:
            return PhaseMonomial((a + p_atom1, b, c + p_atom2, d), self.tags)
        if pulse_index == 2:
            return PhaseMonomial((a, b + p_atom1, c, d + p_atom2), self.tags)
        raise ValueError(f"pulse_index must be 1 or 2, got {pulse_index}")

    def tagged(self, tag) -> "PhaseMonomial":
        return PhaseMonomial(self.powers, tuple(sorted(self.tags + (tag,))))


class PhaseTaggedVector:
    """Linear combination of phase monomials with operator-basis coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict = dict(terms) if terms else {}

    def add_term(self, monomial: PhaseMonomial, coeffs: np.ndarray) -> None:
        """Accumulate a component, merging with an existing monomial."""
        if monomial in self.terms:
            self.terms[monomial] = self.terms[monomial] + coeffs
        else:
            self.terms[monomial] = coeffs

    def items(self):
        return self.terms.items()

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "PhaseTaggedVector") -> "PhaseTaggedVector":
        out = PhaseTaggedVector(self.terms)
        for monomial, coeffs in other.items():
            out.add_term(monomial, coeffs)
        return out

    def scaled(self, factor: complex) -> "PhaseTaggedVector":
        return PhaseTaggedVector({m: factor * c for m, c in self.items()})

    def filtered(self, keep) -> "PhaseTaggedVector":
        """Vector restricted to monomials satisfying ``keep(monomial)``."""
        return PhaseTaggedVector({m: c for m, c in self.items() if keep(m)})

    def apply_matrix(self, matrix: np.ndarray) -> "PhaseTaggedVector":
        """Apply a phase-free superoperator matrix to every coefficient."""
        return PhaseTaggedVector({m: matrix @ c for m, c in self.items()})

    def evaluate(self, phases, tensor=None) -> np.ndarray:
        """Contract symbols with numbers: 256-entry coefficient vector.

        Args:
            phases: the four pulse phase values (phi_11, phi_21, phi_12,
                phi_22) matching the monomial exponent order.
            tensor: 3x3 coupling tensor for the collected factors; may be
                omitted for factor-free vectors.
        """
        phases = np.asarray(phases, dtype=float)
        out = np.zeros(NUM_OPS_PAIR, dtype=complex)
        for monomial, coeffs in self.items():
            weight = np.exp(1j * np.dot(monomial.powers, phases))
            for tag in monomial.tags:
                weight *= tensor_tag_value(tensor, tag)
            out += weight * coeffs
        return out


def initial_vector() -> PhaseTaggedVector:
    """Both atoms in the ground state, no phase exponents, no factors."""
    ground = expand(pair_operator(matrix_unit(1, 1), matrix_unit(1, 1)))
    return PhaseTaggedVector({PhaseMonomial((0, 0, 0, 0)): ground})


def apply_kick(vector: PhaseTaggedVector, pulse_index: int, theta: float,
               polarization: str, keep=None) -> PhaseTaggedVector:
    """Kick both atoms with one pulse, branching over phase harmonics.

    The pulse reaches the atoms with individual phases (the monomials
    track them separately), so the pair map is the product of one
    five-harmonic decomposition per atom: 25 branches, pruned by the
    optional ``keep`` predicate on the resulting monomial and by exact
    structural zeros.
    """
    harmonics = kick_decomposition(theta, polarization)
    mats = {p: harmonics.harmonic(p) for p in range(-2, 3)}
    out = PhaseTaggedVector()
    for monomial, coeffs in vector.items():
        for p1 in range(-2, 3):
            for p2 in range(-2, 3):
                kicked = monomial.kicked(pulse_index, p1, p2)
                if keep is not None and not keep(kicked):
                    continue
                new = apply_factorized(mats[p1], mats[p2], coeffs)
                if not np.any(new):
                    continue
                out.add_term(kicked, new)
    return out


def _resolvent_coeffs(coeffs: np.ndarray, z, gamma: float,
                      restrict_stationary: bool) -> np.ndarray:
    """Exact pair resolvent of the free decay generator on one coefficient
    vector, via the analytic single-atom eigendecomposition.

    ``coeffs`` may carry one trailing batch axis and ``z`` may be an
    array; the two broadcast against each other, so a whole frequency
    grid costs a single pass.
    """
    eig = decay_eigensystem()
    rates = gamma * eig.rates
    z_arr = np.asarray(z, dtype=complex)
    scalar_out = coeffs.ndim == 1 and z_arr.ndim == 0
    block = coeffs.reshape(16, 16, -1)
    eigen = np.einsum("ik,klv,jl->ijv", eig.inverse, block, eig.inverse,
                      optimize=True)
    pair_rates = rates[:, None] + rates[None, :]
    denom = z_arr.reshape((1, 1) + z_arr.shape) - pair_rates[:, :, None]
    if restrict_stationary:
        eigen[0, 0] = 0.0
        denom[0, 0] = 1.0
    on_pole = np.abs(denom) < 1e-12
    if np.any(on_pole):
        scale = max(np.max(np.abs(eigen)), 1e-300)
        if np.any(on_pole & (np.abs(eigen) > 1e-9 * scale)):
            raise PoleError(f"pair resolvent evaluated on a pole at z = {z}")
        eigen = np.where(on_pole, 0.0, eigen)
        denom = np.where(on_pole, 1.0, denom)
    eigen = eigen / denom
    out = np.einsum("ik,klv,jl->ijv", eig.modes, eigen, eig.modes,
                    optimize=True)
    return out.reshape(-1) if scalar_out else out.reshape(256, -1)


def apply_resolvent(vector: PhaseTaggedVector, z: complex, gamma: float = 1.0,
                    restrict_stationary: bool = False) -> PhaseTaggedVector:
    """Laplace-domain free evolution of every component (state picture).

    With ``restrict_stationary`` the both-atoms-ground stationary
    direction is projected out before inverting, which keeps z = 0
    regular.  Components whose phase exponents do not all cancel carry
    no stationary weight, so the restriction is exact for them; in the
    fully cancelled sector it discards a genuine z = 0 pole (the
    delay-independent background), which later kicks can redistribute.
    The discarded direction itself is invisible to fluorescence
    detection and annihilated by the pair interaction.
    """
    return PhaseTaggedVector(
        {m: _resolvent_coeffs(c, z, gamma, restrict_stationary)
         for m, c in vector.items()})


def apply_free(vector: PhaseTaggedVector, t: float, gamma: float = 1.0) -> PhaseTaggedVector:
    """Time-domain free decay of every component (state picture)."""
    eig = decay_eigensystem()
    rates = gamma * eig.rates
    scales = np.exp((rates[:, None] + rates[None, :]) * t)
    out = {}
    for monomial, coeffs in vector.items():
        eigen = eig.inverse @ coeffs.reshape(16, 16) @ eig.inverse.T
        out[monomial] = (eig.modes @ (scales * eigen) @ eig.modes.T).reshape(-1)
    return PhaseTaggedVector(out)


def apply_interaction(vector: PhaseTaggedVector, picture: str = "state") -> PhaseTaggedVector:
    """One pair-interaction insertion, branching over coupling factors.

    Each component acquires one symbolic tensor factor per canonical
    tag, with the matching 256x256 piece applied to its coefficients.
    """
    pieces = interaction_pieces(picture)
    out = PhaseTaggedVector()
    for monomial, coeffs in vector.items():
        for tag, piece in pieces.items():
            new = piece @ coeffs
            if not np.any(new):
                continue
            out.add_term(monomial.tagged(tag), new)
    return out


def demodulation_keep(kappa: int):
    """Predicate selecting monomials read out at demodulation harmonic kappa."""
    return lambda monomial: monomial.pulse_net == (-kappa, kappa)


def scattering_solution(order: int, z1: complex, z2: complex, theta: float,
                        channel: str = "parallel", kappa=None, fast: bool = False,
                        gamma: float = 1.0, initial=None,
                        restrict_stationary: bool = True) -> PhaseTaggedVector:
    """Pair state after both pulses, expanded to a fixed interaction order.

    Args:
        order: total number of pair-interaction insertions (0 keeps the
            atoms independent, 2 adds the leading interaction effect on
            demodulated signals).
        z1: Laplace variable conjugate to the interpulse delay.
        z2: Laplace variable conjugate to the detection time.
        theta: pulse area (both pulses).
        channel: "parallel" for x,x pulse polarizations, "perpendicular"
            for x,y.
        kappa: optional demodulation harmonic; components that cannot
            reach it are pruned as early as possible.  None keeps all.
        fast: place all interaction insertions after the second pulse
            (detection stage only) instead of summing every split
            between the two evolution windows.
        gamma: single-atom decay rate.
        initial: starting vector, default both atoms ground.
        restrict_stationary: use stationary-restricted resolvents,
            finite at z = 0.  Demodulated components come out exact up
            to a piece along the detection-null ground-pair direction;
            only the unmodulated background sector is truly altered.

    Returns:
        PhaseTaggedVector of the doubly Laplace-transformed state; the
        sum over interaction splits is already performed.
    """
    second_pol = {"parallel": "x", "perpendicular": "y"}[channel]
    if initial is None:
        initial = initial_vector()
    keep1 = keep2 = None
    if kappa is not None:
        keep1 = lambda m: m.pulse_net[0] == -kappa
        keep2 = demodulation_keep(kappa)
    after_first = apply_kick(initial, 1, theta, "x", keep=keep1)
    interpulse = apply_resolvent(after_first, z1, gamma, restrict_stationary)
    splits = (0,) if fast else tuple(range(order + 1))
    total = PhaseTaggedVector()
    for between in splits:
        part = interpulse
        for _ in range(between):
            part = apply_interaction(part)
            part = apply_resolvent(part, z1, gamma, restrict_stationary)
        part = apply_kick(part, 2, theta, second_pol, keep=keep2)
        part = apply_resolvent(part, z2, gamma, restrict_stationary)
        for _ in range(order - between):
            part = apply_interaction(part)
            part = apply_resolvent(part, z2, gamma, restrict_stationary)
        total = total + part
    return total
