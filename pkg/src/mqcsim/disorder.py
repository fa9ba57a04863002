"""Average over random pair geometry (separation and orientation).

The atoms sit at random positions, so the dimensionless separation xi
and the axis direction n are random.  For demodulated signals the
average acts on two distinct objects carried by the phase-tagged
expansion:

  * monomial position phases exp(i m1 k . r1 + i m2 k . r2) with
    m1, m2 the net per-atom exponents: isotropic averaging suppresses
    every term with (m1, m2) != (0, 0) (they appear only combined with
    already small coupling factors and oscillate in xi), so the
    surviving single- and double-scattering average keeps exactly the
    monomials with zero net exponent on each atom;
  * products of two coupling-tensor factors: in the far field each
    factor is (3 gamma / 4 xi) e^{-i xi} times a transverse projector
    entry, so factor-conjugate pairs lose their xi oscillation and
    average to (3 gamma / 4)^2 <1/xi^2> times a universal isotropic
    fourth-moment of the projector, while same-kind pairs keep an
    e^{+-2 i xi} oscillation and average away.

Single factors average away for the same oscillation reason, and
factor-free components pass through untouched, so averaging a vector
collapses every component to a tag-free monomial with a scalar weight.

``mode="level_shift_only"`` replaces each factor by i times its
imaginary part before averaging (the collective-decay part of the
coupling switched off); same-kind pairs then survive with weight
-<Omega Omega> because only half of each product oscillates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import NUM_OPS_PAIR
from .coupling import interaction_pieces
from .expansion import (
    PhaseMonomial,
    PhaseTaggedVector,
    apply_interaction,
    apply_kick,
    apply_resolvent,
    demodulation_keep,
    initial_vector,
)

AVERAGE_MODES = ("full", "level_shift_only")


def mean_inverse_xi_squared(xi_bar: float = None, window=None) -> float:
    """<1/xi^2> for a sharp separation xi_bar or a uniform window (lo, hi)."""
    if (xi_bar is None) == (window is None):
        raise ValueError("give exactly one of xi_bar or window")
    if xi_bar is not None:
        return 1.0 / xi_bar**2
    lo, hi = window
    if not 0 < lo < hi:
        raise ValueError(f"invalid window {window!r}")
    return 1.0 / (lo * hi)


def survival_filter(vector: PhaseTaggedVector) -> PhaseTaggedVector:
    """Keep only monomials whose position phases cancel on both atoms."""
    return vector.filtered(lambda m: m.atom_net == (0, 0))


def isotropic_projector_moment(k: int, l: int, m: int, n: int) -> float:
    """<(I - nn)_kl (I - nn)_mn> over isotropic axis directions.

    The normalized fourth-moment identity
    <n_k n_l n_m n_n> = (d_kl d_mn + d_km d_ln + d_kn d_lm)/15 reduces
    the average to (2/5) d_kl d_mn + (d_km d_ln + d_kn d_lm)/15.
    """
    def delta(i, j):
        return 1.0 if i == j else 0.0

    return (0.4 * delta(k, l) * delta(m, n)
            + (delta(k, m) * delta(l, n) + delta(k, n) * delta(l, m)) / 15.0)


def angular_average(tags, inv_xi_squared: float, gamma: float = 1.0,
                    mode: str = "full") -> complex:
    """Mean of a product of two far-field coupling factors.

    Args:
        tags: pair of tensor tags ((kind, k, l), (kind, m, n)).
        inv_xi_squared: <1/xi^2> of the separation distribution.
        gamma: single-atom decay rate.
        mode: "full" averages the factors as they stand;
            "level_shift_only" averages them with the decay part
            removed (factor -> i Im factor).

    Returns:
        Scalar weight replacing the factor product under the average.
    """
    if mode not in AVERAGE_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    (kind1, k, l), (kind2, m, n) = tags
    scale = (0.75 * gamma) ** 2 * inv_xi_squared
    moment = isotropic_projector_moment(k, l, m, n)
    mixed = kind1 != kind2
    if mode == "full":
        return scale * moment if mixed else 0.0
    return (0.5 if mixed else -0.5) * scale * moment


@dataclass(frozen=True)
class KernelSecondMoments:
    """Isotropic second moments of the decay and shift kernels.

    Entries are (3, 3, 3, 3) arrays indexed (k, l, m, n); the decay and
    shift kernels contribute identical halves of the factor-conjugate
    average and their cross moment vanishes.
    """

    decay_decay: np.ndarray
    shift_shift: np.ndarray
    decay_shift: np.ndarray


def gamma_omega_averages(inv_xi_squared: float, gamma: float = 1.0) -> KernelSecondMoments:
    """Second moments of Re/Im of the far-field coupling tensor."""
    moment = np.array([[[[isotropic_projector_moment(k, l, m, n)
                          for n in range(3)] for m in range(3)]
                        for l in range(3)] for k in range(3)])
    half = 0.5 * (0.75 * gamma) ** 2 * inv_xi_squared * moment
    return KernelSecondMoments(decay_decay=half, shift_shift=half.copy(),
                               decay_shift=np.zeros_like(half))


def _effective_final_insertions(inv_xi_squared: float, gamma: float,
                                mode: str) -> dict:
    """Per open factor, the matrix performing the last insertion and the
    factor-pair average in one step: sum over closing factors of the
    averaged pair weight times that factor's insertion piece."""
    pieces = interaction_pieces("state")
    out = {}
    for first in pieces:
        acc = np.zeros((NUM_OPS_PAIR, NUM_OPS_PAIR), dtype=complex)
        for second, piece in pieces.items():
            weight = angular_average((first, second), inv_xi_squared, gamma,
                                     mode)
            if weight != 0.0:
                acc += weight * piece
        out[first] = acc
    return out


def _insert(vector: PhaseTaggedVector, final: dict, last: bool) -> PhaseTaggedVector:
    if not last:
        return apply_interaction(vector)
    out = PhaseTaggedVector()
    for monomial, coeffs in vector.items():
        (tag,) = monomial.tags
        new = final[tag] @ coeffs
        if np.any(new):
            out.add_term(PhaseMonomial(monomial.powers), new)
    return out


def averaged_solution(order: int, z1, theta: float, channel: str = "parallel",
                      kappa: int = 1, *, inv_xi_squared: float, z2=0.0,
                      gamma: float = 1.0, mode: str = "full",
                      fast: bool = False,
                      restrict_stationary: bool = True) -> PhaseTaggedVector:
    """Geometry-averaged demodulated pair state after both pulses.

    Equal to the full expansion followed by ``average_state``, but the
    average is interleaved with the chain: the second kick keeps only
    components whose position phases already cancel (later insertions
    never change the phase exponents), and the final insertion of each
    split applies the factor-pair weights directly, so the working set
    stays small enough to batch a whole frequency grid through ``z1``.
    """
    if order not in (0, 2):
        raise ValueError("averaged chains support interaction orders 0 and 2")
    second_pol = {"parallel": "x", "perpendicular": "y"}[channel]
    demod = demodulation_keep(kappa)
    keep1 = lambda m: m.pulse_net[0] == -kappa
    keep2 = lambda m: demod(m) and m.atom_net == (0, 0)
    final = (_effective_final_insertions(inv_xi_squared, gamma, mode)
             if order else None)
    after_first = apply_kick(initial_vector(), 1, theta, "x", keep=keep1)
    interpulse = apply_resolvent(after_first, z1, gamma, restrict_stationary)
    splits = (0,) if fast else tuple(range(order + 1))
    total = PhaseTaggedVector()
    for between in splits:
        part = interpulse
        for step in range(between):
            part = _insert(part, final, last=step == order - 1)
            part = apply_resolvent(part, z1, gamma, restrict_stationary)
        part = apply_kick(part, 2, theta, second_pol, keep=keep2)
        part = apply_resolvent(part, z2, gamma, restrict_stationary)
        for step in range(between, order):
            part = _insert(part, final, last=step == order - 1)
            part = apply_resolvent(part, z2, gamma, restrict_stationary)
        total = total + part
    return total


def average_state(vector: PhaseTaggedVector, inv_xi_squared: float,
                  gamma: float = 1.0, mode: str = "full") -> PhaseTaggedVector:
    """Disorder-average a vector: collapse factor pairs, drop the rest.

    Components with a single factor or with surviving position phases
    are removed; factor pairs are replaced by scalar weights; factor-free
    components pass through.  Components with more than two factors are
    outside the single-plus-double-scattering average and raise.
    """
    out = PhaseTaggedVector()
    for monomial, coeffs in survival_filter(vector).items():
        if monomial.degree == 0:
            out.add_term(monomial, coeffs)
            continue
        if monomial.degree == 1:
            continue
        if monomial.degree > 2:
            raise ValueError("average supports at most two coupling factors, "
                             f"got {monomial.degree}")
        weight = angular_average(monomial.tags, inv_xi_squared, gamma, mode)
        if weight == 0.0:
            continue
        out.add_term(PhaseMonomial(monomial.powers), weight * coeffs)
    return out
