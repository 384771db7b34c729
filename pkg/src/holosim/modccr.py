"""Deformed-commutator sector.

A constant deformation epsilon of the canonical mode algebra
([a1,a2] = [a1,a2'] = eps, [ai,ai'] = 1+eps) is realized through an
explicit linear map onto standard auxiliary modes A1, A2.  This module
verifies the deformed algebra on the truncated space, builds the
first-order perturbative correction to the twin-beam state via a Duhamel
integral over conjugated generators, and provides the closed-form
correction vector it collapses to, plus the deformed number-difference
observable used by the oracle uncertainty evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from ._propagators import apply_exponential
from .errors import (
    AmplitudeTooLarge,
    CutoffTooSmall,
    NegativeParameter,
    QuadratureUnderResolved,
)
from .fock import FockCutoff, MultiModeFockState, SqueezeParams, build_twb

MAX_EPSILON = 0.2
MAX_SQUEEZE = 1.5
DEFAULT_ORACLE_CUTOFF = 64


@dataclass(frozen=True)
class DeformationParams:
    """Deformation strength epsilon (|eps| <= 0.2) and squeeze strength r."""

    epsilon: float
    r: float

    def __post_init__(self):
        if abs(self.epsilon) > MAX_EPSILON:
            raise AmplitudeTooLarge(
                f"|epsilon| must be <= {MAX_EPSILON}, got {self.epsilon!r}")
        if self.r < 0.0:
            raise NegativeParameter(f"squeeze strength must be >= 0, got {self.r!r}")


@dataclass(frozen=True)
class AuxiliaryModeMap:
    """Coefficients of (a1, a2) over the operator basis (A1, A2, A1', A2').

    Rows are the deformed modes; the defining map is
    a1 = sqrt(1+eps) A1 + eta (A2 - A2') and
    a2 = sqrt(1+eps) A2 + eta (A1 + A1'), with eta = eps / (2 sqrt(1+eps)).
    """

    matrix: np.ndarray
    epsilon: float

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "AuxiliaryModeMap":
        if abs(epsilon) > MAX_EPSILON:
            raise AmplitudeTooLarge(
                f"|epsilon| must be <= {MAX_EPSILON}, got {epsilon!r}")
        root = math.sqrt(1.0 + epsilon)
        eta = epsilon / (2.0 * root)
        mat = np.array([
            #  A1    A2    A1'   A2'
            [root,  eta,  0.0, -eta],   # a1
            [eta,  root,  eta,  0.0],   # a2
        ])
        return cls(matrix=mat, epsilon=epsilon)


@dataclass(frozen=True)
class CommutatorCheckReport:
    """Max deviations of ([a1,a2], [a1,a2'], [ai,ai']) from (eps, eps, 1+eps)."""

    epsilon: float
    n_max: int
    dev_a1_a2: float
    dev_a1_a2_dagger: float
    dev_same_mode: float

    @property
    def max_deviation(self) -> float:
        return max(self.dev_a1_a2, self.dev_a1_a2_dagger, self.dev_same_mode)


def _single_mode_ladder(dim: int) -> np.ndarray:
    a = np.zeros((dim, dim))
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def deformed_commutator_check(mode_map: AuxiliaryModeMap,
                              cutoff: FockCutoff) -> CommutatorCheckReport:
    """Evaluate the three deformed commutators as truncated-space matrices.

    The expected values (eps, eps, 1+eps) hold exactly away from the
    truncation edge; deviations are reported on the guarded subspace with
    both occupations <= n_max - 2, where quadratic products close.
    """
    if cutoff.n_max < 4:
        raise CutoffTooSmall(
            "commutator check needs n_max >= 4 to guard the truncation edge")
    d = cutoff.dim
    a = _single_mode_ladder(d)
    eye = np.eye(d)
    basis = [np.kron(a, eye), np.kron(eye, a),
             np.kron(a.T, eye), np.kron(eye, a.T)]
    a1 = sum(c * op for c, op in zip(mode_map.matrix[0], basis))
    a2 = sum(c * op for c, op in zip(mode_map.matrix[1], basis))
    eps = mode_map.epsilon
    eye2 = np.eye(d * d)

    occ = np.arange(d)
    keep = ((occ[:, None] <= cutoff.n_max - 2)
            & (occ[None, :] <= cutoff.n_max - 2)).ravel()

    def guarded_dev(mat: np.ndarray, expected: float) -> float:
        block = (mat - expected * eye2)[np.ix_(keep, keep)]
        return float(np.max(np.abs(block)))

    dev12 = guarded_dev(a1 @ a2 - a2 @ a1, eps)
    dev12d = guarded_dev(a1 @ a2.T - a2.T @ a1, eps)
    dev_same = max(guarded_dev(a1 @ a1.T - a1.T @ a1, 1.0 + eps),
                   guarded_dev(a2 @ a2.T - a2.T @ a2, 1.0 + eps))
    return CommutatorCheckReport(epsilon=eps, n_max=cutoff.n_max,
                                 dev_a1_a2=dev12, dev_a1_a2_dagger=dev12d,
                                 dev_same_mode=dev_same)


def _pair_create(psi: np.ndarray) -> np.ndarray:
    """A1' A2' acting on a two-mode amplitude tensor."""
    d = psi.shape[0]
    out = np.zeros_like(psi)
    root = np.sqrt(np.arange(1, d))
    out[1:, 1:] = root[:, None] * root[None, :] * psi[:-1, :-1]
    return out


def _pair_annihilate(psi: np.ndarray) -> np.ndarray:
    """A1 A2 acting on a two-mode amplitude tensor."""
    d = psi.shape[0]
    out = np.zeros_like(psi)
    root = np.sqrt(np.arange(1, d))
    out[:-1, :-1] = root[:, None] * root[None, :] * psi[1:, 1:]
    return out


def _sum_create(psi: np.ndarray) -> np.ndarray:
    """(A1' + A2') acting on a two-mode amplitude tensor."""
    d = psi.shape[0]
    out = np.zeros_like(psi)
    root = np.sqrt(np.arange(1, d))
    out[1:, :] += root[:, None] * psi[:-1, :]
    out[:, 1:] += root[None, :] * psi[:, :-1]
    return out


def _sum_annihilate(psi: np.ndarray) -> np.ndarray:
    """(A1 + A2) acting on a two-mode amplitude tensor."""
    d = psi.shape[0]
    out = np.zeros_like(psi)
    root = np.sqrt(np.arange(1, d))
    out[:-1, :] += root[:, None] * psi[1:, :]
    out[:, :-1] += root[None, :] * psi[:, 1:]
    return out


def squeeze_generator_action(r: float, cutoff: FockCutoff):
    """Action of the squeeze generator r*(A1'A2' - A1A2) on flat vectors."""
    d = cutoff.dim

    def act(flat: np.ndarray) -> np.ndarray:
        psi = flat.reshape(d, d)
        return (r * (_pair_create(psi) - _pair_annihilate(psi))).ravel()

    return act


def perturbation_generator_action(r: float, cutoff: FockCutoff):
    """First-order generator perturbation per unit epsilon.

    Expanding the squeeze generator written in deformed modes around
    eps = 0 gives the perturbation r*((X'^2 - X^2)/2 - 1) with
    X = A1 + A2; it commutes with the unperturbed generator, which is what
    collapses the Duhamel integral to a closed form.
    """
    d = cutoff.dim

    def act(flat: np.ndarray) -> np.ndarray:
        psi = flat.reshape(d, d)
        up2 = _sum_create(_sum_create(psi))
        down2 = _sum_annihilate(_sum_annihilate(psi))
        return (r * (0.5 * (up2 - down2) - psi)).ravel()

    return act


def duhamel_first_order(r: float, b_pert, cutoff: FockCutoff,
                        nodes: int = 16) -> MultiModeFockState:
    """First-order response vector e^A Int_0^1 e^{-uA} B e^{uA} du |0>.

    A is the squeeze generator with strength r; ``b_pert`` is the
    perturbing operator, given either as a dense matrix on the flattened
    two-mode space or as a callable on flat vectors.  The u-integral uses
    fixed Gauss-Legendre quadrature; the integrand is analytic in u, so
    convergence is rapid.  The result is a correction vector, not a
    normalized state.
    """
    if r > MAX_SQUEEZE:
        raise CutoffTooSmall(
            f"squeeze strength {r!r} exceeds {MAX_SQUEEZE}; the truncated "
            "space cannot hold the correction accurately")
    if r < 0.0:
        raise NegativeParameter(f"squeeze strength must be >= 0, got {r!r}")
    if nodes < 4:
        raise QuadratureUnderResolved(f"need >= 4 quadrature nodes, got {nodes}")
    apply_b = (lambda v: b_pert @ v) if isinstance(b_pert, np.ndarray) else b_pert
    d = cutoff.dim
    vac = np.zeros(d * d, dtype=complex)
    vac[0] = 1.0
    x, w = roots_legendre(nodes)
    u_nodes, u_weights = (x + 1.0) / 2.0, w / 2.0
    integral = np.zeros(d * d, dtype=complex)
    for u, wu in zip(u_nodes, u_weights):
        v = apply_exponential("squeeze", d, u * r, vac)
        v = np.asarray(apply_b(v), dtype=complex)
        integral += wu * apply_exponential("squeeze", d, -u * r, v)
    out = apply_exponential("squeeze", d, r, integral)
    return MultiModeFockState(2, cutoff, out.reshape(d, d), normalized=False)


def closed_form_correction(r: float, cutoff: FockCutoff) -> MultiModeFockState:
    """The collapsed Duhamel vector r * e^{rA} ((X'^2)/2 - 1) |0>."""
    d = cutoff.dim
    vac = np.zeros((d, d), dtype=complex)
    vac[0, 0] = 1.0
    seed = 0.5 * _sum_create(_sum_create(vac)) - vac
    out = r * apply_exponential("squeeze", d, r, seed.ravel())
    return MultiModeFockState(2, cutoff, out.reshape(d, d), normalized=False)


def build_twb_prime(params: DeformationParams, cutoff: FockCutoff,
                    tail_tol: float = 1e-10) -> MultiModeFockState:
    """Twin-beam state carrying the first-order deformation correction.

    Returns the renormalized |TWB> + eps * r * e^{rA}((X'^2)/2 - 1)|0>;
    renormalization shifts moments only at second order in epsilon.
    """
    if params.r > MAX_SQUEEZE:
        raise CutoffTooSmall(
            f"squeeze strength {params.r!r} exceeds {MAX_SQUEEZE}")
    twb = build_twb(SqueezeParams(params.r), cutoff, tail_tol=tail_tol)
    if params.epsilon == 0.0 or params.r == 0.0:
        return twb
    corr = closed_form_correction(params.r, cutoff)
    amp = twb.amplitudes + params.epsilon * corr.amplitudes
    amp = amp / np.linalg.norm(amp.ravel())
    return MultiModeFockState(2, cutoff, amp, discarded_tail=twb.discarded_tail)


def deformed_number_difference_action(epsilon: float, cutoff: FockCutoff):
    """Action of the deformed-mode number difference, to first order.

    Through the auxiliary-mode map, a1'a1 - a2'a2 equals
    (1+eps)(N1 - N2) - eps(A1A2 + A1'A2') up to O(eps^2) terms.
    """
    d = cutoff.dim
    occ_diff = (np.arange(d)[:, None] - np.arange(d)[None, :]).astype(float)

    def act(psi: np.ndarray) -> np.ndarray:
        return ((1.0 + epsilon) * occ_diff * psi
                - epsilon * (_pair_annihilate(psi) + _pair_create(psi)))

    return act
