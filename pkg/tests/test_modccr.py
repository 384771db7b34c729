"""Deformed-commutator sector: mode map, correction vectors, observables."""

import math

import numpy as np
import pytest

from holosim import (
    AmplitudeTooLarge,
    AuxiliaryModeMap,
    CutoffTooSmall,
    DeformationParams,
    FockCutoff,
    NegativeParameter,
    QuadratureUnderResolved,
    SqueezeParams,
    build_twb,
    build_twb_prime,
    closed_form_correction,
    deformed_commutator_check,
    deformed_number_difference_action,
    duhamel_first_order,
    perturbation_generator_action,
    squeeze_generator_action,
)
from holosim._propagators import apply_exponential
from holosim.modccr import _pair_annihilate, _pair_create


def flat_basis(n1, n2, dim):
    vec = np.zeros(dim * dim, dtype=complex)
    vec[n1 * dim + n2] = 1.0
    return vec


def test_mode_map_coefficients():
    eps = 0.1
    mm = AuxiliaryModeMap.from_epsilon(eps)
    root = math.sqrt(1.1)
    eta = eps / (2.0 * root)
    expected = np.array([[root, eta, 0.0, -eta],
                         [eta, root, eta, 0.0]])
    assert np.allclose(mm.matrix, expected, atol=1e-15)
    assert mm.epsilon == eps


def test_mode_map_strength_guard():
    with pytest.raises(AmplitudeTooLarge):
        AuxiliaryModeMap.from_epsilon(0.3)


@pytest.mark.parametrize("eps", [0.01, 0.1])
def test_deformed_commutators(eps):
    report = deformed_commutator_check(AuxiliaryModeMap.from_epsilon(eps),
                                       FockCutoff(20))
    assert report.epsilon == eps
    assert report.dev_a1_a2 < 1e-10
    assert report.dev_a1_a2_dagger < 1e-10
    assert report.dev_same_mode < 1e-10
    assert report.max_deviation < 1e-10


def test_commutators_undeformed_limit():
    report = deformed_commutator_check(AuxiliaryModeMap.from_epsilon(0.0),
                                       FockCutoff(10))
    assert report.max_deviation < 1e-12


def test_commutator_check_needs_guard_room():
    with pytest.raises(CutoffTooSmall):
        deformed_commutator_check(AuxiliaryModeMap.from_epsilon(0.1),
                                  FockCutoff(3))


def test_squeeze_generator_on_basis_states():
    cut = FockCutoff(6)
    act = squeeze_generator_action(0.7, cut)
    out = act(flat_basis(0, 0, cut.dim)).reshape(cut.dim, cut.dim)
    assert out[1, 1] == pytest.approx(0.7, abs=1e-15)
    assert np.count_nonzero(out) == 1
    out = act(flat_basis(1, 1, cut.dim)).reshape(cut.dim, cut.dim)
    assert out[2, 2] == pytest.approx(1.4, abs=1e-14)
    assert out[0, 0] == pytest.approx(-0.7, abs=1e-15)


def test_perturbation_generator_on_vacuum():
    cut = FockCutoff(6)
    r = 0.9
    act = perturbation_generator_action(r, cut)
    out = act(flat_basis(0, 0, cut.dim)).reshape(cut.dim, cut.dim)
    assert out[2, 0] == pytest.approx(r * math.sqrt(2.0) / 2.0, abs=1e-14)
    assert out[0, 2] == pytest.approx(r * math.sqrt(2.0) / 2.0, abs=1e-14)
    assert out[1, 1] == pytest.approx(r, abs=1e-14)
    assert out[0, 0] == pytest.approx(-r, abs=1e-14)


def test_deformed_difference_on_basis_state():
    cut = FockCutoff(6)
    eps = 0.05
    act = deformed_number_difference_action(eps, cut)
    psi = np.zeros((cut.dim, cut.dim), dtype=complex)
    psi[2, 0] = 1.0
    out = act(psi)
    assert out[2, 0] == pytest.approx(2.0 * (1.0 + eps), abs=1e-14)
    assert out[3, 1] == pytest.approx(-eps * math.sqrt(3.0), abs=1e-14)


def test_duhamel_matches_closed_form():
    cut = FockCutoff(48)
    duh = duhamel_first_order(0.4, perturbation_generator_action(0.4, cut), cut)
    closed = closed_form_correction(0.4, cut)
    assert np.max(np.abs(duh.amplitudes - closed.amplitudes)) < 1e-8


def test_duhamel_reduces_to_strength_derivative():
    # With the perturbation equal to the generator itself, the response is
    # r * d/dr of the squeezed-pair state; checked by central differencing.
    r, h = 0.6, 1e-4
    cut = FockCutoff(60)
    duh = duhamel_first_order(r, squeeze_generator_action(r, cut), cut)
    plus = build_twb(SqueezeParams(r + h), cut)
    minus = build_twb(SqueezeParams(r - h), cut)
    fd = r * (plus.amplitudes - minus.amplitudes) / (2.0 * h)
    assert np.max(np.abs(duh.amplitudes - fd)) < 1e-6


def test_duhamel_guards():
    cut = FockCutoff(16)
    pert = perturbation_generator_action(0.5, cut)
    with pytest.raises(CutoffTooSmall):
        duhamel_first_order(1.6, pert, cut)
    with pytest.raises(NegativeParameter):
        duhamel_first_order(-0.2, pert, cut)
    with pytest.raises(QuadratureUnderResolved):
        duhamel_first_order(0.5, pert, cut, nodes=2)


def test_pair_mode_conjugation_identity():
    # exp(-u*G) A1 exp(u*G) = cosh(ru) A1 + sinh(ru) A2' on the guarded
    # interior block (occupations <= 8 in, <= 10 out); near the truncation
    # edge the finite-space exponential genuinely departs from the algebra.
    d, guard, r = 101, 8, 0.8
    cols = [n1 * d + n2 for n1 in range(guard + 1) for n2 in range(guard + 1)]
    basis = np.zeros((d * d, len(cols)), dtype=complex)
    for j, idx in enumerate(cols):
        basis[idx, j] = 1.0
    root = np.sqrt(np.arange(1, d))

    def lower_1(batch):
        psi = batch.reshape(d, d, -1)
        out = np.zeros_like(psi)
        out[:-1] = root[:, None, None] * psi[1:]
        return out.reshape(d * d, -1)

    def raise_2(batch):
        psi = batch.reshape(d, d, -1)
        out = np.zeros_like(psi)
        out[:, 1:] = root[None, :, None] * psi[:, :-1]
        return out.reshape(d * d, -1)

    rows = np.zeros(d * d, dtype=bool)
    for n1 in range(guard + 3):
        for n2 in range(guard + 3):
            rows[n1 * d + n2] = True
    for u in (0.25, 0.5, 1.0):
        lhs = apply_exponential(
            "squeeze", d, -u * r,
            lower_1(apply_exponential("squeeze", d, u * r, basis)))
        rhs = (math.cosh(r * u) * lower_1(basis)
               + math.sinh(r * u) * raise_2(basis))
        assert np.max(np.abs((lhs - rhs)[rows])) < 1e-9


def test_twb_prime_degenerate_limits():
    cut = FockCutoff(20)
    plain = build_twb(SqueezeParams(0.5), cut)
    no_deform = build_twb_prime(DeformationParams(0.0, 0.5), cut)
    assert np.array_equal(no_deform.amplitudes, plain.amplitudes)
    no_squeeze = build_twb_prime(DeformationParams(0.1, 0.0), cut)
    assert no_squeeze.amplitudes[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_twb_prime_overlap_and_norm():
    eps = 0.05
    cut = FockCutoff(30)
    twb = build_twb(SqueezeParams(0.8), cut, tail_tol=1e-6)
    prime = build_twb_prime(DeformationParams(eps, 0.8), cut, tail_tol=1e-6)
    assert prime.norm() == pytest.approx(1.0, abs=1e-12)
    deviation = 1.0 - abs(np.vdot(twb.amplitudes, prime.amplitudes)) ** 2
    assert 0.0 < deviation < 4.0 * eps * eps


def test_twb_prime_correction_scales_linearly():
    # Using the eps=0.02 build as the reference slope, the residual after
    # removing the linear part grows like eps*(eps - 0.02).
    cut = FockCutoff(30)
    base = build_twb(SqueezeParams(0.8), cut, tail_tol=1e-6).amplitudes
    slope = (build_twb_prime(DeformationParams(0.02, 0.8), cut,
                             tail_tol=1e-6).amplitudes - base) / 0.02
    residual = {}
    for eps in (0.04, 0.08):
        prime = build_twb_prime(DeformationParams(eps, 0.8), cut, tail_tol=1e-6)
        residual[eps] = float(np.linalg.norm(
            prime.amplitudes - base - eps * slope))
    assert 3.0 < residual[0.08] / residual[0.04] < 9.0


def test_deformed_difference_first_order_structure():
    # To first order the observable on the corrected state equals
    # eps * (sqrt(2) r e^{rG}(|2,0> - |0,2>) - (A1A2 + A1'A2')|TWB>).
    r = 0.8
    cut = FockCutoff(40)
    d = cut.dim
    twb = build_twb(SqueezeParams(r), cut)
    seed = np.zeros((d, d), dtype=complex)
    seed[2, 0], seed[0, 2] = 1.0, -1.0
    rotated = apply_exponential("squeeze", d, r, seed.ravel()).reshape(d, d)
    pair_part = _pair_annihilate(twb.amplitudes) + _pair_create(twb.amplitudes)
    residuals = {}
    for eps in (1e-4, 2e-4):
        prime = build_twb_prime(DeformationParams(eps, r), cut)
        moved = deformed_number_difference_action(eps, cut)(prime.amplitudes)
        first_order = eps * (math.sqrt(2.0) * r * rotated - pair_part)
        residuals[eps] = float(np.linalg.norm(moved - first_order))
        assert residuals[eps] < 30.0 * eps * eps
    assert 3.0 < residuals[2e-4] / residuals[1e-4] < 5.0


def test_deformation_params_guards():
    with pytest.raises(AmplitudeTooLarge):
        DeformationParams(0.25, 0.5)
    with pytest.raises(NegativeParameter):
        DeformationParams(0.1, -0.5)
