"""Analytic backend: width evolution, moment factorization, quadrature."""

import math

import pytest

from holosim import (
    DegreeTooHigh,
    EnvironmentParams,
    FockCutoff,
    NegativeParameter,
    QuadratureSpec,
    QuadratureUnderResolved,
    SqueezeParams,
    TwoModeGaussianState,
    UnsupportedPhase,
    WignerMonomial,
    build_twb,
    difference_power_terms,
    evolve,
    expectation,
    from_squeezing,
    glauber_moment,
    isserlis_moment,
)

E4 = 54.598150033144236                  # exp(4)
EM4 = 0.018315638888734182               # exp(-4)
SINH2_1 = 1.3810978455418155             # sinh(1)**2
COSH1_SINH1 = 1.8134302039235093         # cosh(1)*sinh(1)
SIGMA_PLUS_REF = 54.54382904813035       # r=2, M=0, lambda*t=1e-3


def difference_moment(state, power, via):
    """<(N1 - N2)^power> assembled from ordered monomials."""
    total = 0.0
    for mono, coeff in difference_power_terms(power).items():
        if mono.degree == 0:
            total += coeff
        else:
            total += coeff * via(state, mono).real
    return total


def test_from_squeezing_vacuum():
    state = from_squeezing(SqueezeParams(0.0))
    assert state.sigma_plus == 1.0
    assert state.sigma_minus == 1.0


def test_from_squeezing_reference_widths():
    state = from_squeezing(SqueezeParams(2.0))
    assert state.sigma_plus == pytest.approx(E4, rel=1e-14)
    assert state.sigma_minus == pytest.approx(EM4, rel=1e-14)


@pytest.mark.parametrize("r", [0.1, 0.8, 1.7, 3.0])
def test_from_squeezing_purity(r):
    state = from_squeezing(SqueezeParams(r))
    assert state.sigma_plus * state.sigma_minus == pytest.approx(1.0, rel=1e-12)


def test_from_squeezing_rejects_phase():
    with pytest.raises(UnsupportedPhase):
        from_squeezing(SqueezeParams(1.0, theta=0.5))


def test_evolve_identity_at_zero_time():
    state = from_squeezing(SqueezeParams(1.3))
    out = evolve(state, EnvironmentParams(0.7, 0.4), 0.0)
    assert out.sigma_plus == pytest.approx(state.sigma_plus, rel=1e-15)
    assert out.sigma_minus == pytest.approx(state.sigma_minus, rel=1e-15)


def test_evolve_asymptote():
    state = from_squeezing(SqueezeParams(1.5))
    out = evolve(state, EnvironmentParams(1.0, 0.8), 1e4)
    target = 0.5 * (0.8 + 0.5)
    assert out.sigma_plus == pytest.approx(target, rel=1e-12)
    assert out.sigma_minus == pytest.approx(target, rel=1e-12)


def test_evolve_reference_value():
    state = from_squeezing(SqueezeParams(2.0))
    out = evolve(state, EnvironmentParams(1.0, 0.0), 1e-3)
    assert out.sigma_plus == pytest.approx(SIGMA_PLUS_REF, rel=1e-13)
    assert round(out.sigma_plus, 4) == 54.5438


def test_evolve_semigroup():
    env = EnvironmentParams(0.7, 0.3)
    state = from_squeezing(SqueezeParams(1.1))
    one = evolve(evolve(state, env, 0.3), env, 1.1)
    two = evolve(state, env, 1.4)
    assert abs(one.sigma_plus - two.sigma_plus) < 1e-12
    assert abs(one.sigma_minus - two.sigma_minus) < 1e-12


def test_evolve_monotone_approach():
    env = EnvironmentParams(1.0, 0.6)
    target = 0.5 * (0.6 + 0.5)
    state = from_squeezing(SqueezeParams(1.4))
    times = [0.02 * k for k in range(14)]
    gaps_plus = [abs(evolve(state, env, t).sigma_plus - target) for t in times]
    gaps_minus = [abs(evolve(state, env, t).sigma_minus - target) for t in times]
    assert all(b <= a for a, b in zip(gaps_plus, gaps_plus[1:]))
    assert all(b <= a for a, b in zip(gaps_minus, gaps_minus[1:]))


def test_evolve_rejects_negative_time():
    state = from_squeezing(SqueezeParams(1.0))
    with pytest.raises(NegativeParameter):
        evolve(state, EnvironmentParams(1.0, 0.0), -0.1)


def test_state_rejects_non_positive_widths():
    with pytest.raises(NegativeParameter):
        TwoModeGaussianState(-1.0, 0.5)
    with pytest.raises(NegativeParameter):
        TwoModeGaussianState(1.0, 0.0)


def test_covariance_matrix_structure():
    state = from_squeezing(SqueezeParams(0.9))
    cov = state.covariance_matrix()
    s = (state.sigma_plus + state.sigma_minus) / 8.0
    d = (state.sigma_plus - state.sigma_minus) / 8.0
    for k in range(4):
        assert cov[k, k] == pytest.approx(s, rel=1e-14)
    assert cov[0, 2] == pytest.approx(d, rel=1e-14)
    assert cov[1, 3] == pytest.approx(-d, rel=1e-14)
    assert cov[0, 1] == 0.0 and cov[0, 3] == 0.0


def test_isserlis_vacuum_occupation():
    state = from_squeezing(SqueezeParams(0.0))
    assert isserlis_moment(state, WignerMonomial(1, 1, 0, 0)) == pytest.approx(
        0.0, abs=1e-14)


def test_isserlis_squeezed_occupation():
    state = from_squeezing(SqueezeParams(1.0))
    occ = isserlis_moment(state, WignerMonomial(1, 1, 0, 0))
    assert occ.real == pytest.approx(SINH2_1, rel=1e-12)
    assert abs(occ.imag) < 1e-14


def test_isserlis_pair_correlation():
    state = from_squeezing(SqueezeParams(1.0))
    pair = isserlis_moment(state, WignerMonomial(0, 1, 0, 1))
    assert pair.real == pytest.approx(COSH1_SINH1, rel=1e-12)


def test_isserlis_matches_occupation_oracle():
    twb = build_twb(SqueezeParams(0.8), FockCutoff(48))
    state = from_squeezing(SqueezeParams(0.8))
    for mono in (WignerMonomial(1, 1, 0, 0), WignerMonomial(0, 1, 0, 1),
                 WignerMonomial(1, 1, 1, 1), WignerMonomial(2, 2, 0, 0)):
        n1, m1, n2, m2 = mono.powers
        seq = (((0, True),) * n1 + ((0, False),) * m1
               + ((1, True),) * n2 + ((1, False),) * m2)
        oracle = expectation(twb, seq).real
        assert isserlis_moment(state, mono).real == pytest.approx(
            oracle, rel=1e-10, abs=1e-10)


def test_evolved_difference_moments_match_closed_form():
    # For any widths the photon-number difference obeys occupation-style
    # closed forms in N = (sqrt(sigma_plus*sigma_minus) - 1)/2:
    #   <dN^2> = 2N(N+1),   Var(dN^2) = 20N^4 + 40N^3 + 22N^2 + 2N.
    state = evolve(from_squeezing(SqueezeParams(0.8)),
                   EnvironmentParams(1.0, 0.5), 0.1)
    n_eff = (math.sqrt(state.sigma_plus * state.sigma_minus) - 1.0) / 2.0
    second = difference_moment(state, 2, isserlis_moment)
    fourth = difference_moment(state, 4, isserlis_moment)
    assert second == pytest.approx(2.0 * n_eff * (n_eff + 1.0), rel=1e-12)
    variance = fourth - second * second
    closed = 20.0 * n_eff ** 4 + 40.0 * n_eff ** 3 + 22.0 * n_eff ** 2 + 2.0 * n_eff
    assert variance == pytest.approx(closed, rel=1e-11)


def test_glauber_vacuum_occupation():
    state = from_squeezing(SqueezeParams(0.0))
    val = glauber_moment(state, WignerMonomial(1, 1, 0, 0), QuadratureSpec())
    assert abs(val) < 1e-6


def test_glauber_matches_isserlis_squeezed():
    state = from_squeezing(SqueezeParams(0.8))
    mono = WignerMonomial(1, 1, 0, 0)
    quad = glauber_moment(state, mono, QuadratureSpec())
    wick = isserlis_moment(state, mono)
    assert quad.real == pytest.approx(wick.real, abs=1e-6)
    assert quad.real == pytest.approx(math.sinh(0.8) ** 2, abs=1e-6)


def test_glauber_matches_isserlis_evolved():
    state = evolve(from_squeezing(SqueezeParams(0.8)),
                   EnvironmentParams(1.0, 0.5), 0.1)
    via_quad = difference_moment(
        state, 2, lambda s, m: glauber_moment(s, m, QuadratureSpec()))
    via_wick = difference_moment(state, 2, isserlis_moment)
    assert via_quad == pytest.approx(via_wick, rel=1e-5)


def test_glauber_quadrature_guard():
    state = from_squeezing(SqueezeParams(0.5))
    with pytest.raises(QuadratureUnderResolved):
        glauber_moment(state, WignerMonomial(1, 1, 0, 0), QuadratureSpec(8))


def test_degree_caps():
    state = from_squeezing(SqueezeParams(0.5))
    with pytest.raises(DegreeTooHigh):
        isserlis_moment(state, WignerMonomial(3, 3, 2, 1))
    with pytest.raises(DegreeTooHigh):
        glauber_moment(state, WignerMonomial(3, 3, 2, 1), QuadratureSpec())
