import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from leakcap.capacity import OptimizerConfig, q1_diagonal, q1_general
from leakcap.channels import build_b, build_b1
from leakcap.nonadd import (
    ASYMPTOTIC_SWITCH,
    PerturbationRay,
    TwoLetterAnsatz,
    asymptotic_coefficients,
    asymptotic_delta_star,
    default_nonadd_grid,
    delta_star_curve,
    estimate_rate,
    fit_log_rate,
    inset_comparison,
    maximize_delta_star,
    p_max,
    positivity_witness,
    ray_bias_mp,
    ray_log_bias,
    singularity_rates,
    two_letter_bias,
    two_letter_bias_mp,
)
from leakcap.qmath import DensityOperator, entropy

FAST = OptimizerConfig(restarts=4)
LN2 = math.log(2)


def doubled_bias_oracle(lam, rho):
    """Bias of B (x) B by explicit Kronecker product and index contraction."""
    j = build_b(lam, 3).iso.matrix.reshape(3, 3, 3)  # (b, c, a)
    jj = np.einsum("bca,BCA->bBcCaA", j, j).reshape(81, 9)
    joint = (jj @ rho @ jj.conj().T).reshape(3, 3, 3, 3, 3, 3, 3, 3)
    rho_bb = np.einsum("bBcCdDcC->bBdD", joint).reshape(9, 9)
    rho_cc = np.einsum("bBcCbBeE->cCeE", joint).reshape(9, 9)
    return entropy(rho_bb) - entropy(rho_cc)


def ansatz_strategy():
    return st.tuples(
        st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)
    ).filter(lambda t: t[0] + t[1] + t[2] > 1e-3)


def normalise(t):
    w = np.array(t[:3]) / sum(t[:3])
    return TwoLetterAnsatz(float(w[0]), float(w[1]), float(1 - w[0] - w[1]), t[3])


# --- ansatz ---------------------------------------------------------------------


def test_ansatz_validation():
    with pytest.raises(ValueError):
        TwoLetterAnsatz(0.5, 0.6, 0.0, 0.5)
    with pytest.raises(ValueError):
        TwoLetterAnsatz(-0.1, 1.1, 0.0, 0.5)
    with pytest.raises(ValueError):
        TwoLetterAnsatz(0.5, 0.5, 0.0, 1.5)


@given(ansatz_strategy())
def test_ansatz_density_is_state(t):
    a = normalise(t)
    rho = DensityOperator(a.density(), (3, 3))
    assert rho.dims == (3, 3)


def test_headline_bias():
    value = two_letter_bias(1 / 3, TwoLetterAnsatz(0.5, 0.5, 0.0, 0.5))
    assert abs(value - 0.067) <= 0.001


def test_pure_ansatz_has_zero_bias():
    for p in (0.1, 0.5, 0.9):
        assert abs(two_letter_bias(0.3, TwoLetterAnsatz(0.0, 1.0, 0.0, p))) < 1e-10


def test_small_perturbation_positive_near_gap_end():
    lam = 0.45
    ray = PerturbationRay(1e-3, p_max(lam) / 2)
    assert two_letter_bias(lam, ray.ansatz()) > 0


@given(ansatz_strategy(), st.floats(0, 1))
def test_two_letter_bias_matches_explicit_contraction(t, lam):
    a = normalise(t)
    assert abs(two_letter_bias(lam, a) - doubled_bias_oracle(lam, a.density())) < 1e-10


@pytest.mark.parametrize("lam", [0.1, 1 / 3, 0.45])
def test_mp_bias_matches_float(lam):
    a = TwoLetterAnsatz(0.2, 0.5, 0.3, 0.35)
    assert float(two_letter_bias_mp(lam, a)) == pytest.approx(two_letter_bias(lam, a), abs=1e-12)
    ray = PerturbationRay(0.05, 0.3)
    with mp.workdps(30):
        assert float(ray_bias_mp(lam, 0.3, 0.05)) == pytest.approx(two_letter_bias(lam, ray.ansatz()), abs=1e-12)


def test_ray_log_bias_far_below_float_range():
    lam = 0.499
    v = ray_log_bias(lam, p_max(lam) / 2, -2000.0)
    assert math.isfinite(v) and v < -1900


def test_perturbation_ray_validation():
    with pytest.raises(ValueError):
        PerturbationRay(1.5, 0.5)
    with pytest.raises(ValueError):
        PerturbationRay(0.1, 0.0)
    assert PerturbationRay(0.1, 0.3).ansatz().p == pytest.approx(0.7)


# --- singularity rates --------------------------------------------------------------


def test_rate_closed_form_examples():
    assert singularity_rates(1 / 3, 0.5).p_max == pytest.approx(1.0)
    near_half = singularity_rates(0.5 - 1e-12, 0.5)
    assert near_half.p_max == pytest.approx(0.0, abs=1e-10)
    assert near_half.x_bb == pytest.approx(0.5)
    assert singularity_rates(0.4, 1e-12).x_cc == pytest.approx(0.4)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.6])
def test_rates_outside_gap_rejected(lam):
    with pytest.raises(ValueError):
        singularity_rates(lam, 0.5)


@given(st.floats(1 / 3, 0.5, exclude_max=True), st.floats(0, 1, exclude_min=True, exclude_max=True))
def test_output_rate_wins_exactly_below_p_max(lam, p):
    r = singularity_rates(lam, p)
    assert r.x_bb == 1 - lam
    if abs(p - r.p_max) > 1e-9:
        assert r.output_dominates == (p < r.p_max)


def test_estimate_rate_examples():
    r = singularity_rates(0.4, 0.1)
    assert abs(estimate_rate(0.4, 0.1, "bb").rate - 0.6) / 0.6 < 0.05
    assert abs(estimate_rate(0.4, 0.1, "cc").rate - r.x_cc) / r.x_cc < 0.05


def test_fit_recovers_synthetic_rate_and_flags_constant():
    eps = np.logspace(-7, -4, 10)
    fit = fit_log_rate(eps, 0.3 * eps * np.log2(1 / eps) + 2.0 * eps)
    assert fit.rate == pytest.approx(0.3, rel=1e-9)
    flat = fit_log_rate(eps, np.zeros_like(eps))
    assert flat.degenerate and flat.rate == 0.0


def test_estimate_rate_input_checks():
    with pytest.raises(ValueError):
        estimate_rate(0.4, 0.1, "ab")
    with pytest.raises(ValueError):
        estimate_rate(0.4, 0.1, "bb", [1e-3, 1e-4, 1e-5])


# --- witness ----------------------------------------------------------------------


def test_witness_at_lambda_zero():
    w = positivity_witness(1 / 3)
    assert w.found and w.bias > 0
    assert w.p == pytest.approx(0.5)


def test_witness_near_gap_end():
    w = positivity_witness(0.49)
    assert w.found and w.ln_bias > -math.inf and w.log10_epsilon < -3


def test_witness_domain():
    for lam in (0.3, 0.5, 0.6):
        with pytest.raises(ValueError):
            positivity_witness(lam)


def test_witness_failure_is_flagged():
    w = positivity_witness(0.499, digits_limit=20)
    assert not w.found and math.isnan(w.epsilon)


# --- asymptotics --------------------------------------------------------------------


def test_asymptotic_coefficients_by_hand():
    r, dl = 0.5, 1e-2
    c = asymptotic_coefficients(r, dl)
    a0 = 2 * (1 - r) / LN2
    assert c.alpha0 == pytest.approx(a0)
    assert c.alpha == pytest.approx(a0 * dl + 8 * r * a0 * dl**2)
    b3 = (-1.5 - 9 * r * LN2 + 8 * r * math.log(16 * r) + math.log(256 * r) / 2) / LN2
    beta = 1 + math.log(r) / (4 * LN2) + math.log(dl) / (4 * LN2) + (2 * r + 0.5) / LN2 * dl * math.log(dl) + b3 * dl
    assert c.beta == pytest.approx(beta)
    assert c.epsilon_star == pytest.approx(math.exp(-(1 - beta / c.alpha)))
    assert c.ln_g == pytest.approx(math.log(c.alpha) - (1 - beta / c.alpha))


def test_asymptotic_alpha_vanishes_as_r_to_one():
    c = asymptotic_coefficients(1 - 1e-12, 1e-3)
    assert c.alpha0 < 1e-11
    with pytest.raises(ValueError):
        asymptotic_coefficients(1.0, 1e-3)


def test_asymptotic_domain():
    with pytest.raises(ValueError):
        asymptotic_delta_star(0.02)
    with pytest.raises(ValueError):
        asymptotic_delta_star(0.0)


@pytest.mark.parametrize("dl", [1e-3, 5e-3])
def test_asymptotic_matches_direct(dl):
    row = inset_comparison([dl], FAST)[0]
    assert row["relative_difference"] < 0.05


def test_asymptotic_record():
    rec = asymptotic_delta_star(1e-3)
    assert rec.method == "asymptotic" and rec.q1_b == 0.0
    assert rec.ln_gap == pytest.approx(rec.ln_delta_star - LN2)
    assert rec.argmax.r2 == 0.0


# --- maximisation ------------------------------------------------------------------


@pytest.fixture(scope="module")
def records():
    lams = [0.15, 0.25, 1 / 3, 0.4, 0.49]
    return {lam: maximize_delta_star(lam, FAST, index=i) for i, lam in enumerate(lams)}


def test_below_onset_gap_is_zero(records):
    rec = records[0.15]
    assert rec.gap == 0.0
    assert rec.delta_star_ansatz < 2 * rec.q1_b


def test_peak_value(records):
    assert records[1 / 3].gap == pytest.approx(0.0444, abs=0.002)


def test_near_gap_end(records):
    rec = records[0.49]
    assert rec.gap > 0 and rec.argmax.r2 == 0.0
    assert rec.method == "two-param"


def test_record_identity(records):
    for rec in records.values():
        assert abs(rec.gap - (rec.delta_star / 2 - rec.q1_b)) <= 1e-12
        assert rec.gap >= 0
        d = rec.as_dict()
        for key in ("lambda", "delta_star", "q1_b", "gap", "method", "r0", "r1", "r2", "p"):
            assert key in d


@pytest.mark.parametrize("lam", [0.25, 1 / 3, 0.4])
def test_maximiser_dominates_samples(records, lam):
    best = records[lam].delta_star
    rng = np.random.default_rng(5)
    for _ in range(1000):
        w = rng.dirichlet([1, 1, 1])
        a = TwoLetterAnsatz(float(w[0]), float(w[1]), float(1 - w[0] - w[1]), float(rng.uniform()))
        assert two_letter_bias(lam, a) <= best + 1e-8


@pytest.mark.parametrize("lam", [0.24, 0.3, 0.4, 0.45])
def test_two_letter_beats_one_letter(lam):
    rec = maximize_delta_star(lam, FAST)
    q1 = q1_general(build_b(lam, 3), FAST).value
    assert two_letter_bias(lam, rec.argmax) > 2 * q1 + 1e-6


def test_two_letter_positive_where_gain_is_tiny():
    # at 0.49 the two-letter gain is about e^-60, far below a 1e-6 margin
    lam = 0.49
    rec = maximize_delta_star(lam, FAST, q1_b=0.0)
    assert rec.ln_delta_star > -math.inf
    assert two_letter_bias_mp(lam, rec.argmax) > 0


def test_maximize_domain():
    with pytest.raises(ValueError):
        maximize_delta_star(1.0, FAST)


# --- curve ---------------------------------------------------------------------------


def test_default_grid_contains_one_third():
    g = default_nonadd_grid()
    assert len(g) == 101 and 1 / 3 in g and max(g) < 0.5


def test_curve_methods_and_onset():
    grid = [0.2, 0.25, 1 / 3, 0.45, 0.5 - ASYMPTOTIC_SWITCH / 2]
    curve = delta_star_curve(grid, FAST, OptimizerConfig(restarts=2))
    methods = [r.method for r in curve.records]
    assert methods == ["full", "full", "full", "two-param", "asymptotic"]
    assert 0.2 <= curve.onset_bracket[0] <= curve.onset <= curve.onset_bracket[1] <= 0.25
    assert curve.onset_bracket[1] - curve.onset_bracket[0] <= 1e-3
    assert curve.peak_lambda == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        delta_star_curve([0.5])
