from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wc4dvar.bounds import (Bands, ChainStep, Interval, a2_betas, an_inputs, beta3_selected, bounds_a1,
                            bounds_a2, bounds_a3, bounds_an, check_containment, individual_bounds,
                            monotonicity_report)
from wc4dvar.errors import ConfigError
from wc4dvar.operators import Formulation, ObservationNetwork, assemble_dense
from wc4dvar.spectral import SpectralSummary, Spectrum, component_spectra, summarize, sym_eig

from conftest import small_operators

PHI_MINUS = 0.5 * (1 - math.sqrt(5))
PHI_PLUS = 0.5 * (1 + math.sqrt(5))


def unit_summary(**kw):
    base = dict(psi_min=1.0, psi_max=1.0, nu_min=0.0, nu_max=0.0, rho_min=1.0, rho_max=1.0,
                theta_min=1.0, theta_max=1.0, sigma_min=1.0, sigma_max=1.0)
    base.update(kw)
    return SpectralSummary(**base)


@st.composite
def summaries(draw):
    """Summaries shaped like a real instance with selection H and R = rho I:
    nu_max = 1 / rho, and theta^2 lies between sigma^2 and sigma^2 + 1
    (exactly sigma^2 + 1 when every component is observed)."""
    pos = st.floats(1e-3, 10.0)
    psi_min, rho = draw(pos), draw(pos)
    psi_max = psi_min + draw(st.floats(0.0, 10.0))
    sig_min = draw(st.floats(1e-3, 3.0))
    sig_max = sig_min + draw(st.floats(0.0, 3.0))
    full = draw(st.booleans())
    if full:
        th_min, th_max = math.sqrt(sig_min**2 + 1), math.sqrt(sig_max**2 + 1)
    else:
        th_min = math.sqrt(sig_min**2 + draw(st.floats(0.0, 1.0)))
        th_max = max(th_min, math.sqrt(sig_max**2 + draw(st.floats(0.0, 1.0))))
    return SpectralSummary(psi_min, psi_max, 1 / rho if full else 0.0, 1 / rho, rho, rho,
                           th_min, th_max, sig_min, sig_max)


@settings(max_examples=200, deadline=None)
@given(psi=st.floats(1e-3, 10), rho=st.floats(1e-3, 10), th=st.floats(1e-3, 5), dth=st.floats(0, 5),
       dpsi=st.floats(0, 10), drho=st.floats(0, 10))
def test_a3_intervals_always_ordered(psi, rho, th, dth, dpsi, drho):
    s = SpectralSummary(psi, psi + dpsi, 0.0, 1.0, rho, rho + drho, th, th + dth, th, th)
    r = bounds_a3(s)
    assert r.negative.hi < 0 < r.positive.lo


def dense_instance(seed, n=5, steps=2, frac=0.5):
    rng = np.random.default_rng(seed)
    pairs = [(t, j) for t in range(steps + 1) for j in range(n) if rng.random() < frac] or [(steps, 0)]
    return small_operators(n=n, steps=steps, pairs=pairs, seed=seed)


def spectra_of(ops, forms=tuple(Formulation)):
    return {f: sym_eig(assemble_dense(ops, f), "lapack") for f in forms}


def test_interval_basics():
    iv = Interval(-1.0, 2.0)
    assert 0.0 in iv and 3.0 not in iv and iv.contains(2.0 + 1e-9, slack=1e-8)
    assert Interval(0.0, 1.0).issubset(iv)
    with pytest.raises(ConfigError):
        Interval(1.0, 0.0)
    tie = Interval(-0.0006180339887498947, -0.0006180339887498948)
    assert tie.lo == tie.hi


def test_coincident_endpoints_with_rounding():
    s = SpectralSummary(psi_min=1e-3, psi_max=1e-3, nu_min=0.0, nu_max=999.9999999999998,
                        rho_min=0.0010000000000000002, rho_max=0.0010000000000000002,
                        theta_min=1e-3, theta_max=1e-3, sigma_min=1e-3, sigma_max=1e-3)
    r = bounds_a3(s)
    assert r.negative.lo == pytest.approx(r.negative.hi, rel=1e-12)


def test_a3_golden_ratio_collapse():
    r = bounds_a3(unit_summary())
    assert r.negative.lo == pytest.approx(PHI_MINUS) and r.negative.hi == pytest.approx(PHI_MINUS)
    assert r.positive.lo == 1.0 and r.positive.hi == pytest.approx(PHI_PLUS)


def test_a2_symmetric_collapse():
    r = bounds_a2(unit_summary())
    assert r.positive.lo == pytest.approx(PHI_PLUS) and r.positive.hi == pytest.approx(PHI_PLUS)
    assert r.beta1 == pytest.approx(PHI_MINUS) and r.beta3 == pytest.approx(PHI_MINUS)
    assert r.beta2 == -1.0


def test_a1_unit():
    r = bounds_a1(unit_summary())
    assert (r.positive.lo, r.positive.hi) == (1.0, 1.0) and r.negative is None


def test_degenerate_nu_reduction():
    s = unit_summary(psi_min=0.3, psi_max=2.0, nu_min=0.0, nu_max=4.0, sigma_min=0.7, sigma_max=1.5)
    beta1, _, _ = a2_betas(s)
    assert beta1 == 0.5 * (2.0 - math.sqrt(4.0 + 4 * 0.49))
    r = bounds_a2(s)
    assert r.positive.hi == 0.5 * (2.0 + math.sqrt(4.0 + 4 * 1.5**2))


@settings(max_examples=200, deadline=None)
@given(summaries())
def test_beta_selector_matches_closed_form(s):
    _, beta2, beta3 = a2_betas(s)
    lhs = beta3 >= beta2
    rhs = beta3_selected(s)
    # the two tests agree except within round-off of the boundary
    if abs(beta3 - beta2) > 1e-12 * max(1.0, abs(beta2)):
        assert lhs == rhs


@settings(max_examples=200, deadline=None)
@given(summaries())
def test_intervals_well_ordered_and_signed(s):
    r3, r2, r1 = bounds_a3(s), bounds_a2(s), bounds_a1(s)
    assert r3.negative.hi < 0 < r3.positive.lo
    assert r2.negative.hi < 0 < r2.positive.lo
    assert r1.positive.lo > 0
    assert r2.negative.hi == min(r2.beta1, max(r2.beta2, r2.beta3))
    assert r2.beta_choice in ("beta1", "beta2", "beta3")


def test_report_serialisation():
    r = check_containment(bounds_a2(unit_summary()), Spectrum([PHI_MINUS, PHI_PLUS]))
    d = json.loads(r.to_json())
    assert d["formulation"] == "A2" and d["verdict"] == "CONTAINED"
    assert d["beta_choice"] in ("beta1", "beta3") and len(d["negative"]) == 2


def test_containment_detects_violation():
    r = check_containment(bounds_a3(unit_summary()), Spectrum([PHI_MINUS, 0.5, PHI_PLUS]))
    assert not r.containment.contained and r.containment.violations == 1
    assert r.containment.worst_excess == pytest.approx(0.5)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_standard_containment_random_instances(seed):
    ops = dense_instance(seed)
    s = summarize(ops, "lapack")
    for f, sp in spectra_of(ops).items():
        rep = {Formulation.A3: bounds_a3, Formulation.A2: bounds_a2, Formulation.A1: bounds_a1}[f](s)
        assert check_containment(rep, sp).containment.contained, f


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_nesting_a2_positive_inside_a3(seed):
    s = summarize(dense_instance(seed), "lapack")
    assert bounds_a2(s).positive.issubset(bounds_a3(s).positive)


def an_for(ops, method="lapack"):
    L = ops.dense_L()
    ldl = L.T @ ops.D.solve_matrix(L)
    return an_inputs(assemble_dense(ops, Formulation.A1), 0.5 * (ldl + ldl.T), method)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_an_containment_and_tau(seed):
    ops = dense_instance(seed)
    s = summarize(ops, "lapack")
    an = bounds_an(s, an_for(ops))
    assert an[Formulation.A3].positive.lo == s.tau_min
    for f, sp in spectra_of(ops, (Formulation.A3, Formulation.A2)).items():
        assert check_containment(an[f], sp).containment.contained


def test_an_inputs_xi_oracle():
    ops = dense_instance(3)
    extra = an_for(ops, "jacobi")
    A1 = assemble_dense(ops, Formulation.A1)
    L = ops.dense_L()
    ldl = L.T @ np.linalg.solve(ops.D.dense(), L)
    # generalized eigenvalues of (ldl, A1) equal those of A1^{-1/2} ldl A1^{-1/2}
    gen = np.linalg.eigvals(np.linalg.solve(A1, ldl)).real
    assert extra.xi == pytest.approx(np.abs(gen).max(), rel=1e-8)
    w = np.linalg.eigvalsh(A1)
    assert (extra.a1_min, extra.a1_max) == pytest.approx((w[0], w[-1]), rel=1e-10)


def test_individual_bands_random_instances():
    for seed in range(5):
        ops = dense_instance(seed, frac=0.4)
        s = summarize(ops, "lapack")
        comp = component_spectra(ops, "lapack")
        bands = individual_bounds(s, comp.d, comp.r, comp.nu)
        for f, sp in spectra_of(ops, (Formulation.A3, Formulation.A2)).items():
            assert bands[f].check(sp).contained, (seed, f)


def test_individual_bands_zero_observations():
    s = unit_summary(sigma_max=0.5)
    d = np.array([1.0, 2.0, 3.0])
    bands = individual_bounds(s, d, np.zeros(0), np.zeros(3))
    b2 = bands[Formulation.A2]
    assert np.allclose(b2.lo[:3], [2.5, 1.5, 0.5]) and np.allclose(b2.hi[:3], [3.5, 2.5, 1.5])
    assert np.allclose(b2.lo[3:], -0.5) and np.allclose(b2.hi[3:], 0.0)


def test_individual_bands_length_checks():
    s = unit_summary()
    with pytest.raises(ConfigError):
        individual_bounds(s, np.ones(3), np.ones(1), np.zeros(2))
    band = Bands(Formulation.A2, np.zeros(2), np.ones(2))
    with pytest.raises(ConfigError):
        band.check(Spectrum([0.5, 0.5, 0.5]))


def small_chain(seed=0, n=5, steps=2, length=None):
    rng = np.random.default_rng(seed)
    pairs = [(t, j) for t in range(steps + 1) for j in range(n)]
    order = rng.permutation(len(pairs))[:length]
    nets = []
    for k in range(1, len(order) + 1):
        nets.append(ObservationNetwork.from_pairs(n, steps, [pairs[i] for i in order[:k]]))
    base = small_operators(n=n, steps=steps, pairs=pairs, seed=seed)
    out = []
    for net in nets:
        ops = small_operators(n=n, steps=steps, pairs=net.pairs(), seed=seed)
        assert np.array_equal(ops.dense_L(), base.dense_L())
        out.append(ChainStep(net.p, summarize(ops, "jacobi"), spectra_of(ops), net))
    return out


@pytest.mark.parametrize("seed", [0, 1])
def test_monotonicity_full_single_step_chain(seed):
    verdicts = {v.name: v for v in monotonicity_report(small_chain(seed))}
    for name, v in verdicts.items():
        if name.startswith("a3_negative"):
            continue
        assert v.holds is True, (name, v)


def test_monotonicity_guard_not_applicable():
    # here rho = 0.09 while psi_max ~ 0.25-1, so tau_max = psi_max; force rho large instead
    chain = small_chain(0, length=4)
    for step in chain:
        step.summary.rho_max = step.summary.rho_min = 10.0
    verdicts = {v.name: v for v in monotonicity_report(chain)}
    assert verdicts["a3_negative_upper_bound_moves_out"].holds is None
    assert verdicts["a3_negative_upper_bound_moves_out"].steps_checked == 0


def test_monotonicity_rejects_bad_chains():
    chain = small_chain(0, length=3)
    with pytest.raises(ConfigError):
        monotonicity_report(chain[::-1])
    other = ObservationNetwork.from_pairs(5, 2, [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1)])
    bad = [chain[0], ChainStep(chain[1].p + 5, chain[1].summary, chain[1].spectra, other)]
    if not chain[0].network.issubset(other):
        with pytest.raises(ConfigError):
            monotonicity_report(bad)
