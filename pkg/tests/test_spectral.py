from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import wc4dvar.operators as operators
from wc4dvar.errors import ConfigError, ConvergenceError
from wc4dvar.operators import Formulation, assemble_dense
from wc4dvar.spectral import (Spectrum, component_spectra, extreme_singular_values, gram_matrix,
                              inertia, jacobi_eigh, summarize, sym_eig, sym_eigh)

from conftest import small_operators


def test_two_by_two_hand_case():
    assert np.allclose(sym_eig([[2.0, 1.0], [1.0, 2.0]]).values, [1.0, 3.0], rtol=1e-14)


def test_diagonal_input_sorted():
    assert np.array_equal(sym_eig(np.diag([3.0, -1.0, 2.0])).values, [-1.0, 2.0, 3.0])


def test_random_eigenpair_residual():
    rng = np.random.default_rng(0)
    G = rng.standard_normal((50, 50))
    A = G + G.T
    w, V = sym_eigh(A)
    assert np.max(np.linalg.norm(A @ V - V * w, axis=0)) <= 1e-8 * np.linalg.norm(A, 2)
    assert np.allclose(V.T @ V, np.eye(50), atol=1e-12)
    assert np.allclose(w, np.linalg.eigvalsh(A), atol=1e-12 * np.abs(w).max())


def test_input_validation():
    with pytest.raises(ConfigError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ConfigError):
        sym_eig(np.zeros((2, 3)))
    with pytest.raises(ConfigError):
        sym_eig(np.eye(2), method="qr")
    assert sym_eig(np.zeros((0, 0))).values.size == 0


def test_sweep_cap():
    A = np.random.default_rng(1).standard_normal((20, 20))
    with pytest.raises(ConvergenceError):
        jacobi_eigh(A + A.T, max_sweeps=1)


@settings(max_examples=25, deadline=None)
@given(m=st.integers(1, 30), seed=st.integers(0, 10_000))
def test_jacobi_matches_lapack(m, seed):
    G = np.random.default_rng(seed).standard_normal((m, m))
    A = G + G.T
    w = sym_eig(A, "jacobi").values
    assert np.allclose(w, np.linalg.eigvalsh(A), rtol=0, atol=1e-11 * max(1.0, np.abs(w).max()))


def test_spectrum_and_inertia():
    sp = Spectrum([3.0, -1.0, 0.0, 1e-14, 2.0], "x")
    assert np.array_equal(sp.values, [-1.0, 0.0, 1e-14, 2.0, 3.0])
    assert inertia(sp) == (2, 1, 2) == sp.counts
    assert sp.count_in(-1.0, 0.5) == 3
    assert list(sp.negative()) == [-1.0] and list(sp.positive()) == [2.0, 3.0]


def test_spectrum_csv(tmp_path):
    sp = Spectrum([0.5, -2.0])
    sp.to_csv(tmp_path / "s.csv")
    rows = open(tmp_path / "s.csv").read().split()
    assert rows == ["index,eigenvalue", "0,-2.0", "1,0.5"]


def test_singular_values_via_jordan_wielandt():
    ops = small_operators()
    K = np.hstack([ops.dense_L().T, ops.dense_H().T])  # (L^T H^T), s x (s + p)
    m, k = K.shape
    JW = np.zeros((m + k, m + k))
    JW[:m, m:] = K
    JW[m:, :m] = K.T
    jw = np.abs(sym_eig(JW).values)
    sv = np.linalg.svd(K, compute_uv=False)
    theta = extreme_singular_values(ops, "LH")
    assert theta == pytest.approx((sv.min(), sv.max()), rel=1e-10)
    # the largest |eigenvalue| of the augmented matrix is the largest singular value
    assert jw.max() == pytest.approx(theta[1], rel=1e-10)
    # the s largest |eigenvalues| pair up as +-singular values
    assert np.sort(jw)[-2 * m::2] == pytest.approx(np.sort(sv), rel=1e-8, abs=1e-12)
    sigma = extreme_singular_values(ops, "L")
    svL = np.linalg.svd(ops.dense_L(), compute_uv=False)
    assert sigma == pytest.approx((svL.min(), svL.max()), rel=1e-10)
    assert theta[0] >= sigma[0] and theta[1] >= sigma[1]


def test_identity_L_without_observations(monkeypatch):
    monkeypatch.setattr(operators, "tlm_apply", lambda stage, dx: np.zeros_like(dx))
    ops = small_operators(pairs=[])
    monkeypatch.setattr(ops, "tlm_matrices", lambda: [np.zeros((ops.n, ops.n))] * ops.N)
    assert extreme_singular_values(ops, "LH") == pytest.approx((1.0, 1.0))
    assert extreme_singular_values(ops, "L") == pytest.approx((1.0, 1.0))


def test_gram_mode_validation():
    with pytest.raises(ConfigError):
        gram_matrix(small_operators(), "H")


def test_component_spectra_match_dense():
    ops = small_operators()
    comp = component_spectra(ops)
    assert np.allclose(comp.d, np.linalg.eigvalsh(ops.D.dense()), rtol=1e-10)
    assert np.allclose(comp.r, np.linalg.eigvalsh(ops.R.dense()), rtol=1e-10)
    assert np.allclose(comp.nu, np.linalg.eigvalsh(ops.dense_HtRinvH()), atol=1e-10)


def test_summary_small_invariants():
    ops = small_operators()
    s = summarize(ops)
    assert s.tau_min == min(s.psi_min, s.rho_min) and s.tau_max == max(s.psi_max, s.rho_max)
    assert s.nu_min == 0.0 and s.nu_max == pytest.approx(1 / 0.3**2)
    assert s.rho_min == s.rho_max == pytest.approx(0.09)
    full = summarize(small_operators(pairs=[(t, j) for t in range(4) for j in range(6)]))
    assert full.nu_min == pytest.approx(1 / 0.09) and full.nu_min > 0
    with pytest.raises(ConfigError):
        summarize(small_operators(pairs=[]))


def test_summary_network_values(analyses):
    f = analyses("f").summary
    assert f.nu_min == pytest.approx(100.0, rel=1e-12) and f.nu_max == pytest.approx(100.0, rel=1e-12)
    for net in "ace":
        s = analyses(net).summary
        assert s.nu_min == 0.0 and s.nu_max == pytest.approx(100.0, rel=1e-12)
        assert s.rho_min == s.rho_max == pytest.approx(1e-2, rel=1e-14)


def test_jacobi_on_full_size_A1(analyses):
    """The in-house solver and LAPACK agree on a 640 x 640 instance."""
    ops = analyses("f").ops
    A = assemble_dense(ops, Formulation.A1)
    jac = sym_eig(A, "jacobi").values
    lap = analyses("f").spectra[Formulation.A1].values
    assert np.max(np.abs(jac - lap)) <= 1e-10 * np.abs(lap).max()
