"""Spectral core: basis, generators, evolution, weights, densities.

Oracles: adaptive quadrature for weight integrals and Gram matrices, a
scaling-and-squaring matrix exponential for the evolution, and closed forms
for the low-order entries.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from morseplan.model import control_point, derive_params
from morseplan.spectral import (
    HamiltonianMatrix,
    QuasiNumberBasis,
    WeightVector,
    backward_initial_weights,
    basis_values,
    bke_tail_probability,
    build_hamiltonian,
    cached_decomposition,
    eigendecompose,
    evolve,
    forward_initial_weights,
    fpe_density,
    tail_kernel_weights,
)
from helpers import market_with, plan_default

Q = 1.25


def scenario(xi=0.03, u0=22_500.0, N=150):
    market = market_with(0.065)
    params = derive_params(market, xi=xi)
    plan = plan_default()
    point = control_point(plan, params, u0)
    basis = QuasiNumberBasis.build(N, Q, params.s)
    return plan, params, point, basis


class TestBasis:
    def test_ground_level_closed_form(self):
        _, params, _, basis = scenario()
        for y in (0.2, 1.0, 3.7):
            phi = basis_values(basis, y)
            expected = y ** Q * math.exp(-y / 2.0) / math.sqrt(math.gamma(2 * Q))
            assert abs(phi[0] - expected) < 1e-13

    def test_first_level_ratio(self):
        _, params, _, basis = scenario()
        for y in (0.4, 1.9):
            phi = basis_values(basis, y)
            assert abs(phi[1] / phi[0] - (2 * Q - y) / math.sqrt(2 * Q)) < 1e-12

    def test_gram_matrix_quadrature(self):
        # orthonormality under dy/y for a spot-checked index set
        _, params, _, basis = scenario(N=24)
        idx = [(0, 0), (1, 1), (7, 7), (20, 20), (0, 1), (3, 11), (6, 20), (19, 20)]
        for m, n in idx:
            def integrand(y, m=m, n=n):
                phi = basis_values(basis, y)
                return phi[m] * phi[n] / y
            val, _ = quad(integrand, 1e-12, 250.0, limit=400)
            assert abs(val - (1.0 if m == n else 0.0)) < 1e-8

    def test_rejects_nonpositive_argument(self):
        _, _, _, basis = scenario(N=8)
        with pytest.raises(ValueError):
            basis_values(basis, 0.0)

    def test_basis_invariants(self):
        with pytest.raises(ValueError):
            QuasiNumberBasis.build(1, Q, 0.0)
        with pytest.raises(ValueError):
            QuasiNumberBasis.build(10, -0.5, 0.0)
        with pytest.raises(ValueError):
            QuasiNumberBasis.build(10, Q, -0.6)


class TestHamiltonian:
    def test_plus_branch_low_order_entries(self):
        basis = QuasiNumberBasis.build(8, Q, 0.0)
        ham = build_hamiltonian(basis, "plus")
        assert abs(ham.diag[0] - 1.5625) < 1e-14              # (s-q)^2, eps0 = 0
        assert abs(ham.offdiag[0] - (-1.25) * math.sqrt(2.5)) < 1e-14

    def test_minus_branch_entries(self):
        s = 0.1
        basis = QuasiNumberBasis.build(6, Q, s)
        plus = build_hamiltonian(basis, "plus")
        minus = build_hamiltonian(basis, "minus")
        n = np.arange(6.0)
        assert np.allclose(minus.diag - plus.diag, 2.0 * (n + Q) * (2 * s + 1.0), atol=1e-13)
        c1 = math.sqrt(1.0 * (1.0 + 2 * Q - 1.0))
        assert abs(minus.offdiag[0] - (-(s + Q + 1.0) * c1)) < 1e-13

    def test_plus_branch_positive_semidefinite(self):
        for s in (-0.2, 0.0, 0.2):
            basis = QuasiNumberBasis.build(150, Q, s)
            decomp = eigendecompose(build_hamiltonian(basis, "plus"))
            assert decomp.eigenvalues[0] >= -1e-10

    def test_branch_name_guard(self):
        basis = QuasiNumberBasis.build(6, Q, 0.0)
        with pytest.raises(ValueError):
            build_hamiltonian(basis, "sideways")


class TestEigendecompose:
    def test_trivial_1x1(self):
        m = HamiltonianMatrix(branch="plus", diag=np.array([4.2]), offdiag=np.array([]))
        d = eigendecompose(m)
        assert abs(d.eigenvalues[0] - 4.2) < 1e-15
        assert abs(abs(d.eigenvectors[0, 0]) - 1.0) < 1e-15

    def test_symmetric_2x2(self):
        a, b = 2.0, 0.75
        m = HamiltonianMatrix(branch="plus", diag=np.array([a, a]), offdiag=np.array([b]))
        d = eigendecompose(m)
        assert np.allclose(d.eigenvalues, [a - b, a + b], atol=1e-14)

    def test_orthogonality_and_reconstruction(self):
        basis = QuasiNumberBasis.build(150, Q, 0.05)
        ham = build_hamiltonian(basis, "plus")
        d = eigendecompose(ham)
        U = d.eigenvectors
        assert np.max(np.abs(U.T @ U - np.eye(150))) <= 1e-10
        A = np.diag(ham.diag) + np.diag(ham.offdiag, 1) + np.diag(ham.offdiag, -1)
        rec = (U * d.eigenvalues) @ U.T
        assert np.max(np.abs(rec - A)) <= 1e-8 * np.max(np.abs(A))

    def test_quadratic_tail_growth(self):
        # lambda_n ~ c n^2 at the top of the spectrum: a linear fit against
        # n^2 explains > 99% of the (uncentered) sum of squares; the
        # mean-centered baseline is meaningless for a model through the
        # origin, so R^2 uses the uncentered convention
        for s in (-0.2, 0.0, 0.2):
            basis = QuasiNumberBasis.build(150, Q, s)
            lam = eigendecompose(build_hamiltonian(basis, "plus")).eigenvalues
            n = np.arange(100, 150, dtype=float)
            x = n ** 2
            y = lam[100:150]
            A = np.vstack([x, np.ones_like(x)]).T
            coef, *_ = np.linalg.lstsq(A, y, rcond=None)
            r2 = 1.0 - float(np.sum((y - A @ coef) ** 2) / np.sum(y ** 2))
            assert r2 > 0.99, f"top-of-spectrum quadratic fit degenerated: R2={r2}"


class TestWeights:
    def test_forward_ground_term(self):
        plan, params, point, basis = scenario()
        w = forward_initial_weights(basis, point, params)
        expected = point.y0 ** (Q - params.s) / math.sqrt(math.gamma(2 * Q))
        assert abs(w.values[0] - expected) < 1e-13

    def test_forward_unit_y0_value(self):
        # at y0 = 1, s = 0: w_0 = 1/sqrt(Gamma(2.5))
        market = market_with(0.065)
        params = derive_params(market, xi=0.065 - 0.045)  # eta = 0 -> s = 1/2? no: s=0 needs eta=0
        assert abs(params.s - 0.0) < 1e-12
        plan = plan_default()
        point = control_point(plan, params, u0=22_500.0)
        basis = QuasiNumberBasis.build(16, Q, params.s)
        w = forward_initial_weights(basis, point, params)
        assert abs(w.values[0] - 1.0 / math.sqrt(math.gamma(2.5))) < 1e-13

    def test_backward_ground_term_is_incomplete_gamma(self):
        from morseplan.specfun import upper_incomplete_gamma

        plan, params, point, basis = scenario(N=12)
        w = backward_initial_weights(basis, point, params)
        k = params.tail_kernel_order
        expected = upper_incomplete_gamma(k, point.y_hat) / math.sqrt(math.gamma(2 * Q))
        assert abs(w.values[0] - expected) <= 1e-12 * abs(expected)

    def test_backward_small_target_limit(self):
        # as y_hat -> 0 the 2F2 term carries the y_hat^k prefactor and drops out
        basis = QuasiNumberBasis.build(10, Q, 0.05)
        k = Q + 0.05
        w_small = tail_kernel_weights(basis, 1e-13, k)
        n = np.arange(10.0)
        full_line = np.exp(
            math.lgamma(k)
            + np.vectorize(math.lgamma)(2 * Q + n - k)
            - np.vectorize(math.lgamma)(n + 1.0)
            - math.lgamma(2 * Q - k)
        )
        expected = np.exp(basis.log_norms) * full_line
        assert np.allclose(w_small, expected, rtol=1e-10)

    def test_backward_matches_quadrature(self):
        plan, params, point, basis = scenario(N=9)
        w = backward_initial_weights(basis, point, params)
        k = params.tail_kernel_order
        alpha = 2 * Q - 1.0
        for n in (0, 3, 7):
            def integrand(y, n=n):
                from morseplan.specfun import laguerre_sequence

                return y ** (k - 1.0) * math.exp(-y) * laguerre_sequence(alpha, n + 1, y).values[n]
            val, _ = quad(integrand, point.y_hat, 300.0, limit=400)
            val *= math.exp(basis.log_norms[n])
            assert abs(w.values[n] - val) <= 1e-8 * max(abs(val), 1e-12)

    def test_backward_requires_positive_order(self):
        basis = QuasiNumberBasis.build(8, Q, 0.0)
        with pytest.raises(ValueError):
            tail_kernel_weights(basis, 0.5, -0.1)


class TestEvolve:
    def test_zero_time_is_identity(self):
        plan, params, point, basis = scenario(N=40)
        _, decomp = cached_decomposition(params.s, Q, 40, "plus")
        w = forward_initial_weights(basis, point, params)
        out = evolve(w, decomp, 0.0, params.hbar)
        assert np.allclose(out.values, w.values, rtol=1e-13)

    def test_eigenvector_scaling(self):
        plan, params, point, basis = scenario(N=40)
        _, decomp = cached_decomposition(params.s, Q, 40, "plus")
        k = 7
        w = WeightVector(kind="forward", time_years=0.0, values=decomp.eigenvectors[:, k].copy())
        out = evolve(w, decomp, 3.0, params.hbar)
        scale = math.exp(-0.5 * params.hbar * 3.0 * decomp.eigenvalues[k])
        assert np.allclose(out.values, scale * w.values, atol=1e-14)

    def test_against_matrix_exponential_oracle(self):
        plan, params, point, basis = scenario(N=40)
        ham = build_hamiltonian(QuasiNumberBasis.build(40, Q, params.s), "plus")
        decomp = eigendecompose(ham)
        rng = np.random.default_rng(9)
        w0 = rng.standard_normal(40)
        t = 20.0
        tau = 0.5 * params.hbar * t
        A = np.diag(ham.diag) + np.diag(ham.offdiag, 1) + np.diag(ham.offdiag, -1)
        ref = expm(-tau * A) @ w0
        out = evolve(WeightVector("forward", 0.0, w0), decomp, t, params.hbar)
        assert np.max(np.abs(out.values - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))

    def test_dimension_mismatch(self):
        plan, params, point, basis = scenario(N=40)
        _, decomp = cached_decomposition(params.s, Q, 40, "plus")
        with pytest.raises(ValueError):
            evolve(WeightVector("forward", 0.0, np.ones(39)), decomp, 1.0, params.hbar)


class TestDensities:
    def test_zero_weights(self):
        plan, params, point, basis = scenario(N=20)
        z_f = WeightVector("forward", 0.0, np.zeros(20))
        z_b = WeightVector("backward", 0.0, np.zeros(20))
        assert fpe_density(basis, z_f, params, 1.3) == 0.0
        assert bke_tail_probability(basis, z_b, params, 1.3) == 0.0

    def test_single_term_linearity(self):
        plan, params, point, basis = scenario(N=20)
        e0 = np.zeros(20)
        e0[0] = 1.0
        w = WeightVector("forward", 0.0, e0)
        y = 0.8
        expected = y ** (params.s - 1.0) * math.exp(-y / 2.0) * basis_values(basis, y)[0]
        assert abs(fpe_density(basis, w, params, y) - expected) < 1e-13

    def test_clamped_views(self):
        plan, params, point, basis = scenario(N=20)
        w = WeightVector("backward", 0.0, -np.ones(20))
        raw = bke_tail_probability(basis, w, params, 1.0)
        assert raw < 0.0
        assert bke_tail_probability(basis, w, params, 1.0, clamp=True) == 0.0

    def test_kind_guards(self):
        plan, params, point, basis = scenario(N=20)
        w = WeightVector("backward", 0.0, np.zeros(20))
        with pytest.raises(ValueError):
            fpe_density(basis, w, params, 1.0)
        with pytest.raises(ValueError):
            bke_tail_probability(basis, WeightVector("forward", 0.0, np.zeros(20)),
                                 params, 1.0)


class TestSolverIdentities:
    def test_duality_product_constant(self):
        plan, params, point, basis = scenario()
        _, decomp = cached_decomposition(params.s, Q, 150, "plus")
        wf = forward_initial_weights(basis, point, params)
        wb = backward_initial_weights(basis, point, params)
        T = plan.horizon_years
        ref = None
        for t in np.linspace(0.0, T, 9):
            a = evolve(wf, decomp, t, params.hbar).values
            b = evolve(wb, decomp, T - t, params.hbar).values
            val = float(a @ b)
            if ref is None:
                ref = val
            assert abs(val - ref) <= 1e-10 * abs(ref)

    def test_feynman_kac_quadrature(self):
        plan, params, point, basis = scenario()
        _, decomp = cached_decomposition(params.s, Q, 150, "plus")
        wf_T = evolve(forward_initial_weights(basis, point, params), decomp,
                      plan.horizon_years, params.hbar)
        wb_T = evolve(backward_initial_weights(basis, point, params), decomp,
                      plan.horizon_years, params.hbar)
        p_backward = bke_tail_probability(basis, wb_T, params, point.y0)
        val, _ = quad(lambda y: fpe_density(basis, wf_T, params, y),
                      point.y_hat, 80.0, limit=400)
        assert abs(p_backward - val) <= 5e-3

    def test_probability_in_band(self):
        plan, params, point, basis = scenario()
        _, decomp = cached_decomposition(params.s, Q, 150, "plus")
        wb_T = evolve(backward_initial_weights(basis, point, params), decomp,
                      plan.horizon_years, params.hbar)
        for y in np.exp(np.linspace(math.log(4 / 9), math.log(40 / 9), 25)):
            raw = bke_tail_probability(basis, wb_T, params, float(y))
            assert -0.02 <= raw <= 1.02
            clamped = bke_tail_probability(basis, wb_T, params, float(y), clamp=True)
            assert 0.0 <= clamped <= 1.0
