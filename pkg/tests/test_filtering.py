import numpy as np
import pytest

from svarma_whf.densities import gaussian, laplace
from svarma_whf.filtering import residuals, score_streams
from svarma_whf.model import Dataset, SvarmaSpec, pack, simulate
from svarma_whf.whf import PartialIndices


def static_theta(B=None):
    spec = SvarmaSpec(2, 0, 0, PartialIndices(0, 0, 2), "natural",
                      (gaussian(), gaussian()))
    B = np.eye(2) if B is None else np.asarray(B, dtype=float)
    return pack(np.zeros((0, 2, 2)), [np.eye(2)],
                [np.eye(2), np.zeros((2, 2))], B, [1, 1], [(), ()], spec)


def shift_theta(B=None):
    """q = 1, kappa = 1, k = 0, p = I, f = I: b(z) = z I."""
    spec = SvarmaSpec(2, 0, 1, PartialIndices(1, 0, 2), "natural",
                      (gaussian(), gaussian()))
    B = np.eye(2) if B is None else np.asarray(B, dtype=float)
    return pack(np.zeros((0, 2, 2)), [np.eye(2)],
                [np.zeros((2, 2)), np.eye(2), np.zeros((2, 2))],
                B, [1, 1], [(), ()], spec)


def arma_theta(densities=None):
    spec = SvarmaSpec(2, 1, 1, PartialIndices(0, 1, 2), "natural",
                      densities or (gaussian(), gaussian()))
    lam = [d.lam for d in spec.densities]
    return pack(
        [[[0.5, 0.1], [-0.2, 0.4]]],
        [[[1, 0], [0.3, 1]], [[0, 0], [0, 0.4]]],
        [[[0.35, 0.6], [0, 1]], [[1, 0], [0, 0]]],
        [[1, 0.6], [-0.5, 1]],
        [1.0, 0.8],
        lam,
        spec,
    )


class TestTrivial:
    def test_static_identity(self):
        theta = static_theta()
        rng = np.random.default_rng(0)
        y = rng.normal(size=(50, 2))
        rs = residuals(theta, Dataset(y))
        assert np.allclose(rs.eps, y, atol=1e-14)

    def test_pure_shift(self):
        B = np.array([[1.0, 0.4], [0.2, 1.0]])
        theta = shift_theta(B)
        rng = np.random.default_rng(1)
        y = rng.normal(size=(40, 2))
        rs = residuals(theta, Dataset(y))
        expect = np.zeros_like(y)
        expect[:-1] = y[1:] @ np.linalg.inv(B).T
        assert np.allclose(rs.eps, expect, atol=1e-12)
        assert np.allclose(rs.eps[-1], 0.0)


class TestRecovery:
    def test_simulate_then_filter(self):
        theta = arma_theta()
        ds, shocks = simulate(theta, T=2000, burn_in=500, seed=7)
        rs = residuals(theta, ds)
        inner = slice(500, 1500)
        assert np.max(np.abs(rs.eps[inner] - shocks[inner])) < 1e-6

    def test_edge_error_halves_with_band(self):
        theta = arma_theta()
        ds, shocks = simulate(theta, T=1024, burn_in=500, seed=3)
        rs = residuals(theta, ds)
        err = np.abs(rs.eps - shocks).max(axis=1)

        def band_max(b):
            return err[b:1024 - b].max()

        wide, narrow = band_max(32), band_max(16)
        assert wide <= 0.5 * narrow or wide < 1e-12


class TestLinearity:
    def test_scaling_data_scales_residuals(self):
        theta = arma_theta()
        rng = np.random.default_rng(5)
        y = rng.normal(size=(300, 2))
        r1 = residuals(theta, Dataset(y))
        r2 = residuals(theta, Dataset(3.5 * y))
        assert np.allclose(r2.eps, 3.5 * r1.eps, atol=1e-12)


class TestKernelOracle:
    """Stage recursions against brute-force truncated kernel convolutions."""

    def test_forward_stage_matches_long_division(self):
        # scalar p(z) = 1 + 0.3 z: p^{-1} = sum (-0.3)^j z^j
        spec = SvarmaSpec(1, 0, 1, PartialIndices(0, 0, 1), "natural",
                          (gaussian(),))
        theta = pack(np.zeros((0, 1, 1)), [[[1.0]], [[0.3]]],
                     [[[1.0]], [[0.0]]], [[1.0]], [1.0], [()], spec)
        rng = np.random.default_rng(11)
        T = 200
        y = rng.normal(size=(T, 1))
        rs = residuals(theta, Dataset(y))
        J = 400
        pi = (-0.3) ** np.arange(J)
        w_bf = np.convolve(pi, y[:, 0])[:T]
        assert np.max(np.abs(rs.w[:, 0] - w_bf)) < 1e-10

    def test_backward_stage_matches_long_division(self):
        # scalar f = 1 + 0.4 / z: f^{-1} = sum (-0.4)^j z^{-j}
        spec = SvarmaSpec(1, 0, 1, PartialIndices(1, 0, 1), "natural",
                          (gaussian(),))
        theta = pack(np.zeros((0, 1, 1)), [[[1.0]]],
                     [[[0.4]], [[1.0]], [[0.0]]], [[1.0]], [1.0], [()], spec)
        rng = np.random.default_rng(13)
        T = 200
        y = rng.normal(size=(T, 1))
        rs = residuals(theta, Dataset(y))
        J = 400
        phi = (-0.4) ** np.arange(J)
        # u_t = sum_j phi_j x_{t+j} with x_t = y~_{t+1}
        x = np.zeros(T + J)
        x[:T - 1] = y[1:, 0]
        u_bf = np.array([np.dot(phi, x[t:t + J]) for t in range(T)])
        assert np.max(np.abs(rs.u[:, 0] - u_bf)) < 1e-10

    def test_full_pipeline_matches_composite_kernel(self):
        # scalar ARMA with both stable and anticausal parts
        spec = SvarmaSpec(1, 1, 2, PartialIndices(1, 0, 1), "natural",
                          (gaussian(),))
        a1, p1, g0 = 0.5, 0.3, 0.4
        theta = pack([[[a1]]], [[[1.0]], [[p1]]],
                     [[[g0]], [[1.0]], [[0.0]]], [[1.0]], [1.0], [()], spec)
        rng = np.random.default_rng(17)
        T = 250
        y = rng.normal(size=(T, 1))
        rs = residuals(theta, Dataset(y))
        J = 600
        pi = np.zeros(J)
        pi[0] = 1.0
        for j in range(1, J):
            pi[j] = -p1 * pi[j - 1]
        phi = (-g0) ** np.arange(J)
        v = np.zeros(T + J)
        v[:T] = y[:, 0]
        v[1:T] -= a1 * y[:T - 1, 0]
        v[T] = -a1 * y[T - 1, 0]
        w = np.convolve(pi, v)[:T + 2 * J]
        x = np.concatenate([w[1:], [0.0]])  # advance by kappa = 1
        eps_bf = np.array([np.dot(phi, x[t:t + J]) for t in range(T)])
        assert np.max(np.abs(rs.eps[:, 0] - eps_bf)) < 1e-10


class TestStreams:
    def test_streams_shapes_and_selectivity(self):
        theta = arma_theta()
        ds, _ = simulate(theta, T=150, burn_in=100, seed=2)
        rs = residuals(theta, ds)
        full = score_streams(theta, ds, rs)
        assert full.shape == (150, 2, theta.pmap.n_tau)
        cols = theta.pmap.score_columns
        part = score_streams(theta, ds, rs, columns=cols)
        assert np.allclose(part[:, :, cols], full[:, :, cols], atol=1e-14)

    def test_named_regressor_streams(self):
        theta = arma_theta()
        ds, _ = simulate(theta, T=200, burn_in=100, seed=4)
        rs = residuals(theta, ds)
        # w_g is the stage-2 output: g(z) applied to u reproduces it interior
        g = theta.g_coeffs()
        w_oracle = np.zeros_like(rs.u)
        for m in range(g.shape[0]):
            if m == 0:
                w_oracle += rs.u @ g[m].T
            else:
                w_oracle[m:] += rs.u[:-m] @ g[m].T
        assert np.max(np.abs(rs.w_g[50:150] - w_oracle[50:150])) < 1e-8
        assert rs.w_p.shape == rs.u.shape
        assert rs.x_b.shape == (200, 2, 4)
