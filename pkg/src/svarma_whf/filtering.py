"""Residuals eps_t(theta) = B^{-1} [f^{-1} s^{-1} p^{-1} a y]_t on 1..T.

The doubly-infinite inverse filter is applied to the zero-padded sample
(y_t = 0 outside 1..T), which is realised exactly by running the stage
cascade on an extended horizon:

  (1) v = a(z) y~                 finite impulse response, support 1..T+p
  (2) w from p0 w_t = v_t - sum_j p_j w_{t-j}   forward over 1..T_ext
  (3) x_{i,t} = w_{i, t + kappa_i}              the s(z)^{-1} advance
  (4) u from f0 u_t = x_t - sum_j f_j u_{t+j}   backward from T_ext

where T_ext exceeds T by enough for the geometric tail of w to fall below
machine precision, so the result equals the truncated-kernel convolution
sum_{s=1..T} w_{t-s} y_s to rounding error.  Truncating each stage at T
instead would inject an O(1) artefact into the last residuals, which the
likelihood would amplify quadratically.

The same extended stages applied to shifted unit-direction streams give the
exact derivatives of u_t(theta) in the system parameters, which is what the
analytic score consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import _det_coeffs, _poly_roots

__all__ = ["ResidualSet", "residuals", "score_streams"]

TAIL_TOL = 1e-15
TAIL_MIN = 8
TAIL_MAX = 4096


@njit(cache=True)
def _forward_filter(c0inv, cs, x, out):
    """out solves c0 out_t = x_t - sum_j cs[j] out_{t-1-j} forward in t."""
    T, n, M = x.shape
    mlags = cs.shape[0]
    tmp = np.empty((n, M))
    for t in range(T):
        for a in range(n):
            for b in range(M):
                acc = x[t, a, b]
                for j in range(mlags):
                    tj = t - 1 - j
                    if tj >= 0:
                        for c in range(n):
                            acc -= cs[j, a, c] * out[tj, c, b]
                tmp[a, b] = acc
        for a in range(n):
            for b in range(M):
                acc2 = 0.0
                for c in range(n):
                    acc2 += c0inv[a, c] * tmp[c, b]
                out[t, a, b] = acc2


@njit(cache=True)
def _backward_filter(c0inv, cs, x, out):
    """out solves c0 out_t = x_t - sum_j cs[j] out_{t+1+j} backward in t."""
    T, n, M = x.shape
    mlags = cs.shape[0]
    tmp = np.empty((n, M))
    for t in range(T - 1, -1, -1):
        for a in range(n):
            for b in range(M):
                acc = x[t, a, b]
                for j in range(mlags):
                    tj = t + 1 + j
                    if tj < T:
                        for c in range(n):
                            acc -= cs[j, a, c] * out[tj, c, b]
                tmp[a, b] = acc
        for a in range(n):
            for b in range(M):
                acc2 = 0.0
                for c in range(n):
                    acc2 += c0inv[a, c] * tmp[c, b]
                out[t, a, b] = acc2


def _p_filter_coeffs(theta):
    pc = theta.p_coeffs()
    p0inv = np.linalg.inv(pc[0])
    return np.ascontiguousarray(p0inv), np.ascontiguousarray(pc[1:])


def _f_filter_coeffs(theta):
    spec = theta.spec
    f = theta.f_laurent()
    f0 = np.asarray(theta.f0(), dtype=float)
    fs = np.zeros((spec.kappa + 1, spec.n, spec.n))
    for m in range(1, spec.kappa + 2):
        fs[m - 1] = np.asarray(f.coeff(-m), dtype=float)
    return np.ascontiguousarray(np.linalg.inv(f0)), np.ascontiguousarray(fs)


def _tail_length(theta):
    """Extension beyond T + p + kappa needed for the p^{-1} tail to die out."""
    pc = theta.p_coeffs()
    if pc.shape[0] <= 1:
        return TAIL_MIN
    roots = _poly_roots(_det_coeffs(pc))
    if roots is None or len(roots) == 0:
        return TAIL_MIN
    rho = float(np.max(1.0 / np.abs(roots)))
    if not np.isfinite(rho) or rho <= 0:
        return TAIL_MIN
    if rho >= 1.0:
        return TAIL_MAX  # invalid theta; caller rejects via validate
    J = int(np.ceil(np.log(TAIL_TOL) / np.log(rho)))
    return min(max(J, TAIL_MIN), TAIL_MAX)


def _apply_stage2(theta, streams):
    p0inv, ps = _p_filter_coeffs(theta)
    out = np.empty_like(streams)
    _forward_filter(p0inv, ps, np.ascontiguousarray(streams), out)
    return out


def _apply_stage3(theta, streams):
    vec = theta.spec.indices.vector
    out = np.zeros_like(streams)
    for i, kap in enumerate(vec):
        if kap == 0:
            out[:, i] = streams[:, i]
        else:
            out[:-kap, i] = streams[kap:, i]
    return out


def _apply_stage4(theta, streams):
    f0inv, fs = _f_filter_coeffs(theta)
    out = np.empty_like(streams)
    _backward_filter(f0inv, fs, np.ascontiguousarray(streams), out)
    return out


def _apply_stages_234(theta, streams):
    return _apply_stage4(theta, _apply_stage3(theta, _apply_stage2(theta, streams)))


@dataclass
class ResidualSet:
    """Residuals on 1..T, extended-horizon intermediates, regressor streams."""

    eps: np.ndarray          # T x n, eps_t(theta) = B^{-1} u_t
    u: np.ndarray            # T x n
    v: np.ndarray            # T x n, a(z) y
    w: np.ndarray            # T x n, p(z)^{-1} a(z) y  (equals g(z) u)
    x: np.ndarray            # T x n, after the s(z)^{-1} advance
    T: int
    y_ext: np.ndarray = field(repr=False, default=None)
    w_ext: np.ndarray = field(repr=False, default=None)
    u_ext: np.ndarray = field(repr=False, default=None)
    theta: object = field(repr=False, default=None)
    data: object = field(repr=False, default=None)

    @property
    def w_g(self):
        """g(z) u_t: the stream whose lags drive the p(z)-block score."""
        return self.w

    @property
    def w_p(self):
        """p(z) u_t: FIR transform of the residual stream."""
        pc = self.theta.p_coeffs()
        out = np.zeros_like(self.u)
        for m, pm in enumerate(pc):
            if m == 0:
                out += self.u @ pm.T
            else:
                out[m:] += self.u[:-m] @ pm.T
        return out

    @property
    def x_b(self):
        """Composite-filtered lagged-data streams (the AR-block regressors)."""
        du = score_streams(self.theta, self.data, self)
        return du[:, :, : self.theta.pmap.off_tau2]


def residuals(theta, data, spec=None) -> ResidualSet:
    """Exact truncated-kernel inverse filtering of the sample."""
    spec = theta.spec
    y = data.values if hasattr(data, "values") else np.asarray(data, dtype=float)
    T, n = y.shape
    if n != spec.n:
        raise ValueError("data dimension mismatch")
    kap_max = max(spec.indices.vector)
    T_ext = T + spec.p + kap_max + _tail_length(theta)

    y_ext = np.zeros((T_ext, n))
    y_ext[:T] = y
    a = theta.a_coeffs()
    v = y_ext.copy()
    for m in range(1, spec.p + 1):
        v[m:] -= y_ext[:-m] @ a[m - 1].T
    w = _apply_stage2(theta, v[:, :, None])[:, :, 0]
    x = _apply_stage3(theta, w[:, :, None])[:, :, 0]
    u = _apply_stage4(theta, x[:, :, None])[:, :, 0]
    eps = u[:T] @ np.linalg.inv(theta.B()).T
    return ResidualSet(
        eps=eps, u=u[:T], v=v[:T], w=w[:T], x=x[:T], T=T,
        y_ext=y_ext, w_ext=w, u_ext=u, theta=theta, data=data,
    )


def score_streams(theta, data, resid: ResidualSet = None, columns=None):
    """du[t, :, c] = d u_t / d tau_c on 1..T for the requested coordinates.

    Derivatives of the extended pipeline itself: a coordinate of a_m feeds
    the stream -e_i y~_{j,t-m} through stages 2-4, a coordinate of p_m feeds
    -e_i w_{j,t-m} (w = g(z)u on the extended horizon) through stages 2-4,
    and a coordinate of g_m feeds the combined-shift stream
    -e_i u_{j,t+kappa_i-m} through stage 4 only.  Coordinates of g_m with
    kappa_i - m < 0 never enter the filter, so their derivative is zero.

    ``columns`` restricts the computation to a subset of full tau coordinate
    indices (default: all); the returned array always has n_tau columns, with
    unrequested ones zero.
    """
    spec = theta.spec
    pmap = theta.pmap
    if resid is None:
        resid = residuals(theta, data)
    T = resid.T
    n = spec.n
    T_ext = resid.y_ext.shape[0]
    kappa, qp, p = spec.kappa, spec.qp, spec.p
    n12 = n * n * (p + qp + 1)
    n_tau = pmap.n_tau
    if columns is None:
        columns = range(n_tau)
    cols12 = [c for c in columns if c < n12]
    cols3 = [c for c in columns if c >= n12]

    du = np.zeros((T, n, n_tau))

    if cols12:
        batch12 = np.zeros((T_ext, n, len(cols12)))
        for pos, c in enumerate(cols12):
            m, rem = divmod(c, n * n)
            j, i = divmod(rem, n)
            if m < p:
                src, lag_m = resid.y_ext, m + 1  # a_{m+1}[i, j]
            else:
                src, lag_m = resid.w_ext, m - p  # p_{m-p}[i, j]
            if lag_m == 0:
                batch12[:, i, pos] = -src[:, j]
            elif lag_m < T_ext:
                batch12[lag_m:, i, pos] = -src[:T_ext - lag_m, j]
        du[:, :, cols12] = _apply_stages_234(theta, batch12)[:T]

    if cols3:
        vec = spec.indices.vector
        batch3 = np.zeros((T_ext, n, len(cols3)))
        for pos, c in enumerate(cols3):
            m, rem = divmod(c - n12, n * n)
            j, i = divmod(rem, n)
            mf = vec[i] - m
            if mf == 0:
                batch3[:, i, pos] = -resid.u_ext[:, j]
            elif 0 < mf < T_ext:
                batch3[:T_ext - mf, i, pos] = -resid.u_ext[mf:, j]
        du[:, :, cols3] = _apply_stage4(theta, batch3)[:T]

    return du
