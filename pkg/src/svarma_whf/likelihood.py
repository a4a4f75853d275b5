"""Approximate log-likelihood, analytic score, OPG information, sandwich.

The average log-likelihood being maximised is

    L_T = (1/T) sum_t [ sum_i log f_i(eps_it / sigma_i; lambda_i)
                        - log|det f0| - log|det B| - sum_i log sigma_i ].

In the natural normalisation f0 = I so its determinant term vanishes
identically.  Scores are analytic throughout: the system blocks reuse the
filter stages on shifted unit-direction streams, so the gradient is the exact
derivative of the truncated-sample likelihood (not an asymptotic
approximation), which is what makes finite-difference agreement tight.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .densities import log_density_and_first_derivs
from .filtering import ResidualSet, residuals, score_streams
from .model import ThetaVector, validate

__all__ = [
    "LikelihoodEval",
    "loglik",
    "score",
    "loglik_and_score",
    "per_obs_scores",
    "information_and_stderr",
    "InformationResult",
    "bordered_sandwich",
]


@dataclass
class LikelihoodEval:
    value: float
    per_obs: np.ndarray
    score: np.ndarray = None
    opg: np.ndarray = None
    sandwich: np.ndarray = None
    resid: ResidualSet = field(default=None, repr=False)


def _density_terms(theta: ThetaVector, resid: ResidualSet):
    """log f values, e_x, e_lambda at the scaled residuals."""
    T, n = resid.eps.shape
    sigma = theta.sigma
    logf = np.empty((T, n))
    e_x = np.empty((T, n))
    e_lam = []
    for i, d in enumerate(theta.densities()):
        scaled = resid.eps[:, i] / sigma[i]
        lv, ex, el = log_density_and_first_derivs(scaled, d)
        logf[:, i] = lv
        e_x[:, i] = ex
        e_lam.append(el)
    return logf, e_x, e_lam


def _const_terms(theta: ThetaVector):
    f0 = theta.f0()
    B = theta.B()
    sign_f, logdet_f = np.linalg.slogdet(f0)
    sign_B, logdet_B = np.linalg.slogdet(B)
    if sign_f == 0 or sign_B == 0:
        raise np.linalg.LinAlgError("singular f0 or B in likelihood")
    return logdet_f, logdet_B


def loglik(theta: ThetaVector, data, spec=None,
           resid: ResidualSet = None, terms=None) -> LikelihoodEval:
    """Average approximate log-likelihood and per-observation terms."""
    if resid is None:
        resid = residuals(theta, data)
    if terms is None:
        terms = _density_terms(theta, resid)
    logf = terms[0]
    logdet_f, logdet_B = _const_terms(theta)
    const = -logdet_f - logdet_B - float(np.sum(np.log(theta.sigma)))
    per_obs = logf.sum(axis=1) + const
    return LikelihoodEval(value=float(per_obs.mean()), per_obs=per_obs,
                          resid=resid)


def per_obs_scores(theta: ThetaVector, data, resid: ResidualSet = None,
                   terms=None, tau_columns=None):
    """(T, n_full) matrix of per-observation score contributions.

    Full-coordinate layout (tau including restricted entries, then beta,
    sigma, lambda); project with theta.pmap.project_gradient for the free
    gradient.  ``tau_columns`` restricts the system-block computation (the
    other tau columns are zero), which the optimiser uses to skip restricted
    coordinates.
    """
    spec = theta.spec
    pmap = theta.pmap
    if resid is None:
        resid = residuals(theta, data)
    T, n = resid.eps.shape
    if terms is None:
        terms = _density_terms(theta, resid)
    logf, e_x, e_lam = terms

    Binv = np.linalg.inv(theta.B())
    sigma = theta.sigma
    # c_t = B'^{-1} Sigma^{-1} e_{x,t}
    C = (e_x / sigma) @ Binv

    out = np.empty((T, pmap.n_full))

    # system blocks: du already carries the minus sign of the streams
    du = score_streams(theta, data, resid, columns=tau_columns)
    out[:, : pmap.n_tau] = np.einsum("tac,ta->tc", du, C)

    # -log|det f0| contribution at the f0 coordinates (free in b0 mode only)
    kappa, k = spec.kappa, spec.k
    f0invT = np.linalg.inv(theta.f0()).T
    for i in range(n):
        m = kappa + 1 if i < k else kappa
        for j in range(n):
            out[:, pmap.g_coord(m, i, j)] -= f0invT[i, j]

    # beta block: -C_i eps_j - (B^{-1})_{ji} per off-diagonal (i, j)
    r = 0
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            out[:, pmap.off_beta + r] = -C[:, i] * resid.eps[:, j] - Binv[j, i]
            r += 1

    # sigma block: -Sigma^{-2} [e_x o eps_t + sigma]
    out[:, pmap.off_sigma:pmap.off_lambda] = (
        -(e_x * resid.eps + sigma) / sigma**2
    )

    # lambda block
    for i, el in enumerate(e_lam):
        sl = pmap.lam_slices[i]
        if sl.stop > sl.start:
            out[:, sl] = el.T
    return out


def loglik_and_score(theta: ThetaVector, data, spec=None) -> LikelihoodEval:
    """One-pass likelihood value plus free-coordinate analytic gradient."""
    resid = residuals(theta, data)
    terms = _density_terms(theta, resid)
    ev = loglik(theta, data, resid=resid, terms=terms)
    full = per_obs_scores(
        theta, data, resid=resid, terms=terms,
        tau_columns=theta.pmap.score_columns,
    ).mean(axis=0)
    ev.score = theta.pmap.project_gradient(full)
    return ev


def score(theta: ThetaVector, data, spec=None) -> np.ndarray:
    """Gradient of L_T over the free coordinates."""
    return loglik_and_score(theta, data).score


@dataclass
class InformationResult:
    opg: np.ndarray        # I0 over full coordinates
    sandwich: np.ndarray   # S over full coordinates
    stderr_full: np.ndarray
    stderr_free: np.ndarray
    score_norm: float
    warning: str = ""


def bordered_sandwich(I0, R):
    """S = M^{-1} diag(I0, 0) M^{-1} with M = [[I0, R'], [R, 0]].

    With an empty restriction matrix this collapses to I0^{-1}.
    """
    I0 = np.asarray(I0, dtype=float)
    R = np.asarray(R, dtype=float).reshape(-1, I0.shape[0])
    nf, nr = I0.shape[0], R.shape[0]
    if nr == 0:
        return np.linalg.inv(I0)
    M = np.zeros((nf + nr, nf + nr))
    M[:nf, :nf] = I0
    M[:nf, nf:] = R.T
    M[nf:, :nf] = R
    Minv = np.linalg.inv(M)
    mid = np.zeros_like(M)
    mid[:nf, :nf] = I0
    return (Minv @ mid @ Minv)[:nf, :nf]


def information_and_stderr(theta: ThetaVector, data,
                           spec=None) -> InformationResult:
    """OPG information, bordered-inverse sandwich, standard errors.

    S = M^{-1} diag(I0, 0) M^{-1} with M = [[I0, R'], [R, 0]]; the border
    enforces the restrictions, so restricted coordinates get zero variance.
    With no restrictions this collapses to I0^{-1}.
    """
    pmap = theta.pmap
    T = data.values.shape[0] if hasattr(data, "values") else len(data)
    S_obs = per_obs_scores(theta, data)
    free_score = pmap.project_gradient(S_obs.mean(axis=0))
    score_norm = float(np.max(np.abs(free_score)))
    warning = ""
    if score_norm > 1e-3:
        warning = (
            f"score sup-norm {score_norm:.2e} is large; theta is not a "
            "stationary point and the standard errors are unreliable"
        )
        warnings.warn(warning)

    I0 = S_obs.T @ S_obs / T
    R, _ = pmap.restriction_matrix()
    try:
        S_full = bordered_sandwich(I0, R)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "bordered information matrix is singular: the model is (near-)"
            "non-identified at theta"
        ) from exc
    var = np.diag(S_full).copy()
    var[var < 0] = np.where(var[var < 0] > -1e-10, 0.0, np.nan)
    stderr_full = np.sqrt(var / T)
    stderr_free = np.concatenate([
        stderr_full[pmap.free_tau], stderr_full[pmap.n_tau:]
    ])
    return InformationResult(
        opg=I0,
        sandwich=S_full,
        stderr_full=stderr_full,
        stderr_free=stderr_free,
        score_norm=score_norm,
        warning=warning,
    )
