"""Model selection over (p, q, kappa, k), residual diagnostics, long-run rotation.

Every fundamentalness regime is a separate estimation problem, so the grid is
embarrassingly parallel: one task per (p, q, kappa, k), merged by a single
collector with per-task seeds.  Diagnostics are advisory output, never a
selection rule.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .estimate import EstimationResult, OptimSchedule, fit
from .filtering import residuals
from .model import Dataset, SvarmaSpec, ThetaVector, spectral_density, transfer_irf
from .whf import feasible_regimes

__all__ = [
    "bic",
    "grid",
    "GridResult",
    "GridRow",
    "jarque_bera",
    "ljung_box",
    "diagnostics_table",
    "rotate_long_run",
    "RotationResult",
]


def bic(loglik_avg: float, n_free: int, T: int) -> float:
    """BIC = -2 T L_T + n_free log T (all estimated parameters counted)."""
    return -2.0 * T * float(loglik_avg) + n_free * float(np.log(T))


# ---------------------------------------------------------------------------
# residual diagnostics
# ---------------------------------------------------------------------------

def jarque_bera(x):
    """JB = T/6 (skew^2 + (kurt - 3)^2 / 4) against chi-square(2)."""
    x = np.asarray(x, dtype=float)
    T = len(x)
    if T < 4:
        raise ValueError("series too short")
    c = x - x.mean()
    s2 = float(np.mean(c**2))
    if s2 <= 0:
        raise ValueError("constant series")
    skew = float(np.mean(c**3)) / s2**1.5
    kurt = float(np.mean(c**4)) / s2**2
    stat = T / 6.0 * (skew**2 + 0.25 * (kurt - 3.0) ** 2)
    return stat, float(stats.chi2.sf(stat, 2))


def ljung_box(x, lags: int = 8):
    """LB = T (T+2) sum_h rho_h^2 / (T-h) against chi-square(lags)."""
    x = np.asarray(x, dtype=float)
    T = len(x)
    if T <= lags + 1:
        raise ValueError("series too short for the requested lag order")
    c = x - x.mean()
    denom = float(np.sum(c**2))
    if denom <= 0:
        raise ValueError("constant series")
    stat = 0.0
    for h in range(1, lags + 1):
        rho = float(np.sum(c[h:] * c[:-h])) / denom
        stat += rho * rho / (T - h)
    stat *= T * (T + 2.0)
    return stat, float(stats.chi2.sf(stat, lags))


def diagnostics_table(eps, lags: int = 8):
    """JB and LB applied to each component, its absolute values and squares."""
    eps = np.asarray(eps, dtype=float)
    out = []
    for i in range(eps.shape[1]):
        for label, series in (
            ("level", eps[:, i]),
            ("abs", np.abs(eps[:, i])),
            ("square", eps[:, i] ** 2),
        ):
            jb_stat, jb_p = jarque_bera(series)
            lb_stat, lb_p = ljung_box(series, lags)
            out.append({
                "component": i + 1,
                "transform": label,
                "jb_stat": jb_stat,
                "jb_pvalue": jb_p,
                "lb_stat": lb_stat,
                "lb_pvalue": lb_p,
            })
    return out


def _diagnostics_summary(eps, lags=8):
    table = diagnostics_table(eps, lags)
    levels = [r for r in table if r["transform"] == "level"]
    return {
        "jb_reject_10pct": sum(1 for r in levels if r["jb_pvalue"] < 0.10),
        "lb_reject_10pct_any": sum(1 for r in table if r["lb_pvalue"] < 0.10),
        "min_lb_pvalue": min(r["lb_pvalue"] for r in table),
    }


# ---------------------------------------------------------------------------
# the grid
# ---------------------------------------------------------------------------

@dataclass
class GridRow:
    p: int
    q: int
    kappa: int
    k: int
    loglik: float
    n_free: int
    bic: float
    converged: bool
    status: str
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "p": self.p, "q": self.q, "kappa": self.kappa, "k": self.k,
            "loglik": self.loglik, "n_free": self.n_free, "bic": self.bic,
            "converged": self.converged, "status": self.status,
            "seed": self.seed, "diagnostics": self.diagnostics,
        }


@dataclass
class GridResult:
    rows: list

    def best(self) -> GridRow:
        ok = [r for r in self.rows if np.isfinite(r.bic)]
        if not ok:
            raise ValueError("no grid task produced a finite BIC")
        return min(ok, key=lambda r: r.bic)

    def regime_slice(self, p, q):
        return [r for r in self.rows if r.p == p and r.q == q]

    def to_json_dict(self):
        return {"rows": [r.to_json_dict() for r in self.rows]}

    def write_csv(self, path):
        cols = ["p", "q", "kappa", "k", "loglik", "n_free", "bic",
                "converged", "status", "seed", "jb_reject_10pct",
                "lb_reject_10pct_any", "min_lb_pvalue"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                d = r.diagnostics or {}
                w.writerow([
                    r.p, r.q, r.kappa, r.k, repr(r.loglik), r.n_free,
                    repr(r.bic), r.converged, r.status, r.seed,
                    d.get("jb_reject_10pct", ""),
                    d.get("lb_reject_10pct_any", ""),
                    repr(d["min_lb_pvalue"]) if "min_lb_pvalue" in d else "",
                ])


def grid_tasks(n, p_max, q_max):
    """All (p, q, kappa, k) combinations in deterministic order."""
    out = []
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            for idx in feasible_regimes(n, q):
                out.append((p, q, idx.kappa, idx.k))
    return out


def _fit_task(args):
    (values, names, p, q, kappa, k, normalization, densities_json,
     schedule_json, seed) = args
    from .densities import ShockDensity
    from .whf import PartialIndices

    data = Dataset(np.asarray(values), tuple(names))
    dens = tuple(ShockDensity.from_json_dict(d) for d in densities_json)
    try:
        spec = SvarmaSpec(data.n, p, q, PartialIndices(kappa, k, data.n),
                          normalization, dens)
        schedule = OptimSchedule.from_json_dict(schedule_json)
        res = fit(spec, data, schedule, seed=seed)
        rs = residuals(res.theta_hat, data)
        diag = _diagnostics_summary(rs.eps)
        return GridRow(
            p=p, q=q, kappa=kappa, k=k, loglik=res.loglik,
            n_free=res.n_free, bic=res.bic, converged=res.converged,
            status="ok", seed=seed, diagnostics=diag,
        )
    except Exception as exc:  # per-task failures become flags, never aborts
        return GridRow(
            p=p, q=q, kappa=kappa, k=k, loglik=float("-inf"),
            n_free=-1, bic=float("inf"), converged=False,
            status=f"failed: {type(exc).__name__}: {exc}", seed=seed,
        )


def grid(data: Dataset, p_max: int, q_max: int,
         schedule: OptimSchedule = None, densities=None,
         normalization: str = "natural", seed: int = 0,
         jobs: int = None) -> GridResult:
    """Fit every (p, q, kappa, k) and assemble the BIC table.

    Task seeds are seed + task index, so results are independent of the
    degree of parallelism and of scheduling order.
    """
    if schedule is None:
        schedule = OptimSchedule()
    if densities is None:
        from .densities import sgt

        densities = tuple(sgt(0.0, 2.0, 10.0) for _ in range(data.n))
    tasks = grid_tasks(data.n, p_max, q_max)
    args = [
        (data.values, data.names, p, q, kappa, k, normalization,
         [d.to_json_dict() for d in densities], schedule.to_json_dict(),
         seed + idx)
        for idx, (p, q, kappa, k) in enumerate(tasks)
    ]
    if jobs is None:
        jobs = int(os.environ.get("SVARMA_WHF_JOBS", os.cpu_count() or 1))
    if jobs <= 1:
        rows = [_fit_task(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_fit_task, args))
    return GridResult(rows=rows)


# ---------------------------------------------------------------------------
# long-run rotation (Blanchard-Quah style identification)
# ---------------------------------------------------------------------------

@dataclass
class RotationResult:
    Q: np.ndarray
    B_rotated: np.ndarray        # B Sigma Q: unit-variance shock coordinates
    irf: np.ndarray              # rotated impulse responses
    long_run_before: np.ndarray
    long_run_after: np.ndarray

    def to_json_dict(self):
        return {
            "Q": self.Q.tolist(),
            "B_rotated": self.B_rotated.tolist(),
            "irf": self.irf.tolist(),
            "long_run_before": self.long_run_before.tolist(),
            "long_run_after": self.long_run_after.tolist(),
        }


def rotate_long_run(theta: ThetaVector, variable: int, shock: int,
                    horizon: int = 40) -> RotationResult:
    """Orthogonal rotation of the orthonormalised shocks zeroing one entry
    of the long-run impact matrix K(1) = a(1)^{-1} b(1) B Sigma.

    The rotation acts on unit-variance shock coordinates (B Sigma Q with
    Sigma absorbed), so B Sigma^2 B' and the spectral density are unchanged.
    ``variable`` is the row index i and ``shock`` the column index j of the
    entry of K(1) Q forced to zero (0-based).
    """
    from .model import validate  # local to avoid import cycle at module load
    from .polymat import eval_at

    spec = theta.spec
    n = spec.n
    rep = validate(theta)
    if not rep.stability:
        raise ValueError("unstable AR part; the long-run matrix is undefined")
    if not (0 <= variable < n and 0 <= shock < n):
        raise ValueError("target indices out of range")
    a1 = np.real(eval_at(theta.a_poly(), 1.0))
    b1 = np.real(eval_at(theta.b_poly(), 1.0))
    K1 = np.linalg.solve(a1, b1 @ theta.B() @ theta.Sigma())
    row = K1[variable, :]
    nrm = float(np.linalg.norm(row))
    if nrm < 1e-12:
        raise ValueError("target row of K(1) is structurally zero")

    # orthonormal basis with the target column orthogonal to the row
    u = row / nrm
    basis = [u]
    for e in np.eye(n):
        v = e.copy()
        for b in basis:
            v -= (v @ b) * b
        if np.linalg.norm(v) > 1e-10:
            basis.append(v / np.linalg.norm(v))
        if len(basis) == n:
            break
    basis = np.array(basis)  # rows orthonormal; rows 1.. are orthogonal to u
    Q = np.empty((n, n))
    complement = basis[1:]
    Q[:, shock] = complement[0]
    rest = [u] + [complement[i] for i in range(1, n - 1)]
    cols = [j for j in range(n) if j != shock]
    for col, vecq in zip(cols, rest):
        Q[:, col] = vecq

    B_rot = theta.B() @ theta.Sigma() @ Q
    irf = transfer_irf(theta, horizon=horizon)
    irf_rot = np.array([k @ theta.Sigma() @ Q for k in irf])
    return RotationResult(
        Q=Q,
        B_rotated=B_rot,
        irf=irf_rot,
        long_run_before=K1,
        long_run_after=K1 @ Q,
    )
