"""The SVARMA model in Wiener-Hopf parametrisation.

The system is a(z) y_t = b(z) B eps_t with b(z) = p(z) s(z) f(z) and the
"unstable" part parametrised through g(z) = s(z) f(z), which is a polynomial
(unlike f).  The full system parameter vector is

    tau = (vec(a_1..a_p), vec(p_0..p_{q-kappa}), vec(g_0..g_{kappa+1}))

of length n^2 (p+q+3), subject to 3 n^2 restrictions R tau = r (zero/one
patterns from the canonical WHF representative plus the normalisation),
leaving n^2 (p+q) free system parameters for every regime (kappa, k).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .densities import ShockDensity, moment_exists, sample
from .polymat import (
    LaurentMat,
    PolyMat,
    count_roots_inside,
    eval_at,
    mul,
    roots_det,
)
from .whf import PartialIndices, WhfTriple, compose

__all__ = [
    "SvarmaSpec",
    "ThetaVector",
    "Dataset",
    "ParamMap",
    "pack",
    "pack_from_triple",
    "unpack",
    "validate",
    "ValidationReport",
    "transfer_irf",
    "spectral_density",
    "simulate",
    "identify_B",
    "IdentifiedB",
    "read_csv",
    "write_csv",
]

STABILITY_TOL = 1e-8


@dataclass(frozen=True)
class SvarmaSpec:
    """Integer-valued structure: dimension, orders, regime, normalisation."""

    n: int
    p: int
    q: int
    indices: PartialIndices
    normalization: str = "natural"
    densities: tuple = ()

    def __post_init__(self):
        if self.indices.n != self.n:
            raise ValueError("indices dimension mismatch")
        if not self.indices.feasible_for(self.q):
            raise ValueError(
                f"indices (kappa={self.indices.kappa}, k={self.indices.k}) "
                f"infeasible for MA order q={self.q}"
            )
        if self.normalization not in ("natural", "b0_identity"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if len(self.densities) != self.n:
            raise ValueError("one density per component required")

    @property
    def kappa(self):
        return self.indices.kappa

    @property
    def k(self):
        return self.indices.k

    @property
    def qp(self):
        """Degree of p(z)."""
        return self.q - self.kappa

    @property
    def d_lambda(self):
        return sum(d.n_params for d in self.densities)

    def to_json_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "kappa": self.kappa,
            "k": self.k,
            "normalization": self.normalization,
            "densities": [d.to_json_dict() for d in self.densities],
        }

    @staticmethod
    def from_json_dict(d):
        return SvarmaSpec(
            n=d["n"],
            p=d["p"],
            q=d["q"],
            indices=PartialIndices(d["kappa"], d["k"], d["n"]),
            normalization=d.get("normalization", "natural"),
            densities=tuple(
                ShockDensity.from_json_dict(x) for x in d["densities"]
            ),
        )


@dataclass
class Dataset:
    """Observed sample: T x n array plus column names."""

    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("data must be a T x n array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data contains non-finite values")
        if not self.names:
            self.names = tuple(f"y{i + 1}" for i in range(self.values.shape[1]))

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    def demeaned(self):
        return Dataset(self.values - self.values.mean(axis=0), self.names)


def write_csv(ds: Dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ds.names)
        for row in ds.values:
            w.writerow([repr(float(x)) for x in row])


def read_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(x) for x in row] for row in r if row]
    return Dataset(np.asarray(rows, dtype=float), tuple(header))


# ---------------------------------------------------------------------------
# parameter packing
# ---------------------------------------------------------------------------

class ParamMap:
    """Coordinate bookkeeping for theta = (tau, beta, sigma, lambda).

    Restrictions are zero/one patterns plus (in b0_identity mode) equality
    ties g0_21 = -p0_21; the free-coordinate chain rule is therefore realised
    by index selection with +-1 weights, never by generalized inverses.
    """

    def __init__(self, spec: SvarmaSpec):
        self.spec = spec
        n, p, q = spec.n, spec.p, spec.q
        kappa, k, qp = spec.kappa, spec.k, spec.qp
        self.n_tau = n * n * (p + q + 3)
        self.off_tau2 = n * n * p
        self.off_tau3 = self.off_tau2 + n * n * (qp + 1)
        self.off_beta = self.n_tau
        self.off_sigma = self.off_beta + n * (n - 1)
        self.off_lambda = self.off_sigma + n
        self.n_full = self.off_lambda + spec.d_lambda

        self.lam_slices = []
        pos = self.off_lambda
        for d in spec.densities:
            self.lam_slices.append(slice(pos, pos + d.n_params))
            pos += d.n_params

        # restriction list: (coords, weights, rhs)
        fixed = {}
        ties = {}
        restr = []

        def fix(coord, value):
            fixed[coord] = float(value)
            restr.append(((coord,), (1.0,), float(value)))

        for i in range(n):
            for j in range(n):
                if not (i >= k and j < k):  # p0_21 block stays free
                    fix(self.p_coord(0, i, j), 1.0 if i == j else 0.0)
        if k > 0:
            for i in range(k):
                for j in range(k, n):
                    fix(self.p_coord(1, i, j), 0.0)
            for i in range(n):
                for j in range(k):
                    fix(self.p_coord(qp, i, j), 0.0)
        for i in range(k, n):
            for j in range(n):
                fix(self.g_coord(kappa + 1, i, j), 0.0)
        if spec.normalization == "natural":
            for i in range(n):
                m = kappa + 1 if i < k else kappa
                for j in range(n):
                    fix(self.g_coord(m, i, j), 1.0 if i == j else 0.0)
        else:  # b0_identity: g0 = [[I, 0], [-p0_21, I]]
            for i in range(n):
                for j in range(n):
                    if i >= k and j < k:
                        gc, pc = self.g_coord(0, i, j), self.p_coord(0, i, j)
                        ties[gc] = (pc, -1.0)
                        restr.append(((gc, pc), (1.0, 1.0), 0.0))
                    else:
                        fix(self.g_coord(0, i, j), 1.0 if i == j else 0.0)

        if len(restr) != 3 * n * n:
            raise AssertionError(
                f"restriction count {len(restr)} != 3 n^2 = {3 * n * n}"
            )
        self.fixed = fixed
        self.ties = ties
        self.restrictions = restr
        self.free_tau = [
            c for c in range(self.n_tau) if c not in fixed and c not in ties
        ]
        # system columns whose per-observation scores the free gradient needs
        self.score_columns = sorted(set(self.free_tau) | set(ties))
        self.n_free_system = len(self.free_tau)
        if self.n_free_system != n * n * (p + q):
            raise AssertionError("free system parameter count mismatch")
        self.n_free = self.n_free_system + (self.n_full - self.n_tau)

    # -- coordinate helpers (column-major vec within each coefficient) ------

    def a_coord(self, m, i, j):
        """a_m[i, j], lag m in 1..p."""
        n = self.spec.n
        return (m - 1) * n * n + j * n + i

    def p_coord(self, m, i, j):
        n = self.spec.n
        return self.off_tau2 + m * n * n + j * n + i

    def g_coord(self, m, i, j):
        n = self.spec.n
        return self.off_tau3 + m * n * n + j * n + i

    def beta_coord(self, i, j):
        """Off-diagonal B entry (i, j), column-major with diagonal skipped."""
        n = self.spec.n
        r = 0
        for jj in range(n):
            for ii in range(n):
                if ii == jj:
                    continue
                if (ii, jj) == (i, j):
                    return self.off_beta + r
                r += 1
        raise KeyError((i, j))

    # -- free <-> full ------------------------------------------------------

    def full_from_free(self, free):
        free = np.asarray(free, dtype=float)
        out = np.empty(self.n_full)
        out[self.free_tau] = free[: self.n_free_system]
        for c, v in self.fixed.items():
            out[c] = v
        for c, (drv, w) in self.ties.items():
            out[c] = w * out[drv]
        out[self.n_tau:] = free[self.n_free_system:]
        return out

    def free_from_full(self, full):
        full = np.asarray(full, dtype=float)
        return np.concatenate([full[self.free_tau], full[self.n_tau:]])

    def project_gradient(self, grad_full):
        """Chain rule onto free coordinates (index selection with weights)."""
        g = np.asarray(grad_full, dtype=float)
        out = np.concatenate([g[self.free_tau], g[self.n_tau:]]).copy()
        pos_of = {c: i for i, c in enumerate(self.free_tau)}
        for c, (drv, w) in self.ties.items():
            if drv in pos_of:
                out[pos_of[drv]] += w * g[c]
        return out

    def restriction_matrix(self):
        """(R, r) over the full theta layout; R has 3 n^2 rows."""
        R = np.zeros((len(self.restrictions), self.n_full))
        r = np.zeros(len(self.restrictions))
        for row, (coords, weights, rhs) in enumerate(self.restrictions):
            for c, w in zip(coords, weights):
                R[row, c] = w
            r[row] = rhs
        return R, r

    def residual_of_restrictions(self, full):
        R, r = self.restriction_matrix()
        return R @ np.asarray(full, dtype=float) - r

    def bounds_free(self):
        """Box constraints over the free vector (lambda and sigma only)."""
        lo = np.full(self.n_free, -np.inf)
        hi = np.full(self.n_free, np.inf)
        off = self.n_free_system + self.spec.n * (self.spec.n - 1)
        lo[off:off + self.spec.n] = 1e-8  # sigma > 0
        pos = off + self.spec.n
        for d in self.spec.densities:
            for (bl, bh) in d.bounds():
                lo[pos], hi[pos] = bl, bh
                pos += 1
        return lo, hi

    def H_matrix(self):
        """H with vec(B) = H beta + vec(I_n)."""
        n = self.spec.n
        H = np.zeros((n * n, n * (n - 1)))
        r = 0
        for j in range(n):
            for i in range(n):
                if i == j:
                    continue
                H[j * n + i, r] = 1.0
                r += 1
        return H


@dataclass
class ThetaVector:
    """Full parameter vector theta over a given spec."""

    spec: SvarmaSpec
    full: np.ndarray
    pmap: ParamMap = field(default=None, repr=False)

    def __post_init__(self):
        if self.pmap is None:
            self.pmap = ParamMap(self.spec)
        self.full = np.asarray(self.full, dtype=float)
        if self.full.shape != (self.pmap.n_full,):
            raise ValueError("theta length mismatch")

    # -- slices --------------------------------------------------------------

    @property
    def tau1(self):
        return self.full[: self.pmap.off_tau2]

    @property
    def tau2(self):
        return self.full[self.pmap.off_tau2:self.pmap.off_tau3]

    @property
    def tau3(self):
        return self.full[self.pmap.off_tau3:self.pmap.n_tau]

    @property
    def beta(self):
        return self.full[self.pmap.off_beta:self.pmap.off_sigma]

    @property
    def sigma(self):
        return self.full[self.pmap.off_sigma:self.pmap.off_lambda]

    @property
    def lam(self):
        return self.full[self.pmap.off_lambda:]

    @property
    def free(self):
        return self.pmap.free_from_full(self.full)

    # -- structured views ------------------------------------------------------

    def a_coeffs(self):
        """(p, n, n) array of AR coefficient matrices a_1..a_p."""
        n, p = self.spec.n, self.spec.p
        return self.tau1.reshape(p, n, n).transpose(0, 2, 1) if p else np.zeros((0, n, n))

    def p_coeffs(self):
        n, qp = self.spec.n, self.spec.qp
        return self.tau2.reshape(qp + 1, n, n).transpose(0, 2, 1)

    def g_coeffs(self):
        n, kappa = self.spec.n, self.spec.kappa
        return self.tau3.reshape(kappa + 2, n, n).transpose(0, 2, 1)

    def a_poly(self) -> PolyMat:
        """a(z) = I - a_1 z - ... - a_p z^p."""
        n = self.spec.n
        coeffs = [np.eye(n)] + [-m for m in self.a_coeffs()]
        return PolyMat(coeffs, rational=False)

    def p_poly(self) -> PolyMat:
        return PolyMat(list(self.p_coeffs()), rational=False)

    def g_poly(self) -> PolyMat:
        return PolyMat(list(self.g_coeffs()), rational=False)

    def f_laurent(self) -> LaurentMat:
        """f(z) recovered from g by the per-row index shift."""
        n, kappa, k = self.spec.n, self.spec.kappa, self.spec.k
        g = self.g_coeffs()
        fc = np.zeros((kappa + 2, n, n))  # fc[m] = coefficient of z^-m
        for m in range(kappa + 2):
            for i in range(n):
                src = kappa + 1 - m if i < k else kappa - m
                if 0 <= src <= kappa + 1:
                    fc[m, i, :] = g[src, i, :]
        return LaurentMat(fc[::-1].copy(), lo=-(kappa + 1), rational=False)

    def b_poly(self) -> PolyMat:
        """b(z) = p(z) g(z); degree at most q by the canonical structure."""
        return mul(self.p_poly(), self.g_poly())

    def f0(self):
        n, kappa, k = self.spec.n, self.spec.kappa, self.spec.k
        g = self.g_coeffs()
        out = np.empty((n, n))
        out[:k, :] = g[kappa + 1, :k, :]
        out[k:, :] = g[kappa, k:, :]
        return out

    def B(self):
        n = self.spec.n
        B = np.eye(n)
        r = 0
        for j in range(n):
            for i in range(n):
                if i != j:
                    B[i, j] = self.beta[r]
                    r += 1
        return B

    def Sigma(self):
        return np.diag(self.sigma)

    def lam_of(self, i):
        return tuple(self.full[self.pmap.lam_slices[i]])

    def densities(self):
        return tuple(
            d.with_lam(self.lam_of(i)) if d.n_params else d
            for i, d in enumerate(self.spec.densities)
        )

    def whf_triple(self) -> WhfTriple:
        return WhfTriple(
            p=self.p_poly(),
            index_vector=self.spec.indices.vector,
            f=self.f_laurent(),
            mode=self.spec.normalization,
        )

    def with_free(self, free):
        return ThetaVector(self.spec, self.pmap.full_from_free(free), self.pmap)

    def to_json_dict(self):
        return {
            "tau1": self.tau1.tolist(),
            "tau2": self.tau2.tolist(),
            "tau3": self.tau3.tolist(),
            "beta": self.beta.tolist(),
            "sigma": self.sigma.tolist(),
            "lambda": self.lam.tolist(),
        }

    @staticmethod
    def from_json_dict(spec, d):
        full = np.concatenate([
            np.asarray(d["tau1"], dtype=float),
            np.asarray(d["tau2"], dtype=float),
            np.asarray(d["tau3"], dtype=float),
            np.asarray(d["beta"], dtype=float),
            np.asarray(d["sigma"], dtype=float),
            np.asarray(d["lambda"], dtype=float),
        ])
        return ThetaVector(spec, full)


def _vec(mat):
    """Column-major vectorisation."""
    return np.asarray(mat, dtype=float).T.reshape(-1)


def pack(a, p_coeffs, g_coeffs, B, sigma, lam, spec: SvarmaSpec) -> ThetaVector:
    """Assemble theta from coefficient arrays, checking R tau = r."""
    pmap = ParamMap(spec)
    n = spec.n
    a = np.asarray(a, dtype=float).reshape(spec.p, n, n)
    p_coeffs = np.asarray(p_coeffs, dtype=float).reshape(spec.qp + 1, n, n)
    g_coeffs = np.asarray(g_coeffs, dtype=float).reshape(spec.kappa + 2, n, n)
    B = np.asarray(B, dtype=float)
    full = np.empty(pmap.n_full)
    full[: pmap.off_tau2] = np.concatenate([_vec(m) for m in a]) if spec.p else []
    full[pmap.off_tau2:pmap.off_tau3] = np.concatenate([_vec(m) for m in p_coeffs])
    full[pmap.off_tau3:pmap.n_tau] = np.concatenate([_vec(m) for m in g_coeffs])
    beta = []
    for j in range(n):
        for i in range(n):
            if i != j:
                beta.append(B[i, j])
    if np.max(np.abs(np.diag(B) - 1.0)) > 1e-12:
        raise ValueError("B must have unit diagonal in this parametrisation")
    full[pmap.off_beta:pmap.off_sigma] = beta
    full[pmap.off_sigma:pmap.off_lambda] = np.asarray(sigma, dtype=float)
    lam_flat = np.concatenate([np.asarray(l, dtype=float).ravel() for l in lam]) \
        if lam else np.zeros(0)
    if lam_flat.shape != (spec.d_lambda,):
        raise ValueError("lambda length mismatch")
    full[pmap.off_lambda:] = lam_flat
    theta = ThetaVector(spec, full, pmap)
    resid = pmap.residual_of_restrictions(full)
    bad = np.nonzero(np.abs(resid) > 1e-10)[0]
    if bad.size:
        raise ValueError(
            f"restriction violation: entries {bad.tolist()} of R tau - r are "
            f"nonzero (first value {resid[bad[0]]:.3e})"
        )
    return theta


def pack_from_triple(a, triple: WhfTriple, B, sigma, lam,
                     spec: SvarmaSpec) -> ThetaVector:
    """Assemble theta with the MA part given as a WHF triple."""
    if triple.mode != spec.normalization:
        raise ValueError(
            f"triple mode {triple.mode!r} != spec normalization "
            f"{spec.normalization!r}"
        )
    if tuple(triple.index_vector) != spec.indices.vector:
        raise ValueError("triple indices do not match the spec regime")
    ptf = triple.p.to_float()
    g = mul(triple.s(rational=False), triple.f.to_float())
    g_arr = np.zeros((spec.kappa + 2, spec.n, spec.n))
    for m in range(min(g.hi, spec.kappa + 1) + 1):
        g_arr[m] = np.asarray(g.coeff(m), dtype=float)
    p_arr = np.zeros((spec.qp + 1, spec.n, spec.n))
    for m in range(min(ptf.degree, spec.qp) + 1):
        p_arr[m] = np.asarray(ptf.coeff(m), dtype=float)
    return pack(a, p_arr, g_arr, B, sigma, lam, spec)


def unpack(theta: ThetaVector, spec: SvarmaSpec = None):
    """(a, p, f, g, B, Sigma, lambda) structured views of theta."""
    if spec is not None and spec is not theta.spec:
        raise ValueError("theta belongs to a different spec")
    return (
        theta.a_poly(),
        theta.p_poly(),
        theta.f_laurent(),
        theta.g_poly(),
        theta.B(),
        theta.Sigma(),
        [theta.lam_of(i) for i in range(theta.spec.n)],
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    stability: bool
    p_stable: bool
    f_stable: bool
    ma_no_circle_roots: bool
    ma_inside_count: bool
    coprime: bool
    end_matrices_full_rank: bool
    B_nonsingular: bool
    sigma_positive: bool
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all((
            self.stability, self.p_stable, self.f_stable,
            self.ma_no_circle_roots, self.ma_inside_count, self.coprime,
            self.end_matrices_full_rank, self.B_nonsingular,
            self.sigma_positive,
        ))

    def failures(self):
        return [k for k, v in self.__dict__.items()
                if isinstance(v, bool) and not v]


def _det_coeffs(coeffs):
    """Determinant polynomial (ascending) by batched roots-of-unity eval."""
    m, n, _ = coeffs.shape
    if n == 1:
        return coeffs[:, 0, 0].copy()
    if n == 2:
        a, b = coeffs[:, 0, 0], coeffs[:, 0, 1]
        c, d = coeffs[:, 1, 0], coeffs[:, 1, 1]
        return np.convolve(a, d) - np.convolve(b, c)
    npts = (m - 1) * n + 1
    zs = np.exp(-2j * np.pi * np.arange(npts) / npts)
    zpow = zs[:, None] ** np.arange(m)[None, :]
    vals = np.linalg.det(np.tensordot(zpow, coeffs, axes=(1, 0)))
    return np.real(np.fft.ifft(vals))


def _poly_roots(coeffs):
    """Roots of an ascending coefficient vector; None if identically zero."""
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c))
    if not scale > 0:
        return None
    c = np.where(np.abs(c) < 1e-12 * scale, 0.0, c)
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return None
    c = c[: nz[-1] + 1]
    if len(c) == 1:
        return np.zeros(0, dtype=complex)
    return np.roots(c[::-1])


def _eval_coeffs(coeffs, z):
    acc = np.zeros(coeffs.shape[1:], dtype=complex)
    for j in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * z + coeffs[j]
    return acc


def validate(theta: ThetaVector, spec: SvarmaSpec = None) -> ValidationReport:
    """Per-condition report: never raises, flags instead."""
    spec = theta.spec
    n = spec.n
    det_tol = STABILITY_TOL

    ac = theta.a_coeffs()
    a_full = np.concatenate([np.eye(n)[None], -ac], axis=0)
    a_roots = (_poly_roots(_det_coeffs(a_full)) if spec.p
               else np.zeros(0, dtype=complex))
    stability = a_roots is not None and (
        len(a_roots) == 0 or np.min(np.abs(a_roots)) > 1.0 + det_tol
    )

    pc = theta.p_coeffs()
    gc = theta.g_coeffs()
    p_roots = _poly_roots(_det_coeffs(pc))
    g_roots = _poly_roots(_det_coeffs(gc))
    if p_roots is None or g_roots is None:
        b_roots = None
        p_stable = f_stable = no_circle = count_ok = False
    else:
        b_roots = np.concatenate([p_roots, g_roots])
        mods = np.abs(b_roots)
        no_circle = not np.any(np.abs(mods - 1.0) < det_tol)
        p_stable = len(p_roots) == 0 or np.min(np.abs(p_roots)) > 1.0 + det_tol
        f_stable = len(g_roots) == 0 or np.max(np.abs(g_roots)) < 1.0 - det_tol
        count_ok = no_circle and (
            int(np.sum(mods < 1.0)) == spec.indices.inside_count
        )

    # b(z) = p(z) g(z) as raw coefficient convolution
    bc = np.zeros((pc.shape[0] + gc.shape[0] - 1, n, n))
    for i in range(pc.shape[0]):
        for j in range(gc.shape[0]):
            bc[i + j] += pc[i] @ gc[j]

    # coprimeness: at common determinantal roots, [a(z0) b(z0)] full row rank
    coprime = True
    if stability and b_roots is not None and spec.p and len(a_roots):
        for r0 in a_roots:
            if len(b_roots) and np.min(np.abs(b_roots - r0)) < 1e-6:
                M = np.hstack([_eval_coeffs(a_full, r0), _eval_coeffs(bc, r0)])
                s = np.linalg.svd(M, compute_uv=False)
                if s[-1] <= 1e-8 * max(s[0], 1.0):
                    coprime = False
                    break

    # (a_p, b_q) of full rank
    a_p = -ac[-1] if spec.p else np.eye(n)
    b_q = bc[spec.q] if spec.q < bc.shape[0] else np.zeros((n, n))
    M = np.hstack([a_p, b_q])
    s = np.linalg.svd(M, compute_uv=False)
    full_rank = s[-1] > 1e-10 * max(s[0], 1.0)

    Bm = theta.B()
    sB = np.linalg.svd(Bm, compute_uv=False)
    B_ok = sB[-1] > 1e-10 * max(sB[0], 1.0)
    sigma_ok = bool(np.all(theta.sigma > 0))

    return ValidationReport(
        stability=bool(stability),
        p_stable=bool(p_stable),
        f_stable=bool(f_stable),
        ma_no_circle_roots=bool(no_circle),
        ma_inside_count=bool(count_ok),
        coprime=bool(coprime),
        end_matrices_full_rank=bool(full_rank),
        B_nonsingular=bool(B_ok),
        sigma_positive=sigma_ok,
        details={
            "a_roots": None if a_roots is None else a_roots.tolist(),
            "b_roots": None if b_roots is None else b_roots.tolist(),
        },
    )


# ---------------------------------------------------------------------------
# transfer function / IRF / spectral density
# ---------------------------------------------------------------------------

def transfer_irf(theta: ThetaVector, spec: SvarmaSpec = None, horizon: int = 40):
    """k_0..k_H of k(z) = a(z)^{-1} b(z) B via the standard recursion."""
    spec = theta.spec
    rep = validate(theta)
    if not rep.stability:
        raise ValueError("unstable AR part; IRF undefined")
    n = spec.n
    a = theta.a_coeffs()
    bB = [np.asarray(theta.b_poly().coeff(j), dtype=float) @ theta.B()
          for j in range(spec.q + 1)]
    out = np.zeros((horizon + 1, n, n))
    for j in range(horizon + 1):
        acc = bB[j].copy() if j <= spec.q else np.zeros((n, n))
        for i in range(1, min(j, spec.p) + 1):
            acc += a[i - 1] @ out[j - i]
        out[j] = acc
    return out


def spectral_density(theta: ThetaVector, spec: SvarmaSpec = None,
                     freqs=None):
    """Spectral density (1/2pi) a^{-1} b B Sigma^2 B' b'(1/z) a'(1/z)^{-1}.

    Evaluated at z = exp(-i lambda) on ``freqs`` (default: 64-point grid on
    [0, pi]).  Returns an array of Hermitian n x n matrices.
    """
    spec = theta.spec
    if freqs is None:
        freqs = np.linspace(0.0, np.pi, 64)
    freqs = np.asarray(freqs, dtype=float)
    a = theta.a_poly()
    b = theta.b_poly()
    BS2B = theta.B() @ theta.Sigma() ** 2 @ theta.B().T
    out = np.empty((len(freqs), spec.n, spec.n), dtype=complex)
    for idx, lam in enumerate(freqs):
        z = np.exp(-1j * lam)
        az = eval_at(a, z)
        bz = eval_at(b, z)
        azi = np.linalg.inv(az)
        bzi = eval_at(b, 1.0 / z)
        azT = eval_at(a, 1.0 / z).T
        out[idx] = azi @ bz @ BS2B @ bzi.T @ np.linalg.inv(azT) / (2 * np.pi)
    return out


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def simulate(theta: ThetaVector, spec: SvarmaSpec = None, T: int = 1000,
             burn_in: int = 500, seed: int = 0):
    """Draw a sample path; returns (Dataset, shocks) with shocks = Sigma eps.

    eps is drawn i.i.d. from the component densities, scaled by Sigma, mixed
    by B, passed through the causal polynomial b(z) and the stable AR
    recursion from zero initial conditions; the first ``burn_in`` points are
    discarded.
    """
    spec = theta.spec
    rep = validate(theta)
    if not rep.ok:
        raise ValueError(f"invalid theta: {rep.failures()}")
    for d in theta.densities():
        if not moment_exists(d, 2):
            raise ValueError("simulation requires finite shock variances")
    n = spec.n
    rng = np.random.default_rng(seed)
    total = T + burn_in + spec.q
    eps = np.empty((total, n))
    for i, d in enumerate(theta.densities()):
        eps[:, i] = theta.sigma[i] * sample(d, total, rng)
    u = eps @ theta.B().T
    b = theta.b_poly()
    bc = [np.asarray(b.coeff(j), dtype=float) for j in range(spec.q + 1)]
    m = np.zeros((total, n))
    for j, bj in enumerate(bc):
        if j == 0:
            m += u @ bj.T
        else:
            m[j:] += u[:-j] @ bj.T
    a = theta.a_coeffs()
    y = np.zeros((total, n))
    for t in range(total):
        acc = m[t].copy()
        for i in range(1, min(t, spec.p) + 1):
            acc += a[i - 1] @ y[t - i]
        y[t] = acc
    start = burn_in + spec.q
    return (
        Dataset(y[start:start + T]),
        eps[start:start + T].copy(),
    )


# ---------------------------------------------------------------------------
# static identification schemes
# ---------------------------------------------------------------------------

@dataclass
class IdentifiedB:
    B: np.ndarray
    sigma: np.ndarray  # None for the cb scheme (Sigma = I)
    permutation: tuple
    signs: tuple
    scheme: str


def identify_B(Bmat, scheme: str = "cb") -> IdentifiedB:
    """Canonical representative of B under signed-permutation equivalence.

    'lms': columns to unit norm, permute so each |diagonal| dominates the
    same-row entries with higher column index, rescale to unit diagonal;
    returns (B, Sigma) with Sigma positive diagonal.  Fails off a
    topologically large set where no permutation satisfies the dominance.

    'cb': columns to unit norm, sign-flip so each column's largest-magnitude
    entry is positive, sort columns lexicographically; Sigma = I and no
    matrix is excluded.
    """
    M = np.asarray(Bmat, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("B must be square")
    svals = np.linalg.svd(M, compute_uv=False)
    if svals[-1] <= 1e-12 * max(svals[0], 1.0):
        raise ValueError("B must be nonsingular")
    norms = np.linalg.norm(M, axis=0)
    U = M / norms

    if scheme == "lms":
        chosen = None
        for perm in permutations(range(n)):
            W = U[:, perm]
            if all(
                abs(W[i, i]) > abs(W[i, l])
                for i in range(n) for l in range(i + 1, n)
            ):
                chosen = perm
                break
        if chosen is None:
            raise ValueError(
                "the lms identification scheme is not defined for this B: no "
                "column permutation satisfies the strict dominance condition"
            )
        W = U[:, chosen]
        diag = np.diag(W).copy()
        Bc = W / diag  # unit diagonal, signs absorbed into the columns
        sigma = np.abs(norms[list(chosen)] * diag)
        signs = tuple(int(np.sign(d)) for d in diag)
        return IdentifiedB(Bc, sigma, tuple(chosen), signs, "lms")

    if scheme == "cb":
        signs = np.empty(n)
        for j in range(n):
            imax = int(np.argmax(np.abs(U[:, j])))
            signs[j] = 1.0 if U[imax, j] >= 0 else -1.0
        Uc = U * signs
        # greatest-first under the lexicographic order, ties by column index
        order = sorted(range(n), key=lambda j: tuple(-Uc[:, j]) + (j,))
        Bc = Uc[:, order]
        return IdentifiedB(
            Bc, None, tuple(order), tuple(int(signs[j]) for j in order), "cb"
        )

    raise ValueError(f"unknown identification scheme {scheme!r}")
