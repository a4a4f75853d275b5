"""Wiener-Hopf factorisation b(z) = p(z) s(z) f(z) of MA polynomial matrices.

The factoriser runs in exact rational arithmetic only: elimination pivots are
meaningless under rounding, and the estimator never factorises an arbitrary
float polynomial (it parametrises the triple directly).  Float inputs must be
rationalised first (``PolyMat.to_rational``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polymat import (
    CIRCLE_TOL,
    LaurentMat,
    PolyMat,
    UnitCircleRootError,
    count_roots_inside,
    det_poly,
    eval_at,
    fr_det,
    fr_eye,
    fr_inv,
    fr_null_left,
    fr_zeros,
    leading_row_matrix,
    mul,
    p_add,
    p_deg,
    p_divmod,
    p_eval,
    p_gcd,
    p_mul,
    p_reciprocal,
    p_scale,
    p_trim,
    roots_det,
    row_degrees,
)

__all__ = [
    "PartialIndices",
    "WhfTriple",
    "WhfError",
    "smith_whf_factorize",
    "generic_indices_from_root_count",
    "canonicalize",
    "normalize",
    "compose",
    "blaschke_mirror_real",
    "feasible_regimes",
]


class WhfError(ValueError):
    """Factorisation or canonicalisation failure."""


@dataclass(frozen=True)
class PartialIndices:
    """Generic partial-index pattern (kappa+1, ..., kappa+1, kappa, ..., kappa).

    The first ``k`` indices equal kappa+1 and the remaining n-k equal kappa,
    so n*kappa + k counts the determinantal MA zeros inside the open unit
    disc.
    """

    kappa: int
    k: int
    n: int

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not 0 <= self.k < self.n:
            raise ValueError("k must lie in {0, ..., n-1}")

    @property
    def vector(self):
        return tuple([self.kappa + 1] * self.k + [self.kappa] * (self.n - self.k))

    @property
    def inside_count(self):
        return self.n * self.kappa + self.k

    def feasible_for(self, q):
        """Feasibility for MA order q: kappa <= q-1, or (kappa, k) = (q, 0)."""
        if self.kappa <= q - 1 and self.kappa >= 0:
            return True
        return (self.kappa, self.k) == (q, 0)

    @classmethod
    def from_vector(cls, vec):
        vec = tuple(int(v) for v in vec)
        n = len(vec)
        kappa = vec[-1]
        k = sum(1 for v in vec if v == kappa + 1)
        cand = cls(kappa=kappa, k=k, n=n)
        if cand.vector != vec:
            raise WhfError(f"index vector {vec} is not of the generic pattern")
        return cand

    @classmethod
    def from_inside_count(cls, n_inside, n):
        return cls(kappa=n_inside // n, k=n_inside % n, n=n)


def feasible_regimes(n, q):
    """All feasible (kappa, k) for MA order q, in grid order."""
    if q == 0:
        return [PartialIndices(0, 0, n)]
    out = [PartialIndices(kappa, k, n) for kappa in range(q) for k in range(n)]
    out.append(PartialIndices(q, 0, n))
    return out


def s_matrix(index_vector, rational=True):
    """diag(z^{kappa_1}, ..., z^{kappa_n}) as a PolyMat."""
    n = len(index_vector)
    d = max(index_vector)
    coeffs = []
    for j in range(d + 1):
        m = fr_zeros(n, n) if rational else np.zeros((n, n))
        for i, kap in enumerate(index_vector):
            if kap == j:
                m[i, i] = Fraction(1) if rational else 1.0
        coeffs.append(m)
    return PolyMat(coeffs, rational=rational)


@dataclass(frozen=True)
class WhfTriple:
    """A factorisation b = p(z) s(z) f(z).

    ``p`` has no zeros in the closed unit disc, ``s`` is determined by
    ``index_vector`` and ``f`` (written in nonpositive powers of z) has no
    zeros in the closed unit disc of w = 1/z.
    """

    p: PolyMat
    index_vector: tuple
    f: LaurentMat
    mode: str = "raw"  # raw | canonical | natural | b0_identity

    @property
    def n(self):
        return self.p.rows

    @property
    def indices(self):
        return PartialIndices.from_vector(self.index_vector)

    @property
    def is_generic(self):
        try:
            self.indices
            return True
        except WhfError:
            return False

    def s(self, rational=None):
        if rational is None:
            rational = self.p.rational
        return s_matrix(self.index_vector, rational=rational)

    def f_coeff(self, j):
        """Coefficient matrix of z^-j in f."""
        return self.f.coeff(-j)

    def to_json_dict(self):
        return {
            "mode": self.mode,
            "index_vector": list(self.index_vector),
            "p": self.p.to_json_dict(),
            "f": self.f.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            p=LaurentMat.from_json_dict(d["p"]),
            index_vector=tuple(d["index_vector"]),
            f=LaurentMat.from_json_dict(d["f"]),
            mode=d["mode"],
        )


def compose(t: WhfTriple) -> PolyMat:
    """p s f with the assertion that all negative powers cancel."""
    full = mul(mul(t.p, t.s()), t.f)
    if isinstance(full, PolyMat):
        return full
    if not full.rational:
        scale = max(1.0, max(abs(float(x)) for x in full.coeffs.ravel()))
        bad = 0.0
        for j in range(full.lo, 0):
            bad = max(bad, max(abs(float(x)) for x in full.coeff(j).ravel()))
        if bad <= 1e-10 * scale:
            nonneg = [full.coeff(j) for j in range(0, full.hi + 1)]
            return PolyMat(nonneg, rational=False)
    raise WhfError("negative powers do not cancel in p s f")


# ---------------------------------------------------------------------------
# Smith form over Q[z]
# ---------------------------------------------------------------------------

def _grid(mat: PolyMat):
    """Entry grid of ascending Fraction coefficient lists."""
    n, m = mat.rows, mat.cols
    return [
        [p_trim([mat.coeffs[j][r, c] for j in range(mat.coeffs.shape[0])])
         for c in range(m)]
        for r in range(n)
    ]


def _grid_to_polymat(grid):
    n, m = len(grid), len(grid[0])
    d = max(max(p_deg(e) for e in row) for row in grid)
    d = max(d, 0)
    coeffs = [fr_zeros(n, m) for _ in range(d + 1)]
    for r in range(n):
        for c in range(m):
            for j, x in enumerate(grid[r][c]):
                coeffs[j][r, c] = x
    return PolyMat(coeffs, rational=True)


def _is_zero_entry(e):
    return p_deg(e) < 0


def smith_form(b: PolyMat):
    """Exact Smith form b = u(z) Lambda(z) v(z) over the rationals.

    Lambda is diagonal with monic entries satisfying the divisibility chain;
    u and v are unimodular.
    """
    if b.rows != b.cols:
        raise WhfError("Smith form implemented for square matrices only")
    if not b.rational:
        raise WhfError("Smith form requires exact rational coefficients")
    n = b.rows
    M = _grid(b)
    U = _grid(PolyMat.identity(n, rational=True))
    V = _grid(PolyMat.identity(n, rational=True))

    def swap_rows(i, j):
        M[i], M[j] = M[j], M[i]
        for r in range(n):  # U: swap columns i, j
            U[r][i], U[r][j] = U[r][j], U[r][i]

    def swap_cols(i, j):
        for r in range(n):
            M[r][i], M[r][j] = M[r][j], M[r][i]
        V[i], V[j] = V[j], V[i]  # V: swap rows i, j

    def row_axpy(dst, src, q):
        # row dst -= q * row src; U column src += q * U column dst
        for c in range(n):
            M[dst][c] = p_add(M[dst][c], p_scale(p_mul(q, M[src][c]), -1))
        for r in range(n):
            U[r][src] = p_add(U[r][src], p_mul(q, U[r][dst]))

    def col_axpy(dst, src, q):
        # col dst -= q * col src; V row src += q * V row dst
        for r in range(n):
            M[r][dst] = p_add(M[r][dst], p_scale(p_mul(q, M[r][src]), -1))
        for c in range(n):
            V[src][c] = p_add(V[src][c], p_mul(q, V[dst][c]))

    def row_add(dst, src):
        # row dst += row src; U column src -= U column dst
        for c in range(n):
            M[dst][c] = p_add(M[dst][c], M[src][c])
        for r in range(n):
            U[r][src] = p_add(U[r][src], p_scale(U[r][dst], -1))

    for t in range(n):
        while True:
            # smallest-degree nonzero pivot in the trailing submatrix
            best = None
            for r in range(t, n):
                for c in range(t, n):
                    if not _is_zero_entry(M[r][c]):
                        if best is None or p_deg(M[r][c]) < p_deg(M[best[0]][best[1]]):
                            best = (r, c)
            if best is None:
                break
            if best[0] != t:
                swap_rows(t, best[0])
            if best[1] != t:
                swap_cols(t, best[1])
            dirty = False
            for r in range(t + 1, n):
                if not _is_zero_entry(M[r][t]):
                    q, _ = p_divmod(M[r][t], M[t][t])
                    row_axpy(r, t, q)
                    if not _is_zero_entry(M[r][t]):
                        dirty = True
            for c in range(t + 1, n):
                if not _is_zero_entry(M[t][c]):
                    q, _ = p_divmod(M[t][c], M[t][t])
                    col_axpy(c, t, q)
                    if not _is_zero_entry(M[t][c]):
                        dirty = True
            if dirty:
                continue
            # pivot row/column clear: enforce divisibility on the rest
            fix = None
            for r in range(t + 1, n):
                for c in range(t + 1, n):
                    if not _is_zero_entry(M[r][c]):
                        _, rem = p_divmod(M[r][c], M[t][t])
                        if not _is_zero_entry(rem):
                            fix = r
                            break
                if fix is not None:
                    break
            if fix is None:
                break
            row_add(t, fix)
        # monic normalisation of the pivot
        if not _is_zero_entry(M[t][t]) and M[t][t][-1] != 1:
            lead = M[t][t][-1]
            inv = Fraction(1) / Fraction(lead)
            for c in range(n):
                M[t][c] = p_scale(M[t][c], inv)
            for r in range(n):
                U[r][t] = p_scale(U[r][t], lead)

    u = _grid_to_polymat(U)
    lam = [M[i][i] for i in range(n)]
    v = _grid_to_polymat(V)
    return u, lam, v


# ---------------------------------------------------------------------------
# splitting diagonal entries by root location
# ---------------------------------------------------------------------------

def _check_no_unit_circle_roots(lam):
    """Exact-first unit-circle test: gcd with the reciprocal, then +-1."""
    for val in (Fraction(1), Fraction(-1)):
        if p_eval(lam, val) == 0:
            raise UnitCircleRootError("determinantal zero at z = +-1")
    g = p_gcd(lam, p_reciprocal(lam))
    if p_deg(g) > 0:
        roots = np.roots([float(x) for x in g][::-1])
        if np.any(np.abs(np.abs(roots) - 1.0) < CIRCLE_TOL):
            raise UnitCircleRootError("determinantal zero on the unit circle")


def _poly_from_roots_rational(roots):
    """Monic rational polynomial with the given (float) roots, or None."""
    c = np.atleast_1d(np.poly(np.asarray(roots)))  # descending, monic
    c = np.real(c)[::-1]
    try:
        return [Fraction(x).limit_denominator(10**12) for x in c]
    except (OverflowError, ValueError):
        return None


def _split_by_root_location(lam):
    """lam = lam_p * lam_f with lam_f monic carrying all roots inside.

    Primary path: numerically cluster the roots, reconstruct the inside
    factor, rationalise it and verify by exact division.  Fallback: exact
    factorisation over Q (sympy) with per-factor classification.
    """
    lam = p_trim(lam)
    deg = p_deg(lam)
    if deg <= 0:
        return list(lam), [Fraction(1)]
    _check_no_unit_circle_roots(lam)
    roots = np.roots([float(x) for x in lam][::-1])
    mods = np.abs(roots)
    if np.any(np.abs(mods - 1.0) < CIRCLE_TOL):
        raise UnitCircleRootError("determinantal zero on the unit circle")
    inside = roots[mods < 1.0]
    if len(inside) == 0:
        return list(lam), [Fraction(1)]
    if len(inside) == deg:
        lead = lam[-1]
        return [lead], p_scale(lam, Fraction(1) / Fraction(lead))

    cand = _poly_from_roots_rational(inside)
    if cand is not None:
        q, rem = p_divmod(lam, cand)
        if _is_zero_entry(rem):
            return q, cand
    return _split_by_factorisation(lam)


def _split_by_factorisation(lam):
    """Exact split via irreducible factorisation over Q."""
    import sympy

    z = sympy.Symbol("z")
    expr = sum(
        sympy.Rational(c.numerator, c.denominator) * z**i
        for i, c in enumerate(lam)
    )
    const, factors = sympy.Poly(expr, z, domain="QQ").factor_list()
    lam_p = [Fraction(const.p, const.q)]
    lam_f = [Fraction(1)]
    for fac, mult in factors:
        coeffs = [Fraction(c.p, c.q) for c in reversed(fac.all_coeffs())]
        froots = np.roots([float(x) for x in coeffs][::-1])
        mods = np.abs(froots)
        if np.any(np.abs(mods - 1.0) < CIRCLE_TOL):
            raise UnitCircleRootError("determinantal zero on the unit circle")
        if np.all(mods < 1.0):
            piece = coeffs
            for _ in range(mult):
                lam_f = p_mul(lam_f, piece)
        elif np.all(mods > 1.0):
            for _ in range(mult):
                lam_p = p_mul(lam_p, coeffs)
        else:
            raise WhfError(
                "an irreducible determinant factor has zeros on both sides of "
                "the unit circle; the exact inside/outside split does not "
                "exist over the rationals"
            )
    # keep lam_f monic, push the unit into lam_p
    lead = lam_f[-1]
    if lead != 1:
        lam_f = p_scale(lam_f, Fraction(1) / Fraction(lead))
        lam_p = p_scale(lam_p, lead)
    return lam_p, lam_f


# ---------------------------------------------------------------------------
# row reduction with compensation
# ---------------------------------------------------------------------------

def _elementary_reduction(P, F):
    """One degree-reducing step; returns updated (P, F) or None if reduced."""
    n = F.rows
    degs = row_degrees(F)
    if any(d < 0 for d in degs):
        raise WhfError("zero row encountered during row reduction")
    L = leading_row_matrix(F)
    c = fr_null_left(L)
    if c is None:
        return None
    nz = [i for i in range(n) if c[i] != 0]
    j = max(nz, key=lambda i: degs[i])
    dmax = degs[j]
    # E: identity except row j with entries c_i z^{dmax - deg_i}
    d = max(dmax - min(degs[i] for i in nz), 0)
    E = [fr_zeros(n, n) for _ in range(d + 1)]
    Einv = [fr_zeros(n, n) for _ in range(d + 1)]
    for i in range(n):
        if i != j:
            E[0][i, i] = Fraction(1)
            Einv[0][i, i] = Fraction(1)
    cj = Fraction(c[j])
    for i in nz:
        E[dmax - degs[i]][j, i] = Fraction(c[i])
        if i == j:
            Einv[0][j, j] = Fraction(1) / cj
        else:
            Einv[dmax - degs[i]][j, i] = -Fraction(c[i]) / cj
    Epoly = PolyMat(E, rational=True)
    Einvpoly = PolyMat(Einv, rational=True)
    return mul(P, Einvpoly), mul(Epoly, F)


def _row_reduce_with_compensation(P, F):
    while True:
        step = _elementary_reduction(P, F)
        if step is None:
            return P, F
        P, F = step


# ---------------------------------------------------------------------------
# the factoriser
# ---------------------------------------------------------------------------

def smith_whf_factorize(b: PolyMat) -> WhfTriple:
    """Construct a WHF of b via the Smith form (exact rational mode).

    Steps: Smith form, split of the diagonal by root location, row reduction
    of the forward part by a unimodular matrix, row permutation by descending
    row degree (stable), extraction of the z-powers into s(z).
    """
    if b.rows != b.cols:
        raise WhfError("b(z) must be square")
    if not b.rational:
        raise WhfError(
            "smith_whf_factorize requires exact rational coefficients; "
            "rationalise float inputs first (PolyMat.to_rational)"
        )
    n = b.rows
    u, lam, v = smith_form(b)
    if any(_is_zero_entry(l) for l in lam):
        raise WhfError("det(b) is identically zero")

    lam_p, lam_f = [], []
    for l in lam:
        lp, lf = _split_by_root_location(l)
        lam_p.append(lp)
        lam_f.append(lf)

    def diag_polymat(entries):
        d = max(p_deg(e) for e in entries)
        coeffs = [fr_zeros(n, n) for _ in range(max(d, 0) + 1)]
        for i, e in enumerate(entries):
            for j, x in enumerate(e):
                coeffs[j][i, i] = x
        return PolyMat(coeffs, rational=True)

    P = mul(u, diag_polymat(lam_p))
    F = mul(diag_polymat(lam_f), v)
    P, F = _row_reduce_with_compensation(P, F)

    degs = row_degrees(F)
    perm = sorted(range(n), key=lambda i: -degs[i])  # stable: ties keep order
    # b = (P Pperm')(Pperm F): reorder F rows and P columns by perm
    F = PolyMat(F.coeffs[:, perm, :].copy(), rational=True)
    P = PolyMat(P.coeffs[:, :, perm].copy(), rational=True)

    kappas = row_degrees(F)
    dmax = max(kappas)
    fc = [fr_zeros(n, n) for _ in range(dmax + 1)]  # fc[m] = coeff of z^-m
    for i, kap in enumerate(kappas):
        for m in range(kap + 1):
            fc[m][i, :] = F.coeff(kap - m)[i, :]
    arr = np.empty((dmax + 1, n, n), dtype=object)
    for m in range(dmax + 1):
        arr[dmax - m] = fc[m]
    f = LaurentMat(arr, lo=-dmax, rational=True)

    triple = WhfTriple(p=P, index_vector=tuple(kappas), f=f, mode="raw")
    _assert_valid_whf(triple, b)
    return triple


def _assert_valid_whf(t: WhfTriple, b: PolyMat = None):
    if b is not None and compose(t) != b:
        raise WhfError("internal error: p s f does not reproduce b")
    f0 = t.f_coeff(0)
    if fr_det(f0) == 0:
        raise WhfError("internal error: f0 singular")
    proots = roots_det(t.p)
    if len(proots) and np.min(np.abs(proots)) < 1.0 + CIRCLE_TOL:
        raise WhfError("internal error: p(z) has zeros in the closed unit disc")


# ---------------------------------------------------------------------------
# generic indices from root counting (float path)
# ---------------------------------------------------------------------------

def generic_indices_from_root_count(b: PolyMat) -> PartialIndices:
    """Partial indices implied by the inside-root count of det(b).

    Valid only on the generic (open and dense) set where the index pattern
    is (kappa+1, ..., kappa+1, kappa, ..., kappa); degenerate polynomials can
    have different true indices with the same root count.
    """
    roots = roots_det(b)
    n_in = count_roots_inside(roots)
    return PartialIndices.from_inside_count(n_in, b.rows)


# ---------------------------------------------------------------------------
# canonicalisation and normalisations
# ---------------------------------------------------------------------------

def canonicalize(t: WhfTriple) -> WhfTriple:
    """The unique representative with p0 = [[I,0],[*,I]] and p1 12-block 0.

    Exact rational arithmetic; idempotent; composition preserving.
    """
    if not t.p.rational or not t.f.rational:
        raise WhfError("canonicalize requires exact rational coefficients")
    idx = t.indices  # raises on non-generic index vectors
    n, k = idx.n, idx.k

    p0 = np.array(t.p.coeff(0), dtype=object)
    if k == 0:
        if fr_det(p0) == 0:
            raise WhfError("p0 singular; not a valid WHF")
        u0 = fr_inv(p0)
        p_new = mul(t.p, PolyMat([u0], rational=True))
        f_new = mul(LaurentMat([p0], lo=0, rational=True), t.f)
        out = WhfTriple(p_new, t.index_vector, f_new, mode="canonical")
        _assert_canonical(out)
        return out

    p0_11 = p0[:k, :k]
    if fr_det(p0_11) == 0:
        # No admissible within-block permutation can repair this: the class
        # of transformations fixing s(z) cannot mix the two index blocks.
        raise WhfError(
            "leading k x k block of p0 is singular; the canonical "
            "representative does not exist for this factorisation"
        )
    p0_12 = p0[:k, k:]
    p0_21 = p0[k:, :k]
    p0_22 = p0[k:, k:]
    inv11 = fr_inv(p0_11)
    schur = p0_22 - p0_21 @ inv11 @ p0_12
    if fr_det(schur) == 0:
        raise WhfError("p0 singular; not a valid WHF")
    inv_schur = fr_inv(schur)
    u0 = fr_eye(n)
    u0[:k, :k] = inv11
    u0[:k, k:] = -inv11 @ p0_12 @ inv_schur
    u0[k:, k:] = inv_schur

    p_half = mul(t.p, PolyMat([u0], rational=True))
    u1_tilde = -np.array(p_half.coeff(1), dtype=object)[:k, k:]
    E = fr_zeros(n, n)
    E[:k, k:] = u1_tilde
    u_z = PolyMat([fr_eye(n), E], rational=True)  # I + E z
    p_new = mul(p_half, u_z)

    # u = u0 (I + E z); u^{-1} = (I - E z) u0^{-1} since E is nilpotent
    u_inv = mul(PolyMat([fr_eye(n), -E], rational=True),
                PolyMat([fr_inv(u0)], rational=True))
    s_inv_coeffs = np.empty((max(t.index_vector) + 1, n, n), dtype=object)
    s_inv_coeffs[:] = Fraction(0)
    for i, kap in enumerate(t.index_vector):
        s_inv_coeffs[max(t.index_vector) - kap, i, i] = Fraction(1)
    s_inv = LaurentMat(s_inv_coeffs, lo=-max(t.index_vector), rational=True)
    conj = mul(mul(s_inv, u_inv), t.s())
    if conj.hi > 0:
        raise WhfError("internal error: conjugated transform not nonpositive")
    f_new = mul(conj, t.f)

    out = WhfTriple(p_new, t.index_vector, f_new, mode="canonical")
    _assert_canonical(out)
    return out


def _assert_canonical(t: WhfTriple):
    idx = t.indices
    n, k, kappa = idx.n, idx.k, idx.kappa
    p0 = t.p.coeff(0)
    # p0 = [[I_k, 0], [p0_21, I_{n-k}]]: everything fixed except the 21 block
    for i in range(n):
        for j in range(n):
            if i >= k and j < k:
                continue  # free block
            want = 1 if i == j else 0
            if p0[i, j] != want:
                raise WhfError("canonical p0 pattern violated")
    if k > 0:
        p1 = t.p.coeff(1)
        if any(p1[i, j] != 0 for i in range(k) for j in range(k, n)):
            raise WhfError("canonical p1 12-block violated")
        if t.f.lo < -(kappa + 1):
            raise WhfError("canonical f degree violated")
        f_last = t.f_coeff(kappa + 1)
        if any(x != 0 for x in np.asarray(f_last)[k:, :].ravel()):
            raise WhfError("canonical f tail rows violated")
    else:
        if t.f.lo < -kappa:
            raise WhfError("canonical f degree violated")


def stacked_g0(t: WhfTriple):
    """(f_{kappa+1,[1:k]} over f_{kappa,[k+1:n]}): the constant term of s f."""
    idx = t.indices
    n, k, kappa = idx.n, idx.k, idx.kappa
    top = np.asarray(t.f_coeff(kappa + 1), dtype=object)[:k, :]
    bot = np.asarray(t.f_coeff(kappa), dtype=object)[k:, :]
    out = np.empty((n, n), dtype=object)
    out[:k, :] = top
    out[k:, :] = bot
    return out


def normalize(t: WhfTriple, mode: str):
    """Post-scale f so that f0 = I ('natural') or b(0) = I ('b0_identity').

    Returns (triple, folded) where ``folded`` is the constant matrix factored
    out on the right (to be absorbed into the shock transmission matrix).
    """
    if t.mode != "canonical":
        raise WhfError("normalize expects a canonical triple")
    if mode not in ("natural", "b0_identity"):
        raise ValueError(f"unknown normalization mode {mode!r}")
    f0 = np.array(t.f_coeff(0), dtype=object)
    if mode == "natural":
        c_inv = fr_inv(f0)
        f_new = mul(t.f, LaurentMat([c_inv], lo=0, rational=True))
        return WhfTriple(t.p, t.index_vector, f_new, mode="natural"), f0

    g0 = stacked_g0(t)
    p0 = np.array(t.p.coeff(0), dtype=object)
    b0 = p0 @ g0
    if fr_det(b0) == 0:
        raise WhfError(
            "b(0) is singular (informational delay); the b0_identity "
            "normalisation is undefined for this model"
        )
    c_right = fr_inv(g0) @ fr_inv(p0)
    f_new = mul(t.f, LaurentMat([c_right], lo=0, rational=True))
    return WhfTriple(t.p, t.index_vector, f_new, mode="b0_identity"), b0


# ---------------------------------------------------------------------------
# Blaschke mirroring (real zeros only)
# ---------------------------------------------------------------------------

def blaschke_mirror_real(b: PolyMat, alpha, tol=1e-8) -> PolyMat:
    """Mirror a simple real determinantal zero alpha of b(z) to 1/alpha.

    Returns b(z) V(z) with V(z) = Q diag(I, (1 - alpha z)/(z - alpha)) Q'
    where the last column of the orthogonal Q spans the right kernel of
    b(alpha).  The spectral envelope b(z) b'(1/z) is unchanged because V is
    all-pass.  Complex zeros are rejected: mirroring a complex-conjugated
    pair while keeping real coefficients needs a genuinely different
    construction and is out of scope here.
    """
    if isinstance(alpha, complex):
        if abs(alpha.imag) > tol:
            raise ValueError(
                "complex determinantal zeros are not supported; only simple "
                "real zeros can be mirrored by this construction"
            )
        alpha = alpha.real
    alpha = float(alpha)
    if abs(abs(alpha) - 1.0) < CIRCLE_TOL:
        raise UnitCircleRootError("cannot mirror a zero on the unit circle")
    bf = b.to_float()
    n = bf.rows
    Bv = np.real(eval_at(bf, alpha))
    svals = np.linalg.svd(Bv, compute_uv=False)
    scale = max(svals[0], 1.0)
    if svals[-1] > 1e-6 * scale:
        raise ValueError(f"alpha={alpha} is not a determinantal zero of b(z)")
    if n > 1 and svals[-2] <= 1e-6 * scale:
        raise ValueError("kernel dimension exceeds one at alpha")
    _, _, Vt = np.linalg.svd(Bv)
    Q = Vt.T  # orthogonal; last column spans the right kernel

    bq = mul(bf, PolyMat([Q], rational=False))
    coeffs = np.array(bq.coeffs, dtype=float)
    last = coeffs[:, :, n - 1]  # (deg+1, n): column poly c(z) = b(z) q_n
    d = coeffs.shape[0] - 1
    h = np.zeros((d, n))
    # synthetic division: c(z) = (z - alpha) h(z)
    carry = last[d]
    for j in range(d - 1, -1, -1):
        h[j] = carry
        carry = last[j] + alpha * carry
    if np.max(np.abs(carry)) > 1e-8 * max(1.0, np.max(np.abs(last))):
        raise ValueError("division by (z - alpha) left a nonzero remainder")
    # new column: h(z) (1 - alpha z), degree d again
    newcol = np.zeros((d + 1, n))
    newcol[:d] += h
    newcol[1:] -= alpha * h
    coeffs[:, :, n - 1] = newcol
    mirrored = mul(PolyMat(coeffs, rational=False), PolyMat([Q.T], rational=False))
    return mirrored
