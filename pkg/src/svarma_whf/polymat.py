"""Matrix polynomials in z and matrix Laurent polynomials in z, z^-1.

Two scalar backends are supported: exact rationals (``fractions.Fraction``
stored in object arrays) and double precision floats.  The exact backend is
what the factorisation code runs on; the float backend is what estimation
runs on.  All values are immutable after construction and every operation
returns a new object.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = [
    "PolyMat",
    "LaurentMat",
    "eval_at",
    "mul",
    "det_poly",
    "roots_det",
    "cluster_roots",
    "count_roots_inside",
    "row_degrees",
    "is_row_reduced",
    "is_unimodular",
    "has_pole_at_infinity",
    "has_zero_at_infinity",
    "UnitCircleRootError",
]

# Root-location tolerances (float backend).  Roots closer than CIRCLE_TOL to
# the unit circle are flagged instead of silently classified.
CLUSTER_TOL = 1e-7
CIRCLE_TOL = 1e-8


class UnitCircleRootError(ValueError):
    """A determinantal root lies on (or numerically on) the unit circle."""


# ---------------------------------------------------------------------------
# scalar polynomial helpers (coefficient lists, ascending powers)
# ---------------------------------------------------------------------------

def p_trim(c):
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def p_deg(c):
    c = p_trim(c)
    if len(c) == 1 and c[0] == 0:
        return -1  # zero polynomial by convention
    return len(c) - 1


def p_add(a, b):
    m = max(len(a), len(b))
    out = []
    for i in range(m):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        out.append(x + y)
    return p_trim(out)


def p_mul(a, b):
    if p_deg(a) < 0 or p_deg(b) < 0:
        return [0 * (a[0] + b[0])]
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return p_trim(out)


def p_scale(a, c):
    return p_trim([x * c for x in a])


def p_divmod(a, b):
    """Exact polynomial division over the rationals."""
    b = p_trim(b)
    if p_deg(b) < 0:
        raise ZeroDivisionError("polynomial division by zero")
    r = [Fraction(x) for x in a]
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = Fraction(b[-1])
    r = p_trim(r)
    while p_deg(r) >= p_deg(b):
        d = p_deg(r) - p_deg(b)
        c = r[-1] / lead
        q[d] = q[d] + c
        for i, y in enumerate(b):
            r[i + d] = r[i + d] - c * y
        r = p_trim(r)
    return p_trim(q), r


def p_gcd(a, b):
    """Monic gcd over the rationals."""
    a, b = p_trim(a), p_trim(b)
    while p_deg(b) >= 0:
        _, rem = p_divmod(a, b)
        a, b = b, rem
    if p_deg(a) >= 0 and a[-1] != 1:
        a = p_scale(a, Fraction(1, 1) / Fraction(a[-1]))
    return a


def p_eval(c, z):
    acc = 0 * z
    for coef in reversed(c):
        acc = acc * z + coef
    return acc


def p_reciprocal(c):
    """z^deg * c(1/z): the coefficient list reversed."""
    return p_trim(list(reversed(p_trim(c))))


# ---------------------------------------------------------------------------
# exact constant-matrix helpers
# ---------------------------------------------------------------------------

def fr_array(data):
    """Object array of Fractions from nested sequences / array input."""
    a = np.asarray(data, dtype=object)
    out = np.empty(a.shape, dtype=object)
    flat_in, flat_out = a.ravel(), out.ravel()
    for i, v in enumerate(flat_in):
        flat_out[i] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def fr_eye(n):
    out = np.full((n, n), Fraction(0), dtype=object)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def fr_zeros(r, c):
    return np.full((r, c), Fraction(0), dtype=object)


def fr_det(A):
    """Exact determinant by Gaussian elimination over the rationals."""
    A = np.array(A, dtype=object)
    n = A.shape[0]
    det = Fraction(1)
    for c in range(n):
        piv = None
        for r in range(c, n):
            if A[r, c] != 0:
                piv = r
                break
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
            det = -det
        det *= A[c, c]
        inv = Fraction(1) / Fraction(A[c, c])
        for r in range(c + 1, n):
            if A[r, c] != 0:
                f = A[r, c] * inv
                A[r, c:] = A[r, c:] - f * A[c, c:]
    return det


def fr_inv(A):
    """Exact inverse via Gauss-Jordan; raises on singular input."""
    A = np.array(A, dtype=object)
    n = A.shape[0]
    aug = np.concatenate([A, fr_eye(n)], axis=1)
    for c in range(n):
        piv = None
        for r in range(c, n):
            if aug[r, c] != 0:
                piv = r
                break
        if piv is None:
            raise np.linalg.LinAlgError("singular rational matrix")
        if piv != c:
            aug[[c, piv]] = aug[[piv, c]]
        aug[c, :] = aug[c, :] * (Fraction(1) / Fraction(aug[c, c]))
        for r in range(n):
            if r != c and aug[r, c] != 0:
                aug[r, :] = aug[r, :] - aug[r, c] * aug[c, :]
    return aug[:, n:]


def fr_null_left(A):
    """One exact nonzero row vector c with c @ A = 0, or None if full rank."""
    At = np.array(A, dtype=object).T
    n_rows, n_cols = At.shape  # solving At x = 0
    M = np.array(At, dtype=object)
    pivots = []
    row = 0
    for col in range(n_cols):
        piv = None
        for r in range(row, n_rows):
            if M[r, col] != 0:
                piv = r
                break
        if piv is None:
            continue
        if piv != row:
            M[[row, piv]] = M[[piv, row]]
        M[row, :] = M[row, :] * (Fraction(1) / Fraction(M[row, col]))
        for r in range(n_rows):
            if r != row and M[r, col] != 0:
                M[r, :] = M[r, :] - M[r, col] * M[row, :]
        pivots.append(col)
        row += 1
    free = [c for c in range(n_cols) if c not in pivots]
    if not free:
        return None
    x = np.full(n_cols, Fraction(0), dtype=object)
    x[free[0]] = Fraction(1)
    for r, col in enumerate(pivots):
        x[col] = -M[r, free[0]]
    return x


def rationalize(x, tol=1e-12):
    """Nearest rational by continued fractions within ``tol``."""
    f = Fraction(float(x)).limit_denominator(10**12)
    if abs(float(f) - float(x)) > tol * max(1.0, abs(float(x))):
        raise ValueError(f"cannot rationalize {x!r} within {tol}")
    return f


def _to_float_array(coeffs):
    if coeffs.dtype != object:
        return np.asarray(coeffs, dtype=float)
    out = np.empty(coeffs.shape, dtype=float)
    fi, fo = coeffs.ravel(), out.ravel()
    for i, v in enumerate(fi):
        fo[i] = float(v)
    return out


# ---------------------------------------------------------------------------
# the matrix polynomial types
# ---------------------------------------------------------------------------

class LaurentMat:
    """Matrix Laurent polynomial sum_{j=lo}^{hi} coeffs[j-lo] z^j.

    ``coeffs`` is a (hi-lo+1, rows, cols) array, object dtype (Fractions) in
    rational mode, float dtype otherwise.  Extreme coefficients are nonzero
    after construction except for the canonical zero element (lo == hi == 0).
    """

    def __init__(self, coeffs, lo=0, rational=None):
        coeffs = _coerce_coeffs(coeffs, rational)
        coeffs, lo = _trim_coeffs(coeffs, lo)
        self.coeffs = coeffs
        self.lo = int(lo)
        self.coeffs.flags.writeable = False

    @property
    def hi(self):
        return self.lo + self.coeffs.shape[0] - 1

    @property
    def rows(self):
        return self.coeffs.shape[1]

    @property
    def cols(self):
        return self.coeffs.shape[2]

    @property
    def rational(self):
        return self.coeffs.dtype == object

    @property
    def is_zero(self):
        return self.coeffs.shape[0] == 1 and not any(
            x != 0 for x in self.coeffs[0].ravel()
        )

    def coeff(self, power):
        """Coefficient matrix of z**power (zero matrix outside the range)."""
        if self.lo <= power <= self.hi:
            return self.coeffs[power - self.lo]
        if self.rational:
            return fr_zeros(self.rows, self.cols)
        return np.zeros((self.rows, self.cols))

    def __eq__(self, other):
        if not isinstance(other, LaurentMat):
            return NotImplemented
        if self.is_zero and other.is_zero:
            return True
        if self.lo != other.lo or self.coeffs.shape != other.coeffs.shape:
            return False
        return all(
            a == b for a, b in zip(self.coeffs.ravel(), other.coeffs.ravel())
        )

    def __repr__(self):
        kind = "rational" if self.rational else "float"
        return (
            f"{type(self).__name__}({self.rows}x{self.cols}, powers "
            f"{self.lo}..{self.hi}, {kind})"
        )

    # -- algebra ----------------------------------------------------------

    def __neg__(self):
        return _wrap(-self.coeffs, self.lo)

    def __add__(self, other):
        if not isinstance(other, LaurentMat):
            return NotImplemented
        rational = self.rational and other.rational
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        shape = (hi - lo + 1, self.rows, self.cols)
        out = np.full(shape, Fraction(0), dtype=object) if rational else np.zeros(shape)
        a = self.coeffs if rational else _to_float_array(self.coeffs)
        b = other.coeffs if rational else _to_float_array(other.coeffs)
        out[self.lo - lo:self.hi - lo + 1] += a
        out[other.lo - lo:other.hi - lo + 1] += b
        return _wrap(out, lo)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other):
        return mul(self, other)

    def scale(self, c):
        if self.rational and isinstance(c, (int, Fraction)):
            out = self.coeffs * Fraction(c)
        else:
            out = _to_float_array(self.coeffs) * float(c)
        return _wrap(out, self.lo)

    def shift(self, k):
        """Multiply by z**k."""
        return _wrap(self.coeffs.copy(), self.lo + k)

    def transpose(self):
        return _wrap(np.swapaxes(self.coeffs, 1, 2).copy(), self.lo)

    def to_float(self):
        return _wrap(_to_float_array(self.coeffs), self.lo)

    def to_rational(self, tol=1e-12):
        out = np.empty(self.coeffs.shape, dtype=object)
        fi, fo = self.coeffs.ravel(), out.ravel()
        for i, v in enumerate(fi):
            fo[i] = v if isinstance(v, Fraction) else rationalize(v, tol)
        return _wrap(out, self.lo)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        if self.rational:
            data = [[[str(x) for x in row] for row in c] for c in self.coeffs]
        else:
            data = [[[float(x) for x in row] for row in c] for c in self.coeffs]
        return {
            "rows": self.rows,
            "cols": self.cols,
            "lo": self.lo,
            "hi": self.hi,
            "scalar_mode": "rational" if self.rational else "float",
            "coeffs": data,
        }

    @staticmethod
    def from_json_dict(d):
        rational = d["scalar_mode"] == "rational"
        shape = (d["hi"] - d["lo"] + 1, d["rows"], d["cols"])
        if rational:
            coeffs = np.empty(shape, dtype=object)
            for j, c in enumerate(d["coeffs"]):
                for r, row in enumerate(c):
                    for s, x in enumerate(row):
                        coeffs[j, r, s] = Fraction(x)
        else:
            coeffs = np.asarray(d["coeffs"], dtype=float)
        return _wrap(coeffs, d["lo"])


class PolyMat(LaurentMat):
    """Matrix polynomial b_0 + b_1 z + ... + b_d z^d (powers 0..d)."""

    def __init__(self, coeffs, rational=None):
        coeffs = _coerce_coeffs(coeffs, rational)
        coeffs, lo = _trim_coeffs(coeffs, 0)
        if lo < 0:
            raise ValueError("PolyMat cannot carry negative powers")
        self.coeffs = _pad_front(coeffs, lo)
        self.lo = 0
        self.coeffs.flags.writeable = False

    @property
    def degree(self):
        return self.hi

    @classmethod
    def identity(cls, n, rational=False):
        eye = fr_eye(n) if rational else np.eye(n)
        return cls([eye], rational=rational)

    @classmethod
    def from_scalar(cls, coeffs, rational=None):
        """1x1 polynomial from a coefficient list (ascending powers)."""
        if rational is None:
            rational = all(isinstance(c, (int, Fraction)) for c in coeffs)
        mats = [fr_array([[c]]) if rational else np.array([[float(c)]])
                for c in coeffs]
        return cls(mats, rational=rational)

    def scalar_coeffs(self):
        if self.rows != 1 or self.cols != 1:
            raise ValueError("not a scalar polynomial")
        return [self.coeffs[j][0, 0] for j in range(self.coeffs.shape[0])]


def _coerce_coeffs(coeffs, rational):
    if isinstance(coeffs, np.ndarray) and coeffs.ndim == 3:
        arr = coeffs
    else:
        first = np.asarray(coeffs[0])
        dtype = object if rational or rational is None else float
        arr = np.empty((len(coeffs),) + first.shape, dtype=dtype)
        for j, c in enumerate(coeffs):
            arr[j] = np.asarray(c)
    if rational is None:
        probe = arr.ravel()[0]
        rational = arr.dtype == object and isinstance(probe, (Fraction, int))
    if rational:
        out = np.empty(arr.shape, dtype=object)
        fi, fo = arr.ravel(), out.ravel()
        for i, v in enumerate(fi):
            fo[i] = v if isinstance(v, Fraction) else Fraction(v)
        return out
    return _to_float_array(arr).copy()


def _trim_coeffs(coeffs, lo):
    def nz(j):
        return any(x != 0 for x in coeffs[j].ravel())

    m = coeffs.shape[0]
    a, b = 0, m - 1
    while a < b and not nz(a):
        a += 1
    while b > a and not nz(b):
        b -= 1
    if a == b and not nz(a):
        return coeffs[a:a + 1].copy(), 0  # canonical zero
    return coeffs[a:b + 1].copy(), lo + a


def _pad_front(coeffs, lo):
    """Prepend ``lo`` zero coefficient matrices (used to realise lo=0)."""
    if lo == 0:
        return coeffs
    pad_shape = (lo,) + coeffs.shape[1:]
    if coeffs.dtype == object:
        pad = np.full(pad_shape, Fraction(0), dtype=object)
    else:
        pad = np.zeros(pad_shape)
    return np.concatenate([pad, coeffs], axis=0)


def _wrap(coeffs, lo):
    """PolyMat when no negative powers survive trimming, else LaurentMat."""
    rational = coeffs.dtype == object
    trimmed, lo2 = _trim_coeffs(coeffs, lo)
    if lo2 >= 0:
        return PolyMat(_pad_front(trimmed, lo2), rational=rational)
    return LaurentMat(trimmed, lo2, rational=rational)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def eval_at(M, z0):
    """Evaluate sum coeffs[j] z0^j; exact if M and z0 are both rational."""
    if M.lo < 0 and z0 == 0:
        raise ZeroDivisionError("evaluation at 0 with negative powers present")
    if M.rational and isinstance(z0, (int, Fraction)):
        z0 = Fraction(z0)
        acc = fr_zeros(M.rows, M.cols)
        for j in range(M.coeffs.shape[0] - 1, -1, -1):
            acc = acc * z0 + M.coeffs[j]
        if M.lo != 0:
            acc = acc * z0 ** M.lo
        return acc
    z0 = complex(z0)
    cf = _to_float_array(M.coeffs)
    acc = np.zeros((M.rows, M.cols), dtype=complex)
    for j in range(cf.shape[0] - 1, -1, -1):
        acc = acc * z0 + cf[j]
    if M.lo != 0:
        acc = acc * z0 ** M.lo
    return acc


def mul(A, B):
    """Coefficient-wise convolution A(z) B(z); PolyMat if no negative powers."""
    if A.cols != B.rows:
        raise ValueError(f"dimension mismatch: {A.cols} vs {B.rows}")
    rational = A.rational and B.rational
    lo = A.lo + B.lo
    hi = A.hi + B.hi
    shape = (hi - lo + 1, A.rows, B.cols)
    if rational:
        out = np.full(shape, Fraction(0), dtype=object)
        ac, bc = A.coeffs, B.coeffs
    else:
        out = np.zeros(shape)
        ac, bc = _to_float_array(A.coeffs), _to_float_array(B.coeffs)
    for i in range(ac.shape[0]):
        for j in range(bc.shape[0]):
            out[i + j] = out[i + j] + ac[i] @ bc[j]
    return _wrap(out, lo)


def _det_rational(M):
    """Scalar determinant polynomial by cofactor expansion (exact)."""
    n = M.rows
    entries = [
        [p_trim([M.coeffs[j][r, c] for j in range(M.coeffs.shape[0])])
         for c in range(n)]
        for r in range(n)
    ]

    def det(rows, cols):
        if len(rows) == 1:
            return entries[rows[0]][cols[0]]
        acc = [Fraction(0)]
        r0 = rows[0]
        for idx, c in enumerate(cols):
            e = entries[r0][c]
            if p_deg(e) < 0:
                continue
            minor = det(rows[1:], cols[:idx] + cols[idx + 1:])
            term = p_mul(e, minor)
            acc = p_add(acc, term if idx % 2 == 0 else p_scale(term, -1))
        return acc

    return det(tuple(range(n)), tuple(range(n)))


def _det_float(M):
    """Determinant by evaluation at roots of unity plus inverse transform."""
    n = M.rows
    d = max(M.degree, 0) * n
    npts = d + 1
    zs = np.exp(-2j * np.pi * np.arange(npts) / npts)
    vals = np.array([np.linalg.det(eval_at(M, z)) for z in zs])
    coefs = np.fft.ifft(vals)
    return np.real(coefs)


def det_poly(M):
    """Determinant of a square PolyMat as a scalar PolyMat."""
    if M.rows != M.cols:
        raise ValueError("determinant of a non-square matrix")
    if M.lo != 0:
        raise ValueError("det_poly expects a PolyMat (nonnegative powers)")
    if M.rational:
        c = _det_rational(M)
        return PolyMat.from_scalar(c if c else [Fraction(0)], rational=True)
    c = _det_float(M)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(c))))
    c = np.where(np.abs(c) < tol, 0.0, c)
    return PolyMat.from_scalar(list(c), rational=False)


def roots_det(M):
    """Roots (with multiplicity) of det(M) via the companion linearisation.

    In rational mode the determinant is computed exactly first; the companion
    eigenvalues are then taken on the float image of the exact coefficients.
    """
    d = det_poly(M)
    coeffs = np.asarray([float(x) for x in d.scalar_coeffs()], dtype=float)
    if not np.any(coeffs != 0.0):
        raise ValueError("determinant is identically zero")
    roots = np.roots(coeffs[::-1])  # np.roots wants descending powers
    return np.sort_complex(roots)


def cluster_roots(roots, tol=CLUSTER_TOL):
    """Greedy clustering of near-identical roots into (root, multiplicity)."""
    out = []
    used = np.zeros(len(roots), dtype=bool)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        members = [r]
        used[i] = True
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - r) <= tol:
                members.append(roots[j])
                used[j] = True
        out.append((complex(np.mean(members)), len(members)))
    return out


def count_roots_inside(roots, circle_tol=CIRCLE_TOL):
    """Number of roots strictly inside the unit circle.

    Raises UnitCircleRootError when any root is within ``circle_tol`` of the
    circle, because inside/outside is then not decidable at this precision.
    """
    roots = np.asarray(roots)
    mods = np.abs(roots)
    if np.any(np.abs(mods - 1.0) < circle_tol):
        raise UnitCircleRootError(
            "determinantal root within tolerance of the unit circle"
        )
    return int(np.sum(mods < 1.0))


def row_degrees(M):
    """Per-row maximal power with a nonzero entry (-1 for a zero row)."""
    degs = []
    for r in range(M.rows):
        deg = None
        for j in range(M.coeffs.shape[0] - 1, -1, -1):
            if any(x != 0 for x in M.coeffs[j][r, :]):
                deg = j + M.lo
                break
        degs.append(-1 if deg is None else deg)
    return degs


def leading_row_matrix(M):
    degs = row_degrees(M)
    if M.rational:
        L = fr_zeros(M.rows, M.cols)
    else:
        L = np.zeros((M.rows, M.cols))
    for r, d in enumerate(degs):
        if d >= 0:
            L[r, :] = M.coeffs[d - M.lo][r, :]
    return L


def is_row_reduced(M):
    """True iff the leading-row-coefficient matrix is nonsingular."""
    if M.rows != M.cols:
        raise ValueError("row-reducedness is defined for square matrices")
    L = leading_row_matrix(M)
    if M.rational:
        return fr_det(L) != 0
    s = np.linalg.svd(np.asarray(L, dtype=float), compute_uv=False)
    return s[-1] > 1e-12 * max(1.0, s[0])


def is_unimodular(M):
    """True iff det(M) is a nonzero constant."""
    d = det_poly(M)
    c = d.scalar_coeffs()
    if M.rational:
        return p_deg(c) == 0
    tol = 1e-10 * max(1.0, max(abs(float(x)) for x in c))
    return abs(float(c[0])) > tol and all(abs(float(x)) <= tol for x in c[1:])


def has_pole_at_infinity(M):
    """True iff some coefficient of a strictly positive power is nonzero."""
    for j in range(max(M.lo, 1), M.hi + 1):
        if any(x != 0 for x in M.coeffs[j - M.lo].ravel()):
            return True
    return False


def has_zero_at_infinity(M):
    """No pole at infinity and a singular limit matrix as |z| -> infinity."""
    if M.rows != M.cols:
        raise ValueError("zero at infinity is defined for square matrices")
    if has_pole_at_infinity(M):
        return False
    limit = M.coeff(0)
    if M.rational:
        return fr_det(limit) == 0
    s = np.linalg.svd(np.asarray(limit, dtype=float), compute_uv=False)
    return s[-1] <= 1e-12 * max(1.0, s[0])
