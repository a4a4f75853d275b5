"""Shock density families: Gaussian, Laplace, and skewed generalised t (SGT).

All densities are standardized to zero mean and unit variance for every
admissible parameter value, so that scale lives exclusively in the sigma
parameters of the model.  First and second derivatives in (x, lambda) are
analytic: Gaussian/Laplace by closed form, SGT by forward-mode differentiation
of the closed-form log density (the Beta-function terms differentiate into
digamma/trigamma terms).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "ShockDensity",
    "DensityError",
    "gaussian",
    "laplace",
    "sgt",
    "log_density",
    "d_dx",
    "d_dlambda",
    "d_dxx",
    "d_dxlambda",
    "d_dlambdalambda",
    "moment_exists",
    "sample",
]

LOG_2PI = float(np.log(2.0 * np.pi))
SQRT2 = float(np.sqrt(2.0))

# admissibility margin used by optimisation bounds
PQ_MARGIN = 1e-3


class DensityError(ValueError):
    """Inadmissible density parameters."""


@dataclass(frozen=True)
class ShockDensity:
    """One shock component's density family with parameters lambda.

    ``lam`` is empty for gaussian/laplace and (l, p, q) for sgt with
    l in (-1, 1) controlling skewness and p, q > 0 the tails (pq > 2 so the
    variance exists).
    """

    family: str
    lam: tuple = field(default=())

    def __post_init__(self):
        if self.family not in ("gaussian", "laplace", "sgt"):
            raise DensityError(f"unknown family {self.family!r}")
        object.__setattr__(self, "lam", tuple(float(v) for v in self.lam))
        if self.family in ("gaussian", "laplace"):
            if self.lam:
                raise DensityError(f"{self.family} takes no parameters")
        else:
            if len(self.lam) != 3:
                raise DensityError("sgt takes (l, p, q)")
            check_admissible_sgt(*self.lam)

    @property
    def n_params(self):
        return 3 if self.family == "sgt" else 0

    def bounds(self):
        """Per-parameter open-interval box respecting admissibility."""
        if self.family != "sgt":
            return []
        # p >= 1 keeps d/dx defined away from 0; q >= (2 + margin) / p_min
        return [(-1.0 + PQ_MARGIN, 1.0 - PQ_MARGIN),
                (1.0, 20.0),
                (2.0 + PQ_MARGIN, 1e6)]

    def with_lam(self, lam):
        return ShockDensity(self.family, tuple(lam))

    def flip_sign(self):
        """Density of -X (skewness parameter negated for the SGT)."""
        if self.family != "sgt":
            return self
        l, p, q = self.lam
        return ShockDensity("sgt", (-l, p, q))

    def to_json_dict(self):
        return {"family": self.family, "lambda": list(self.lam)}

    @staticmethod
    def from_json_dict(d):
        return ShockDensity(d["family"], tuple(d.get("lambda", ())))


def gaussian():
    return ShockDensity("gaussian")


def laplace():
    return ShockDensity("laplace")


def sgt(l, p, q):
    return ShockDensity("sgt", (l, p, q))


def check_admissible_sgt(l, p, q):
    if not (-1.0 < l < 1.0):
        raise DensityError(f"skewness l={l} outside (-1, 1)")
    if p <= 0 or q <= 0:
        raise DensityError(f"tail parameters must be positive, got p={p}, q={q}")
    if p * q <= 2.0:
        raise DensityError(f"p*q = {p * q} <= 2: variance does not exist")


# ---------------------------------------------------------------------------
# forward-mode duals over the basis (x, l, p, q)
# ---------------------------------------------------------------------------

class _Dual:
    """Value with gradient (and optionally Hessian) over a fixed basis.

    ``v`` broadcasts over the sample axis; ``g`` has shape (m,) + v.shape and
    ``h`` (m, m) + v.shape when second order is requested.
    """

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h=None):
        self.v = v
        self.g = g
        self.h = h

    @classmethod
    def const(cls, v, m, order):
        v = np.asarray(v, dtype=float)
        g = np.zeros((m,) + v.shape)
        h = np.zeros((m, m) + v.shape) if order == 2 else None
        return cls(v, g, h)

    @classmethod
    def var(cls, v, index, m, order):
        v = np.asarray(v, dtype=float)
        g = np.zeros((m,) + v.shape)
        g[index] = 1.0
        h = np.zeros((m, m) + v.shape) if order == 2 else None
        return cls(v, g, h)

    def _outer(self, g1, g2):
        return np.einsum("i...,j...->ij...", g1, g2)

    def __add__(self, other):
        if not isinstance(other, _Dual):
            return _Dual(self.v + other, self.g,
                         None if self.h is None else self.h)
        h = None if self.h is None else self.h + other.h
        return _Dual(self.v + other.v, self.g + other.g, h)

    __radd__ = __add__

    def __neg__(self):
        return _Dual(-self.v, -self.g, None if self.h is None else -self.h)

    def __sub__(self, other):
        return self + (-other if isinstance(other, _Dual) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, _Dual):
            h = None if self.h is None else self.h * other
            return _Dual(self.v * other, self.g * other, h)
        v = self.v * other.v
        g = self.g * other.v + self.v * other.g
        h = None
        if self.h is not None:
            h = (self.h * other.v + self.v * other.h
                 + self._outer(self.g, other.g)
                 + self._outer(other.g, self.g))
        return _Dual(v, g, h)

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1.0 / self.v
        g = -self.g * inv**2
        h = None
        if self.h is not None:
            h = 2.0 * self._outer(self.g, self.g) * inv**3 - self.h * inv**2
        return _Dual(inv, g, h)

    def __truediv__(self, other):
        if not isinstance(other, _Dual):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def _unary(self, f, f1, f2):
        v = f(self.v)
        d1 = f1(self.v)
        g = d1 * self.g
        h = None
        if self.h is not None:
            h = f2(self.v) * self._outer(self.g, self.g) + d1 * self.h
        return _Dual(v, g, h)

    def log(self):
        return self._unary(np.log, lambda t: 1.0 / t, lambda t: -1.0 / t**2)

    def exp(self):
        return self._unary(np.exp, np.exp, np.exp)

    def log1p(self):
        return self._unary(np.log1p, lambda t: 1.0 / (1.0 + t),
                           lambda t: -1.0 / (1.0 + t) ** 2)

    def sqrt(self):
        return self._unary(np.sqrt, lambda t: 0.5 / np.sqrt(t),
                           lambda t: -0.25 * t**-1.5)

    def gammaln(self):
        return self._unary(special.gammaln, special.digamma,
                           lambda t: special.polygamma(1, t))

    def pow(self, expo):
        """self ** expo for dual exponent; requires positive base."""
        return (expo * self.log()).exp()


def _sgt_logpdf_dual(x, l, p, q, order):
    """log f(x; l, p, q) as a dual over (x, l, p, q).

    Standardized SGT: scale v makes the variance one and the shift m centres
    the mean at zero.  sign(x + m) is treated as locally constant.  The
    lambda-only constants (all Beta-function terms, v, m) are carried on
    length-1 duals so that the digamma machinery never runs at sample length;
    everything broadcasts against the trailing sample axis.
    """
    m_basis = 4
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = _Dual.var(x, 0, m_basis, order)
    L = _Dual.var(np.array([float(l)]), 1, m_basis, order)
    P = _Dual.var(np.array([float(p)]), 2, m_basis, order)
    Q = _Dual.var(np.array([float(q)]), 3, m_basis, order)

    invP = P.reciprocal()
    lb1 = invP.gammaln() + Q.gammaln() - (invP + Q).gammaln()
    two_invP = 2.0 * invP
    lb2 = two_invP.gammaln() + (Q - invP).gammaln() - (Q + invP).gammaln()
    three_invP = 3.0 * invP
    lb3 = three_invP.gammaln() + (Q - two_invP).gammaln() - (Q + invP).gammaln()

    r2 = (lb2 - lb1).exp()  # B(2/p, q-1/p) / B(1/p, q)
    r3 = (lb3 - lb1).exp()  # B(3/p, q-2/p) / B(1/p, q)
    L2 = L * L
    var_core = (3.0 * L2 + 1.0) * r3 - 4.0 * L2 * (r2 * r2)
    qpow = (invP * Q.log()).exp()  # q^{1/p}
    V = (qpow * var_core.sqrt()).reciprocal()  # v = q^{-1/p} / sqrt(...)
    M = 2.0 * V * L * qpow * r2

    W = X + M
    sgn = np.sign(W.v)
    skew = 1.0 + L * sgn
    absW = _Dual(np.abs(W.v), sgn * W.g,
                 None if W.h is None else sgn * W.h)
    with np.errstate(divide="ignore", invalid="ignore"):
        # |w|^p has an integrable log singularity exactly at w = 0; the value
        # of log f stays finite there but the gradient is one-sided
        core = absW.pow(P) / (Q * V.pow(P) * skew.pow(P))
        logf = (P.log() - np.log(2.0) - V.log() - invP * Q.log() - lb1
                - (invP + Q) * core.log1p())
    return logf


def _derivs(x, d: ShockDensity, order):
    """(value, grad, hess) of log f over the (x, lambda...) basis."""
    x = np.asarray(x, dtype=float)
    if d.family == "gaussian":
        v = -0.5 * x**2 - 0.5 * LOG_2PI
        g = (-x)[None, ...]
        h = np.full((1, 1) + x.shape, -1.0) if order == 2 else None
        return v, g, h
    if d.family == "laplace":
        v = -SQRT2 * np.abs(x) - 0.5 * np.log(2.0)
        g = (-SQRT2 * np.sign(x))[None, ...]
        h = np.zeros((1, 1) + x.shape) if order == 2 else None
        return v, g, h
    out = _sgt_logpdf_dual(x, *d.lam, order)
    v, g, h = out.v, out.g, out.h
    if x.ndim == 0:
        v = v.reshape(())
        g = g.reshape(g.shape[0])
        h = None if h is None else h.reshape(h.shape[:2])
    return v, g, h


def log_density(x, d: ShockDensity):
    """log f(x; lambda) of the standardized density, vectorized over x."""
    v, _, _ = _derivs(x, d, order=0)
    return v


def d_dx(x, d: ShockDensity):
    _, g, _ = _derivs(x, d, order=1)
    return g[0]


def d_dlambda(x, d: ShockDensity):
    """Gradient of log f in the density parameters; shape lam + x.shape."""
    if d.n_params == 0:
        return np.zeros((0,) + np.shape(np.asarray(x, dtype=float)))
    _, g, _ = _derivs(x, d, order=1)
    return g[1:]


def log_density_and_first_derivs(x, d: ShockDensity):
    """(log f, d/dx log f, d/dlambda log f) in one pass (hot path)."""
    v, g, _ = _derivs(x, d, order=1)
    if d.n_params == 0:
        return v, g[0], np.zeros((0,) + np.shape(v))
    return v, g[0], g[1:]


def d_dxx(x, d: ShockDensity):
    _, _, h = _derivs(x, d, order=2)
    return h[0, 0]


def d_dxlambda(x, d: ShockDensity):
    if d.n_params == 0:
        return np.zeros((0,) + np.shape(np.asarray(x, dtype=float)))
    _, _, h = _derivs(x, d, order=2)
    return h[0, 1:]


def d_dlambdalambda(x, d: ShockDensity):
    if d.n_params == 0:
        return np.zeros((0, 0) + np.shape(np.asarray(x, dtype=float)))
    _, _, h = _derivs(x, d, order=2)
    return h[1:, 1:]


def moment_exists(d: ShockDensity, order: int) -> bool:
    """Moment of the given order: always for gaussian/laplace, pq > order for sgt."""
    if order < 0:
        raise ValueError("moment order must be nonnegative")
    if d.family in ("gaussian", "laplace"):
        return True
    l, p, q = d.lam
    return p * q > order


def _sgt_scale_shift(l, p, q):
    """(v, m) standardization constants of the SGT."""
    lb1 = special.betaln(1.0 / p, q)
    r2 = np.exp(special.betaln(2.0 / p, q - 1.0 / p) - lb1)
    r3 = np.exp(special.betaln(3.0 / p, q - 2.0 / p) - lb1)
    v = q ** (-1.0 / p) / np.sqrt((3 * l * l + 1) * r3 - 4 * l * l * r2 * r2)
    m = 2.0 * v * l * q ** (1.0 / p) * r2
    return v, m


def sample(d: ShockDensity, count: int, rng: np.random.Generator):
    """i.i.d. draws of the standardized density.

    The SGT is drawn through its Beta representation: conditional on the side
    s (P(+1) = (1+l)/2), |X+m| / ((1+ls) v q^{1/p}) equals (R/(1-R))^{1/p}
    with R ~ Beta(1/p, q).
    """
    if d.family == "gaussian":
        return rng.standard_normal(count)
    if d.family == "laplace":
        return rng.laplace(0.0, 1.0 / SQRT2, size=count)
    l, p, q = d.lam
    v, m = _sgt_scale_shift(l, p, q)
    side = np.where(rng.random(count) < (1.0 + l) / 2.0, 1.0, -1.0)
    r = rng.beta(1.0 / p, q, size=count)
    mag = v * q ** (1.0 / p) * (r / (1.0 - r)) ** (1.0 / p)
    return side * (1.0 + l * side) * mag - m
