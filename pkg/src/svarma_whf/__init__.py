"""Structural VARMA modelling via Wiener-Hopf factorisation of the MA polynomial."""

from .polymat import (
    LaurentMat,
    PolyMat,
    UnitCircleRootError,
    det_poly,
    eval_at,
    has_pole_at_infinity,
    has_zero_at_infinity,
    is_row_reduced,
    is_unimodular,
    mul,
    roots_det,
    row_degrees,
)

__version__ = "0.1.0"
