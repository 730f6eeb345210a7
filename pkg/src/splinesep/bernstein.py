"""Bernstein-basis polynomial algebra on tau in [0, 1].

Supports evaluation (de Casteljau), monomial -> Bernstein conversion,
products, degree elevation and coefficient-bound queries. The minimum
coefficient lower-bounds the polynomial on [0, 1] (convex hull property),
which is what certifies continuous constraint satisfaction downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Exact integer binomials up to degree 12; avoids floating-point drift in the
# basis-conversion weights.
MAX_DEGREE = 12
_BINOM = [[math.comb(n, k) for k in range(MAX_DEGREE + 1)] for n in range(MAX_DEGREE + 1)]


def binom(n: int, k: int) -> int:
    if n <= MAX_DEGREE:
        return _BINOM[n][k]
    return math.comb(n, k)


def _coerce_coeffs(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.ndim == 1:
        pass
    elif c.ndim != 2:
        raise ValueError(f"coefficients must be 1-D or 2-D, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    return c


@dataclass(frozen=True)
class BernsteinPoly:
    """Polynomial sum_i coeffs[i] * B_i^s(tau); rows are the control points."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _coerce_coeffs(self.coeffs))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return 1 if self.coeffs.ndim == 1 else self.coeffs.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.coeffs.ndim == 1


@dataclass(frozen=True)
class MonomialPoly:
    """Polynomial sum_j coeffs[j] * tau**j."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _coerce_coeffs(self.coeffs))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def eval(self, tau: float):
        powers = np.asarray(tau, dtype=float) ** np.arange(self.coeffs.shape[0])
        return powers @ self.coeffs if self.coeffs.ndim == 2 else float(powers @ self.coeffs)


def evaluate(p: BernsteinPoly, tau: float):
    """Evaluate by de Casteljau recursion (stable near the endpoints)."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    b = p.coeffs.astype(float, copy=True)
    for r in range(p.degree):
        b = (1.0 - tau) * b[:-1] + tau * b[1:]
    out = b[0]
    return float(out) if p.is_scalar else out


def monomial_to_bernstein_matrix(s: int) -> np.ndarray:
    """Lower-triangular map beta = M @ b with M[i, j] = C(i, j) / C(s, j)."""
    m = np.zeros((s + 1, s + 1))
    for i in range(s + 1):
        for j in range(i + 1):
            m[i, j] = binom(i, j) / binom(s, j)
    return m


def monomial_to_bernstein(p: MonomialPoly) -> BernsteinPoly:
    """Convert monomial coefficients to Bernstein coefficients of equal degree."""
    m = monomial_to_bernstein_matrix(p.degree)
    return BernsteinPoly(m @ p.coeffs)


def product_matrix(m: int, s: int) -> np.ndarray:
    """Tensor P[k, i, j] with c_k = sum_{i+j=k} P[k, i, j] a_i b_j."""
    t = np.zeros((m + s + 1, m + 1, s + 1))
    for i in range(m + 1):
        for j in range(s + 1):
            t[i + j, i, j] = binom(m, i) * binom(s, j) / binom(m + s, i + j)
    return t


def product(a: BernsteinPoly, b: BernsteinPoly, mode: str = "scale") -> BernsteinPoly:
    """Product of two Bernstein polynomials, degree deg(a) + deg(b).

    mode="scale": a scalar, b scalar or vector; scales b componentwise.
    mode="dot": a and b vector-valued with equal dim; returns the scalar
    polynomial a(tau) . b(tau).
    """
    t = product_matrix(a.degree, b.degree)
    if mode == "scale":
        if not a.is_scalar:
            raise ValueError("scale mode requires scalar-valued a")
        if b.is_scalar:
            c = np.einsum("kij,i,j->k", t, a.coeffs, b.coeffs)
        else:
            c = np.einsum("kij,i,jd->kd", t, a.coeffs, b.coeffs)
        return BernsteinPoly(c)
    if mode == "dot":
        if a.is_scalar or b.is_scalar or a.dim != b.dim:
            raise ValueError("dot mode requires vector-valued operands of equal dim")
        c = np.einsum("kij,id,jd->k", t, a.coeffs, b.coeffs)
        return BernsteinPoly(c)
    raise ValueError(f"unknown mode {mode!r}")


def coeff_min(p: BernsteinPoly) -> float:
    """Minimum coefficient; lower bound of the polynomial on [0, 1]."""
    if not p.is_scalar:
        raise ValueError("coeff_min requires a scalar-valued polynomial")
    return float(np.min(p.coeffs))


def coeff_max(p: BernsteinPoly) -> float:
    if not p.is_scalar:
        raise ValueError("coeff_max requires a scalar-valued polynomial")
    return float(np.max(p.coeffs))


def elevation_matrix(s: int, target: int) -> np.ndarray:
    """Map from degree-s to degree-target coefficients (same polynomial)."""
    if target < s:
        raise ValueError(f"target degree {target} < current degree {s}")
    e = np.eye(s + 1)
    m = np.zeros((target + 1, s + 1))
    r = target - s
    for i in range(target + 1):
        for j in range(max(0, i - r), min(s, i) + 1):
            m[i, j] = binom(s, j) * binom(r, i - j) / binom(target, i)
    return m if r > 0 else e


def elevate(p: BernsteinPoly, target_degree: int) -> BernsteinPoly:
    """Degree elevation; identical polynomial in a higher-degree basis."""
    m = elevation_matrix(p.degree, target_degree)
    return BernsteinPoly(m @ p.coeffs)
