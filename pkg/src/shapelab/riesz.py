"""Riesz means, eigenvalue sums and the identities linking them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ._validation import check_nonnegative, check_positive_int
from .errors import ContractError, NumericError, ValidationError

RIESZ_CSV_HEADER = ("lambda", "gamma", "value", "lower", "upper")


@dataclass(frozen=True)
class RieszQuery:
    lam: float
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "lam", check_nonnegative(self.lam, "lambda"))
        object.__setattr__(self, "gamma", check_nonnegative(self.gamma, "gamma"))


@dataclass(frozen=True)
class RieszValue:
    value: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.value <= self.upper:
            raise ValidationError(f"bracket [{self.lower}, {self.upper}] does not contain {self.value}")

    @classmethod
    def exact(cls, value):
        value = float(value)
        return cls(value, value, value)

    @property
    def width(self):
        return self.upper - self.lower

    def csv_row(self, q):
        return (q.lam, q.gamma, self.value, self.lower, self.upper)


def _riesz_sum(ev, lam, gamma):
    d = lam - ev[ev < lam]
    if gamma == 0:
        return float(d.size)
    return float(np.sum(d**gamma))


def riesz_mean(s, q, gamma=None):
    """Tr(-Delta - lam)_-^gamma = sum over lambda_k < lam of (lam - lambda_k)^gamma.

    `q` is a RieszQuery, or a bare threshold together with `gamma`.
    The bracket evaluates the sum at lambda_k +- error bound, using that
    the summand is nonincreasing in each lambda_k.
    """
    if not isinstance(q, RieszQuery):
        q = RieszQuery(q, 1.0 if gamma is None else gamma)
    if q.lam > s.complete_below:
        raise ContractError(f"lambda {q.lam} above completeness threshold {s.complete_below}")
    ev = s.eigenvalues
    value = _riesz_sum(ev, q.lam, q.gamma)
    if not np.any(s.error_bounds):
        return RieszValue.exact(value)
    lo = _riesz_sum(ev + s.error_bounds, q.lam, q.gamma)
    hi = _riesz_sum(np.maximum(ev - s.error_bounds, 0.0), q.lam, q.gamma)
    return RieszValue(value, min(lo, value), max(hi, value))


def counting_function(s, lam):
    return s.count(lam)


def eigenvalue_sum(s, m):
    """Sum of the first m eigenvalues, with brackets from the error bounds."""
    m = check_positive_int(m, "m")
    if m > len(s):
        raise ContractError(f"spectrum has {len(s)} eigenvalues, sum of {m} requested")
    if m > s.count(s.complete_below):
        raise ContractError(f"only {s.count(s.complete_below)} eigenvalues are certified complete")
    ev = s.eigenvalues[:m]
    eb = s.error_bounds[:m]
    total = float(ev.sum())
    return RieszValue(total, min(total, float((ev - eb).sum())), max(total, float((ev + eb).sum())))


def legendre_identity_check(s, m):
    """sup over lam >= 0 of (m*lam - Tr(-Delta - lam)_-^1), next to the direct sum.

    The function is concave and piecewise linear with kinks at the
    eigenvalues, so its sup is the largest value over the breakpoints.
    """
    m = check_positive_int(m, "m")
    if m + 1 > len(s):
        raise ContractError(f"legendre check needs {m + 1} eigenvalues, spectrum has {len(s)}")
    ev = s.eigenvalues
    breaks = np.concatenate([[0.0], ev[: m + 1]])
    values = [m * lam - _riesz_sum(ev, lam, 1.0) for lam in breaks]
    return float(max(values)), float(ev[:m].sum())


def aizenman_lieb_check(s, lam, gamma1, gamma2, rtol=1e-9):
    """Both sides of the Aizenman-Lieb lifting from order gamma1 to gamma2.

    rhs = B(1+g1, g2-g1)^-1 int_0^lam tau^(g2-g1-1) Tr(-Delta-(lam-tau))_-^g1 dtau,
    integrated piecewise between the kinks tau = lam - lambda_k.
    """
    lam = check_nonnegative(lam, "lambda")
    gamma1 = check_nonnegative(gamma1, "gamma1")
    gamma2 = float(gamma2)
    if not gamma2 > gamma1:
        raise ValidationError("aizenman_lieb_check needs gamma2 > gamma1")
    if lam > s.complete_below:
        raise ContractError(f"lambda {lam} above completeness threshold {s.complete_below}")
    ev = s.eigenvalues[s.eigenvalues < lam]
    lhs = _riesz_sum(ev, lam, gamma2)
    if ev.size == 0:
        return lhs, 0.0
    alpha = gamma2 - gamma1
    # integrand vanishes for tau > lam - lambda_1
    kinks = np.unique(np.concatenate([[0.0], lam - ev]))
    # rounding splits multiple eigenvalues into slivers; a sliver is not a real kink
    keep = np.concatenate([[True], np.diff(kinks) > 1e-10 * lam])
    keep[-1] = True
    kinks = kinks[keep]
    kinks = kinks[np.concatenate([np.diff(kinks) > 0, [True]])]
    total = 0.0
    err = 0.0

    def inner(tau):
        return _riesz_sum(ev, lam - tau, gamma1)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in zip(kinks[:-1], kinks[1:]):
            if b - a <= 0:
                continue
            try:
                if a == 0.0 and alpha < 1:
                    # tau^(alpha-1) singularity at the origin: algebraic weight
                    val, e = integrate.quad(inner, a, b, weight="alg", wvar=(alpha - 1, 0.0), epsabs=0, epsrel=rtol * 1e-2, limit=200)
                else:
                    val, e = integrate.quad(lambda t: t ** (alpha - 1) * inner(t), a, b, epsabs=0, epsrel=rtol * 1e-2, limit=200)
            except integrate.IntegrationWarning as exc:
                raise NumericError(f"Aizenman-Lieb quadrature failed on [{a}, {b}]: {exc}") from None
            total += val
            err += e
    rhs = total / special.beta(1 + gamma1, alpha)
    if err / special.beta(1 + gamma1, alpha) > rtol * max(abs(rhs), 1e-300):
        raise NumericError(f"Aizenman-Lieb quadrature error estimate {err:.3g} above tolerance")
    return lhs, rhs


@dataclass(frozen=True)
class SumEquivalenceReport:
    lam: float
    m: int
    argmax_riesz: int
    argmin_sum: int
    riesz_values: tuple
    sums: tuple
    ties_riesz: tuple
    ties_sum: tuple
    passed: bool


def _ties(values, best, rtol=1e-12):
    scale = max(abs(best), 1e-300)
    return tuple(int(i) for i in np.flatnonzero(np.abs(np.asarray(values) - best) <= rtol * scale))


def sum_equivalence_check(family_spectra, lam):
    """The gamma = 1 Riesz maximizer also minimizes the sum of its N(lam) eigenvalues.

    `family_spectra` is a list of (params, Spectrum). Ties are broken by
    the first index in list order on both sides; a tie set that contains
    the other side's pick also counts as a pass.
    """
    items = list(family_spectra)
    if not items:
        raise ValidationError("sum_equivalence_check needs at least one spectrum")
    q = RieszQuery(lam, 1.0)
    riesz = [riesz_mean(s, q).value for _, s in items]
    i_max = int(np.argmax(riesz))
    m = items[i_max][1].count(lam)
    if m == 0:
        # every candidate has an empty window: all Riesz means vanish
        return SumEquivalenceReport(float(lam), 0, i_max, i_max, tuple(riesz), (), (i_max,), (i_max,), True)
    sums = [float(np.sum(s.first(m))) if len(s) >= m else math.inf for _, s in items]
    i_min = int(np.argmin(sums))
    ties_r = _ties(riesz, riesz[i_max])
    ties_s = _ties(sums, sums[i_min])
    passed = i_max == i_min or i_max in ties_s or i_min in ties_r
    return SumEquivalenceReport(float(lam), int(m), i_max, i_min, tuple(riesz), tuple(sums), ties_r, ties_s, passed)
