"""Closed-form Dirichlet spectra: boxes, disks and disjoint unions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .bessel import bessel_zero_table
from .errors import ContractError, ResourceError, ValidationError
from .geometry import BoxDomain, DiskDomain

DEFAULT_ENUMERATION_CAP = 10**7
SPECTRUM_CSV_HEADER = ("index", "eigenvalue", "error_bound")
SOURCES = ("exact", "fem")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted Dirichlet eigenvalues, complete below `complete_below`.

    Multiplicities are kept by repetition. `error_bounds` holds one
    nonnegative half-width per eigenvalue (zeros for exact spectra).
    """

    eigenvalues: np.ndarray
    complete_below: float
    error_bounds: np.ndarray = None
    source: str = "exact"

    def __post_init__(self):
        ev = np.array(self.eigenvalues, dtype=float).ravel()
        if ev.size and (np.any(ev <= 0) or not np.all(np.isfinite(ev))):
            raise ValidationError("eigenvalues must be positive and finite")
        if np.any(np.diff(ev) < 0):
            raise ValidationError("eigenvalues must be sorted nondecreasingly")
        eb = np.zeros_like(ev) if self.error_bounds is None else np.array(self.error_bounds, dtype=float).ravel()
        if eb.shape != ev.shape or np.any(eb < 0):
            raise ValidationError("error_bounds must be nonnegative, one per eigenvalue")
        if self.source not in SOURCES:
            raise ValidationError(f"source must be one of {SOURCES}, got {self.source!r}")
        ev.setflags(write=False)
        eb.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "error_bounds", eb)
        object.__setattr__(self, "complete_below", check_positive(self.complete_below, "complete_below"))

    def __len__(self):
        return self.eigenvalues.size

    def __repr__(self):
        return f"Spectrum(n={len(self)}, complete_below={self.complete_below:g}, source={self.source!r})"

    def count(self, lam):
        """Counting function N(lam): eigenvalues strictly below `lam`."""
        if lam > self.complete_below:
            raise ContractError(f"threshold {lam} exceeds completeness bound {self.complete_below}")
        return int(np.searchsorted(self.eigenvalues, lam, side="left"))

    def first(self, m):
        if m > len(self):
            raise ContractError(f"spectrum has {len(self)} eigenvalues, {m} requested")
        return self.eigenvalues[:m]

    def csv_rows(self):
        for i, (lam, err) in enumerate(zip(self.eigenvalues, self.error_bounds), start=1):
            yield (i, float(lam), float(err))


def box_spectrum(b, lambda_max, cap=DEFAULT_ENUMERATION_CAP):
    """All pi^2 sum k_i^2/a_i^2 < lambda_max with k_i >= 1."""
    if not isinstance(b, BoxDomain):
        b = BoxDomain(b)
    lambda_max = check_positive(lambda_max, "lambda_max")
    w = (math.pi / np.array(b.sides)) ** 2
    # least contribution still to come after each axis
    tail = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    partial = np.zeros(1)
    for wi, rest in zip(w, tail):
        room = lambda_max - rest - partial
        kmax = np.floor(np.sqrt(np.maximum(room, 0.0) / wi)).astype(np.int64)
        # floor may land on equality; the sum must stay strictly below
        kmax -= (partial + wi * kmax**2 + rest >= lambda_max) & (kmax > 0)
        total = int(kmax.sum())
        if total > cap:
            raise ResourceError(f"box enumeration needs {total} lattice points, cap is {cap}")
        if total == 0:
            return Spectrum(np.empty(0), lambda_max)
        base = np.repeat(partial, kmax)
        starts = np.repeat(np.cumsum(kmax) - kmax, kmax)
        k = np.arange(total) - starts + 1
        partial = base + wi * k.astype(float) ** 2
    return Spectrum(np.sort(partial[partial < lambda_max]), lambda_max)


def disk_spectrum(d, lambda_max):
    """(j_{nu,s}/R)^2 < lambda_max, with multiplicity 2 for nu >= 1."""
    if not isinstance(d, DiskDomain):
        d = DiskDomain(d)
    lambda_max = check_positive(lambda_max, "lambda_max")
    R = d.radius
    zeros = bessel_zero_table(R * math.sqrt(lambda_max))
    vals = []
    for nu, z in zeros.items():
        lam = (z / R) ** 2
        lam = lam[lam < lambda_max]
        vals.append(lam if nu == 0 else np.repeat(lam, 2))
    ev = np.sort(np.concatenate(vals)) if vals else np.empty(0)
    return Spectrum(ev, lambda_max)


def union_spectrum(parts):
    """Spectrum of a disjoint union: merged eigenvalue lists."""
    parts = list(parts)
    if not parts:
        raise ValidationError("union_spectrum needs at least one part")
    if len(parts) == 1:
        return parts[0]
    ev = np.concatenate([s.eigenvalues for s in parts])
    eb = np.concatenate([s.error_bounds for s in parts])
    order = np.argsort(ev, kind="stable")
    source = "fem" if any(s.source == "fem" for s in parts) else "exact"
    return Spectrum(ev[order], min(s.complete_below for s in parts), eb[order], source)


def scale_spectrum(s, t):
    """Spectrum of t*Omega: lambda_k(t Omega) = lambda_k(Omega) / t^2."""
    t = check_positive(t, "t")
    f = 1.0 / (t * t)
    return Spectrum(s.eigenvalues * f, s.complete_below * f, s.error_bounds * f, s.source)


def exact_spectrum(domain, lambda_max):
    if isinstance(domain, BoxDomain):
        return box_spectrum(domain, lambda_max)
    if isinstance(domain, DiskDomain):
        return disk_spectrum(domain, lambda_max)
    raise ValidationError(f"no closed-form spectrum for {type(domain).__name__}")
