"""Piecewise-linear finite element Dirichlet spectra of convex polygons.

Meshes are a fan from the centroid, refined uniformly by edge midpoints.
Conforming P1 elements give upper bounds for every eigenvalue; two
consecutive levels are Richardson-extrapolated assuming O(h^2) error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import check_positive
from .errors import AccuracyError, ResourceError, ValidationError
from .geometry import ConvexPolygon
from .spectra import Spectrum

log = logging.getLogger(__name__)

COMPLETENESS_MARGIN = 0.1
DEFAULT_MAX_NODES = 200_000
RESIDUAL_TOL = 1e-6
MIN_ANGLE_WARN_DEG = 1.0
_DENSE_LIMIT = 600


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_flags: np.ndarray
    level: int
    h: float
    min_angle_deg: float
    warnings: tuple = ()

    @property
    def n_interior(self):
        return int((~self.boundary_flags).sum())

    def csv_rows(self):
        """Rows of (kind, index, a, b, c): nodes as (x, y, boundary), triangles as vertex ids."""
        for i, ((x, y), b) in enumerate(zip(self.nodes.tolist(), self.boundary_flags.tolist())):
            yield ("node", i, x, y, int(b))
        for i, (a, b, c) in enumerate(self.triangles.tolist()):
            yield ("triangle", i, a, b, c)


@dataclass(frozen=True, eq=False)
class FemSolveReport:
    h: float
    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    extrapolated: np.ndarray = None
    error_bounds: np.ndarray = None
    levels: tuple = ()
    n_interior: int = 0
    observed_order: float = None
    notes: tuple = field(default_factory=tuple)


def _fan(p):
    v = p.vertices
    nodes = np.vstack([v, p.centroid])
    m = len(v)
    tris = np.array([[i, (i + 1) % m, m] for i in range(m)])
    return nodes, tris


def _refine(nodes, tris):
    nt = len(tris)
    e = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel() + len(nodes)
    mids = 0.5 * (nodes[uniq[:, 0]] + nodes[uniq[:, 1]])
    a, b, c = inv[:nt], inv[nt : 2 * nt], inv[2 * nt :]
    t0, t1, t2 = tris.T
    new = np.vstack(
        [
            np.column_stack([t0, a, c]),
            np.column_stack([a, t1, b]),
            np.column_stack([c, b, t2]),
            np.column_stack([a, b, c]),
        ]
    )
    return np.vstack([nodes, mids]), new


def _max_edge(nodes, tris):
    p = nodes[tris]
    return float(np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2).max())


def _min_angle_deg(nodes, tris):
    p = nodes[tris]
    worst = math.pi
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        w = p[:, (i + 2) % 3] - p[:, i]
        cosang = np.einsum("ij,ij->i", u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
        worst = min(worst, float(np.arccos(np.clip(cosang, -1, 1)).min()))
    return math.degrees(worst)


def mesh_at_level(p, level):
    """Fan triangulation of `p` refined `level` times."""
    nodes, tris = _fan(p)
    for _ in range(int(level)):
        nodes, tris = _refine(nodes, tris)
    # uniform refinement keeps the fan's angles, so quality is read off level 0
    n0, t0 = _fan(p)
    theta = _min_angle_deg(n0, t0)
    warn = () if theta >= MIN_ANGLE_WARN_DEG else (f"minimum angle {theta:.3g} deg below {MIN_ANGLE_WARN_DEG} deg",)
    normals, offsets = p._halfplanes()
    slack = offsets[None, :] - nodes @ normals.T
    bnd = np.any(np.abs(slack) <= 1e-10 * p.diameter, axis=1)
    return TriangleMesh(nodes, tris, bnd, int(level), _max_edge(nodes, tris), theta, warn)


def triangulate(p, h):
    """Fan mesh refined until the longest edge is at most `h`."""
    h = check_positive(h, "h")
    if h > p.inradius * (1 + 1e-12):
        raise ValidationError(f"mesh size {h} must not exceed the inradius {p.inradius}")
    nodes, tris = _fan(p)
    level = 0
    while _max_edge(nodes, tris) > h:
        nodes, tris = _refine(nodes, tris)
        level += 1
    return mesh_at_level(p, level)


def assemble(mesh):
    """Stiffness and mass matrices restricted to interior nodes."""
    nodes, tris = mesh.nodes, mesh.triangles
    p = nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    g = np.empty((len(tris), 3, 2))
    g[:, 1] = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g[:, 2] = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    g[:, 0] = -g[:, 1] - g[:, 2]
    ke = np.einsum("tik,tjk->tij", g, g) * area[:, None, None]
    me = (np.ones((3, 3)) + np.eye(3)) / 12.0 * area[:, None, None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = len(nodes)
    K = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    inner = np.flatnonzero(~mesh.boundary_flags)
    return K[inner][:, inner].tocsc(), M[inner][:, inner].tocsc()


def _eigs(K, M, k):
    n = K.shape[0]
    k = min(k, n)
    if n <= _DENSE_LIMIT or k >= n - 1:
        w, v = sla.eigh(K.toarray(), M.toarray(), subset_by_index=[0, k - 1])
        return w, v
    v0 = np.ones(n) / math.sqrt(n)
    w, v = spla.eigsh(K, k=k, M=M, sigma=0.0, which="LM", v0=v0)
    order = np.argsort(w)
    return w[order], v[:, order]


def _residuals(K, M, w, v):
    r = K @ v - (M @ v) * w
    return np.linalg.norm(r, axis=0) / (np.abs(w) * np.linalg.norm(M @ v, axis=0))


def solve_level(p, level, mu, mesh=None, min_count=0):
    """All discrete eigenvalues below `mu` on the level-`level` mesh.

    At least `min_count` eigenvalues are returned even if some exceed `mu`.
    """
    mesh = mesh_at_level(p, level) if mesh is None else mesh
    K, M = assemble(mesh)
    n = K.shape[0]
    if n == 0:
        raise ResourceError("mesh has no interior nodes; refine further")
    # Li-Yau plus the upper-bound property: at most mu*|Omega|/(2 pi) discrete values below mu
    ceiling = min(n, int(mu * p.area / (2 * math.pi)) + 1)
    k = min(ceiling, max(min_count, int(1.15 * mu * p.area / (4 * math.pi)) + 8))
    while True:
        w, v = _eigs(K, M, max(k, min_count, 1))
        if w[-1] >= mu or len(w) >= n or k >= ceiling:
            break
        k = min(ceiling, int(1.5 * k) + 1)
    keep = max(int(np.searchsorted(w, mu)), min_count)
    w, v = w[:keep], v[:, :keep]
    res = _residuals(K, M, w, v) if keep else np.empty(0)
    if np.any(res > RESIDUAL_TOL):
        raise AccuracyError(f"eigenpair residual {res.max():.3g} above {RESIDUAL_TOL}")
    return mesh, w, res


def _start_level(p, mu, rel_tol):
    # P1 relative error behaves like c*mu*h^2; c ~ 1/24 measured on squares and triangles
    h0 = _max_edge(*_fan(p))
    target = math.sqrt(24.0 * rel_tol / mu)
    return max(1, int(math.ceil(math.log2(max(h0 / target, 1.0)))) - 1)


def _node_count(m, level):
    # nodes(L+1) = nodes(L) + edges(L); edges(L+1) = 2*edges(L) + 3*tris(L); tris(L+1) = 4*tris(L)
    nodes, edges, tris = m + 1, 2 * m, m
    for _ in range(level):
        nodes, edges, tris = nodes + edges, 2 * edges + 3 * tris, 4 * tris
    return nodes


def node_count(p, level):
    return _node_count(len(p.vertices), level)


def extrapolate(coarse, fine):
    """Richardson step for O(h^2) errors; returns (values, error_bounds)."""
    ext = (4.0 * fine - coarse) / 3.0
    return ext, np.abs(fine - ext)


def fem_solve(p, lambda_max, level, margin=COMPLETENESS_MARGIN):
    """Levels `level` and `level + 1`, extrapolated, without tolerance checks."""
    mu = lambda_max * (1 + margin)
    mesh_f, fine, res_f = solve_level(p, level + 1, mu)
    _, coarse, _ = solve_level(p, level, mu, min_count=len(fine))
    if len(coarse) < len(fine):
        raise ResourceError(f"level {level} mesh too coarse for {len(fine)} eigenvalues below {mu:g}")
    ext, err = extrapolate(coarse[: len(fine)], fine)
    order = np.argsort(ext, kind="stable")
    return FemSolveReport(
        h=mesh_f.h,
        eigenvalues=fine,
        residual_norms=res_f,
        extrapolated=ext[order],
        error_bounds=err[order],
        levels=(level, level + 1),
        n_interior=mesh_f.n_interior,
        notes=mesh_f.warnings,
    )


def spectrum_from_report(report, lambda_max):
    return Spectrum(report.extrapolated, lambda_max, report.error_bounds, source="fem")


def fem_spectrum_at_level(p, lambda_max, level, margin=COMPLETENESS_MARGIN):
    """Extrapolated spectrum from a fixed pair of levels (smooth in the vertices)."""
    lambda_max = check_positive(lambda_max, "lambda_max")
    return spectrum_from_report(fem_solve(p, lambda_max, level, margin), lambda_max)


def fem_spectrum(p, lambda_max, rel_tol=0.01, max_nodes=DEFAULT_MAX_NODES, margin=COMPLETENESS_MARGIN, report=False):
    """Dirichlet eigenvalues of polygon `p` below `lambda_max`.

    Refines until every extrapolated eigenvalue has error bound at most
    ``rel_tol * lambda`` and at most ``margin * lambda_max`` (completeness).

    Raises
    ------
    AccuracyError
        When the tolerance is not met before the mesh exceeds `max_nodes`.
    """
    if not isinstance(p, ConvexPolygon):
        raise ValidationError("fem_spectrum needs a ConvexPolygon")
    lambda_max = check_positive(lambda_max, "lambda_max")
    rel_tol = check_positive(rel_tol, "rel_tol")
    if rel_tol > 0.05:
        raise ValidationError(f"rel_tol must be at most 0.05, got {rel_tol}")
    mu = lambda_max * (1 + margin)
    level = _start_level(p, mu, rel_tol)
    if node_count(p, level + 1) > max_nodes:
        level = 1
    history = {}
    bad_index = None
    while True:
        if node_count(p, level + 1) > max_nodes:
            raise AccuracyError(
                f"tolerance {rel_tol} unreachable within {max_nodes} nodes; "
                f"first offending eigenvalue index {bad_index}"
            )
        if level not in history:
            history[level] = solve_level(p, level, mu)[1:]
        mesh_f, fine, res_f = solve_level(p, level + 1, mu)
        history[level + 1] = (fine, res_f)
        coarse = history[level][0]
        if len(coarse) < len(fine):
            _, coarse, _ = solve_level(p, level, mu, min_count=len(fine))
            history[level] = (coarse, None)
        if len(coarse) < len(fine):
            # the coarse mesh has fewer interior nodes than wanted eigenvalues
            level += 1
            continue
        ext, err = extrapolate(coarse[: len(fine)], fine)
        bad = np.flatnonzero((err > rel_tol * ext) | (err > margin * lambda_max))
        if bad.size == 0:
            break
        bad_index = int(bad[0]) + 1
        level += 1
    order_est = observed_order(history, level - 1)
    if order_est is not None:
        log.info("fem observed order %.3f (levels %d..%d)", order_est, level - 1, level + 1)
    idx = np.argsort(ext, kind="stable")
    rep = FemSolveReport(
        h=mesh_f.h,
        eigenvalues=fine,
        residual_norms=res_f,
        extrapolated=ext[idx],
        error_bounds=err[idx],
        levels=(level, level + 1),
        n_interior=mesh_f.n_interior,
        observed_order=order_est,
        notes=mesh_f.warnings,
    )
    spec = spectrum_from_report(rep, lambda_max)
    return (spec, rep) if report else spec


def observed_order(history, level, index=0):
    """log2 of successive difference ratios of eigenvalue `index` over three levels."""
    try:
        a, b, c = (history[level + i][0][index] for i in range(3))
    except (KeyError, IndexError):
        return None
    if b == c or a == b:
        return None
    return math.log2(abs(a - b) / abs(b - c))


def convergence_order(p, levels, index=0, lambda_max=None):
    """Observed order of eigenvalue `index` from three consecutive levels."""
    if len(levels) != 3 or np.any(np.diff(levels) != 1):
        raise ValidationError("need three consecutive levels")
    vals = []
    for level in levels:
        mesh = mesh_at_level(p, level)
        K, M = assemble(mesh)
        w, _ = _eigs(K, M, index + 1)
        vals.append(w[index])
    a, b, c = vals
    return math.log2(abs(a - b) / abs(b - c)), vals
