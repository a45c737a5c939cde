"""Dirichlet solver for the p-Laplace system with divergence-form data.

The continuous problem is  −div(|∇u|^{p−2}∇u) = −div F  on a rectangle with
Dirichlet boundary data, i.e. the Euler–Lagrange equation of

    J(u) = ∫ (1/p)|∇u|^p − F·∇u .

Discretely, ∇u is the first-order staggered gradient: both forward
differences of the cell samples, collocated on the (c₁−1)×(c₂−1) lattice of
forward-difference pairs.  The discrete energy sums the regularized density
(ε² + |∇u|²)^{p/2}/p − F·∇u over that lattice, with F read raw at the same
lattice indices.  Because the discrete weak form is the literal gradient of
this sum, discrete integration by parts is exact: constant matrices F are
exactly divergence-free, and ``manufacture`` inverts the system so that its
output datum makes any u a discrete weak solution to round-off.

Minimization is nonlinear conjugate-gradient descent (Polak–Ribière with
restarts) with a backtracking line search, run through a decreasing-ε
continuation for p ≠ 2; for p = 2 the energy is quadratic, the line search is
exact, and the iteration reduces to linear CG on the standard 5-point scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGrid, NonConvergence, ShapeMismatch
from .field_grid import GridField, GridGeometry

__all__ = [
    "SystemParams",
    "DirichletProblem",
    "SolveResult",
    "staggered_gradient",
    "weak_residual",
    "manufacture",
    "solve",
]


@dataclass(frozen=True)
class SystemParams:
    """Solver controls: exponent p > 1, regularization schedule, tolerances.

    ``tol`` is the relative energy-gradient tolerance of the final stage; the
    ε-continuation runs geometrically from ``eps_start`` down to ``eps_final``
    (skipped entirely for p = 2, where ε only shifts the energy by a
    constant).
    """

    p: float
    tol: float = 1e-8
    max_iters: int = 60_000
    eps_start: float = 1e-1
    eps_final: float = 1e-6

    def __post_init__(self):
        if not (self.p > 1):
            raise ValueError(f"p-Laplace exponent must satisfy p > 1, got {self.p}")
        if not (0 < self.eps_final <= self.eps_start):
            raise ValueError("need 0 < eps_final <= eps_start")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")

    def stages(self) -> list[float]:
        if self.p == 2.0:
            return [0.0]
        out = []
        eps = self.eps_start
        while eps > self.eps_final * (1 + 1e-12):
            out.append(eps)
            eps /= 10.0
        out.append(self.eps_final)
        return out


class DirichletProblem:
    """Datum F (matrix field N×n) plus Dirichlet boundary samples.

    ``boundary`` may be a GridField, an array of shape (N, c₁, c₂), a callable
    on the coordinate mesh, or a constant; only the outermost ring of cells is
    read from it.
    """

    def __init__(self, F: GridField, boundary=0.0):
        if F.kind != "matrix":
            raise ShapeMismatch(f"datum F must be a matrix field, got {F.kind!r}")
        geom = F.geometry
        if geom.dim != 2:
            raise DegenerateGrid("the solver is implemented for n = 2 grids")
        self.geometry = geom
        self.N = F.codomain
        self.F = F
        self.g = self._boundary_array(boundary, geom, self.N)

    @staticmethod
    def _boundary_array(boundary, geom: GridGeometry, N: int) -> np.ndarray:
        if isinstance(boundary, GridField):
            if boundary.geometry != geom or boundary.ncomp != N:
                raise ShapeMismatch("boundary field does not match the datum")
            return np.array(boundary.values)
        if callable(boundary):
            vals = np.asarray(boundary(*geom.center_mesh()), dtype=np.float64)
            if vals.shape == geom.cells and N == 1:
                vals = vals[np.newaxis]
            if vals.shape != (N,) + geom.cells:
                raise ShapeMismatch(
                    f"boundary callable returned shape {vals.shape}, "
                    f"expected {(N,) + geom.cells}"
                )
            return vals
        arr = np.asarray(boundary, dtype=np.float64)
        if arr.ndim == 0:
            return np.full((N,) + geom.cells, float(arr))
        if arr.shape != (N,) + geom.cells:
            raise ShapeMismatch(
                f"boundary array has shape {arr.shape}, expected {(N,) + geom.cells}"
            )
        return np.array(arr)


@dataclass
class SolveResult:
    u: GridField
    converged: bool
    iterations: int
    residual: float
    grad_norm: float
    energy_trace: list[float] = field(repr=False, default_factory=list)
    stage_log: list[dict] = field(repr=False, default_factory=list)


# ---------------------------------------------------------------------------
# discrete operators


def _as_components(u: GridField) -> np.ndarray:
    if u.kind == "matrix":
        raise ShapeMismatch("solution fields are scalar or vector, not matrix")
    return u.values


def staggered_gradient(u: GridField) -> np.ndarray:
    """Forward-difference gradient on the (c₁−1)×(c₂−1) collocation lattice.

    Returns an array of shape (N, 2, c₁−1, c₂−1); entry (c, d, i, j) is the
    forward difference of component c along axis d anchored at cell (i, j).
    """
    v = _as_components(u)
    h1, h2 = u.geometry.spacing
    g0 = (v[:, 1:, :] - v[:, :-1, :]) / h1
    g1 = (v[:, :, 1:] - v[:, :, :-1]) / h2
    return np.stack([g0[:, :, :-1], g1[:, :-1, :]], axis=1)


def _stag_values(v: np.ndarray, h1: float, h2: float) -> np.ndarray:
    g0 = (v[:, 1:, :] - v[:, :-1, :]) / h1
    g1 = (v[:, :, 1:] - v[:, :, :-1]) / h2
    return np.stack([g0[:, :, :-1], g1[:, :-1, :]], axis=1)


def _flux(g: np.ndarray, p: float) -> np.ndarray:
    """A(g) = |g|^{p−2} g with A(0) = 0, |·| the Frobenius magnitude."""
    mag = np.sqrt(np.einsum("cdij,cdij->ij", g, g))
    W = np.zeros_like(mag)
    nz = mag > 0
    W[nz] = mag[nz] ** (p - 2.0)
    return W[np.newaxis, np.newaxis] * g


def _lattice_datum(F: GridField, N: int) -> np.ndarray:
    c1, c2 = F.geometry.cells
    return F.values.reshape(N, 2, c1, c2)[:, :, : c1 - 1, : c2 - 1]


def _check_pair(u: GridField, F: GridField) -> int:
    if u.geometry != F.geometry:
        raise ShapeMismatch("u and F live on different grids")
    if F.kind != "matrix":
        raise ShapeMismatch(f"F must be a matrix field, got {F.kind!r}")
    N = u.ncomp
    if F.codomain != N:
        raise ShapeMismatch(
            f"F has codomain {F.codomain}, but u has {N} component(s)"
        )
    if u.geometry.dim != 2:
        raise DegenerateGrid("weak-form operators are implemented for n = 2")
    if min(u.geometry.cells) < 3:
        raise DegenerateGrid("need at least 3 cells per axis")
    return N


def _divergence_gap(T: np.ndarray, geom: GridGeometry) -> np.ndarray:
    """Backward divergence of a lattice flux gap, on the full cell grid.

    ``T`` has shape (N, 2, c₁−1, c₂−1); the result G has shape (N, c₁, c₂)
    with G[c,i,j] = |cell|·[(T₀[i−1,j] − T₀[i,j])/h₁ + (T₁[i,j−1] − T₁[i,j])/h₂]
    (out-of-lattice terms zero).  This is exactly ∂/∂u[c,i,j] of the lattice
    sum Σ T·∇u when T is held fixed.
    """
    N = T.shape[0]
    c1, c2 = geom.cells
    h1, h2 = geom.spacing
    P0 = np.zeros((N, c1 + 1, c2))
    P0[:, 1:c1, : c2 - 1] = T[:, 0]
    P1 = np.zeros((N, c1, c2 + 1))
    P1[:, : c1 - 1, 1:c2] = T[:, 1]
    out = (P0[:, :-1, :] - P0[:, 1:, :]) / h1 + (P1[:, :, :-1] - P1[:, :, 1:]) / h2
    return out * geom.cell_measure


def weak_residual(u: GridField, F: GridField, p: float) -> float:
    """Normalized sup of the discrete weak-form gap of the pair (u, F).

    For each interior cell and component, tests the identity
    Σ (|∇u|^{p−2}∇u − F)·∇φ = 0 with φ the cell-component indicator, and
    normalizes by the gradient mass Σ|∇φ|·|cell| of the test function.  Zero
    (to round-off) exactly when u is a discrete weak solution with datum F.
    """
    if not (p > 1):
        raise ValueError(f"need p > 1, got {p}")
    N = _check_pair(u, F)
    geom = u.geometry
    g = _stag_values(_as_components(u), *geom.spacing)
    T = _flux(g, p) - _lattice_datum(F, N)
    G = _divergence_gap(T, geom)
    h1, h2 = geom.spacing
    norm = geom.cell_measure * (2.0 / h1 + 2.0 / h2)
    interior = G[:, 1:-1, 1:-1]
    if interior.size == 0:
        return 0.0
    return float(np.abs(interior).max() / norm)


def manufacture(u: GridField, p: float) -> GridField:
    """Datum F with F = |∇u|^{p−2}∇u at the gradient lattice, making u a
    discrete weak solution exactly.

    The lattice values fill cells (0..c₁−2, 0..c₂−2); the last row and column
    (never read by the weak form) are edge-replicated.  For p = 2 this is the
    staggered gradient itself.
    """
    if not (p > 1):
        raise ValueError(f"need p > 1, got {p}")
    if u.geometry.dim != 2:
        raise DegenerateGrid("manufacture is implemented for n = 2")
    geom = u.geometry
    N = u.ncomp
    A = _flux(staggered_gradient(u), p)
    full = np.pad(A, ((0, 0), (0, 0), (0, 1), (0, 1)), mode="edge")
    c1, c2 = geom.cells
    return GridField(geom, full.reshape(N * 2, c1, c2), "matrix", codomain=N)


# ---------------------------------------------------------------------------
# energy minimization


def _energy_and_grad(v: np.ndarray, Fl: np.ndarray, p: float, eps: float,
                     geom: GridGeometry, ring: np.ndarray):
    h1, h2 = geom.spacing
    g = _stag_values(v, h1, h2)
    mag2 = np.einsum("cdij,cdij->ij", g, g)
    dens = (eps * eps + mag2) ** (p / 2.0) / p
    J = geom.cell_measure * float(
        dens.sum() - np.einsum("cdij,cdij->", Fl, g)
    )
    W = (eps * eps + mag2) ** ((p - 2.0) / 2.0)
    T = W[np.newaxis, np.newaxis] * g - Fl
    G = _divergence_gap(T, geom)
    G[:, ring] = 0.0
    return J, G


def _energy_only(v, Fl, p, eps, geom):
    g = _stag_values(v, *geom.spacing)
    mag2 = np.einsum("cdij,cdij->ij", g, g)
    dens = (eps * eps + mag2) ** (p / 2.0) / p
    return geom.cell_measure * float(dens.sum() - np.einsum("cdij,cdij->", Fl, g))


def _quadratic_step(v, d, Fl, p, eps, geom, slope):
    """Exact minimizing step for p = 2; frozen-coefficient model otherwise."""
    g = _stag_values(v, *geom.spacing)
    gd = _stag_values(d, *geom.spacing)
    if p == 2.0:
        curv = geom.cell_measure * float(np.einsum("cdij,cdij->", gd, gd))
    else:
        mag2 = np.einsum("cdij,cdij->ij", g, g)
        W = (eps * eps + mag2) ** ((p - 2.0) / 2.0)
        curv = geom.cell_measure * float(
            np.einsum("ij,cdij,cdij->", W, gd, gd)
        )
    if curv <= 0:
        return 1.0
    return -slope / curv


def _minimize_stage(v, Fl, p, eps, geom, ring, gtol, budget, trace):
    """Polak–Ribière CG with backtracking Armijo; returns iterations used."""
    J, G = _energy_and_grad(v, Fl, p, eps, geom, ring)
    trace.append(J)
    gnorm = float(np.linalg.norm(G))
    if gnorm <= gtol:
        return 0, gnorm, J
    d = -G
    iters = 0
    since_restart = 0
    while iters < budget:
        slope = float(np.sum(G * d))
        if slope >= 0:  # lost descent: restart on steepest direction
            d = -G
            slope = -gnorm * gnorm
            since_restart = 0
        t = _quadratic_step(v, d, Fl, p, eps, geom, slope)
        if not (t > 0) or not math.isfinite(t):
            t = 1.0
        if p == 2.0:
            v_new = v + t * d
            J_new = _energy_only(v_new, Fl, p, eps, geom)
        else:
            J_new = math.inf
            for _ in range(60):
                v_new = v + t * d
                J_new = _energy_only(v_new, Fl, p, eps, geom)
                if J_new <= J + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                # line search failed; gradient is numerically flat
                return iters, gnorm, J
        v[...] = v_new
        iters += 1
        since_restart += 1
        J_prev, G_prev, gnorm_prev = J, G, gnorm
        J, G = _energy_and_grad(v, Fl, p, eps, geom, ring)
        trace.append(J)
        gnorm = float(np.linalg.norm(G))
        if gnorm <= gtol:
            return iters, gnorm, J
        beta = float(np.sum(G * (G - G_prev))) / (gnorm_prev * gnorm_prev)
        beta = max(0.0, beta)
        if since_restart >= v.size or beta == 0.0:
            d = -G
            since_restart = 0
        else:
            d = -G + beta * d
    return iters, gnorm, J


def solve(problem: DirichletProblem, params: SystemParams) -> SolveResult:
    """Minimize the regularized energy over interior samples.

    The boundary ring carries the Dirichlet data exactly throughout.  The
    ε-continuation tightens geometrically; after the final stage the weak
    residual against the unregularized flux is measured and, if above
    ``params.tol`` with budget remaining, ε and the gradient tolerance are
    tightened further.  Raises :class:`NonConvergence` if the budget runs out
    above tolerance.
    """
    geom = problem.geometry
    if min(geom.cells) < 16:
        raise DegenerateGrid(
            f"solver needs at least 16 cells per axis, got {geom.cells}"
        )
    N = problem.N
    Fl = _lattice_datum(problem.F, N)
    ring = np.zeros(geom.cells, dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True

    v = np.array(problem.g)
    interior = ~ring
    for c in range(N):
        v[c][interior] = problem.g[c][ring].mean()

    stages = params.stages()
    budget = params.max_iters
    used = 0
    trace: list[float] = []
    log: list[dict] = []

    _, G0 = _energy_and_grad(v, Fl, params.p, stages[0], geom, ring)
    scale = float(np.linalg.norm(G0))
    if scale == 0.0:
        scale = 1.0

    gnorm = 0.0
    for k, eps in enumerate(stages):
        rel = params.tol if k == len(stages) - 1 else max(params.tol, 1e-5)
        it, gnorm, J = _minimize_stage(
            v, Fl, params.p, eps, geom, ring, rel * scale, budget - used, trace
        )
        used += it
        log.append({"eps": eps, "iterations": it, "grad_norm": gnorm})
        if used >= budget:
            break

    def _result(u_field):
        return weak_residual(u_field, problem.F, params.p)

    kind = "scalar" if N == 1 else "vector"
    u = GridField(geom, v.copy(), kind, codomain=N)
    res = _result(u)
    eps = stages[-1]
    rel = params.tol
    rounds = 0
    while res > params.tol and used < budget and rounds < 4:
        eps = 0.0 if params.p == 2.0 else max(eps / 10.0, 1e-12)
        rel = max(rel / 10.0, 1e-15)
        it, gnorm, J = _minimize_stage(
            v, Fl, params.p, eps, geom, ring, rel * scale, budget - used, trace
        )
        used += it
        log.append({"eps": eps, "iterations": it, "grad_norm": gnorm})
        u = GridField(geom, v.copy(), kind, codomain=N)
        res = _result(u)
        rounds += 1

    if res > params.tol:
        raise NonConvergence(
            f"residual {res:.3e} above tolerance {params.tol:.1e} "
            f"after {used} iterations",
            residual=res,
        )
    return SolveResult(
        u=u,
        converged=True,
        iterations=used,
        residual=res,
        grad_norm=gnorm,
        energy_trace=trace,
        stage_log=log,
    )
