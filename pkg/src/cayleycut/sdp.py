"""Degree-2 moment relaxation for sparsest cut with advice, plus ball rounding.

The variable is an (n+1) x (n+1) moment matrix M indexed {0} u [n] with
M_00 = 1, row 0 holding first moments, and the boolean consistency
M_0i = M_ii baked into the parameterization.  The solver minimizes the
edge objective sum_{uv in E} d(u, v), where d(i, j) = M_ii + M_jj - 2 M_ij,
subject to PSD-ness, the advice correlation constraint
sum_{i in Q} (1 - M_ii) + sum_{i notin Q} M_ii <= eps |Q|, and lazily
generated squared-Euclidean triangle inequalities over the vertex set
extended by two virtual points: 0* (the zero vector, d(i, 0*) = M_ii) and
1* (the all-ones assignment, d(i, 1*) = 1 - M_ii, d(0*, 1*) = 1).

The solve is an ADMM splitting between the PSD cone and the affine
(inequality + slack) block; the equality constraints are eliminated by the
parameterization, so each iteration is one cached Cholesky solve plus one
eigendecomposition.  Everything is deterministic for a fixed input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .cuts import Cut, sparsity
from .errors import SolverError, ValidationError
from .groups import CayleyGraph

ZERO_POINT = -1  # virtual point 0*: d(i, 0*) = M_ii
ONE_POINT = -2  # virtual point 1*: d(i, 1*) = 1 - M_ii


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets for the moment-matrix solver."""

    feasibility_tol: float = 1e-6
    max_iterations: int = 20000
    triangle_batch: int = 200
    max_triangle_rounds: int = 12
    seed: int = 0
    over_relaxation: float = 1.6
    rho: float = 1.0

    def __post_init__(self):
        if self.feasibility_tol <= 0:
            raise ValidationError("feasibility tolerance must be positive")


@dataclass(frozen=True)
class PseudomomentMatrix:
    """Degree-2 moment matrix with boolean diagonal; row/col 0 is the constant."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
            raise ValidationError("moment matrix must be square of size >= 2")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    def first_moments(self) -> np.ndarray:
        return np.array(self.matrix[0, 1:])

    def boolean_gap(self) -> float:
        """Max |M_0i - M_ii|, plus |M_00 - 1|."""
        diag = np.diag(self.matrix)[1:]
        return max(float(np.abs(self.matrix[0, 1:] - diag).max()), abs(self.matrix[0, 0] - 1.0))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.matrix + self.matrix.T) / 2)[0])

    def distances(self) -> np.ndarray:
        """Pairwise d(i, j) over the n vertices."""
        diag = np.diag(self.matrix)[1:]
        return diag[:, None] + diag[None, :] - 2 * self.matrix[1:, 1:]

    def extended_distances(self) -> np.ndarray:
        """Distances over [n] + {0*, 1*}; index n is 0*, index n+1 is 1*."""
        n = self.n
        diag = np.diag(self.matrix)[1:]
        ext = np.zeros((n + 2, n + 2))
        ext[:n, :n] = self.distances()
        ext[:n, n] = diag
        ext[n, :n] = diag
        ext[:n, n + 1] = 1.0 - diag
        ext[n + 1, :n] = 1.0 - diag
        ext[n, n + 1] = ext[n + 1, n] = 1.0
        return ext

    def correlation_gap(self, advice: Cut, eps: float) -> float:
        """Violation of the advice constraint (<= 0 when satisfied)."""
        diag = np.diag(self.matrix)[1:]
        members = advice.members()
        lhs = float((1.0 - diag[members]).sum() + diag[~members].sum())
        return lhs - eps * advice.size


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    triangle_rounds: int
    active_constraints: int
    primal_residual: float
    dual_residual: float
    objective: float
    max_triangle_violation: float


def integral_moments(cut: Cut) -> PseudomomentMatrix:
    """Rank-one moment matrix of an integral cut indicator."""
    q = np.concatenate([[1.0], cut.indicator()])
    return PseudomomentMatrix(np.outer(q, q))


def edge_objective(graph: CayleyGraph, moments: PseudomomentMatrix) -> float:
    """sum over undirected edges (with multiplicity) of d(u, v)."""
    dmat = moments.distances()
    iu, ju = np.nonzero(np.triu(graph.adjacency, k=1))
    mult = graph.adjacency[iu, ju]
    return float((dmat[iu, ju] * mult).sum())


def pseudo_spreading(moments: PseudomomentMatrix) -> float:
    """sum_{i<j} d(i, j); equals |Q|(n-|Q|) on integral cut matrices."""
    dmat = moments.distances()
    return float(np.triu(dmat, k=1).sum())


def triangle_violations(
    moments: PseudomomentMatrix, top_k: int, tol: float = 1e-9
) -> list[tuple[int, int, int, float]]:
    """Most-violated triangle constraints d(a,b) <= d(a,c) + d(c,b).

    Indices are vertices 0..n-1, or ZERO_POINT / ONE_POINT for the two
    virtual points.  An empty list means the metric holds within tol.
    """
    ext = moments.extended_distances()
    e = ext.shape[0]
    viol = ext[:, :, None] - ext[:, None, :] - ext[None, :, :]
    idx = np.arange(e)
    viol[idx, idx, :] = -np.inf
    viol[idx, :, idx] = -np.inf
    viol[:, idx, idx] = -np.inf

    flat = viol.reshape(-1)
    candidates = np.nonzero(flat > tol)[0]
    if len(candidates) == 0:
        return []
    order = candidates[np.argsort(-flat[candidates], kind="stable")]
    n = moments.n

    def label(i: int) -> int:
        return ZERO_POINT if i == n else (ONE_POINT if i == n + 1 else int(i))

    seen = set()
    out = []
    for pos in order:
        a, b, c = np.unravel_index(int(pos), (e, e, e))
        key = (min(a, b), max(a, b), c)
        if key in seen:
            continue
        seen.add(key)
        out.append((label(int(a)), label(int(b)), label(int(c)), float(flat[pos])))
        if len(out) >= top_k:
            break
    return out


class _AdviceSdp:
    """Workspace for one advice-SDP solve (parameterized moment matrix)."""

    def __init__(self, graph: CayleyGraph, advice: Cut, eps: float, cfg: SolverConfig):
        n = graph.n
        self.n = n
        self.cfg = cfg
        tri_i, tri_j = np.triu_indices(n)
        self.tri_i, self.tri_j = tri_i, tri_j
        self.nvar = len(tri_i)
        self.var_index = {}
        self.diag_idx = np.zeros(n, dtype=np.int64)
        for k in range(self.nvar):
            u, v = int(tri_i[k]), int(tri_j[k])
            self.var_index[(u, v)] = k
            if u == v:
                self.diag_idx[u] = k
        self.weights = np.where(tri_i == tri_j, 3.0, 2.0)

        self.cost = np.zeros(self.nvar)
        iu, ju = np.nonzero(np.triu(graph.adjacency, k=1))
        for u, v, m in zip(iu, ju, graph.adjacency[iu, ju]):
            self._add_distance(self.cost, int(u), int(v), float(m))
        # internal objective normalization; iterates are scale-sensitive
        self.cost_scale = max(1.0, float(np.linalg.norm(self.cost)))
        self.cost = self.cost / self.cost_scale

        # correlation constraint row
        row = np.zeros(self.nvar)
        members = advice.members()
        row[self.diag_idx[~members]] = 1.0
        row[self.diag_idx[members]] = -1.0
        self.rows = [row]
        self.rhs = [eps * advice.size - advice.size]
        self.triangle_keys: set[tuple[int, int, int]] = set()

        # warm start at the integral advice point
        x0 = np.zeros(self.nvar)
        ind = advice.indicator()
        x0 = ind[tri_i] * ind[tri_j]
        x0[self.diag_idx] = ind
        self.x = x0
        self.Z = self._moment_matrix(x0)
        self.U = np.zeros_like(self.Z)
        self.s = np.array([self.rhs[0] - row @ x0])
        self.w = np.maximum(self.s, 0.0)
        self.v = np.zeros_like(self.s)
        self.rho = cfg.rho
        self.iterations = 0
        self.rounds = 0
        self.r_prim = math.inf
        self.r_dual = math.inf

    def _add_distance(self, row: np.ndarray, u: int, v: int, coeff: float) -> None:
        """Accumulate coeff * d(u, v) into a linear functional of x."""
        if u == v:
            return
        row[self.diag_idx[u]] += coeff
        row[self.diag_idx[v]] += coeff
        row[self.var_index[(min(u, v), max(u, v))]] -= 2 * coeff

    def _add_ext_distance(self, row: np.ndarray, a: int, b: int, coeff: float) -> float:
        """Accumulate the linear part of coeff * d(a, b); return the constant part."""
        pts = {a, b}
        if a == b:
            return 0.0
        if ZERO_POINT in pts and ONE_POINT in pts:
            return coeff  # d(0*, 1*) = 1
        if ZERO_POINT in pts:
            v = a if b == ZERO_POINT else b
            row[self.diag_idx[v]] += coeff  # d(v, 0*) = M_vv
            return 0.0
        if ONE_POINT in pts:
            v = a if b == ONE_POINT else b
            row[self.diag_idx[v]] -= coeff  # d(v, 1*) = 1 - M_vv
            return coeff
        self._add_distance(row, a, b, coeff)
        return 0.0

    def add_triangle(self, a: int, b: int, c: int) -> bool:
        """Append the row for d(a,b) <= d(a,c) + d(c,b); False if known/degenerate."""
        key = (min(a, b), max(a, b), c)
        if key in self.triangle_keys or len({a, b, c}) < 3:
            return False
        row = np.zeros(self.nvar)
        const = 0.0
        const += self._add_ext_distance(row, a, b, 1.0)
        const += self._add_ext_distance(row, a, c, -1.0)
        const += self._add_ext_distance(row, c, b, -1.0)
        # row . x + const <= 0
        bound = -const
        self.triangle_keys.add(key)
        self.rows.append(row)
        self.rhs.append(bound)
        self.s = np.append(self.s, bound - row @ self.x)
        self.w = np.append(self.w, max(self.s[-1], 0.0))
        self.v = np.append(self.v, 0.0)
        return True

    def _moment_matrix(self, x: np.ndarray) -> np.ndarray:
        n = self.n
        M = np.empty((n + 1, n + 1))
        block = np.empty((n, n))
        block[self.tri_i, self.tri_j] = x
        block[self.tri_j, self.tri_i] = x
        M[1:, 1:] = block
        diag = x[self.diag_idx]
        M[0, 0] = 1.0
        M[0, 1:] = diag
        M[1:, 0] = diag
        return M

    def _target_from(self, P: np.ndarray) -> np.ndarray:
        """Weighted least-squares target p with sum w_k (x_k - p_k)^2 = |M(x)-P|_F^2."""
        p = P[1:, 1:][self.tri_i, self.tri_j].copy()
        p[self.diag_idx] = (2 * P[0, 1:] + np.diag(P)[1:]) / 3.0
        return p

    def _factorize(self):
        B = np.asarray(self.rows)
        K = B @ (B / self.weights[None, :]).T + np.eye(len(self.rows))
        return B, cho_factor(K, lower=True)

    def run(self, tol: float, budget: int) -> None:
        cfg = self.cfg
        alpha = cfg.over_relaxation
        B, K = self._factorize()
        ub = np.asarray(self.rhs)
        check_every = 25
        for it in range(budget):
            P = self.Z - self.U
            p = self._target_from(P)
            x_unc = p - self.cost / (self.rho * self.weights)
            sigma = self.w - self.v
            nu = cho_solve(K, B @ x_unc + sigma - ub)
            x = x_unc - (B.T @ nu) / self.weights
            s = sigma - nu

            Mx = self._moment_matrix(x)
            Z_old = self.Z
            w_old = self.w
            MZ = alpha * Mx + (1 - alpha) * Z_old
            evals, evecs = np.linalg.eigh(MZ + self.U)
            pos = np.maximum(evals, 0.0)
            Z = (evecs * pos[None, :]) @ evecs.T
            sr = alpha * s + (1 - alpha) * w_old
            w = np.maximum(sr + self.v, 0.0)

            self.U += MZ - Z
            self.v += sr - w
            self.x, self.Z, self.s, self.w = x, Z, s, w
            self.iterations += 1

            if (it + 1) % check_every == 0 or it == budget - 1:
                r_prim = max(np.abs(Mx - Z).max(), np.abs(s - w).max(initial=0.0))
                r_dual = self.rho * max(
                    np.abs(Z - Z_old).max(), np.abs(w - w_old).max(initial=0.0)
                )
                self.r_prim, self.r_dual = float(r_prim), float(r_dual)
                if r_prim < cfg.feasibility_tol and r_dual < cfg.feasibility_tol:
                    break
                if r_prim > 5 * r_dual and self.rho < 1e4:
                    self.rho *= 1.5
                    self.U /= 1.5
                    self.v /= 1.5
                elif r_dual > 5 * r_prim and self.rho > 1e-4:
                    self.rho /= 1.5
                    self.U *= 1.5
                    self.v *= 1.5

    def moments(self) -> PseudomomentMatrix:
        return PseudomomentMatrix(self._moment_matrix(self.x))


def solve_advice_sdp(
    graph: CayleyGraph,
    advice: Cut,
    eps: float,
    cfg: Optional[SolverConfig] = None,
) -> tuple[PseudomomentMatrix, SolveDiagnostics]:
    """Minimize the edge objective over advice-correlated pseudomoments.

    Triangle constraints are generated lazily: solve, separate over the
    extended point set, add the top violations, repeat until none exceed
    the feasibility tolerance (or the round budget runs out).
    """
    if cfg is None:
        cfg = SolverConfig()
    if not 0 <= eps <= 1:
        raise ValidationError(f"correlation budget eps={eps} outside [0, 1]")
    if advice.n != graph.n:
        raise ValidationError("advice cut size does not match the graph")
    if not advice.is_proper():
        raise ValidationError("advice must be a proper nonempty cut")

    work = _AdviceSdp(graph, advice, eps, cfg)
    for round_no in range(cfg.max_triangle_rounds):
        work.run()
        work.rounds = round_no + 1
        found = triangle_violations(
            work.moments(), cfg.triangle_batch, tol=cfg.feasibility_tol
        )
        if not found:
            break
        added = 0
        for a, b, c, _ in found:
            if work.add_triangle(a, b, c):
                added += 1
        if added == 0:
            break

    moments = work.moments()
    if work.r_prim > 100 * cfg.feasibility_tol:
        raise SolverError(
            f"solver did not reach feasibility: primal residual {work.r_prim}"
        )
    remaining = triangle_violations(moments, 1, tol=cfg.feasibility_tol)
    diag = SolveDiagnostics(
        iterations=work.iterations,
        triangle_rounds=work.rounds,
        active_constraints=len(work.rows),
        primal_residual=work.r_prim,
        dual_residual=work.r_dual,
        objective=edge_objective(graph, moments),
        max_triangle_violation=remaining[0][3] if remaining else 0.0,
    )
    return moments, diag


def ball_rounding(moments: PseudomomentMatrix, graph: CayleyGraph) -> tuple[Cut, float]:
    """Sparsest metric ball over all centers and all candidate radii.

    Enumerates every center u and every radius in {d(u, i)}, recomputes the
    sparsity of each proper ball from the graph, and returns the best cut
    (ties broken by the smaller canonical bitset).  Deterministic.
    """
    n = graph.n
    if moments.n != n:
        raise ValidationError("moment matrix size does not match the graph")
    dmat = moments.distances()
    best: Optional[tuple[float, int]] = None
    seen: set[int] = set()
    for u in range(n):
        radii = np.unique(dmat[u])
        for t in radii:
            members = dmat[u] <= t + 1e-12
            size = int(members.sum())
            if size == 0 or size == n:
                continue
            cut = Cut.from_indicator(members).canonical()
            if cut.mask in seen:
                continue
            seen.add(cut.mask)
            val = sparsity(graph, cut)
            if best is None or val < best[0] or (val == best[0] and cut.mask < best[1]):
                best = (val, cut.mask)
    if best is None:
        raise SolverError("all metric balls were empty or full; degenerate moments")
    return Cut(n, best[1]), best[0]


@dataclass(frozen=True)
class AdviceCutResult:
    """Outcome of one advice solve+round, with its lower-bound witness."""

    cut: Cut
    sparsity: float
    sdp_objective: float
    spreading: float
    diagnostics: SolveDiagnostics

    @property
    def objective_ratio(self) -> float:
        """SDP objective over pseudo-spreading; lower-bounds the reachable sparsity."""
        return self.sdp_objective / self.spreading if self.spreading > 0 else math.inf


def advice_cut(
    graph: CayleyGraph,
    advice: Cut,
    eps: float,
    cfg: Optional[SolverConfig] = None,
) -> AdviceCutResult:
    """Solve the advice SDP and round; the advice itself stays a candidate.

    The returned sparsity is recomputed from the graph and never exceeds the
    rounding value, since the better of {rounded ball, advice} is kept.
    """
    moments, diagnostics = solve_advice_sdp(graph, advice, eps, cfg)
    ball, ball_val = ball_rounding(moments, graph)
    advice_val = sparsity(graph, advice)
    if advice_val < ball_val or (advice_val == ball_val and advice.canonical().mask < ball.mask):
        chosen, value = advice.canonical(), advice_val
    else:
        chosen, value = ball, ball_val
    return AdviceCutResult(
        cut=chosen,
        sparsity=value,
        sdp_objective=edge_objective(graph, moments),
        spreading=pseudo_spreading(moments),
        diagnostics=diagnostics,
    )
