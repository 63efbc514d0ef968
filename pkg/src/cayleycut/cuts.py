"""Cut functionals, exhaustive oracles, Fiedler sweep, expander decomposition.

Conductance of Q is boundary-edge count over the degree volume of Q;
sparsity divides by |Q|(n-|Q|) and is complement-invariant.  Multiedges
count with multiplicity, self-loops never cross a cut but do count toward
volume.  Exhaustive searches break ties by the lexicographically smallest
bitset (integer mask with bit i = membership of vertex i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, TYPE_CHECKING

import numpy as np

from .errors import SizeGuardError, ValidationError
from .groups import CayleyGraph

if TYPE_CHECKING:
    from .spectral import Spectrum

BRUTE_FORCE_MAX_N = 26
DECOMPOSITION_MAX_N = 20


@dataclass(frozen=True)
class Cut:
    """Vertex subset of [n] as an integer bitset (bit i = vertex i)."""

    n: int
    mask: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("cut needs n >= 1")
        if not 0 <= self.mask < (1 << self.n):
            raise ValidationError(f"mask {self.mask} out of range for n={self.n}")

    @staticmethod
    def from_vertices(n: int, vertices: Iterable[int]) -> "Cut":
        mask = 0
        for v in vertices:
            v = int(v)
            if not 0 <= v < n:
                raise ValidationError(f"vertex {v} out of range for n={n}")
            mask |= 1 << v
        return Cut(n, mask)

    @staticmethod
    def from_indicator(indicator: np.ndarray) -> "Cut":
        ind = np.asarray(indicator)
        return Cut.from_vertices(len(ind), np.nonzero(ind)[0])

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n) if (self.mask >> v) & 1)

    def members(self) -> np.ndarray:
        return np.array([(self.mask >> v) & 1 for v in range(self.n)], dtype=bool)

    def indicator(self) -> np.ndarray:
        return self.members().astype(np.float64)

    def centered_indicator(self) -> np.ndarray:
        ind = self.indicator()
        return ind - ind.mean()

    def complement(self) -> "Cut":
        return Cut(self.n, self.mask ^ ((1 << self.n) - 1))

    def canonical(self) -> "Cut":
        """The smaller of mask and complement mask; cuts and co-cuts coincide."""
        other = self.mask ^ ((1 << self.n) - 1)
        return Cut(self.n, min(self.mask, other))

    def is_proper(self) -> bool:
        return 0 < self.size < self.n


def _check_proper(graph: CayleyGraph, cut: Cut) -> None:
    if cut.n != graph.n:
        raise ValidationError(f"cut over {cut.n} vertices, graph has {graph.n}")
    if not cut.is_proper():
        raise ValidationError("cut must be a proper nonempty subset")


def boundary_count(graph: CayleyGraph, cut: Cut) -> int:
    """Edges (with multiplicity) from Q to its complement; self-loops excluded."""
    mem = cut.members()
    return int(graph.adjacency[np.ix_(mem, ~mem)].sum())


def volume(graph: CayleyGraph, cut: Cut) -> int:
    return int(graph.degrees()[cut.members()].sum())


def conductance(graph: CayleyGraph, cut: Cut) -> float:
    """|boundary(Q)| / vol(Q) for the given side Q."""
    _check_proper(graph, cut)
    vol = volume(graph, cut)
    if vol == 0:
        raise ValidationError("cut has zero volume")
    return boundary_count(graph, cut) / vol


def min_side_conductance(graph: CayleyGraph, cut: Cut) -> float:
    """Conductance evaluated on the side with volume <= vol(G)/2."""
    _check_proper(graph, cut)
    b = boundary_count(graph, cut)
    vol = volume(graph, cut)
    total = int(graph.degrees().sum())
    return b / min(vol, total - vol)


def sparsity(graph: CayleyGraph, cut: Cut) -> float:
    """|boundary(Q)| / (|Q| (n - |Q|)); complement-invariant."""
    _check_proper(graph, cut)
    k = cut.size
    return boundary_count(graph, cut) / (k * (graph.n - k))


@dataclass(frozen=True)
class RayleighReport:
    """Deviations of the cut functionals from their quadratic-form identities."""

    conductance_delta: Optional[float]
    sparsity_delta: float
    ok: bool


def rayleigh_consistency(
    graph: CayleyGraph, cut: Cut, tol: float = 1e-9
) -> RayleighReport:
    """Check the quadratic-form identities for conductance and sparsity.

    For a regular graph: phi(Q) = 1_Q^T L 1_Q / 1_Q^T 1_Q and
    n * psi(Q) = d * (c^T L c / c^T c) with c the centered indicator.
    For irregular graphs only the degree-weighted sparsity form is checked.
    """
    _check_proper(graph, cut)
    lap = graph.normalized_laplacian()
    ind = cut.indicator()
    cen = cut.centered_indicator()
    d = graph.degree

    phi_delta = None
    if d is not None:
        phi_quad = float(ind @ lap @ ind) / float(ind @ ind)
        phi_delta = abs(phi_quad - conductance(graph, cut))

    degs = graph.degrees().astype(np.float64)
    unnorm = np.diag(degs) - graph.adjacency.astype(np.float64)
    psi_quad = float(cen @ unnorm @ cen) / float(cen @ cen)
    psi_delta = abs(psi_quad - graph.n * sparsity(graph, cut))

    ok = psi_delta <= tol and (phi_delta is None or phi_delta <= tol)
    return RayleighReport(conductance_delta=phi_delta, sparsity_delta=psi_delta, ok=ok)


def _upper_edges(graph: CayleyGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Strict upper-triangle edges (u, v, mult); self-loops never cross."""
    iu, ju = np.nonzero(np.triu(graph.adjacency, k=1))
    return iu, ju, graph.adjacency[iu, ju]


def boundaries_for_masks(graph: CayleyGraph, masks: np.ndarray) -> np.ndarray:
    """Vectorized boundary counts |dQ| for an array of bitset masks."""
    iu, ju, mult = _upper_edges(graph)
    masks = masks.astype(np.int64)
    crossed = ((masks[:, None] >> iu[None, :]) & 1) != ((masks[:, None] >> ju[None, :]) & 1)
    return crossed @ mult


def mask_sizes(masks: np.ndarray, n: int) -> np.ndarray:
    sizes = np.zeros(len(masks), dtype=np.int64)
    for v in range(n):
        sizes += (masks >> v) & 1
    return sizes


def mask_volumes(graph: CayleyGraph, masks: np.ndarray) -> np.ndarray:
    degs = graph.degrees()
    vols = np.zeros(len(masks), dtype=np.int64)
    for v in range(graph.n):
        vols += ((masks >> v) & 1) * degs[v]
    return vols


def enumerate_half_masks(n: int, chunk: int = 1 << 18) -> Iterable[np.ndarray]:
    """All masks containing vertex 0 (one per partition), in chunks."""
    total = 1 << (n - 1)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        # masks with bit 0 set: 2*k + 1 for k in [start, stop)
        yield (np.arange(start, stop, dtype=np.int64) << 1) | 1


def brute_force_sparsest(
    graph: CayleyGraph, objective: str = "conductance"
) -> tuple[Cut, float]:
    """Exact minimizer over all 2^(n-1) partitions; ties by smallest bitset.

    For conductance the reported cut is the side with volume <= vol(G)/2.
    """
    n = graph.n
    if n > BRUTE_FORCE_MAX_N:
        raise SizeGuardError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n < 2:
        raise ValidationError("need at least two vertices to cut")
    if objective not in ("conductance", "sparsity"):
        raise ValidationError(f"unknown objective {objective!r}")

    full = (1 << n) - 1
    total_vol = int(graph.degrees().sum())
    best_val = math.inf
    best_mask = None
    for masks in enumerate_half_masks(n):
        masks = masks[masks != full]
        if len(masks) == 0:
            continue
        bounds = boundaries_for_masks(graph, masks)
        if objective == "sparsity":
            sizes = mask_sizes(masks, n)
            vals = bounds / (sizes * (n - sizes))
            # canonical side: smaller mask of the partition
            comp = masks ^ full
            canon = np.minimum(masks, comp)
        else:
            vols = mask_volumes(graph, masks)
            small_vols = np.minimum(vols, total_vol - vols)
            vals = bounds / small_vols
            comp = masks ^ full
            canon = np.where(
                vols * 2 < total_vol, masks,
                np.where(vols * 2 > total_vol, comp, np.minimum(masks, comp)),
            )
        order = np.lexsort((canon, vals))
        i = order[0]
        if vals[i] < best_val or (
            vals[i] == best_val and (best_mask is None or canon[i] < best_mask)
        ):
            best_val = float(vals[i])
            best_mask = int(canon[i])
    return Cut(n, best_mask), best_val


def threshold_sweep_cut(
    graph: CayleyGraph, values: np.ndarray
) -> tuple[Cut, float]:
    """Best threshold cut of a vertex-valued vector by min-side conductance."""
    n = graph.n
    order = np.argsort(-values, kind="stable")
    degs = graph.degrees()
    total_vol = int(degs.sum())
    best_val = math.inf
    best_mask = None
    mask = 0
    members = np.zeros(n, dtype=bool)
    boundary = 0
    vol = 0
    for step in range(n - 1):
        u = int(order[step])
        row = graph.adjacency[u]
        inside = int(row[members].sum())
        boundary += int(degs[u]) - int(row[u]) - 2 * inside
        vol += int(degs[u])
        members[u] = True
        mask |= 1 << u
        val = boundary / min(vol, total_vol - vol)
        comp = mask ^ ((1 << n) - 1)
        if 2 * vol < total_vol:
            canon = mask
        elif 2 * vol > total_vol:
            canon = comp
        else:
            canon = min(mask, comp)
        if val < best_val or (val == best_val and canon < best_mask):
            best_val = val
            best_mask = canon
    return Cut(n, best_mask), best_val


def fiedler_cut(graph: CayleyGraph, spectrum: "Spectrum") -> tuple[Cut, float]:
    """Best threshold cut of the second eigenvector by conductance.

    Irregular graphs are swept along D^{-1/2} v_2 so the Cheeger guarantee
    value <= sqrt(2 lambda_2) applies throughout.
    """
    from .groups import connectivity

    if connectivity(graph) != 1:
        raise ValidationError("Fiedler cut requires a connected graph")
    v2 = spectrum.eigenvectors[:, 1]
    values = v2 / np.sqrt(graph.degrees().astype(np.float64))
    cut, val = threshold_sweep_cut(graph, values)
    lam2 = float(spectrum.eigenvalues[1])
    if val > math.sqrt(2 * lam2) + 1e-9:
        raise ValidationError(
            f"Fiedler sweep value {val} violates the Cheeger upper bound "
            f"{math.sqrt(2 * lam2)}"
        )
    return cut, val


def expander_decomposition(graph: CayleyGraph, tau: float) -> list[Cut]:
    """Greedy partition peeling the smallest remaining set of conductance <= tau.

    Every piece except possibly the last has conductance (in the whole graph)
    at most tau, and no strict subset of any piece does.  The number of pieces
    is at most one more than the count of eigenvalues <= tau.
    """
    n = graph.n
    if n > DECOMPOSITION_MAX_N:
        raise SizeGuardError(
            f"expander decomposition limited to n <= {DECOMPOSITION_MAX_N}, got {n}"
        )
    degs = graph.degrees()
    remaining = (1 << n) - 1
    pieces: list[Cut] = []
    while remaining:
        rem_vertices = [v for v in range(n) if (remaining >> v) & 1]
        found = None
        # smallest qualifying subset of the remaining vertices, boundary in G
        for size in range(1, len(rem_vertices) + 1):
            candidates = _subsets_of(rem_vertices, size)
            bounds = boundaries_for_masks(graph, candidates)
            vols = mask_volumes(graph, candidates)
            vals = bounds / vols
            ok = vals <= tau + 1e-12
            if ok.any():
                idx = np.nonzero(ok)[0]
                found = int(candidates[idx[np.argmin(candidates[idx])]])
                break
        if found is None:
            pieces.append(Cut(n, remaining))
            break
        pieces.append(Cut(n, found))
        remaining ^= found
    return pieces


def _subsets_of(vertices: list[int], size: int) -> np.ndarray:
    """Bitset masks of all size-'size' subsets of the given vertex list."""
    from itertools import combinations

    masks = []
    for combo in combinations(vertices, size):
        m = 0
        for v in combo:
            m |= 1 << v
        masks.append(m)
    return np.array(sorted(masks), dtype=np.int64)


def random_cuts(n: int, count: int, seed: int) -> list[Cut]:
    """Random proper cuts, deterministic per seed."""
    rng = np.random.default_rng(seed)
    cuts = []
    while len(cuts) < count:
        mask = 0
        for v in range(n):
            if rng.random() < 0.5:
                mask |= 1 << v
        if 0 < mask < (1 << n) - 1:
            cuts.append(Cut(n, mask))
    return cuts
