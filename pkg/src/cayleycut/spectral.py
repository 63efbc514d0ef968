"""Normalized-Laplacian spectra: closed-form via characters, dense otherwise.

For a Cayley graph over Z_{m_1} x ... x Z_{m_k}, the character indexed by g
evaluates at s as exp(2*pi*i * sum_j g_j s_j / m_j), and the Laplacian
eigenvalue is 1 - (1/d) * sum_{s in S} Re chi_g(s).  Conjugate character
pairs (g, -g) are combined into cosine/sine vectors to produce a real
orthonormal eigenbasis; self-conjugate characters (2g = 0) are already
real with values +-1.

Eigenvector rotation freedom inside degenerate eigenspaces is not
canonicalized; downstream consumers (projection mass, embeddings,
threshold counts) are rotation-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cuts import Cut
from .errors import ValidationError
from .groups import (
    AbelianGroup,
    CayleyGraph,
    GeneratorMultiset,
    GroupElement,
    element_index,
    element_unindex,
    negate,
    validate_generators,
)

DEFAULT_EQ_TOLERANCE = 1e-8
CHARACTER_IMAG_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of the normalized Laplacian with a real eigenbasis."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]
    eq_tolerance: float = DEFAULT_EQ_TOLERANCE

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        vecs = np.asarray(self.eigenvectors, dtype=np.float64)
        if ev.ndim != 1 or vecs.shape != (len(ev), len(ev)):
            raise ValidationError("spectrum needs n eigenvalues and an n x n eigenbasis")
        ev.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    def validate(self, laplacian: np.ndarray | None = None) -> None:
        """Assert range, sorting, orthonormality, and (optionally) residuals."""
        ev, vecs, tol = self.eigenvalues, self.eigenvectors, self.eq_tolerance
        if not np.all(np.diff(ev) >= -tol):
            raise ValidationError("eigenvalues are not sorted")
        if ev[0] < -tol or ev[-1] > 2 + tol:
            raise ValidationError(f"eigenvalues outside [0, 2]: [{ev[0]}, {ev[-1]}]")
        gram = vecs.T @ vecs
        if np.abs(gram - np.eye(self.n)).max() > 10 * tol:
            raise ValidationError("eigenbasis is not orthonormal")
        if laplacian is not None:
            residual = laplacian @ vecs - vecs * ev[None, :]
            worst = np.linalg.norm(residual, axis=0).max()
            if worst > 10 * tol:
                raise ValidationError(f"eigenpair residual {worst} too large")


@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis (columns) of a subspace of R^n."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.ndim != 2:
            raise ValidationError("subspace basis must be a 2-d array")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, vector: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ vector)


def _character_phases(group: AbelianGroup, gens: GeneratorMultiset):
    """Phase matrix theta[g, s] = sum_j g_j s_j / m_j and multiplicity vector."""
    table = group.residue_table().astype(np.float64)
    moduli = np.array(group.moduli, dtype=np.float64)
    gen_res = np.array([e.residues for e, _ in gens.entries], dtype=np.float64)
    mults = np.array([m for _, m in gens.entries], dtype=np.float64)
    theta = table @ (gen_res / moduli[None, :]).T
    return theta, mults


def character_eigenvalues(
    group: AbelianGroup, gens: GeneratorMultiset
) -> list[tuple[GroupElement, float]]:
    """Eigenvalue 1 - (1/d) sum_s Re chi_g(s) for every character index g."""
    report = validate_generators(group, gens)
    if not report.ok:
        raise ValidationError("generator multiset is not symmetric")
    theta, mults = _character_phases(group, gens)
    d = gens.degree
    cos_sum = np.cos(2 * np.pi * theta) @ mults
    sin_sum = np.sin(2 * np.pi * theta) @ mults
    worst_imag = np.abs(sin_sum).max() / d
    if worst_imag > CHARACTER_IMAG_TOLERANCE:
        raise ValidationError(
            f"character sums have imaginary part {worst_imag}; generators asymmetric?"
        )
    lam = 1.0 - cos_sum / d
    return [(element_unindex(group, i), float(lam[i])) for i in range(group.order)]


def real_eigenbasis(
    group: AbelianGroup,
    gens: GeneratorMultiset,
    eq_tolerance: float = DEFAULT_EQ_TOLERANCE,
) -> Spectrum:
    """Real orthonormal eigenbasis from conjugate character pairs.

    Pairs (g, -g) with 2g != 0 become sqrt(2/n)*cos and sqrt(2/n)*sin vectors
    sharing the eigenvalue; self-conjugate characters give +-1/sqrt(n) vectors.
    Ties in the eigenvalue sort are broken by character index, so the basis is
    deterministic for a fixed group and generator multiset.
    """
    pairs = character_eigenvalues(group, gens)
    n = group.order
    table = group.residue_table().astype(np.float64)
    moduli = np.array(group.moduli, dtype=np.float64)

    lam_list: list[float] = []
    key_list: list[int] = []
    vec_list: list[np.ndarray] = []
    for i, (g, lam) in enumerate(pairs):
        j = element_index(group, negate(group, g))
        phase = 2 * np.pi * (table @ (np.array(g.residues) / moduli))
        if i == j:
            vec = np.cos(phase) / np.sqrt(n)
            lam_list.append(lam)
            key_list.append(i)
            vec_list.append(vec)
        elif i < j:
            lam_list.extend([lam, lam])
            key_list.extend([i, i])
            vec_list.append(np.cos(phase) * np.sqrt(2.0 / n))
            vec_list.append(np.sin(phase) * np.sqrt(2.0 / n))
    order = np.lexsort((key_list, np.round(np.array(lam_list), 12)))
    eigenvalues = np.array(lam_list)[order]
    eigenvectors = np.stack(vec_list, axis=1)[:, order]
    return Spectrum(eigenvalues, eigenvectors, eq_tolerance)


def dense_spectrum(
    graph: CayleyGraph, eq_tolerance: float = DEFAULT_EQ_TOLERANCE
) -> Spectrum:
    """Full symmetric eigendecomposition of the normalized Laplacian."""
    lap = graph.normalized_laplacian()
    ev, vecs = np.linalg.eigh((lap + lap.T) / 2.0)
    return Spectrum(ev, vecs, eq_tolerance)


def spectrum_of(graph: CayleyGraph, eq_tolerance: float = DEFAULT_EQ_TOLERANCE) -> Spectrum:
    """Character basis when provenance is available, dense solve otherwise."""
    if graph.is_cayley:
        return real_eigenbasis(graph.group, graph.generators, eq_tolerance)
    return dense_spectrum(graph, eq_tolerance)


def threshold_rank(spectrum: Spectrum, tau: float) -> int:
    """Number of eigenvalues <= tau (up to the equality tolerance)."""
    if not 0 <= tau <= 2:
        raise ValidationError(f"threshold must lie in [0, 2], got {tau}")
    return int(np.count_nonzero(spectrum.eigenvalues <= tau + spectrum.eq_tolerance))


def low_eigenspace(spectrum: Spectrum, tau: float) -> Subspace:
    """Span of the eigenvectors with eigenvalue <= tau."""
    k = threshold_rank(spectrum, tau)
    return Subspace(spectrum.eigenvectors[:, :k])


def projection_mass(subspace: Subspace, cut: Cut) -> float:
    """Squared-norm fraction of the centered indicator captured by the subspace."""
    if not cut.is_proper():
        raise ValidationError("projection mass needs a proper nonempty cut")
    if subspace.n != cut.n:
        raise ValidationError("subspace and cut dimensions disagree")
    centered = cut.centered_indicator()
    total = float(centered @ centered)
    coeffs = subspace.basis.T @ centered
    return float(coeffs @ coeffs) / total


def spectral_embedding(spectrum: Spectrum, k: int) -> np.ndarray:
    """Rows are vertex images ((v_1)_i, ..., (v_k)_i) in R^k."""
    if not 1 <= k <= spectrum.n:
        raise ValidationError(f"embedding dimension {k} out of range")
    return np.array(spectrum.eigenvectors[:, :k])
