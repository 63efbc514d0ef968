"""Finite Abelian groups, symmetric generator multisets, and Cayley graphs.

Groups are products of cyclic groups Z_{m_1} x ... x Z_{m_k}.  Elements are
residue tuples, indexed in mixed radix with the *last* modulus varying
fastest, so (0,1) in Z_4 x Z_2 has index 1 and (1,0) has index 2.

Graphs are stored densely as symmetric nonnegative integer multiplicity
matrices.  A generator equal to the identity contributes one self-loop per
multiplicity, counting 1 toward the degree and 1 toward the diagonal entry.
Generic (non-Cayley) graphs use the same container with provenance absent.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class AbelianGroup:
    """Product of cyclic groups, given by its moduli (each >= 2)."""

    moduli: tuple[int, ...]

    def __init__(self, moduli: Sequence[int]):
        moduli = tuple(int(m) for m in moduli)
        if len(moduli) == 0:
            raise ValidationError("group needs at least one modulus")
        if any(m < 2 for m in moduli):
            raise ValidationError(f"moduli must all be >= 2, got {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def order(self) -> int:
        n = 1
        for m in self.moduli:
            n *= m
        return n

    @property
    def rank(self) -> int:
        return len(self.moduli)

    def element(self, residues: Sequence[int]) -> "GroupElement":
        return GroupElement.of(self, residues)

    def identity(self) -> "GroupElement":
        return GroupElement(tuple(0 for _ in self.moduli))

    def residue_table(self) -> np.ndarray:
        """(order, rank) int array: row i holds the residues of element i."""
        idx = np.arange(self.order)
        cols = np.unravel_index(idx, self.moduli)
        return np.stack(cols, axis=1).astype(np.int64)

    def __str__(self) -> str:
        return "x".join(f"Z{m}" for m in self.moduli)


@dataclass(frozen=True)
class GroupElement:
    """Residue tuple, reduced componentwise."""

    residues: tuple[int, ...]

    @staticmethod
    def of(group: AbelianGroup, residues: Sequence[int]) -> "GroupElement":
        residues = tuple(int(r) for r in residues)
        if len(residues) != group.rank:
            raise ValidationError(
                f"element has {len(residues)} residues, group has rank {group.rank}"
            )
        for r, m in zip(residues, group.moduli):
            if not 0 <= r < m:
                raise ValidationError(f"residue {r} out of range for modulus {m}")
        return GroupElement(residues)


def element_index(group: AbelianGroup, x: Union[GroupElement, Sequence[int]]) -> int:
    """Mixed-radix index of x, last modulus fastest."""
    res = x.residues if isinstance(x, GroupElement) else tuple(int(r) for r in x)
    GroupElement.of(group, res)
    return int(np.ravel_multi_index(res, group.moduli))


def element_unindex(group: AbelianGroup, i: int) -> GroupElement:
    """Inverse of element_index."""
    if not 0 <= i < group.order:
        raise ValidationError(f"index {i} out of range for group of order {group.order}")
    res = np.unravel_index(int(i), group.moduli)
    return GroupElement(tuple(int(r) for r in res))


def negate(group: AbelianGroup, x: Union[GroupElement, Sequence[int]]) -> GroupElement:
    """Componentwise inverse (m_j - r_j) mod m_j."""
    res = x.residues if isinstance(x, GroupElement) else tuple(int(r) for r in x)
    GroupElement.of(group, res)
    return GroupElement(tuple((m - r) % m for r, m in zip(res, group.moduli)))


def add(
    group: AbelianGroup,
    x: Union[GroupElement, Sequence[int]],
    y: Union[GroupElement, Sequence[int]],
) -> GroupElement:
    rx = x.residues if isinstance(x, GroupElement) else tuple(int(r) for r in x)
    ry = y.residues if isinstance(y, GroupElement) else tuple(int(r) for r in y)
    return GroupElement(tuple((a + b) % m for a, b, m in zip(rx, ry, group.moduli)))


@dataclass(frozen=True)
class GeneratorMultiset:
    """Symmetric multiset of generators with positive multiplicities."""

    entries: tuple[tuple[GroupElement, int], ...]

    @staticmethod
    def of(
        group: AbelianGroup,
        entries: Iterable[tuple[Union[GroupElement, Sequence[int]], int]],
    ) -> "GeneratorMultiset":
        merged: dict[tuple[int, ...], int] = {}
        for elem, mult in entries:
            res = elem.residues if isinstance(elem, GroupElement) else tuple(int(r) for r in elem)
            GroupElement.of(group, res)
            mult = int(mult)
            if mult <= 0:
                raise ValidationError(f"multiplicity must be positive, got {mult}")
            merged[res] = merged.get(res, 0) + mult
        if not merged:
            raise ValidationError("generator multiset must be nonempty")
        ordered = sorted(merged.items(), key=lambda kv: element_index(group, kv[0]))
        return GeneratorMultiset(tuple((GroupElement(res), m) for res, m in ordered))

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.entries)

    def multiplicity(self, x: GroupElement) -> int:
        for elem, m in self.entries:
            if elem == x:
                return m
        return 0


@dataclass(frozen=True)
class GeneratorReport:
    """Result of the symmetry check on a generator multiset."""

    ok: bool
    offenders: tuple[GroupElement, ...]


def validate_generators(group: AbelianGroup, gens: GeneratorMultiset) -> GeneratorReport:
    """Check multiplicity(x) == multiplicity(-x) for every generator."""
    offenders = []
    for elem, mult in gens.entries:
        if gens.multiplicity(negate(group, elem)) != mult:
            offenders.append(elem)
    return GeneratorReport(ok=not offenders, offenders=tuple(offenders))


@dataclass(frozen=True)
class CayleyGraph:
    """Regular multigraph container, with group provenance when available.

    The adjacency matrix is symmetric with nonnegative integer entries;
    entry (u, v) is the edge multiplicity, and diagonal entries count
    self-loops (1 toward the degree each).  Generic graphs built from edge
    lists use the same container and need not be regular.
    """

    n: int
    adjacency: np.ndarray
    group: Optional[AbelianGroup] = None
    generators: Optional[GeneratorMultiset] = None

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.int64)
        if adj.shape != (self.n, self.n):
            raise ValidationError(f"adjacency shape {adj.shape} does not match n={self.n}")
        if not np.array_equal(adj, adj.T):
            raise ValidationError("adjacency matrix must be symmetric")
        if (adj < 0).any():
            raise ValidationError("adjacency entries must be nonnegative")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if self.is_cayley:
            d = self.generators.degree
            if not np.array_equal(self.degrees(), np.full(self.n, d)):
                raise ValidationError("Cayley graph row sums must all equal the degree")

    @property
    def is_cayley(self) -> bool:
        return self.group is not None and self.generators is not None

    @property
    def degree(self) -> Optional[int]:
        """Common degree if the graph is regular, else None."""
        degs = self.degrees()
        return int(degs[0]) if np.all(degs == degs[0]) else None

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1))

    def edge_count(self) -> int:
        """Edges with multiplicity; self-loops counted once."""
        return int(np.triu(self.adjacency).sum())

    def edge_list(self) -> list[tuple[int, int, int]]:
        """Upper-triangle (u, v, mult) triples, self-loops included as (u, u, m)."""
        iu, ju = np.nonzero(np.triu(self.adjacency))
        return [(int(u), int(v), int(self.adjacency[u, v])) for u, v in zip(iu, ju)]

    def normalized_adjacency(self) -> np.ndarray:
        degs = self.degrees().astype(np.float64)
        if (degs == 0).any():
            raise ValidationError("graph has a zero-degree vertex")
        inv_sqrt = 1.0 / np.sqrt(degs)
        return inv_sqrt[:, None] * self.adjacency * inv_sqrt[None, :]

    def normalized_laplacian(self) -> np.ndarray:
        return np.eye(self.n) - self.normalized_adjacency()


def build_cayley(group: AbelianGroup, gens: GeneratorMultiset) -> CayleyGraph:
    """Cayley graph with adjacency[u][v] = sum of multiplicities of s with u+s=v."""
    report = validate_generators(group, gens)
    if not report.ok:
        bad = ", ".join(str(e.residues) for e in report.offenders)
        raise ValidationError(f"generator multiset is not symmetric at: {bad}")
    n = group.order
    table = group.residue_table()
    moduli = np.array(group.moduli, dtype=np.int64)
    adj = np.zeros((n, n), dtype=np.int64)
    for elem, mult in gens.entries:
        shifted = (table + np.array(elem.residues, dtype=np.int64)) % moduli
        target = np.ravel_multi_index(tuple(shifted.T), group.moduli)
        adj[np.arange(n), target] += mult
    return CayleyGraph(n=n, adjacency=adj, group=group, generators=gens)


def generator_permutation(group: AbelianGroup, elem: GroupElement) -> np.ndarray:
    """Permutation p with p[i] = index of (element i) + elem."""
    table = group.residue_table()
    moduli = np.array(group.moduli, dtype=np.int64)
    shifted = (table + np.array(elem.residues, dtype=np.int64)) % moduli
    return np.ravel_multi_index(tuple(shifted.T), group.moduli)


def graph_from_edges(n: int, edges: Iterable[Sequence[int]]) -> CayleyGraph:
    """Generic graph from (u, v, mult) triples (mult optional, default 1)."""
    if n < 1:
        raise ValidationError("graph needs at least one vertex")
    adj = np.zeros((n, n), dtype=np.int64)
    for e in edges:
        if len(e) == 2:
            u, v, m = int(e[0]), int(e[1]), 1
        elif len(e) == 3:
            u, v, m = int(e[0]), int(e[1]), int(e[2])
        else:
            raise ValidationError(f"edge {e!r} must be [u, v] or [u, v, mult]")
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edge {e!r} out of range for n={n}")
        if m <= 0:
            raise ValidationError(f"edge multiplicity must be positive in {e!r}")
        if u == v:
            adj[u, u] += m
        else:
            adj[u, v] += m
            adj[v, u] += m
    return CayleyGraph(n=n, adjacency=adj)


def connectivity(graph: CayleyGraph) -> int:
    """Number of connected components (self-loops ignored)."""
    n = graph.n
    seen = np.zeros(n, dtype=bool)
    neighbors = [np.nonzero(graph.adjacency[u])[0] for u in range(n)]
    components = 0
    for start in range(n):
        if seen[start]:
            continue
        components += 1
        queue = deque([start])
        seen[start] = True
        while queue:
            u = queue.popleft()
            for v in neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
    return components


def random_generators(group: AbelianGroup, degree: int, seed: int) -> GeneratorMultiset:
    """Random symmetric generator multiset of the given total degree.

    Pairs each sampled element with its inverse; an odd leftover slot is
    filled with a self-inverse element (the identity only as a last resort).
    """
    if degree < 1:
        raise ValidationError("degree must be >= 1")
    rng = np.random.default_rng(seed)
    n = group.order
    counts: dict[int, int] = {}
    remaining = degree
    attempts = 0
    while remaining > 0:
        attempts += 1
        if attempts > 1000 * degree:
            raise ValidationError("could not sample a symmetric generator multiset")
        i = int(rng.integers(1, n)) if n > 1 else 0
        x = element_unindex(group, i)
        j = element_index(group, negate(group, x))
        if i == j:
            counts[i] = counts.get(i, 0) + 1
            remaining -= 1
        elif remaining >= 2:
            counts[i] = counts.get(i, 0) + 1
            counts[j] = counts.get(j, 0) + 1
            remaining -= 2
        else:
            self_inverse = [
                k for k in range(1, n)
                if element_index(group, negate(group, element_unindex(group, k))) == k
            ]
            if self_inverse:
                k = self_inverse[int(rng.integers(len(self_inverse)))]
                counts[k] = counts.get(k, 0) + 1
            else:
                counts[0] = counts.get(0, 0) + 1
            remaining -= 1
    entries = [(element_unindex(group, i), m) for i, m in counts.items()]
    return GeneratorMultiset.of(group, entries)


def graph_to_dict(graph: CayleyGraph) -> dict:
    """JSON-serializable graph spec; Cayley provenance preferred when present."""
    if graph.is_cayley:
        return {
            "group": {"moduli": list(graph.group.moduli)},
            "generators": [
                {"element": list(elem.residues), "mult": mult}
                for elem, mult in graph.generators.entries
            ],
        }
    return {"n": graph.n, "edges": [list(e) for e in graph.edge_list()]}


def graph_from_dict(spec: dict) -> CayleyGraph:
    if "group" in spec:
        group = AbelianGroup(spec["group"]["moduli"])
        gens = GeneratorMultiset.of(
            group,
            [(entry["element"], entry.get("mult", 1)) for entry in spec["generators"]],
        )
        return build_cayley(group, gens)
    if "n" in spec and "edges" in spec:
        return graph_from_edges(int(spec["n"]), spec["edges"])
    raise ValidationError("graph spec needs either group/generators or n/edges")


def save_graph(graph: CayleyGraph, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_dict(graph), fh, indent=2)
        fh.write("\n")


def load_graph(path: str) -> CayleyGraph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))
