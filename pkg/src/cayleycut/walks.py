"""Lazy random-walk collision probabilities and the checks built on them.

The t-step lazy collision probability is the squared 2-norm of
((I + A)/2)^t e_0 with A the normalized adjacency matrix.  On
vertex-transitive graphs it also equals (1/n) sum_i (1 - lambda_i/2)^(2t),
which is how all t-grids are evaluated here; the direct matrix-vector
route exists as the cross-check.

The laziness convention is (I + A)/2 applied to the graph as given; the
generator-doubling device that appears in the ratio bound's derivation is
never applied to user graphs, and the bound (2e)^(4d) is checked against
the actual degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cuts import Cut, conductance
from .errors import SizeGuardError, ValidationError
from .groups import CayleyGraph, connectivity
from .spectral import Spectrum, spectrum_of, threshold_rank

MATERIALIZED_POWER_MAX_N = 64


@dataclass(frozen=True)
class CollisionProfile:
    """Collision probabilities CP_t over a grid of step counts."""

    graph: CayleyGraph
    steps: tuple[int, ...]
    values: tuple[float, ...]
    method: str  # "spectral" | "direct"

    def __post_init__(self):
        if self.method not in ("spectral", "direct"):
            raise ValidationError(f"unknown collision method {self.method!r}")


def _require_cayley(graph: CayleyGraph, what: str) -> None:
    if not graph.is_cayley:
        raise ValidationError(f"{what} requires Cayley provenance (vertex transitivity)")


def collision_spectral(graph: CayleyGraph, t: int, spectrum: Optional[Spectrum] = None) -> float:
    """(1/n) sum_i (1 - lambda_i/2)^(2t); vertex-transitive graphs only."""
    _require_cayley(graph, "spectral collision probability")
    if t < 0:
        raise ValidationError("step count must be nonnegative")
    if spectrum is None:
        spectrum = spectrum_of(graph)
    base = 1.0 - spectrum.eigenvalues / 2.0
    return float(np.sum(base ** (2 * t)) / graph.n)


def collision_direct(graph: CayleyGraph, t: int) -> float:
    """Squared 2-norm of the t-step lazy walk vector started at vertex 0."""
    if t < 0:
        raise ValidationError("step count must be nonnegative")
    walk = graph.normalized_adjacency()
    pi = np.zeros(graph.n)
    pi[0] = 1.0
    for _ in range(t):
        pi = 0.5 * (pi + walk @ pi)
    return float(pi @ pi)


def collision_profile(
    graph: CayleyGraph, steps: list[int], method: str = "spectral"
) -> CollisionProfile:
    if method == "spectral":
        spectrum = spectrum_of(graph)
        values = [collision_spectral(graph, t, spectrum) for t in steps]
    elif method == "direct":
        values = [collision_direct(graph, t) for t in steps]
    else:
        raise ValidationError(f"unknown collision method {method!r}")
    return CollisionProfile(graph, tuple(steps), tuple(values), method)


@dataclass(frozen=True)
class CpRatioReport:
    """Observed CP_t / CP_(2t) ratios against the degree-driven bound."""

    bound: float
    max_ratio: float
    argmax_t: int
    ok: bool
    violations: tuple[int, ...]


def cp_ratio_bound_check(
    graph: CayleyGraph, t_max: int, spectrum: Optional[Spectrum] = None
) -> CpRatioReport:
    """Assert CP_t / CP_(2t) <= (2e)^(4d) for 1 <= t <= t_max."""
    _require_cayley(graph, "collision ratio check")
    if t_max < 1:
        raise ValidationError("t_max must be >= 1")
    if spectrum is None:
        spectrum = spectrum_of(graph)
    d = graph.generators.degree
    bound = (2 * math.e) ** (4 * d)
    base = 1.0 - spectrum.eigenvalues / 2.0
    max_ratio = -math.inf
    argmax_t = 0
    violations = []
    for t in range(1, t_max + 1):
        cp_t = float(np.sum(base ** (2 * t)) / graph.n)
        cp_2t = float(np.sum(base ** (4 * t)) / graph.n)
        ratio = cp_t / cp_2t
        if ratio > max_ratio:
            max_ratio = ratio
            argmax_t = t
        if ratio > bound + 1e-9:
            violations.append(t)
    return CpRatioReport(
        bound=bound,
        max_ratio=max_ratio,
        argmax_t=argmax_t,
        ok=not violations,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class MultiplicityReport:
    """Both sides of the collision-ratio multiplicity bound at threshold tau."""

    tau: float
    kappa: int
    t: int
    low_dim: int
    ratio: float  # CP_t / CP_(t(kappa+1))
    ratio_lower: float  # sqrt(low_dim) / (2 e^3)
    ratio_ok: bool
    chain_log2_bound: float  # 20 d log2(3 tau / lambda2) + 11
    chain_ok: bool

    @property
    def ok(self) -> bool:
        return self.ratio_ok and self.chain_ok


def multiplicity_certificate(
    graph: CayleyGraph, tau: float, spectrum: Optional[Spectrum] = None
) -> MultiplicityReport:
    """Certify the eigenvalue-count bounds implied by slow collision decay.

    Checks (a) CP_t / CP_(t(kappa+1)) >= sqrt(dim)/(2 e^3) with
    kappa = ceil(tau/lambda_2) and t = floor(ln(dim)/(4 tau)), and
    (b) the chained bound dim <= 2^(20 d log2(3 tau/lambda_2) + 11),
    where dim counts eigenvalues <= tau.
    """
    _require_cayley(graph, "multiplicity certificate")
    if connectivity(graph) != 1:
        raise ValidationError("multiplicity certificate requires a connected graph")
    if spectrum is None:
        spectrum = spectrum_of(graph)
    lam2 = spectrum.lambda2
    tol = spectrum.eq_tolerance
    if tau < lam2 - tol or tau > 1.5 + tol:
        raise ValidationError(
            f"threshold {tau} outside [lambda_2, 3/2] = [{lam2}, 1.5]"
        )
    tau_eff = min(max(tau, lam2), 1.5)
    kappa = max(1, math.ceil(tau_eff / lam2 - 1e-12))
    dim = threshold_rank(spectrum, tau_eff)
    t = int(math.log(dim) / (4 * tau_eff))

    base = 1.0 - spectrum.eigenvalues / 2.0
    cp_t = float(np.sum(base ** (2 * t)) / graph.n)
    cp_long = float(np.sum(base ** (2 * t * (kappa + 1))) / graph.n)
    ratio = cp_t / cp_long
    ratio_lower = math.sqrt(dim) / (2 * math.e**3)

    d = graph.generators.degree
    chain_log2_bound = 20 * d * math.log2(3 * tau_eff / lam2) + 11
    chain_ok = math.log2(dim) <= chain_log2_bound + 1e-9

    return MultiplicityReport(
        tau=tau_eff,
        kappa=kappa,
        t=t,
        low_dim=dim,
        ratio=ratio,
        ratio_lower=ratio_lower,
        ratio_ok=ratio >= ratio_lower - 1e-9,
        chain_log2_bound=chain_log2_bound,
        chain_ok=chain_ok,
    )


@dataclass(frozen=True)
class BuserReport:
    """Conductance of a cut in the 2t-th power graph against 2 sqrt(td) phi."""

    lhs: float
    rhs: float
    ok: bool


def buser_check(
    graph: CayleyGraph, cut: Cut, t: int, spectrum: Optional[Spectrum] = None
) -> BuserReport:
    """Check phi_{G^(2t)}(Q) <= 2 sqrt(t d) phi_G(Q), evaluating lhs spectrally."""
    _require_cayley(graph, "power-graph conductance comparison")
    if t < 1:
        raise ValidationError("power-graph check needs t >= 1")
    if not cut.is_proper():
        raise ValidationError("cut must be a proper nonempty subset")
    if spectrum is None:
        spectrum = spectrum_of(graph)
    d = graph.generators.degree
    indicator = cut.indicator()
    coeffs = spectrum.eigenvectors.T @ indicator
    damp = 1.0 - (1.0 - spectrum.eigenvalues) ** (2 * t)
    lhs = float(np.sum(coeffs**2 * damp)) / cut.size
    rhs = 2 * math.sqrt(t * d) * conductance(graph, cut)
    return BuserReport(lhs=lhs, rhs=rhs, ok=lhs <= rhs + 1e-9)


def power_graph(graph: CayleyGraph, t: int) -> CayleyGraph:
    """Materialized t-th power multigraph (adjacency A^t); cross-check oracle."""
    if graph.n > MATERIALIZED_POWER_MAX_N:
        raise SizeGuardError(
            f"materialized powers limited to n <= {MATERIALIZED_POWER_MAX_N}"
        )
    if t < 1:
        raise ValidationError("power must be >= 1")
    power = np.linalg.matrix_power(graph.adjacency.astype(np.int64), t)
    return CayleyGraph(n=graph.n, adjacency=power)
