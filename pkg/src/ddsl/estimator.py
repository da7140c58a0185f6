"""Match-count estimates under the power-law random (PR) graph model.

In the PR model edge ``(i, j)`` appears with probability
``deg(i) * deg(j) * rho`` where ``rho = 1 / (2|E|)``.  Degrees follow the
empirical distribution of the data graph, so every sum has finite support.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .errors import EstimatorDomainError
from .graph import Graph
from .pattern import Pattern


@dataclass(frozen=True)
class DegreeDistribution:
    probabilities: Mapping[int, float]
    n: int
    e: int

    @property
    def rho(self) -> float:
        return 1.0 / (2 * self.e) if self.e else 0.0

    @classmethod
    def from_graph(cls, d: Graph) -> DegreeDistribution:
        return cls.from_degrees([len(ns) for ns in d.adjacency.values()])

    @classmethod
    def from_degrees(cls, degrees: Sequence[int]) -> DegreeDistribution:
        n = len(degrees)
        counts = Counter(degrees)
        probs = {w: c / n for w, c in sorted(counts.items())} if n else {}
        return cls(probs, n, sum(degrees) // 2)


def tail_moment(dist: DegreeDistribution, k: int) -> float:
    """Sum over ``w >= k`` of ``w**k * p_w``."""
    return math.fsum(w ** k * pw for w, pw in dist.probabilities.items() if w >= k)


@dataclass(frozen=True)
class EstimateReport:
    epsilon: float
    expected_matches: float
    per_vertex_moments: dict[int, float] = field(default_factory=dict)
    clamped: bool = False

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "expected_matches": self.expected_matches,
            "per_vertex_moments": {str(k): v for k, v in sorted(self.per_vertex_moments.items())},
            "clamped": self.clamped,
        }


def _log_epsilon(p: Pattern, dist: DegreeDistribution) -> float:
    if not p.edges:
        return 0.0
    if dist.e == 0:
        return -math.inf
    total = p.num_edges * math.log(dist.rho)
    for v in p.vertices:
        t = tail_moment(dist, p.degree(v))
        if t <= 0.0:
            return -math.inf
        total += math.log(t)
    return total


def epsilon(p: Pattern, dist: DegreeDistribution) -> float:
    """Probability that a random assignment is edge- and degree-consistent, clamped to [0, 1].

    A pattern without edges gets 1 by convention.
    """
    return math.exp(min(0.0, _log_epsilon(p, dist)))


def expected_matches(p: Pattern, dist: DegreeDistribution) -> float:
    """n!/(n-r)! * epsilon * |Auto(p, ord)| / |Auto(p)|."""
    r = p.num_vertices
    if r > dist.n:
        raise EstimatorDomainError(f"pattern has {r} vertices but the graph only {dist.n}")
    log_eps = min(0.0, _log_epsilon(p, dist))
    if log_eps == -math.inf:
        return 0.0
    # r <= 8, so summing the factors is both cheap and exact to rounding
    log_assign = math.fsum(math.log(dist.n - i) for i in range(r))
    ratio = len(p.ordered_automorphisms) / len(p.automorphisms)
    return math.exp(log_assign + log_eps) * ratio


def estimate(p: Pattern, dist: DegreeDistribution) -> EstimateReport:
    moments = {p.degree(v): tail_moment(dist, p.degree(v)) for v in p.vertices if p.degree(v) >= 1}
    raw = _log_epsilon(p, dist)
    em = expected_matches(p, dist) if p.num_vertices <= dist.n else 0.0
    return EstimateReport(epsilon(p, dist), em, moments, clamped=raw > 0.0)


def sample_pr_graph(degrees: Sequence[int], seed: int = 0) -> Graph:
    """Draw a PR-model graph over vertices ``0..n-1`` with expected degrees ``degrees``.

    Pairs ``i < j`` get an edge with probability ``min(1, w_i w_j rho)``.  The
    model also allows self-loops; they are drawn and then dropped because the
    matcher works on simple graphs.
    """
    import numpy as np

    w = np.asarray(degrees, dtype=float)
    n = len(w)
    total = w.sum()
    rng = np.random.default_rng(seed)
    if n == 0 or total == 0:
        return Graph(vertices=range(n))
    rho = 1.0 / total
    probs = np.minimum(1.0, np.outer(w, w) * rho)
    draws = rng.random((n, n)) < probs
    iu, ju = np.nonzero(np.triu(draws, k=0))
    edges = [(int(i), int(j)) for i, j in zip(iu, ju) if i != j]
    return Graph(edges, vertices=range(n))
