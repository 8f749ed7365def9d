"""Configuration-model multigraphs by uniform stub pairing.

Self-loops and multi-edges are kept (erasing them would bias small-N runs);
if the total stub count is odd, one uniformly chosen stub is discarded.
Graphs are immutable once built and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .degree import DegreeDistribution

__all__ = ["Graph", "build_mr", "build_nsw", "giant_component_size", "mr_degree_sequence"]


@dataclass(frozen=True)
class Graph:
    """Multigraph as an edge list plus a per-node incidence CSR.

    edge_u/edge_v hold the two endpoints of each edge (self-loops have
    edge_u == edge_v).  inc_ptr/inc_eid/inc_other give, for every node, the
    incident edge ids and the opposite endpoints, with multiplicity; a
    self-loop contributes two incidence slots at its node.
    """

    n: int
    degree_sequence: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    inc_ptr: np.ndarray = field(repr=False)
    inc_eid: np.ndarray = field(repr=False)
    inc_other: np.ndarray = field(repr=False)

    @property
    def n_edges(self) -> int:
        return self.edge_u.size

    def neighbors(self, v: int) -> np.ndarray:
        """Adjacent endpoints of v with multiplicity."""
        return self.inc_other[self.inc_ptr[v] : self.inc_ptr[v + 1]]

    def adjacency(self) -> list[list[int]]:
        return [list(self.neighbors(v)) for v in range(self.n)]

    @property
    def is_simple(self) -> bool:
        if np.any(self.edge_u == self.edge_v):
            return False
        lo = np.minimum(self.edge_u, self.edge_v)
        hi = np.maximum(self.edge_u, self.edge_v)
        pairs = lo * self.n + hi
        return np.unique(pairs).size == pairs.size

    def write_edge_list(self, path) -> None:
        """Text export, one `u v` line per edge, self-loops as `u u`."""
        with open(path, "w") as fh:
            for u, v in zip(self.edge_u, self.edge_v):
                fh.write(f"{u} {v}\n")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _from_pairing(degrees: np.ndarray, edge_u: np.ndarray, edge_v: np.ndarray) -> Graph:
    n = degrees.size
    ends = np.concatenate([edge_u, edge_v])
    counts = np.bincount(ends, minlength=n)
    inc_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=inc_ptr[1:])
    order = np.argsort(ends, kind="stable")
    eids = np.concatenate([np.arange(edge_u.size), np.arange(edge_u.size)])
    others = np.concatenate([edge_v, edge_u])
    return Graph(
        n=n,
        degree_sequence=degrees,
        edge_u=edge_u,
        edge_v=edge_v,
        inc_ptr=inc_ptr,
        inc_eid=eids[order],
        inc_other=others[order],
    )


def build_mr(degree_sequence, rng_seed=0) -> Graph:
    """Molloy-Reed graph: prescribed degrees, stubs paired uniformly at random.

    An odd total stub count loses one uniformly chosen stub.
    """
    degrees = np.asarray(degree_sequence, dtype=np.int64)
    if degrees.size == 0:
        raise ValueError("degree sequence must be non-empty")
    if np.any(degrees < 0):
        raise ValueError("degrees must be nonnegative")
    rng = _as_rng(rng_seed)
    stubs = np.repeat(np.arange(degrees.size, dtype=np.int64), degrees)
    rng.shuffle(stubs)
    if stubs.size % 2 == 1:
        stubs = stubs[:-1]  # uniform after shuffling
    edge_u = stubs[0::2].copy()
    edge_v = stubs[1::2].copy()
    for a in (degrees, edge_u, edge_v):
        a.setflags(write=False)
    return _from_pairing(degrees, edge_u, edge_v)


def build_nsw(dist: DegreeDistribution, n: int, rng_seed=0) -> Graph:
    """Newman-Strogatz-Watts graph: iid degrees from dist, then stub pairing."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(rng_seed, np.random.SeedSequence):
        ss = rng_seed
    else:
        ss = np.random.SeedSequence(rng_seed)
    deg_ss, pair_ss = ss.spawn(2)
    degrees = dist.sample(n, np.random.default_rng(deg_ss))
    return build_mr(degrees, np.random.default_rng(pair_ss))


def giant_component_size(graph: Graph) -> int:
    """Node count of the largest connected component."""
    if graph.n == 0:
        return 0
    if graph.n_edges == 0:
        return 1
    data = np.ones(graph.n_edges, dtype=np.int8)
    adj = coo_matrix((data, (graph.edge_u, graph.edge_v)), shape=(graph.n, graph.n))
    n_comp, labels = connected_components(adj, directed=False)
    return int(np.bincount(labels, minlength=n_comp).max())


def mr_degree_sequence(dist: DegreeDistribution, n: int) -> np.ndarray:
    """Deterministic degree sequence with per-degree counts ~ n * p_k.

    Counts are floor(n*p_k) topped up by largest fractional part so they sum
    to exactly n; the sequence lists degrees in increasing order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    target = n * dist.pmf
    counts = np.floor(target).astype(np.int64)
    short = n - counts.sum()
    if short > 0:
        frac = target - counts
        for k in np.argsort(-frac)[:short]:
            counts[k] += 1
    return np.repeat(np.arange(dist.pmf.size, dtype=np.int64), counts)
