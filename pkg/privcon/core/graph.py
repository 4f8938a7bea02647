"""
Network model: undirected graphs, incidence and PDMM edge matrices,
random geometric generation and honest-component queries.
"""

from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple, Union

import math

import networkx as nx
import numpy as np

from privcon.exceptions import (
    UncoveredHonestNodeError,
    CorruptedTargetError,
    DisconnectedGraphError,
)
from privcon.utils.console import get_logger

logger = get_logger(__name__)

Edge = Tuple[int, int]

MAX_RESAMPLE_ATTEMPTS = 100


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..n-1 with edges sorted as (i, j), i < j."""
    n: int
    edges: Tuple[Edge, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"Graph needs at least one node, got n={self.n}")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"Self-loop on node {i}")
            if not (0 <= i < j < self.n):
                raise ValueError(f"Edge ({i}, {j}) must satisfy 0 <= i < j < n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"Duplicate edge ({i}, {j})")
            seen.add((i, j))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("Edges must be sorted lexicographically; use Graph.from_edges")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        """Build a graph from unordered pairs in any orientation and order."""
        normalized = []
        for a, b in edges:
            a, b = int(a), int(b)
            normalized.append((min(a, b), max(a, b)))
        return cls(n=n, edges=tuple(sorted(normalized)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> Tuple[FrozenSet[int], ...]:
        neighbors: List[set] = [set() for _ in range(self.n)]
        for i, j in self.edges:
            neighbors[i].add(j)
            neighbors[j].add(i)
        return tuple(frozenset(s) for s in neighbors)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=int)

    @cached_property
    def edge_index(self) -> Dict[Edge, int]:
        """Position l of each undirected edge (i, j), i < j."""
        return {edge: l for l, edge in enumerate(self.edges)}

    def neighbors(self, i: int) -> List[int]:
        """Sorted neighbour list N_i."""
        return sorted(self.adjacency[i])

    def directed_index(self, i: int, j: int) -> int:
        """
        Index of the directed identifier i|j in a length-2m dual vector.

        Edge l = (a, b), a < b owns rows l (a|b) and l + m (b|a).
        """
        if i < j:
            return self.edge_index[(i, j)]
        return self.edge_index[(j, i)] + self.m

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class IncidenceMatrix:
    """Dense m×n incidence matrix, B_li = +1 and B_lj = -1 for e_l = (i, j)."""
    B: np.ndarray


@dataclass(frozen=True)
class PdmmEdgeMatrices:
    """Dual-variable bookkeeping matrices of PDMM: C (2m×n) and the block swap P (2m×2m)."""
    C: np.ndarray
    P: np.ndarray

    @property
    def m(self) -> int:
        return self.C.shape[0] // 2

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @cached_property
    def PC(self) -> np.ndarray:
        return self.P @ self.C


@dataclass(frozen=True)
class CorruptionModel:
    """Split of the node set into corrupted and honest parts, with the corrupted edges."""
    corrupted: FrozenSet[int]
    honest: FrozenSet[int]
    corrupted_edges: Tuple[Edge, ...]

    @classmethod
    def from_corrupted(cls, g: Graph, corrupted: Iterable[int]) -> "CorruptionModel":
        corrupted_set = frozenset(int(c) for c in corrupted)
        for c in corrupted_set:
            if not 0 <= c < g.n:
                raise ValueError(f"Corrupted node {c} outside 0..{g.n - 1}")
        honest = frozenset(range(g.n)) - corrupted_set
        corrupted_edges = tuple(
            (i, j) for i, j in g.edges if i in corrupted_set or j in corrupted_set
        )
        return cls(corrupted=corrupted_set, honest=honest, corrupted_edges=corrupted_edges)

    def honest_neighbors(self, g: Graph, i: int) -> List[int]:
        """N_{i,h}."""
        return [j for j in g.neighbors(i) if j in self.honest]

    def corrupted_neighbors(self, g: Graph, i: int) -> List[int]:
        """N_{i,c}."""
        return [j for j in g.neighbors(i) if j in self.corrupted]


def default_radius_sq(n: int) -> float:
    """Squared connection radius 2·ln(n)/n, connected with high probability."""
    return 2.0 * math.log(n) / n


def random_geometric_graph(n: int, radius_sq: float, seed: int) -> Graph:
    """
    Random geometric graph on the unit square.

    Coordinates are drawn in the order node 0 x, node 0 y, node 1 x, ... from
    numpy's default generator seeded with `seed`. Nodes i, j are joined when
    their squared Euclidean distance is at most `radius_sq`.
    """
    if n < 2:
        raise ValueError(f"Need n >= 2, got {n}")
    if radius_sq <= 0:
        raise ValueError(f"radius_sq must be positive, got {radius_sq}")
    rng = np.random.default_rng(seed)
    positions = rng.random((n, 2))
    diff = positions[:, None, :] - positions[None, :, :]
    dist_sq = np.sum(diff * diff, axis=-1)
    rows, cols = np.nonzero(np.triu(dist_sq <= radius_sq, k=1))
    return Graph.from_edges(n, zip(rows.tolist(), cols.tolist()))


def connected_geometric_graph(
    n: int,
    radius_sq: float,
    seed: int,
    max_attempts: int = MAX_RESAMPLE_ATTEMPTS,
) -> Tuple[Graph, int]:
    """
    Resample with seed, seed+1, ... until the geometric graph is connected.

    Returns the graph and the seed that produced it.
    """
    for attempt in range(max_attempts):
        g = random_geometric_graph(n, radius_sq, seed + attempt)
        if is_connected(g):
            if attempt:
                logger.debug("Connected geometric graph after %d resamples (seed %d)", attempt, seed + attempt)
            return g, seed + attempt
    raise DisconnectedGraphError(
        f"No connected geometric graph with n={n}, radius_sq={radius_sq:.4g} "
        f"in {max_attempts} attempts from seed {seed}"
    )


def incidence_matrix(g: Graph) -> IncidenceMatrix:
    B = np.zeros((g.m, g.n))
    for l, (i, j) in enumerate(g.edges):
        B[l, i] = 1.0
        B[l, j] = -1.0
    return IncidenceMatrix(B=B)


def pdmm_edge_matrices(g: Graph) -> PdmmEdgeMatrices:
    """C with C_li = +1, C_(l+m)j = -1 for e_l = (i, j), and P swapping the two row blocks."""
    if g.m == 0:
        raise ValueError("PDMM needs at least one edge")
    m = g.m
    C = np.zeros((2 * m, g.n))
    for l, (i, j) in enumerate(g.edges):
        C[l, i] = 1.0
        C[l + m, j] = -1.0
    P = np.zeros((2 * m, 2 * m))
    P[np.arange(m), np.arange(m) + m] = 1.0
    P[np.arange(m) + m, np.arange(m)] = 1.0
    return PdmmEdgeMatrices(C=C, P=P)


def is_connected(g: Graph) -> bool:
    return nx.is_connected(g.to_networkx())


def honest_component(g: Graph, cm: CorruptionModel, i: int) -> FrozenSet[int]:
    """Node set N_h' of the component containing i once corrupted nodes are removed."""
    if i in cm.corrupted:
        raise CorruptedTargetError(f"Node {i + 1} is corrupted; honest component undefined")
    honest_graph = g.to_networkx().subgraph(cm.honest)
    return frozenset(nx.node_connected_component(honest_graph, i))


def nodes_without_corrupted_neighbor(g: Graph, cm: CorruptionModel) -> List[int]:
    """Honest nodes with no corrupted neighbour."""
    return [i for i in sorted(cm.honest) if not cm.corrupted_neighbors(g, i)]


def check_corrupted_neighbors(g: Graph, cm: CorruptionModel) -> None:
    """Raise if some honest node has no corrupted neighbour."""
    offenders = nodes_without_corrupted_neighbor(g, cm)
    if offenders:
        node = offenders[0]
        raise UncoveredHonestNodeError(
            f"Honest node {node + 1} has no corrupted neighbour", node=node
        )


def load_edge_list(path: Union[str, Path]) -> Graph:
    """
    Read the edge-list format: header `n m`, then one `i j` pair per line (0-based).

    Blank lines and lines starting with '#' are ignored.
    """
    lines = [
        line.split()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines or len(lines[0]) != 2:
        raise ValueError(f"{path}: missing `n m` header")
    n, m = int(lines[0][0]), int(lines[0][1])
    pairs = lines[1:]
    if len(pairs) != m:
        raise ValueError(f"{path}: header declares {m} edges, found {len(pairs)}")
    for pair in pairs:
        if len(pair) != 2:
            raise ValueError(f"{path}: malformed edge line {' '.join(pair)!r}")
    return Graph.from_edges(n, ((int(a), int(b)) for a, b in pairs))


def save_edge_list(g: Graph, path: Union[str, Path]) -> None:
    lines = [f"{g.n} {g.m}"] + [f"{i} {j}" for i, j in g.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_bundled_graph(name: str) -> Graph:
    """Load one of the edge lists shipped in privcon/data (e.g. 'topology_g')."""
    resource = resources.files("privcon.data").joinpath(f"{name}.edges")
    with resources.as_file(resource) as path:
        return load_edge_list(path)
