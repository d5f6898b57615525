"""Connectivity analysis of multi-head attention graphs.

Each mask head defines a directed graph (query -> key edges); the union
over heads is the multi-head attention graph.  This module checks the
residue-class partition induced by the global head, evaluates the
gcd bridging condition under which the union graph connects all
classes, and measures hop diameters by brute-force BFS.  It measures;
it does not prove.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError
from .masks import GridSpec, SparseMaskSet, build_doppler_masks, global_stride

DEFAULT_BFS_CAP = 4096
DEFAULT_SAMPLE_SOURCES = 1024
_WITNESS_LIMIT = 10


def equivalence_classes(tokens: int, stride: int) -> list[np.ndarray]:
    """The `stride` residue classes {i : i == r mod stride} over [0, tokens)."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if tokens < 0:
        raise ValueError("token count must be >= 0")
    return [np.arange(r, tokens, stride, dtype=np.int64) for r in range(stride)]


@dataclass
class PartitionCheck:
    passed: bool
    component_count: int
    witness: tuple[int, int] | None = None
    witness_kind: str | None = None  # "inter_class_edge" | "missing_intra_class_edge"


def verify_partition(maskset: SparseMaskSet) -> PartitionCheck:
    """Check that head 0 is a disjoint union of complete residue-class subgraphs.

    Passes iff every head-0 row equals the query's full residue class;
    an extra edge is an inter-class witness, a missing one an
    incomplete-subgraph witness.
    """
    if maskset.pattern_kind != "doppler_aware":
        raise ValueError("partition check applies to doppler_aware masks")
    tokens = maskset.tokens
    s = global_stride(tokens, maskset.grid.heads)
    classes = equivalence_classes(tokens, s)
    for i in range(tokens):
        row = maskset.row(0, i)
        expected = classes[i % s]
        if np.array_equal(row, expected):
            continue
        extra = np.setdiff1d(row, expected, assume_unique=False)
        if extra.size:
            return PartitionCheck(False, 0, witness=(i, int(extra[0])), witness_kind="inter_class_edge")
        missing = np.setdiff1d(expected, row, assume_unique=False)
        return PartitionCheck(False, 0, witness=(i, int(missing[0])), witness_kind="missing_intra_class_edge")
    return PartitionCheck(True, min(s, tokens))


def effective_step(stride_time: int, stride_freq: int, subcarriers: int) -> int:
    """gcd(stride_time * subcarriers, stride_freq): the generator of a
    head's flattened offset lattice."""
    if stride_time < 1 or stride_freq < 1 or subcarriers < 1:
        raise ValueError("arguments must be >= 1")
    return math.gcd(stride_time * subcarriers, stride_freq)


def bridging_condition(step: int, stride: int) -> bool:
    """True iff gcd(step, stride) == 1, i.e. the head can reach every
    residue class of the global head from any starting class."""
    if step < 1 or stride < 1:
        raise ValueError("arguments must be >= 1")
    return math.gcd(step, stride) == 1


def _gather_neighbors(indptr, indices, nodes):
    counts = indptr[nodes + 1] - indptr[nodes]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    out_starts = np.zeros(nodes.size, dtype=np.int64)
    np.cumsum(counts[:-1], out=out_starts[1:])
    pos = np.arange(total, dtype=np.int64) - np.repeat(out_starts, counts) + np.repeat(indptr[nodes], counts)
    return indices[pos]


def _bfs_distances(indptr, indices, source, tokens):
    dist = np.full(tokens, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        nbrs = np.unique(_gather_neighbors(indptr, indices, frontier))
        fresh = nbrs[dist[nbrs] < 0]
        dist[fresh] = level
        frontier = fresh
    return dist


def union_adjacency(maskset: SparseMaskSet, heads=None, undirected: bool = False):
    """CSR adjacency of the union attention graph.

    Directed edges run query -> key exactly as the masks define them;
    `undirected=True` symmetrizes by adding each reverse edge.
    """
    indptr, indices = maskset.union_rows(heads=heads)
    if not undirected:
        return indptr, indices
    tokens = maskset.tokens
    src = np.repeat(np.arange(tokens, dtype=np.int64), np.diff(indptr))
    heads_both = np.concatenate([src, indices])
    tails_both = np.concatenate([indices, src])
    order = np.lexsort((tails_both, heads_both))
    heads_both, tails_both = heads_both[order], tails_both[order]
    if heads_both.size:
        keep = np.ones(heads_both.size, dtype=bool)
        keep[1:] = (heads_both[1:] != heads_both[:-1]) | (tails_both[1:] != tails_both[:-1])
        heads_both, tails_both = heads_both[keep], tails_both[keep]
    out_indptr = np.zeros(tokens + 1, dtype=np.int64)
    np.cumsum(np.bincount(heads_both, minlength=tokens), out=out_indptr[1:])
    return out_indptr, tails_both


@dataclass
class HopDiameterResult:
    """Outcome of a BFS diameter measurement.

    diameter is None when some pair is unreachable; up to 10 witness
    pairs are kept.  `sampled` marks lower-bound estimates from a
    sampled-source run.
    """

    mode: str
    diameter: int | None
    unreachable_pairs: list[tuple[int, int]] = field(default_factory=list)
    source_count: int = 0
    sampled: bool = False

    @property
    def reachable(self) -> bool:
        return self.diameter is not None

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "diameter": self.diameter,
            "unreachable_pairs": [list(p) for p in self.unreachable_pairs],
            "source_count": self.source_count,
            "sampled": self.sampled,
        }


def hop_diameter(
    maskset: SparseMaskSet,
    mode: str = "undirected",
    heads=None,
    bfs_cap: int = DEFAULT_BFS_CAP,
    sample: bool = False,
    sample_sources: int = DEFAULT_SAMPLE_SOURCES,
    seed: int = 0,
) -> HopDiameterResult:
    """Exact hop diameter of the union attention graph by all-pairs BFS.

    Above `bfs_cap` tokens the exact sweep is refused unless
    `sample=True`, which measures from `sample_sources` uniformly drawn
    sources instead (a lower bound, flagged in the result).
    """
    if mode not in ("directed", "undirected"):
        raise ValueError("mode must be 'directed' or 'undirected'")
    tokens = maskset.tokens
    if tokens > bfs_cap and not sample:
        raise ResourceLimitError(
            f"{tokens} tokens exceeds the all-pairs BFS cap of {bfs_cap}; pass sample=True"
        )
    indptr, indices = union_adjacency(maskset, heads=heads, undirected=(mode == "undirected"))
    if tokens > bfs_cap:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(tokens, size=min(sample_sources, tokens), replace=False))
        sampled = True
    else:
        sources = np.arange(tokens, dtype=np.int64)
        sampled = False

    best = 0
    witnesses: list[tuple[int, int]] = []
    for src in sources:
        dist = _bfs_distances(indptr, indices, int(src), tokens)
        missing = np.flatnonzero(dist < 0)
        if missing.size:
            for j in missing[: _WITNESS_LIMIT - len(witnesses)]:
                witnesses.append((int(src), int(j)))
            if len(witnesses) >= _WITNESS_LIMIT:
                break
        else:
            best = max(best, int(dist.max()))
    if witnesses:
        return HopDiameterResult(mode, None, witnesses, source_count=len(sources), sampled=sampled)
    return HopDiameterResult(mode, best, [], source_count=len(sources), sampled=sampled)


@dataclass
class HeadBridging:
    head: int
    stride_time: int
    stride_freq: int
    effective_step: int
    bridging_ok: bool

    def to_json_dict(self) -> dict:
        return {
            "head": self.head,
            "stride_time": self.stride_time,
            "stride_freq": self.stride_freq,
            "effective_step": self.effective_step,
            "bridging_ok": self.bridging_ok,
        }


@dataclass
class ConnectivityReport:
    """Everything Theorem-style connectivity analysis measures for a grid.

    The hop bound (undirected diameter <= head count) is reported, not
    asserted: the bridging condition guarantees class-to-class
    reachability, while per-query offsets can stretch concrete paths.
    """

    grid: GridSpec
    global_stride: int
    class_sizes: list[int]
    heads: list[HeadBridging]
    directed: HopDiameterResult
    undirected: HopDiameterResult
    hop_bound_satisfied: bool
    fully_connected: bool

    @property
    def bridging_heads(self) -> list[int]:
        return [h.head for h in self.heads if h.bridging_ok]

    @property
    def theorem_consistent(self) -> bool:
        """False only if bridging holds for some head yet the undirected
        union graph is disconnected (would contradict the guarantee)."""
        return not self.bridging_heads or self.fully_connected

    @property
    def unreachable_sample(self) -> list[tuple[int, int]]:
        if self.undirected.unreachable_pairs:
            return self.undirected.unreachable_pairs
        return self.directed.unreachable_pairs

    def to_json_dict(self) -> dict:
        return {
            "grid": {
                "L": self.grid.symbols,
                "K": self.grid.subcarriers,
                "p": self.grid.heads,
                "lambda": self.grid.time_bias,
            },
            "global_stride": self.global_stride,
            "class_sizes": list(self.class_sizes),
            "heads": [h.to_json_dict() for h in self.heads],
            "directed_diameter": self.directed.diameter,
            "undirected_diameter": self.undirected.diameter,
            "directed": self.directed.to_json_dict(),
            "undirected": self.undirected.to_json_dict(),
            "unreachable_sample": [list(p) for p in self.unreachable_sample],
            "hop_bound_satisfied": self.hop_bound_satisfied,
            "fully_connected": self.fully_connected,
            "bridging_heads": self.bridging_heads,
            "theorem_consistent": self.theorem_consistent,
        }


def connectivity_report(
    grid: GridSpec,
    bfs_cap: int = DEFAULT_BFS_CAP,
    sample: bool = False,
    seed: int = 0,
    maskset: SparseMaskSet | None = None,
) -> ConnectivityReport:
    """Build Doppler-aware masks for `grid` and measure their connectivity."""
    if maskset is None:
        maskset = build_doppler_masks(grid)
    s = global_stride(grid.tokens, grid.heads)
    class_sizes = [int(c.size) for c in equivalence_classes(grid.tokens, s)]
    bridging = []
    for geom in maskset.geometries[1:]:
        step = effective_step(geom.stride_time, geom.stride_freq, grid.subcarriers)
        bridging.append(
            HeadBridging(
                head=geom.head,
                stride_time=geom.stride_time,
                stride_freq=geom.stride_freq,
                effective_step=step,
                bridging_ok=bridging_condition(step, s),
            )
        )
    directed = hop_diameter(maskset, "directed", bfs_cap=bfs_cap, sample=sample, seed=seed)
    undirected = hop_diameter(maskset, "undirected", bfs_cap=bfs_cap, sample=sample, seed=seed)
    hop_bound = undirected.diameter is not None and undirected.diameter <= grid.heads
    return ConnectivityReport(
        grid=grid,
        global_stride=s,
        class_sizes=class_sizes,
        heads=bridging,
        directed=directed,
        undirected=undirected,
        hop_bound_satisfied=hop_bound,
        fully_connected=undirected.diameter is not None,
    )
