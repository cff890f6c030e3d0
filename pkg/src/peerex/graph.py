"""Friendship network: loading, validation, and structural transforms.

Node ids are remapped to dense integers 0..n-1 at ingestion; the original
(string) ids are kept on the network so every output can be reported in the
caller's naming. All graphs are undirected and simple.
"""

from __future__ import annotations

import csv
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import EmptyInputError, FormatError, UnknownAttributeError

log = logging.getLogger(__name__)

DEFAULT_SWAPS_PER_EDGE = 10


class Network:
    """Undirected simple graph over dense integer node ids.

    Adjacency lists are kept sorted by neighbor id, which fixes the
    evaluation order of every downstream per-neighbor computation.
    """

    __slots__ = ("_adj", "_original_ids", "_edge_count")

    def __init__(self, adjacency: Sequence[Iterable[int]], original_ids: Sequence[str] | None = None):
        n = len(adjacency)
        adj: list[list[int]] = []
        for i, neigh in enumerate(adjacency):
            ns = sorted(neigh)
            prev = -1
            for j in ns:
                if j == i:
                    raise ValueError(f"self-loop at node {i}")
                if j == prev:
                    raise ValueError(f"duplicate edge ({i}, {j})")
                if not 0 <= j < n:
                    raise ValueError(f"neighbor id {j} out of range for {n} nodes")
                prev = j
            adj.append(ns)
        ends = {(i, j) for i in range(n) for j in adj[i]}
        for i, j in ends:
            if (j, i) not in ends:
                raise ValueError(f"adjacency not symmetric: ({i}, {j}) present, ({j}, {i}) missing")
        if original_ids is None:
            originals = tuple(str(i) for i in range(n))
        else:
            if len(original_ids) != n:
                raise ValueError("original_ids length does not match node count")
            originals = tuple(str(s) for s in original_ids)
        self._adj = adj
        self._original_ids = originals
        self._edge_count = len(ends) // 2

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int]],
        node_count: int,
        original_ids: Sequence[str] | None = None,
    ) -> "Network":
        adj: list[list[int]] = [[] for _ in range(node_count)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(adj, original_ids)

    @property
    def node_count(self) -> int:
        return len(self._adj)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    @property
    def original_ids(self) -> tuple[str, ...]:
        return self._original_ids

    def original_id(self, i: int) -> str:
        return self._original_ids[i]

    def dense_index(self) -> dict[str, int]:
        """Map from original id back to dense id."""
        return {s: i for i, s in enumerate(self._original_ids)}

    def neighbors(self, i: int) -> list[int]:
        """Sorted neighbor ids of ``i``. Treat as read-only."""
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def degrees(self) -> list[int]:
        return [len(a) for a in self._adj]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Each edge once, as (u, v) with u < v, ascending."""
        for i, neigh in enumerate(self._adj):
            for j in neigh:
                if j > i:
                    yield (i, j)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges())

    def canonical_edges(self) -> set[tuple[str, str]]:
        """Edges expressed in original ids, endpoint-sorted; survives any remap."""
        out = set()
        for u, v in self.edges():
            a, b = self._original_ids[u], self._original_ids[v]
            out.add((a, b) if a <= b else (b, a))
        return out

    def __repr__(self) -> str:
        return f"Network(nodes={self.node_count}, edges={self.edge_count})"


def load_network(edge_rows: Iterable[Sequence[str]]) -> Network:
    """Build a validated :class:`Network` from raw (source, target) id pairs.

    Ids are remapped to dense integers in order of first appearance.
    Self-loops and duplicate edges are dropped; a warning with both counts
    is logged when any were seen. Nodes mentioned only in dropped rows are
    still part of the network (with degree zero, if nothing else names them).
    """
    index: dict[str, int] = {}
    edges: set[tuple[int, int]] = set()
    self_loops = duplicates = rows = 0
    for lineno, row in enumerate(edge_rows, start=1):
        try:
            u_raw, v_raw = row
        except (TypeError, ValueError):
            raise FormatError(f"edge row {lineno}: expected two fields, got {row!r}") from None
        u_raw, v_raw = str(u_raw).strip(), str(v_raw).strip()
        if not u_raw or not v_raw:
            raise FormatError(f"edge row {lineno}: empty node id")
        rows += 1
        u = index.setdefault(u_raw, len(index))
        v = index.setdefault(v_raw, len(index))
        if u == v:
            self_loops += 1
            continue
        e = (u, v) if u < v else (v, u)
        if e in edges:
            duplicates += 1
            continue
        edges.add(e)
    if rows == 0:
        raise EmptyInputError("edge list is empty")
    if self_loops or duplicates:
        log.warning("dropped %d self-loop(s) and %d duplicate edge(s)", self_loops, duplicates)
    originals = [""] * len(index)
    for s, i in index.items():
        originals[i] = s
    return Network.from_edges(edges, len(index), originals)


def giant_component(net: Network) -> tuple[Network, list[int]]:
    """Largest connected component, plus the list mapping new ids to old ids.

    Ties on component size are broken by the smallest minimum original id
    (string order), so the result is reproducible.
    """
    n = net.node_count
    if n == 0:
        raise EmptyInputError("network has no nodes")
    seen = [False] * n
    components: list[list[int]] = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in net.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        components.append(comp)
    best = min(components, key=lambda c: (-len(c), min(net.original_id(i) for i in c)))
    old_ids = sorted(best)
    remap = {old: new for new, old in enumerate(old_ids)}
    adj = [[remap[v] for v in net.neighbors(old)] for old in old_ids]
    originals = [net.original_id(old) for old in old_ids]
    return Network(adj, originals), old_ids


def configuration_rewire(
    net: Network,
    swaps_per_edge: int = DEFAULT_SWAPS_PER_EDGE,
    seed: int = 0,
) -> Network:
    """Degree-preserving randomization via double-edge swaps with rejection.

    Exactly ``swaps_per_edge * edge_count`` swaps are attempted; any swap
    that would create a self-loop or a duplicate edge is rejected, so the
    result is always simple and has the input's exact degree sequence.
    Returns the network unchanged (with a warning) when no swap succeeds.
    """
    if swaps_per_edge < 1:
        raise ValueError("swaps_per_edge must be >= 1")
    m = net.edge_count
    if m < 2:
        log.warning("network has %d edge(s); no double-edge swap is possible", m)
        return Network(net._adj, net.original_ids)
    rng = random.Random(seed)
    edges: list[tuple[int, int]] = list(net.edges())
    adj = [set(net.neighbors(i)) for i in range(net.node_count)]
    attempts = swaps_per_edge * m
    accepted = 0
    for _ in range(attempts):
        ei = rng.randrange(m)
        ej = rng.randrange(m)
        if ei == ej:
            continue
        a, b = edges[ei]
        c, d = edges[ej]
        if rng.random() < 0.5:
            c, d = d, c
        # proposed replacement: (a, d) and (c, b)
        if a == d or c == b:
            continue
        if d in adj[a] or b in adj[c]:
            continue
        adj[a].remove(b)
        adj[b].remove(a)
        adj[c].remove(d)
        adj[d].remove(c)
        adj[a].add(d)
        adj[d].add(a)
        adj[c].add(b)
        adj[b].add(c)
        edges[ei] = (a, d)
        edges[ej] = (c, b)
        accepted += 1
    if accepted == 0:
        log.warning("no legal double-edge swap found in %d attempts; network returned unchanged", attempts)
    return Network.from_edges(edges, net.node_count, net.original_ids)


# ---------------------------------------------------------------------------
# node attributes

AGE_BAND_LABELS = ("under-18", "18-30", "30-50", "50+")

CATEGORICAL_ATTRIBUTES = ("vote", "gender", "locality", "age_band")


def age_band(age: float) -> str:
    """Coarse age category; bands are [18, 30), [30, 50), [50, inf)."""
    if age < 18:
        return "under-18"
    if age < 30:
        return "18-30"
    if age < 50:
        return "30-50"
    return "50+"


@dataclass
class NodeAttributes:
    """Optional per-node attributes, keyed by dense node id.

    Missing values are simply absent from the per-attribute dicts; they are
    never imputed.
    """

    vote: dict[int, str] = field(default_factory=dict)
    age: dict[int, float] = field(default_factory=dict)
    gender: dict[int, str] = field(default_factory=dict)
    locality: dict[int, str] = field(default_factory=dict)

    def age_bands(self) -> dict[int, str]:
        return {i: age_band(a) for i, a in self.age.items()}

    def categorical(self, name: str) -> dict[int, str]:
        """Category labels for one categorical attribute name."""
        if name in ("vote", "gender", "locality"):
            return getattr(self, name)
        if name == "age_band":
            return self.age_bands()
        raise UnknownAttributeError(
            f"unknown attribute {name!r}; expected one of {', '.join(CATEGORICAL_ATTRIBUTES)}"
        )


# ---------------------------------------------------------------------------
# CSV interfaces

def read_edge_csv(path: str, header: bool = True) -> Network:
    """Load a two-column ``source,target`` edge-list CSV."""
    rows: list[tuple[str, str]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if header and reader.line_num == 1:
                continue
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path} line {reader.line_num}: expected two columns, got {len(row)}")
            rows.append((row[0], row[1]))
    if not rows:
        raise EmptyInputError(f"{path}: no edge rows")
    return load_network(rows)


def write_edge_csv(net: Network, path: str) -> None:
    """Serialize edges with dense ids (pair with :func:`write_id_map_csv`)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target"])
        for u, v in net.edges():
            writer.writerow([u, v])


def write_id_map_csv(net: Network, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dense_id", "original_id"])
        for i, orig in enumerate(net.original_ids):
            writer.writerow([i, orig])


ATTRIBUTE_HEADER = ("id", "vote", "age", "gender", "locality")


def read_attributes_csv(path: str, net: Network) -> NodeAttributes:
    """Load the ``id,vote,age,gender,locality`` table; empty cells mean missing.

    Rows whose id is not in the network are skipped (count logged), so a
    table for a larger user base can be applied to a filtered network.
    """
    index = net.dense_index()
    attrs = NodeAttributes()
    skipped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path}: empty attributes file")
        if [h.strip() for h in header] != list(ATTRIBUTE_HEADER):
            raise FormatError(f"{path} line 1: expected header {','.join(ATTRIBUTE_HEADER)}")
        for row in reader:
            if not row:
                continue
            if len(row) != 5:
                raise FormatError(f"{path} line {reader.line_num}: expected 5 columns, got {len(row)}")
            node = index.get(row[0].strip())
            if node is None:
                skipped += 1
                continue
            vote, age_s, gender, locality = (c.strip() for c in row[1:])
            if vote:
                attrs.vote[node] = vote
            if age_s:
                try:
                    attrs.age[node] = float(age_s)
                except ValueError:
                    raise FormatError(f"{path} line {reader.line_num}: bad age {age_s!r}") from None
            if gender:
                attrs.gender[node] = gender
            if locality:
                attrs.locality[node] = locality
    if skipped:
        log.warning("skipped %d attribute row(s) whose id is not in the network", skipped)
    return attrs
