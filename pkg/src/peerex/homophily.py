"""Attribute homophily over the friendship network.

Three views: the per-node fraction of friends sharing an attribute value
(binned into a population histogram), the category mixing matrix with its
assortativity coefficient, and the distribution of age gaps across edges.
Nodes or edges with missing attribute values are excluded per metric and
the exclusion counts are reported, never imputed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .graph import Network, NodeAttributes


@dataclass
class SameFractionHistogram:
    attribute: str
    fractions: dict[int, float]  # per included node
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    excluded_missing: int
    excluded_zero_degree: int
    excluded_no_labeled_neighbors: int


def same_fraction_histogram(
    net: Network,
    attrs: NodeAttributes,
    attribute: str,
    bins: int = 10,
) -> SameFractionHistogram:
    """Per-node fraction of neighbors sharing the node's attribute value.

    The denominator counts only neighbors whose own value is known. Nodes
    with a missing value, zero degree, or no labeled neighbor are excluded
    and counted. Bins are [k/bins, (k+1)/bins) with 1.0 falling in the last.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = attrs.categorical(attribute)
    fractions: dict[int, float] = {}
    excluded_missing = excluded_zero_degree = excluded_unlabeled = 0
    for i in range(net.node_count):
        mine = values.get(i)
        if mine is None:
            excluded_missing += 1
            continue
        if net.degree(i) == 0:
            excluded_zero_degree += 1
            continue
        same = labeled = 0
        for j in net.neighbors(i):
            theirs = values.get(j)
            if theirs is None:
                continue
            labeled += 1
            if theirs == mine:
                same += 1
        if labeled == 0:
            excluded_unlabeled += 1
            continue
        fractions[i] = same / labeled
    counts = [0] * bins
    for f in fractions.values():
        k = min(int(f * bins), bins - 1)
        counts[k] += 1
    edges = tuple(k / bins for k in range(bins + 1))
    return SameFractionHistogram(
        attribute=attribute,
        fractions=fractions,
        bin_edges=edges,
        counts=tuple(counts),
        excluded_missing=excluded_missing,
        excluded_zero_degree=excluded_zero_degree,
        excluded_no_labeled_neighbors=excluded_unlabeled,
    )


@dataclass
class MixingMatrix:
    attribute: str
    categories: tuple[str, ...]
    counts: np.ndarray  # symmetric; diagonal = within-category edges, counted once
    assortativity: float  # NaN with a single category
    skipped_edges: int  # edges with a missing endpoint value

    @property
    def edge_total(self) -> int:
        """Edges counted once: trace plus the strict upper triangle."""
        m = self.counts
        return int(np.trace(m) + np.triu(m, k=1).sum())


def mixing_matrix(net: Network, attrs: NodeAttributes, attribute: str) -> MixingMatrix:
    """Edge counts by endpoint category pair, plus the assortativity coefficient.

    Each edge is counted once: within-category edges on the diagonal,
    cross-category edges mirrored into both off-diagonal cells. The
    assortativity coefficient is computed from the edge-end (doubled
    diagonal) normalization of the same counts.
    """
    values = attrs.categorical(attribute)
    categories = tuple(sorted(set(values.values())))
    index = {c: k for k, c in enumerate(categories)}
    counts = np.zeros((len(categories), len(categories)), dtype=float)
    skipped = 0
    for u, v in net.edges():
        cu, cv = values.get(u), values.get(v)
        if cu is None or cv is None:
            skipped += 1
            continue
        a, b = index[cu], index[cv]
        if a == b:
            counts[a, a] += 1
        else:
            counts[a, b] += 1
            counts[b, a] += 1
    return MixingMatrix(
        attribute=attribute,
        categories=categories,
        counts=counts,
        assortativity=_assortativity(counts),
        skipped_edges=skipped,
    )


def _assortativity(counts: np.ndarray) -> float:
    # edge-end convention: every edge contributes two ends
    e = counts.copy()
    diag = np.arange(len(e))
    e[diag, diag] *= 2.0
    total = e.sum()
    if total == 0:
        return math.nan
    e /= total
    ss = float((e @ e).sum())
    if ss == 1.0:
        return math.nan
    return (float(np.trace(e)) - ss) / (1.0 - ss)


@dataclass
class AgeGapHistogram:
    bin_width: float
    bins: tuple[tuple[float, int], ...]  # (bin start, count), ascending, gaps only
    skipped_edges: int

    def as_dict(self) -> dict[float, int]:
        return dict(self.bins)


def age_gap_distribution(
    net: Network, attrs: NodeAttributes, bin_width: float = 1.0
) -> AgeGapHistogram:
    """Histogram of |age_u - age_v| over edges with both ages known."""
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    ages = attrs.age
    counter: dict[float, int] = {}
    skipped = 0
    for u, v in net.edges():
        au, av = ages.get(u), ages.get(v)
        if au is None or av is None:
            skipped += 1
            continue
        gap = abs(au - av)
        start = math.floor(gap / bin_width) * bin_width
        counter[start] = counter.get(start, 0) + 1
    bins = tuple(sorted(counter.items()))
    return AgeGapHistogram(bin_width=bin_width, bins=bins, skipped_edges=skipped)


@dataclass
class HomophilyProfile:
    """Bundle of the three homophily views for one categorical attribute."""

    same_fraction: SameFractionHistogram
    mixing: MixingMatrix
    age_gaps: AgeGapHistogram | None


def homophily_profile(
    net: Network,
    attrs: NodeAttributes,
    attribute: str,
    bins: int = 10,
    age_bin_width: float = 1.0,
) -> HomophilyProfile:
    gaps = age_gap_distribution(net, attrs, age_bin_width) if attrs.age else None
    return HomophilyProfile(
        same_fraction=same_fraction_histogram(net, attrs, attribute, bins),
        mixing=mixing_matrix(net, attrs, attribute),
        age_gaps=gaps,
    )


# ---------------------------------------------------------------------------
# CSV outputs

def write_same_fraction_csv(result: SameFractionHistogram, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_start", "bin_end", "count"])
        for k, count in enumerate(result.counts):
            writer.writerow([repr(result.bin_edges[k]), repr(result.bin_edges[k + 1]), count])


def write_mixing_csv(result: MixingMatrix, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", *result.categories])
        for k, cat in enumerate(result.categories):
            writer.writerow([cat, *(repr(float(x)) for x in result.counts[k])])


def write_age_gaps_csv(result: AgeGapHistogram, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gap_bin_start", "count"])
        for start, count in result.bins:
            writer.writerow([repr(start), count])
