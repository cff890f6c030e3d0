"""Peer/external decomposition of an activation cascade.

Model: an activated neighbor k of node i applies activation pressure
``p0 * exp(-decay * (t - t_k))``. Pressures act independently, so node i's
peer-activation probability at time t is

    p_i(t) = 1 - prod over {k in N(i): t_k < t} of (1 - p0 * exp(-decay * (t - t_k)))

The classification threshold mu(t) is the mean of p_i(t) over all nodes not
yet activated at t (never-activated nodes included). A node activating in a
window [t - delta, t] is classified peer-driven when p_i(t) - mu(t) >= 0,
external otherwise, with one exception: when mu(t) = 0 and p_i(t) = 0 the
activation cannot be explained by peers at all and is classified external.
"""

from __future__ import annotations

import csv
import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from math import exp, expm1, fsum, log1p
from typing import Iterable, Mapping

from .cascade import Cascade, Window, newly_activated
from .errors import DegenerateStateError
from .graph import Network

# Above this many activated neighbors the non-activation product is evaluated
# in log space to avoid underflow on hubs.
DIRECT_PRODUCT_MAX_FACTORS = 32

EVAL_WINDOW_END = "window-end"
EVAL_ACTIVATION_TIME = "activation-time"
EVAL_MODES = (EVAL_WINDOW_END, EVAL_ACTIVATION_TIME)

LABEL_PEER = "peer"
LABEL_EXTERNAL = "external"

DEFAULT_P0 = 0.6
DEFAULT_DECAY = 0.001
DEFAULT_DELTA = 7200.0  # two hours, in seconds


@dataclass(frozen=True)
class PeerParams:
    """Exponential peer-influence kernel: initial strength ``p0``, rate ``decay``."""

    p0: float
    decay: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError(f"p0 must be in [0, 1], got {self.p0}")
        if self.decay < 0.0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")


def combine_pressures(pressures: Iterable[float]) -> float:
    """1 - prod(1 - q) over the given pressures, in the given order.

    Uses a direct product up to DIRECT_PRODUCT_MAX_FACTORS factors and a
    log1p/expm1 path beyond that; both agree to well under 1e-12.
    """
    qs = list(pressures)
    if not qs:
        return 0.0
    if len(qs) <= DIRECT_PRODUCT_MAX_FACTORS:
        prod = 1.0
        for q in qs:
            prod *= 1.0 - q
        return 1.0 - prod
    total = 0.0
    for q in qs:
        if q >= 1.0:
            return 1.0
        total += log1p(-q)
    return -expm1(total)


class _Evaluator:
    """Shared state for repeated peer-probability queries on one cascade."""

    __slots__ = ("adj", "times", "p0", "decay", "node_count")

    def __init__(self, net: Network, cascade: Cascade, params: PeerParams):
        if cascade.node_count != net.node_count:
            raise ValueError(
                f"cascade covers {cascade.node_count} nodes but network has {net.node_count}"
            )
        self.node_count = net.node_count
        self.adj = [net.neighbors(i) for i in range(net.node_count)]
        self.times = cascade.times.tolist()
        self.p0 = params.p0
        self.decay = params.decay

    def prob(self, i: int, t: float) -> float:
        # neighbors are id-sorted, fixing the product order
        p0 = self.p0
        decay = self.decay
        times = self.times
        qs = []
        for k in self.adj[i]:
            tk = times[k]
            if tk < t:
                qs.append(p0 * exp(-decay * (t - tk)))
        return combine_pressures(qs)

    def non_activated_ids(self, t: float) -> list[int]:
        return [i for i, ti in enumerate(self.times) if ti > t]

    def mean_non_activated(self, t: float) -> tuple[float, int]:
        ids = self.non_activated_ids(t)
        if not ids:
            raise DegenerateStateError(
                f"no non-activated nodes at t={t}; the network is saturated"
            )
        return fsum(self.prob(i, t) for i in ids) / len(ids), len(ids)


def peer_probability(net: Network, cascade: Cascade, params: PeerParams, node: int, t: float) -> float:
    """Probability that ``node`` would have been activated by its already
    activated neighbors by time ``t``; 0 when it has none."""
    if not 0 <= node < net.node_count:
        raise ValueError(f"node {node} out of range")
    return _Evaluator(net, cascade, params).prob(node, t)


def mean_nonactivated_probability(
    net: Network, cascade: Cascade, params: PeerParams, t: float
) -> tuple[float, int]:
    """Mean peer-activation probability over nodes not yet activated at ``t``,
    plus the size of that set. Raises DegenerateStateError when it is empty."""
    return _Evaluator(net, cascade, params).mean_non_activated(t)


@dataclass(frozen=True)
class NodeClassification:
    node: int
    activation_time: float
    probability: float  # p_i at the evaluation time used for this node
    threshold: float    # mu used for this node
    label: str


@dataclass(frozen=True)
class WindowDecomposition:
    """Per-window split of newly activated nodes into peer and external."""

    window: Window
    peer_count: int
    external_count: int
    peer_nodes: frozenset[int]
    external_nodes: frozenset[int]
    mu: float
    newly_activated_count: int
    details: tuple[NodeClassification, ...] = ()


def _classify(p: float, mu: float) -> str:
    if mu == 0.0 and p == 0.0:
        return LABEL_EXTERNAL
    return LABEL_PEER if p - mu >= 0.0 else LABEL_EXTERNAL


def _decompose(
    ev: _Evaluator,
    window: Window,
    nodes: Iterable[int],
    eval_at: str,
) -> WindowDecomposition:
    t = window.end
    mu, _ = ev.mean_non_activated(t)
    newly = sorted(nodes)
    peer: list[int] = []
    external: list[int] = []
    details: list[NodeClassification] = []
    mu_cache: dict[float, float] = {t: mu}
    for i in newly:
        if eval_at == EVAL_WINDOW_END:
            te = t
        else:
            te = ev.times[i]
        mu_i = mu_cache.get(te)
        if mu_i is None:
            mu_i = ev.mean_non_activated(te)[0]
            mu_cache[te] = mu_i
        p = ev.prob(i, te)
        label = _classify(p, mu_i)
        (peer if label == LABEL_PEER else external).append(i)
        details.append(NodeClassification(i, ev.times[i], p, mu_i, label))
    return WindowDecomposition(
        window=window,
        peer_count=len(peer),
        external_count=len(external),
        peer_nodes=frozenset(peer),
        external_nodes=frozenset(external),
        mu=mu,
        newly_activated_count=len(newly),
        details=tuple(details),
    )


def decompose_window(
    net: Network,
    cascade: Cascade,
    params: PeerParams,
    window: Window,
    eval_at: str = EVAL_WINDOW_END,
    nodes: Iterable[int] | None = None,
) -> WindowDecomposition:
    """Classify the window's newly activated nodes as peer or external.

    Both p_i and mu are evaluated at the window end by default; with
    ``eval_at="activation-time"`` each node is judged at its own activation
    time instead (the reported window ``mu`` stays the window-end value).
    ``nodes`` overrides the newly-activated set; :func:`influence_series`
    uses it to assign each activation to exactly one tumbling window.
    """
    if eval_at not in EVAL_MODES:
        raise ValueError(f"eval_at must be one of {EVAL_MODES}")
    ev = _Evaluator(net, cascade, params)
    if nodes is None:
        nodes = newly_activated(cascade, window)
    return _decompose(ev, window, nodes, eval_at)


@dataclass(frozen=True)
class InfluenceSeries:
    """Ordered window decompositions over a horizon.

    ``saturated_at`` is the end of the first window at which every node was
    already activated; the series stops there because the classification
    threshold is undefined on a saturated network.
    """

    windows: tuple[WindowDecomposition, ...]
    delta: float
    stride: float
    eval_at: str
    saturated_at: float | None = None

    @property
    def peer_total(self) -> int:
        return sum(w.peer_count for w in self.windows)

    @property
    def external_total(self) -> int:
        return sum(w.external_count for w in self.windows)

    @property
    def classified_total(self) -> int:
        return sum(w.newly_activated_count for w in self.windows)

    def labels(self) -> dict[int, str]:
        """Per-node label; first classification wins when windows overlap."""
        out: dict[int, str] = {}
        for w in self.windows:
            for d in w.details:
                out.setdefault(d.node, d.label)
        return out


def _window_ends(t_start: float, t_end: float, delta: float, stride: float) -> list[float]:
    ends: list[float] = []
    k = 0
    while True:
        t = t_start + delta + k * stride
        if t >= t_end:
            break
        ends.append(t)
        k += 1
    ends.append(max(t_end, t_start + delta))
    return ends


def influence_series(
    net: Network,
    cascade: Cascade,
    params: PeerParams,
    delta: float,
    stride: float | None = None,
    eval_at: str = EVAL_WINDOW_END,
    t_start: float | None = None,
    t_end: float | None = None,
) -> InfluenceSeries:
    """Decompose the cascade window by window across the horizon.

    Windows end at t_start + delta, then advance by ``stride`` (default:
    ``delta``), with a final window ending at the horizon end. When stride
    equals delta the windows tumble: each activation is assigned to exactly
    one window (the first whose end is >= its activation time), so series
    totals are well-defined. With stride < delta windows overlap and a node
    may be counted several times; that mode is for visualization.

    ``t_start``/``t_end`` restrict the windows to a sub-period while peer
    probabilities still see the full activation history.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if stride is not None and stride <= 0:
        raise ValueError("stride must be positive")
    h0, h1 = cascade.horizon
    t0 = h0 if t_start is None else float(t_start)
    t1 = h1 if t_end is None else float(t_end)
    if t1 < t0:
        raise ValueError("empty period")
    tumbling = stride is None or stride == delta
    stride_eff = delta if tumbling else float(stride)
    ends = _window_ends(t0, t1, delta, stride_eff)

    ev = _Evaluator(net, cascade, params)
    assigned: dict[int, list[int]] = {}
    if tumbling:
        # exact one-window assignment, immune to float boundary wobble
        for i, ti in enumerate(ev.times):
            if not math.isfinite(ti) or ti < t0 or ti > t1:
                continue
            assigned.setdefault(bisect_left(ends, ti), []).append(i)

    windows: list[WindowDecomposition] = []
    saturated_at: float | None = None
    for k, end in enumerate(ends):
        window = Window(end=end, delta=delta)
        if tumbling:
            nodes: Iterable[int] = assigned.get(k, [])
        else:
            nodes = {i for i in newly_activated(cascade, window) if t0 <= ev.times[i] <= t1}
        try:
            windows.append(_decompose(ev, window, nodes, eval_at))
        except DegenerateStateError:
            saturated_at = end
            break
    return InfluenceSeries(
        windows=tuple(windows),
        delta=delta,
        stride=stride_eff,
        eval_at=eval_at,
        saturated_at=saturated_at,
    )


# ---------------------------------------------------------------------------
# baseline classifier

def baseline_external(
    net: Network, cascade: Cascade, window: Window
) -> tuple[set[int], set[int]]:
    """Prior-work rule: a newly activated node is external iff it had no
    activated friend strictly before its own activation time.

    Returns (peer_nodes, external_nodes) for the window's newly activated set.
    """
    times = cascade.times
    peer: set[int] = set()
    external: set[int] = set()
    for i in newly_activated(cascade, window):
        ti = float(times[i])
        if any(times[k] < ti for k in net.neighbors(i)):
            peer.add(i)
        else:
            external.add(i)
    return peer, external


def baseline_labels(net: Network, cascade: Cascade) -> dict[int, str]:
    """Baseline label for every activated node (window-independent)."""
    times = cascade.times
    out: dict[int, str] = {}
    for i in cascade.activated():
        ti = float(times[i])
        has_prior = any(times[k] < ti for k in net.neighbors(i))
        out[i] = LABEL_PEER if has_prior else LABEL_EXTERNAL
    return out


# ---------------------------------------------------------------------------
# evaluation against ground truth

def confusion_counts(
    truth: Mapping[int, str], predicted: Mapping[int, str], labels: tuple[str, str] = (LABEL_PEER, LABEL_EXTERNAL)
) -> dict[tuple[str, str], int]:
    """Counts keyed by (true label, predicted label), over nodes present in
    both maps and carrying one of the given true labels."""
    out = {(a, b): 0 for a in labels for b in labels}
    for node, t_label in truth.items():
        if t_label not in labels:
            continue
        p_label = predicted.get(node)
        if p_label is None or p_label not in labels:
            continue
        out[(t_label, p_label)] += 1
    return out


def balanced_accuracy(
    truth: Mapping[int, str], predicted: Mapping[int, str], labels: tuple[str, str] = (LABEL_PEER, LABEL_EXTERNAL)
) -> float:
    """Mean per-class recall over the given labels (classes without any
    ground-truth members are left out of the mean)."""
    counts = confusion_counts(truth, predicted, labels)
    recalls = []
    for a in labels:
        total = sum(counts[(a, b)] for b in labels)
        if total:
            recalls.append(counts[(a, a)] / total)
    if not recalls:
        raise ValueError("no overlapping labeled nodes to score")
    return sum(recalls) / len(recalls)


# ---------------------------------------------------------------------------
# serialization

SERIES_COLUMNS = ("window_end", "newly_activated", "peer_count", "external_count", "mu")


def write_series_csv(series: InfluenceSeries, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_COLUMNS)
        for w in series.windows:
            writer.writerow(
                [repr(w.window.end), w.newly_activated_count, w.peer_count, w.external_count, repr(w.mu)]
            )


def series_to_dict(series: InfluenceSeries) -> dict:
    return {
        "delta": series.delta,
        "stride": series.stride,
        "eval_at": series.eval_at,
        "saturated_at": series.saturated_at,
        "totals": {
            "newly_activated": series.classified_total,
            "peer": series.peer_total,
            "external": series.external_total,
        },
        "windows": [
            {
                "window_end": w.window.end,
                "newly_activated": w.newly_activated_count,
                "peer_count": w.peer_count,
                "external_count": w.external_count,
                "mu": w.mu,
            }
            for w in series.windows
        ],
    }


def write_series_json(series: InfluenceSeries, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(series_to_dict(series), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_per_node_csv(series: InfluenceSeries, net: Network, path: str) -> None:
    """One row per classified activation: ``id,t_i,window_end,p_i,mu,label``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "t_i", "window_end", "p_i", "mu", "label"])
        for w in series.windows:
            for d in w.details:
                writer.writerow(
                    [
                        net.original_id(d.node),
                        repr(d.activation_time),
                        repr(w.window.end),
                        repr(d.probability),
                        repr(d.threshold),
                        d.label,
                    ]
                )


def write_per_node_json(series: InfluenceSeries, net: Network, path: str) -> None:
    rows = [
        {
            "id": net.original_id(d.node),
            "t_i": d.activation_time,
            "window_end": w.window.end,
            "p_i": d.probability,
            "mu": d.threshold,
            "label": d.label,
        }
        for w in series.windows
        for d in w.details
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_baseline_csv(
    net: Network, cascade: Cascade, series: InfluenceSeries, path: str
) -> None:
    """Baseline peer/external counts over the same windows as ``series``.

    Baseline labels depend only on each node's own activation time, so each
    activation is counted in the window that classified it in ``series``.
    """
    labels = baseline_labels(net, cascade)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_end", "peer_count", "external_count"])
        for w in series.windows:
            members = sorted(w.peer_nodes | w.external_nodes)
            n_peer = sum(1 for i in members if labels[i] == LABEL_PEER)
            writer.writerow([repr(w.window.end), n_peer, len(members) - n_peer])
