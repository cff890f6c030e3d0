"""Grid calibration of the peer-influence kernel against a target peer share.

The share of activations attributed to peers over a reference period (for
referendum-style data: the first day of voting, targeted at the share of
visits arriving through social referrals) pins a level set in (decay, p0)
space; every grid point on it is an acceptable parameter choice.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .cascade import Cascade, activity_histogram
from .errors import UndefinedFractionError
from .estimator import DEFAULT_DELTA, LABEL_PEER, PeerParams, influence_series
from .graph import Network

log = logging.getLogger(__name__)

# 17587 of 25154 first-day visits arrived through social referrals; the
# resulting share is the default calibration target (~0.699).
DEFAULT_TARGET_FRACTION = 17587 / 25154

DEFAULT_SELECT_TOLERANCE = 0.02
DEFAULT_PERIOD_LENGTH = 86400.0  # first day

ILLUSTRATIVE_PICK = (0.001, 0.6)  # (decay, p0) reference configuration


def default_decay_grid() -> tuple[float, ...]:
    return tuple(float(x) for x in np.logspace(-4, -2, 7))


def default_p0_grid() -> tuple[float, ...]:
    return tuple(round(0.1 * k, 10) for k in range(1, 10))


def peer_fraction(
    net: Network,
    cascade: Cascade,
    params: PeerParams,
    period: tuple[float, float],
    delta: float = DEFAULT_DELTA,
) -> float:
    """Share of peer-classified activations over the period (tumbling windows).

    Peer probabilities still see activations before the period start; only
    the classified set is restricted.
    """
    series = influence_series(
        net, cascade, params, delta=delta, t_start=period[0], t_end=period[1]
    )
    total = series.classified_total
    if total == 0:
        raise UndefinedFractionError(f"no activations in period {period}")
    return series.peer_total / total


@dataclass
class CalibrationGrid:
    decay_values: tuple[float, ...]
    p0_values: tuple[float, ...]
    period: tuple[float, float]
    target_fraction: float
    results: np.ndarray  # shape (len(decay_values), len(p0_values))


@dataclass
class SweepResult:
    grid: CalibrationGrid
    selected: tuple[tuple[float, float], ...]  # (decay, p0) pairs within tolerance
    nearest: tuple[float, float] | None  # closest point when nothing selected
    tolerance: float

    @property
    def illustrative_pick_selected(self) -> bool:
        return ILLUSTRATIVE_PICK in self.selected


def sweep(
    net: Network,
    cascade: Cascade,
    decay_values: tuple[float, ...] | list[float] | None,
    p0_values: tuple[float, ...] | list[float] | None,
    period: tuple[float, float],
    target: float = DEFAULT_TARGET_FRACTION,
    delta: float = DEFAULT_DELTA,
    tolerance: float = DEFAULT_SELECT_TOLERANCE,
    threads: int = 1,
) -> SweepResult:
    """Fill the peer-fraction matrix over the grid and select matching points.

    Selected points are those whose fraction is within ``tolerance`` of the
    target. When none match, the nearest point is reported instead. Grid
    cells are independent; ``threads`` caps the worker count, and results
    are always aggregated in grid order.
    """
    decays = default_decay_grid() if decay_values is None else tuple(decay_values)
    p0s = default_p0_grid() if p0_values is None else tuple(p0_values)
    if not decays or not p0s:
        raise ValueError("calibration grid must be non-empty")
    cells = [(i, j, PeerParams(p0=p0, decay=lam)) for i, lam in enumerate(decays) for j, p0 in enumerate(p0s)]

    def run(cell: tuple[int, int, PeerParams]) -> tuple[int, int, float]:
        i, j, params = cell
        return i, j, peer_fraction(net, cascade, params, period, delta)

    results = np.full((len(decays), len(p0s)), np.nan)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, cells))
    else:
        outcomes = [run(c) for c in cells]
    for i, j, frac in outcomes:
        results[i, j] = frac

    grid = CalibrationGrid(
        decay_values=decays,
        p0_values=p0s,
        period=period,
        target_fraction=target,
        results=results,
    )
    selected = tuple(
        (decays[i], p0s[j])
        for i in range(len(decays))
        for j in range(len(p0s))
        if abs(results[i, j] - target) <= tolerance
    )
    nearest = None
    if not selected:
        flat = int(np.argmin(np.abs(results - target)))
        i, j = divmod(flat, len(p0s))
        nearest = (decays[i], p0s[j])
        log.warning(
            "no grid point within %.3f of target %.3f; nearest is decay=%g p0=%g (fraction %.3f)",
            tolerance, target, decays[i], p0s[j], results[i, j],
        )
    return SweepResult(grid=grid, selected=selected, nearest=nearest, tolerance=tolerance)


def peer_curve(
    net: Network,
    cascade: Cascade,
    params: PeerParams,
    delta: float,
    curve_bin: float,
) -> np.ndarray:
    """Normalized histogram of peer-classified activation times (sums to 1)."""
    series = influence_series(net, cascade, params, delta=delta)
    peers = {node for node, lab in series.labels().items() if lab == LABEL_PEER}
    hist = activity_histogram(cascade, curve_bin, subset=peers)
    counts = np.array([c for _, c in hist], dtype=float)
    total = counts.sum()
    return counts / total if total > 0 else counts


def robustness_max_l1(
    net: Network,
    cascade: Cascade,
    selected: tuple[tuple[float, float], ...],
    delta: float = DEFAULT_DELTA,
    curve_bin: float = 86400.0,
    cap: int = 10,
) -> float | None:
    """Largest pairwise L1 distance between normalized peer-count curves of
    the selected parameter pairs (None with fewer than two; capped for cost).

    Reported as a robustness diagnostic: parameter pairs matching the same
    target should produce similar peer activation curves.
    """
    picks = selected[:cap]
    if len(picks) < 2:
        return None
    curves = [
        peer_curve(net, cascade, PeerParams(p0=p0, decay=lam), delta, curve_bin)
        for lam, p0 in picks
    ]
    return max(float(np.abs(a - b).sum()) for a, b in combinations(curves, 2))


def default_period(cascade: Cascade, length: float = DEFAULT_PERIOD_LENGTH) -> tuple[float, float]:
    """First ``length`` seconds starting at the first activation."""
    times = cascade.times[np.isfinite(cascade.times)]
    if times.size == 0:
        raise UndefinedFractionError("cascade has no activations")
    start = float(times.min())
    return (start, min(start + length, cascade.horizon[1]))
