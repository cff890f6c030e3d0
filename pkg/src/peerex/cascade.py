"""Activation cascades: per-node activation times over an observation horizon.

Times live on a single scalar timeline: epoch seconds for real data,
integer step indices for simulations. Non-activated nodes carry +inf.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError
from .graph import Network

log = logging.getLogger(__name__)

NEVER = math.inf


class Cascade:
    """Immutable map node id -> activation time, plus the observation horizon.

    ``times`` is a read-only float array of length ``node_count`` with +inf
    for nodes that never activated. Every finite time lies inside the
    horizon, and each node activates at most once by construction.
    """

    __slots__ = ("times", "horizon")

    def __init__(self, times: Sequence[float], horizon: tuple[float, float] | None = None):
        arr = np.array(times, dtype=float)
        if np.isnan(arr).any():
            raise ValueError("activation times must not be NaN")
        finite = arr[np.isfinite(arr)]
        if horizon is None:
            if finite.size == 0:
                raise ValueError("horizon is required for a cascade with no activations")
            horizon = (float(finite.min()), float(finite.max()))
        t0, t1 = float(horizon[0]), float(horizon[1])
        if t1 < t0:
            raise ValueError(f"horizon end {t1} before start {t0}")
        if finite.size and (float(finite.min()) < t0 or float(finite.max()) > t1):
            raise ValueError("activation time outside horizon")
        arr.setflags(write=False)
        self.times = arr
        self.horizon = (t0, t1)

    @classmethod
    def from_dict(
        cls,
        activation: Mapping[int, float],
        node_count: int,
        horizon: tuple[float, float] | None = None,
    ) -> "Cascade":
        times = [NEVER] * node_count
        for i, t in activation.items():
            times[i] = float(t)
        return cls(times, horizon)

    @property
    def node_count(self) -> int:
        return len(self.times)

    @property
    def activated_count(self) -> int:
        return int(np.isfinite(self.times).sum())

    def activation_time(self, i: int) -> float | None:
        t = float(self.times[i])
        return t if math.isfinite(t) else None

    def activated(self) -> list[int]:
        """Activated node ids, ascending."""
        return np.nonzero(np.isfinite(self.times))[0].tolist()

    def __repr__(self) -> str:
        return f"Cascade(nodes={self.node_count}, activated={self.activated_count}, horizon={self.horizon})"


@dataclass(frozen=True)
class Window:
    """Closed time window [end - delta, end]."""

    end: float
    delta: float

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError("window delta must be positive")

    @property
    def start(self) -> float:
        return self.end - self.delta


def newly_activated(cascade: Cascade, window: Window) -> set[int]:
    """Nodes whose activation time falls in [end - delta, end], both ends inclusive."""
    t = cascade.times
    mask = (t >= window.start) & (t <= window.end)
    return set(np.nonzero(mask)[0].tolist())


def non_activated(cascade: Cascade, t: float) -> set[int]:
    """Nodes not yet activated at time t: activation strictly later, or never.

    A node activating exactly at t counts as activated, not non-activated.
    """
    return set(np.nonzero(cascade.times > t)[0].tolist())


def activity_histogram(
    cascade: Cascade,
    bin_width: float,
    subset: Iterable[int] | None = None,
) -> list[tuple[float, int]]:
    """Activation counts per consecutive bin over the horizon.

    Bins are [start, start + bin_width) except the last, which also includes
    the horizon end. With ``subset`` given, only those nodes are counted;
    the returned series always spans the whole horizon (zeros included).
    """
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    t0, t1 = cascade.horizon
    span = t1 - t0
    nbins = max(1, math.ceil(span / bin_width)) if span > 0 else 1
    counts = [0] * nbins
    wanted = None if subset is None else set(subset)
    for i in np.nonzero(np.isfinite(cascade.times))[0].tolist():
        if wanted is not None and i not in wanted:
            continue
        k = int((float(cascade.times[i]) - t0) // bin_width)
        if k >= nbins:
            k = nbins - 1
        counts[k] += 1
    return [(t0 + k * bin_width, counts[k]) for k in range(nbins)]


# ---------------------------------------------------------------------------
# CSV interfaces

def parse_timestamp(text: str, time_format: str = "epoch", utc_offset: float | None = None) -> float:
    """Parse one timestamp cell to epoch seconds.

    ``epoch`` accepts integer/float seconds. ``iso`` accepts ISO-8601; naive
    stamps are interpreted at ``utc_offset`` hours (default UTC).
    """
    if time_format == "epoch":
        return float(text)
    if time_format == "iso":
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone(timedelta(hours=utc_offset or 0.0)))
        return dt.timestamp()
    raise ValueError(f"unknown time format {time_format!r}")


def read_activation_rows(
    path: str,
    time_format: str = "epoch",
    utc_offset: float | None = None,
) -> list[tuple[str, float]]:
    """Read an ``id,timestamp`` CSV into (original id, epoch seconds) pairs."""
    out: list[tuple[str, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty activation file")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path} line {reader.line_num}: expected two columns, got {len(row)}")
            try:
                t = parse_timestamp(row[1].strip(), time_format, utc_offset)
            except ValueError:
                raise FormatError(f"{path} line {reader.line_num}: bad timestamp {row[1]!r}") from None
            out.append((row[0].strip(), t))
    return out


def cascade_from_rows(
    rows: Iterable[tuple[str, float]],
    net: Network,
    horizon: tuple[float, float] | None = None,
    clip: tuple[float | None, float | None] | None = None,
) -> Cascade:
    """Assemble a cascade against a network's id space.

    Rows naming ids outside the network are skipped (count logged); a second
    activation for the same node is an error. ``clip=(t0, t1)`` drops
    activations outside the given bounds and pins the horizon to them.
    """
    index = net.dense_index()
    activation: dict[int, float] = {}
    skipped_unknown = clipped = 0
    lo = clip[0] if clip else None
    hi = clip[1] if clip else None
    for lineno, (orig, t) in enumerate(rows, start=1):
        node = index.get(orig)
        if node is None:
            skipped_unknown += 1
            continue
        if (lo is not None and t < lo) or (hi is not None and t > hi):
            clipped += 1
            continue
        if node in activation:
            raise FormatError(f"activation row {lineno}: node {orig!r} activated twice")
        activation[node] = t
    if skipped_unknown:
        log.warning("skipped %d activation row(s) whose id is not in the network", skipped_unknown)
    if clipped:
        log.warning("dropped %d activation(s) outside the requested time window", clipped)
    if horizon is None and clip is not None:
        ts = list(activation.values())
        start = lo if lo is not None else (min(ts) if ts else None)
        end = hi if hi is not None else (max(ts) if ts else None)
        if start is not None and end is not None:
            horizon = (start, end)
    return Cascade.from_dict(activation, net.node_count, horizon)


def read_cascade_csv(
    path: str,
    net: Network,
    time_format: str = "epoch",
    utc_offset: float | None = None,
    horizon: tuple[float, float] | None = None,
    clip: tuple[float | None, float | None] | None = None,
) -> Cascade:
    return cascade_from_rows(read_activation_rows(path, time_format, utc_offset), net, horizon, clip)


def write_cascade_csv(cascade: Cascade, net: Network, path: str) -> None:
    """Write activated nodes as ``id,timestamp`` using original ids."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "timestamp"])
        for i in cascade.activated():
            writer.writerow([net.original_id(i), repr(float(cascade.times[i]))])


def read_groups_csv(path: str) -> dict[str, str]:
    """Read an ``id,group`` CSV into an original-id -> group label map."""
    out: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty group file")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path} line {reader.line_num}: expected two columns, got {len(row)}")
            out[row[0].strip()] = row[1].strip()
    return out
