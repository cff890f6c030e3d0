"""Synthetic cascade generator with ground-truth activation labels.

Discrete steps t = 1..steps on a fixed network. Each activated node spreads
exponentially decaying pressure ``p0 * exp(-decay * (t - t_k))`` to its
neighbors; external events ("spikes") apply ``q0 * exp(-decay_e * (t - fire_at))``
uniformly to every non-activated node from their firing step on. Per step,
each non-activated node draws one Bernoulli against the combined peer hazard
and an independent one against the external hazard; firing activates the node
with the matching label, and when both fire the label is a fair coin flip
(flagged in the output).
"""

from __future__ import annotations

import csv
import logging
import math
import random
from dataclasses import dataclass, field

from .cascade import Cascade
from .errors import FormatError
from .estimator import PeerParams, combine_pressures
from .graph import Network

log = logging.getLogger(__name__)

LABEL_SEED = "seed"
LABEL_PEER = "peer"
LABEL_EXTERNAL = "external"

DEFAULT_PEER = PeerParams(p0=0.03, decay=0.02)
DEFAULT_SPIKE_Q0 = 0.2
DEFAULT_SPIKE_DECAY = 0.3
DEFAULT_SPIKE_STEPS = (5, 15)
DEFAULT_STEPS = 30


@dataclass(frozen=True)
class ExternalSpike:
    """One external event: strength ``q0`` decaying at ``decay`` from step ``fire_at``."""

    q0: float
    decay: float
    fire_at: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.q0 <= 1.0:
            raise ValueError(f"q0 must be in [0, 1], got {self.q0}")
        if self.decay < 0.0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")
        if self.fire_at < 0:
            raise ValueError(f"fire_at must be >= 0, got {self.fire_at}")


def default_spikes() -> tuple[ExternalSpike, ...]:
    return tuple(
        ExternalSpike(DEFAULT_SPIKE_Q0, DEFAULT_SPIKE_DECAY, float(s)) for s in DEFAULT_SPIKE_STEPS
    )


@dataclass
class SimConfig:
    peer: PeerParams = DEFAULT_PEER
    spikes: tuple[ExternalSpike, ...] = field(default_factory=default_spikes)
    steps: int = DEFAULT_STEPS
    seed_node: int | str = "random"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")


@dataclass(frozen=True, eq=False)
class LabeledCascade:
    """Simulated cascade plus per-activated-node ground-truth labels."""

    cascade: Cascade
    labels: dict[int, str]
    both_fired: frozenset[int]

    @property
    def seed_node(self) -> int:
        for node, label in self.labels.items():
            if label == LABEL_SEED:
                return node
        raise ValueError("labeled cascade has no seed node")


def external_hazard(spikes: tuple[ExternalSpike, ...], t: float) -> float:
    """Combined activation probability applied network-wide at step t."""
    return combine_pressures(
        s.q0 * math.exp(-s.decay * (t - s.fire_at)) for s in spikes if s.fire_at <= t
    )


def simulate(net: Network, cfg: SimConfig) -> LabeledCascade:
    """Run the cascade; identical (net, cfg) pairs reproduce bit-for-bit.

    The seed node activates at step 0. Nodes are visited in ascending id
    order with two uniform draws each (peer, then external) per step, so the
    random stream, and therefore the output, is fully determined by
    ``cfg.rng_seed``. A node activated at step t starts influencing at t+1.
    """
    n = net.node_count
    if n == 0:
        raise ValueError("cannot simulate on an empty network")
    rng = random.Random(cfg.rng_seed)
    if cfg.seed_node == "random":
        seed = rng.randrange(n)
    else:
        seed = int(cfg.seed_node)
        if not 0 <= seed < n:
            raise ValueError(f"seed node {seed} out of range")
    times: list[float] = [math.inf] * n
    times[seed] = 0.0
    labels: dict[int, str] = {seed: LABEL_SEED}
    both: set[int] = set()
    p0 = cfg.peer.p0
    decay = cfg.peer.decay
    adj = [net.neighbors(i) for i in range(n)]
    for step in range(1, cfg.steps + 1):
        t = float(step)
        h_ext = external_hazard(cfg.spikes, t)
        for i in range(n):
            if times[i] != math.inf:
                continue
            qs = []
            for k in adj[i]:
                tk = times[k]
                if tk < t:
                    qs.append(p0 * math.exp(-decay * (t - tk)))
            h_peer = combine_pressures(qs)
            peer_fire = rng.random() < h_peer
            ext_fire = rng.random() < h_ext
            if peer_fire and ext_fire:
                times[i] = t
                both.add(i)
                labels[i] = LABEL_PEER if rng.random() < 0.5 else LABEL_EXTERNAL
            elif peer_fire:
                times[i] = t
                labels[i] = LABEL_PEER
            elif ext_fire:
                times[i] = t
                labels[i] = LABEL_EXTERNAL
    cascade = Cascade(times, horizon=(0.0, float(cfg.steps)))
    return LabeledCascade(cascade=cascade, labels=labels, both_fired=frozenset(both))


# ---------------------------------------------------------------------------
# flat config files and label CSV output

_CONFIG_KEYS = ("steps", "p0", "lambda_p", "q0", "lambda_e", "fire_at", "spikes", "seed_node", "rng_seed")


def read_config(path: str) -> dict[str, str]:
    """Parse a flat ``key=value`` config file ('#' starts a comment)."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path} line {lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise FormatError(f"{path} line {lineno}: unknown key {key!r}")
            out[key] = value
    return out


def parse_spike_spec(text: str) -> ExternalSpike:
    """Parse one ``fire_at:q0:decay`` spike specification."""
    parts = text.split(":")
    if len(parts) != 3:
        raise FormatError(f"bad spike spec {text!r}; expected fire_at:q0:decay")
    try:
        fire_at, q0, decay = (float(p) for p in parts)
    except ValueError:
        raise FormatError(f"bad spike spec {text!r}; expected three numbers") from None
    return ExternalSpike(q0=q0, decay=decay, fire_at=fire_at)


def write_labels_csv(result: LabeledCascade, net: Network, path: str) -> None:
    """Ground-truth labels as ``id,label,both_fired`` with original ids."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "both_fired"])
        for i in result.cascade.activated():
            writer.writerow([net.original_id(i), result.labels[i], int(i in result.both_fired)])


def read_labels_csv(path: str, net: Network) -> tuple[dict[int, str], set[int]]:
    """Inverse of :func:`write_labels_csv`; unknown ids are skipped with a warning."""
    index = net.dense_index()
    labels: dict[int, str] = {}
    both: set[int] = set()
    skipped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty labels file")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path} line {reader.line_num}: expected three columns")
            node = index.get(row[0].strip())
            if node is None:
                skipped += 1
                continue
            labels[node] = row[1].strip()
            if row[2].strip() not in ("0", ""):
                both.add(node)
    if skipped:
        log.warning("skipped %d label row(s) whose id is not in the network", skipped)
    return labels, both
