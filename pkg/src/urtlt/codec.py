"""URT-LT encoder and belief-propagation peeling decoder.

Input symbols are numbered layer by layer (base layer first), so the layer of
an id is a range check.  Neighbors are drawn one at a time without
replacement, each remaining input being picked with probability proportional
to the weight of its layer.  The decoder keeps a cloud of unresolved output
symbols and a ripple of recovered but unprocessed inputs, and processes ripple
entries in uniformly random order.
"""

from __future__ import annotations

import enum
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .degree import DegreeDistribution
from .state import DecoderState


class ConfigError(ValueError):
    """A layer configuration violates one of its invariants."""


@dataclass(frozen=True)
class LayerConfig:
    """Code parameters: ``k`` inputs split into layers of ``alpha[n] * k``
    symbols, selected with relative weights ``beta`` (``beta[-1] == 1``)."""

    k: int
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    sizes: tuple[int, ...] = field(init=False)
    starts: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if self.k < 1:
            raise ConfigError("k must be a positive integer")
        if len(alpha) < 1 or len(alpha) != len(beta):
            raise ConfigError("alpha and beta must be nonempty and of equal length")
        if abs(math.fsum(alpha) - 1.0) > 1e-9:
            raise ConfigError(f"sum(alpha) must equal 1, got {math.fsum(alpha)!r}")
        sizes = []
        for a in alpha:
            n = a * self.k
            if abs(n - round(n)) > 1e-9 or round(n) < 1:
                raise ConfigError(f"alpha_n * k must be a positive integer, got {n!r}")
            sizes.append(int(round(n)))
        if any(b < 0 for b in beta):
            raise ConfigError("beta must be nonnegative")
        if beta[-1] != 1.0:
            raise ConfigError(f"beta must end with 1 (last layer is the reference), got {beta[-1]!r}")
        if any(b1 < b2 for b1, b2 in zip(beta, beta[1:])):
            raise ConfigError(f"beta must be nonincreasing, got {list(beta)}")
        object.__setattr__(self, "sizes", tuple(sizes))
        starts = [0]
        for s in sizes[:-1]:
            starts.append(starts[-1] + s)
        object.__setattr__(self, "starts", tuple(starts))

    @classmethod
    def two_layer(cls, k: int, alpha: float = 0.5, beta: float = 1.0) -> "LayerConfig":
        return cls(k, (alpha, 1.0 - alpha), (beta, 1.0))

    @property
    def n_layers(self) -> int:
        return len(self.sizes)

    def layer_of(self, sid: int) -> int:
        return bisect_right(self.starts, sid) - 1

    def layer_range(self, n: int) -> range:
        return range(self.starts[n], self.starts[n] + self.sizes[n])

    def weights(self, excluded: Iterable[int] = ()) -> np.ndarray:
        """Per-input selection weight with excluded layers zeroed."""
        w = np.repeat(np.asarray(self.beta), self.sizes)
        for n in excluded:
            w[self.layer_range(n).start : self.layer_range(n).stop] = 0.0
        return w


@dataclass(frozen=True)
class InputBlock:
    """``k`` equal-width input symbols."""

    symbols: tuple[bytes, ...]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("empty input block")
        width = len(self.symbols[0])
        if any(len(s) != width for s in self.symbols):
            raise ValueError("input symbols must share one width")

    @classmethod
    def from_bytes(cls, data: bytes, k: int) -> "InputBlock":
        width = max(1, -(-len(data) // k))
        padded = data.ljust(width * k, b"\0")
        return cls(tuple(padded[i * width : (i + 1) * width] for i in range(k)))

    @property
    def width(self) -> int:
        return len(self.symbols[0])

    def as_ints(self) -> list[int]:
        return [int.from_bytes(s, "big") for s in self.symbols]


@dataclass(frozen=True)
class OutputSymbol:
    neighbors: tuple[int, ...]
    payload: bytes | None
    layer_counts: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.neighbors)


def _xor(values: Iterable[int]) -> int:
    acc = 0
    for v in values:
        acc ^= v
    return acc


def select_neighbors(
    config: LayerConfig,
    degree: int,
    rng: np.random.Generator,
    excluded: Iterable[int] = (),
    weights: np.ndarray | None = None,
) -> tuple[int, ...]:
    """Draw ``degree`` distinct inputs by sequential weighted sampling.

    Sorting exponential keys ``E_s / w_s`` and keeping the smallest is the
    same law as drawing one input at a time with probability proportional to
    its weight among those left.
    """
    w = config.weights(excluded) if weights is None else weights
    selectable = int(np.count_nonzero(w))
    if selectable == 0:
        raise ValueError("no selectable input symbols")
    degree = min(degree, selectable)
    with np.errstate(divide="ignore"):
        keys = rng.standard_exponential(config.k) / w
    if degree == config.k:
        chosen = np.arange(config.k)
    else:
        chosen = np.argpartition(keys, degree - 1)[:degree]
    return tuple(sorted(int(s) for s in chosen))


def encode_next(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    rng: np.random.Generator,
    excluded: Iterable[int] = (),
    block: InputBlock | None = None,
) -> OutputSymbol:
    """Generate one output symbol.

    The sampled degree is clamped to the number of selectable inputs, which
    only matters once layers are excluded.  Without ``block`` the symbol
    carries no payload.
    """
    degree = degree_dist.sample(rng)
    neighbors = select_neighbors(config, degree, rng, tuple(excluded))
    counts = [0] * config.n_layers
    for s in neighbors:
        counts[config.layer_of(s)] += 1
    payload = None
    if block is not None:
        ints = block.as_ints()
        payload = _xor(ints[s] for s in neighbors).to_bytes(block.width, "big")
    return OutputSymbol(neighbors, payload, tuple(counts))


class Arrival(enum.Enum):
    REDUNDANT = "redundant"
    RIPPLE = "ripple"
    CLOUD = "cloud"


@dataclass(frozen=True)
class StepReport:
    processed: int
    layer: int
    releases: tuple[int, ...]
    additions: tuple[int, ...]


@dataclass(frozen=True)
class TerminalSnapshot:
    L: tuple[int, ...]
    cloud: tuple[int, ...]
    eps0: int
    epsR: int

    @property
    def R(self) -> tuple[int, ...]:
        return (0,) * len(self.L)


class _CloudEntry:
    __slots__ = ("remaining", "payload", "degree", "phase")

    def __init__(self, remaining: set[int], payload: int | None, degree: int, phase: int):
        self.remaining = remaining
        self.payload = payload
        self.degree = degree
        self.phase = phase


class DecoderCore:
    """Peeling decoder.  Payloads are optional: with ``payload=None`` symbols
    the decoder tracks structure only, which is what the simulations use."""

    def __init__(self, config: LayerConfig):
        self.config = config
        k = config.k
        self._layer = [config.layer_of(s) for s in range(k)]
        self.processed = [False] * k
        self.recovered: dict[int, int | None] = {}
        self.ripple: list[int] = []
        self._cloud: dict[int, _CloudEntry] = {}
        self._members: list[set[int]] = [set() for _ in range(k)]
        self._next_id = 0
        self.unprocessed = list(config.sizes)
        self.ripple_counts = [0] * config.n_layers
        self.eps0 = 0
        self.epsR = 0
        self.received = 0
        self.phase = 0

    # -- construction helpers ------------------------------------------------

    @classmethod
    def restore(
        cls,
        config: LayerConfig,
        processed: Iterable[int],
        ripple: Iterable[int],
        cloud: Iterable[Sequence[int]],
        payloads: Sequence[int] | None = None,
    ) -> "DecoderCore":
        """Rebuild a decoder from explicit processed ids, ripple ids and the
        original neighbor sets of the cloud symbols.

        Cloud symbols keep every unprocessed neighbor, ripple members
        included.  Each must retain at least two.
        """
        core = cls(config)
        for s in processed:
            core.processed[s] = True
            core.recovered[s] = None if payloads is None else payloads[s]
            core.unprocessed[core._layer[s]] -= 1
        for s in ripple:
            if core.processed[s] or s in core.recovered:
                raise ValueError(f"ripple id {s} already recovered")
            core.recovered[s] = None if payloads is None else payloads[s]
            core.ripple.append(s)
            core.ripple_counts[core._layer[s]] += 1
        for nbrs in cloud:
            remaining = {s for s in nbrs if not core.processed[s]}
            if len(remaining) < 2:
                raise ValueError(f"cloud symbol {tuple(nbrs)} has fewer than 2 unprocessed neighbors")
            payload = None if payloads is None else _xor(payloads[s] for s in remaining)
            core._add_cloud(remaining, payload, len(nbrs), 0)
        return core

    def _add_cloud(self, remaining: set[int], payload: int | None, degree: int, phase: int) -> None:
        cid = self._next_id
        self._next_id += 1
        self._cloud[cid] = _CloudEntry(remaining, payload, degree, phase)
        for s in remaining:
            self._members[s].add(cid)

    # -- decoding ------------------------------------------------------------------

    def _recover(self, sid: int, payload: int | None) -> bool:
        """Put ``sid`` in the ripple; False if it was already recovered."""
        if sid in self.recovered:
            self.epsR += 1
            return False
        self.recovered[sid] = payload
        self.ripple.append(sid)
        self.ripple_counts[self._layer[sid]] += 1
        return True

    def ingest(self, symbol: OutputSymbol) -> Arrival:
        """Strip recovered neighbors and file the symbol by reduced degree."""
        self.received += 1
        payload = None if symbol.payload is None else int.from_bytes(symbol.payload, "big")
        remaining = set()
        for s in symbol.neighbors:
            if s in self.recovered:
                if payload is not None:
                    payload ^= self.recovered[s]
            else:
                remaining.add(s)
        if not remaining:
            self.eps0 += 1
            return Arrival.REDUNDANT
        if len(remaining) == 1:
            self._recover(remaining.pop(), payload)
            return Arrival.RIPPLE
        self._add_cloud(remaining, payload, symbol.degree, self.phase)
        return Arrival.CLOUD

    def step(self, rng: np.random.Generator) -> StepReport:
        """Process one uniformly chosen ripple symbol."""
        if not self.ripple:
            raise RuntimeError("step() called with an empty ripple")
        idx = int(rng.integers(len(self.ripple)))
        ripple = self.ripple
        ripple[idx], ripple[-1] = ripple[-1], ripple[idx]
        sid = ripple.pop()
        layer = self._layer[sid]
        self.ripple_counts[layer] -= 1
        self.unprocessed[layer] -= 1
        self.processed[sid] = True
        value = self.recovered[sid]
        n = self.config.n_layers
        releases = [0] * n
        additions = [0] * n
        for cid in tuple(self._members[sid]):
            entry = self._cloud[cid]
            entry.remaining.discard(sid)
            if value is not None and entry.payload is not None:
                entry.payload ^= value
            if len(entry.remaining) == 1:
                target = next(iter(entry.remaining))
                del self._cloud[cid]
                self._members[target].discard(cid)
                releases[self._layer[target]] += 1
                if self._recover(target, entry.payload):
                    additions[self._layer[target]] += 1
        self._members[sid].clear()
        return StepReport(sid, layer, tuple(releases), tuple(additions))

    def run_until_stall(self, rng: np.random.Generator) -> TerminalSnapshot:
        while self.ripple:
            self.step(rng)
        return TerminalSnapshot(tuple(self.unprocessed), self.cloud_histogram(), self.eps0, self.epsR)

    # -- views -------------------------------------------------------------------

    @property
    def complete(self) -> bool:
        return len(self.recovered) == self.config.k and not self.ripple

    def cloud_histogram(self, phase: int | None = None) -> tuple[int, ...]:
        hist = [0] * (self.config.k - 1)
        for entry in self._cloud.values():
            if phase is None or entry.phase == phase:
                hist[entry.degree - 2] += 1
        return tuple(hist)

    def cloud_entries(self) -> list[tuple[frozenset[int], int | None]]:
        return [(frozenset(e.remaining), e.payload) for e in self._cloud.values()]

    def state(self) -> DecoderState:
        """The analysis view of the decoder.  ``C2`` is filled only after
        :meth:`start_phase` has been called."""
        if self.phase == 0:
            return DecoderState(tuple(self.unprocessed), tuple(self.ripple_counts), self.cloud_histogram())
        return DecoderState(
            tuple(self.unprocessed),
            tuple(self.ripple_counts),
            self.cloud_histogram(0),
            self.cloud_histogram(1),
        )

    def start_phase(self) -> None:
        """Tag symbols ingested from now on as post-acknowledgment symbols."""
        self.phase = 1

    def recovered_bytes(self, width: int) -> list[bytes]:
        if len(self.recovered) != self.config.k:
            raise RuntimeError("decoding incomplete")
        return [self.recovered[s].to_bytes(width, "big") for s in range(self.config.k)]


# -- full round trip -----------------------------------------------------------


@dataclass
class Transcript:
    k: int
    delta_base: int | None
    delta_full: int
    feedback_delta: int | None
    eps0: int
    epsR: int
    recovered: bytes
    events: list[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


def decode_roundtrip(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    payload: bytes,
    feedback: bool,
    rng: np.random.Generator,
    max_symbols: int | None = None,
) -> Transcript:
    """Encode ``payload`` symbol by symbol until the decoder has everything.

    With ``feedback`` the base layer is acknowledged the moment the decoder
    stalls with it fully processed, and every later symbol excludes it.
    """
    k = config.k
    block = InputBlock.from_bytes(payload, k)
    ints = block.as_ints()
    core = DecoderCore(config)
    excluded: tuple[int, ...] = ()
    weights = config.weights()
    events: list[dict] = []
    delta_base = None
    feedback_delta = None
    done_layers = [False] * config.n_layers
    limit = max_symbols if max_symbols is not None else 1000 * k
    while not core.complete:
        if core.received >= limit:
            raise RuntimeError(f"no full decode within {limit} symbols")
        degree = degree_dist.sample(rng)
        nbrs = select_neighbors(config, degree, rng, excluded, weights)
        counts = [0] * config.n_layers
        for s in nbrs:
            counts[config.layer_of(s)] += 1
        value = _xor(ints[s] for s in nbrs)
        sym = OutputSymbol(nbrs, value.to_bytes(block.width, "big"), tuple(counts))
        arrival = core.ingest(sym)
        snap = core.run_until_stall(rng)
        events.append(
            {
                "event": "receive",
                "delta": core.received,
                "arrival": arrival.value,
                "layer_counts": list(counts),
                "L": list(snap.L),
                "eps0": snap.eps0,
                "epsR": snap.epsR,
            }
        )
        for n, left in enumerate(snap.L):
            if left == 0 and not done_layers[n]:
                done_layers[n] = True
                events.append({"event": "layer_complete", "delta": core.received, "layer": n,
                               "eps0": snap.eps0, "epsR": snap.epsR})
        if done_layers[0] and delta_base is None:
            delta_base = core.received
        if feedback and feedback_delta is None and snap.L[0] == 0 and any(snap.L[1:]):
            feedback_delta = core.received
            excluded = (0,)
            weights = config.weights(excluded)
            core.start_phase()
            events.append({"event": "feedback", "delta": core.received, "layer": 0,
                           "eps0": snap.eps0, "epsR": snap.epsR})
    recovered = b"".join(core.recovered_bytes(block.width))[: len(payload)]
    return Transcript(
        k=k,
        delta_base=delta_base,
        delta_full=core.received,
        feedback_delta=feedback_delta,
        eps0=core.eps0,
        epsR=core.epsR,
        recovered=recovered,
        events=events,
    )
