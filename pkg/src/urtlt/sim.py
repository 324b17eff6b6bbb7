"""Monte Carlo experiments over the codec.

Every trial drives a structure-only :class:`~urtlt.codec.DecoderCore` with
freshly encoded symbols until the block is recovered or ``delta_max``
symbols have arrived.  Trials draw from independent streams spawned from one
seed, so results do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .codec import DecoderCore, LayerConfig, OutputSymbol, select_neighbors
from .degree import DegreeDistribution


@dataclass(frozen=True)
class DistortionModel:
    """Rate-distortion bound of a unit-variance Gaussian source,
    ``D = 2^(-2R)``, with the base layer carrying ``alpha`` bits per sample
    and both layers together one bit."""

    alpha: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"base-layer rate must lie in [0, 1], got {self.alpha}")

    def rate(self, base: bool, refinement: bool) -> float:
        if base and refinement:
            return 1.0
        return self.alpha if base else 0.0


def distortion(outcome: tuple[bool, bool], model: DistortionModel = DistortionModel()) -> float:
    """Mean-squared error for ``(base decoded, refinement decoded)``.

    The refinement layer is useless on its own.
    """
    return 2.0 ** (-2.0 * model.rate(*outcome))


@dataclass
class TrialRecord:
    """One reception.  ``trace[d]`` holds ``(L_B, L_R)`` after ``d`` symbols;
    the trace stops at recovery or at ``delta_max``."""

    trace: np.ndarray
    eps0: np.ndarray
    epsR: np.ndarray
    delta_base: int | None
    delta_refinement: int | None
    delta_full: int | None
    feedback_delta: int | None
    base_neighbors_after_feedback: int = 0

    @property
    def received(self) -> int:
        return len(self.trace) - 1


def run_trial(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_max: int,
    feedback: bool,
    rng: np.random.Generator,
) -> TrialRecord:
    if config.n_layers != 2:
        raise ValueError("trials are defined for two layers")
    core = DecoderCore(config)
    excluded: tuple[int, ...] = ()
    weights = config.weights()
    trace = [tuple(core.unprocessed)]
    eps0 = [0]
    eps_r = [0]
    done = [None, None]
    fb_delta = None
    leak = 0
    base_ids = config.layer_range(0)
    while core.received < delta_max and not (done[0] and done[1]):
        degree = degree_dist.sample(rng)
        nbrs = select_neighbors(config, degree, rng, excluded, weights)
        if fb_delta is not None:
            leak += sum(1 for s in nbrs if s in base_ids)
        core.ingest(OutputSymbol(nbrs, None, ()))
        core.run_until_stall(rng)
        lb, lr = core.unprocessed
        trace.append((lb, lr))
        eps0.append(core.eps0)
        eps_r.append(core.epsR)
        if lb == 0 and done[0] is None:
            done[0] = core.received
        if lr == 0 and done[1] is None:
            done[1] = core.received
        if feedback and fb_delta is None and lb == 0 and lr > 0:
            fb_delta = core.received
            excluded = (0,)
            weights = config.weights(excluded)
            core.start_phase()
    full = max(done) if done[0] and done[1] else None
    return TrialRecord(
        np.array(trace, dtype=np.int32),
        np.array(eps0, dtype=np.int64),
        np.array(eps_r, dtype=np.int64),
        done[0],
        done[1],
        full,
        fb_delta,
        leak,
    )


class _Moments:
    """Running sum and sum of squares of per-trial curves."""

    def __init__(self, n: int):
        self.s = np.zeros(n)
        self.ss = np.zeros(n)

    def add(self, x: np.ndarray) -> None:
        self.s += x
        self.ss += x * x

    def mean_se(self, runs: int) -> tuple[np.ndarray, np.ndarray]:
        mean = self.s / runs
        if runs < 2:
            return mean, np.zeros_like(mean)
        var = np.maximum(self.ss - runs * mean * mean, 0.0) / (runs - 1)
        return mean, np.sqrt(var / runs)


def _extend(x: np.ndarray, n: int) -> np.ndarray:
    """Hold the last value out to length ``n``."""
    if len(x) >= n:
        return x[:n]
    return np.concatenate([x, np.repeat(x[-1:], n - len(x), axis=0)])


@dataclass
class AggregateStats:
    """Curves indexed by ``d = 0..delta_max`` (symbols received)."""

    runs: int
    delta_max: int
    feedback: bool
    eps0_mean: np.ndarray
    eps0_se: np.ndarray
    epsR_mean: np.ndarray
    base_decoded: np.ndarray
    refinement_decoded: np.ndarray
    full_decoded: np.ndarray
    distortion_mean: np.ndarray
    distortion_se: np.ndarray
    visits: np.ndarray
    feedback_fired: int = 0
    base_neighbors_after_feedback: int = 0
    records: list[TrialRecord] = field(default_factory=list, repr=False)


def run_trials(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_max: int,
    feedback: bool,
    runs: int,
    seed: int,
    model: DistortionModel | None = None,
    keep_records: bool = False,
) -> AggregateStats:
    """Run ``runs`` seeded trials and aggregate them.

    ``visits[lb, lr]`` is the mean number of symbols received while the
    decoder rested in a terminal state with that many unprocessed symbols,
    counting only symbols received before full recovery.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if delta_max < 0:
        raise ValueError("delta_max must be >= 0")
    model = model or DistortionModel(config.alpha[0])
    n = delta_max + 1
    a, b = config.sizes
    eps0_m, dist_m = _Moments(n), _Moments(n)
    eps_r = np.zeros(n)
    base = np.zeros(n)
    ref = np.zeros(n)
    full = np.zeros(n)
    visits = np.zeros((a + 1, b + 1))
    fired = leak = 0
    d_base = distortion((True, False), model)
    d_full = distortion((True, True), model)
    records = []
    for ss in np.random.SeedSequence(seed).spawn(runs):
        rec = run_trial(config, degree_dist, delta_max, feedback, np.random.default_rng(ss))
        trace = _extend(rec.trace, n)
        eps0_m.add(_extend(rec.eps0, n).astype(float))
        eps_r += _extend(rec.epsR, n)
        has_base = trace[:, 0] == 0
        has_ref = trace[:, 1] == 0
        both = has_base & has_ref
        base += has_base
        ref += has_ref
        full += both
        dist_m.add(np.where(both, d_full, np.where(has_base, d_base, 1.0)))
        active = rec.trace[:-1]
        live = (active[:, 0] > 0) | (active[:, 1] > 0)
        np.add.at(visits, (active[live, 0], active[live, 1]), 1.0)
        fired += rec.feedback_delta is not None
        leak += rec.base_neighbors_after_feedback
        if keep_records:
            records.append(rec)
    eps0_mean, eps0_se = eps0_m.mean_se(runs)
    dist_mean, dist_se = dist_m.mean_se(runs)
    return AggregateStats(
        runs,
        delta_max,
        feedback,
        eps0_mean,
        eps0_se,
        eps_r / runs,
        base / runs,
        ref / runs,
        full / runs,
        dist_mean,
        dist_se,
        visits / runs,
        fired,
        leak,
        records,
    )


def expected_distortion_curve(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_grid: Sequence[int],
    feedback: bool,
    runs: int,
    seed: int,
    model: DistortionModel | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(grid, mean, stderr)`` of the distortion after ``d`` symbols."""
    grid = np.asarray(sorted(set(int(d) for d in delta_grid)), dtype=int)
    if grid.size == 0 or grid[0] < 0:
        raise ValueError("delta grid must be nonempty and nonnegative")
    stats = run_trials(config, degree_dist, int(grid[-1]), feedback, runs, seed, model)
    return grid, stats.distortion_mean[grid], stats.distortion_se[grid]


# -- output ---------------------------------------------------------------------------


def write_curve(out: TextIO, x: Iterable, mean: Iterable, stderr: Iterable, runs: int | None) -> None:
    """CSV with header ``x,mean,stderr,runs``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", "mean", "stderr", "runs"])
    for xi, m, s in zip(x, mean, stderr):
        w.writerow([int(xi), repr(float(m)), repr(float(s)), "" if runs is None else int(runs)])


def write_heatmap(out: TextIO, grid: np.ndarray, value_name: str = "value") -> None:
    """CSV triples ``L_B,L_R,value``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["L_B", "L_R", value_name])
    for lb in range(grid.shape[0]):
        for lr in range(grid.shape[1]):
            w.writerow([lb, lr, repr(float(grid[lb, lr]))])


def curve_text(x, mean, stderr, runs) -> str:
    buf = io.StringIO()
    write_curve(buf, x, mean, stderr, runs)
    return buf.getvalue()


def mean_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
