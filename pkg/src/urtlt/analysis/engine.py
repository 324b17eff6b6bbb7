"""Public analysis operations with backend dispatch."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..codec import LayerConfig
from ..degree import DegreeDistribution
from ..state import DecoderState
from .ensemble import EvalBackend, StateDistribution
from .exact import ExactEngine, initial_masses, run_to_terminal
from .kernels import TwoLayerKernels, kernels_for
from .montecarlo import Walker, sample_chain

_ENGINES: dict[tuple, ExactEngine] = {}


def _engine(config: LayerConfig, degree_dist: DegreeDistribution) -> ExactEngine:
    key = (config, degree_dist)
    eng = _ENGINES.get(key)
    if eng is None:
        if len(_ENGINES) > 16:
            _ENGINES.clear()
        eng = _ENGINES[key] = ExactEngine(config, degree_dist, kernels_for(config, degree_dist))
    return eng


@lru_cache(maxsize=32)
def _release_kernels(config: LayerConfig, beta: float | None = None) -> TwoLayerKernels:
    return TwoLayerKernels(config, beta=beta)


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _empirical(tag: str, states: list[DecoderState]) -> StateDistribution:
    n = len(states)
    masses: dict[DecoderState, float] = {}
    for s in states:
        masses[s] = masses.get(s, 0) + 1
    return StateDistribution(tag, {s: c / n for s, c in masses.items()}, iterations=n)


# -- single-step kernels ---------------------------------------------------------------


def cloud_transition_dist(
    config: LayerConfig, state_prev: DecoderState, ell_next: tuple[int, int]
) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """pmf over ``(C, C2)`` after one decoding step; see
    :meth:`TwoLayerKernels.cloud_transition`."""
    post = _release_kernels(config, 0.0) if state_prev.C2 else None
    return _release_kernels(config).cloud_transition(state_prev, ell_next, post)


def ripple_transition_dist(
    config: LayerConfig,
    state_prev: DecoderState,
    cloud_next: tuple[tuple[int, ...], tuple[int, ...]],
    ell_next: tuple[int, int],
) -> dict[tuple[int, int], float]:
    return _release_kernels(config).ripple_transition(state_prev, cloud_next, ell_next)


def recursion_step(config: LayerConfig, state: DecoderState) -> dict[DecoderState, float]:
    """One exact decoding step from a state with a nonempty ripple."""
    return _release_kernels(config).step(state)


# -- ensembles -------------------------------------------------------------------------


def initial_state_dist(config: LayerConfig, degree_dist: DegreeDistribution, delta: int) -> StateDistribution:
    if delta < 0:
        raise ValueError("symbol count must be >= 0")
    kern = kernels_for(config, degree_dist).pre
    return StateDistribution("I", initial_masses(config, kern, delta))


def state_recursion(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta: int,
    backend: EvalBackend = EvalBackend(),
    initial: StateDistribution | None = None,
) -> StateDistribution:
    """Terminal ensemble after ``delta`` symbols, or after ``initial``."""
    backend.check(config.k)
    if delta < 0:
        raise ValueError("symbol count must be >= 0")
    if backend.is_exact:
        eng = _engine(config, degree_dist)
        if initial is None:
            return StateDistribution("T", dict(eng.terminal(delta)))
        return StateDistribution("T", run_to_terminal(initial.masses, eng.pre, eng.post))
    pair = kernels_for(config, degree_dist)
    out = []
    if initial is not None:
        starts = list(initial.masses)
        weights = np.array([initial.masses[s] for s in starts])
        weights /= weights.sum()
    for rng in _streams(backend.seed, backend.iterations):
        if initial is None:
            w = Walker(pair, rng)
            w.load_batch(delta)
        else:
            w = Walker(pair, rng, starts[int(rng.choice(len(starts), p=weights))])
        w.decode()
        out.append(w.state())
    return _empirical("T", out)


def feedback_state_dist(
    config: LayerConfig, degree_dist: DegreeDistribution, delta1: int, backend: EvalBackend = EvalBackend()
) -> tuple[StateDistribution, StateDistribution]:
    """``(F-, F)`` for the base layer completing with symbol ``delta1``.

    Exact only: these ensembles feed the double sum of the two-phase
    redundancy, which the Monte Carlo backend evaluates along sampled chains.
    """
    if not backend.is_exact:
        raise ValueError("feedback ensembles are enumerated by the exact backend only")
    backend.check(config.k)
    pre_fb, fb = _engine(config, degree_dist).feedback(delta1)
    return StateDistribution("F-", dict(pre_fb)), StateDistribution("F", dict(fb))


def phase2_initial_dist(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta1: int,
    delta2: int,
    backend: EvalBackend = EvalBackend(),
) -> StateDistribution:
    if not backend.is_exact:
        raise ValueError("second-phase ensembles are enumerated by the exact backend only")
    backend.check(config.k)
    return StateDistribution("I2", dict(_engine(config, degree_dist).phase2_initial(delta1, delta2)))


# -- curves ----------------------------------------------------------------------------


@dataclass
class AnalysisCurves:
    """Per-``delta_max`` quantities for ``d = 0..delta_max``.

    ``visits[lb, lr]`` is the expected number of the first ``delta_max``
    symbols received in a terminal state with that many unprocessed symbols.
    Standard errors are zero for the exact backend.
    """

    delta_max: int
    feedback: bool
    redundancy: np.ndarray
    redundancy_se: np.ndarray
    base_decoded: np.ndarray
    full_decoded: np.ndarray
    visits: np.ndarray
    iterations: int | None = None

    def distortion(self, alpha: float) -> np.ndarray:
        """Expected ``2^(-2R)`` with R = 1, ``alpha`` or 0 bits per sample."""
        base_only = self.base_decoded - self.full_decoded
        neither = 1.0 - self.base_decoded
        return 0.25 * self.full_decoded + 2.0 ** (-2.0 * alpha) * base_only + neither


def analysis_curves(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_max: int,
    feedback: bool = False,
    backend: EvalBackend = EvalBackend(),
) -> AnalysisCurves:
    backend.check(config.k)
    if delta_max < 0:
        raise ValueError("delta_max must be >= 0")
    if backend.is_exact:
        c = _engine(config, degree_dist).curves(delta_max, feedback)
        return AnalysisCurves(
            delta_max, feedback, c.redundancy, np.zeros_like(c.redundancy), c.base_decoded, c.full_decoded, c.visits
        )
    pair = kernels_for(config, degree_dist)
    a, b = config.sizes
    n = backend.iterations
    red_sum = np.zeros(delta_max + 1)
    red_sq = np.zeros(delta_max + 1)
    base = np.zeros(delta_max + 1)
    full = np.zeros(delta_max + 1)
    visits = np.zeros((a + 1, b + 1))
    rate = np.zeros(delta_max)
    for rng in _streams(backend.seed, n):
        chain = sample_chain(pair, rng, delta_max, feedback)
        rate[:] = 0.0
        for t0, t1, lb, lr, pz in chain.segments:
            hi = min(t1, delta_max)
            if hi > t0:
                rate[t0:hi] = pz
                visits[lb, lr] += hi - t0
            if lb == 0:
                base[t0:t1] += 1
                if lr == 0:
                    full[t0:t1] += 1
        curve = np.concatenate([[0.0], np.cumsum(rate)])
        red_sum += curve
        red_sq += curve * curve
    mean = red_sum / n
    var = np.maximum(red_sq / n - mean * mean, 0.0) * (n / (n - 1) if n > 1 else 0.0)
    return AnalysisCurves(delta_max, feedback, mean, np.sqrt(var / n), base / n, full / n, visits / n, n)


def converged_redundancy(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    feedback: bool = False,
    backend: EvalBackend = EvalBackend.montecarlo(),
) -> tuple[float, float]:
    """Expected redundancy over a reception that runs to full recovery.

    Monte Carlo only.  Returns ``(mean, standard error)``.
    """
    if backend.is_exact:
        raise ValueError("the converged value needs an unbounded horizon; use the montecarlo backend")
    pair = kernels_for(config, degree_dist)
    totals = np.empty(backend.iterations)
    for idx, rng in enumerate(_streams(backend.seed, backend.iterations)):
        chain = sample_chain(pair, rng, None, feedback)
        totals[idx] = sum((t1 - t0) * pz for t0, t1, _, _, pz in chain.segments)
    se = totals.std(ddof=1) / np.sqrt(len(totals)) if len(totals) > 1 else 0.0
    return float(totals.mean()), float(se)


def expected_visits(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_max: int,
    backend: EvalBackend = EvalBackend(),
) -> dict[DecoderState, float]:
    """Expected number of the first ``delta_max`` symbols that arrive while
    the decoder rests in each terminal state (no acknowledgment)."""
    backend.check(config.k)
    out: dict[DecoderState, float] = {}
    if backend.is_exact:
        eng = _engine(config, degree_dist)
        for d in range(delta_max):
            for s, p in eng.terminal(d).items():
                out[s] = out.get(s, 0.0) + p
        return out
    pair = kernels_for(config, degree_dist)
    n = backend.iterations
    for rng in _streams(backend.seed, n):
        chain = sample_chain(pair, rng, delta_max, False, record_states=True)
        for s, (t0, t1, *_rest) in zip(chain.states, chain.segments):
            span = min(t1, delta_max) - t0
            if span > 0:
                out[s] = out.get(s, 0.0) + span / n
    return out


def expected_redundancy(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_max: int,
    backend: EvalBackend = EvalBackend(),
) -> float:
    """Expected count of reduced-degree-zero arrivals among the first
    ``delta_max`` symbols, excluding arrivals after full recovery."""
    visits = expected_visits(config, degree_dist, delta_max, backend)
    pz = kernels_for(config, degree_dist).pre.p_zero
    return float(sum(v * pz[s.L] for s, v in visits.items() if any(s.L)))


def expected_redundancy_feedback(
    config: LayerConfig,
    degree_dist: DegreeDistribution,
    delta_max: int,
    backend: EvalBackend = EvalBackend(),
) -> float:
    """Same count when the base layer is acknowledged on completion."""
    return float(analysis_curves(config, degree_dist, delta_max, True, backend).redundancy[-1])
