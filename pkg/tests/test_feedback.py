import math
from collections import defaultdict

import numpy as np
import pytest

from oracles import codec_acknowledged_runs, empirical, tv
from test_recursion import noise_floor
from urtlt.analysis import (
    EvalBackend,
    expected_redundancy,
    expected_redundancy_feedback,
    feedback_state_dist,
    kernels_for,
    phase2_initial_dist,
    state_recursion,
)
from urtlt.codec import LayerConfig
from urtlt.combinatorics import hypergeom_pmf
from urtlt.degree import robust_soliton
from urtlt.state import DecoderState

EXACT = EvalBackend.exact()
K6 = LayerConfig(6, (0.5, 0.5), (2, 1))
RSD6 = robust_soliton(6, 0.1, 1)
RUNS = 100_000
D1, D2 = 6, 8


@pytest.fixture(scope="module")
def codec_runs():
    return codec_acknowledged_runs(K6, RSD6, 12, D1, D2, RUNS, 31)


def test_no_symbols_no_feedback():
    pre, fb = feedback_state_dist(K6, RSD6, 0, EXACT)
    assert len(pre) == 0 and len(fb) == 0


def test_feedback_needs_exact():
    with pytest.raises(ValueError):
        feedback_state_dist(K6, RSD6, 3, EvalBackend.montecarlo())


def test_completion_probabilities_add_up():
    """Completion at exactly d, summed over d, is the chance the base layer
    is complete after D symbols."""
    running = 0.0
    for d in range(0, 13):
        running += feedback_state_dist(K6, RSD6, d, EXACT)[1].total()
        done = sum(p for s, p in state_recursion(K6, RSD6, d, EXACT).items() if s.L[0] == 0)
        assert running == pytest.approx(done, abs=1e-12)


def test_completion_frequency_matches_codec(codec_runs):
    completions, _ = codec_runs
    for d in range(1, 13):
        p = feedback_state_dist(K6, RSD6, d, EXACT)[1].total()
        freq = sum(1 for c in completions if c == d) / RUNS
        se = math.sqrt(max(p * (1 - p), 1e-12) / RUNS)
        assert abs(freq - p) < 3.5 * se + 1e-9, (d, p, freq)


def test_phase2_no_new_symbols():
    _, fb = feedback_state_dist(K6, RSD6, D1, EXACT)
    i2 = phase2_initial_dist(K6, RSD6, D1, D1, EXACT)
    want = {DecoderState(s.L, s.R, s.C, (0,) * 5): p for s, p in fb.items()}
    assert dict(i2.masses) == pytest.approx(want)
    with pytest.raises(ValueError):
        phase2_initial_dist(K6, RSD6, 5, 4, EXACT)


def test_full_refinement_pool_never_strips():
    b = K6.sizes[1]
    assert all(hypergeom_pmf(0, b, b, i) == 0.0 for i in range(1, b + 1))


def _phase2_by_symbol(config, degree_dist, state, n_new):
    """Symbol-by-symbol evolution of (distinct ripple ids, new cloud)."""
    b = config.sizes[1]
    lr = state.L[1]
    post = degree_dist.clamped(b)
    law = {(0, (0,) * (config.k - 1)): 1.0}
    for _ in range(n_new):
        nxt = defaultdict(float)
        for (r, c2), p in law.items():
            for i in range(1, post.k + 1):
                pi = post.pmf(i)
                if pi == 0.0:
                    continue
                for red in range(0, min(i, lr) + 1):
                    ph = hypergeom_pmf(red, b, lr, i)
                    if ph == 0.0:
                        continue
                    w = p * pi * ph
                    if red == 0:
                        nxt[(r, c2)] += w
                    elif red == 1:
                        nxt[(r + 1, c2)] += w * (lr - r) / lr
                        if r:
                            nxt[(r, c2)] += w * r / lr
                    else:
                        c = list(c2)
                        c[i - 2] += 1
                        nxt[(r, tuple(c))] += w
        law = dict(nxt)
    return law


def test_phase2_matches_symbol_dp():
    _, fb = feedback_state_dist(K6, RSD6, D1, EXACT)
    i2 = phase2_initial_dist(K6, RSD6, D1, D2, EXACT)
    want: dict = defaultdict(float)
    for s, p in fb.items():
        if s.L[1] == 0:
            want[DecoderState(s.L, s.R, s.C, (0,) * 5)] += p
            continue
        for (r, c2), q in _phase2_by_symbol(K6, RSD6, s, D2 - D1).items():
            want[DecoderState(s.L, (0, r), s.C, c2)] += p * q
    got = dict(i2.masses)
    for key in set(got) | set(want):
        assert got.get(key, 0.0) == pytest.approx(want.get(key, 0.0), abs=1e-12)


def test_phase2_matches_codec(codec_runs):
    _, states = codec_runs
    exact = dict(phase2_initial_dist(K6, RSD6, D1, D2, EXACT).masses)
    sim = {s: c * len(states) / RUNS for s, c in empirical(states).items()}
    dist = tv(exact, sim)
    # floor for the joint law: the event itself has probability < 1
    p_event = sum(exact.values())
    rest = dict(exact)
    rest[None] = 1.0 - p_event
    mean, sd = noise_floor(rest, RUNS)
    print(f"TV(I2 exact, codec) = {dist:.4f}; sampling floor {mean:.4f} +/- {sd:.4f}")
    assert dist < 0.03
    assert dist < mean + 4 * sd


def test_feedback_before_completion_is_inert():
    """With nothing acknowledged yet both curves coincide."""
    cfg = LayerConfig(6, (0.5, 0.5), (1, 1))
    dd = robust_soliton(6, 0.1, 1)
    assert expected_redundancy_feedback(cfg, dd, 3, EXACT) == pytest.approx(
        expected_redundancy(cfg, dd, 3, EXACT), abs=1e-12
    )


def test_post_feedback_kernels_exclude_base():
    pair = kernels_for(K6, RSD6)
    assert pair.post.degree_dist.k == K6.sizes[1]
    b = K6.sizes[1]
    assert np.all(pair.post.phi[: b + 1, 1:] == 0.0)
