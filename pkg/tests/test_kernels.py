import itertools

import numpy as np
import pytest

from oracles import codec_step_kernels, neighbor_set_law
from urtlt.analysis import (
    BASE,
    REFINEMENT,
    TwoLayerKernels,
    cloud_transition_dist,
    next_processed_dist,
    release_probs,
    ripple_transition_dist,
)
from urtlt.codec import LayerConfig
from urtlt.degree import robust_soliton
from urtlt.state import DecoderState


def _history(config: LayerConfig, ell: tuple[int, int], layer: int):
    """Concrete ids for one step: inputs unprocessed afterwards, the input just
    processed, and everything processed earlier."""
    a, b = config.sizes
    lb, lr = ell
    base = list(range(a))
    ref = list(range(a, a + b))
    unprocessed = set(base[a - lb :]) | set(ref[b - lr :])
    pivot = base[a - lb - 1] if layer == BASE else ref[b - lr - 1]
    return unprocessed, pivot


def release_by_enumeration(config, i, ell, layer, beta=None):
    unprocessed, pivot = _history(config, ell, layer)
    to = [0.0, 0.0]
    for nbrs, p in neighbor_set_law(config, i, beta).items():
        left = nbrs & unprocessed
        if pivot in nbrs and len(left) == 1:
            to[config.layer_of(next(iter(left)))] += p
    return tuple(to)


def test_next_processed_examples():
    st = lambda r: DecoderState((3, 5), r, (0,))
    assert next_processed_dist(st((2, 1))) == pytest.approx({0: 2 / 3, 1: 1 / 3})
    assert next_processed_dist(st((0, 5))) == {1: 1.0}
    assert next_processed_dist(st((3, 3))) == {0: 0.5, 1: 0.5}
    with pytest.raises(ValueError):
        next_processed_dist(st((0, 0)))


def test_release_documented_value():
    cfg = LayerConfig(4, (0.5, 0.5), (1, 1))
    assert release_probs(cfg, 2, (1, 2), BASE)[0] == pytest.approx(1 / 6, abs=1e-15)
    assert release_by_enumeration(cfg, 2, (1, 2), BASE)[0] == pytest.approx(1 / 6, abs=1e-15)


def test_degree_one_never_releases():
    cfg = LayerConfig(8, (0.5, 0.5), (3, 1))
    for lb, lr in itertools.product(range(4), range(5)):
        for layer in (BASE, REFINEMENT):
            if (lb, lr)[layer] < cfg.sizes[layer]:
                assert release_probs(cfg, 1, (lb, lr), layer) == (0.0, 0.0)


@pytest.mark.parametrize(
    "k,alpha,beta,override", [(4, 0.5, 1.0, None), (6, 0.5, 2.0, None), (6, 1 / 3, 5.0, None), (7, 4 / 7, 3.0, 0.0)]
)
def test_release_matches_enumeration(k, alpha, beta, override):
    cfg = LayerConfig(k, (alpha, 1 - alpha), (beta, 1))
    kern = TwoLayerKernels(cfg, beta=override)
    weights = None if override is None else (override, 1.0)
    a, b = cfg.sizes
    for i in range(1, (k if override is None else b) + 1):
        for lb, lr in itertools.product(range(a + 1), range(b + 1)):
            for layer in (BASE, REFINEMENT):
                if (lb, lr)[layer] == cfg.sizes[layer]:
                    continue
                want = release_by_enumeration(cfg, i, (lb, lr), layer, weights)
                assert release_probs(cfg, i, (lb, lr), layer, override) == pytest.approx(want, abs=1e-13)
                assert kern.release_probs(i, (lb, lr), layer) == pytest.approx(want, abs=1e-13)


@pytest.mark.parametrize("k,beta", [(4, 2.0), (6, 3.0), (8, 1.0)])
def test_normalizer_is_survival(k, beta):
    """The path-sum normalizer equals the chance that a symbol still had two
    unprocessed neighbors before the step."""
    cfg = LayerConfig(k, (0.5, 0.5), (beta, 1))
    kern = TwoLayerKernels(cfg)
    a, b = cfg.sizes
    for i in range(2, k + 1):
        law = neighbor_set_law(cfg, i)
        for lb, lr in itertools.product(range(a + 1), range(b + 1)):
            for layer in (BASE, REFINEMENT):
                if (lb, lr)[layer] == cfg.sizes[layer]:
                    continue
                unprocessed, pivot = _history(cfg, (lb, lr), layer)
                before = unprocessed | {pivot}
                want = sum(p for n, p in law.items() if len(n & before) >= 2)
                assert kern.norm[layer][i, lb, lr] == pytest.approx(want, abs=1e-12)


def test_release_mass_bound():
    cfg = LayerConfig(8, (0.5, 0.5), (4, 1))
    kern = TwoLayerKernels(cfg)
    for i in range(2, 9):
        # base first, then refinement: every path step contributes once
        path = sum(kern.q[BASE][i, lb, 4] for lb in range(4)) + sum(kern.q[REFINEMENT][i, 0, lr] for lr in range(4))
        assert path <= 1 + 1e-12


def test_cloud_transition_basics():
    cfg = LayerConfig(6, (0.5, 0.5), (2, 1))
    empty = DecoderState((3, 3), (1, 0), (0,) * 5)
    assert cloud_transition_dist(cfg, empty, (2, 3)) == {((0,) * 5, ()): 1.0}
    st = DecoderState((2, 2), (1, 1), (2, 1, 0, 1, 0))
    dist = cloud_transition_dist(cfg, st, (1, 2))
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    for (c, _), p in dist.items():
        assert all(x <= y for x, y in zip(c, st.C))
    with pytest.raises(ValueError):
        cloud_transition_dist(cfg, st, (1, 1))


def test_ripple_transition_bookkeeping():
    cfg = LayerConfig(6, (0.5, 0.5), (2, 1))
    st = DecoderState((2, 3), (2, 0), (1, 0, 0, 0, 0))
    same = ((1, 0, 0, 0, 0), ())
    assert ripple_transition_dist(cfg, st, same, (1, 3)) == {(1, 0): 1.0}
    st = DecoderState((3, 2), (0, 1), (1, 0, 0, 0, 0))
    dist = ripple_transition_dist(cfg, st, ((0,) * 5, ()), (3, 1))
    assert sum(dist.values()) == pytest.approx(1.0)
    assert set(dist) <= {(1, 0), (0, 1)}


def test_single_degree_two_symbol_matches_codec():
    """One degree-2 cloud symbol with two inputs left: its release chance
    after the next step, against the codec enumerated over every history."""
    cfg = LayerConfig(4, (0.5, 0.5), (2, 1))
    dd = robust_soliton(4, 0.1, 1)
    probs = {i: dd.pmf(i) for i in range(1, 5)}
    kernels = codec_step_kernels(cfg, probs, range(1, 4))
    seen = 0
    for (_, state), law in kernels.items():
        if state.C != (1, 0, 0):
            continue
        for ell in {s.L for s in law}:
            want = sum(p for s, p in law.items() if s.L == ell and s.C == (0, 0, 0))
            mass = sum(p for s, p in law.items() if s.L == ell)
            got = cloud_transition_dist(cfg, state, ell).get(((0, 0, 0), ()), 0.0)
            assert got == pytest.approx(want / mass, abs=1e-12)
            seen += 1
    assert seen > 0


def test_k6_single_step_matches_codec():
    from urtlt.analysis import recursion_step

    cfg = LayerConfig(6, (0.5, 0.5), (2, 1))
    dd = robust_soliton(6, 0.1, 1)
    probs = {i: dd.pmf(i) for i in range(1, 7)}
    kernels = codec_step_kernels(cfg, probs, (1, 2))
    assert len(kernels) > 20
    for (_, state), law in kernels.items():
        got = recursion_step(cfg, state)
        for s in set(law) | set(got):
            assert got.get(s, 0.0) == pytest.approx(law.get(s, 0.0), abs=1e-9)
