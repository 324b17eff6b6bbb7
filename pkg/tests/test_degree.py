from pathlib import Path

import numpy as np
import pytest

from urtlt.degree import from_table, ideal_soliton, read_table, robust_soliton

GOLDEN = Path(__file__).parent / "data" / "rsd_k100_c0.1_delta1.txt"


def _golden() -> np.ndarray:
    rows = [line.split() for line in GOLDEN.read_text().splitlines() if line and not line.startswith("#")]
    out = np.zeros(100)
    for i, p in rows:
        out[int(i) - 1] = float(p)
    return out


def test_ideal_small():
    assert ideal_soliton(2).probs == pytest.approx([0.5, 0.5])
    assert ideal_soliton(4).probs == pytest.approx([0.25, 0.5, 1 / 6, 1 / 12], abs=1e-15)
    for k in (1, 7, 100, 1000):
        assert ideal_soliton(k).probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_robust_matches_golden():
    dd = robust_soliton(100, 0.1, 1)
    assert np.max(np.abs(dd.probs - _golden())) < 1e-12
    assert int(np.argmax(dd.probs)) + 1 == 2
    assert np.all(dd.probs[:22] > 0)
    assert dd.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_robust_beyond_spike_is_scaled_ideal():
    dd = robust_soliton(100, 0.1, 1)
    rho = ideal_soliton(100).probs
    ratio = dd.probs[22:] / rho[22:]
    assert np.allclose(ratio, ratio[0], rtol=1e-12)


def test_robust_small_c_tends_to_ideal():
    assert robust_soliton(50, 1e-12, 0.5).probs == pytest.approx(ideal_soliton(50).probs, abs=1e-9)


def test_robust_degenerate_falls_back():
    dd = robust_soliton(1, 0.1, 1.0)
    assert dd.fallback
    assert dd.probs.tolist() == [1.0]
    with pytest.raises(ValueError):
        robust_soliton(10, 0.0, 0.5)


def test_sampling_matches_pmf():
    dd = robust_soliton(100, 0.1, 1)
    draws = dd.sample(np.random.default_rng(5), 1_000_000)
    freq = np.bincount(draws, minlength=101)[1:] / len(draws)
    assert 0.5 * np.abs(freq - dd.probs).sum() < 0.005


def test_sampling_is_deterministic():
    dd = robust_soliton(30, 0.2, 0.05)
    a = dd.sample(np.random.default_rng(9), 500)
    b = dd.sample(np.random.default_rng(9), 500)
    assert np.array_equal(a, b)


def test_tables(tmp_path):
    assert from_table(3, [1, 0, 0]).sample(np.random.default_rng(0), 50).tolist() == [1] * 50
    assert from_table(3, [0, 1, 0]).sample(np.random.default_rng(0), 50).tolist() == [2] * 50
    assert from_table(2, [1, 1]).probs.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        from_table(2, [0, 0])
    path = tmp_path / "t.txt"
    path.write_text("# comment\n1 0.25\n3 0.75\n")
    dd = read_table(path)
    assert dd.k == 3 and dd.probs.tolist() == [0.25, 0.0, 0.75]


def test_clamped():
    dd = ideal_soliton(6).clamped(3)
    p = ideal_soliton(6).probs
    assert dd.k == 3
    assert dd.probs == pytest.approx([p[0], p[1], p[2:].sum()])
