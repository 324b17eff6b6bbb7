"""Exact discrete-distribution kernels.

Central and noncentral (Wallenius) hypergeometric, binomial, multinomial,
the distinct-draws distribution and pmf convolution.  Everything here is a
pure function; probabilities are kept in linear space and binomial
coefficients are computed exactly with integers up to ``n = 64`` and through
``lgamma`` beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

EXACT_BINOM_LIMIT = 64
NORM_TOL = 1e-9


def log_binom(n: int, k: int) -> float:
    """Natural log of ``C(n, k)``; ``-inf`` when the coefficient vanishes."""
    if n < 0:
        raise ValueError(f"log_binom requires n >= 0, got {n}")
    if k < 0 or k > n:
        return -math.inf
    if n <= EXACT_BINOM_LIMIT:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def comb0(n: int, k: int) -> float:
    """``C(n, k)`` as a float, zero for any out-of-range argument.

    Negative ``n`` also yields zero; the release-probability sums rely on
    boundary terms such as ``C(-1, j - 2)`` vanishing.
    """
    if n < 0 or k < 0 or k > n:
        return 0.0
    if n <= EXACT_BINOM_LIMIT:
        return float(math.comb(n, k))
    return math.exp(log_binom(n, k))


def hypergeom_pmf(x: int, pop: int, succ: int, draws: int) -> float:
    """P(X = x) for ``draws`` items taken without replacement from ``pop``
    items of which ``succ`` are successes."""
    if not (0 <= succ <= pop) or not (0 <= draws <= pop):
        raise ValueError(
            f"hypergeometric domain violated: pop={pop}, succ={succ}, draws={draws}"
        )
    if x < 0 or x > succ or draws - x > pop - succ or x > draws:
        return 0.0
    if pop <= EXACT_BINOM_LIMIT:
        return math.comb(succ, x) * math.comb(pop - succ, draws - x) / math.comb(pop, draws)
    return math.exp(
        log_binom(succ, x) + log_binom(pop - succ, draws - x) - log_binom(pop, draws)
    )


def binomial_pmf(x: int, n: int, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binomial probability must lie in [0, 1], got {p}")
    if n < 0:
        raise ValueError(f"binomial trial count must be >= 0, got {n}")
    if x < 0 or x > n:
        return 0.0
    # 0**0 == 1 covers the degenerate p in {0, 1} cases
    return comb0(n, x) * p**x * (1.0 - p) ** (n - x)


def binomial_vector(n: int, p: float) -> np.ndarray:
    """Full binomial pmf over ``0..n``."""
    return np.array([binomial_pmf(x, n, p) for x in range(n + 1)])


def multinomial_pmf(counts: Sequence[int], n: int, probs: Sequence[float]) -> float:
    if len(counts) != len(probs):
        raise ValueError("counts and probs must have the same length")
    if sum(counts) != n:
        raise ValueError(f"counts sum to {sum(counts)}, expected {n}")
    if abs(math.fsum(probs) - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, expected 1")
    if any(c < 0 for c in counts):
        return 0.0
    log_p = math.lgamma(n + 1)
    for c, p in zip(counts, probs):
        if c == 0:
            continue
        if p <= 0.0:
            return 0.0
        log_p += c * math.log(p) - math.lgamma(c + 1)
    return math.exp(log_p)


# -- Wallenius ---------------------------------------------------------------


def _draw_class1(beta: float, left1: int, left2: int) -> float:
    """Probability that the next sequential draw comes from class 1."""
    w1 = beta * left1
    w2 = float(left2)
    if w1 + w2 > 0.0:
        return w1 / (w1 + w2)
    # only zero-weight items remain; they are drawn uniformly
    return left1 / (left1 + left2) if left1 + left2 else 0.0


@lru_cache(maxsize=256)
def wallenius_table(max_draws: int, m1: int, m2: int, beta: float) -> np.ndarray:
    """Row ``t`` holds the Wallenius pmf over class-1 counts after ``t`` draws.

    Shape is ``(max_draws + 1, m1 + 1)``.  The returned array is read-only
    since it is shared through the cache.
    """
    if max_draws > m1 + m2:
        raise ValueError(f"cannot draw {max_draws} items from {m1 + m2}")
    if beta < 0:
        raise ValueError("weight ratio must be >= 0")
    table = np.zeros((max_draws + 1, m1 + 1))
    table[0, 0] = 1.0
    for t in range(max_draws):
        row = table[t]
        nxt = table[t + 1]
        for x in range(min(t, m1) + 1):
            p = row[x]
            if p == 0.0:
                continue
            left1, left2 = m1 - x, m2 - (t - x)
            if left2 < 0:
                continue
            p1 = _draw_class1(beta, left1, left2)
            if p1 > 0.0:
                nxt[x + 1] += p * p1
            if p1 < 1.0:
                nxt[x] += p * (1.0 - p1)
    table.setflags(write=False)
    return table


def wallenius_pmf(j: int, i: int, m1: int, m2: int, beta: float) -> float:
    """P(j class-1 items among i sequential weighted draws without replacement)."""
    if not 0 <= i <= m1 + m2:
        raise ValueError(f"draw count {i} outside 0..{m1 + m2}")
    if j < 0 or j > m1:
        return 0.0
    return float(wallenius_table(i, m1, m2, float(beta))[i, j])


def wallenius_multi_pmf(
    j: Sequence[int], i: int, sizes: Sequence[int], betas: Sequence[float]
) -> float:
    """Multivariate Wallenius pmf by the same sequential-draw recursion."""
    if not (len(j) == len(sizes) == len(betas)):
        raise ValueError("j, sizes and betas must have equal length")
    if sum(j) != i:
        raise ValueError(f"counts sum to {sum(j)}, expected {i}")
    if any(x < 0 or x > s for x, s in zip(j, sizes)):
        return 0.0
    return wallenius_multi_table(i, tuple(sizes), tuple(float(b) for b in betas)).get(
        tuple(j), 0.0
    )


@lru_cache(maxsize=256)
def wallenius_multi_table(
    i: int, sizes: tuple[int, ...], betas: tuple[float, ...]
) -> dict[tuple[int, ...], float]:
    """All multivariate Wallenius masses after exactly ``i`` draws."""
    if i > sum(sizes):
        raise ValueError(f"cannot draw {i} items from {sum(sizes)}")
    layer = {tuple(0 for _ in sizes): 1.0}
    for _ in range(i):
        nxt: dict[tuple[int, ...], float] = {}
        for taken, p in layer.items():
            left = [s - t for s, t in zip(sizes, taken)]
            weights = [b * n for b, n in zip(betas, left)]
            total = sum(weights)
            if total <= 0.0:
                weights = [float(n) for n in left]
                total = sum(weights)
            for c, w in enumerate(weights):
                if w <= 0.0:
                    continue
                key = taken[:c] + (taken[c] + 1,) + taken[c + 1 :]
                nxt[key] = nxt.get(key, 0.0) + p * w / total
        layer = nxt
    return layer


# -- distinct draws and ripple influx -------------------------------------------


@lru_cache(maxsize=4096)
def _surjections(q: int, m: int) -> int:
    # Z_q(m): number of length-m sequences over q symbols using all q
    return sum((-1) ** p * math.comb(q, p) * (q - p) ** m for p in range(q + 1))


def unique_draws_pmf(q: int, m: int, ell: int) -> float:
    """P(exactly q distinct values among m uniform draws from ell values)."""
    if m < 0 or ell < 1:
        raise ValueError(f"need m >= 0 and ell >= 1, got m={m}, ell={ell}")
    if q < 0 or q > min(m, ell):
        return 0.0
    num = math.comb(ell, q) * _surjections(q, m)
    return num / ell**m


@lru_cache(maxsize=65536)
def ripple_influx_pmf(m_added: int, m_released: int, ell: int, r: int) -> float:
    """Probability that ``m_released`` releases into a layer with ``ell``
    unprocessed symbols, ``r`` of them already in the ripple, add exactly
    ``m_added`` new ripple symbols."""
    if not 0 <= r <= ell:
        raise ValueError(f"ripple count {r} outside 0..{ell}")
    if m_released == 0:
        return 1.0 if m_added == 0 else 0.0
    if ell == 0:
        raise ValueError("releases into a layer with no unprocessed symbols")
    total = 0.0
    for q in range(max(m_added, 0), min(m_released, ell) + 1):
        total += unique_draws_pmf(q, m_released, ell) * hypergeom_pmf(
            m_added, ell, ell - r, q
        )
    return total


@lru_cache(maxsize=65536)
def ripple_influx_vector(m_released: int, ell: int, r: int) -> tuple[float, ...]:
    """``ripple_influx_pmf`` over every possible addition count."""
    hi = min(m_released, ell - r)
    return tuple(ripple_influx_pmf(x, m_released, ell, r) for x in range(hi + 1))


# -- Pmf ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pmf:
    """Probability mass on the contiguous support ``offset .. offset+len-1``."""

    offset: int
    mass: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(m < 0 for m in self.mass):
            raise ValueError("negative probability mass")
        total = math.fsum(self.mass)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"pmf sums to {total!r}, not 1")

    @classmethod
    def point(cls, x: int = 0) -> "Pmf":
        return cls(x, (1.0,))

    @classmethod
    def binomial(cls, n: int, p: float) -> "Pmf":
        return cls(0, tuple(binomial_vector(n, p)))

    @property
    def support(self) -> range:
        return range(self.offset, self.offset + len(self.mass))

    def __call__(self, x: int) -> float:
        idx = x - self.offset
        return self.mass[idx] if 0 <= idx < len(self.mass) else 0.0

    def items(self) -> Iterable[tuple[int, float]]:
        return zip(self.support, self.mass)

    def mean(self) -> float:
        return math.fsum(x * p for x, p in self.items())


def convolve(a: Pmf, b: Pmf) -> Pmf:
    mass = np.convolve(np.asarray(a.mass), np.asarray(b.mass))
    return Pmf(a.offset + b.offset, tuple(np.clip(mass, 0.0, None)))


def convolve_many(pmfs: Iterable[Pmf]) -> Pmf:
    out = Pmf.point(0)
    for p in pmfs:
        out = convolve(out, p)
    return out
