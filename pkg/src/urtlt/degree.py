"""Degree distributions for the encoder and the analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class DegreeDistribution:
    """pmf over output-symbol degrees ``1..k``.

    ``probs[i - 1]`` is the probability of degree ``i``.  ``fallback`` is set
    when robust-soliton parameters were degenerate and the ideal soliton was
    returned instead.
    """

    k: int
    probs: np.ndarray
    fallback: bool = False
    cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if self.k < 1:
            raise ValueError("degree distribution needs k >= 1")
        if probs.shape != (self.k,):
            raise ValueError(f"expected {self.k} probabilities, got {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("negative degree probability")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"degree pmf sums to {math.fsum(probs)!r}")
        probs = probs.copy()
        probs.setflags(write=False)
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "cdf", cdf)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.k, self.probs.tobytes()))

    def pmf(self, i: int) -> float:
        return float(self.probs[i - 1]) if 1 <= i <= self.k else 0.0

    @property
    def max_degree(self) -> int:
        return int(np.flatnonzero(self.probs)[-1]) + 1

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Inverse-CDF sampling; one uniform per draw."""
        u = rng.random(size)
        idx = np.searchsorted(self.cdf, u, side="right")
        deg = np.minimum(idx, self.k - 1) + 1
        return int(deg) if size is None else deg

    def clamped(self, max_degree: int) -> "DegreeDistribution":
        """Degrees above ``max_degree`` collapse onto ``max_degree``.

        This is the law of the degree the encoder actually uses once fewer
        than ``k`` symbols are selectable.
        """
        if max_degree < 1:
            raise ValueError("max_degree must be >= 1")
        if max_degree >= self.k:
            return self
        probs = np.zeros(max_degree)
        probs[:] = self.probs[:max_degree]
        probs[-1] += math.fsum(self.probs[max_degree:])
        return DegreeDistribution(max_degree, probs / math.fsum(probs))

    def to_text(self) -> str:
        return "".join(f"{i} {p!r}\n" for i, p in enumerate(self.probs, start=1))


def ideal_soliton(k: int) -> DegreeDistribution:
    if k < 1:
        raise ValueError("ideal soliton needs k >= 1")
    probs = np.empty(k)
    probs[0] = 1.0 / k
    i = np.arange(2, k + 1, dtype=float)
    probs[1:] = 1.0 / (i * (i - 1.0))
    return DegreeDistribution(k, probs / math.fsum(probs))


def robust_soliton(k: int, c: float, delta: float) -> DegreeDistribution:
    """Luby's robust soliton distribution.

    The spike sits at ``ceil(k/S)`` with ``S = c ln(k/delta) sqrt(k)``; a
    spike beyond ``k`` is dropped.  Parameters giving ``S <= 0`` or
    ``k/S < 1`` fall back to the ideal soliton with ``fallback=True``.
    """
    if c <= 0 or not 0 < delta <= 1:
        raise ValueError(f"robust soliton needs c > 0 and 0 < delta <= 1, got {c}, {delta}")
    rho = ideal_soliton(k).probs
    s = c * math.log(k / delta) * math.sqrt(k)
    if s <= 0 or k / s < 1:
        base = ideal_soliton(k)
        return DegreeDistribution(k, base.probs, fallback=True)
    spike = math.ceil(k / s)
    tau = np.zeros(k)
    for i in range(1, min(spike - 1, k) + 1):
        tau[i - 1] = s / (i * k)
    if spike <= k:
        tau[spike - 1] = s * math.log(s / delta) / k
    weights = rho + tau
    return DegreeDistribution(k, weights / math.fsum(weights))


def from_table(k: int, weights) -> DegreeDistribution:
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ValueError(f"expected {k} weights, got {w.shape}")
    if np.any(w < 0):
        raise ValueError("degree weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0:
        raise ValueError("degree weights are all zero")
    return DegreeDistribution(k, w / total)


def read_table(path: str | Path) -> DegreeDistribution:
    """Read a two-column ``degree probability`` text table.

    Missing degrees get weight zero; ``k`` is the largest listed degree.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        deg, prob = line.replace(",", " ").split()[:2]
        rows.append((int(deg), float(prob)))
    if not rows:
        raise ValueError(f"{path}: empty degree table")
    k = max(d for d, _ in rows)
    w = np.zeros(k)
    for d, p in rows:
        if d < 1:
            raise ValueError(f"{path}: degree {d} < 1")
        w[d - 1] += p
    return from_table(k, w)
