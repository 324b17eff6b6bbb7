"""Reduced degree of a fresh output symbol."""

from __future__ import annotations

from itertools import product

import numpy as np

from ..codec import LayerConfig
from ..combinatorics import hypergeom_pmf, wallenius_multi_table
from ..degree import DegreeDistribution


def reduced_degree_dist(
    config: LayerConfig, degree_dist: DegreeDistribution, ell: tuple[int, ...]
) -> dict[tuple[int, ...], float]:
    """Joint pmf of the per-layer counts of unprocessed neighbors.

    ``ell[n]`` symbols of layer ``n`` are still unprocessed.  Only vectors with
    ``0 <= i'_n <= ell_n`` carry mass.  Any number of layers is supported.
    """
    sizes = config.sizes
    if len(ell) != len(sizes):
        raise ValueError(f"ell has {len(ell)} entries, expected {len(sizes)}")
    for n, (l, s) in enumerate(zip(ell, sizes)):
        if not 0 <= l <= s:
            raise ValueError(f"ell[{n}] = {l} outside 0..{s}")
    if degree_dist.k > config.k:
        raise ValueError("degree distribution exceeds the block length")
    total = np.zeros(tuple(l + 1 for l in ell))
    betas = tuple(float(b) for b in config.beta)
    for i in range(1, degree_dist.k + 1):
        p_i = degree_dist.pmf(i)
        if p_i == 0.0:
            continue
        for j, p_j in wallenius_multi_table(i, sizes, betas).items():
            w = p_i * p_j
            if w == 0.0:
                continue
            factors = [
                np.array([hypergeom_pmf(x, s, l, jn) for x in range(l + 1)])
                for s, l, jn in zip(sizes, ell, j)
            ]
            outer = factors[0]
            for f in factors[1:]:
                outer = np.multiply.outer(outer, f)
            total += w * outer
    return {
        tuple(int(x) for x in idx): float(total[idx])
        for idx in product(*(range(l + 1) for l in ell))
        if total[idx] > 0.0
    }


def prob_next_redundant(
    config: LayerConfig, degree_dist: DegreeDistribution, ell: tuple[int, ...]
) -> float:
    """Probability that the next received symbol carries no new information."""
    return reduced_degree_dist(config, degree_dist, ell).get(tuple(0 for _ in ell), 0.0)
