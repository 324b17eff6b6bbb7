"""Two-layer decoding-step kernels.

Everything a decoding step needs is tabulated once per configuration over
``(original degree, base unprocessed, refinement unprocessed)``:

* release probabilities toward each layer after processing a base or a
  refinement symbol,
* the conditional release probability of a symbol still in the cloud, whose
  normalizer is the sum of prior release probabilities along the remaining
  path "finish the base layer, then the refinement layer",
* the base-layer share of a release,
* the probability that a fresh symbol arrives with reduced degree zero or
  with a single unprocessed neighbor in a given layer.

Layer 0 is the base layer, layer 1 the refinement layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Mapping

import numpy as np

from ..codec import LayerConfig
from ..combinatorics import (
    binomial_vector,
    comb0,
    ripple_influx_vector,
    wallenius_pmf,
    wallenius_table,
)
from ..degree import DegreeDistribution
from ..state import DecoderState

BASE, REFINEMENT = 0, 1


def _require_two_layers(config: LayerConfig) -> tuple[int, int]:
    if config.n_layers != 2:
        raise ValueError(f"decoding-step kernels are defined for two layers, got {config.n_layers}")
    return config.sizes


def release_probs(
    config: LayerConfig, i: int, ell: tuple[int, int], processed_layer: int, beta: float | None = None
) -> tuple[float, float]:
    """Prior probability that a degree-``i`` symbol releases toward the base
    and toward the refinement layer in the step that processed a symbol of
    ``processed_layer`` and left ``ell`` unprocessed.

    Scalar evaluation of the four sums over the base-neighbor count ``j``;
    the tables in :class:`TwoLayerKernels` are checked against it.
    """
    a, b = _require_two_layers(config)
    beta = config.beta[0] if beta is None else beta
    lb, lr = ell
    to_base = to_ref = 0.0
    for j in range(0, i + 1):
        d = i - j
        if j > a or d > b:
            continue
        phi = wallenius_pmf(j, i, a, b, beta)
        if phi == 0.0:
            continue
        denom = comb0(a, j) * comb0(b, d)
        if processed_layer == BASE:
            to_base += phi * lb * comb0(a - lb - 1, j - 2) * comb0(b - lr, d) / denom
            to_ref += phi * lr * comb0(a - lb - 1, j - 1) * comb0(b - lr, d - 1) / denom
        else:
            to_base += phi * lb * comb0(a - lb, j - 1) * comb0(b - lr - 1, d - 1) / denom
            to_ref += phi * lr * comb0(a - lb, j) * comb0(b - lr - 1, d - 2) / denom
    return to_base, to_ref


def next_processed_dist(state: DecoderState) -> dict[int, float]:
    """Layer of the next processed symbol: proportional to ripple counts."""
    total = sum(state.R)
    if total == 0:
        raise ValueError("next processed symbol undefined for an empty ripple")
    return {n: r / total for n, r in enumerate(state.R) if r}


def _ratio_table(rows: int, cols: int, fn) -> np.ndarray:
    return np.array([[fn(r, c) for c in range(cols)] for r in range(rows)], dtype=float)


class TwoLayerKernels:
    """Tabulated kernels for one configuration and selection weight.

    ``beta`` overrides the configuration's base weight; ``beta=0`` describes
    symbols encoded after the base layer is acknowledged, in which case
    ``degree_dist`` should already be clamped to the refinement size.
    """

    def __init__(
        self,
        config: LayerConfig,
        degree_dist: DegreeDistribution | None = None,
        beta: float | None = None,
    ):
        a, b = _require_two_layers(config)
        self.config = config
        self.k = k = config.k
        self.a, self.b = a, b
        self.beta = float(config.beta[0] if beta is None else beta)
        self.degree_dist = degree_dist

        self.phi = np.asarray(wallenius_table(k, a, b, self.beta))  # [i, j]
        self.phi_cdf = np.cumsum(self.phi, axis=1)

        # shifted refinement count d = i - j, padded so d outside 0..b reads zero
        def spread(rows: np.ndarray) -> np.ndarray:
            g = np.zeros((k + 1, a + 1, rows.shape[1]))
            for i in range(k + 1):
                for j in range(min(i, a) + 1):
                    if i - j <= b:
                        g[i, j] = rows[i - j]
            return g

        def q_table(base_fn, ref_fn) -> np.ndarray:
            A = _ratio_table(a + 1, a + 1, lambda j, lb: base_fn(j, lb) / comb0(a, j))
            B = spread(_ratio_table(b + 1, b + 1, lambda d, lr: ref_fn(d, lr) / comb0(b, d)))
            return np.einsum("ij,jl,ijr->ilr", self.phi, A, B)

        self.q_bb = q_table(lambda j, lb: lb * comb0(a - lb - 1, j - 2), lambda d, lr: comb0(b - lr, d))
        self.q_br = q_table(lambda j, lb: comb0(a - lb - 1, j - 1), lambda d, lr: lr * comb0(b - lr, d - 1))
        self.q_rb = q_table(lambda j, lb: lb * comb0(a - lb, j - 1), lambda d, lr: comb0(b - lr - 1, d - 1))
        self.q_rr = q_table(lambda j, lb: comb0(a - lb, j), lambda d, lr: lr * comb0(b - lr - 1, d - 2))

        q_base = self.q_bb + self.q_br
        q_ref = self.q_rb + self.q_rr
        self.q = (q_base, q_ref)

        # remaining path after landing on (lb, lr): base symbols down to 0,
        # then refinement symbols down to 0
        base_before = np.cumsum(q_base, axis=1) - q_base  # sum over lb' < lb
        ref_tail = np.cumsum(q_ref[:, 0, :], axis=1) - q_ref[:, 0, :]  # sum over lr' < lr at lb = 0
        rest = base_before + ref_tail[:, None, :]
        self.norm = (q_base + rest, q_ref + rest)

        with np.errstate(invalid="ignore", divide="ignore"):
            self.qc = tuple(np.where(d > 0, np.divide(q, d), 0.0) for q, d in zip(self.q, self.norm))
            self.qxb = (
                np.where(q_base > 0, self.q_bb / q_base, 0.0),
                np.where(q_ref > 0, self.q_rb / q_ref, 0.0),
            )
        # the path sum can exceed the single-step term only by rounding
        self.qc = tuple(np.clip(q, 0.0, 1.0) for q in self.qc)

        # fraction of a layer's j neighbors that stay unprocessed: 0 or exactly 1
        h0_b = _ratio_table(a + 1, a + 1, lambda j, lb: comb0(a - lb, j) / comb0(a, j))
        h1_b = _ratio_table(a + 1, a + 1, lambda j, lb: lb * comb0(a - lb, j - 1) / comb0(a, j))
        h0_r = spread(_ratio_table(b + 1, b + 1, lambda d, lr: comb0(b - lr, d) / comb0(b, d)))
        h1_r = spread(_ratio_table(b + 1, b + 1, lambda d, lr: lr * comb0(b - lr, d - 1) / comb0(b, d)))
        self._h = (h0_b, h1_b, h0_r, h1_r)
        if degree_dist is not None:
            pi = np.zeros(k + 1)
            pi[1 : degree_dist.k + 1] = degree_dist.probs
            self.pi = pi
            w = pi[:, None] * self.phi
            self.p_zero = np.einsum("ij,jl,ijr->lr", w, h0_b, h0_r)
            self.p_unit = (
                np.einsum("ij,jl,ijr->lr", w, h1_b, h0_r),
                np.einsum("ij,jl,ijr->lr", w, h0_b, h1_r),
            )
        self._step_cache: dict[DecoderState, dict[DecoderState, float]] = {}
        self._share_cache: dict[tuple, tuple[float, ...]] = {}

    # -- scalar views ---------------------------------------------------------------

    def release_probs(self, i: int, ell: tuple[int, int], processed_layer: int) -> tuple[float, float]:
        lb, lr = ell
        if processed_layer == BASE:
            return float(self.q_bb[i, lb, lr]), float(self.q_br[i, lb, lr])
        return float(self.q_rb[i, lb, lr]), float(self.q_rr[i, lb, lr])

    def survival(self, i: int, ell: tuple[int, int]) -> float:
        """P(a degree-``i`` symbol keeps at least two unprocessed neighbors)."""
        lb, lr = ell
        h0_b, h1_b, h0_r, h1_r = self._h
        row = self.phi[i]
        p0 = float(np.dot(row, h0_b[:, lb] * h0_r[i, :, lr]))
        p1 = float(np.dot(row, h1_b[:, lb] * h0_r[i, :, lr] + h0_b[:, lb] * h1_r[i, :, lr]))
        return 1.0 - p0 - p1

    def conditional_release(self, i: int, ell: tuple[int, int], processed_layer: int) -> float:
        lb, lr = ell
        num = self.q[processed_layer][i, lb, lr]
        den = self.norm[processed_layer][i, lb, lr]
        if den <= 0.0:
            if num > 0.0:
                raise ZeroDivisionError(f"zero release normalizer for degree {i} at {ell}")
            return 0.0
        return min(1.0, float(num / den))

    # -- one decoding step ------------------------------------------------------------

    def _release_rows(self, state: DecoderState, layer: int, ell: tuple[int, int], post):
        rows = []
        for h, (hist, kern) in enumerate(((state.C, self), (state.C2, post))):
            for idx, count in enumerate(hist):
                if count == 0:
                    continue
                if kern is None:
                    raise ValueError("state has a post-acknowledgment cloud but no kernels for it")
                p = kern.conditional_release(idx + 2, ell, layer)
                rows.append((h, idx, _binom_row(count, p)))
        return rows

    def _cloud(self, state, layer, ell, post):
        """Yield ``(C, C2, releases, prob)`` where ``releases`` lists the
        per-degree release counts of the first cloud and the total of the
        second."""
        rows = self._release_rows(state, layer, ell, post)
        for combo in product(*(range(len(r[2])) for r in rows)):
            prob = 1.0
            for (_, _, row), m in zip(rows, combo):
                prob *= row[m]
            if prob == 0.0:
                continue
            nxt = [list(state.C), list(state.C2)]
            released = []
            extra = 0
            for (h, idx, _), m in zip(rows, combo):
                nxt[h][idx] -= m
                if h == 0:
                    if m:
                        released.append((idx + 2, m))
                else:
                    extra += m
            yield tuple(nxt[0]), tuple(nxt[1]), (tuple(released), extra), prob

    def _ripple(self, state, layer, ell, released) -> dict[tuple[int, int], float]:
        first, extra = released
        lb, lr = ell
        share = self._share(layer, lb, lr, first)
        total = sum(m for _, m in first) + extra
        r_base = state.R[BASE] - (layer == BASE)
        r_ref = state.R[REFINEMENT] - (layer == REFINEMENT)
        out: dict[tuple[int, int], float] = {}
        for m_base, p_share in enumerate(share):
            if p_share == 0.0:
                continue
            add_b = ripple_influx_vector(m_base, lb, r_base)
            add_r = ripple_influx_vector(total - m_base, lr, r_ref)
            for x, px in enumerate(add_b):
                if px == 0.0:
                    continue
                for y, py in enumerate(add_r):
                    if py == 0.0:
                        continue
                    key = (r_base + x, r_ref + y)
                    out[key] = out.get(key, 0.0) + p_share * px * py
        return out

    def _share(self, layer: int, lb: int, lr: int, first: tuple) -> tuple[float, ...]:
        """pmf of the base-layer count among releases: a convolution of one
        binomial per original degree."""
        key = (layer, lb, lr, first)
        hit = self._share_cache.get(key)
        if hit is not None:
            return hit
        share = [1.0]
        for i, m in first:
            row = _binom_row(m, float(self.qxb[layer][i, lb, lr]))
            conv = [0.0] * (len(share) + m)
            for x, px in enumerate(share):
                if px == 0.0:
                    continue
                for y, py in enumerate(row):
                    conv[x + y] += px * py
            share = conv
        out = tuple(share)
        self._share_cache[key] = out
        return out

    def cloud_transition(
        self, state: DecoderState, ell_next: tuple[int, int], post: "TwoLayerKernels | None" = None
    ) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
        """Distribution of ``(C, C2)`` after the step that lands on ``ell_next``.

        Every degree-``i`` cloud symbol releases independently with the
        conditional probability, so each degree contributes a binomial count.
        ``post`` holds the kernels for the ``C2`` population.
        """
        layer = _processed_layer(state.L, ell_next)
        out: dict = {}
        for c, c2, _, prob in self._cloud(state, layer, tuple(ell_next), post):
            out[(c, c2)] = out.get((c, c2), 0.0) + prob
        return out

    def ripple_transition(
        self,
        state: DecoderState,
        cloud_next: tuple[tuple[int, ...], tuple[int, ...]],
        ell_next: tuple[int, int],
    ) -> dict[tuple[int, int], float]:
        """Distribution of the ripple after the step, given the new cloud."""
        layer = _processed_layer(state.L, ell_next)
        c_next, c2_next = cloud_next
        first = []
        for idx, (before, after) in enumerate(zip(state.C, c_next)):
            if after > before:
                raise ValueError("cloud counts can only decrease in a decoding step")
            if before > after:
                first.append((idx + 2, before - after))
        extra = 0
        for before, after in zip(state.C2, c2_next):
            if after > before:
                raise ValueError("cloud counts can only decrease in a decoding step")
            extra += before - after
        return self._ripple(state, layer, tuple(ell_next), (tuple(first), extra))

    def step(self, state: DecoderState, post: "TwoLayerKernels | None" = None) -> dict[DecoderState, float]:
        """One decoding step: next processed layer, then cloud, then ripple."""
        cached = self._step_cache.get(state)
        if cached is not None:
            return cached
        out: dict[DecoderState, float] = {}
        for layer, p_layer in next_processed_dist(state).items():
            ell = (state.L[0] - (layer == BASE), state.L[1] - (layer == REFINEMENT))
            for c, c2, released, p_cloud in self._cloud(state, layer, ell, post):
                for ripple, p_ripple in self._ripple(state, layer, ell, released).items():
                    nxt = DecoderState(ell, ripple, c, c2)
                    out[nxt] = out.get(nxt, 0.0) + p_layer * p_cloud * p_ripple
        self._step_cache[state] = out
        return out


@lru_cache(maxsize=1 << 16)
def _binom_row(n: int, p: float) -> tuple[float, ...]:
    return tuple(binomial_vector(n, p))


def _processed_layer(ell_prev: tuple[int, ...], ell_next: tuple[int, ...]) -> int:
    diff = [p - n for p, n in zip(ell_prev, ell_next)]
    if sorted(diff) != [0, 1]:
        raise ValueError(f"{tuple(ell_next)} is not one processing step below {tuple(ell_prev)}")
    return diff.index(1)


@dataclass(frozen=True)
class KernelPair:
    """Kernels before (``pre``) and after (``post``) the base-layer
    acknowledgment.  ``post`` uses zero base weight and the degree law
    clamped to the refinement size."""

    pre: TwoLayerKernels
    post: TwoLayerKernels

    @classmethod
    def build(cls, config: LayerConfig, degree_dist: DegreeDistribution) -> "KernelPair":
        return cls(
            TwoLayerKernels(config, degree_dist),
            TwoLayerKernels(config, degree_dist.clamped(config.sizes[1]), beta=0.0),
        )


_KERNEL_CACHE: dict[tuple, KernelPair] = {}


def kernels_for(config: LayerConfig, degree_dist: DegreeDistribution) -> KernelPair:
    key = (config, degree_dist)
    pair = _KERNEL_CACHE.get(key)
    if pair is None:
        if len(_KERNEL_CACHE) > 32:
            _KERNEL_CACHE.clear()
        pair = _KERNEL_CACHE[key] = KernelPair.build(config, degree_dist)
    return pair


def as_mapping(dist: Mapping) -> dict:
    return dict(dist)
