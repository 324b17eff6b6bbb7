"""Trajectory sampling through the analytical kernels.

Nothing here touches the codec.  A walker holds the analysis state
``(L, R, C, C2)`` and advances it by drawing from the same distributions the
exact backend enumerates: the layer of the next processed symbol, binomial
releases per original degree, the base share of those releases and the
distinct-draws ripple influx.

:func:`sample_chain` strings these steps together with symbol arrivals drawn
from the reduced-degree law, giving one realization of the terminal-state
sequence visited while ``delta_max`` symbols are received.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..combinatorics import ripple_influx_vector
from ..state import DecoderState
from .kernels import BASE, REFINEMENT, KernelPair, TwoLayerKernels

_INFLUX_CDF: dict[tuple[int, int, int], np.ndarray] = {}


def _influx(m: int, ell: int, r: int, rng: np.random.Generator) -> int:
    if m == 0:
        return 0
    key = (m, ell, r)
    cdf = _INFLUX_CDF.get(key)
    if cdf is None:
        cdf = np.cumsum(ripple_influx_vector(m, ell, r))
        cdf /= cdf[-1]
        _INFLUX_CDF[key] = cdf
    return int(np.searchsorted(cdf, rng.random(), side="right"))


class Walker:
    """Mutable analysis state sampled forward one decoding step at a time."""

    __slots__ = ("L", "R", "C", "C2", "pre", "post", "rng")

    def __init__(self, pair: KernelPair, rng: np.random.Generator, state: DecoderState | None = None):
        pre = pair.pre
        self.pre, self.post, self.rng = pre, pair.post, rng
        k = pre.k
        self.C = np.zeros(k + 1, dtype=np.int64)
        self.C2 = np.zeros(k + 1, dtype=np.int64)
        if state is None:
            self.L = [pre.a, pre.b]
            self.R = [0, 0]
        else:
            self.L, self.R = list(state.L), list(state.R)
            self.C[2:] = state.C
            if state.C2:
                self.C2[2:] = state.C2

    def state(self) -> DecoderState:
        c2 = tuple(int(x) for x in self.C2[2:]) if self.C2.any() else ()
        return DecoderState(tuple(self.L), tuple(self.R), tuple(int(x) for x in self.C[2:]), c2)

    def load_batch(self, delta: int) -> None:
        """Replace the state by a sampled initial state for ``delta`` symbols."""
        pre, rng = self.pre, self.rng
        counts = rng.multinomial(delta, pre.pi[1:]) if delta else np.zeros(pre.k, dtype=np.int64)
        self.C[:] = 0
        self.C[2:] = counts[1:]
        self.C2[:] = 0
        m1 = int(counts[0])
        m_base = int(rng.binomial(m1, pre.phi[1, 1])) if m1 else 0
        self.L = [pre.a, pre.b]
        self.R = [_influx(m_base, pre.a, 0, rng), _influx(m1 - m_base, pre.b, 0, rng)]

    def step(self) -> None:
        L, R, rng = self.L, self.R, self.rng
        layer = BASE if rng.random() * (R[0] + R[1]) < R[0] else REFINEMENT
        L[layer] -= 1
        R[layer] -= 1
        lb, lr = L
        m_base = m_ref = 0
        nz = np.flatnonzero(self.C)
        if nz.size:
            m = rng.binomial(self.C[nz], self.pre.qc[layer][nz, lb, lr])
            total = int(m.sum())
            if total:
                self.C[nz] -= m
                m_base = int(rng.binomial(m, self.pre.qxb[layer][nz, lb, lr]).sum())
                m_ref = total - m_base
        nz2 = np.flatnonzero(self.C2)
        if nz2.size:
            m2 = rng.binomial(self.C2[nz2], self.post.qc[layer][nz2, lb, lr])
            if m2.any():
                self.C2[nz2] -= m2
                m_ref += int(m2.sum())
        R[0] += _influx(m_base, lb, R[0], rng)
        R[1] += _influx(m_ref, lr, R[1], rng)

    def decode(self) -> None:
        while self.R[0] or self.R[1]:
            self.step()

    def arrival(self, kern: TwoLayerKernels, batch: int) -> tuple[int, int, int]:
        """Draw symbols until one has a nonzero reduced degree.

        Returns ``(degree, base unprocessed neighbors, refinement unprocessed
        neighbors)``.
        """
        rng = self.rng
        lb, lr = self.L
        a, b = kern.a, kern.b
        while True:
            deg = kern.degree_dist.sample(rng, batch)
            u = rng.random(batch)
            j = (kern.phi_cdf[deg] < u[:, None]).sum(axis=1)
            j = np.clip(j, np.maximum(deg - b, 0), np.minimum(deg, a))
            ib = rng.hypergeometric(lb, a - lb, j)
            ir = rng.hypergeometric(lr, b - lr, deg - j)
            hit = np.flatnonzero(ib + ir)
            if hit.size:
                h = hit[0]
                return int(deg[h]), int(ib[h]), int(ir[h])

    def receive(self, kern: TwoLayerKernels, batch: int, second_cloud: bool) -> None:
        deg, ib, ir = self.arrival(kern, batch)
        if ib + ir == 1:
            self.R[BASE if ib else REFINEMENT] += 1
            self.decode()
        elif second_cloud:
            self.C2[deg] += 1
        else:
            self.C[deg] += 1


@dataclass
class ChainRealization:
    """Terminal states visited by one sampled reception, as segments.

    Segment ``(t0, t1, lb, lr, pz)``: after ``t`` symbols, for
    ``t0 <= t < t1``, the decoder rests in a terminal state with ``(lb, lr)``
    unprocessed, and the arriving symbol ``t + 1`` is redundant with
    probability ``pz``.  ``states`` optionally lists the full states.
    """

    segments: list[tuple[int, int, int, int, float]]
    states: list[DecoderState] | None
    feedback_at: int | None


def sample_chain(
    pair: KernelPair,
    rng: np.random.Generator,
    delta_max: int | None,
    feedback: bool,
    record_states: bool = False,
) -> ChainRealization:
    """Sample one reception of up to ``delta_max`` symbols.

    Runs of redundant arrivals in a terminal state are skipped with one
    geometric draw.  ``delta_max=None`` continues until full recovery.
    With ``feedback`` the arrival law switches to refinement-only symbols as
    soon as the base layer is complete.
    """
    w = Walker(pair, rng)
    pre, post = pair.pre, pair.post
    segments: list[tuple[int, int, int, int, float]] = []
    states: list[DecoderState] | None = [] if record_states else None
    t = 0
    feedback_at = None
    while True:
        lb, lr = w.L
        if record_states:
            states.append(w.state())
        if lb == 0 and lr == 0:
            segments.append((t, t if delta_max is None else delta_max + 1, 0, 0, 0.0))
            break
        second = feedback and lb == 0
        if second and feedback_at is None:
            feedback_at = t
        kern = post if second else pre
        pz = min(max(float(kern.p_zero[lb, lr]), 0.0), 1.0)
        if pz >= 1.0:
            raise RuntimeError(f"no symbol can reduce state {(lb, lr)}")
        t1 = t + int(rng.geometric(1.0 - pz))
        if delta_max is not None and t1 > delta_max:
            segments.append((t, delta_max + 1, lb, lr, pz))
            break
        segments.append((t, t1, lb, lr, pz))
        t = t1
        batch = int(min(4096, max(8, 3.0 / max(1.0 - pz, 1e-9))))
        w.receive(kern, batch, second)
    return ChainRealization(segments, states, feedback_at)
