"""Exact sparse enumeration of decoder-state ensembles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..codec import LayerConfig
from ..combinatorics import binomial_vector, hypergeom_pmf, multinomial_pmf, ripple_influx_vector
from ..degree import DegreeDistribution
from ..state import DecoderState
from .kernels import KernelPair, TwoLayerKernels

Masses = dict[DecoderState, float]


def _add(out: Masses, state: DecoderState, p: float) -> None:
    if p > 0.0:
        out[state] = out.get(state, 0.0) + p


def compositions(total: int, degrees: list[int]):
    """Every way to spread ``total`` symbols over ``degrees`` (dicts of counts)."""
    if not degrees:
        if total == 0:
            yield {}
        return
    head, rest = degrees[0], degrees[1:]
    for x in range(0 if rest else total, total + 1):
        for tail in compositions(total - x, rest):
            yield {head: x, **tail} if x else tail


def initial_masses(config: LayerConfig, kern: TwoLayerKernels, delta: int) -> Masses:
    """Ensemble right after the first ripple is identified from ``delta`` symbols.

    Mixes over degree compositions ``omega`` by the multinomial law, splits
    the degree-one symbols between layers binomially with the base odds of a
    single weighted draw, and applies the distinct-draws law with an empty
    ripple in each layer.
    """
    if delta < 0:
        raise ValueError("symbol count must be >= 0")
    a, b = kern.a, kern.b
    k = config.k
    dd = kern.degree_dist
    support = [i for i in range(1, dd.k + 1) if dd.pmf(i) > 0.0]
    probs = [dd.pmf(i) for i in support]
    total_p = sum(probs)
    probs = [p / total_p for p in probs]
    p_base = float(kern.phi[1, 1])
    out: Masses = {}
    for omega in compositions(delta, support):
        p_omega = multinomial_pmf([omega.get(i, 0) for i in support], delta, probs)
        if p_omega == 0.0:
            continue
        m1 = omega.get(1, 0)
        cloud = tuple(omega.get(i, 0) for i in range(2, k + 1))
        for m_base, p_split in enumerate(binomial_vector(m1, p_base)):
            if p_split == 0.0:
                continue
            for x, px in enumerate(ripple_influx_vector(m_base, a, 0)):
                for y, py in enumerate(ripple_influx_vector(m1 - m_base, b, 0)):
                    _add(out, DecoderState((a, b), (x, y), cloud), p_omega * p_split * px * py)
    return out


def run_to_terminal(masses: Masses, pre: TwoLayerKernels, post: TwoLayerKernels | None = None) -> Masses:
    """Advance every non-terminal state until its ripple empties."""
    terminal: Masses = {}
    frontier = dict(masses)
    while frontier:
        nxt: Masses = {}
        for state, p in frontier.items():
            if state.is_terminal:
                _add(terminal, state, p)
                continue
            for s2, p2 in pre.step(state, post).items():
                _add(nxt, s2, p * p2)
        frontier = nxt
    return terminal


@dataclass
class ExactCurves:
    delta_max: int
    redundancy: np.ndarray  # E[k eps0](d) for d = 0..delta_max
    base_decoded: np.ndarray  # P(base complete after d symbols)
    full_decoded: np.ndarray
    visits: np.ndarray  # expected visits over (L_B, L_R), arrivals 1..delta_max


@dataclass
class ExactEngine:
    """Caches terminal ensembles for one configuration and degree law."""

    config: LayerConfig
    degree_dist: DegreeDistribution
    pair: KernelPair
    _terminal: dict[int, Masses] = field(default_factory=dict)
    _feedback: dict[int, tuple[Masses, Masses]] = field(default_factory=dict)
    _phase2: dict[tuple[int, int], Masses] = field(default_factory=dict)

    @property
    def pre(self) -> TwoLayerKernels:
        return self.pair.pre

    @property
    def post(self) -> TwoLayerKernels:
        return self.pair.post

    def initial(self, delta: int) -> Masses:
        return initial_masses(self.config, self.pre, delta)

    def terminal(self, delta: int) -> Masses:
        if delta not in self._terminal:
            self._terminal[delta] = run_to_terminal(self.initial(delta), self.pre)
        return self._terminal[delta]

    # -- acknowledgment ---------------------------------------------------------------

    def feedback(self, delta1: int) -> tuple[Masses, Masses]:
        """``(F-, F)``: states just before and after the base layer completes
        with symbol ``delta1``.

        F- takes each terminal state of ``delta1 - 1`` symbols with base work
        left and joins it with the probability that the arriving symbol has
        exactly one unprocessed neighbor in a given layer.  That weight is the
        joint probability, not renormalized over the two layers, so F carries
        the probability of the event itself.
        """
        if delta1 in self._feedback:
            return self._feedback[delta1]
        pre_fb: Masses = {}
        if delta1 >= 1:
            for s, p in self.terminal(delta1 - 1).items():
                lb, lr = s.L
                if lb == 0:
                    continue
                for n in (0, 1):
                    pu = float(self.pre.p_unit[n][lb, lr])
                    ripple = (1, 0) if n == 0 else (0, 1)
                    _add(pre_fb, DecoderState(s.L, ripple, s.C), p * pu)
        fb = {s: p for s, p in run_to_terminal(pre_fb, self.pre).items() if s.L[0] == 0}
        self._feedback[delta1] = (pre_fb, fb)
        return pre_fb, fb

    def phase2_initial(self, delta1: int, delta2: int) -> Masses:
        """State after ``delta2 - delta1`` refinement-only symbols follow the
        acknowledgment at ``delta1`` and the new ripple is identified."""
        if delta2 < delta1:
            raise ValueError("second-phase symbol count precedes the acknowledgment")
        n_new = delta2 - delta1
        _, fb = self.feedback(delta1)
        dd2 = self.post.degree_dist
        b = self.config.sizes[1]
        support = [i for i in range(1, dd2.k + 1) if dd2.pmf(i) > 0.0]
        probs = [dd2.pmf(i) for i in support]
        tot = sum(probs)
        probs = [p / tot for p in probs]
        k = self.config.k
        out: Masses = {}
        for sf, p_e1 in fb.items():
            lr = sf.L[1]
            empty2 = (0,) * (k - 1)
            if lr == 0:
                _add(out, DecoderState(sf.L, sf.R, sf.C, empty2), p_e1)
                continue
            p1 = {i: hypergeom_pmf(1, b, lr, i) for i in support}
            p0 = {i: hypergeom_pmf(0, b, lr, i) for i in support}
            for omega in compositions(n_new, support):
                p_e2 = multinomial_pmf([omega.get(i, 0) for i in support], n_new, probs)
                if p_e2 == 0.0:
                    continue
                # per degree: how many reduce to one, how many to zero
                per_degree = []
                for i, w in omega.items():
                    stay = 1.0 - p1[i]
                    cond0 = p0[i] / stay if stay > 0.0 else 0.0
                    opts = []
                    for m_unit, pu in enumerate(binomial_vector(w, p1[i])):
                        if pu == 0.0:
                            continue
                        for zero, pz in enumerate(binomial_vector(w - m_unit, min(1.0, cond0))):
                            if pz > 0.0:
                                opts.append((m_unit, w - m_unit - zero, pu * pz))
                    per_degree.append((i, opts))
                for combo in _product_opts(per_degree):
                    p_e3 = 1.0
                    m_unit = 0
                    c2 = [0] * (k - 1)
                    for i, (mu, cl, pp) in combo:
                        p_e3 *= pp
                        m_unit += mu
                        if cl:
                            c2[i - 2] += cl
                    for r, p_e4 in enumerate(ripple_influx_vector(m_unit, lr, 0)):
                        _add(out, DecoderState(sf.L, (0, r), sf.C, tuple(c2)), p_e1 * p_e2 * p_e3 * p_e4)
        return out

    def phase2_terminal(self, delta1: int, delta2: int) -> Masses:
        key = (delta1, delta2)
        if key not in self._phase2:
            self._phase2[key] = run_to_terminal(self.phase2_initial(delta1, delta2), self.pre, self.post)
        return self._phase2[key]

    # -- curves -------------------------------------------------------------------------

    def curves(self, delta_max: int, feedback: bool) -> ExactCurves:
        a, b = self.config.sizes
        pz_pre, pz_post = self.pre.p_zero, self.post.p_zero
        rate = np.zeros(delta_max)
        base = np.zeros(delta_max + 1)
        full = np.zeros(delta_max + 1)
        visits = np.zeros((a + 1, b + 1))
        for d in range(delta_max + 1):
            for s, p in self.terminal(d).items():
                lb, lr = s.L
                if lb == 0:
                    base[d] += p
                    if not feedback and lr == 0:
                        full[d] += p
                if d == delta_max:
                    continue
                if not feedback or lb > 0:
                    visits[lb, lr] += p
                    if lb or lr:
                        rate[d] += p * pz_pre[lb, lr]
        if feedback:
            for d1 in range(1, delta_max + 1):
                for d2 in range(d1, delta_max + 1):
                    for s, p in self.phase2_terminal(d1, d2).items():
                        lb, lr = s.L
                        if lr == 0:
                            full[d2] += p
                        if d2 == delta_max:
                            continue
                        visits[lb, lr] += p
                        if lr:
                            rate[d2] += p * pz_post[lb, lr]
        redundancy = np.concatenate([[0.0], np.cumsum(rate)])
        return ExactCurves(delta_max, redundancy, base, full, visits)


def _product_opts(per_degree):
    if not per_degree:
        yield ()
        return
    (i, opts), rest = per_degree[0], per_degree[1:]
    for o in opts:
        for tail in _product_opts(rest):
            yield ((i, o),) + tail
