"""State ensembles and evaluation backends."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterator

from ..state import DecoderState

EXACT_K_LIMIT = 12


class ExactGuardError(RuntimeError):
    """The exact backend was asked for a block length above its cap."""


@dataclass(frozen=True)
class EvalBackend:
    """How the analysis evaluates state ensembles.

    ``exact`` enumerates the sparse state map; ``montecarlo`` samples
    ``iterations`` trajectories through the same kernels, seeded by ``seed``.
    """

    mode: str = "exact"
    iterations: int = 1000
    seed: int = 0
    max_exact_k: int = EXACT_K_LIMIT

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "montecarlo"):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @classmethod
    def exact(cls, max_k: int = EXACT_K_LIMIT) -> "EvalBackend":
        return cls("exact", max_exact_k=max_k)

    @classmethod
    def montecarlo(cls, iterations: int = 1000, seed: int = 0) -> "EvalBackend":
        return cls("montecarlo", iterations=iterations, seed=seed)

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def check(self, k: int) -> None:
        if self.is_exact and k > self.max_exact_k:
            raise ExactGuardError(
                f"exact backend is capped at k={self.max_exact_k} (got k={k}); "
                "raise the cap explicitly or use the montecarlo backend"
            )


@dataclass
class StateDistribution:
    """Sparse probability mass over decoder states.

    ``tag`` names the ensemble (``I``, ``T``, ``F-``, ``F``, ``I2``, ``T2``).
    Monte Carlo ensembles carry the number of sampled trajectories.
    """

    tag: str
    masses: dict[DecoderState, float] = field(default_factory=dict)
    iterations: int | None = None

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.masses.values()):
            raise ValueError("negative state mass")
        if self.total() > 1.0 + 1e-9:
            raise ValueError(f"ensemble mass {self.total()!r} exceeds 1")

    def total(self) -> float:
        return math.fsum(self.masses.values())

    def __len__(self) -> int:
        return len(self.masses)

    def __iter__(self) -> Iterator[DecoderState]:
        return iter(self.masses)

    def __getitem__(self, state: DecoderState) -> float:
        return self.masses.get(state, 0.0)

    def items(self):
        return self.masses.items()

    def marginal(self, key: Callable[[DecoderState], Hashable]) -> dict:
        out: dict = {}
        for s, p in self.masses.items():
            kk = key(s)
            out[kk] = out.get(kk, 0.0) + p
        return out

    def marginal_L(self) -> dict[tuple[int, ...], float]:
        return self.marginal(lambda s: s.L)

    def restrict(self, pred: Callable[[DecoderState], bool], tag: str | None = None) -> "StateDistribution":
        return StateDistribution(
            tag or self.tag, {s: p for s, p in self.masses.items() if pred(s)}, self.iterations
        )

    def tv_distance(self, other: "StateDistribution | dict") -> float:
        theirs = other.masses if isinstance(other, StateDistribution) else other
        keys = set(self.masses) | set(theirs)
        return 0.5 * math.fsum(abs(self.masses.get(s, 0.0) - theirs.get(s, 0.0)) for s in keys)

    def to_records(self) -> list[dict]:
        """One record per state, sorted for stable output."""
        return [
            {**s.as_record(), "mass": p}
            for s, p in sorted(self.masses.items(), key=lambda kv: (kv[0].L, kv[0].R, kv[0].C, kv[0].C2))
        ]

    def marginal_rows(self) -> list[tuple[int, int, float]]:
        """``(L_B, L_R, mass)`` rows sorted by ``L``."""
        return [(lb, lr, p) for (lb, lr), p in sorted(self.marginal_L().items())]
