"""Decoder state triple shared by the codec and the analysis."""

from __future__ import annotations

from typing import NamedTuple


class DecoderState(NamedTuple):
    """Unprocessed counts ``L`` and ripple counts ``R`` per layer, plus the
    cloud histogram ``C`` indexed by original degree ``2..k`` (``C[i - 2]``).

    ``C2`` is a second cloud histogram, indexed like ``C``, holding symbols
    encoded after the base-layer acknowledgment.  Those symbols release with
    different probabilities from the ones in ``C``, so the two populations are
    kept apart; ``C2`` is empty whenever no feedback has fired.
    """

    L: tuple[int, ...]
    R: tuple[int, ...]
    C: tuple[int, ...]
    C2: tuple[int, ...] = ()

    @property
    def unprocessed(self) -> int:
        return sum(self.L)

    @property
    def ripple_size(self) -> int:
        return sum(self.R)

    @property
    def is_terminal(self) -> bool:
        return not any(self.R)

    @property
    def cloud_size(self) -> int:
        return sum(self.C) + sum(self.C2)

    def merged_cloud(self) -> tuple[int, ...]:
        """Single histogram over both cloud populations."""
        if not self.C2:
            return self.C
        width = max(len(self.C), len(self.C2))
        a = self.C + (0,) * (width - len(self.C))
        b = self.C2 + (0,) * (width - len(self.C2))
        return tuple(x + y for x, y in zip(a, b))

    def as_record(self) -> dict:
        rec = {"L": list(self.L), "R": list(self.R), "C": list(self.C)}
        if self.C2:
            rec["C2"] = list(self.C2)
        return rec


def virgin_state(sizes: tuple[int, ...], k: int) -> DecoderState:
    """Nothing received: every symbol unprocessed, empty ripple and cloud."""
    return DecoderState(tuple(sizes), (0,) * len(sizes), (0,) * (k - 1))
