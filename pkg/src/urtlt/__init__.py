"""LT codes with unequal recovery time: codec, finite-length analysis and
simulation harness."""

from .codec import (
    ConfigError,
    DecoderCore,
    InputBlock,
    LayerConfig,
    OutputSymbol,
    decode_roundtrip,
    encode_next,
    select_neighbors,
)
from .degree import DegreeDistribution, from_table, ideal_soliton, read_table, robust_soliton
from .state import DecoderState, virgin_state

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DecoderCore",
    "DecoderState",
    "DegreeDistribution",
    "InputBlock",
    "LayerConfig",
    "OutputSymbol",
    "decode_roundtrip",
    "encode_next",
    "from_table",
    "ideal_soliton",
    "read_table",
    "robust_soliton",
    "select_neighbors",
    "virgin_state",
]
