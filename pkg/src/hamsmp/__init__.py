"""One-shot public-coin protocols for the Hamming distance threshold problem."""

from .core import (
    BitString,
    CoinStream,
    Instance,
    ProtocolViolation,
    Verdict,
    draw_biased_bit,
    gen_instance,
    ham_predicate,
    hamming_distance,
)
from .protocol import ProtocolConfig, Transcript, cost_of, run_protocol

__version__ = "0.1.0"
