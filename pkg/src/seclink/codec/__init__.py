"""Finite-blocklength simulation of the superposition/binning key scheme."""

from seclink.codec.codebook import Codebook, TypicalityTest, generate_codebook
from seclink.codec.coding import DecodingOutcome, EncodingOutcome, decode, encode
from seclink.codec.leakage import LeakageReport, leakage_exact, leakage_plugin, plugin_mi
from seclink.codec.rates import (
    Case2Inapplicable,
    CapExceeded,
    CodecError,
    CodecParams,
    DecodabilityError,
    DerivedRates,
    Layout,
    check_decodability,
    derive_rates,
    index_range,
    layout,
)
from seclink.codec.simulate import SimulationReport, prepare, run_trials, sample_source

__all__ = [
    "Case2Inapplicable", "CapExceeded", "Codebook", "CodecError", "CodecParams",
    "DecodabilityError", "DecodingOutcome", "DerivedRates", "EncodingOutcome", "Layout",
    "LeakageReport", "SimulationReport", "TypicalityTest", "check_decodability", "decode",
    "derive_rates", "encode", "generate_codebook", "index_range", "layout", "leakage_exact",
    "leakage_plugin", "plugin_mi", "prepare", "run_trials", "sample_source",
]
